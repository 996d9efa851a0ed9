use std::fs;
use std::path::Path;

use super::{ExperimentConfig, ExperimentError};
use crate::kv;

/// Named output files, written in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(|b| std::str::from_utf8(b).ok())
    }

    /// `summary.txt`: the full config followed by result keys.
    pub fn add_summary(&mut self, cfg: &ExperimentConfig, results: &[(&str, String)]) {
        let mut text = String::from("# config\n");
        text.push_str(&cfg.to_text());
        text.push_str("# results\n");
        text.push_str(&kv::format(results));
        self.add("summary.txt", text.into_bytes());
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), ExperimentError> {
        let io = |p: &Path, e: std::io::Error| ExperimentError::Io {
            path: p.display().to_string(),
            msg: e.to_string(),
        };
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            }
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

pub(crate) fn f6(v: f64) -> String {
    format!("{v:.6}")
}
