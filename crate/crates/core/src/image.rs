//! 8-bit raster types and PGM/PNG file I/O.

use std::borrow::Cow;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image buffer of {len} bytes does not match {width}x{height}x{channels}")]
    Shape {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("unsupported image format for {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Codec(#[from] image::ImageError),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::Shape {
                width,
                height,
                channels: 1,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn max_value(&self) -> u8 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

/// Row-major interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width * height * 3 {
            return Err(ImageError::Shape {
                width,
                height,
                channels: 3,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Luma conversion with weights (0.299, 0.587, 0.114).
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Anything the tracker can turn into a grayscale frame.
pub trait ToGray {
    fn to_gray(&self) -> Cow<'_, GrayImage>;
}

impl ToGray for GrayImage {
    fn to_gray(&self) -> Cow<'_, GrayImage> {
        Cow::Borrowed(self)
    }
}

impl ToGray for RgbImage {
    fn to_gray(&self) -> Cow<'_, GrayImage> {
        Cow::Owned(RgbImage::to_gray(self))
    }
}

/// Encode as binary PGM (`P5`, maxval 255).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<(), ImageError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_pgm(img))?;
    w.flush()?;
    Ok(())
}

/// Decode a binary 8-bit PGM, accepting `#` comments in the header.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::Pgm("truncated header".into()));
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| ImageError::Pgm("non-ascii header".into()))?,
        );
    }
    if fields[0] != "P5" {
        return Err(ImageError::Pgm(format!("magic {:?} is not P5", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| ImageError::Pgm(format!("bad header field {s:?}")))
    };
    let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval != 255 {
        return Err(ImageError::Pgm(format!("maxval {maxval} is not 255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(ImageError::Pgm("truncated raster".into()));
    }
    GrayImage::from_raw(width, height, bytes[pos..pos + need].to_vec())
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, ImageError> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_png(path: &Path, img: &GrayImage) -> Result<(), ImageError> {
    image::save_buffer(
        path,
        &img.data,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::L8,
    )?;
    Ok(())
}

/// Read a PGM or PNG frame as grayscale; colour PNGs are converted by luma.
pub fn read_frame(path: &Path) -> Result<GrayImage, ImageError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => read_pgm(path),
        "png" => {
            let dynimg = image::open(path)?;
            match dynimg {
                image::DynamicImage::ImageLuma8(g) => {
                    let (w, h) = g.dimensions();
                    GrayImage::from_raw(w as usize, h as usize, g.into_raw())
                }
                other => {
                    let rgb = other.to_rgb8();
                    let (w, h) = rgb.dimensions();
                    Ok(RgbImage::from_raw(w as usize, h as usize, rgb.into_raw())?.to_gray())
                }
            }
        }
        _ => Err(ImageError::Format(path.display().to_string())),
    }
}
