//! Subpixel edge points on the half-intensity contour of the selected spot.

use super::filter::Patch;

fn median(mut v: Vec<f32>) -> Option<f32> {
    if v.is_empty() {
        return None;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f32::total_cmp);
    Some(*m)
}

/// Spot and background levels: median over the component and over the
/// one-pixel frame of the patch.
pub fn contrast_levels(patch: &Patch, labels: &[u32], label: u32) -> Option<(f32, f32)> {
    let fg = median(
        patch
            .data
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == label)
            .map(|(&v, _)| v)
            .collect(),
    )?;
    let (w, h) = (patch.width, patch.height);
    let mut frame = Vec::with_capacity(2 * (w + h));
    for x in 0..w {
        frame.push(patch.at(x, 0));
        frame.push(patch.at(x, h - 1));
    }
    for y in 1..h - 1 {
        frame.push(patch.at(0, y));
        frame.push(patch.at(w - 1, y));
    }
    Some((fg, median(frame)?))
}

const SEARCH: i64 = 3;

/// For each boundary pixel and each 4-neighbour outside the component,
/// locate where the filtered intensity crosses `level` along that axis,
/// searching up to three pixels either side and keeping the crossing closest
/// to the boundary pixel. Returned in patch coordinates.
pub fn subpixel_edge_points(
    patch: &Patch,
    labels: &[u32],
    label: u32,
    boundary: &[(usize, usize)],
    level: f32,
) -> Vec<[f64; 2]> {
    let (w, h) = (patch.width as i64, patch.height as i64);
    let in_comp = |x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w && y < h && labels[(y * w + x) as usize] == label
    };
    let sample = |x: i64, y: i64| -> Option<f32> {
        (x >= 0 && y >= 0 && x < w && y < h).then(|| patch.at(x as usize, y as usize))
    };

    let mut points = Vec::with_capacity(boundary.len() * 2);
    let mut seen = std::collections::HashSet::new();
    for &(bx, by) in boundary {
        let (bx, by) = (bx as i64, by as i64);
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            if in_comp(bx + dx, by + dy) || !seen.insert((bx, by, dx, dy)) {
                continue;
            }
            let mut best: Option<f64> = None;
            for j in -SEARCH..SEARCH {
                let (Some(a), Some(b)) = (
                    sample(bx + j * dx, by + j * dy),
                    sample(bx + (j + 1) * dx, by + (j + 1) * dy),
                ) else {
                    continue;
                };
                if a >= level && b < level {
                    let s = j as f64 + (a - level) as f64 / (a - b) as f64;
                    if best.is_none_or(|cur| s.abs() < cur.abs()) {
                        best = Some(s);
                    }
                }
            }
            if let Some(s) = best {
                points.push([bx as f64 + s * dx as f64, by as f64 + s * dy as f64]);
            }
        }
    }
    // Points reached from two boundary pixels along the same line coincide.
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    points.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_is_interpolated_linearly() {
        // Row profile 250 250 250 200 100 50 ...; crossing of 150 at x = 3.5.
        let row = [250.0, 250.0, 250.0, 200.0, 100.0, 50.0, 50.0, 50.0];
        let mut data = Vec::new();
        for _ in 0..3 {
            data.extend_from_slice(&row);
        }
        let patch = Patch {
            origin: (0, 0),
            width: 8,
            height: 3,
            data,
        };
        let labels: Vec<u32> = (0..24).map(|i| if i % 8 <= 3 { 1 } else { 0 }).collect();
        let pts = subpixel_edge_points(&patch, &labels, 1, &[(3, 1)], 150.0);
        assert_eq!(pts, vec![[3.5, 1.0]]);
    }
}
