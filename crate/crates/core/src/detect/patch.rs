use super::DetectError;

/// Clamp the patch centre so a `2p × 2p` window stays inside the image.
///
/// `m` is `(x, y)`; `image_size` is `(rows, cols)`. Each coordinate is clamped
/// to `[p, dim − p − 1]`.
pub fn patch_check(
    m: (i64, i64),
    image_size: (usize, usize),
    p: usize,
) -> Result<(usize, usize), DetectError> {
    let (rows, cols) = image_size;
    if rows < 2 * p + 2 || cols < 2 * p + 2 {
        return Err(DetectError::ImageTooSmall {
            rows,
            cols,
            patch_half: p,
        });
    }
    let clamp = |v: i64, dim: usize| -> usize {
        let lo = p as i64;
        let hi = (dim - p - 1) as i64;
        v.clamp(lo, hi) as usize
    };
    Ok((clamp(m.0, cols), clamp(m.1, rows)))
}
