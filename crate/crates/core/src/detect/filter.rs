//! Patch extraction and the median → Gaussian smoothing stage.

use crate::image::GrayImage;

/// Floating-point image patch with its origin in the full frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin: (usize, usize),
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Patch {
    /// Crop `[x0, y0, w, h]` from `img`. The caller guarantees the window fits.
    pub fn crop(img: &GrayImage, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend((x0..x0 + w).map(|x| img.get(x, y) as f32));
        }
        Self {
            origin: (x0, y0),
            width: w,
            height: h,
            data,
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Value with coordinates clamped to the patch (replicated border).
    #[inline]
    pub fn at_clamped(&self, x: i64, y: i64) -> f32 {
        let xc = x.clamp(0, self.width as i64 - 1) as usize;
        let yc = y.clamp(0, self.height as i64 - 1) as usize;
        self.at(xc, yc)
    }
}

/// Median over a `kernel × kernel` window, replicated border.
pub fn median_filter(src: &Patch, kernel: usize) -> Patch {
    if kernel <= 1 {
        return src.clone();
    }
    let r = (kernel / 2) as i64;
    let mut window = Vec::with_capacity(kernel * kernel);
    let mut data = Vec::with_capacity(src.data.len());
    for y in 0..src.height as i64 {
        for x in 0..src.width as i64 {
            window.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    window.push(src.at_clamped(x + dx, y + dy));
                }
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, f32::total_cmp);
            data.push(*m);
        }
    }
    Patch {
        data,
        ..src.clone()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k.into_iter().map(|v| v as f32).collect()
}

/// Separable Gaussian blur with a `±3σ` kernel, replicated border.
pub fn gaussian_filter(src: &Patch, sigma: f64) -> Patch {
    if sigma <= 0.0 {
        return src.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (src.width, src.height);
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * src.at_clamped(x as i64 + i as i64 - r, y as i64);
            }
            tmp[y * w + x] = acc;
        }
    }
    let horiz = Patch {
        data: tmp,
        ..src.clone()
    };
    let mut data = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * horiz.at_clamped(x as i64, y as i64 + i as i64 - r);
            }
            data[y * w + x] = acc;
        }
    }
    Patch {
        data,
        ..src.clone()
    }
}
