use super::{BinaryImage, GrayImage, PreprocessConfig};
use crate::{Error, Result};

/// Otsu threshold over a 256-bin histogram.
///
/// Returns the smallest `T` maximizing the between-class variance of the
/// split `{v <= T} | {v > T}`, or `None` when no split has positive
/// variance (fewer than two occupied bins).
///
/// Candidates are compared exactly: with `n0, s0` the count and intensity
/// sum of the lower class, the between-class variance is proportional to
/// `(n1*s0 - n0*s1)^2 / (n0*n1)`, evaluated as a cross-multiplied `u128`
/// comparison.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let sum_all: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let (mut n0, mut s0) = (0u64, 0u64);
    // Best candidate as numerator / denominator.
    let mut best: Option<(u8, u128, u128)> = None;
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        s0 += t as u64 * count;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = sum_all - s0;
        let diff = (n1 as i128) * (s0 as i128) - (n0 as i128) * (s1 as i128);
        let num = diff.unsigned_abs() * diff.unsigned_abs();
        let den = n0 as u128 * n1 as u128;
        if num == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    hist
}

/// Otsu binarization; a pixel is ink iff its intensity is `<= T`.
/// An image without a separating threshold is all background.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    let data = match otsu_threshold(&histogram(img)) {
        Some(t) => img.data().iter().map(|&v| v <= t).collect(),
        None => vec![false; img.data().len()],
    };
    BinaryImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// High pressure region: ink pixels whose intensity lies in the darkest
/// part of the foreground gray range.
///
/// With `g_min`, `g_max` taken over the foreground of `binary`, keeps the
/// foreground pixels with intensity `<= g_max - factor * (g_max - g_min)`.
/// A constant-intensity or empty foreground yields an empty region.
pub fn extract_hpr(gray: &GrayImage, binary: &BinaryImage, cfg: &PreprocessConfig) -> Result<BinaryImage> {
    if gray.width() != binary.width() || gray.height() != binary.height() {
        return Err(Error::InvalidImage(format!(
            "gray {}x{} and binary {}x{} differ",
            gray.width(),
            gray.height(),
            binary.width(),
            binary.height()
        )));
    }
    let ink = || {
        gray.data()
            .iter()
            .zip(binary.data())
            .filter_map(|(&g, &b)| b.then_some(g))
    };
    let (Some(g_min), Some(g_max)) = (ink().min(), ink().max()) else {
        return Ok(BinaryImage::empty(gray.width(), gray.height()));
    };
    if g_min == g_max {
        return Ok(BinaryImage::empty(gray.width(), gray.height()));
    }
    let t = hpr_threshold(g_min, g_max, cfg.hpr_factor);
    let data = gray
        .data()
        .iter()
        .zip(binary.data())
        .map(|(&g, &b)| b && (g as f64) <= t)
        .collect();
    BinaryImage::new(gray.width(), gray.height(), data)
}

pub(crate) fn hpr_threshold(g_min: u8, g_max: u8, factor: f64) -> f64 {
    let (lo, hi) = (g_min as f64, g_max as f64);
    hi - factor * (hi - lo)
}
