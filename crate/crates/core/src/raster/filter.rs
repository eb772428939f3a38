use super::{GrayImage, PreprocessConfig, BACKGROUND};
use crate::{Error, Result};

/// Scale `img` by a single factor `min(tw/w, th/h)` with nearest-neighbor
/// sampling and pad the rest of the `tw`×`th` canvas with background,
/// content anchored at the top-left corner.
pub fn normalize_geometry(img: &GrayImage, cfg: &PreprocessConfig) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    let (tw, th) = (cfg.target_width, cfg.target_height);
    if tw == 0 || th == 0 {
        return Err(Error::Config("normalized size must be at least 1x1".into()));
    }
    // tw/w <= th/h  <=>  tw*h <= th*w; the binding axis fills its target.
    let (cw, ch) = if tw * h <= th * w {
        (tw, rounded_ratio(h * tw, w).clamp(1, th))
    } else {
        (rounded_ratio(w * th, h).clamp(1, tw), th)
    };

    let mut out = GrayImage::filled(tw, th, BACKGROUND)?;
    let src_x: Vec<usize> = (0..cw).map(|x| ((2 * x + 1) * w / (2 * cw)).min(w - 1)).collect();
    for y in 0..ch {
        let sy = ((2 * y + 1) * h / (2 * ch)).min(h - 1);
        for (x, &sx) in src_x.iter().enumerate() {
            out.set(x, y, img.get(sx, sy));
        }
    }
    Ok(out)
}

fn rounded_ratio(num: usize, den: usize) -> usize {
    (2 * num + den) / (2 * den)
}

/// Median filter followed by mean filter, both with replicate-edge padding.
pub fn denoise(img: &GrayImage, cfg: &PreprocessConfig) -> Result<GrayImage> {
    for (name, w) in [("median_window", cfg.median_window), ("mean_window", cfg.mean_window)] {
        if w == 0 || w % 2 == 0 {
            return Err(Error::Config(format!("{name} must be odd and >= 1, got {w}")));
        }
    }
    let med = median_filter(img, cfg.median_window);
    Ok(mean_filter(&med, cfg.mean_window))
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

pub(crate) fn median_filter(img: &GrayImage, window: usize) -> GrayImage {
    if window == 1 {
        return img.clone();
    }
    let r = (window / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -r..=r {
                let sy = clamp_index(y as isize + dy, h);
                for dx in -r..=r {
                    buf.push(img.get(clamp_index(x as isize + dx, w), sy));
                }
            }
            let mid = buf.len() / 2;
            let (_, m, _) = buf.select_nth_unstable(mid);
            out.set(x, y, *m);
        }
    }
    out
}

/// Box mean, rounded half up.
pub(crate) fn mean_filter(img: &GrayImage, window: usize) -> GrayImage {
    if window == 1 {
        return img.clone();
    }
    let r = (window / 2) as isize;
    let n = (window * window) as u32;
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0u32;
            for dy in -r..=r {
                let sy = clamp_index(y as isize + dy, h);
                for dx in -r..=r {
                    sum += img.get(clamp_index(x as isize + dx, w), sy) as u32;
                }
            }
            out.set(x, y, ((sum + n / 2) / n) as u8);
        }
    }
    out
}
