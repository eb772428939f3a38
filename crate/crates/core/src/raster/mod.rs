//! Raster data model and the preprocessing chain that turns a scanned
//! signature into the four analysis rasters (normalized gray, binary,
//! thinned, high pressure region).

mod filter;
mod io;
mod thin;
mod threshold;

pub use filter::{denoise, normalize_geometry};
pub use io::{read_raster, write_binary_pgm, write_gray_pgm};
pub use thin::thin;
pub use threshold::{binarize, extract_hpr, otsu_threshold};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Background intensity (paper white).
pub const BACKGROUND: u8 = 255;

/// 8-bit grayscale raster, row-major, 0 = darkest ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Copy of the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        check_window(self.width, self.height, x0, y0, w, h)?;
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        Self::new(w, h, data)
    }
}

/// Boolean raster, row-major, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} mask needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// True when every foreground pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        check_window(self.width, self.height, x0, y0, w, h)?;
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        Self::new(w, h, data)
    }
}

fn check_window(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> Result<()> {
    if x0 + w > width || y0 + h > height {
        return Err(Error::InvalidInput(format!(
            "window {w}x{h}+{x0}+{y0} exceeds {width}x{height}"
        )));
    }
    Ok(())
}

/// The four derived rasters of one signature. All share one size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub gray: GrayImage,
    pub binary: BinaryImage,
    pub thinned: BinaryImage,
    pub hpr: BinaryImage,
}

impl ImageSet {
    pub fn new(gray: GrayImage, binary: BinaryImage, thinned: BinaryImage, hpr: BinaryImage) -> Result<Self> {
        let (w, h) = (gray.width(), gray.height());
        for (name, m) in [("binary", &binary), ("thinned", &thinned), ("hpr", &hpr)] {
            if m.width() != w || m.height() != h {
                return Err(Error::InvalidImage(format!(
                    "{name} raster is {}x{}, gray is {w}x{h}",
                    m.width(),
                    m.height()
                )));
            }
        }
        Ok(Self {
            gray,
            binary,
            thinned,
            hpr,
        })
    }

    pub fn width(&self) -> usize {
        self.gray.width()
    }

    pub fn height(&self) -> usize {
        self.gray.height()
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        Ok(Self {
            gray: self.gray.crop(x0, y0, w, h)?,
            binary: self.binary.crop(x0, y0, w, h)?,
            thinned: self.thinned.crop(x0, y0, w, h)?,
            hpr: self.hpr.crop(x0, y0, w, h)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub target_width: usize,
    pub target_height: usize,
    pub median_window: usize,
    pub mean_window: usize,
    /// Fraction of the foreground gray range cut from the light end to
    /// leave the high-pressure band.
    pub hpr_factor: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_width: 512,
            target_height: 256,
            median_window: 3,
            mean_window: 3,
            hpr_factor: 0.75,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_width == 0 || self.target_height == 0 {
            return Err(Error::Config("normalized size must be at least 1x1".into()));
        }
        for (name, w) in [("median_window", self.median_window), ("mean_window", self.mean_window)] {
            if w == 0 || w % 2 == 0 {
                return Err(Error::Config(format!("{name} must be odd and >= 1, got {w}")));
            }
        }
        if !(self.hpr_factor > 0.0 && self.hpr_factor < 1.0) {
            return Err(Error::Config(format!(
                "hpr_factor must lie in (0, 1), got {}",
                self.hpr_factor
            )));
        }
        Ok(())
    }
}

/// Full chain: normalize, denoise, binarize, thin, extract HPR.
pub fn preprocess(raw: &GrayImage, cfg: &PreprocessConfig) -> Result<ImageSet> {
    cfg.validate()?;
    let normalized = normalize_geometry(raw, cfg)?;
    let gray = denoise(&normalized, cfg)?;
    let binary = binarize(&gray);
    let thinned = thin(&binary);
    let hpr = extract_hpr(&gray, &binary, cfg)?;
    ImageSet::new(gray, binary, thinned, hpr)
}
