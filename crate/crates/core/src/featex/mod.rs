//! Geometric feature extraction.
//!
//! Convention: a *horizontal* projection is the row profile (ink count per
//! row) and a *vertical* projection is the column profile (ink count per
//! column). Every feature below uses that convention.

mod csv;
mod global;
mod local;

pub use self::csv::{feature_names, write_features_csv};
pub use global::{extract_global, GlobalFeatures, GLOBAL_FEATURE_NAMES};
pub use local::{extract_local, grid_partition, LocalFeatures, GRID_CELLS, GRID_SIDE, LOCAL_FEATURE_NAMES};

use crate::raster::{BinaryImage, ImageSet};
use crate::{Error, Result};

/// Length of every assembled feature vector: 27 global + 25 × 11 local.
pub const FEATURE_DIM: usize = GLOBAL_FEATURE_NAMES.len() + GRID_CELLS * LOCAL_FEATURE_NAMES.len();

/// Moving-average window used for the smoothed-profile features.
pub const SMOOTH_WINDOW: usize = 5;

/// Ink pixels a row or column must hold (strictly more than) to count
/// toward the signature width or height.
pub const EXTENT_MIN_INK: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// One count per row.
    Row,
    /// One count per column.
    Column,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionProfile {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl ProjectionProfile {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First and last index with a value above zero.
    pub fn nonzero_extent(&self) -> Option<(usize, usize)> {
        self.extent_above(0.0)
    }

    /// First and last index with a value strictly above `min`.
    pub fn extent_above(&self, min: f64) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|&v| v > min)?;
        let last = self.values.iter().rposition(|&v| v > min)?;
        Some((first, last))
    }
}

pub fn projection(img: &BinaryImage, axis: Axis) -> ProjectionProfile {
    let (w, h) = (img.width(), img.height());
    let mut values = vec![0.0; if axis == Axis::Row { h } else { w }];
    for y in 0..h {
        for x in 0..w {
            if img.get(x, y) {
                match axis {
                    Axis::Row => values[y] += 1.0,
                    Axis::Column => values[x] += 1.0,
                }
            }
        }
    }
    ProjectionProfile { axis, values }
}

/// Centered moving average with replicate-edge padding.
pub fn smooth_profile(p: &ProjectionProfile, window: usize) -> Result<ProjectionProfile> {
    if window.is_multiple_of(2) {
        return Err(Error::Config(format!("smoothing window must be odd and >= 1, got {window}")));
    }
    let n = p.values.len();
    if window == 1 || n == 0 {
        return Ok(p.clone());
    }
    let r = (window / 2) as isize;
    let values = (0..n as isize)
        .map(|i| {
            let sum: f64 = (i - r..=i + r)
                .map(|j| p.values[j.clamp(0, n as isize - 1) as usize])
                .sum();
            sum / window as f64
        })
        .collect();
    Ok(ProjectionProfile { axis: p.axis, values })
}

/// The 302 feature slots of one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::shape(FEATURE_DIM, values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("feature slot {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Global block followed by the 25 cell blocks in row-major grid order.
pub fn assemble(global: &GlobalFeatures, locals: &[LocalFeatures]) -> Result<FeatureVector> {
    if locals.len() != GRID_CELLS {
        return Err(Error::InvalidInput(format!(
            "expected {GRID_CELLS} local feature blocks, got {}",
            locals.len()
        )));
    }
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend_from_slice(&global.to_array());
    for cell in locals {
        values.extend_from_slice(&cell.to_array());
    }
    FeatureVector::new(values)
}

/// Global features, grid partition, local features, assembled.
pub fn extract_features(set: &ImageSet) -> Result<FeatureVector> {
    let global = extract_global(set);
    let cells = grid_partition(set)?;
    let locals = extract_local(&cells)?;
    assemble(&global, &locals)
}

/// Ink count, coordinate sums over the ink of a binary raster.
pub(crate) struct InkMoments {
    pub count: f64,
    pub sum_x: f64,
    pub sum_y: f64,
}

impl InkMoments {
    pub fn of(img: &BinaryImage) -> Self {
        let mut m = InkMoments {
            count: 0.0,
            sum_x: 0.0,
            sum_y: 0.0,
        };
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y) {
                    m.count += 1.0;
                    m.sum_x += x as f64;
                    m.sum_y += y as f64;
                }
            }
        }
        m
    }

    /// Center of gravity `(x, y)`; the origin for a blank raster.
    pub fn centroid(&self) -> (f64, f64) {
        if self.count == 0.0 {
            (0.0, 0.0)
        } else {
            (self.sum_x / self.count, self.sum_y / self.count)
        }
    }
}

/// Span of indices whose count exceeds [`EXTENT_MIN_INK`], zero if none.
pub(crate) fn thresholded_span(p: &ProjectionProfile) -> f64 {
    p.extent_above(EXTENT_MIN_INK)
        .map_or(0.0, |(first, last)| (last - first + 1) as f64)
}

/// `area / (width * height)`, capped at 1; zero for an empty box.
pub(crate) fn normalized_area(area: f64, width: f64, height: f64) -> f64 {
    let box_area = width * height;
    if box_area == 0.0 {
        0.0
    } else {
        (area / box_area).min(1.0)
    }
}

pub(crate) fn aspect_ratio(width: f64, height: f64) -> f64 {
    if height > 0.0 {
        width / height
    } else {
        0.0
    }
}
