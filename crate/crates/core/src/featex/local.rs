use super::{aspect_ratio, normalized_area, projection, thresholded_span, Axis, InkMoments};
use crate::raster::ImageSet;
use crate::{Error, Result};

pub const GRID_SIDE: usize = 5;
pub const GRID_CELLS: usize = GRID_SIDE * GRID_SIDE;

pub const LOCAL_FEATURE_NAMES: [&str; 11] = [
    "width",
    "height",
    "aspect_ratio",
    "area_binary",
    "area_thinned",
    "area_hpr",
    "narea_binary",
    "cog_x",
    "cog_y",
    "hproj_sum",
    "vproj_sum",
];

/// Per-cell features; `cog_*` are in cell coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalFeatures {
    pub width: f64,
    pub height: f64,
    pub aspect_ratio: f64,
    pub area_binary: f64,
    pub area_thinned: f64,
    pub area_hpr: f64,
    pub narea_binary: f64,
    pub cog_x: f64,
    pub cog_y: f64,
    pub hproj_sum: f64,
    pub vproj_sum: f64,
}

impl LocalFeatures {
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.width,
            self.height,
            self.aspect_ratio,
            self.area_binary,
            self.area_thinned,
            self.area_hpr,
            self.narea_binary,
            self.cog_x,
            self.cog_y,
            self.hproj_sum,
            self.vproj_sum,
        ]
    }

    pub fn of_cell(cell: &ImageSet) -> Self {
        let rows = projection(&cell.binary, Axis::Row);
        let cols = projection(&cell.binary, Axis::Column);
        let width = thresholded_span(&cols);
        let height = thresholded_span(&rows);
        let ink = InkMoments::of(&cell.binary);
        let (cog_x, cog_y) = ink.centroid();
        LocalFeatures {
            width,
            height,
            aspect_ratio: aspect_ratio(width, height),
            area_binary: ink.count,
            area_thinned: cell.thinned.count() as f64,
            area_hpr: cell.hpr.count() as f64,
            narea_binary: normalized_area(ink.count, width, height),
            cog_x,
            cog_y,
            hproj_sum: rows.total(),
            vproj_sum: cols.total(),
        }
    }
}

/// Cell boundaries `floor(k * len / 5)` for `k = 0..=5`.
pub(crate) fn grid_bounds(len: usize) -> [usize; GRID_SIDE + 1] {
    std::array::from_fn(|k| k * len / GRID_SIDE)
}

/// Split into a 5×5 grid of cells tiling the raster exactly, row-major.
pub fn grid_partition(set: &ImageSet) -> Result<Vec<ImageSet>> {
    let (w, h) = (set.width(), set.height());
    if w < GRID_SIDE || h < GRID_SIDE {
        return Err(Error::InvalidInput(format!(
            "grid partition needs at least {GRID_SIDE}x{GRID_SIDE}, got {w}x{h}"
        )));
    }
    let xs = grid_bounds(w);
    let ys = grid_bounds(h);
    let mut cells = Vec::with_capacity(GRID_CELLS);
    for r in 0..GRID_SIDE {
        for c in 0..GRID_SIDE {
            cells.push(set.crop(xs[c], ys[r], xs[c + 1] - xs[c], ys[r + 1] - ys[r])?);
        }
    }
    Ok(cells)
}

pub fn extract_local(cells: &[ImageSet]) -> Result<Vec<LocalFeatures>> {
    if cells.len() != GRID_CELLS {
        return Err(Error::InvalidInput(format!(
            "expected {GRID_CELLS} grid cells, got {}",
            cells.len()
        )));
    }
    Ok(cells.iter().map(LocalFeatures::of_cell).collect())
}
