use super::{
    aspect_ratio, normalized_area, projection, smooth_profile, thresholded_span, Axis, InkMoments, ProjectionProfile,
    SMOOTH_WINDOW,
};
use crate::raster::ImageSet;

pub const GLOBAL_FEATURE_NAMES: [&str; 27] = [
    "width",
    "height",
    "aspect_ratio",
    "hproj_sum_binary",
    "hproj_sum_thinned",
    "vproj_sum_binary",
    "vproj_sum_thinned",
    "area_binary",
    "area_thinned",
    "area_hpr",
    "narea_binary",
    "narea_thinned",
    "narea_hpr",
    "cog_x",
    "cog_y",
    "vproj_max",
    "vproj_min",
    "vproj_smoothed_max",
    "vproj_smoothed_min",
    "hproj_max",
    "hproj_min",
    "hproj_smoothed_max",
    "hproj_smoothed_min",
    "global_baseline",
    "upper_edge_limit",
    "lower_edge_limit",
    "middle_zone",
];

/// Whole-signature features. Field order matches [`GLOBAL_FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalFeatures {
    pub width: f64,
    pub height: f64,
    pub aspect_ratio: f64,
    pub hproj_sum_binary: f64,
    pub hproj_sum_thinned: f64,
    pub vproj_sum_binary: f64,
    pub vproj_sum_thinned: f64,
    pub area_binary: f64,
    pub area_thinned: f64,
    pub area_hpr: f64,
    pub narea_binary: f64,
    pub narea_thinned: f64,
    pub narea_hpr: f64,
    pub cog_x: f64,
    pub cog_y: f64,
    pub vproj_max: f64,
    pub vproj_min: f64,
    pub vproj_smoothed_max: f64,
    pub vproj_smoothed_min: f64,
    pub hproj_max: f64,
    pub hproj_min: f64,
    pub hproj_smoothed_max: f64,
    pub hproj_smoothed_min: f64,
    pub global_baseline: f64,
    pub upper_edge_limit: f64,
    pub lower_edge_limit: f64,
    pub middle_zone: f64,
}

impl GlobalFeatures {
    pub fn to_array(&self) -> [f64; 27] {
        [
            self.width,
            self.height,
            self.aspect_ratio,
            self.hproj_sum_binary,
            self.hproj_sum_thinned,
            self.vproj_sum_binary,
            self.vproj_sum_thinned,
            self.area_binary,
            self.area_thinned,
            self.area_hpr,
            self.narea_binary,
            self.narea_thinned,
            self.narea_hpr,
            self.cog_x,
            self.cog_y,
            self.vproj_max,
            self.vproj_min,
            self.vproj_smoothed_max,
            self.vproj_smoothed_min,
            self.hproj_max,
            self.hproj_min,
            self.hproj_smoothed_max,
            self.hproj_smoothed_min,
            self.global_baseline,
            self.upper_edge_limit,
            self.lower_edge_limit,
            self.middle_zone,
        ]
    }
}

/// Max and min of `values` over the nonzero extent of `raw`.
fn extremes_over_extent(raw: &ProjectionProfile, values: &[f64]) -> (f64, f64) {
    match raw.nonzero_extent() {
        None => (0.0, 0.0),
        Some((first, last)) => values[first..=last]
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v))),
    }
}

/// Row of the unique row-profile peak, or the midpoint of the two outermost
/// peak rows when the maximum is attained more than once.
fn baseline(rows: &ProjectionProfile) -> f64 {
    let peak = rows.values.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let first = rows.values.iter().position(|&v| v == peak).unwrap_or(0);
    let last = rows.values.iter().rposition(|&v| v == peak).unwrap_or(first);
    (first + last) as f64 / 2.0
}

/// Row, on each side of the baseline, where smoothed and raw row profiles
/// differ the most. Returns `(upper, lower)`; an empty side yields the
/// baseline itself. Ties go to the lowest row index.
fn edge_limits(rows: &ProjectionProfile, smoothed: &ProjectionProfile, base: f64) -> (f64, f64) {
    let Some((first, last)) = rows.nonzero_extent() else {
        return (base, base);
    };
    let diff = |r: usize| (smoothed.values[r] - rows.values[r]).abs();
    let arg_max = |range: &mut dyn Iterator<Item = usize>| {
        let mut best: Option<(usize, f64)> = None;
        for r in range {
            let d = diff(r);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((r, d));
            }
        }
        best.map_or(base, |(r, _)| r as f64)
    };
    let upper = arg_max(&mut (first..=last).filter(|&r| (r as f64) < base));
    let lower = arg_max(&mut (first..=last).filter(|&r| (r as f64) > base));
    (upper, lower)
}

pub fn extract_global(set: &ImageSet) -> GlobalFeatures {
    let rows = projection(&set.binary, Axis::Row);
    let cols = projection(&set.binary, Axis::Column);
    let rows_thin = projection(&set.thinned, Axis::Row);
    let cols_thin = projection(&set.thinned, Axis::Column);
    let rows_smooth = smooth_profile(&rows, SMOOTH_WINDOW).expect("odd window");
    let cols_smooth = smooth_profile(&cols, SMOOTH_WINDOW).expect("odd window");

    let width = thresholded_span(&cols);
    let height = thresholded_span(&rows);

    let ink = InkMoments::of(&set.binary);
    let area_binary = ink.count;
    let area_thinned = rows_thin.total();
    let area_hpr = set.hpr.count() as f64;
    let (cog_x, cog_y) = ink.centroid();

    let (vproj_max, vproj_min) = extremes_over_extent(&cols, &cols.values);
    let (vproj_smoothed_max, vproj_smoothed_min) = extremes_over_extent(&cols, &cols_smooth.values);
    let (hproj_max, hproj_min) = extremes_over_extent(&rows, &rows.values);
    let (hproj_smoothed_max, hproj_smoothed_min) = extremes_over_extent(&rows, &rows_smooth.values);

    let global_baseline = baseline(&rows);
    let (upper_edge_limit, lower_edge_limit) = edge_limits(&rows, &rows_smooth, global_baseline);

    GlobalFeatures {
        width,
        height,
        aspect_ratio: aspect_ratio(width, height),
        hproj_sum_binary: rows.total(),
        hproj_sum_thinned: rows_thin.total(),
        vproj_sum_binary: cols.total(),
        vproj_sum_thinned: cols_thin.total(),
        area_binary,
        area_thinned,
        area_hpr,
        narea_binary: normalized_area(area_binary, width, height),
        narea_thinned: normalized_area(area_thinned, width, height),
        narea_hpr: normalized_area(area_hpr, width, height),
        cog_x,
        cog_y,
        vproj_max,
        vproj_min,
        vproj_smoothed_max,
        vproj_smoothed_min,
        hproj_max,
        hproj_min,
        hproj_smoothed_max,
        hproj_smoothed_min,
        global_baseline,
        upper_edge_limit,
        lower_edge_limit,
        middle_zone: lower_edge_limit - upper_edge_limit,
    }
}
