use std::io::Write;

use super::{FeatureVector, GLOBAL_FEATURE_NAMES, GRID_CELLS, LOCAL_FEATURE_NAMES};

/// Column names for the 302 slots: `g_<name>` then `c<cell>_<name>` with
/// the two-digit row-major cell index (`c00` top-left, `c24` bottom-right).
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = GLOBAL_FEATURE_NAMES.iter().map(|n| format!("g_{n}")).collect();
    for cell in 0..GRID_CELLS {
        names.extend(LOCAL_FEATURE_NAMES.iter().map(|n| format!("c{cell:02}_{n}")));
    }
    names
}

/// Header `subject_id,sample_id,<302 names>` and one line per row.
pub fn write_features_csv<'a, W, I>(mut out: W, rows: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u32, u32, &'a FeatureVector)>,
{
    writeln!(out, "subject_id,sample_id,{}", feature_names().join(","))?;
    for (subject, sample, fv) in rows {
        write!(out, "{subject},{sample}")?;
        for v in fv.as_slice() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
