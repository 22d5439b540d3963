//! CSV exports and atomic file staging.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use wavelet_comove::{Matrix, ScaleGrid};

/// Scale written with nine significant digits, in the shortest form that
/// round-trips.
pub fn format_scale(s: f64) -> String {
    let rounded: f64 = format!("{s:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Plain value formatting; non-finite values become `NaN`.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NaN".to_string()
    }
}

/// Long-format grid export: `time_index,scale,value[,significant]`, one row
/// per grid point, scale-major.
///
/// # Panics
///
/// Panics if `field` (or `mask`) does not have one row per scale of `grid`.
pub fn export_grid<W: Write>(
    field: &Matrix<f64>,
    grid: &ScaleGrid,
    mask: Option<&Matrix<bool>>,
    mut sink: W,
) -> io::Result<()> {
    assert_eq!(field.rows(), grid.num_scales(), "field rows must match the grid");
    if let Some(m) = mask {
        assert_eq!(m.shape(), field.shape(), "mask shape must match the field");
    }
    match mask {
        Some(_) => writeln!(sink, "time_index,scale,value,significant")?,
        None => writeln!(sink, "time_index,scale,value")?,
    }
    for (r, &s) in grid.scales().iter().enumerate() {
        let scale = format_scale(s);
        for (c, &v) in field.row(r).iter().enumerate() {
            write!(sink, "{c},{scale},{}", format_value(v))?;
            match mask {
                Some(m) => writeln!(sink, ",{}", u8::from(m[(r, c)]))?,
                None => writeln!(sink)?,
            }
        }
    }
    Ok(())
}

/// `time_index,coi` rows.
pub fn export_coi<W: Write>(coi: &[f64], mut sink: W) -> io::Result<()> {
    writeln!(sink, "time_index,coi")?;
    for (i, v) in coi.iter().enumerate() {
        writeln!(sink, "{i},{}", format_value(*v))?;
    }
    Ok(())
}

/// A file produced by a command, held in memory until every output of the
/// command has been computed.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub summary: String,
}

/// Writes every artifact into `dir` through a temporary file and a rename,
/// so a failed run never leaves a half-written output behind. Returns the
/// final paths in order.
pub fn commit(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let target = dir.join(&a.name);
        let tmp = dir.join(format!(".{}.tmp", a.name));
        let result = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(&a.bytes)?;
            f.sync_all()
        });
        if let Err(e) = result.and_then(|_| fs::rename(&tmp, &target)) {
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        written.push(target);
    }
    Ok(written)
}
