//! Artifact emission: atomic file writes and the JSON/CSV schemas.
//!
//! Every output lands via temp-file-plus-rename so an interrupted run never
//! leaves a partial artifact at the target path. CSV files open with a
//! version comment so downstream plots can detect schema changes. Timings
//! are deliberately absent from artifacts: byte-identical reruns are a
//! contract, and wall clocks are not reproducible.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use fractal_pressure::error::{FpError, Result};
use fractal_pressure::grid::CoverBounds;
use fractal_pressure::measures::EntropyEstimate;
use fractal_pressure::pressure::PressureBracket;

pub const CSV_VERSION_LINE: &str = "# fractal-pressure v1";

/// Writes `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| FpError::Config(format!("not a writable path: {}", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        FpError::Io(e)
    })
}

/// Pretty JSON plus a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| FpError::Config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Shortest f64 rendering that parses back to the same value; keeps CSV
/// artifacts byte-stable without fixing a precision.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Per-depth pressure brackets for one potential.
#[derive(Debug, Serialize)]
pub struct PressureSeries {
    pub potential: String,
    pub mode: String,
    pub r: f64,
    pub refine: u32,
    pub depths: Vec<u32>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub box_count_used: Vec<u64>,
    pub witness_cells: Vec<u64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl PressureSeries {
    pub fn from_brackets(
        potential: String,
        mode: String,
        r: f64,
        refine: u32,
        brackets: &[PressureBracket],
    ) -> Self {
        let depths: Vec<u32> = brackets.iter().map(|b| b.depth).collect();
        let low: Vec<f64> = brackets.iter().map(|b| b.low).collect();
        let high: Vec<f64> = brackets.iter().map(|b| b.high).collect();
        let warnings =
            fractal_pressure::pressure::bracket_drift_warnings(&depths, &low, &high);
        PressureSeries {
            potential,
            mode,
            r,
            refine,
            depths,
            low,
            high,
            box_count_used: brackets.iter().map(|b| b.box_count_used).collect(),
            witness_cells: brackets.iter().map(|b| b.witness_cells).collect(),
            converged: warnings.is_empty(),
            warnings,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION_LINE}");
        let _ = writeln!(out, "depth,low,high,box_count_used,witness_cells");
        for i in 0..self.depths.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.depths[i],
                num(self.low[i]),
                num(self.high[i]),
                self.box_count_used[i],
                self.witness_cells[i]
            );
        }
        out
    }
}

/// Per-depth projection entropy estimates for one Bernoulli measure.
#[derive(Debug, Serialize)]
pub struct EntropySeries {
    pub weights: Vec<f64>,
    pub mode: String,
    pub h_classical: f64,
    pub depths: Vec<u32>,
    pub value: Vec<f64>,
    pub mass_cells: Vec<u64>,
    pub boundary_mass: Vec<f64>,
    pub boundary_warning: Vec<bool>,
}

impl EntropySeries {
    pub fn from_estimates(
        weights: Vec<f64>,
        mode: String,
        estimates: &[EntropyEstimate],
    ) -> Self {
        EntropySeries {
            weights,
            mode,
            h_classical: estimates.first().map(|e| e.h_classical).unwrap_or(0.0),
            depths: estimates.iter().map(|e| e.depth).collect(),
            value: estimates.iter().map(|e| e.value).collect(),
            mass_cells: estimates.iter().map(|e| e.mass_cells).collect(),
            boundary_mass: estimates.iter().map(|e| e.boundary_mass).collect(),
            boundary_warning: estimates.iter().map(|e| e.boundary_warning).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION_LINE}");
        let _ = writeln!(out, "depth,value,mass_cells,boundary_mass");
        for i in 0..self.depths.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.depths[i],
                num(self.value[i]),
                self.mass_cells[i],
                num(self.boundary_mass[i])
            );
        }
        out
    }
}

/// The four-field variational summary. Field order is the report order.
#[derive(Debug, Serialize)]
pub struct VarcheckReport {
    pub upper: f64,
    pub bernoulli_value: f64,
    pub certified_lower: f64,
    pub gap: f64,
}

/// One depth of a cover dump: a row per key, inner rows certified, the rest
/// outer-only.
pub fn cover_csv(cover: &CoverBounds) -> String {
    let dim = cover
        .outer
        .first()
        .map(|k| k.alpha.len())
        .unwrap_or_else(|| cover.inner.first().map(|k| k.alpha.len()).unwrap_or(1));
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_VERSION_LINE}");
    let mut header = String::from("depth");
    for i in 1..=dim {
        let _ = write!(header, ",alpha_{i}");
    }
    let _ = writeln!(out, "{header},certificate");

    let inner_set: std::collections::HashSet<&[num_bigint::BigInt]> =
        cover.inner.iter().map(|k| k.alpha.as_slice()).collect();
    for key in &cover.outer {
        let mut row = format!("{}", key.depth);
        for a in &key.alpha {
            let _ = write!(row, ",{a}");
        }
        let certificate = if inner_set.contains(key.alpha.as_slice()) {
            "inner"
        } else {
            "outer-only"
        };
        let _ = writeln!(out, "{row},{certificate}");
    }
    out
}

/// Counts summary mirroring one cover dump.
#[derive(Debug, Serialize)]
pub struct CoverCounts {
    pub depth: u32,
    pub n_minus: u64,
    pub n_plus: u64,
}

impl CoverCounts {
    pub fn of(cover: &CoverBounds) -> Self {
        CoverCounts {
            depth: cover.depth,
            n_minus: cover.n_minus(),
            n_plus: cover.n_plus(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fractal_pressure::grid::cover_bounds;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn atomic_writes_replace_content_and_leave_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.json");
        std::fs::write(&path, "old junk").unwrap();
        write_atomic(&path, b"{\"fresh\": true}\n").unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "{\"fresh\": true}\n"
        );
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
            .collect();
        assert!(leftovers.is_empty(), "temp files linger: {leftovers:?}");
    }

    #[test]
    fn atomic_writes_create_missing_parent_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/c.csv");
        write_atomic(&path, b"x\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x\n");
    }

    #[test]
    fn cover_csv_marks_inner_and_outer_only_rows() {
        // λ=0 at depth 1 has outer {0,1,2} and inner {0,2}: the middle cell
        // is hit only through the overlap of cell boundaries.
        let ifs = crate::system::lambda_cantor(rat(0, 1)).unwrap();
        let cover = cover_bounds(&ifs, 1, 0, 1_000_000).unwrap();
        let csv = cover_csv(&cover);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_VERSION_LINE);
        assert_eq!(lines.next().unwrap(), "depth,alpha_1,certificate");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows, vec!["1,0,inner", "1,1,outer-only", "1,2,inner"]);

        let counts = CoverCounts::of(&cover);
        assert_eq!((counts.depth, counts.n_minus, counts.n_plus), (1, 2, 3));
    }

    #[test]
    fn csv_numbers_render_shortest_and_round_trip() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.3333333333333333");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        let x = 0.6309297535714574f64;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
