//! Building concrete systems from presets and JSON descriptions.
//!
//! A run is either exact (rational matrix entries, zero-tolerance grid
//! predicates) or floating point; nothing downstream mixes the two, so the
//! split lives in one enum here and a small dispatch macro.

use std::path::Path;

use num_rational::BigRational;
use serde::Deserialize;

use fractal_pressure::error::{FpError, Result};
use fractal_pressure::ifs::AffineIfs;
use fractal_pressure::linalg::Matrix;
use fractal_pressure::scalar::{big_rational_to_f64, Scalar};

use crate::args::{parse_rational, ArithMode, IfsSource, RunConfig};

#[derive(Debug)]
pub enum AnyIfs {
    Exact(AffineIfs<BigRational>),
    Float(AffineIfs<f64>),
}

/// Runs one expression against whichever arithmetic the system carries.
macro_rules! with_ifs {
    ($any:expr, |$ifs:ident| $body:expr) => {
        match $any {
            $crate::system::AnyIfs::Exact($ifs) => $body,
            $crate::system::AnyIfs::Float($ifs) => $body,
        }
    };
}
pub(crate) use with_ifs;

impl AnyIfs {
    pub fn mode(&self) -> ArithMode {
        match self {
            AnyIfs::Exact(_) => ArithMode::Exact,
            AnyIfs::Float(_) => ArithMode::Float,
        }
    }

    pub fn symbol_count(&self) -> u32 {
        with_ifs!(self, |ifs| ifs.symbol_count())
    }

    pub fn dim(&self) -> usize {
        with_ifs!(self, |ifs| ifs.dim())
    }
}

/// The three-map family `x/3`, `x/3 + λ/3`, `x/3 + 2/3` on the line.
pub fn lambda_cantor<S: Scalar>(lambda: S) -> Result<AffineIfs<S>> {
    let third = S::from_rational(1, 3);
    let linear = Matrix::from_rows(vec![vec![third.clone()]])?;
    let translations = vec![
        vec![S::zero()],
        vec![lambda * third],
        vec![S::from_rational(2, 3)],
    ];
    AffineIfs::new(linear, translations)
}

/// The planar half-scale family with translations `(0,0)`, `(a1,a2)`, and
/// `(1/4, √3/4)`; `a1 = 1/2, a2 = 0` is the classical gasket.
pub fn overlap_sierpinski(a1: f64, a2: f64) -> Result<AffineIfs<f64>> {
    let half = 0.5f64;
    let linear = Matrix::from_rows(vec![vec![half, 0.0], vec![0.0, half]])?;
    let translations = vec![
        vec![0.0, 0.0],
        vec![a1, a2],
        vec![0.25, 3f64.sqrt() / 4.0],
    ];
    AffineIfs::new(linear, translations)
}

/// On-disk system description. Matrix and translation entries are strings
/// ("p/q", an integer, or a finite decimal) or plain JSON numbers; numbers
/// are taken at their exact binary value in exact mode.
#[derive(Debug, Deserialize)]
struct FileSystem {
    #[serde(default)]
    mode: Option<String>,
    matrix: Vec<Vec<serde_json::Value>>,
    translations: Vec<Vec<serde_json::Value>>,
}

fn entry_to_rational(v: &serde_json::Value) -> Result<BigRational> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            let x = n
                .as_f64()
                .ok_or_else(|| FpError::Config(format!("non-finite entry {n}")))?;
            <BigRational as Scalar>::from_f64(x)
                .ok_or_else(|| FpError::Config(format!("non-finite entry {n}")))
        }
        other => Err(FpError::Config(format!(
            "matrix/translation entries must be strings or numbers, got {other}"
        ))),
    }
}

fn entry_to_f64(v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::String(s) => Ok(big_rational_to_f64(&parse_rational(s)?)),
        serde_json::Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| FpError::Config(format!("non-finite entry {n}"))),
        other => Err(FpError::Config(format!(
            "matrix/translation entries must be strings or numbers, got {other}"
        ))),
    }
}

fn grid_of<T>(
    rows: &[Vec<serde_json::Value>],
    convert: impl Fn(&serde_json::Value) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    rows.iter()
        .map(|row| row.iter().map(&convert).collect())
        .collect()
}

fn load_file(path: &Path, flag_mode: Option<ArithMode>) -> Result<AnyIfs> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        FpError::Config(format!("cannot read system file {}: {e}", path.display()))
    })?;
    let sys: FileSystem = serde_json::from_str(&text).map_err(|e| {
        FpError::Config(format!("bad system file {}: {e}", path.display()))
    })?;
    let file_mode = sys
        .mode
        .as_deref()
        .map(str::parse::<ArithMode>)
        .transpose()?;
    // Flags beat the file; absent both, rational arithmetic is the default
    // because every accepted entry form is exactly representable.
    let mode = flag_mode.or(file_mode).unwrap_or(ArithMode::Exact);
    match mode {
        ArithMode::Exact => {
            let linear = Matrix::from_rows(grid_of(&sys.matrix, entry_to_rational)?)?;
            let translations = grid_of(&sys.translations, entry_to_rational)?;
            Ok(AnyIfs::Exact(AffineIfs::new(linear, translations)?))
        }
        ArithMode::Float => {
            let linear = Matrix::from_rows(grid_of(&sys.matrix, entry_to_f64)?)?;
            let translations = grid_of(&sys.translations, entry_to_f64)?;
            Ok(AnyIfs::Float(AffineIfs::new(linear, translations)?))
        }
    }
}

/// Instantiates the system a config names, in the arithmetic it resolved.
pub fn build_ifs(cfg: &RunConfig) -> Result<AnyIfs> {
    match &cfg.source {
        IfsSource::LambdaCantor { lambda } => match cfg.mode.unwrap_or(ArithMode::Exact) {
            ArithMode::Exact => Ok(AnyIfs::Exact(lambda_cantor(lambda.clone())?)),
            ArithMode::Float => Ok(AnyIfs::Float(lambda_cantor(big_rational_to_f64(lambda))?)),
        },
        IfsSource::OverlapSierpinski { a1, a2 } => Ok(AnyIfs::Float(overlap_sierpinski(
            big_rational_to_f64(a1),
            a2.to_f64(),
        )?)),
        IfsSource::File(path) => load_file(path, cfg.mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{parse_args, A2Param};
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn lambda_cantor_places_the_three_translations() {
        let ifs = lambda_cantor(rat(1, 2)).unwrap();
        assert_eq!(ifs.symbol_count(), 3);
        assert_eq!(ifs.dim(), 1);
        assert_eq!(ifs.translation(0), &[rat(0, 1)]);
        assert_eq!(ifs.translation(1), &[rat(1, 6)]);
        assert_eq!(ifs.translation(2), &[rat(2, 3)]);
        assert!(ifs.is_conformal());
        assert!((ifs.ratio() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sierpinski_preset_is_conformal_at_half_scale() {
        let ifs = overlap_sierpinski(0.5, 0.0).unwrap();
        assert_eq!(ifs.dim(), 2);
        assert!(ifs.is_conformal());
        assert!((ifs.ratio() - 0.5).abs() < 1e-15);
        assert_eq!(ifs.translation(2), &[0.25, 3f64.sqrt() / 4.0]);
    }

    #[test]
    fn configs_build_in_the_resolved_arithmetic() {
        let (cfg, _) = parse_args(["dim", "--preset", "lambda-cantor", "--lambda", "1/8"]).unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap(), AnyIfs::Exact(_)));

        let (cfg, _) = parse_args([
            "dim",
            "--preset",
            "lambda-cantor",
            "--lambda",
            "1/8",
            "--mode",
            "float",
        ])
        .unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap(), AnyIfs::Float(_)));

        let (cfg, _) = parse_args(["dim", "--preset", "overlap-sierpinski", "--a2", "sqrt3/4"])
            .unwrap();
        let any = build_ifs(&cfg).unwrap();
        assert_eq!(any.mode(), ArithMode::Float);
        match &cfg.source {
            IfsSource::OverlapSierpinski { a2, .. } => assert_eq!(*a2, A2Param::Sqrt3Over4),
            _ => unreachable!(),
        }
    }

    #[test]
    fn file_systems_parse_strings_and_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        std::fs::write(
            &path,
            r#"{"matrix": [["1/3"]], "translations": [["0"], [0.25], ["2/3"]]}"#,
        )
        .unwrap();
        let (cfg, _) = parse_args(["dim", "--ifs", path.to_str().unwrap()]).unwrap();
        let any = build_ifs(&cfg).unwrap();
        match &any {
            AnyIfs::Exact(ifs) => {
                assert_eq!(ifs.translation(1), &[rat(1, 4)]);
            }
            AnyIfs::Float(_) => panic!("files default to exact arithmetic"),
        }

        // A mode flag overrides the file default.
        let (cfg, _) =
            parse_args(["dim", "--ifs", path.to_str().unwrap(), "--mode", "float"]).unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap(), AnyIfs::Float(_)));
    }

    #[test]
    fn file_mode_field_is_honored_and_errors_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        std::fs::write(
            &path,
            r#"{"mode": "float", "matrix": [["1/2"]], "translations": [["0"], ["1/2"]]}"#,
        )
        .unwrap();
        let (cfg, _) = parse_args(["dim", "--ifs", path.to_str().unwrap()]).unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap(), AnyIfs::Float(_)));

        let missing = dir.path().join("nope.json");
        let (cfg, _) = parse_args(["dim", "--ifs", missing.to_str().unwrap()]).unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap_err(), FpError::Config(_)));

        let malformed = dir.path().join("bad.json");
        std::fs::write(&malformed, r#"{"matrix": [["1//3"]], "translations": [["0"]]}"#).unwrap();
        let (cfg, _) = parse_args(["dim", "--ifs", malformed.to_str().unwrap()]).unwrap();
        assert!(matches!(build_ifs(&cfg).unwrap_err(), FpError::Config(_)));
    }

    #[test]
    fn nonsquare_or_mismatched_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        std::fs::write(
            &path,
            r#"{"matrix": [["1/3", "0"]], "translations": [["0", "0"]]}"#,
        )
        .unwrap();
        let (cfg, _) = parse_args(["dim", "--ifs", path.to_str().unwrap()]).unwrap();
        assert!(build_ifs(&cfg).is_err());
    }
}
