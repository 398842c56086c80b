//! Dimension sweep over the lambda-Cantor overlap parameter.
//!
//! The grid is the fixed ninth-step lattice λ ∈ {0, 1/8, …, 1}; each point
//! gets the full Bowen-root treatment over the configured depth window. Wall
//! clocks are recorded per point for the stdout summary but never serialized
//! — artifacts must be byte-identical across reruns.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use fractal_pressure::error::Result;
use fractal_pressure::pressure::bowen_root;

use crate::args::RunConfig;
use crate::report::CSV_VERSION_LINE;
use crate::system::lambda_cantor;

const GRID_STEPS: i64 = 8;

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub lambda_exact: String,
    pub dim_lo: f64,
    pub dim_hi: f64,
    pub slope: f64,
    pub converged: bool,
    #[serde(skip)]
    pub wall_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct SweepResult {
    pub depths: (u32, u32),
    pub refine: u32,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    pub fn total_wall_ms(&self) -> u64 {
        self.points.iter().map(|p| p.wall_ms).sum()
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION_LINE}");
        let _ = writeln!(out, "lambda,dim_lo,dim_hi,slope");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.lambda, p.dim_lo, p.dim_hi, p.slope
            );
        }
        out
    }
}

/// Runs the sweep in exact arithmetic; every grid value is rational.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let mut points = Vec::with_capacity(GRID_STEPS as usize + 1);
    for i in 0..=GRID_STEPS {
        let lambda = BigRational::new(BigInt::from(i), BigInt::from(GRID_STEPS));
        let ifs = lambda_cantor(lambda.clone())?;
        let start = Instant::now();
        let report = bowen_root(&ifs, cfg.depths, cfg.refine, cfg.cap)?;
        let wall_ms = start.elapsed().as_millis() as u64;
        let [dim_lo, dim_hi] = report
            .root_interval
            .expect("the lambda-Cantor family is conformal");
        points.push(SweepPoint {
            lambda: i as f64 / GRID_STEPS as f64,
            lambda_exact: lambda.to_string(),
            dim_lo,
            dim_hi,
            slope: report
                .extrapolated
                .expect("a bowen_root report spans at least two depths"),
            converged: report.converged,
            wall_ms,
        });
    }
    Ok(SweepResult {
        depths: cfg.depths,
        refine: cfg.refine,
        points,
    })
}
