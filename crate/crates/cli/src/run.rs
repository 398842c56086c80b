//! Command dispatch: build the system, run the estimators, write artifacts,
//! print a one-line summary, and translate errors into exit codes.

use fractal_pressure::error::{FpError, Result};
use fractal_pressure::grid::cover_bounds;
use fractal_pressure::measures::{
    integral_estimate, projection_entropy_estimate, separated_family, BernoulliMeasure,
};
use fractal_pressure::pressure::{bowen_root, pressure_bracket, Potential, PressureBracket};

use crate::args::{Command, OutFormat, PotentialSpec, RunConfig};
use crate::report::{
    cover_csv, json_bytes, write_atomic, CoverCounts, EntropySeries, PressureSeries,
    VarcheckReport,
};
use crate::system::{build_ifs, with_ifs, AnyIfs};
use crate::{svg, sweep};

/// 0 ok, 2 config error, 3 cap exceeded, 4 conformal refusal,
/// 5 non-convergence warning (artifacts still written).
pub fn exit_code_for(err: &FpError) -> i32 {
    match err {
        FpError::CapExceeded { .. } => 3,
        FpError::NonConformal(_) => 4,
        _ => 2,
    }
}

/// Runs one normalized config to completion; never panics on user input.
pub fn execute(cfg: &RunConfig) -> i32 {
    init_threads(cfg);
    match dispatch(cfg) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

/// FP_THREADS beats --threads; absent both, rayon picks its default. The
/// global pool can only be configured once per process, which is exactly the
/// lifetime of one CLI invocation.
fn init_threads(cfg: &RunConfig) {
    let env_raw = std::env::var("FP_THREADS").ok();
    let from_env = env_raw
        .as_deref()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    if env_raw.is_some() && from_env.is_none() {
        eprintln!("warning: FP_THREADS is not a positive integer; ignoring it");
    }
    if let Some(n) = from_env.or(cfg.threads).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        Command::Dim => run_dim(cfg),
        Command::Pressure => run_pressure(cfg),
        Command::Entropy => run_entropy(cfg),
        Command::Varcheck => run_varcheck(cfg),
        Command::Sweep => run_sweep(cfg),
    }
}

fn build_potential(spec: &PotentialSpec, dim: usize) -> Result<Potential> {
    match spec {
        PotentialSpec::Const(c) => Ok(Potential::constant(*c)),
        PotentialSpec::Linear { coeffs, lipschitz } => {
            if coeffs.len() != dim {
                return Err(FpError::Config(format!(
                    "linear potential has {} coefficients for a {dim}-dimensional system",
                    coeffs.len()
                )));
            }
            Ok(Potential::linear(coeffs.clone(), *lipschitz))
        }
    }
}

fn measure_for(any: &AnyIfs, weights: Option<&[f64]>) -> Result<BernoulliMeasure> {
    match weights {
        Some(ws) => BernoulliMeasure::new(ws.to_vec()),
        None => Ok(BernoulliMeasure::uniform(any.symbol_count())),
    }
}

fn run_dim(cfg: &RunConfig) -> Result<i32> {
    let any = build_ifs(cfg)?;
    let report = with_ifs!(&any, |ifs| bowen_root(ifs, cfg.depths, cfg.refine, cfg.cap))?;
    write_atomic(&cfg.artifact_path(), &json_bytes(&report)?)?;

    if let Some(dir) = &cfg.dump_cover {
        for n in cfg.depths.0..=cfg.depths.1 {
            let cover = with_ifs!(&any, |ifs| cover_bounds(ifs, n, cfg.refine, cfg.cap))?;
            write_atomic(
                &dir.join(format!("cover_depth_{n:02}.csv")),
                cover_csv(&cover).as_bytes(),
            )?;
            write_atomic(
                &dir.join(format!("counts_depth_{n:02}.json")),
                &json_bytes(&CoverCounts::of(&cover))?,
            )?;
        }
    }

    let [lo, hi] = report
        .root_interval
        .expect("bowen_root refuses non-conformal systems");
    println!("dim ∈ [{lo:.10}, {hi:.10}]");
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.converged { 0 } else { 5 })
}

fn run_pressure(cfg: &RunConfig) -> Result<i32> {
    let any = build_ifs(cfg)?;
    let f = build_potential(&cfg.potential, any.dim())?;
    let mut brackets: Vec<PressureBracket> = Vec::new();
    for n in cfg.depths.0..=cfg.depths.1 {
        brackets.push(with_ifs!(&any, |ifs| pressure_bracket(
            ifs, &f, n, cfg.refine, cfg.cap
        ))?);
    }
    let series = PressureSeries::from_brackets(
        cfg.potential.to_string(),
        any.mode().as_str().to_string(),
        with_ifs!(&any, |ifs| ifs.ratio()),
        cfg.refine,
        &brackets,
    );
    let bytes = match cfg.format {
        OutFormat::Json => json_bytes(&series)?,
        OutFormat::Csv => series.to_csv().into_bytes(),
    };
    write_atomic(&cfg.artifact_path(), &bytes)?;

    let last = brackets.last().expect("depth range is non-empty");
    println!(
        "P({}) ∈ [{:.10}, {:.10}] at depth {}",
        series.potential, last.low, last.high, last.depth
    );
    for w in &series.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if series.converged { 0 } else { 5 })
}

fn run_entropy(cfg: &RunConfig) -> Result<i32> {
    let any = build_ifs(cfg)?;
    let p = measure_for(&any, cfg.weights.as_deref())?;
    let mut estimates = Vec::new();
    for n in cfg.depths.0..=cfg.depths.1 {
        estimates.push(with_ifs!(&any, |ifs| projection_entropy_estimate(
            ifs, &p, n, cfg.cap
        ))?);
    }
    let series = EntropySeries::from_estimates(
        p.weights().to_vec(),
        any.mode().as_str().to_string(),
        &estimates,
    );
    let bytes = match cfg.format {
        OutFormat::Json => json_bytes(&series)?,
        OutFormat::Csv => series.to_csv().into_bytes(),
    };
    write_atomic(&cfg.artifact_path(), &bytes)?;

    let last = estimates.last().expect("depth range is non-empty");
    println!(
        "h ≈ {:.10} at depth {} (classical {:.10})",
        last.value, last.depth, last.h_classical
    );
    for e in &estimates {
        if e.boundary_warning {
            eprintln!(
                "warning: {:.2}% of the mass sits on interior grid lines at depth {}; the \
                 estimate is biased by the cell convention there",
                e.boundary_mass * 100.0,
                e.depth
            );
        }
    }
    Ok(0)
}

fn run_varcheck(cfg: &RunConfig) -> Result<i32> {
    let any = build_ifs(cfg)?;
    let n = cfg.depths.1;
    let p = measure_for(&any, cfg.weights.as_deref())?;
    let f = build_potential(&cfg.potential, any.dim())?;

    let upper = with_ifs!(&any, |ifs| pressure_bracket(ifs, &f, n, cfg.refine, cfg.cap))?.high;
    let entropy = with_ifs!(&any, |ifs| projection_entropy_estimate(ifs, &p, n, cfg.cap))?;
    let (int_low, _) = with_ifs!(&any, |ifs| integral_estimate(ifs, &p, &f, n, cfg.cap))?;
    let family = with_ifs!(&any, |ifs| separated_family(ifs, &f, n, cfg.cap))?;

    let bernoulli_value = entropy.value + int_low;
    let report = VarcheckReport {
        upper,
        bernoulli_value,
        certified_lower: family.certified_lower,
        gap: upper - bernoulli_value,
    };
    write_atomic(&cfg.artifact_path(), &json_bytes(&report)?)?;
    println!(
        "gap = {:.10} (upper {:.10}, bernoulli {:.10}, certified_lower {:.10})",
        report.gap, report.upper, report.bernoulli_value, report.certified_lower
    );
    Ok(0)
}

fn run_sweep(cfg: &RunConfig) -> Result<i32> {
    let result = sweep::run_sweep(cfg)?;
    let bytes = match cfg.format {
        OutFormat::Csv => result.to_csv().into_bytes(),
        OutFormat::Json => json_bytes(&result)?,
    };
    write_atomic(&cfg.artifact_path(), &bytes)?;
    if let Some(svg_path) = &cfg.svg {
        svg::emit_svg(&result, svg_path)?;
    }
    let first = result.points.first().expect("nine grid points");
    let last = result.points.last().expect("nine grid points");
    println!(
        "sweep: {} points, slope {:.4} → {:.4} ({} ms total)",
        result.points.len(),
        first.slope,
        last.slope,
        result.total_wall_ms()
    );
    Ok(if result.all_converged() { 0 } else { 5 })
}
