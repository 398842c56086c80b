//! Flag parsing and the normalized run configuration.
//!
//! Every subcommand shares one raw flag set; `normalize` checks the
//! combination, fills in per-source defaults, and produces a [`RunConfig`]
//! whose canonical flag rendering (`to_args`) parses back to an identical
//! value. That round trip is what `--explain` prints.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;

use fractal_pressure::error::{FpError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "fractal-pressure",
    version,
    about = "Bracketed dimension, pressure, and entropy estimates for affine iterated function systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Box-exponent brackets and the Bowen-equation dimension interval.
    Dim(RawArgs),
    /// Pressure brackets for a potential over a depth range.
    Pressure(RawArgs),
    /// Projection entropy of a Bernoulli measure over a depth range.
    Entropy(RawArgs),
    /// Variational check: pressure upper bound vs. Bernoulli value vs. certified packing lower bound.
    Varcheck(RawArgs),
    /// Dimension sweep over the lambda-Cantor overlap parameter.
    Sweep(RawArgs),
}

/// One flag set shared by all subcommands; `normalize` rejects combinations
/// a given command does not use.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RawArgs {
    /// Built-in family: "lambda-cantor" or "overlap-sierpinski".
    #[arg(long, conflicts_with = "ifs")]
    pub preset: Option<String>,

    /// Overlap parameter for lambda-cantor, a rational in [0,1] (e.g. 1/2).
    #[arg(long)]
    pub lambda: Option<String>,

    /// First translation parameter for overlap-sierpinski, in [0,1/2].
    #[arg(long)]
    pub a1: Option<String>,

    /// Second translation parameter for overlap-sierpinski, in [0,sqrt3/4];
    /// the literal "sqrt3/4" is accepted for the right endpoint.
    #[arg(long)]
    pub a2: Option<String>,

    /// Path to a JSON system description (matrix + translations).
    #[arg(long)]
    pub ifs: Option<PathBuf>,

    /// Arithmetic mode: "exact" (rational) or "float".
    #[arg(long)]
    pub mode: Option<String>,

    /// Grid depth or inclusive depth range, e.g. "8" or "6..12".
    #[arg(long)]
    pub depth: Option<String>,

    /// Extra refinement depth for inner-cover witnesses.
    #[arg(long)]
    pub refine: Option<u32>,

    /// Enumeration cap: maximum number of words per depth.
    #[arg(long)]
    pub cap: Option<u64>,

    /// Worker thread count (the FP_THREADS environment variable wins).
    #[arg(long)]
    pub threads: Option<usize>,

    /// Potential: "const:<v>" or "linear:<c1,..,cd>:<lipschitz>".
    #[arg(long)]
    pub potential: Option<String>,

    /// Bernoulli weights, comma separated (e.g. 0.5,0.2,0.3 or 1/3,1/3,1/3).
    #[arg(long)]
    pub weights: Option<String>,

    /// Artifact format: "json" or "csv".
    #[arg(long)]
    pub out: Option<String>,

    /// Artifact path (defaults to <command>.<format> in the working directory).
    #[arg(long)]
    pub out_path: Option<PathBuf>,

    /// Directory for per-depth cover dumps (dim only).
    #[arg(long)]
    pub dump_cover: Option<PathBuf>,

    /// Also render the sweep as an SVG chart at this path (sweep only).
    #[arg(long)]
    pub svg: Option<PathBuf>,

    /// Print the fully resolved flag list and exit without computing.
    #[arg(long)]
    pub explain: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dim,
    Pressure,
    Entropy,
    Varcheck,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Dim => "dim",
            Command::Pressure => "pressure",
            Command::Entropy => "entropy",
            Command::Varcheck => "varcheck",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithMode {
    Exact,
    Float,
}

impl ArithMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithMode::Exact => "exact",
            ArithMode::Float => "float",
        }
    }
}

impl FromStr for ArithMode {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ArithMode::Exact),
            "float" => Ok(ArithMode::Float),
            other => Err(FpError::Config(format!(
                "unknown mode '{other}' (expected exact or float)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

impl OutFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutFormat::Json => "json",
            OutFormat::Csv => "csv",
        }
    }

    pub fn extension(self) -> &'static str {
        self.as_str()
    }
}

impl FromStr for OutFormat {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutFormat::Json),
            "csv" => Ok(OutFormat::Csv),
            other => Err(FpError::Config(format!(
                "unknown output format '{other}' (expected json or csv)"
            ))),
        }
    }
}

/// Second Sierpiński parameter: a rational, or exactly the upper endpoint
/// sqrt(3)/4, which no rational can express.
#[derive(Debug, Clone, PartialEq)]
pub enum A2Param {
    Rational(BigRational),
    Sqrt3Over4,
}

impl A2Param {
    pub fn to_f64(&self) -> f64 {
        match self {
            A2Param::Rational(q) => fractal_pressure::scalar::big_rational_to_f64(q),
            A2Param::Sqrt3Over4 => 3f64.sqrt() / 4.0,
        }
    }
}

impl fmt::Display for A2Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            A2Param::Rational(q) => write!(f, "{q}"),
            A2Param::Sqrt3Over4 => write!(f, "sqrt3/4"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IfsSource {
    LambdaCantor { lambda: BigRational },
    OverlapSierpinski { a1: BigRational, a2: A2Param },
    File(PathBuf),
}

impl IfsSource {
    /// Default depth range used when --depth is absent.
    pub fn default_depths(&self) -> (u32, u32) {
        match self {
            IfsSource::LambdaCantor { .. } => (6, 12),
            IfsSource::OverlapSierpinski { .. } => (4, 10),
            IfsSource::File(_) => (4, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Const(f64),
    Linear { coeffs: Vec<f64>, lipschitz: f64 },
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Const(c) => write!(f, "const:{c}"),
            PotentialSpec::Linear { coeffs, lipschitz } => {
                let parts: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "linear:{}:{lipschitz}", parts.join(","))
            }
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| FpError::Config(format!("bad potential '{s}': {msg}"));
        if let Some(rest) = s.strip_prefix("const:") {
            let v: f64 = rest
                .parse()
                .map_err(|_| bad("the constant is not a number"))?;
            if !v.is_finite() {
                return Err(bad("the constant must be finite"));
            }
            return Ok(PotentialSpec::Const(v));
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let (coeff_part, lip_part) = rest
                .rsplit_once(':')
                .ok_or_else(|| bad("expected linear:<c1,..,cd>:<lipschitz>"))?;
            let coeffs: Vec<f64> = coeff_part
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("a coefficient is not a number"))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(bad("coefficients must be finite and nonempty"));
            }
            let lipschitz: f64 = lip_part
                .parse()
                .map_err(|_| bad("the Lipschitz bound is not a number"))?;
            if !lipschitz.is_finite() || lipschitz < 0.0 {
                return Err(bad("the Lipschitz bound must be finite and nonnegative"));
            }
            return Ok(PotentialSpec::Linear { coeffs, lipschitz });
        }
        Err(bad("expected const:<v> or linear:<c1,..,cd>:<lipschitz>"))
    }
}

/// A fully resolved run: what `--explain` prints and what `run` executes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub source: IfsSource,
    /// None means "decided by the source" (file systems default to exact).
    pub mode: Option<ArithMode>,
    /// Inclusive depth range, low <= high.
    pub depths: (u32, u32),
    pub refine: u32,
    pub cap: u64,
    pub threads: Option<usize>,
    pub potential: PotentialSpec,
    pub weights: Option<Vec<f64>>,
    pub format: OutFormat,
    pub out_path: Option<PathBuf>,
    pub dump_cover: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

pub const DEFAULT_CAP: u64 = 10_000_000;
pub const DEFAULT_REFINE: u32 = 2;

/// Parses "p/q", an integer, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || FpError::Config(format!("malformed rational '{s}'"));
    let t = s.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(FpError::Config(format!("zero denominator in '{s}'")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = t.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let (sign, digits) = match int_part.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, int_part.strip_prefix('+').unwrap_or(int_part)),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let combined: BigInt = format!("{digits}{frac_part}").parse().map_err(|_| bad())?;
        let den = BigInt::from(10).pow(frac_part.len() as u32);
        return Ok(BigRational::new(combined * sign, den));
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Parses "n" or "a..b" (inclusive) into a depth pair with a <= b.
pub fn parse_depth_range(s: &str) -> Result<(u32, u32)> {
    let bad = || FpError::Config(format!("bad depth '{s}' (expected n or a..b)"));
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| bad())?;
        let hi: u32 = b.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(FpError::Config(format!(
                "depth range '{s}' must be increasing and start at 1 or more"
            )));
        }
        Ok((lo, hi))
    } else {
        let n: u32 = s.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((n, n))
    }
}

fn parse_weights(s: &str) -> Result<Vec<f64>> {
    let ws: Vec<f64> = s
        .split(',')
        .map(|w| {
            parse_rational(w.trim())
                .map(|q| fractal_pressure::scalar::big_rational_to_f64(&q))
        })
        .collect::<Result<_>>()
        .map_err(|_| FpError::Config(format!("bad weights '{s}': expected p1,p2,...")))?;
    if ws.is_empty() || ws.iter().any(|w| !w.is_finite()) {
        return Err(FpError::Config(format!(
            "bad weights '{s}': entries must be finite"
        )));
    }
    Ok(ws)
}

fn reject_unused(cmd: Command, name: &str, present: bool) -> Result<()> {
    if present {
        return Err(FpError::Config(format!(
            "flag --{name} is not used by the {} command",
            cmd.as_str()
        )));
    }
    Ok(())
}

fn rational_in_range(
    value: &BigRational,
    lo: (i64, i64),
    hi: (i64, i64),
    what: &str,
) -> Result<()> {
    let lo = BigRational::new(BigInt::from(lo.0), BigInt::from(lo.1));
    let hi = BigRational::new(BigInt::from(hi.0), BigInt::from(hi.1));
    if value < &lo || value > &hi {
        return Err(FpError::Config(format!(
            "{what} = {value} is outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn resolve_source(cmd: Command, raw: &RawArgs) -> Result<(IfsSource, Option<ArithMode>)> {
    let mode = raw.mode.as_deref().map(ArithMode::from_str).transpose()?;

    if cmd == Command::Sweep {
        if let Some(p) = &raw.preset {
            if p != "lambda-cantor" {
                return Err(FpError::Config(format!(
                    "sweep varies the lambda-cantor family; preset '{p}' is not sweepable"
                )));
            }
        }
        if raw.ifs.is_some() {
            return Err(FpError::Config(
                "sweep varies the lambda-cantor family and does not take --ifs".into(),
            ));
        }
        reject_unused(cmd, "lambda", raw.lambda.is_some())?;
        reject_unused(cmd, "a1", raw.a1.is_some())?;
        reject_unused(cmd, "a2", raw.a2.is_some())?;
        if mode == Some(ArithMode::Float) {
            return Err(FpError::Config(
                "sweep runs in exact mode; --mode float is not supported".into(),
            ));
        }
        // The per-point lambda is filled in by the sweep loop.
        return Ok((
            IfsSource::LambdaCantor {
                lambda: BigRational::from_integer(BigInt::from(0)),
            },
            Some(ArithMode::Exact),
        ));
    }

    if let Some(path) = &raw.ifs {
        reject_unused(cmd, "lambda", raw.lambda.is_some())?;
        reject_unused(cmd, "a1", raw.a1.is_some())?;
        reject_unused(cmd, "a2", raw.a2.is_some())?;
        return Ok((IfsSource::File(path.clone()), mode));
    }

    let preset = raw.preset.as_deref().ok_or_else(|| {
        FpError::Config("no system given: pass --preset <name> or --ifs <file>".into())
    })?;
    match preset {
        "lambda-cantor" => {
            reject_unused(cmd, "a1", raw.a1.is_some())?;
            reject_unused(cmd, "a2", raw.a2.is_some())?;
            let lambda = match &raw.lambda {
                Some(s) => parse_rational(s)?,
                None => BigRational::from_integer(BigInt::from(0)),
            };
            rational_in_range(&lambda, (0, 1), (1, 1), "lambda")?;
            Ok((
                IfsSource::LambdaCantor { lambda },
                Some(mode.unwrap_or(ArithMode::Exact)),
            ))
        }
        "overlap-sierpinski" => {
            reject_unused(cmd, "lambda", raw.lambda.is_some())?;
            if mode == Some(ArithMode::Exact) {
                return Err(FpError::Config(
                    "overlap-sierpinski has an irrational translation (sqrt(3)/4), so exact \
                     mode is unavailable; rerun with --mode float or omit --mode"
                        .into(),
                ));
            }
            let a1 = match &raw.a1 {
                Some(s) => parse_rational(s)?,
                None => BigRational::from_integer(BigInt::from(0)),
            };
            rational_in_range(&a1, (0, 1), (1, 2), "a1")?;
            let a2 = match raw.a2.as_deref() {
                None => A2Param::Rational(BigRational::from_integer(BigInt::from(0))),
                Some("sqrt3/4") => A2Param::Sqrt3Over4,
                Some(s) => {
                    let q = parse_rational(s)?;
                    let sqrt3_over_4 = 3f64.sqrt() / 4.0;
                    let qf = fractal_pressure::scalar::big_rational_to_f64(&q);
                    if qf < 0.0 || qf > sqrt3_over_4 {
                        return Err(FpError::Config(format!(
                            "a2 = {q} is outside [0, sqrt3/4 ≈ {sqrt3_over_4:.6}]"
                        )));
                    }
                    A2Param::Rational(q)
                }
            };
            Ok((
                IfsSource::OverlapSierpinski { a1, a2 },
                Some(ArithMode::Float),
            ))
        }
        other => Err(FpError::Config(format!(
            "unknown preset '{other}' (expected lambda-cantor or overlap-sierpinski)"
        ))),
    }
}

/// Validates the flag combination for one command and fills in defaults.
pub fn normalize(cmd: Command, raw: &RawArgs) -> Result<RunConfig> {
    let (source, mode) = resolve_source(cmd, raw)?;

    let depths = match &raw.depth {
        Some(s) => {
            let (a, b) = parse_depth_range(s)?;
            if cmd == Command::Sweep && a == b {
                // A single sweep depth names the deepest level; the bracket
                // needs a short window below it.
                (a.saturating_sub(4).max(2).min(a), b)
            } else {
                (a, b)
            }
        }
        None => match cmd {
            Command::Sweep => (6, 10),
            _ => source.default_depths(),
        },
    };

    let cap = raw.cap.unwrap_or(DEFAULT_CAP);
    if cap == 0 {
        return Err(FpError::Config("cap must be positive".into()));
    }

    let potential = match (cmd, &raw.potential) {
        (Command::Pressure | Command::Varcheck, Some(s)) => s.parse()?,
        (Command::Pressure | Command::Varcheck, None) => PotentialSpec::Const(0.0),
        (_, Some(_)) => return Err(reject_unused(cmd, "potential", true).unwrap_err()),
        (_, None) => PotentialSpec::Const(0.0),
    };

    let weights = match (cmd, &raw.weights) {
        (Command::Entropy | Command::Varcheck, Some(s)) => Some(parse_weights(s)?),
        (Command::Entropy | Command::Varcheck, None) => None,
        (_, Some(_)) => return Err(reject_unused(cmd, "weights", true).unwrap_err()),
        (_, None) => None,
    };

    if cmd != Command::Dim {
        reject_unused(cmd, "dump-cover", raw.dump_cover.is_some())?;
    }
    if cmd != Command::Sweep {
        reject_unused(cmd, "svg", raw.svg.is_some())?;
    }

    let format = match &raw.out {
        Some(s) => {
            let f: OutFormat = s.parse()?;
            if cmd == Command::Varcheck && f != OutFormat::Json {
                return Err(FpError::Config(
                    "varcheck emits a four-field JSON report; --out csv is not supported".into(),
                ));
            }
            if cmd == Command::Dim && f != OutFormat::Json {
                return Err(FpError::Config(
                    "dim emits a JSON report (use --dump-cover for per-depth CSV)".into(),
                ));
            }
            f
        }
        None => match cmd {
            Command::Sweep | Command::Pressure => {
                if cmd == Command::Sweep {
                    OutFormat::Csv
                } else {
                    OutFormat::Json
                }
            }
            _ => OutFormat::Json,
        },
    };

    Ok(RunConfig {
        command: cmd,
        source,
        mode,
        depths,
        refine: raw.refine.unwrap_or(DEFAULT_REFINE),
        cap,
        threads: raw.threads,
        potential,
        weights,
        format,
        out_path: raw.out_path.clone(),
        dump_cover: raw.dump_cover.clone(),
        svg: raw.svg.clone(),
    })
}

/// Maps parsed top-level args to the normalized configuration plus the
/// `--explain` marker.
pub fn from_cli(cli: &Cli) -> Result<(RunConfig, bool)> {
    let (cmd, raw) = match &cli.command {
        CliCommand::Dim(r) => (Command::Dim, r),
        CliCommand::Pressure(r) => (Command::Pressure, r),
        CliCommand::Entropy(r) => (Command::Entropy, r),
        CliCommand::Varcheck(r) => (Command::Varcheck, r),
        CliCommand::Sweep(r) => (Command::Sweep, r),
    };
    Ok((normalize(cmd, raw)?, raw.explain))
}

impl RunConfig {
    /// Canonical flag rendering: parsing these args yields an equal config.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec![self.command.as_str().to_string()];
        match &self.source {
            IfsSource::LambdaCantor { lambda } => {
                args.push("--preset".into());
                args.push("lambda-cantor".into());
                if self.command != Command::Sweep {
                    args.push("--lambda".into());
                    args.push(lambda.to_string());
                }
            }
            IfsSource::OverlapSierpinski { a1, a2 } => {
                args.push("--preset".into());
                args.push("overlap-sierpinski".into());
                args.push("--a1".into());
                args.push(a1.to_string());
                args.push("--a2".into());
                args.push(a2.to_string());
            }
            IfsSource::File(path) => {
                args.push("--ifs".into());
                args.push(path.display().to_string());
            }
        }
        if let Some(mode) = self.mode {
            args.push("--mode".into());
            args.push(mode.as_str().into());
        }
        args.push("--depth".into());
        args.push(format!("{}..{}", self.depths.0, self.depths.1));
        args.push("--refine".into());
        args.push(self.refine.to_string());
        args.push("--cap".into());
        args.push(self.cap.to_string());
        if let Some(t) = self.threads {
            args.push("--threads".into());
            args.push(t.to_string());
        }
        if matches!(self.command, Command::Pressure | Command::Varcheck) {
            args.push("--potential".into());
            args.push(self.potential.to_string());
        }
        if let Some(ws) = &self.weights {
            let parts: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
            args.push("--weights".into());
            args.push(parts.join(","));
        }
        args.push("--out".into());
        args.push(self.format.as_str().into());
        if let Some(p) = &self.out_path {
            args.push("--out-path".into());
            args.push(p.display().to_string());
        }
        if let Some(p) = &self.dump_cover {
            args.push("--dump-cover".into());
            args.push(p.display().to_string());
        }
        if let Some(p) = &self.svg {
            args.push("--svg".into());
            args.push(p.display().to_string());
        }
        args
    }

    /// Default artifact path when --out-path is absent.
    pub fn artifact_path(&self) -> PathBuf {
        match &self.out_path {
            Some(p) => p.clone(),
            None => PathBuf::from(format!(
                "{}.{}",
                self.command.as_str(),
                self.format.extension()
            )),
        }
    }
}

/// Parses a full argv (binary name excluded) into a normalized config.
pub fn parse_args<I, T>(args: I) -> Result<(RunConfig, bool)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut argv: Vec<std::ffi::OsString> = vec!["fractal-pressure".into()];
    argv.extend(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| FpError::Config(format!("argument error: {e}")))?;
    from_cli(&cli)
}
