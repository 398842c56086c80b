//! Bracketed estimates of the covering pressure, the box-counting exponent,
//! and the dimension root of `t -> P(t·log‖A‖)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FpError, Result};
use crate::grid::{cover_bounds, CoverBounds, GridFrame};
use crate::ifs::{fixed_point, AffineIfs, Word};
use crate::linalg::AxisBox;
use crate::scalar::Scalar;

/// A real potential on ambient space with a declared Lipschitz constant.
///
/// Pressure sums only ever need function values at explicit points plus the
/// declared modulus, so the evaluator works in doubles in both arithmetic
/// modes; geometry (which point to evaluate) stays exact in exact mode.
#[derive(Clone)]
pub struct Potential {
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    lipschitz: f64,
    constant_value: Option<f64>,
    description: String,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("lipschitz", &self.lipschitz)
            .field("constant_value", &self.constant_value)
            .field("description", &self.description)
            .finish()
    }
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Self {
            eval: Arc::new(move |_| c),
            lipschitz: 0.0,
            constant_value: Some(c),
            description: format!("const:{c}"),
        }
    }

    /// `f(x) = Σ coeffs_i · x_i` with a caller-declared Lipschitz constant.
    pub fn linear(coeffs: Vec<f64>, lipschitz: f64) -> Self {
        let description = format!(
            "linear:{}:{lipschitz}",
            coeffs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let constant_value = coeffs.iter().all(|&c| c == 0.0).then_some(0.0);
        Self {
            eval: Arc::new(move |x| x.iter().zip(&coeffs).map(|(xi, c)| xi * c).sum()),
            lipschitz,
            constant_value,
            description,
        }
    }

    pub fn custom(
        eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        lipschitz: f64,
        description: impl Into<String>,
    ) -> Self {
        Self {
            eval,
            lipschitz,
            constant_value: None,
            description: description.into(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant_value
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Spot-checks the declared Lipschitz constant on 10³ seeded random pairs
    /// inside the given box. A violation rejects the potential.
    pub fn validate_in(&self, bounds: &AxisBox<f64>) -> Result<()> {
        if self.constant_value.is_some() {
            return Ok(());
        }
        if !(self.lipschitz >= 0.0) {
            return Err(FpError::PotentialRejected(format!(
                "Lipschitz constant must be non-negative, got {}",
                self.lipschitz
            )));
        }
        let d = bounds.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..d)
                .map(|i| {
                    let (lo, hi) = (bounds.lo[i], bounds.hi[i]);
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        };
        for _ in 0..1000 {
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let dist = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let df = (self.value(&x) - self.value(&y)).abs();
            let allowed = self.lipschitz * dist * (1.0 + 1e-9) + 1e-9;
            if !(df <= allowed) {
                return Err(FpError::PotentialRejected(format!(
                    "|f(x)-f(y)| = {df:.6e} exceeds L·|x-y| = {:.6e} at sampled points",
                    self.lipschitz * dist
                )));
            }
        }
        Ok(())
    }
}

/// Two-sided bound on `sup` of the depth-`n` Birkhoff sum over one cylinder.
#[derive(Clone, Debug)]
pub struct BirkhoffBracket {
    pub word: Word,
    pub low: f64,
    pub high: f64,
}

/// Birkhoff bounds over the cylinder `[u]`.
///
/// The lower value is the genuine Birkhoff sum at the periodic point `u^∞`:
/// term `k` evaluates `f` at the fixed point of the word rotated left by `k`.
/// The upper value replaces each term by `f` at the center of the tail
/// cylinder's box enclosure plus the Lipschitz radius — half the Euclidean
/// diagonal of that enclosure, so no point of the tail set can beat it. The
/// radii telescope to less than `L·diam(K)·r/(1-r)` over the whole word.
pub fn birkhoff_bounds<S: Scalar>(
    ifs: &AffineIfs<S>,
    f: &Potential,
    u: &Word,
) -> Result<BirkhoffBracket> {
    if u.depth() == 0 {
        return Err(FpError::EmptyInput("birkhoff_bounds needs depth >= 1"));
    }
    u.validate(ifs.symbol_count())?;
    let n = u.depth();

    // A constant potential collapses both sides to n·c: every fixed-point
    // term is c and the Lipschitz radii vanish.
    if let Some(c) = f.constant_value {
        let v = c * n as f64;
        return Ok(BirkhoffBracket {
            word: u.clone(),
            low: v,
            high: v,
        });
    }

    let mut low = 0.0f64;
    for k in 0..n {
        let p = fixed_point(&ifs.compose_word(&u.rotate_left(k))?)?;
        let pf: Vec<f64> = p.iter().map(|x| x.to_f64()).collect();
        low += f.value(&pf);
    }

    // Tail enclosures S_{u_{k+1}..u_n}(box_K), built from the innermost map
    // outwards, each one interval image of the previous.
    let mut high = 0.0f64;
    let mut tail = ifs.bounds().clone();
    let mut highs = vec![0.0f64; n];
    for k in (0..n).rev() {
        tail = tail.image(ifs.linear(), ifs.translation(u.0[k]));
        let center: Vec<f64> = tail.center().iter().map(|x| x.to_f64()).collect();
        let radius = f.lipschitz() * tail.diameter_f64() / 2.0;
        highs[k] = f.value(&center) + radius;
    }
    for h in highs {
        high += h;
    }

    // Guard against float asymmetry between the two accumulations.
    let high = high.max(low);
    Ok(BirkhoffBracket {
        word: u.clone(),
        low,
        high,
    })
}

/// `log Σ e^{v_i}`, computed stably as `m + log Σ e^{v_i - m}`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(FpError::EmptyInput("log_sum_exp of no values"));
    }
    if values.len() == 1 {
        return Ok(values[0]);
    }
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Ok(m);
    }
    let sum: f64 = values.iter().map(|v| (v - m).exp()).sum();
    Ok(m + sum.ln())
}

/// Depth-`n` bracket of the covering pressure of `f`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureBracket {
    pub depth: u32,
    pub low: f64,
    pub high: f64,
    /// Outer-cover cells carrying the upper sum.
    pub box_count_used: u64,
    /// Inner-cover cells carrying the lower sum.
    pub witness_cells: u64,
    pub potential: String,
}

/// Bracket of `(1/n)·log Σ_Q sup_Q e^{S_n f}` at one depth.
///
/// Upper side: every outer cell takes the max `birkhoff_bounds(..).high` over
/// words whose cylinder enclosure meets it. Lower side: every witnessed cell
/// takes the best genuine Birkhoff value among the fixed points of
/// depth-`(n+refine)` words landing in it. Constant potentials shortcut to
/// the cover counts, which the definition makes exact.
pub fn pressure_bracket<S: Scalar>(
    ifs: &AffineIfs<S>,
    f: &Potential,
    n: u32,
    refine: u32,
    cap: u64,
) -> Result<PressureBracket> {
    if n == 0 {
        return Err(FpError::Config("pressure depth must be >= 1".into()));
    }
    f.validate_in(&ifs.bounds().to_f64())?;

    if let Some(c) = f.constant_value() {
        let cb = cover_bounds(ifs, n, refine, cap)?;
        return Ok(constant_bracket(&cb, c, f.description()));
    }

    crate::grid::check_cap(ifs.symbol_count(), n + refine, cap)?;
    let frame = GridFrame::new(ifs, n)?;
    let l = ifs.symbol_count();

    // Upper sum over outer cells.
    let count_n = (l as u64).pow(n);
    let zero = S::zero();
    let high_map = par_index_fold(count_n, 2048, HashMap::new, |mut map, i| {
        let u = Word::from_index(i, l, n);
        let bb = birkhoff_bounds(ifs, f, &u).expect("validated word");
        let map_u = ifs.compose_word(&u).expect("validated word");
        let g = frame.to_grid(&map_u.offset);
        let mut cells = Vec::new();
        frame.candidate_keys(&g, &zero, &mut cells);
        for cell in cells {
            max_insert(&mut map, cell, bb.high);
        }
        map
    });

    // Lower sum over witnessed cells: fixed points of deeper words, each
    // contributing the first n rotation terms of its Birkhoff sum.
    let m = n + refine;
    let count_m = (l as u64).pow(m);
    let low_map = par_index_fold(count_m, 2048, HashMap::new, |mut map, i| {
        let w = Word::from_index(i, l, m);
        let p = fixed_point(&ifs.compose_word(&w).expect("validated word")).expect("contraction");
        let y = frame.to_grid(&p);
        let (alpha, certified) = frame.key_from_grid(&y);
        if certified {
            let mut value = 0.0f64;
            for j in 0..n as usize {
                let q = fixed_point(&ifs.compose_word(&w.rotate_left(j)).expect("validated"))
                    .expect("contraction");
                let qf: Vec<f64> = q.iter().map(|x| x.to_f64()).collect();
                value += f.value(&qf);
            }
            max_insert(&mut map, alpha, value);
        }
        map
    });

    let high = lse_over_cells(&high_map)? / n as f64;
    let low = lse_over_cells(&low_map)? / n as f64;
    Ok(PressureBracket {
        depth: n,
        low: low.min(high),
        high,
        box_count_used: high_map.len() as u64,
        witness_cells: low_map.len() as u64,
        potential: f.description().to_string(),
    })
}

fn constant_bracket(cb: &CoverBounds, c: f64, description: &str) -> PressureBracket {
    let n = cb.depth as f64;
    let low = if cb.n_minus() == 0 {
        f64::NEG_INFINITY
    } else {
        (cb.n_minus() as f64).ln() / n + c
    };
    let high = (cb.n_plus() as f64).ln() / n + c;
    PressureBracket {
        depth: cb.depth,
        low,
        high,
        box_count_used: cb.n_plus(),
        witness_cells: cb.n_minus(),
        potential: description.to_string(),
    }
}

fn max_insert(map: &mut HashMap<Vec<BigInt>, f64>, key: Vec<BigInt>, value: f64) {
    map.entry(key)
        .and_modify(|v| *v = v.max(value))
        .or_insert(value);
}

/// Parallel fold over `0..count` in fixed blocks, merged by per-cell max.
/// The merge is order-independent, so the result is schedule-independent.
fn par_index_fold<F>(
    count: u64,
    block: u64,
    init: impl Fn() -> HashMap<Vec<BigInt>, f64> + Sync,
    f: F,
) -> HashMap<Vec<BigInt>, f64>
where
    F: Fn(HashMap<Vec<BigInt>, f64>, u64) -> HashMap<Vec<BigInt>, f64> + Sync,
{
    fn merge_max(
        mut big: HashMap<Vec<BigInt>, f64>,
        small: HashMap<Vec<BigInt>, f64>,
    ) -> HashMap<Vec<BigInt>, f64> {
        for (k, v) in small {
            max_insert(&mut big, k, v);
        }
        big
    }

    let blocks: Vec<(u64, u64)> = (0..count)
        .step_by(block.max(1) as usize)
        .map(|s| (s, (s + block).min(count)))
        .collect();
    blocks
        .par_iter()
        .map(|&(s, e)| (s..e).fold(init(), &f))
        .reduce(HashMap::new, |a, b| {
            if a.len() < b.len() {
                merge_max(b, a)
            } else {
                merge_max(a, b)
            }
        })
}

/// Log-sum-exp over the per-cell values in sorted cell order (bit-stable).
fn lse_over_cells(map: &HashMap<Vec<BigInt>, f64>) -> Result<f64> {
    let mut cells: Vec<(&Vec<BigInt>, &f64)> = map.iter().collect();
    cells.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let values: Vec<f64> = cells.into_iter().map(|(_, v)| *v).collect();
    log_sum_exp(&values)
}

/// Per-depth exponent estimates and the Bowen-equation root bracket.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionReport {
    /// Contraction ratio `‖A‖`.
    pub r: f64,
    pub conformal: bool,
    pub mode: String,
    pub refine: u32,
    pub depths: Vec<u32>,
    pub n_minus: Vec<u64>,
    pub n_plus: Vec<u64>,
    /// `log N± / n` in nats per depth step (defined in every mode).
    pub exponent_lo: Vec<f64>,
    pub exponent_hi: Vec<f64>,
    /// Dimension-form ratio estimates `log N± / (-n log r)`; empty when the
    /// system is not conformal (no dimension claim is made).
    pub ratio_lo: Vec<f64>,
    pub ratio_hi: Vec<f64>,
    /// Dimension-form slope estimates between consecutive depths (averaged
    /// over the inner/outer counts); length is one less than `depths`.
    pub slope: Vec<f64>,
    pub slope_lo: Vec<f64>,
    pub slope_hi: Vec<f64>,
    /// Slope estimate at the largest depth pair (mean of the two counts'
    /// slopes), with the bracket made of the inner- and outer-count slopes.
    pub extrapolated: Option<f64>,
    pub extrapolated_bracket: Option<[f64; 2]>,
    /// `[ratio_lo, ratio_hi]` at the largest depth — the Bowen root bracket.
    pub root_interval: Option<[f64; 2]>,
    /// Root of the affine pressure midpoint found by bisection (cross-check).
    pub bisection_root: Option<f64>,
    /// False when the bracket sequence drifts by more than its widths.
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn validate_range(depth_range: (u32, u32)) -> Result<Vec<u32>> {
    let (a, b) = depth_range;
    if a == 0 {
        return Err(FpError::Config("depth range must start at 1 or above".into()));
    }
    if b < a + 2 {
        return Err(FpError::Config(format!(
            "depth range {a}..{b} must span at least 3 depths"
        )));
    }
    Ok((a..=b).collect())
}

/// Box-counting exponent over a depth range.
///
/// Conformal systems get dimension-form ratios and slopes; non-conformal
/// systems get the nats-per-step exponent only, because the dimension
/// interpretation needs equal singular values.
pub fn box_exponent<S: Scalar>(
    ifs: &AffineIfs<S>,
    depth_range: (u32, u32),
    refine: u32,
    cap: u64,
) -> Result<DimensionReport> {
    let depths = validate_range(depth_range)?;
    let mut n_minus = Vec::with_capacity(depths.len());
    let mut n_plus = Vec::with_capacity(depths.len());
    for &n in &depths {
        let cb = cover_bounds(ifs, n, refine, cap)?;
        n_minus.push(cb.n_minus());
        n_plus.push(cb.n_plus());
    }
    Ok(assemble_report(ifs, refine, depths, n_minus, n_plus))
}

fn assemble_report<S: Scalar>(
    ifs: &AffineIfs<S>,
    refine: u32,
    depths: Vec<u32>,
    n_minus: Vec<u64>,
    n_plus: Vec<u64>,
) -> DimensionReport {
    let r = ifs.ratio();
    let neg_log_r = -r.ln();
    let conformal = ifs.is_conformal();

    let ln_or_neg_inf = |c: u64| {
        if c == 0 {
            f64::NEG_INFINITY
        } else {
            (c as f64).ln()
        }
    };
    let exponent_lo: Vec<f64> = depths
        .iter()
        .zip(&n_minus)
        .map(|(&n, &c)| ln_or_neg_inf(c) / n as f64)
        .collect();
    let exponent_hi: Vec<f64> = depths
        .iter()
        .zip(&n_plus)
        .map(|(&n, &c)| ln_or_neg_inf(c) / n as f64)
        .collect();

    let (ratio_lo, ratio_hi) = if conformal {
        (
            exponent_lo.iter().map(|e| e / neg_log_r).collect(),
            exponent_hi.iter().map(|e| e / neg_log_r).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };

    let slope_of = |counts: &[u64]| -> Vec<f64> {
        counts
            .windows(2)
            .zip(depths.windows(2))
            .map(|(c, d)| {
                let dn = (d[1] - d[0]) as f64;
                (ln_or_neg_inf(c[1]) - ln_or_neg_inf(c[0])) / (dn * neg_log_r)
            })
            .collect()
    };
    let (slope_lo, slope_hi, slope) = if conformal {
        let lo = slope_of(&n_minus);
        let hi = slope_of(&n_plus);
        let mean: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / 2.0).collect();
        (lo, hi, mean)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    let warnings = bracket_drift_warnings(&depths, &exponent_lo, &exponent_hi);
    let converged = warnings.is_empty();

    let extrapolated = slope.last().copied();
    let extrapolated_bracket = match (slope_lo.last(), slope_hi.last()) {
        (Some(&a), Some(&b)) => Some([a, b]),
        _ => None,
    };
    let root_interval = if conformal {
        Some([
            *ratio_lo.last().expect("non-empty range"),
            *ratio_hi.last().expect("non-empty range"),
        ])
    } else {
        None
    };

    DimensionReport {
        r,
        conformal,
        mode: S::mode_name().to_string(),
        refine,
        depths,
        n_minus,
        n_plus,
        exponent_lo,
        exponent_hi,
        ratio_lo,
        ratio_hi,
        slope,
        slope_lo,
        slope_hi,
        extrapolated,
        extrapolated_bracket,
        root_interval,
        bisection_root: None,
        converged,
        warnings,
    }
}

/// Flags non-Cauchy behaviour in a bracket sequence: warnings are produced
/// whenever consecutive midpoints drift apart by more than the sum of the
/// bracket half-widths (or a bracket is one-sided). Empty means converging.
pub fn bracket_drift_warnings(depths: &[u32], lows: &[f64], highs: &[f64]) -> Vec<String> {
    let mut warnings = Vec::new();
    for i in 1..lows.len() {
        if !lows[i].is_finite() || !lows[i - 1].is_finite() {
            warnings.push(format!(
                "empty inner cover at depth {} leaves the bracket one-sided",
                depths[i]
            ));
            continue;
        }
        let mid_prev = (lows[i - 1] + highs[i - 1]) / 2.0;
        let mid = (lows[i] + highs[i]) / 2.0;
        let half_widths = (highs[i - 1] - lows[i - 1]) / 2.0 + (highs[i] - lows[i]) / 2.0;
        if (mid - mid_prev).abs() > half_widths + 1e-12 {
            warnings.push(format!(
                "bracket midpoint drifted by {:.3e} between depths {} and {}, more than the \
                 combined half-widths {:.3e}",
                (mid - mid_prev).abs(),
                depths[i - 1],
                depths[i],
                half_widths
            ));
        }
    }
    warnings
}

/// Dimension report through Bowen's equation `P(t·log r) = 0`.
///
/// For a constant-ratio conformal system the pressure is affine in `t`:
/// `P(t·log r) = P(0) + t·log r`, so the depth-`n` bracket of `P(0)` maps
/// directly onto a root bracket. A bisection on the bracket midpoint is run
/// as an independent cross-check and must agree within the bracket width.
pub fn bowen_root<S: Scalar>(
    ifs: &AffineIfs<S>,
    depth_range: (u32, u32),
    refine: u32,
    cap: u64,
) -> Result<DimensionReport> {
    if !ifs.is_conformal() {
        return Err(FpError::NonConformal(
            "Bowen-root dimension needs A·Aᵀ = r²·I; only the box-counting exponent in nats \
             is defined for this system"
                .into(),
        ));
    }
    let mut report = box_exponent(ifs, depth_range, refine, cap)?;
    let [root_lo, root_hi] = report.root_interval.expect("conformal report");

    // Bisection cross-check on the affine midpoint pressure at max depth.
    let n = *report.depths.last().expect("non-empty") as f64;
    let nm = *report.n_minus.last().expect("non-empty");
    let np = *report.n_plus.last().expect("non-empty");
    if nm > 0 {
        let c0 = ((nm as f64).ln() + (np as f64).ln()) / (2.0 * n);
        let log_r = report.r.ln();
        let phi = |t: f64| c0 + t * log_r;
        let (mut a, mut b) = (0.0f64, root_hi + 1.0);
        debug_assert!(phi(a) >= 0.0 && phi(b) < 0.0);
        let mut iterations = 0;
        while b - a > 1e-9 && iterations < 200 {
            let mid = (a + b) / 2.0;
            if phi(mid) >= 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            iterations += 1;
        }
        let t_bis = (a + b) / 2.0;
        let closed_form_mid = (root_lo + root_hi) / 2.0;
        let width = root_hi - root_lo;
        if (t_bis - closed_form_mid).abs() > width / 2.0 + 1e-6 {
            report.warnings.push(format!(
                "bisection root {t_bis:.9} disagrees with the closed-form midpoint \
                 {closed_form_mid:.9} beyond the bracket width"
            ));
            report.converged = false;
        }
        report.bisection_root = Some(t_bis);
    } else {
        report
            .warnings
            .push("empty inner cover at max depth; bisection cross-check skipped".into());
        report.converged = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::DEFAULT_WORD_CAP;
    use crate::linalg::Matrix;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn cantor(lambda: BigRational) -> AffineIfs<BigRational> {
        AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 3)]]).unwrap(),
            vec![vec![rat(0, 1)], vec![lambda / rat(3, 1)], vec![rat(2, 3)]],
        )
        .unwrap()
    }

    fn single_map() -> AffineIfs<BigRational> {
        AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn log_sum_exp_examples() {
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[3.25]).unwrap(), 3.25);
        let v = [1.0f64.ln(), 2.0f64.ln(), 3.0f64.ln()];
        assert!((log_sum_exp(&v).unwrap() - 6.0f64.ln()).abs() < 1e-12);
        assert!(matches!(
            log_sum_exp(&[]),
            Err(FpError::EmptyInput(_))
        ));
        // Large offsets must not overflow.
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v).unwrap() - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_constant_is_exact() {
        let ifs = cantor(rat(1, 2));
        let f = Potential::constant(0.7);
        for depth in 1..=5 {
            let u = Word(vec![1; depth]);
            let bb = birkhoff_bounds(&ifs, &f, &u).unwrap();
            assert!((bb.low - 0.7 * depth as f64).abs() < 1e-12);
            assert!((bb.high - bb.low).abs() < 1e-12);
        }
    }

    #[test]
    fn birkhoff_identity_potential_brackets_the_sup() {
        // f(x) = x on the full interval, word "3": sup over the cylinder is 1.
        let ifs = cantor(rat(1, 1));
        let f = Potential::linear(vec![1.0], 1.0);
        let bb = birkhoff_bounds(&ifs, &f, &Word(vec![2])).unwrap();
        assert!(bb.low <= 1.0 + 1e-12);
        assert!(bb.high >= 1.0 - 1e-9);
        assert!(bb.high <= 1.5 + 1e-12); // 1 + L·r·diam/(1-r) = 1.5
        assert!((bb.low - 1.0).abs() < 1e-12); // fixed point of S_3 is 1

        // Brute-force the sup over depth-7 refinements of the cylinder.
        let mut sup = f64::NEG_INFINITY;
        for i in 0..3u32.pow(6) {
            let mut w = vec![2u32];
            let mut v = i;
            for _ in 0..6 {
                w.push(v % 3);
                v /= 3;
            }
            let p = fixed_point(&ifs.compose_word(&Word(w)).unwrap()).unwrap();
            sup = sup.max(p[0].to_f64());
        }
        assert!(bb.high >= sup - 1e-9);
    }

    #[test]
    fn birkhoff_on_degenerate_attractor() {
        let ifs = single_map();
        let f = Potential::linear(vec![1.0], 1.0);
        let bb = birkhoff_bounds(&ifs, &f, &Word(vec![0])).unwrap();
        assert!(bb.low.abs() < 1e-12);
        assert!(bb.high.abs() < 1e-12);
    }

    #[test]
    fn birkhoff_distortion_stays_below_the_geometric_tail() {
        // high - low ≤ L·diam(K)·r/(1-r) on seeded random words, including
        // the all-first-symbol words that stress the centering term.
        let ifs = cantor(rat(1, 2));
        let f = Potential::linear(vec![1.0], 1.0);
        let budget = 1.0 * 1.0 * (1.0 / 3.0) / (2.0 / 3.0) + 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for depth in 1..=9usize {
            let all_zeros = Word(vec![0; depth]);
            let bb = birkhoff_bounds(&ifs, &f, &all_zeros).unwrap();
            assert!(bb.high - bb.low <= budget, "all-zeros depth {depth}");
            for _ in 0..20 {
                let w = Word((0..depth).map(|_| rng.gen_range(0..3u32)).collect());
                let bb = birkhoff_bounds(&ifs, &f, &w).unwrap();
                assert!(bb.low <= bb.high);
                assert!(bb.high - bb.low <= budget, "word {w:?}");
            }
        }
    }

    #[test]
    fn birkhoff_rejects_empty_word() {
        let ifs = cantor(rat(0, 1));
        let f = Potential::constant(0.0);
        assert!(matches!(
            birkhoff_bounds(&ifs, &f, &Word::empty()),
            Err(FpError::EmptyInput(_))
        ));
    }

    #[test]
    fn pressure_full_interval_is_log_three() {
        let ifs = cantor(rat(1, 1));
        let f = Potential::constant(0.0);
        let pb = pressure_bracket(&ifs, &f, 2, 2, DEFAULT_WORD_CAP).unwrap();
        assert!((pb.low - 3.0f64.ln()).abs() < 1e-12);
        assert!((pb.high - 3.0f64.ln()).abs() < 1e-12);
        assert_eq!(pb.box_count_used, 9);
    }

    #[test]
    fn pressure_constant_shift_identity() {
        let ifs = cantor(rat(1, 2));
        for n in 4..=8u32 {
            let base = pressure_bracket(&ifs, &Potential::constant(0.0), n, 2, DEFAULT_WORD_CAP)
                .unwrap();
            for c in [-1.0, 0.5, 2.0] {
                let shifted =
                    pressure_bracket(&ifs, &Potential::constant(c), n, 2, DEFAULT_WORD_CAP)
                        .unwrap();
                assert!((shifted.low - (base.low + c)).abs() <= 1e-9, "low at n={n} c={c}");
                assert!(
                    (shifted.high - (base.high + c)).abs() <= 1e-9,
                    "high at n={n} c={c}"
                );
            }
        }
    }

    #[test]
    fn pressure_single_map_is_zero() {
        let ifs = single_map();
        let f = Potential::constant(0.0);
        for n in 1..=6 {
            let pb = pressure_bracket(&ifs, &f, n, 0, DEFAULT_WORD_CAP).unwrap();
            assert_eq!(pb.low, 0.0);
            assert_eq!(pb.high, 0.0);
        }
    }

    #[test]
    fn nonconstant_path_agrees_with_counts_for_zero_potential() {
        // A linear potential with a zero coefficient is constant 0 but takes
        // the word-enumeration path when we hide that fact.
        let ifs = cantor(rat(1, 2));
        let f = Potential::custom(Arc::new(|_| 0.0), 0.0, "zero");
        let n = 5;
        let pb = pressure_bracket(&ifs, &f, n, 2, DEFAULT_WORD_CAP).unwrap();
        let cb = cover_bounds(&ifs, n, 2, DEFAULT_WORD_CAP).unwrap();
        assert!((pb.high - (cb.n_plus() as f64).ln() / n as f64).abs() < 1e-12);
        assert!((pb.low - (cb.n_minus() as f64).ln() / n as f64).abs() < 1e-12);
        assert_eq!(pb.box_count_used, cb.n_plus());
        assert_eq!(pb.witness_cells, cb.n_minus());
    }

    #[test]
    fn pressure_bracket_valid_for_lipschitz_potential() {
        let ifs = cantor(rat(1, 2));
        let f = Potential::linear(vec![1.0], 1.0);
        for n in [4u32, 6, 8] {
            let pb = pressure_bracket(&ifs, &f, n, 0, DEFAULT_WORD_CAP).unwrap();
            assert!(pb.low <= pb.high, "bracket inverted at depth {n}");
            // Distortion ceiling: width bounded by the f=0 width plus the
            // Lipschitz tail L·diam·r/(1-r)/n.
            let f0 = pressure_bracket(&ifs, &Potential::constant(0.0), n, 0, DEFAULT_WORD_CAP)
                .unwrap();
            let ceiling = (f0.high - f0.low) + 1.0 * 1.0 * 0.5 / n as f64 + 1e-9;
            assert!(
                pb.high - pb.low <= ceiling,
                "width {} above ceiling {} at depth {n}",
                pb.high - pb.low,
                ceiling
            );
        }
    }

    #[test]
    fn potential_validation_rejects_understated_lipschitz() {
        let ifs = cantor(rat(1, 1));
        let f = Potential::linear(vec![2.0], 0.5);
        let err = pressure_bracket(&ifs, &f, 2, 0, DEFAULT_WORD_CAP).unwrap_err();
        assert!(matches!(err, FpError::PotentialRejected(_)));
    }

    #[test]
    fn box_exponent_full_interval_is_dimension_one() {
        let ifs = cantor(rat(1, 1));
        let rep = box_exponent(&ifs, (2, 6), 2, DEFAULT_WORD_CAP).unwrap();
        for (lo, hi) in rep.ratio_lo.iter().zip(&rep.ratio_hi) {
            assert!((lo - 1.0).abs() < 1e-9);
            assert!((hi - 1.0).abs() < 1e-9);
        }
        for s in &rep.slope {
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!(rep.converged);
    }

    #[test]
    fn box_exponent_single_map_is_zero() {
        let ifs = single_map();
        let rep = box_exponent(&ifs, (2, 5), 0, DEFAULT_WORD_CAP).unwrap();
        assert!(rep.exponent_lo.iter().all(|&x| x == 0.0));
        assert!(rep.exponent_hi.iter().all(|&x| x == 0.0));
        assert_eq!(rep.root_interval, Some([0.0, 0.0]));
    }

    #[test]
    fn bowen_root_middle_third_cantor() {
        let ifs = cantor(rat(0, 1));
        let rep = bowen_root(&ifs, (4, 8), 2, DEFAULT_WORD_CAP).unwrap();
        let target = 2.0f64.ln() / 3.0f64.ln();
        let [lo, hi] = rep.root_interval.unwrap();
        assert!(lo <= target + 1e-9, "low {lo} above target");
        assert!(hi >= target - 1e-9, "high {hi} below target");
        assert!((rep.extrapolated.unwrap() - target).abs() < 0.02);
        let bis = rep.bisection_root.unwrap();
        assert!(bis >= lo - 1e-6 && bis <= hi + 1e-6);
        assert!(rep.converged, "warnings: {:?}", rep.warnings);
    }

    #[test]
    fn bowen_root_refuses_nonconformal() {
        let ifs = AffineIfs::new(
            Matrix::from_rows(vec![
                vec![rat(1, 2), rat(0, 1)],
                vec![rat(0, 1), rat(1, 3)],
            ])
            .unwrap(),
            vec![vec![rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 3)]],
        )
        .unwrap();
        assert!(matches!(
            bowen_root(&ifs, (2, 4), 0, DEFAULT_WORD_CAP),
            Err(FpError::NonConformal(_))
        ));
        // The exponent report still works, in nats, without dimension claims.
        let rep = box_exponent(&ifs, (2, 4), 0, DEFAULT_WORD_CAP).unwrap();
        assert!(rep.ratio_lo.is_empty());
        assert!(rep.root_interval.is_none());
        assert!(!rep.exponent_hi.is_empty());
    }

    #[test]
    fn depth_range_must_span_three_depths() {
        let ifs = cantor(rat(0, 1));
        assert!(matches!(
            box_exponent(&ifs, (4, 5), 0, DEFAULT_WORD_CAP),
            Err(FpError::Config(_))
        ));
        assert!(matches!(
            box_exponent(&ifs, (0, 4), 0, DEFAULT_WORD_CAP),
            Err(FpError::Config(_))
        ));
    }
}
