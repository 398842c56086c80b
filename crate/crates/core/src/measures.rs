//! The measure side of the variational principle: Bernoulli measures, the
//! grid-limit projection entropy estimator, the log-sum inequality, and the
//! separated-family construction that certifies entropy lower bounds.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FpError, Result};
use crate::grid::{check_cap, GridFrame};
use crate::ifs::{fixed_point, AffineIfs, Word};
use crate::pressure::{birkhoff_bounds, log_sum_exp, pressure_bracket, Potential};
use crate::scalar::Scalar;

/// Words processed per parallel block. Fixed so that partial sums merge in a
/// schedule-independent order (bitwise-deterministic float accumulation).
const BLOCK: u64 = 4096;

/// A Bernoulli (product) measure on the symbol space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliMeasure {
    weights: Vec<f64>,
}

impl BernoulliMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(FpError::EmptyInput("Bernoulli measure needs weights"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(FpError::Config(
                "Bernoulli weights must be non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FpError::Config(format!(
                "Bernoulli weights sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(symbol_count: u32) -> Self {
        Self {
            weights: vec![1.0 / symbol_count as f64; symbol_count as usize],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Π p_{u_k}` — the measure of the cylinder `[u]`.
    pub fn cylinder_weight(&self, u: &Word) -> f64 {
        u.0.iter().map(|&s| self.weights[s as usize]).product()
    }

    /// The induced measure on the alphabet of depth-`k` words (lexicographic
    /// order, matching the power system's map order).
    pub fn power(&self, k: u32) -> Result<Self> {
        let l = self.weights.len() as u32;
        let count = (l as u64)
            .checked_pow(k)
            .ok_or_else(|| FpError::Config("power alphabet overflows".into()))?;
        let weights = (0..count)
            .map(|i| self.cylinder_weight(&Word::from_index(i, l, k)))
            .collect();
        Ok(Self { weights })
    }
}

/// `−Σ p_i log p_i` in nats; zero-weight terms contribute nothing.
pub fn classical_entropy(p: &BernoulliMeasure) -> f64 {
    entropy_of(&p.weights)
}

fn entropy_of(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// Both sides of the log-sum inequality plus the Gibbs weights that attain
/// equality.
#[derive(Clone, Debug)]
pub struct LogSumCheck {
    /// `Σ p_i (a_i − log p_i)`.
    pub lhs: f64,
    /// `log Σ e^{a_i}`.
    pub rhs: f64,
    /// `e^{a_i} / Σ e^{a_j}`.
    pub gibbs: Vec<f64>,
}

pub fn log_sum_check(p: &[f64], a: &[f64]) -> Result<LogSumCheck> {
    if p.len() != a.len() {
        return Err(FpError::Config(format!(
            "log_sum_check dimension mismatch: {} weights vs {} values",
            p.len(),
            a.len()
        )));
    }
    let p = BernoulliMeasure::new(p.to_vec())?;
    let rhs = log_sum_exp(a)?;
    let lhs: f64 = p
        .weights
        .iter()
        .zip(a)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &ai)| pi * (ai - pi.ln()))
        .sum();
    let gibbs = a.iter().map(|&ai| (ai - rhs).exp()).collect();
    assert!(
        lhs <= rhs + 1e-12,
        "log-sum inequality violated: {lhs} > {rhs}"
    );
    Ok(LogSumCheck { lhs, rhs, gibbs })
}

/// Projection-entropy estimate at one depth, with pushforward diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub depth: u32,
    /// `H(pushforward)/n` in nats.
    pub value: f64,
    /// `−Σ p_i log p_i` — the ceiling the projection cannot exceed.
    pub h_classical: f64,
    /// Number of grid cells carrying positive mass.
    pub mass_cells: u64,
    /// Mass assigned from points within tolerance of a cell boundary.
    pub boundary_mass: f64,
    /// Set when more than 1% of mass is boundary-placed: the deterministic
    /// cell assignment is then a convention, and the estimate less reliable.
    pub boundary_warning: bool,
}

/// Pushes each depth-`n` cylinder's weight onto the grid cell of the
/// cylinder's fixed point and returns `H` of the result divided by `n`.
pub fn projection_entropy_estimate<S: Scalar>(
    ifs: &AffineIfs<S>,
    p: &BernoulliMeasure,
    n: u32,
    cap: u64,
) -> Result<EntropyEstimate> {
    if p.len() != ifs.symbol_count() as usize {
        return Err(FpError::Config(format!(
            "measure has {} weights for {} maps",
            p.len(),
            ifs.symbol_count()
        )));
    }
    if n == 0 {
        return Err(FpError::Config("entropy depth must be >= 1".into()));
    }
    check_cap(ifs.symbol_count(), n, cap)?;
    let frame = GridFrame::new(ifs, n)?;
    let l = ifs.symbol_count();
    let count = (l as u64).pow(n);

    // Fixed blocks, merged in index order: same bits for any thread count.
    let blocks: Vec<(u64, u64)> = (0..count)
        .step_by(BLOCK as usize)
        .map(|s| (s, (s + BLOCK).min(count)))
        .collect();
    let partials: Vec<(HashMap<Vec<BigInt>, f64>, f64)> = blocks
        .par_iter()
        .map(|&(s, e)| {
            let mut mass: HashMap<Vec<BigInt>, f64> = HashMap::new();
            let mut boundary = 0.0f64;
            for i in s..e {
                let u = Word::from_index(i, l, n);
                let w = p.cylinder_weight(&u);
                if w == 0.0 {
                    continue;
                }
                let point = fixed_point(&ifs.compose_word(&u).expect("valid word"))
                    .expect("contracting");
                let y = frame.to_grid(&point);
                let (alpha, _, on_boundary) = frame.key_with_boundary(&y);
                *mass.entry(alpha).or_insert(0.0) += w;
                if on_boundary {
                    boundary += w;
                }
            }
            (mass, boundary)
        })
        .collect();

    let mut mass: HashMap<Vec<BigInt>, f64> = HashMap::new();
    let mut boundary_mass = 0.0f64;
    for (block_mass, block_boundary) in partials {
        for (k, v) in block_mass {
            *mass.entry(k).or_insert(0.0) += v;
        }
        boundary_mass += block_boundary;
    }

    let mut cells: Vec<(Vec<BigInt>, f64)> = mass.into_iter().collect();
    cells.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let h: f64 = -cells
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(_, m)| m * m.ln())
        .sum::<f64>();

    Ok(EntropyEstimate {
        depth: n,
        value: h / n as f64,
        h_classical: classical_entropy(p),
        mass_cells: cells.len() as u64,
        boundary_mass,
        boundary_warning: boundary_mass > 0.01,
    })
}

/// Brackets `∫ f∘π dm`: the cylinder-weighted sum of `f` at cylinder fixed
/// points, with the Lipschitz error bar `±L·rⁿ·diam(K)`.
pub fn integral_estimate<S: Scalar>(
    ifs: &AffineIfs<S>,
    p: &BernoulliMeasure,
    f: &Potential,
    n: u32,
    cap: u64,
) -> Result<(f64, f64)> {
    if p.len() != ifs.symbol_count() as usize {
        return Err(FpError::Config(format!(
            "measure has {} weights for {} maps",
            p.len(),
            ifs.symbol_count()
        )));
    }
    check_cap(ifs.symbol_count(), n, cap)?;
    f.validate_in(&ifs.bounds().to_f64())?;
    let l = ifs.symbol_count();
    let count = (l as u64).pow(n);

    let blocks: Vec<(u64, u64)> = (0..count)
        .step_by(BLOCK as usize)
        .map(|s| (s, (s + BLOCK).min(count)))
        .collect();
    let partials: Vec<f64> = blocks
        .par_iter()
        .map(|&(s, e)| {
            let mut sum = 0.0f64;
            for i in s..e {
                let u = Word::from_index(i, l, n);
                let w = p.cylinder_weight(&u);
                if w == 0.0 {
                    continue;
                }
                let point = fixed_point(&ifs.compose_word(&u).expect("valid word"))
                    .expect("contracting");
                let pf: Vec<f64> = point.iter().map(|x| x.to_f64()).collect();
                sum += w * f.value(&pf);
            }
            sum
        })
        .collect();
    let value: f64 = partials.iter().sum();
    let err = f.lipschitz() * ifs.ratio().powi(n as i32) * ifs.diameter();
    Ok((value - err, value + err))
}

/// `pressure_bracket(f, n).high − (entropy estimate + ∫f low)` — the slack
/// the variational principle predicts to be nonnegative up to the
/// estimators' error terms.
pub fn variational_gap<S: Scalar>(
    ifs: &AffineIfs<S>,
    p: &BernoulliMeasure,
    f: &Potential,
    n: u32,
    refine: u32,
    cap: u64,
) -> Result<f64> {
    let upper = pressure_bracket(ifs, f, n, refine, cap)?.high;
    let entropy = projection_entropy_estimate(ifs, p, n, cap)?;
    let (int_low, _) = integral_estimate(ifs, p, f, n, cap)?;
    Ok(upper - (entropy.value + int_low))
}

/// A family of depth-`n` words with pairwise disjoint cylinder enclosures,
/// Gibbs weights, and the entropy lower bound they certify.
#[derive(Clone, Debug)]
pub struct SeparatedFamily {
    pub depth: u32,
    pub words: Vec<Word>,
    /// Gibbs weights `∝ e^{birkhoff_high}` over `words`.
    pub weights: Vec<f64>,
    /// `(1/n)·[H(weights) + Σ w·birkhoff_low]` — a lower bound for the
    /// variational supremum, valid because the kept cylinders are disjoint.
    pub certified_lower: f64,
    /// The grid cell each kept word was selected for.
    pub cells: Vec<Vec<BigInt>>,
    /// Words dropped by the final pairwise disjointness verification.
    pub dropped: Vec<String>,
}

struct CellCandidate<S: Scalar> {
    high: f64,
    low: f64,
    dist2: S,
    word: Word,
    enc_lo: Vec<S>,
    enc_hi: Vec<S>,
}

struct FamilyBuild {
    family: SeparatedFamily,
    /// Per-cell max Birkhoff high over every outer cell (for packing ratios).
    cellmax: Vec<(Vec<BigInt>, f64)>,
}

/// Greedy separated family plus the full per-cell max map.
fn build_family<S: Scalar>(
    ifs: &AffineIfs<S>,
    f: &Potential,
    n: u32,
    cap: u64,
) -> Result<FamilyBuild> {
    if n == 0 {
        return Err(FpError::Config("family depth must be >= 1".into()));
    }
    check_cap(ifs.symbol_count(), n, cap)?;
    f.validate_in(&ifs.bounds().to_f64())?;
    let frame = GridFrame::new(ifs, n)?;
    let l = ifs.symbol_count();
    let count = (l as u64).pow(n);
    let d = ifs.dim();
    let tol = S::grid_tol();
    let one = S::one();
    let two = S::from_i64(2);
    let half = S::from_rational(1, 2);

    let mut best: HashMap<Vec<BigInt>, CellCandidate<S>> = HashMap::new();
    let mut cellmax: HashMap<Vec<BigInt>, f64> = HashMap::new();
    let mut cells_buf: Vec<Vec<BigInt>> = Vec::new();
    for i in 0..count {
        let u = Word::from_index(i, l, n);
        let bb = birkhoff_bounds(ifs, f, &u)?;
        let g = frame.to_grid(&ifs.compose_word(&u)?.offset);
        let enc_lo: Vec<S> = (0..d)
            .map(|i| frame.box_lo()[i].clone() + g[i].clone())
            .collect();
        let enc_hi: Vec<S> = (0..d)
            .map(|i| frame.box_hi()[i].clone() + g[i].clone())
            .collect();
        cells_buf.clear();
        frame.candidate_keys(&g, &S::zero(), &mut cells_buf);
        for cell in &cells_buf {
            cellmax
                .entry(cell.clone())
                .and_modify(|v| *v = v.max(bb.high))
                .or_insert(bb.high);

            // The kept word's enclosure must fit the cell's 1-neighborhood.
            let fits = (0..d).all(|i| {
                let a = S::from_bigint(&cell[i]);
                let lo_ok = enc_lo[i]
                    .cmp_total(&(a.clone() - one.clone() - tol.clone()))
                    .is_ge();
                let hi_ok = enc_hi[i]
                    .cmp_total(&(a + two.clone() + tol.clone()))
                    .is_le();
                lo_ok && hi_ok
            });
            if !fits {
                continue;
            }
            let mut dist2 = S::zero();
            for i in 0..d {
                let cell_center = S::from_bigint(&cell[i]) + half.clone();
                let enc_center =
                    (enc_lo[i].clone() + enc_hi[i].clone()) * half.clone();
                let diff = enc_center - cell_center;
                dist2 = dist2 + diff.clone() * diff;
            }
            let candidate = CellCandidate {
                high: bb.high,
                low: bb.low,
                dist2,
                word: u.clone(),
                enc_lo: enc_lo.clone(),
                enc_hi: enc_hi.clone(),
            };
            match best.get(cell) {
                Some(held) if !prefer(&candidate, held) => {}
                _ => {
                    best.insert(cell.clone(), candidate);
                }
            }
        }
    }

    let mut cellmax: Vec<(Vec<BigInt>, f64)> = cellmax.into_iter().collect();
    cellmax.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    if best.is_empty() {
        // Degenerate geometry: fall back to the single best word overall.
        let mut best_word: Option<(f64, f64, Word)> = None;
        for i in 0..count {
            let u = Word::from_index(i, l, n);
            let bb = birkhoff_bounds(ifs, f, &u)?;
            let better = match &best_word {
                None => true,
                Some((high, _, w)) => {
                    bb.high > *high || (bb.high == *high && u.0 < w.0)
                }
            };
            if better {
                best_word = Some((bb.high, bb.low, u));
            }
        }
        let (_, low, word) = best_word.expect("at least one word");
        let p = fixed_point(&ifs.compose_word(&word)?)?;
        let (alpha, _) = frame.key_from_grid(&frame.to_grid(&p));
        let family = SeparatedFamily {
            depth: n,
            words: vec![word],
            weights: vec![1.0],
            certified_lower: low / n as f64,
            cells: vec![alpha],
            dropped: Vec::new(),
        };
        return Ok(FamilyBuild { family, cellmax });
    }

    // Greedy pass: highest value first (grid-key order on ties), discarding
    // everything Chebyshev-adjacent to a selected cell.
    let mut order: Vec<(&Vec<BigInt>, &CellCandidate<S>)> = best.iter().collect();
    order.sort_unstable_by(|a, b| {
        b.1.high
            .total_cmp(&a.1.high)
            .then_with(|| a.0.cmp(b.0))
    });
    let mut selected_set: HashSet<Vec<BigInt>> = HashSet::new();
    let mut selected: Vec<(&Vec<BigInt>, &CellCandidate<S>)> = Vec::new();
    let offsets = chebyshev_offsets(d);
    'cells: for (cell, cand) in order {
        for off in &offsets {
            let neighbor: Vec<BigInt> = cell
                .iter()
                .zip(off)
                .map(|(a, o)| a + BigInt::from(*o))
                .collect();
            if selected_set.contains(&neighbor) {
                continue 'cells;
            }
        }
        selected_set.insert(cell.clone());
        selected.push((cell, cand));
    }

    // Verification pass: pairwise closed-enclosure disjointness, dropping
    // violators (keeps the certificate sound independent of the greedy).
    // Every depth-n enclosure is a translate of the same box, so only kept
    // boxes whose axis-0 infima sit within one box width (plus tolerance) of
    // the candidate's can fail axis-0 separation; an ordered index over the
    // kept infima prunes everything else without changing which words the
    // sequential scan keeps.
    let width0 = frame.box_hi()[0].clone() - frame.box_lo()[0].clone();
    let mut kept: Vec<(&Vec<BigInt>, &CellCandidate<S>)> = Vec::new();
    let mut kept_by_lo0: BTreeMap<OrdKey<S>, Vec<usize>> = BTreeMap::new();
    let mut dropped = Vec::new();
    for (cell, cand) in selected {
        let window = width0.clone() + tol.clone();
        let from = OrdKey(cand.enc_lo[0].clone() - window.clone());
        let to = OrdKey(cand.enc_lo[0].clone() + window);
        let clash = kept_by_lo0.range(from..=to).any(|(_, ids)| {
            ids.iter().any(|&i| {
                let k = kept[i].1;
                !boxes_disjoint(&cand.enc_lo, &cand.enc_hi, &k.enc_lo, &k.enc_hi, &tol)
            })
        });
        if clash {
            dropped.push(format!(
                "word {} dropped: enclosure overlaps a kept cylinder",
                cand.word
            ));
        } else {
            kept_by_lo0
                .entry(OrdKey(cand.enc_lo[0].clone()))
                .or_default()
                .push(kept.len());
            kept.push((cell, cand));
        }
    }

    let highs: Vec<f64> = kept.iter().map(|(_, c)| c.high).collect();
    let lse = log_sum_exp(&highs)?;
    let weights: Vec<f64> = highs.iter().map(|h| (h - lse).exp()).collect();
    let h = entropy_of(&weights);
    let mean_low: f64 = weights
        .iter()
        .zip(kept.iter())
        .map(|(w, (_, c))| w * c.low)
        .sum();
    let family = SeparatedFamily {
        depth: n,
        words: kept.iter().map(|(_, c)| c.word.clone()).collect(),
        weights,
        certified_lower: (h + mean_low) / n as f64,
        cells: kept.iter().map(|(cell, _)| (*cell).clone()).collect(),
        dropped,
    };
    Ok(FamilyBuild { family, cellmax })
}

/// Strict preference order for the word kept in a cell: higher Birkhoff
/// value, then enclosure center closest to the cell center, then lex order.
fn prefer<S: Scalar>(a: &CellCandidate<S>, b: &CellCandidate<S>) -> bool {
    a.high
        .total_cmp(&b.high)
        .then_with(|| b.dist2.cmp_total(&a.dist2))
        .then_with(|| b.word.0.cmp(&a.word.0))
        .is_gt()
}

fn chebyshev_offsets(d: usize) -> Vec<Vec<i8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * 3);
        for stem in &out {
            for o in [-1i8, 0, 1] {
                let mut v = stem.clone();
                v.push(o);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Total-order wrapper over a scalar, for ordered indexing of box infima.
struct OrdKey<S: Scalar>(S);

impl<S: Scalar> PartialEq for OrdKey<S> {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp_total(&other.0) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for OrdKey<S> {}
impl<S: Scalar> PartialOrd for OrdKey<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for OrdKey<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_total(&other.0)
    }
}

/// Closed boxes are disjoint when some axis separates them strictly (beyond
/// tolerance in float mode; exact mode demands a positive gap).
fn boxes_disjoint<S: Scalar>(
    a_lo: &[S],
    a_hi: &[S],
    b_lo: &[S],
    b_hi: &[S],
    tol: &S,
) -> bool {
    (0..a_lo.len()).any(|i| {
        (a_hi[i].clone() + tol.clone()).cmp_total(&b_lo[i]).is_lt()
            || (b_hi[i].clone() + tol.clone()).cmp_total(&a_lo[i]).is_lt()
    })
}

pub fn separated_family<S: Scalar>(
    ifs: &AffineIfs<S>,
    f: &Potential,
    n: u32,
    cap: u64,
) -> Result<SeparatedFamily> {
    Ok(build_family(ifs, f, n, cap)?.family)
}

/// Mass ratio retained by the separated family: `Σ_{selected cells} max
/// e^{birkhoff_high}` over the same sum across every outer cell. The greedy
/// construction is checked elsewhere against the `7^{−d}` floor.
pub fn packing_efficiency<S: Scalar>(
    ifs: &AffineIfs<S>,
    f: &Potential,
    n: u32,
    cap: u64,
) -> Result<f64> {
    let build = build_family(ifs, f, n, cap)?;
    let all: Vec<f64> = build.cellmax.iter().map(|(_, v)| *v).collect();
    let lookup: HashMap<&Vec<BigInt>, f64> =
        build.cellmax.iter().map(|(k, v)| (k, *v)).collect();
    let picked: Vec<f64> = build
        .family
        .cells
        .iter()
        .filter_map(|c| lookup.get(c).copied())
        .collect();
    if picked.is_empty() {
        return Ok(0.0);
    }
    Ok((log_sum_exp(&picked)? - log_sum_exp(&all)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::DEFAULT_WORD_CAP;
    use crate::linalg::Matrix;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn two_map_separated() -> AffineIfs<BigRational> {
        AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 3)]]).unwrap(),
            vec![vec![rat(0, 1)], vec![rat(2, 3)]],
        )
        .unwrap()
    }

    #[test]
    fn bernoulli_validation() {
        assert!(BernoulliMeasure::new(vec![0.5, 0.5]).is_ok());
        assert!(BernoulliMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(BernoulliMeasure::new(vec![-0.1, 1.1]).is_err());
        assert!(BernoulliMeasure::new(vec![]).is_err());
        let p = BernoulliMeasure::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(p.cylinder_weight(&Word(vec![0, 1, 2])), 0.5 * 0.25 * 0.25);
        assert_eq!(p.cylinder_weight(&Word::empty()), 1.0);
    }

    #[test]
    fn bernoulli_power_is_product_in_lex_order() {
        let p = BernoulliMeasure::new(vec![0.7, 0.3]).unwrap();
        let p2 = p.power(2).unwrap();
        let expect = [0.49, 0.21, 0.21, 0.09];
        for (w, e) in p2.weights().iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn classical_entropy_examples() {
        let ln2 = 2.0f64.ln();
        let h = classical_entropy(&BernoulliMeasure::new(vec![0.5, 0.5]).unwrap());
        assert!((h - ln2).abs() < 1e-15);
        let h = classical_entropy(&BernoulliMeasure::new(vec![1.0, 0.0, 0.0]).unwrap());
        assert_eq!(h, 0.0);
        let h = classical_entropy(&BernoulliMeasure::new(vec![0.5, 0.25, 0.25]).unwrap());
        assert!((h - 1.5 * ln2).abs() < 1e-12);
    }

    #[test]
    fn log_sum_check_examples() {
        // Uniform p with a ≡ 0: equality at log k.
        let c = log_sum_check(&[0.25; 4], &[0.0; 4]).unwrap();
        assert!((c.lhs - 4.0f64.ln()).abs() < 1e-12);
        assert!((c.rhs - 4.0f64.ln()).abs() < 1e-12);
        for g in &c.gibbs {
            assert!((g - 0.25).abs() < 1e-12);
        }

        // Strict inequality away from the Gibbs weights.
        let c = log_sum_check(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((c.lhs - 0.0).abs() < 1e-12);
        assert!((c.rhs - (1.0 + std::f64::consts::E).ln()).abs() < 1e-12);
        assert!(c.lhs < c.rhs);

        // Equality case: p = gibbs(a) for seeded random a.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let k = rng.gen_range(1..=16);
            let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let rhs = log_sum_exp(&a).unwrap();
            let p: Vec<f64> = a.iter().map(|ai| (ai - rhs).exp()).collect();
            let c = log_sum_check(&p, &a).unwrap();
            assert!((c.lhs - c.rhs).abs() <= 1e-12, "k={k}");
        }

        assert!(log_sum_check(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn entropy_strong_separation_is_exactly_log_two() {
        let ifs = two_map_separated();
        let p = BernoulliMeasure::uniform(2);
        for n in 1..=10 {
            let est = projection_entropy_estimate(&ifs, &p, n, DEFAULT_WORD_CAP).unwrap();
            assert!(
                (est.value - 2.0f64.ln()).abs() < 1e-12,
                "depth {n}: {}",
                est.value
            );
            assert_eq!(est.mass_cells, 1u64 << n);
            assert!(!est.boundary_warning);
        }
    }

    #[test]
    fn entropy_quotient_oracle_for_coincident_maps() {
        // λ=0 makes S_1 = S_2; cylinders collapse onto the quotient alphabet
        // {12, 3}, whose cells are the 2ⁿ strongly separated Cantor cells, so
        // H equals the merged-weight product entropy exactly.
        let ifs = cantor(rat(0, 1));
        let (p, q, s) = (0.5, 0.2, 0.3);
        let measure = BernoulliMeasure::new(vec![p, q, s]).unwrap();
        let merged = -((p + q) * (p + q).ln() + s * s.ln());
        let est = projection_entropy_estimate(&ifs, &measure, 8, DEFAULT_WORD_CAP).unwrap();
        assert!((est.value - merged).abs() < 1e-12, "{} vs {merged}", est.value);
        assert!(est.value <= est.h_classical + 1e-9);
        assert!((est.value - merged).abs() < 0.05);
    }

    #[test]
    fn entropy_single_map_is_zero() {
        let ifs = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap();
        let p = BernoulliMeasure::new(vec![1.0]).unwrap();
        let est = projection_entropy_estimate(&ifs, &p, 5, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.mass_cells, 1);
    }

    #[test]
    fn entropy_boundary_mass_warning_fires() {
        // {x/2, x/2 + 3/8}: box_K = [0, 3/4]. At depth 2 the mixed words'
        // fixed points (1/4 and 1/2) land exactly on interior grid lines, so
        // half the mass is convention-placed. The corner points 0 and 3/4 sit
        // on the window faces and must NOT count.
        let ifs = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)], vec![rat(3, 8)]],
        )
        .unwrap();
        let p = BernoulliMeasure::uniform(2);
        let est = projection_entropy_estimate(&ifs, &p, 2, DEFAULT_WORD_CAP).unwrap();
        assert!(est.boundary_warning);
        assert!((est.boundary_mass - 0.5).abs() < 1e-12);
    }

    #[test]
    fn entropy_never_exceeds_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            let p = BernoulliMeasure::new(raw.iter().map(|w| w / sum).collect()).unwrap();
            let lambda = rat(rng.gen_range(0..=4), 4);
            let ifs = cantor(lambda);
            let est = projection_entropy_estimate(&ifs, &p, 5, DEFAULT_WORD_CAP).unwrap();
            assert!(est.value <= est.h_classical + 1e-9);
            assert!(est.value >= 0.0);
        }
    }

    #[test]
    fn entropy_power_consistency() {
        for lam in [rat(0, 1), rat(1, 2), rat(1, 1)] {
            let ifs = cantor(lam.clone());
            let p = BernoulliMeasure::new(vec![0.5, 0.3, 0.2]).unwrap();
            let base = projection_entropy_estimate(&ifs, &p, 8, DEFAULT_WORD_CAP).unwrap();
            let power = ifs.power(2, DEFAULT_WORD_CAP).unwrap();
            let p2 = p.power(2).unwrap();
            let on_power =
                projection_entropy_estimate(&power, &p2, 4, DEFAULT_WORD_CAP).unwrap();
            assert!(
                (base.value - on_power.value / 2.0).abs() < 0.05,
                "λ={lam}: {} vs {}",
                base.value,
                on_power.value / 2.0
            );
        }
    }

    #[test]
    fn integral_examples() {
        let ifs = cantor(rat(1, 2));
        let p = BernoulliMeasure::uniform(3);
        let (lo, hi) = integral_estimate(&ifs, &p, &Potential::constant(2.5), 4, DEFAULT_WORD_CAP)
            .unwrap();
        assert_eq!(lo, 2.5);
        assert_eq!(hi, 2.5);

        let single = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap();
        let one = BernoulliMeasure::new(vec![1.0]).unwrap();
        let (lo, hi) =
            integral_estimate(&single, &one, &Potential::linear(vec![1.0], 1.0), 6, DEFAULT_WORD_CAP)
                .unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 0.0);

        // Self-similar symmetric measure on [0,1]: mean is exactly 1/2.
        let two = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)], vec![rat(1, 2)]],
        )
        .unwrap();
        let half = BernoulliMeasure::uniform(2);
        let (lo, hi) =
            integral_estimate(&two, &half, &Potential::linear(vec![1.0], 1.0), 12, DEFAULT_WORD_CAP)
                .unwrap();
        let err = 0.5f64.powi(12);
        assert!(lo <= 0.5 && 0.5 <= hi);
        assert!((((lo + hi) / 2.0) - 0.5).abs() < 1e-9);
        assert!((hi - lo - 2.0 * err).abs() < 1e-15);
    }

    #[test]
    fn variational_gap_examples() {
        let single = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap();
        let one = BernoulliMeasure::new(vec![1.0]).unwrap();
        let gap = variational_gap(&single, &one, &Potential::constant(0.0), 4, 0, DEFAULT_WORD_CAP)
            .unwrap();
        assert_eq!(gap, 0.0);

        let full = cantor(rat(1, 1));
        let p = BernoulliMeasure::uniform(3);
        let gap = variational_gap(&full, &p, &Potential::constant(0.0), 6, 2, DEFAULT_WORD_CAP)
            .unwrap();
        assert!(gap.abs() < 1e-9, "gap {gap}");

        let overlap = cantor(rat(1, 2));
        let p = BernoulliMeasure::new(vec![0.6, 0.2, 0.2]).unwrap();
        let gap = variational_gap(&overlap, &p, &Potential::constant(0.0), 8, 2, DEFAULT_WORD_CAP)
            .unwrap();
        assert!(gap >= -0.02, "gap {gap}");
        assert!(gap <= 3.0f64.ln());
    }

    #[test]
    fn separated_family_middle_third_cantor() {
        let ifs = cantor(rat(0, 1));
        let fam = separated_family(&ifs, &Potential::constant(0.0), 1, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(fam.words.len(), 2);
        assert!((fam.certified_lower - 2.0f64.ln()).abs() < 1e-12);
        for w in &fam.weights {
            assert!((w - 0.5).abs() < 1e-12);
        }
        // Dimension lower bound via Bowen: h/(−log r) = log2/log3.
        let dim_lower = fam.certified_lower / 3.0f64.ln();
        assert!((dim_lower - 2.0f64.ln() / 3.0f64.ln()).abs() < 1e-12);
        assert!(fam.dropped.is_empty());
    }

    #[test]
    fn separated_family_full_interval_keeps_nonadjacent_pair() {
        let ifs = cantor(rat(1, 1));
        let fam = separated_family(&ifs, &Potential::constant(0.0), 1, DEFAULT_WORD_CAP).unwrap();
        assert!(fam.words.len() <= 2);
        assert!((fam.certified_lower - 2.0f64.ln()).abs() < 1e-12);
        assert!(fam.certified_lower < 3.0f64.ln());
    }

    #[test]
    fn separated_family_single_map() {
        let ifs = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap();
        let f = Potential::linear(vec![1.0], 1.0);
        let fam = separated_family(&ifs, &f, 3, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(fam.words.len(), 1);
        assert_eq!(fam.weights, vec![1.0]);
        let bb = birkhoff_bounds(&ifs, &f, &fam.words[0]).unwrap();
        assert!((fam.certified_lower - bb.low / 3.0).abs() < 1e-12);
    }

    #[test]
    fn separated_family_enclosures_are_disjoint() {
        // Verify the family invariant directly on an overlapping system.
        let ifs = cantor(rat(1, 2));
        let n = 4;
        let fam = separated_family(&ifs, &Potential::constant(0.0), n, DEFAULT_WORD_CAP).unwrap();
        assert!(!fam.words.is_empty());
        let frame = GridFrame::new(&ifs, n).unwrap();
        let boxes: Vec<(Vec<BigRational>, Vec<BigRational>)> = fam
            .words
            .iter()
            .map(|w| {
                let g = frame.to_grid(&ifs.compose_word(w).unwrap().offset);
                let lo: Vec<BigRational> = frame
                    .box_lo()
                    .iter()
                    .zip(&g)
                    .map(|(b, gi)| b.clone() + gi.clone())
                    .collect();
                let hi: Vec<BigRational> = frame
                    .box_hi()
                    .iter()
                    .zip(&g)
                    .map(|(b, gi)| b.clone() + gi.clone())
                    .collect();
                (lo, hi)
            })
            .collect();
        let tol = <BigRational as Scalar>::grid_tol();
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                assert!(
                    boxes_disjoint(&boxes[i].0, &boxes[i].1, &boxes[j].0, &boxes[j].1, &tol),
                    "words {} and {} overlap",
                    fam.words[i],
                    fam.words[j]
                );
            }
        }
        // The certificate never exceeds the pressure upper bound.
        let pb = pressure_bracket(&ifs, &Potential::constant(0.0), n, 2, DEFAULT_WORD_CAP)
            .unwrap();
        assert!(fam.certified_lower <= pb.high + 1e-9);
    }

    #[test]
    fn packing_efficiency_floors() {
        let single = AffineIfs::new(
            Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap(),
            vec![vec![rat(0, 1)]],
        )
        .unwrap();
        let eff = packing_efficiency(&single, &Potential::constant(0.0), 3, DEFAULT_WORD_CAP)
            .unwrap();
        assert!((eff - 1.0).abs() < 1e-12);

        let full = cantor(rat(1, 1));
        let eff = packing_efficiency(&full, &Potential::constant(0.0), 3, DEFAULT_WORD_CAP)
            .unwrap();
        assert!(eff >= 1.0 / 7.0, "1D efficiency {eff}");
        assert!(eff <= 1.0 + 1e-12);

        // 2D overlapping Sierpiński family (float: the third offset is
        // irrational).
        let s3 = 3.0f64.sqrt();
        let sier = AffineIfs::new(
            Matrix::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap(),
            vec![
                vec![0.0, 0.0],
                vec![0.5, 0.0],
                vec![0.25, s3 / 4.0],
            ],
        )
        .unwrap();
        let eff = packing_efficiency(&sier, &Potential::constant(0.0), 4, DEFAULT_WORD_CAP)
            .unwrap();
        assert!(eff >= 1.0 / 49.0, "2D efficiency {eff}");
        assert!(eff <= 1.0 + 1e-12);
    }
}
