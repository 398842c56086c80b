//! The grid partition `Q_n = {Aⁿ([0,1)^d + α)}` and certified covers of the
//! attractor by its cells.
//!
//! Everything here works in the *grid frame*: applying `A⁻ⁿ` turns depth-`n`
//! cells into unit lattice cubes, and turns the depth-`n` cylinder image
//! `S_u(box_K)` into `box_K + A⁻ⁿ t_u` exactly (the linear parts cancel
//! because every map shares the same `A`). Covers therefore reduce to integer
//! lattice work against translated copies of one fixed box.

use std::cmp::Ordering;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{FpError, Result};
use crate::ifs::AffineIfs;
use crate::ifs::Word;
use crate::linalg::{condition_estimate, Matrix};
use crate::scalar::Scalar;

/// Condition-number ceiling for `Aⁿ` in floating non-conformal mode.
const COND_CAP: f64 = 1e8;

/// Parallel expansion kicks in above this many classes per level.
const PAR_THRESHOLD: usize = 4096;

/// Index of one cell `Aⁿ([0,1)^d + α)` of the depth-`n` partition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridKey {
    pub depth: u32,
    pub alpha: Vec<BigInt>,
}

/// Certified two-sided cover of the attractor at one depth.
///
/// Every inner key contains a computed point of `K`; the outer keys contain
/// every cell meeting `K`. Both lists are sorted and deduplicated.
#[derive(Clone, Debug)]
pub struct CoverBounds {
    pub depth: u32,
    pub refine: u32,
    pub inner: Vec<GridKey>,
    pub outer: Vec<GridKey>,
}

impl CoverBounds {
    pub fn n_minus(&self) -> u64 {
        self.inner.len() as u64
    }

    pub fn n_plus(&self) -> u64 {
        self.outer.len() as u64
    }
}

/// Checks `l^n <= cap` and reports the deepest affordable depth otherwise.
pub fn check_cap(symbol_count: u32, depth: u32, cap: u64) -> Result<()> {
    let l = symbol_count as u128;
    let needed = match (0..depth).try_fold(1u128, |acc, _| acc.checked_mul(l)) {
        Some(v) => v,
        None => u128::MAX,
    };
    if needed <= cap as u128 {
        return Ok(());
    }
    let mut max_depth = 0;
    let mut total = 1u128;
    while total * l <= cap as u128 {
        total *= l;
        max_depth += 1;
    }
    Err(FpError::CapExceeded {
        needed,
        cap,
        max_depth,
    })
}

/// Precomputed geometry of the depth-`n` grid for one system: the `A⁻ⁿ`
/// transform, the attractor box in grid units, and the lattice crop window.
pub struct GridFrame<S: Scalar> {
    depth: u32,
    inv_n: Matrix<S>,
    /// Attractor box in the unit frame (cylinder boxes are this plus a shift).
    box_lo: Vec<S>,
    box_hi: Vec<S>,
    /// Per-axis lattice window of cells that can meet `K`: cells outside
    /// `[crop_lo, crop_hi]` are outside the grid-frame hull of `box_K`, and
    /// the top cell is dropped when the hull's supremum lies on a grid line
    /// (points of `K` on that face belong to the last interior cell).
    crop_lo: Vec<BigInt>,
    crop_hi: Vec<BigInt>,
    /// Grid-frame hull supremum (snapped), for the supremum clamp rule.
    hull_hi: Vec<S>,
}

impl<S: Scalar> GridFrame<S> {
    pub fn new(ifs: &AffineIfs<S>, depth: u32) -> Result<Self> {
        let inv_n = inverse_power(ifs, depth)?;
        let bounds = ifs.bounds();
        let zeros = vec![S::zero(); ifs.dim()];
        let hull = bounds.image(&inv_n, &zeros);

        let mut crop_lo = Vec::with_capacity(ifs.dim());
        let mut crop_hi = Vec::with_capacity(ifs.dim());
        let mut hull_hi = Vec::with_capacity(ifs.dim());
        for i in 0..ifs.dim() {
            let (lo, _) = snap_coord(&hull.lo[i]);
            let (hi, hi_on_line) = snap_coord(&hull.hi[i]);
            let lo_cell = lo.floor_int();
            let hi_cell = if hi_on_line {
                // Supremum on a grid line: the face belongs to the cell below.
                (hi.floor_int() - 1u32).max(lo_cell.clone())
            } else {
                hi.floor_int()
            };
            crop_lo.push(lo_cell);
            crop_hi.push(hi_cell);
            hull_hi.push(hi);
        }

        Ok(Self {
            depth,
            inv_n,
            box_lo: bounds.lo.clone(),
            box_hi: bounds.hi.clone(),
            crop_lo,
            crop_hi,
            hull_hi,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `A⁻ⁿ v` — ambient vector into grid units.
    pub fn to_grid(&self, v: &[S]) -> Vec<S> {
        self.inv_n.matvec(v)
    }

    /// Attractor box infimum in grid units; a depth-`n` cylinder enclosure is
    /// this box translated by `to_grid` of the cylinder's translation part.
    pub fn box_lo(&self) -> &[S] {
        &self.box_lo
    }

    /// Attractor box supremum in grid units.
    pub fn box_hi(&self) -> &[S] {
        &self.box_hi
    }

    /// Key of a point already in grid units, plus a certification flag.
    ///
    /// Certification fails only in float mode when some coordinate sits
    /// within tolerance of a grid line — the floor is then a convention, not
    /// a fact. Exact mode always certifies.
    pub fn key_from_grid(&self, y: &[S]) -> (Vec<BigInt>, bool) {
        let (alpha, certified, _) = self.key_with_boundary(y);
        (alpha, certified)
    }

    /// Like `key_from_grid`, also reporting whether any coordinate lies on
    /// (or within tolerance of) an *interior* grid line — one with cells of
    /// the lattice window on both sides, where the assignment is a
    /// convention. Points on the window's outer faces are forced into the
    /// only admissible cell and do not count.
    pub fn key_with_boundary(&self, y: &[S]) -> (Vec<BigInt>, bool, bool) {
        let mut alpha = Vec::with_capacity(y.len());
        let mut certified = true;
        let mut boundary = false;
        for (i, yi) in y.iter().enumerate() {
            let (snapped, on_line) = snap_coord(yi);
            if on_line {
                if !S::EXACT {
                    certified = false;
                }
                let r = snapped.round_int();
                if r > self.crop_lo[i] && r <= self.crop_hi[i] {
                    boundary = true;
                }
            }
            let a = if snapped == self.hull_hi[i] {
                // The box_K supremum belongs to the last interior cell.
                self.crop_hi[i].clone()
            } else {
                snapped.floor_int()
            };
            alpha.push(a);
        }
        (alpha, certified, boundary)
    }

    /// Per-axis candidate ranges of cells whose closed unit cube meets the
    /// closed box `box_K + g`, inflated by `inflate` on each side, cropped to
    /// the lattice window. `None` when the crop empties any axis.
    pub fn candidate_ranges(&self, g: &[S], inflate: &S) -> Option<Vec<(BigInt, BigInt)>> {
        let tol = S::grid_tol();
        let one = S::one();
        let mut ranges = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let a = self.box_lo[i].clone() + g[i].clone() - tol.clone() - inflate.clone();
            let b = self.box_hi[i].clone() + g[i].clone() + tol.clone() + inflate.clone();
            // Closed cube [α, α+1] meets closed [a, b] iff a-1 <= α <= b.
            let lo = ceil_int(&(a - one.clone()));
            let hi = b.floor_int();
            let lo = lo.max(self.crop_lo[i].clone());
            let hi = hi.min(self.crop_hi[i].clone());
            if lo > hi {
                return None;
            }
            ranges.push((lo, hi));
        }
        Some(ranges)
    }

    /// All keys in the product of `candidate_ranges`.
    pub fn candidate_keys(&self, g: &[S], inflate: &S, out: &mut Vec<Vec<BigInt>>) {
        let Some(ranges) = self.candidate_ranges(g, inflate) else {
            return;
        };
        let d = ranges.len();
        let mut current: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
        loop {
            out.push(current.clone());
            let mut axis = d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                current[axis] += 1u32;
                if current[axis] <= ranges[axis].1 {
                    break;
                }
                current[axis] = ranges[axis].0.clone();
            }
        }
    }
}

fn ceil_int<S: Scalar>(x: &S) -> BigInt {
    -(-x.clone()).floor_int()
}

/// Snaps a grid coordinate onto the nearest grid line when it is within
/// tolerance, reporting whether it now lies on one.
fn snap_coord<S: Scalar>(y: &S) -> (S, bool) {
    let r = y.round_int();
    let rs = S::from_bigint(&r);
    let diff = (y.clone() - rs.clone()).abs();
    if diff.cmp_total(&S::grid_tol()) != Ordering::Greater {
        (rs, true)
    } else {
        (y.clone(), false)
    }
}

/// `A⁻ⁿ` in the system's arithmetic, guarding float-mode conditioning.
///
/// Exact mode inverts exactly at any depth. Float conformal mode uses
/// `(1/rⁿ)·(Oᵀ)ⁿ` with `O = A/r`, whose orthogonal part cannot blow up.
/// Float non-conformal mode inverts `Aⁿ` directly and refuses once its
/// condition estimate passes 10⁸, directing the caller to exact mode.
fn inverse_power<S: Scalar>(ifs: &AffineIfs<S>, n: u32) -> Result<Matrix<S>> {
    if S::EXACT {
        return Ok(ifs.inv_linear().pow(n));
    }
    if ifs.is_conformal() {
        let r = ifs.ratio();
        let inv_r = S::from_f64(1.0 / r).expect("finite ratio");
        let o = ifs.linear().scale(&inv_r);
        let scale = S::from_f64((1.0 / r).powi(n as i32)).expect("finite scale");
        return Ok(o.pow(n).transpose().scale(&scale));
    }
    let a_n = ifs.linear().pow(n);
    let cond = condition_estimate(&a_n.to_f64());
    if cond > COND_CAP {
        return Err(FpError::Conditioning { depth: n, cond });
    }
    a_n.inverse()
        .ok_or(FpError::Conditioning {
            depth: n,
            cond: f64::INFINITY,
        })
}

/// `α = floor(A⁻ⁿ x)` componentwise, with the supremum clamp.
pub fn grid_key_of_point<S: Scalar>(ifs: &AffineIfs<S>, x: &[S], n: u32) -> Result<GridKey> {
    let frame = GridFrame::new(ifs, n)?;
    let y = frame.to_grid(x);
    let (alpha, _) = frame.key_from_grid(&y);
    Ok(GridKey { depth: n, alpha })
}

/// Keys of all cells meeting the closed grid-frame enclosure of `S_u(box_K)`,
/// inflated by `inflate` grid units per side.
pub fn cylinder_cell_range<S: Scalar>(
    ifs: &AffineIfs<S>,
    u: &Word,
    inflate: &S,
) -> Result<Vec<GridKey>> {
    let n = u.depth() as u32;
    let frame = GridFrame::new(ifs, n)?;
    let map = ifs.compose_word(u)?;
    let g = frame.to_grid(&map.offset);
    let mut alphas = Vec::new();
    frame.candidate_keys(&g, inflate, &mut alphas);
    alphas.sort_unstable();
    alphas.dedup();
    Ok(alphas
        .into_iter()
        .map(|alpha| GridKey { depth: n, alpha })
        .collect())
}

/// What to do with a fully-expanded translation class.
enum LeafRule<S: Scalar> {
    /// Emit every candidate cell of `box_K + h` (outer cover).
    Candidates,
    /// Emit the certified key of the cylinder fixed point, reading the grid
    /// coordinate as `C·h` (inner cover).
    FixedPoint { to_grid_fix: Matrix<S> },
}

/// Level-by-level enumeration of cylinder translations with deduplication.
///
/// Walking depth levels, the state of a partial word `u` that matters for
/// every extension is only `h_u = A^{-|u|} t_u`; distinct words sharing an
/// `h` value have identical subtrees, so each level keeps one copy per value
/// (this is where overlapping systems collapse from `lⁿ` words to far fewer
/// classes). Expansion is `h' = A⁻¹(h + c_s)`.
///
/// Along the way a class is pruned once its final-frame enclosure
/// `A^{m-n}(box_K + h)` fits strictly inside a single cell with margin above
/// tolerance: every descendant then lands in that cell, certified, so the
/// cell is recorded and the subtree dropped.
fn enumerate_cover<S: Scalar>(
    ifs: &AffineIfs<S>,
    frame: &GridFrame<S>,
    levels: u32,
    rule: LeafRule<S>,
) -> Vec<Vec<BigInt>> {
    let d = ifs.dim();
    let n = frame.depth();
    let zeros = vec![S::zero(); d];
    let bounds = ifs.bounds();
    let tol = S::grid_tol();
    let one = S::one();

    // A⁻¹ applied to each translation, reused at every level.
    let shifted: Vec<Vec<S>> = (0..ifs.symbol_count())
        .map(|s| ifs.inv_linear().matvec(ifs.translation(s)))
        .collect();

    let mut classes: Vec<Vec<S>> = vec![zeros.clone()];
    let mut settled: Vec<Vec<BigInt>> = Vec::new();

    for level in 0..levels {
        // Expand every class by every symbol.
        let expand = |h: &Vec<S>| -> Vec<Vec<S>> {
            let base = ifs.inv_linear().matvec(h);
            shifted
                .iter()
                .map(|sc| {
                    base.iter()
                        .zip(sc)
                        .map(|(b, c)| b.clone() + c.clone())
                        .collect()
                })
                .collect()
        };
        let mut next: Vec<Vec<S>> = if classes.len() >= PAR_THRESHOLD {
            classes.par_iter().flat_map_iter(expand).collect()
        } else {
            classes.iter().flat_map(expand).collect()
        };
        sort_dedup_vecs(&mut next);
        classes = next;

        let m = level + 1;
        if m == levels {
            break;
        }

        // Attempt the single-cell prune at this level. The final-frame box of
        // a class is P·h + hull(P·box_K) with P = A^{m-n}; pruning is only
        // possible once that hull is narrower than a cell on every axis.
        let p = if m <= n {
            inverse_power_unchecked(ifs, n - m)
        } else {
            ifs.linear().pow(m - n)
        };
        let ibox = bounds.image(&p, &zeros);
        let narrow = (0..d).all(|i| {
            let w = ibox.hi[i].clone() - ibox.lo[i].clone();
            let slack = one.clone() - tol.clone() - tol.clone();
            w.cmp_total(&slack) == Ordering::Less
        });
        if !narrow {
            continue;
        }
        let try_prune = |h: &Vec<S>| -> Option<Vec<BigInt>> {
            let shift = p.matvec(h);
            let mut key = Vec::with_capacity(d);
            for i in 0..d {
                let lo = ibox.lo[i].clone() + shift[i].clone();
                let hi = ibox.hi[i].clone() + shift[i].clone();
                let f = lo.floor_int();
                let fs = S::from_bigint(&f);
                let margin_lo = lo - fs.clone();
                let margin_hi = fs + one.clone() - hi;
                if margin_lo.cmp_total(&tol) != Ordering::Greater
                    || margin_hi.cmp_total(&tol) != Ordering::Greater
                {
                    return None;
                }
                key.push(f);
            }
            Some(key)
        };
        let keep_or_settle: Vec<(Option<Vec<S>>, Option<Vec<BigInt>>)> =
            if classes.len() >= PAR_THRESHOLD {
                classes
                    .par_iter()
                    .map(|h| match try_prune(h) {
                        Some(k) => (None, Some(k)),
                        None => (Some(h.clone()), None),
                    })
                    .collect()
            } else {
                classes
                    .iter()
                    .map(|h| match try_prune(h) {
                        Some(k) => (None, Some(k)),
                        None => (Some(h.clone()), None),
                    })
                    .collect()
            };
        let mut kept = Vec::with_capacity(classes.len());
        for (keep, settle) in keep_or_settle {
            if let Some(h) = keep {
                kept.push(h);
            }
            if let Some(k) = settle {
                settled.push(k);
            }
        }
        classes = kept;
        if classes.is_empty() {
            break;
        }
    }

    // Leaf stage.
    let mut keys: Vec<Vec<BigInt>> = match &rule {
        LeafRule::Candidates => {
            let emit = |h: &Vec<S>| {
                let mut out = Vec::new();
                frame.candidate_keys(h, &S::zero(), &mut out);
                out
            };
            if classes.len() >= PAR_THRESHOLD {
                classes.par_iter().flat_map_iter(emit).collect()
            } else {
                classes.iter().flat_map(emit).collect()
            }
        }
        LeafRule::FixedPoint { to_grid_fix } => {
            let emit = |h: &Vec<S>| -> Option<Vec<BigInt>> {
                let y = to_grid_fix.matvec(h);
                let (alpha, certified) = frame.key_from_grid(&y);
                certified.then_some(alpha)
            };
            if classes.len() >= PAR_THRESHOLD {
                classes.par_iter().filter_map(emit).collect()
            } else {
                classes.iter().filter_map(emit).collect()
            }
        }
    };
    keys.extend(settled);
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Same as `inverse_power` where the conditioning guard is already known to
/// pass (shallower than an already-constructed frame).
fn inverse_power_unchecked<S: Scalar>(ifs: &AffineIfs<S>, n: u32) -> Matrix<S> {
    inverse_power(ifs, n).expect("shallower inverse power than a checked frame")
}

/// Sorted, certified superset of the depth-`n` cells meeting `K`.
pub fn outer_cover<S: Scalar>(ifs: &AffineIfs<S>, n: u32, cap: u64) -> Result<Vec<GridKey>> {
    check_cap(ifs.symbol_count(), n, cap)?;
    let frame = GridFrame::new(ifs, n)?;
    let alphas = enumerate_cover(ifs, &frame, n, LeafRule::Candidates);
    Ok(alphas
        .into_iter()
        .map(|alpha| GridKey { depth: n, alpha })
        .collect())
}

/// Sorted set of depth-`n` cells certified to meet `K`: the cells of the
/// fixed points of all depth-`(n+refine)` words. Deeper refinement can only
/// grow the set.
pub fn inner_cover<S: Scalar>(
    ifs: &AffineIfs<S>,
    n: u32,
    refine: u32,
    cap: u64,
) -> Result<Vec<GridKey>> {
    check_cap(ifs.symbol_count(), n + refine, cap)?;
    let frame = GridFrame::new(ifs, n)?;
    let m = n + refine;
    // Grid coordinate of the fixed point of a word with translation class h:
    //   A⁻ⁿ (I - Aᵐ)⁻¹ t_w = (I - Aᵐ)⁻¹ Aᵏ h,  k = refine, h = A⁻ᵐ t_w.
    let a_m = ifs.linear().pow(m);
    let i_minus = Matrix::identity(ifs.dim()).sub(&a_m);
    let inv = i_minus
        .inverse()
        .ok_or_else(|| FpError::InvalidIfs("I - Aᵐ singular despite contraction".into()))?;
    let to_grid_fix = inv.mul(&ifs.linear().pow(refine));
    let alphas = enumerate_cover(ifs, &frame, m, LeafRule::FixedPoint { to_grid_fix });
    Ok(alphas
        .into_iter()
        .map(|alpha| GridKey { depth: n, alpha })
        .collect())
}

/// Inner and outer covers at one depth, with the sandwich check.
pub fn cover_bounds<S: Scalar>(
    ifs: &AffineIfs<S>,
    n: u32,
    refine: u32,
    cap: u64,
) -> Result<CoverBounds> {
    let inner = inner_cover(ifs, n, refine, cap)?;
    let outer = outer_cover(ifs, n, cap)?;
    debug_assert!(
        is_sorted_subset(&inner, &outer),
        "inner cover escaped the outer cover at depth {n}"
    );
    Ok(CoverBounds {
        depth: n,
        refine,
        inner,
        outer,
    })
}

fn is_sorted_subset(small: &[GridKey], big: &[GridKey]) -> bool {
    let mut it = big.iter();
    'outer: for k in small {
        for b in it.by_ref() {
            match b.cmp(k) {
                Ordering::Less => continue,
                Ordering::Equal => continue 'outer,
                Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

fn sort_dedup_vecs<S: Scalar>(v: &mut Vec<Vec<S>>) {
    let cmp = |a: &Vec<S>, b: &Vec<S>| -> Ordering {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.cmp_total(y) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    };
    if v.len() >= PAR_THRESHOLD {
        v.par_sort_unstable_by(cmp);
    } else {
        v.sort_unstable_by(cmp);
    }
    v.dedup();
}
