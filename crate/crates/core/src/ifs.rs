use std::fmt;

use crate::error::{FpError, Result};
use crate::linalg::{spectral_norm, AxisBox, Matrix};
use crate::scalar::Scalar;

/// Default ceiling on the number of words any single enumeration may visit.
pub const DEFAULT_WORD_CAP: u64 = 10_000_000;

/// A finite word over the symbol alphabet `{0, .., l-1}` (displayed 1-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// The `index`-th depth-`depth` word over `symbol_count` symbols in
    /// lexicographic order (most significant digit first).
    pub fn from_index(mut index: u64, symbol_count: u32, depth: u32) -> Self {
        let mut v = vec![0u32; depth as usize];
        for slot in v.iter_mut().rev() {
            *slot = (index % symbol_count as u64) as u32;
            index /= symbol_count as u64;
        }
        Word(v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self, symbol_count: u32) -> Result<()> {
        for &s in &self.0 {
            if s >= symbol_count {
                return Err(FpError::InvalidWord {
                    symbol: s + 1,
                    count: symbol_count,
                });
            }
        }
        Ok(())
    }

    /// The word rotated left by `k` places (cyclic).
    pub fn rotate_left(&self, k: usize) -> Self {
        if self.0.is_empty() {
            return self.clone();
        }
        let n = self.0.len();
        let k = k % n;
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[k..]);
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    /// 1-based symbols; digits are juxtaposed for alphabets up to 9 symbols,
    /// comma-separated beyond that.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&s| s >= 9);
        for (i, &s) in self.0.iter().enumerate() {
            if wide && i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        Ok(())
    }
}

/// An affine map `x -> linear*x + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap<S> {
    pub linear: Matrix<S>,
    pub offset: Vec<S>,
}

impl<S: Scalar> AffineMap<S> {
    pub fn identity(dim: usize) -> Self {
        Self {
            linear: Matrix::identity(dim),
            offset: vec![S::zero(); dim],
        }
    }

    pub fn apply(&self, x: &[S]) -> Vec<S> {
        let mut y = self.linear.matvec(x);
        for (yi, oi) in y.iter_mut().zip(&self.offset) {
            *yi = yi.clone() + oi.clone();
        }
        y
    }

    /// `self.compose(g)` is the map `x -> self(g(x))`.
    pub fn compose(&self, g: &Self) -> Self {
        let mut offset = self.linear.matvec(&g.offset);
        for (oi, si) in offset.iter_mut().zip(&self.offset) {
            *oi = oi.clone() + si.clone();
        }
        Self {
            linear: self.linear.mul(&g.linear),
            offset,
        }
    }
}

/// The unique solution of `p = map(p)` for a contracting affine map.
pub fn fixed_point<S: Scalar>(map: &AffineMap<S>) -> Result<Vec<S>> {
    let norm = spectral_norm(&map.linear.to_f64());
    if !(norm < 1.0) {
        return Err(FpError::NotContracting { norm });
    }
    let d = map.linear.dim();
    let i_minus = Matrix::identity(d).sub(&map.linear);
    i_minus
        .solve(&map.offset)
        .ok_or_else(|| FpError::InvalidIfs("I - linear is singular despite contraction".into()))
}

/// An affine iterated function system `{S_i(x) = A x + c_i}` with one shared
/// contracting, invertible linear part.
///
/// The arithmetic mode (exact rationals vs doubles) is the type parameter and
/// is fixed for the life of the value; no operation mixes modes.
#[derive(Clone, Debug)]
pub struct AffineIfs<S: Scalar> {
    dim: usize,
    linear: Matrix<S>,
    inv_linear: Matrix<S>,
    translations: Vec<Vec<S>>,
    ratio: f64,
    /// `‖A‖²` as an exact scalar, available when the conformal check passed
    /// exactly (always in exact mode; in float mode when `A·Aᵀ` is a scalar
    /// matrix to the last bit).
    ratio_sq: Option<S>,
    conformal: bool,
    bounds: AxisBox<S>,
    diameter: f64,
}

impl<S: Scalar> AffineIfs<S> {
    pub fn new(linear: Matrix<S>, translations: Vec<Vec<S>>) -> Result<Self> {
        let dim = linear.dim();
        if translations.is_empty() {
            return Err(FpError::InvalidIfs("at least one map is required".into()));
        }
        for (i, c) in translations.iter().enumerate() {
            if c.len() != dim {
                return Err(FpError::InvalidIfs(format!(
                    "translation {} has {} entries, expected {dim}",
                    i + 1,
                    c.len()
                )));
            }
        }
        let ratio = spectral_norm(&linear.to_f64());
        if !(ratio < 1.0) {
            return Err(FpError::NotContracting { norm: ratio });
        }
        let inv_linear = linear
            .inverse()
            .ok_or_else(|| FpError::InvalidIfs("linear part is singular".into()))?;

        let (conformal, ratio_sq) = conformal_check(&linear, ratio);
        let bounds = invariant_box(&linear, &translations)?;
        let diameter = bounds.diameter_f64();

        Ok(Self {
            dim,
            linear,
            inv_linear,
            translations,
            ratio,
            ratio_sq,
            conformal,
            bounds,
            diameter,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbol_count(&self) -> u32 {
        self.translations.len() as u32
    }

    pub fn linear(&self) -> &Matrix<S> {
        &self.linear
    }

    pub fn inv_linear(&self) -> &Matrix<S> {
        &self.inv_linear
    }

    pub fn translation(&self, i: u32) -> &[S] {
        &self.translations[i as usize]
    }

    pub fn translations(&self) -> &[Vec<S>] {
        &self.translations
    }

    /// Spectral norm `‖A‖` (as a double in both modes).
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// `‖A‖²` exactly, when the conformal structure makes it representable.
    pub fn ratio_sq(&self) -> Option<&S> {
        self.ratio_sq.as_ref()
    }

    pub fn is_conformal(&self) -> bool {
        self.conformal
    }

    /// An axis-aligned box `B` with `S_i(B) ⊆ B` for every map.
    pub fn bounds(&self) -> &AxisBox<S> {
        &self.bounds
    }

    /// Euclidean diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn map(&self, i: u32) -> AffineMap<S> {
        AffineMap {
            linear: self.linear.clone(),
            offset: self.translations[i as usize].to_vec(),
        }
    }

    /// The cylinder map `S_{u_1} ∘ S_{u_2} ∘ ... ∘ S_{u_n}`. Its offset is
    /// `t_u = c_{u_1} + A c_{u_2} + ... + A^{n-1} c_{u_n}`.
    pub fn compose_word(&self, u: &Word) -> Result<AffineMap<S>> {
        u.validate(self.symbol_count())?;
        let mut t = vec![S::zero(); self.dim];
        for &s in u.0.iter().rev() {
            t = self.linear.matvec(&t);
            for (ti, ci) in t.iter_mut().zip(&self.translations[s as usize]) {
                *ti = ti.clone() + ci.clone();
            }
        }
        Ok(AffineMap {
            linear: self.linear.pow(u.depth() as u32),
            offset: t,
        })
    }

    /// The depth-`k` power system: `l^k` maps with linear part `A^k`,
    /// translations `t_u` over all depth-`k` words in lexicographic order.
    pub fn power(&self, k: u32, cap: u64) -> Result<AffineIfs<S>> {
        if k == 0 {
            return Err(FpError::InvalidIfs("power exponent must be >= 1".into()));
        }
        let l = self.symbol_count();
        let needed = (l as u128).pow(k);
        if needed > cap as u128 {
            let mut max_depth = 0u32;
            let mut total = 1u128;
            loop {
                total *= l as u128;
                if total > cap as u128 {
                    break;
                }
                max_depth += 1;
            }
            return Err(FpError::CapExceeded {
                needed,
                cap,
                max_depth,
            });
        }
        let mut translations = Vec::with_capacity(needed as usize);
        let mut word = vec![0u32; k as usize];
        loop {
            let map = self.compose_word(&Word(word.clone()))?;
            translations.push(map.offset);
            // lexicographic successor
            let mut pos = k as usize;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                word[pos] += 1;
                if word[pos] < l {
                    break;
                }
                word[pos] = 0;
            }
            if word.iter().all(|&s| s == 0) {
                break;
            }
        }
        AffineIfs::new(self.linear.pow(k), translations)
    }
}

/// Decides conformality (`A·Aᵀ = r²·I`) and extracts `r²` when exact.
fn conformal_check<S: Scalar>(linear: &Matrix<S>, ratio: f64) -> (bool, Option<S>) {
    let d = linear.dim();
    let gram = linear.mul(&linear.transpose());
    let c = gram.at(0, 0).clone();
    let mut exact_scalar = true;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { c.clone() } else { S::zero() };
            if gram.at(i, j) != &want {
                exact_scalar = false;
            }
        }
    }
    if exact_scalar {
        return (true, Some(c));
    }
    if S::EXACT {
        // Exact arithmetic: conformality must hold to the last bit.
        return (false, None);
    }
    let rsq = ratio * ratio;
    let mut max_dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { rsq } else { 0.0 };
            max_dev = max_dev.max((gram.at(i, j).to_f64() - want).abs());
        }
    }
    (max_dev <= 1e-12, None)
}

/// Smallest axis-aligned box `B = [v, u]` with `S_i(B) ⊆ B` for all maps.
///
/// Writing `A = A⁺ - A⁻` (positive/negative parts), the per-axis hull of
/// `⋃ S_i(B)` equals `B` exactly when
///   `u = A⁺u - A⁻v + max_i c_i` and `v = A⁺v - A⁻u + min_i c_i`,
/// a linear system in the `2d` unknowns `(u, v)`. It is solvable with
/// `u >= v` precisely when the entrywise absolute matrix `|A|` has spectral
/// radius below one; otherwise no bounded invariant box exists.
fn invariant_box<S: Scalar>(linear: &Matrix<S>, translations: &[Vec<S>]) -> Result<AxisBox<S>> {
    let d = linear.dim();
    let zero = S::zero();
    let mut cmax: Vec<S> = translations[0].clone();
    let mut cmin: Vec<S> = translations[0].clone();
    for c in &translations[1..] {
        for i in 0..d {
            if c[i].cmp_total(&cmax[i]) == std::cmp::Ordering::Greater {
                cmax[i] = c[i].clone();
            }
            if c[i].cmp_total(&cmin[i]) == std::cmp::Ordering::Less {
                cmin[i] = c[i].clone();
            }
        }
    }

    // Assemble I - [[A⁺, -A⁻], [-A⁻, A⁺]] over the stacked vector (u, v).
    let mut rows = vec![vec![zero.clone(); 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            let a = linear.at(i, j);
            let (pos, neg) = if a.cmp_total(&zero) == std::cmp::Ordering::Less {
                (S::zero(), -a.clone())
            } else {
                (a.clone(), S::zero())
            };
            rows[i][j] = -pos.clone();
            rows[i][d + j] = neg.clone();
            rows[d + i][j] = neg;
            rows[d + i][d + j] = -pos;
        }
    }
    for i in 0..2 * d {
        rows[i][i] = rows[i][i].clone() + S::one();
    }
    let system = Matrix::from_rows(rows)?;
    let mut rhs = cmax.clone();
    rhs.extend(cmin.iter().cloned());
    let sol = system.solve(&rhs).ok_or_else(|| {
        FpError::NoInvariantBox("hull recursion is singular (|A| not contracting)".into())
    })?;
    let (u, v) = sol.split_at(d);
    for i in 0..d {
        if u[i].cmp_total(&v[i]) == std::cmp::Ordering::Less {
            return Err(FpError::NoInvariantBox(
                "hull recursion solves with inverted bounds (|A| not contracting)".into(),
            ));
        }
    }

    // Verify invariance by direct image computation. The exact solve is
    // invariant to the bit; the float solve may miss by a few ulps, so the
    // comparison (not the stored box — grid crops need its faces unshifted)
    // gets a matching slack.
    let mut slack_f = 0.0f64;
    if !S::EXACT {
        let scale = u
            .iter()
            .chain(v.iter())
            .fold(1.0f64, |m, x| m.max(x.to_f64().abs()));
        slack_f = scale * 32.0 * f64::EPSILON;
    }
    let b = AxisBox::new(v.to_vec(), u.to_vec());
    for attempt in 0..4 {
        let slack = S::from_f64(slack_f * 10f64.powi(attempt)).unwrap_or_else(S::zero);
        let ok = translations.iter().all(|c| {
            let img = b.image(linear, c);
            img.lo.iter().zip(&b.lo).all(|(il, bl)| {
                (bl.clone() - il.clone()).cmp_total(&slack) != std::cmp::Ordering::Greater
            }) && img.hi.iter().zip(&b.hi).all(|(ih, bh)| {
                (ih.clone() - bh.clone()).cmp_total(&slack) != std::cmp::Ordering::Greater
            })
        });
        if ok {
            return Ok(b);
        }
        if S::EXACT {
            break;
        }
    }
    Err(FpError::NoInvariantBox(
        "invariance verification failed beyond float slack".into(),
    ))
}
