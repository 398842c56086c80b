use std::cmp::Ordering;

use crate::error::{FpError, Result};
use crate::scalar::Scalar;

/// Dense square matrix, row-major, generic over the arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(FpError::InvalidIfs("matrix must be at least 1x1".into()));
        }
        for row in &rows {
            if row.len() != dim {
                return Err(FpError::InvalidIfs(format!(
                    "matrix row has {} entries, expected {dim}",
                    row.len()
                )));
            }
        }
        Ok(Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![S::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = S::one();
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = S::zero();
                for k in 0..d {
                    acc = acc + self.at(i, k).clone() * other.at(k, j).clone();
                }
                data.push(acc);
            }
        }
        Self { dim: d, data }
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = S::zero();
                for (j, vj) in v.iter().enumerate() {
                    acc = acc + self.at(i, j).clone() * vj.clone();
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(self.at(j, i).clone());
            }
        }
        Self { dim: d, data }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn entrywise_abs(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x.abs()).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x.to_f64()).collect(),
        }
    }

    /// Gauss-Jordan inverse with partial pivoting. `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut inv = Self::identity(d).data;
        for col in 0..d {
            let pivot_row = (col..d)
                .max_by(|&r1, &r2| a[r1 * d + col].abs().cmp_total(&a[r2 * d + col].abs()))?;
            if a[pivot_row * d + col].is_zero() {
                return None;
            }
            if pivot_row != col {
                for j in 0..d {
                    a.swap(pivot_row * d + j, col * d + j);
                    inv.swap(pivot_row * d + j, col * d + j);
                }
            }
            let p = a[col * d + col].clone();
            for j in 0..d {
                a[col * d + j] = a[col * d + j].clone() / p.clone();
                inv[col * d + j] = inv[col * d + j].clone() / p.clone();
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = a[r * d + col].clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..d {
                    a[r * d + j] = a[r * d + j].clone() - factor.clone() * a[col * d + j].clone();
                    inv[r * d + j] =
                        inv[r * d + j].clone() - factor.clone() * inv[col * d + j].clone();
                }
            }
        }
        Some(Self { dim: d, data: inv })
    }

    /// Solves `self * x = rhs`. `None` when singular.
    pub fn solve(&self, rhs: &[S]) -> Option<Vec<S>> {
        Some(self.inverse()?.matvec(rhs))
    }
}

/// Closed axis-aligned box `[lo_1,hi_1] x ... x [lo_d,hi_d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

impl<S: Scalar> AxisBox<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Self {
        assert_eq!(lo.len(), hi.len());
        debug_assert!(lo
            .iter()
            .zip(&hi)
            .all(|(l, h)| l.cmp_total(h) != Ordering::Greater));
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<S> {
        let half = S::from_rational(1, 2);
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (l.clone() + h.clone()) * half.clone())
            .collect()
    }

    pub fn widths(&self) -> Vec<S> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h.clone() - l.clone())
            .collect()
    }

    /// Euclidean diameter, as a double (all error terms are tracked in f64).
    pub fn diameter_f64(&self) -> f64 {
        self.widths()
            .iter()
            .map(|w| {
                let x = w.to_f64();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.iter().enumerate().all(|(i, xi)| {
            self.lo[i].cmp_total(xi) != Ordering::Greater
                && xi.cmp_total(&self.hi[i]) != Ordering::Greater
        })
    }

    pub fn translate(&self, t: &[S]) -> Self {
        Self {
            lo: self
                .lo
                .iter()
                .zip(t)
                .map(|(l, ti)| l.clone() + ti.clone())
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(t)
                .map(|(h, ti)| h.clone() + ti.clone())
                .collect(),
        }
    }

    /// Hull of the image of this box under `x -> mat*x + offset`, by interval
    /// arithmetic on each row.
    pub fn image(&self, mat: &Matrix<S>, offset: &[S]) -> Self {
        let d = self.dim();
        assert_eq!(mat.dim(), d);
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for i in 0..d {
            let mut l = offset[i].clone();
            let mut h = offset[i].clone();
            for j in 0..d {
                let a = mat.at(i, j);
                let x = a.clone() * self.lo[j].clone();
                let y = a.clone() * self.hi[j].clone();
                if x.cmp_total(&y) == Ordering::Greater {
                    l = l + y;
                    h = h + x;
                } else {
                    l = l + x;
                    h = h + y;
                }
            }
            lo.push(l);
            hi.push(h);
        }
        Self { lo, hi }
    }

    pub fn to_f64(&self) -> AxisBox<f64> {
        AxisBox {
            lo: self.lo.iter().map(|x| x.to_f64()).collect(),
            hi: self.hi.iter().map(|x| x.to_f64()).collect(),
        }
    }
}

/// Spectral norm (largest singular value) via cyclic Jacobi on `AᵀA`.
pub fn spectral_norm(m: &Matrix<f64>) -> f64 {
    let d = m.dim();
    let mt = m.transpose();
    let b = mt.mul(m);
    let mut a: Vec<f64> = b.data.clone();
    let idx = |i: usize, j: usize| i * d + j;
    let scale: f64 = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[idx(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[idx(p, q)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let max_eig = (0..d).map(|i| a[idx(i, i)]).fold(0.0f64, f64::max);
    max_eig.max(0.0).sqrt()
}

/// Rough 2-norm condition estimate; `f64::INFINITY` when numerically singular.
pub fn condition_estimate(m: &Matrix<f64>) -> f64 {
    match m.inverse() {
        Some(inv) => spectral_norm(m) * spectral_norm(&inv),
        None => f64::INFINITY,
    }
}
