//! Rank-revealing matrix factorizations.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration, which delivers small
//! singular values to high relative accuracy and keeps the code generic over
//! the scalar type. Symmetric eigenproblems use cyclic two-sided Jacobi.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use crate::tensor::Matrix;

/// Default relative threshold (against `σ₁`) below which a singular value
/// counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `m = u · diag(σ) · vt`.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: Matrix<T>,
    /// Descending, non-negative.
    pub singular_values: Vec<T>,
    /// `k × cols` with orthonormal rows.
    pub vt: Matrix<T>,
    /// `#{σᵢ > rank_tol · σ₁}`.
    pub numerical_rank: usize,
}

impl<T: Scalar> SvdResult<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let k = self.singular_values.len();
        let us = Matrix::from_fn(self.u.rows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul(&self.vt).expect("conforming svd factors")
    }

    pub fn sigma_max(&self) -> T {
        self.singular_values[0]
    }

    pub fn sigma_min(&self) -> T {
        *self.singular_values.last().expect("non-empty spectrum")
    }
}

pub fn svd<T: Scalar>(m: &Matrix<T>) -> Result<SvdResult<T>> {
    svd_with_tol(m, T::lit(DEFAULT_RANK_TOL))
}

pub fn svd_with_tol<T: Scalar>(m: &Matrix<T>, rank_tol: T) -> Result<SvdResult<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let (u, s, vt) = if m.rows() >= m.cols() {
        jacobi_svd_tall(m)
    } else {
        let (u, s, vt) = jacobi_svd_tall(&m.transpose());
        (vt.transpose(), s, u.transpose())
    };
    let numerical_rank = count_rank(&s, rank_tol);
    let mut out = SvdResult {
        u,
        singular_values: s,
        vt,
        numerical_rank,
    };
    canonicalize_signs(&mut out);
    Ok(out)
}

fn count_rank<T: Scalar>(s: &[T], rank_tol: T) -> usize {
    let top = s.first().copied().unwrap_or_else(T::zero);
    if top <= T::zero() {
        return 0;
    }
    s.iter().filter(|&&v| v > rank_tol * top).count()
}

/// Makes the largest-magnitude entry of each left singular vector
/// non-negative, flipping the matching right singular vector.
fn canonicalize_signs<T: Scalar>(r: &mut SvdResult<T>) {
    for j in 0..r.u.cols() {
        let col = r.u.column(j);
        if leading_sign_negative(&col) {
            for i in 0..r.u.rows() {
                r.u[(i, j)] = -r.u[(i, j)];
            }
            for c in 0..r.vt.cols() {
                r.vt[(j, c)] = -r.vt[(j, c)];
            }
        }
    }
}

/// True if the first entry of (near-)maximal magnitude is negative.
pub(crate) fn leading_sign_negative<T: Scalar>(v: &[T]) -> bool {
    let m = scalar::max_abs(v);
    if m == T::zero() {
        return false;
    }
    let cut = m * (T::one() - T::lit(1e-9));
    v.iter()
        .find(|x| x.abs() >= cut)
        .is_some_and(|&x| x < T::zero())
}

/// One-sided Jacobi on a tall (rows ≥ cols) matrix.
fn jacobi_svd_tall<T: Scalar>(m: &Matrix<T>) -> (Matrix<T>, Vec<T>, Matrix<T>) {
    let (rows, n) = (m.rows(), m.cols());
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = scalar::dot(&cols[p], &cols[p]);
                let beta = scalar::dot(&cols[q], &cols[q]);
                let gamma = scalar::dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sig: Vec<(T, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (scalar::norm2(c), j))
        .collect();
    sig.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));

    let top = sig[0].0;
    let null_cut = top * eps * T::from_count(rows.max(n));
    let mut u = Matrix::zeros(rows, n);
    let mut vt = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut filled = 0;
    for (k, &(sv, j)) in sig.iter().enumerate() {
        s.push(sv);
        for i in 0..n {
            vt[(k, i)] = v[j][i];
        }
        if sv > null_cut && sv > T::zero() {
            let col: Vec<T> = cols[j].iter().map(|&x| x / sv).collect();
            u.set_column(k, &col);
            filled = k + 1;
        }
    }
    if filled < n {
        let basis = complete_columns(&u.leading_columns(filled.max(1)), filled, n);
        for k in filled..n {
            u.set_column(k, &basis.column(k));
        }
    }
    (u, s, vt)
}

fn rotate_pair<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Extends the first `have` columns of `m` (assumed orthonormal) to `want`
/// orthonormal columns by Gram–Schmidt on the standard basis, taking the
/// first candidate that keeps at least half its squared norm.
fn complete_columns<T: Scalar>(m: &Matrix<T>, have: usize, want: usize) -> Matrix<T> {
    let rows = m.rows();
    assert!(want <= rows);
    let mut basis: Vec<Vec<T>> = (0..have).map(|j| m.column(j)).collect();
    while basis.len() < want {
        let mut best: Option<(T, Vec<T>)> = None;
        for e in 0..rows {
            let mut cand = vec![T::zero(); rows];
            cand[e] = T::one();
            for _ in 0..2 {
                for b in &basis {
                    let d = scalar::dot(&cand, b);
                    for (c, &bv) in cand.iter_mut().zip(b) {
                        *c -= d * bv;
                    }
                }
            }
            let nrm = scalar::norm2(&cand);
            let good = nrm * nrm >= T::lit(0.5);
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
                best = Some((nrm, cand));
            }
            // A well-conditioned candidate ends the scan; tall bases would
            // otherwise cost rows² per added column.
            if good {
                break;
            }
        }
        let (nrm, mut cand) = best.expect("rows > 0");
        for c in cand.iter_mut() {
            *c /= nrm;
        }
        basis.push(cand);
    }
    Matrix::from_columns(&basis).expect("consistent basis")
}

/// Orthonormal basis of the orthogonal complement of the column space of a
/// matrix with orthonormal columns, as a `rows × (rows − cols)` matrix.
/// Returns `None` when the columns already span the space.
pub fn orthogonal_complement<T: Scalar>(q: &Matrix<T>) -> Option<Matrix<T>> {
    let (rows, cols) = (q.rows(), q.cols());
    if cols >= rows {
        return None;
    }
    let full = complete_columns(q, cols, rows);
    Some(Matrix::from_fn(rows, rows - cols, |i, j| {
        full[(i, cols + j)]
    }))
}

/// Moore–Penrose inverse `V Σ⁻¹ Uᵀ` of a full-column-rank matrix.
pub fn pseudo_inverse<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    pseudo_inverse_with_tol(m, T::lit(DEFAULT_RANK_TOL))
}

pub fn pseudo_inverse_with_tol<T: Scalar>(m: &Matrix<T>, rank_tol: T) -> Result<Matrix<T>> {
    let f = svd_with_tol(m, rank_tol)?;
    if f.numerical_rank < m.cols() {
        return Err(Error::RankDeficient {
            rank: f.numerical_rank,
            required: m.cols(),
        });
    }
    Ok(inverse_from_svd(&f, m.cols()))
}

/// Pseudo-inverse restricted to the numerically nonzero singular values;
/// defined for any matrix (minimum-norm least squares).
pub fn truncated_pseudo_inverse<T: Scalar>(m: &Matrix<T>, rank_tol: T) -> Result<Matrix<T>> {
    let f = svd_with_tol(m, rank_tol)?;
    Ok(inverse_from_svd(&f, f.numerical_rank))
}

fn inverse_from_svd<T: Scalar>(f: &SvdResult<T>, rank: usize) -> Matrix<T> {
    let (rows, cols) = (f.u.rows(), f.vt.cols());
    let mut out = Matrix::zeros(cols, rows);
    for k in 0..rank {
        let inv = T::one() / f.singular_values[k];
        for i in 0..cols {
            let vik = f.vt[(k, i)] * inv;
            if vik == T::zero() {
                continue;
            }
            for j in 0..rows {
                out[(i, j)] += vik * f.u[(j, k)];
            }
        }
    }
    out
}

/// `σ_max / σ_min` for a full-column-rank matrix.
pub fn condition_number<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    let f = svd(m)?;
    if m.rows() < m.cols() || f.numerical_rank < m.cols() {
        return Err(Error::RankDeficient {
            rank: f.numerical_rank,
            required: m.cols(),
        });
    }
    Ok(f.sigma_max() / f.sigma_min())
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Matrix<T>,
}

fn check_symmetric<T: Scalar>(g: &Matrix<T>) -> Result<()> {
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    let asym = g.asymmetry().ok_or_else(|| {
        Error::DimensionMismatch(format!("{}x{} matrix is not square", g.rows(), g.cols()))
    })?;
    if asym > T::lit(1e-10) * g.max_abs().max(T::min_positive_value()) {
        return Err(Error::MatrixNotSymmetric);
    }
    Ok(())
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn symmetric_eigen<T: Scalar>(g: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    check_symmetric(g)?;
    let n = g.rows();
    // Work on the exactly symmetric part.
    let mut a = Matrix::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)]) * T::lit(0.5));
    let mut q = Matrix::identity(n);
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += a[(i, i)] * a[(i, i)];
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off == T::zero() || off.sqrt() <= eps * T::lit(0.01) * (diag + off).sqrt() {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr == T::zero() {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (apr + apr);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[(k, p)], a[(k, r)]);
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[(p, k)], a[(r, k)]);
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .partial_cmp(&a[(j, j)])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| q[(i, order[k])]);
    Ok(SymmetricEigen { values, vectors })
}

fn spd_power<T: Scalar>(g: &Matrix<T>, rank_tol: T, f: impl Fn(T) -> T) -> Result<Matrix<T>> {
    let e = symmetric_eigen(g)?;
    let max = *e.values.last().expect("non-empty");
    let min = e.values[0];
    if max <= T::zero() || min <= rank_tol * max {
        return Err(Error::NotPositiveDefinite);
    }
    let n = g.rows();
    let fv: Vec<T> = e.values.iter().map(|&v| f(v)).collect();
    let mut out = Matrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| e.vectors[(i, k)] * fv[k] * e.vectors[(j, k)])
            .sum()
    });
    for i in 0..n {
        for j in i + 1..n {
            let avg = (out[(i, j)] + out[(j, i)]) * T::lit(0.5);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Symmetric square root of a symmetric positive definite matrix.
pub fn spd_sqrt<T: Scalar>(g: &Matrix<T>) -> Result<Matrix<T>> {
    spd_power(g, T::lit(DEFAULT_RANK_TOL), |v| v.sqrt())
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
pub fn spd_inv_sqrt<T: Scalar>(g: &Matrix<T>) -> Result<Matrix<T>> {
    spd_power(g, T::lit(DEFAULT_RANK_TOL), |v| T::one() / v.sqrt())
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cannot solve {}x{} system with rhs of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    let tiny = scale * T::epsilon() * T::from_count(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                m[(i, col)]
                    .abs()
                    .partial_cmp(&m[(j, col)].abs())
                    .expect("finite entries")
            })
            .expect("non-empty range");
        if m[(piv, col)].abs() <= tiny {
            return Err(Error::RankDeficient {
                rank: col,
                required: n,
            });
        }
        if piv != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(piv, k)];
                m[(piv, k)] = tmp;
            }
            x.swap(col, piv);
        }
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[(col, k)];
                m[(r, k)] -= f * v;
            }
            let xc = x[col];
            x[r] -= f * xc;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for k in r + 1..n {
            acc -= m[(r, k)] * x[k];
        }
        x[r] = acc / m[(r, r)];
    }
    Ok(x)
}
