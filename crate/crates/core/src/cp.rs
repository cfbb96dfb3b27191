//! CP decompositions: alternating least squares on (small) cores, lifting a
//! core decomposition through a Tucker decomposition, and the additive
//! error bound for the lifted result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::factor::{self, DEFAULT_RANK_TOL};
use crate::scalar::{self, Scalar};
use crate::tensor::{DenseTensor, Matrix};
use crate::tucker::TuckerDecomposition;

/// Tolerance on the unit-norm invariant of factor columns.
const UNIT_TOL: f64 = 1e-10;

/// Relative threshold below which a lifted column counts as annihilated.
pub const TERM_DROP_TOL: f64 = 1e-12;

/// First ALS sweep at which line-search extrapolation is attempted.
const LS_START: usize = 3;

/// Relative residual above which the damped Gauss-Newton phase runs.
const LM_TRIGGER: f64 = 1e-12;
const LM_MAX_ITER: usize = 200;
/// Larger problems skip the Gauss-Newton phase (dense normal equations).
const LM_MAX_PARAMS: usize = 400;

/// `Σ_s λ_s x_s⁽¹⁾ ∘ ⋯ ∘ x_s⁽ᴺ⁾` with unit-norm factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CpDecomposition<T> {
    weights: Vec<T>,
    factors: Vec<Matrix<T>>,
}

impl<T: Scalar> CpDecomposition<T> {
    /// Validates that every factor has `weights.len()` unit-norm columns.
    pub fn new(weights: Vec<T>, factors: Vec<Matrix<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "CP decomposition needs factors".into(),
            ));
        }
        let r = weights.len();
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {n} has {} columns, expected {r}",
                    f.cols()
                )));
            }
            for s in 0..r {
                let nrm = scalar::norm2(&f.column(s));
                if (nrm - T::one()).abs() > T::lit(UNIT_TOL) {
                    return Err(Error::InvalidArgument(format!(
                        "column {s} of factor {n} has norm {nrm}, expected 1"
                    )));
                }
            }
        }
        Ok(Self { weights, factors })
    }

    /// Normalizes arbitrary factor columns, folding their norms into the
    /// weights. A zero column becomes `e₁` with zero weight.
    pub fn from_unnormalized(mut weights: Vec<T>, mut factors: Vec<Matrix<T>>) -> Result<Self> {
        let r = weights.len();
        if factors.iter().any(|f| f.cols() != r) {
            return Err(Error::DimensionMismatch(
                "every factor needs one column per weight".into(),
            ));
        }
        for f in factors.iter_mut() {
            for s in 0..r {
                let mut col = f.column(s);
                let nrm = scalar::normalize(&mut col);
                if nrm == T::zero() {
                    col[0] = T::one();
                    weights[s] = T::zero();
                } else {
                    weights[s] *= nrm;
                }
                f.set_column(s, &col);
            }
        }
        Self::new(weights, factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn reconstruct(&self) -> DenseTensor<T> {
        let shape = self.shape();
        let mut out = DenseTensor::zeros(shape.clone()).expect("factor rows are positive");
        for s in 0..self.rank() {
            if self.weights[s] == T::zero() {
                continue;
            }
            let cols: Vec<Vec<T>> = self.factors.iter().map(|f| f.column(s)).collect();
            let refs: Vec<&[T]> = cols.iter().map(Vec::as_slice).collect();
            let term = DenseTensor::outer_vectors(&refs).expect("valid columns");
            out = out
                .add(&term.scaled(self.weights[s]))
                .expect("matching shapes");
        }
        out
    }

    /// `Σ |λ_s|^p`^(1/p), the quantity the p-quasi norm takes the infimum of.
    pub fn weight_norm(&self, p: T) -> T {
        self.weights
            .iter()
            .map(|w| w.abs().powf(p))
            .sum::<T>()
            .powf(T::one() / p)
    }
}

/// Reconstructs a CP decomposition, checking it against the expected shape.
pub fn cp_reconstruct<T: Scalar>(
    d: &CpDecomposition<T>,
    shape: &[usize],
) -> Result<DenseTensor<T>> {
    if d.shape() != shape {
        return Err(Error::DimensionMismatch(format!(
            "CP factors have shape {:?}, requested {:?}",
            d.shape(),
            shape
        )));
    }
    Ok(d.reconstruct())
}

#[derive(Debug, Clone, Copy)]
pub struct CpAlsOptions {
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the relative residual changes by less than this per sweep.
    pub conv_tol: f64,
    /// Extra attempts allowed when a fit is not exact.
    pub restarts: usize,
}

impl Default for CpAlsOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iter: 500,
            conv_tol: 1e-10,
            restarts: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpFitReport<T> {
    /// `‖target − reconstruction‖_F`.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

fn gaussian_init<T: Scalar>(rows: usize, r: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let mut cols: Vec<Vec<T>> = (0..r)
        .map(|_| {
            (0..rows)
                .map(|_| T::lit(StandardNormal.sample(&mut *rng)))
                .collect()
        })
        .collect();
    // Orthonormalize as many columns as the mode extent allows.
    for s in 0..r {
        if s < rows {
            let (done, rest) = cols.split_at_mut(s);
            let c = &mut rest[0];
            for _ in 0..2 {
                for b in done.iter().take(rows) {
                    let d = scalar::dot(c, b);
                    for (x, &y) in c.iter_mut().zip(b) {
                        *x -= d * y;
                    }
                }
            }
        }
        scalar::normalize(&mut cols[s]);
    }
    Matrix::from_columns(&cols).expect("consistent init")
}

fn lm_params(shape: &[usize], r: usize) -> usize {
    shape.iter().sum::<usize>() * r
}

/// Levenberg–Marquardt on the flattened factors, `residual` being the
/// starting misfit. Returns the best factors seen and their misfit.
fn lm_polish<T: Scalar>(
    t: &DenseTensor<T>,
    mut factors: Vec<Matrix<T>>,
    r: usize,
    residual: T,
) -> Result<(Vec<Matrix<T>>, T)> {
    let shape = t.shape().to_vec();
    let order = shape.len();
    let offsets: Vec<usize> = shape
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d * r;
            Some(o)
        })
        .collect();
    let np = lm_params(&shape, r);
    let indices: Vec<Vec<usize>> = (0..t.len())
        .map(|k| {
            let mut idx = vec![0; order];
            let mut rem = k;
            for n in (0..order).rev() {
                idx[n] = rem % shape[n];
                rem /= shape[n];
            }
            idx
        })
        .collect();
    let misfit = |factors: &[Matrix<T>]| -> Vec<T> {
        indices
            .iter()
            .zip(t.data())
            .map(|(idx, &v)| {
                let fit = (0..r).fold(T::zero(), |acc, s| {
                    acc + (0..order).fold(T::one(), |p, k| p * factors[k][(idx[k], s)])
                });
                v - fit
            })
            .collect()
    };
    let mut res = misfit(&factors);
    let mut cost = residual * residual;
    let mut mu = T::lit(1e-3);
    for _ in 0..LM_MAX_ITER {
        // Normal equations JᵀJ and Jᵀres, one row of J per tensor entry.
        let mut jtj = Matrix::zeros(np, np);
        let mut jtr = vec![T::zero(); np];
        let mut row = vec![(0usize, T::zero()); order * r];
        for (idx, &e) in indices.iter().zip(&res) {
            for s in 0..r {
                for n in 0..order {
                    let d = (0..order)
                        .filter(|&k| k != n)
                        .fold(T::one(), |p, k| p * factors[k][(idx[k], s)]);
                    row[s * order + n] = (offsets[n] + idx[n] * r + s, d);
                }
            }
            for &(a, da) in &row {
                jtr[a] += da * e;
                for &(b, db) in &row {
                    jtj[(a, b)] += da * db;
                }
            }
        }
        let grad = jtr.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if grad <= T::epsilon() * cost.sqrt() {
            break;
        }
        let mut accepted = false;
        while !accepted && mu < T::lit(1e12) {
            let mut damped = jtj.clone();
            for a in 0..np {
                damped[(a, a)] += mu * (T::one() + jtj[(a, a)]);
            }
            let Ok(step) = factor::solve(&damped, &jtr) else {
                mu *= T::lit(10.0);
                continue;
            };
            let trial: Vec<Matrix<T>> = factors
                .iter()
                .enumerate()
                .map(|(n, f)| {
                    Matrix::from_fn(f.rows(), r, |i, s| f[(i, s)] + step[offsets[n] + i * r + s])
                })
                .collect();
            let trial_res = misfit(&trial);
            let trial_cost = trial_res.iter().fold(T::zero(), |a, &x| a + x * x);
            if trial_cost < cost {
                let gain = (cost - trial_cost) / cost;
                factors = trial;
                res = trial_res;
                cost = trial_cost;
                mu = (mu * T::lit(0.3)).max(T::lit(1e-12));
                accepted = true;
                if gain < T::epsilon() {
                    return Ok((factors, cost.sqrt()));
                }
            } else {
                mu *= T::lit(10.0);
            }
        }
        if !accepted {
            break;
        }
    }
    Ok((factors, cost.sqrt()))
}

/// `b + step·(f − b)`.
fn extrapolate<T: Scalar>(b: &Matrix<T>, f: &Matrix<T>, step: T) -> Matrix<T> {
    let data = b
        .data()
        .iter()
        .zip(f.data())
        .map(|(&x, &y)| x + step * (y - x))
        .collect();
    Matrix::new(b.rows(), b.cols(), data).expect("same shape")
}

/// Khatri–Rao design matrix for the mode-`n` least-squares problem: row `j`
/// matches column `j` of the mode-`n` unfolding.
fn design_matrix<T: Scalar>(factors: &[Matrix<T>], n: usize, r: usize) -> Matrix<T> {
    let others: Vec<usize> = (0..factors.len()).filter(|&k| k != n).collect();
    let rows: usize = others.iter().map(|&k| factors[k].rows()).product();
    let mut z = Matrix::zeros(rows, r);
    let mut idx = vec![0usize; others.len()];
    for j in 0..rows {
        for s in 0..r {
            let mut p = T::one();
            for (slot, &k) in others.iter().enumerate() {
                p *= factors[k][(idx[slot], s)];
            }
            z[(j, s)] = p;
        }
        // Earliest remaining mode varies fastest.
        for (slot, &k) in others.iter().enumerate() {
            idx[slot] += 1;
            if idx[slot] < factors[k].rows() {
                break;
            }
            idx[slot] = 0;
        }
    }
    z
}

/// Rank-`r` CP fit by alternating least squares over the mode unfoldings.
/// Attempts that stop short of an exact fit are retried from fresh draws
/// of the same generator, up to `opts.restarts` times; the best is kept.
pub fn cp_als<T: Scalar>(
    t: &DenseTensor<T>,
    r: usize,
    opts: &CpAlsOptions,
) -> Result<(CpDecomposition<T>, CpFitReport<T>)> {
    if r < 1 {
        return Err(Error::InvalidArgument("CP rank must be at least 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let norm = t.frobenius_norm();
    if norm == T::zero() {
        let factors = t
            .shape()
            .iter()
            .map(|&d| gaussian_init(d, r, &mut rng))
            .collect();
        let d = CpDecomposition::from_unnormalized(vec![T::zero(); r], factors)?;
        let report = CpFitReport {
            residual: T::zero(),
            iterations: 0,
            converged: true,
        };
        return Ok((d, report));
    }
    let unfoldings = (0..t.order())
        .map(|n| t.matricize(n))
        .collect::<Result<Vec<_>>>()?;
    let mut best = als_attempt(t, &unfoldings, r, opts, &mut rng)?;
    for _ in 0..opts.restarts {
        if best.1.residual / norm <= T::lit(LM_TRIGGER) {
            break;
        }
        let next = als_attempt(t, &unfoldings, r, opts, &mut rng)?;
        if next.1.residual < best.1.residual {
            best = next;
        }
    }
    Ok(best)
}

fn als_attempt<T: Scalar>(
    t: &DenseTensor<T>,
    unfoldings: &[Matrix<T>],
    r: usize,
    opts: &CpAlsOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(CpDecomposition<T>, CpFitReport<T>)> {
    let norm = t.frobenius_norm();
    let mut factors: Vec<Matrix<T>> = t
        .shape()
        .iter()
        .map(|&d| gaussian_init(d, r, rng))
        .collect();
    let conv_tol = T::lit(opts.conv_tol);
    let ls_tol = T::lit(DEFAULT_RANK_TOL) * T::lit(1e-2);
    let fit = |factors: &[Matrix<T>]| -> Result<T> {
        let last = factors.len() - 1;
        let z = design_matrix(factors, last, r);
        let approx = factors[last].matmul(&z.transpose())?;
        Ok(unfoldings[last].sub(&approx)?.frobenius_norm())
    };
    let mut prev = T::infinity();
    let mut residual = norm;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let before = factors.clone();
        for n in 0..t.order() {
            let z = design_matrix(&factors, n, r);
            let zpinv = factor::truncated_pseudo_inverse(&z, ls_tol)?;
            factors[n] = unfoldings[n].matmul(&zpinv.transpose())?;
        }
        residual = fit(&factors)?;
        // Extrapolate along the sweep direction; kept only when it lowers
        // the residual, so each iteration stays monotone.
        if iterations >= LS_START {
            let step = T::lit((iterations as f64).powf(1.0 / 2.0));
            let trial: Vec<Matrix<T>> = factors
                .iter()
                .zip(&before)
                .map(|(f, b)| extrapolate(b, f, step))
                .collect();
            let trial_residual = fit(&trial)?;
            if trial_residual < residual {
                factors = trial;
                residual = trial_residual;
            }
        }
        let rel = residual / norm;
        if (prev - rel).abs() < conv_tol || rel <= T::epsilon() {
            converged = true;
            break;
        }
        prev = rel;
    }
    // ALS crawls through swamps when columns are nearly collinear; a damped
    // Gauss-Newton phase finishes those fits.
    if residual / norm > T::lit(LM_TRIGGER) && lm_params(t.shape(), r) <= LM_MAX_PARAMS {
        let (polished, lm_residual) = lm_polish(t, factors.clone(), r, residual)?;
        if lm_residual < residual {
            factors = polished;
            residual = lm_residual;
        }
        converged = converged || residual / norm <= T::lit(LM_TRIGGER);
    }
    let d = CpDecomposition::from_unnormalized(vec![T::one(); r], factors)?;
    Ok((
        d,
        CpFitReport {
            residual,
            iterations,
            converged,
        },
    ))
}

/// Lifts a CP decomposition of `d.core()` to one of the original tensor:
/// each column `g` becomes `Xₙ g`, renormalized into the weight. Terms with
/// an annihilated column are dropped; if every term vanishes a single
/// zero-weight term remains.
pub fn cp_lift<T: Scalar>(
    core_cp: &CpDecomposition<T>,
    d: &TuckerDecomposition<T>,
) -> Result<CpDecomposition<T>> {
    if core_cp.shape() != d.core_shape() {
        return Err(Error::DimensionMismatch(format!(
            "core CP shape {:?} does not match core shape {:?}",
            core_cp.shape(),
            d.core_shape()
        )));
    }
    let sigma_max = d
        .factors()
        .iter()
        .map(|f| Ok(factor::svd(f)?.sigma_max()))
        .collect::<Result<Vec<T>>>()?;
    let drop_tol = T::lit(TERM_DROP_TOL);
    let mut weights = Vec::new();
    let mut columns: Vec<Vec<Vec<T>>> = vec![Vec::new(); d.factors().len()];
    'terms: for s in 0..core_cp.rank() {
        let mut lifted = Vec::with_capacity(d.factors().len());
        let mut w = core_cp.weights()[s];
        for (n, f) in d.factors().iter().enumerate() {
            let mut col = f.matvec(&core_cp.factors()[n].column(s))?;
            let nrm = scalar::normalize(&mut col);
            if nrm < drop_tol * sigma_max[n] {
                continue 'terms;
            }
            w *= nrm;
            lifted.push(col);
        }
        weights.push(w);
        for (n, col) in lifted.into_iter().enumerate() {
            columns[n].push(col);
        }
    }
    if weights.is_empty() {
        weights.push(T::zero());
        for (n, f) in d.factors().iter().enumerate() {
            let mut e = vec![T::zero(); f.rows()];
            e[0] = T::one();
            columns[n].push(e);
        }
    }
    let factors = columns
        .iter()
        .map(|c| Matrix::from_columns(c))
        .collect::<Result<Vec<_>>>()?;
    CpDecomposition::new(weights, factors)
}

/// `err1 + err2 · ∏ ‖Aₙ‖₂`: bound on the error of a lifted approximate core
/// CP, where `err1` is the Tucker error and `err2` the core CP error.
pub fn lift_error_bound<T: Scalar>(err1: T, err2: T, d: &TuckerDecomposition<T>) -> Result<T> {
    if err1 < T::zero() || err2 < T::zero() || !err1.is_finite() || !err2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "error terms must be finite and non-negative, got {err1} and {err2}"
        )));
    }
    let mut prod = T::one();
    for f in d.factors() {
        prod *= factor::svd(f)?.sigma_max();
    }
    Ok(err1 + err2 * prod)
}
