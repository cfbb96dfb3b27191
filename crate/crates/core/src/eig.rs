//! Z-eigenpairs of symmetric tensors and M-eigenpairs of partial symmetric
//! 4-way tensors, computed on a rescaled Tucker core and lifted back.
//!
//! Sign policy: eigenvectors are flipped so their largest-magnitude entry is
//! positive. For odd order `(λ, x)` and `(−λ, −x)` are both eigenpairs; both
//! are listed, the second with the negated canonical vector.

use std::cmp::Ordering;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::factor::{self, DEFAULT_RANK_TOL};
use crate::scalar::{self, Scalar};
use crate::tensor::{DenseTensor, Matrix, DEFAULT_SYMMETRY_TOL};
use crate::tucker::{self, TuckerDecomposition, TuckerKind};

/// Relative certification tolerance: `certify_tol = 1e-8·max(1, ‖T‖_F)`.
pub const DEFAULT_CERTIFY_REL: f64 = 1e-8;
const MAX_SAMPLES: usize = 1 << 20;
const NEWTON_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct ZEigenpair<T> {
    pub lambda: T,
    pub x: Vec<T>,
    /// `‖T(x^{∘(N−1)}) − λx‖₂`.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MEigenpair<T> {
    pub lambda: T,
    pub mu: T,
    pub x: Vec<T>,
    pub y: Vec<T>,
    /// `‖T(·,y,x,y) − λx‖₂ + ‖T(x,y,x,·) − μy‖₂`.
    pub residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    AngleScan,
    MultistartPower,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::AngleScan => "angle_scan",
            SolverMethod::MultistartPower => "multistart_power",
        }
    }
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZSpectrum<T> {
    /// Certified pairs, deduplicated, by descending eigenvalue.
    pub pairs: Vec<ZEigenpair<T>>,
    /// Pairs whose residual exceeded the certification tolerance.
    pub uncertified: Vec<ZEigenpair<T>>,
    pub method: SolverMethod,
    /// True only when the solver provably found every eigenpair.
    pub complete: bool,
}

impl<T: Scalar> ZSpectrum<T> {
    pub fn eigenvalues(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MSpectrum<T> {
    pub pairs: Vec<MEigenpair<T>>,
    pub uncertified: Vec<MEigenpair<T>>,
}

#[derive(Debug, Clone, Copy)]
pub struct ZeigOptions {
    pub rank_tol: f64,
    /// Initial grid size of the angle scan.
    pub samples: usize,
    /// Bisection width in θ.
    pub refine_tol: f64,
    /// Random starts per phase of the multistart solver.
    pub starts: usize,
    pub seed: u64,
    /// Stop a power run once the iterate moves less than this.
    pub power_tol: f64,
    pub max_iter: usize,
    /// Absolute residual tolerance; `None` means `1e-8·max(1, ‖T‖_F)`.
    pub certify_tol: Option<f64>,
    pub dedup_tol: f64,
}

impl Default for ZeigOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            samples: 8192,
            refine_tol: 1e-13,
            starts: 64,
            seed: 0,
            power_tol: 1e-12,
            max_iter: 2000,
            certify_tol: None,
            dedup_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeigOptions {
    pub rank_tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the joint residual changes by less than this.
    pub stall_tol: f64,
    pub certify_tol: Option<f64>,
    pub dedup_tol: f64,
}

impl Default for MeigOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            starts: 32,
            seed: 0,
            max_iter: 500,
            stall_tol: 1e-12,
            certify_tol: None,
            dedup_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdReport<T> {
    pub psd: bool,
    pub min_eigenvalue: T,
    /// Unit vector attaining `min_eigenvalue`.
    pub witness: Vec<T>,
    /// False when the core solver was not complete (best effort answer).
    pub decisive: bool,
}

fn certify_tol<T: Scalar>(t: &DenseTensor<T>, explicit: Option<f64>) -> T {
    match explicit {
        Some(v) => T::lit(v),
        None => T::lit(DEFAULT_CERTIFY_REL) * t.frobenius_norm().max(T::one()),
    }
}

fn check_symmetric_input<T: Scalar>(t: &DenseTensor<T>) -> Result<usize> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t.order() < 2 {
        return Err(Error::InvalidArgument(format!(
            "eigenpairs need order at least 2, got {}",
            t.order()
        )));
    }
    let n = t.cubical_dim()?;
    if !t.is_symmetric(T::lit(DEFAULT_SYMMETRY_TOL)) {
        return Err(Error::NotSymmetric {
            tol: DEFAULT_SYMMETRY_TOL,
        });
    }
    Ok(n)
}

/// `‖T(x^{∘(N−1)}) − λx‖₂`.
pub fn z_residual<T: Scalar>(t: &DenseTensor<T>, x: &[T], lambda: T) -> Result<T> {
    let g = t.contract_all_but_one(x)?;
    Ok(g.iter()
        .zip(x)
        .map(|(&gi, &xi)| (gi - lambda * xi) * (gi - lambda * xi))
        .sum::<T>()
        .sqrt())
}

fn make_pair<T: Scalar>(t: &DenseTensor<T>, x: Vec<T>) -> Result<ZEigenpair<T>> {
    let g = t.contract_all_but_one(&x)?;
    let lambda = scalar::dot(&g, &x);
    let residual = g
        .iter()
        .zip(&x)
        .map(|(&gi, &xi)| (gi - lambda * xi) * (gi - lambda * xi))
        .sum::<T>()
        .sqrt();
    Ok(ZEigenpair {
        lambda,
        x,
        residual,
    })
}

fn canonical_sign<T: Scalar>(x: &mut [T]) -> bool {
    let flip = factor::leading_sign_negative(x);
    if flip {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    flip
}

/// Canonical representative(s) of the sign orbit of `p`.
fn orbit<T: Scalar>(mut p: ZEigenpair<T>, order: usize) -> Vec<ZEigenpair<T>> {
    let odd = order % 2 == 1;
    if canonical_sign(&mut p.x) && odd {
        p.lambda = -p.lambda;
    }
    if odd {
        let mirror = ZEigenpair {
            lambda: -p.lambda,
            x: p.x.iter().map(|&v| -v).collect(),
            residual: p.residual,
        };
        vec![p, mirror]
    } else {
        vec![p]
    }
}

fn by_descending<T: Scalar>(a: T, b: T) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Sorts by descending eigenvalue and drops duplicates. All pairs with
/// `|λ| ≤ zero_tol` count as one: their eigenvectors are not unique.
fn dedup_z<T: Scalar>(mut pairs: Vec<ZEigenpair<T>>, tol: T, zero_tol: T) -> Vec<ZEigenpair<T>> {
    pairs.sort_by(|a, b| {
        by_descending(a.lambda, b.lambda).then_with(|| {
            a.residual
                .partial_cmp(&b.residual)
                .unwrap_or(Ordering::Equal)
        })
    });
    let mut kept: Vec<ZEigenpair<T>> = Vec::new();
    for p in pairs {
        let dup = kept.iter().any(|q| {
            let both_zero = p.lambda.abs() <= zero_tol && q.lambda.abs() <= zero_tol;
            both_zero
                || ((p.lambda - q.lambda).abs() <= tol
                    && scalar::dot(&p.x, &q.x).abs() >= T::one() - tol)
        });
        if !dup {
            kept.push(p);
        }
    }
    kept
}

fn split_certified<T: Scalar>(
    pairs: Vec<ZEigenpair<T>>,
    tol: T,
) -> (Vec<ZEigenpair<T>>, Vec<ZEigenpair<T>>) {
    pairs.into_iter().partition(|p| p.residual <= tol)
}

/// Reruns canonicalization and dedup; idempotent on solver output.
pub fn canonicalize<T: Scalar>(
    pairs: Vec<ZEigenpair<T>>,
    order: usize,
    dedup_tol: T,
    zero_tol: T,
) -> Vec<ZEigenpair<T>> {
    let expanded = pairs.into_iter().flat_map(|p| orbit(p, order)).collect();
    dedup_z(expanded, dedup_tol, zero_tol)
}

/// `Ĝ = G ×ₙ (XₙᵀXₙ)^{1/2}` over all modes, for symmetric and partial
/// symmetric decompositions. Equals the core when the factors are orthonormal.
pub fn rescaled_core<T: Scalar>(d: &TuckerDecomposition<T>) -> Result<DenseTensor<T>> {
    match d.kind() {
        TuckerKind::Symmetric | TuckerKind::PartialSymmetric => {}
        other => {
            return Err(Error::WrongKind {
                expected: "symmetric or partial_symmetric",
                found: other.name(),
            })
        }
    }
    let roots = d
        .factors()
        .iter()
        .map(|f| factor::spd_sqrt(&f.t_matmul(f)?))
        .collect::<Result<Vec<_>>>()?;
    let g = d.core().tucker_product(&roots)?;
    Ok(match d.kind() {
        TuckerKind::Symmetric => g.symmetrize()?,
        _ => g.partial_symmetrize()?,
    })
}

/// `X (XᵀX)^{−1/2}`: maps unit core vectors to unit original vectors.
fn lift_map<T: Scalar>(x: &Matrix<T>) -> Result<Matrix<T>> {
    x.matmul(&factor::spd_inv_sqrt(&x.t_matmul(x)?)?)
}

fn lift_vector<T: Scalar>(map: &Matrix<T>, a: &[T]) -> Result<Vec<T>> {
    let mut v = map.matvec(a)?;
    scalar::normalize(&mut v);
    Ok(v)
}

/// Unit vector orthogonal to the columns of `x`, if any.
fn null_direction<T: Scalar>(x: &Matrix<T>) -> Result<Option<Vec<T>>> {
    if x.cols() >= x.rows() {
        return Ok(None);
    }
    let u = factor::svd(x)?.u;
    let q = u.leading_columns(x.cols());
    Ok(factor::orthogonal_complement(&q).map(|c| {
        let mut v = c.column(c.cols() - 1);
        canonical_sign(&mut v);
        v
    }))
}

fn angle_point<T: Scalar>(theta: T) -> [T; 2] {
    [theta.cos(), theta.sin()]
}

/// `⟨T(x(θ)^{∘(N−1)}), x(θ)^⊥⟩` and `‖T(x(θ)^{∘(N−1)})‖`.
fn angle_residual<T: Scalar>(t: &DenseTensor<T>, theta: T) -> (T, T) {
    let x = angle_point(theta);
    let g = t.contract_all_but_one(&x).expect("dimension 2");
    (-x[1] * g[0] + x[0] * g[1], scalar::norm2(&g))
}

fn bisect<T: Scalar>(t: &DenseTensor<T>, mut lo: T, mut hi: T, mut flo: T, tol: T) -> T {
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = angle_residual(t, mid).0;
        if fm == T::zero() {
            return mid;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Golden-section minimization of `|f|` on `[lo, hi]`.
fn min_abs<T: Scalar>(t: &DenseTensor<T>, mut lo: T, mut hi: T, tol: T) -> T {
    let r = T::lit(0.618_033_988_749_895);
    let f = |th: T| angle_residual(t, th).0.abs();
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
        if a >= b {
            break;
        }
    }
    (lo + hi) * T::lit(0.5)
}

enum Scan<T> {
    Roots(Vec<T>),
    /// `f ≡ 0`: every unit vector is an eigenvector.
    Degenerate,
}

fn scan_roots<T: Scalar>(t: &DenseTensor<T>, samples: usize, refine_tol: T) -> Scan<T> {
    let pi = T::lit(std::f64::consts::PI);
    let mut m = samples.max(16);
    loop {
        let step = pi / T::from_count(m);
        let vals: Vec<(T, T)> = (0..=m)
            .map(|i| angle_residual(t, T::from_count(i) * step))
            .collect();
        let fscale = vals.iter().map(|v| v.1).fold(T::zero(), T::max);
        let fmax = vals.iter().map(|v| v.0.abs()).fold(T::zero(), T::max);
        if fscale == T::zero() || fmax <= T::lit(1e-12) * fscale {
            return Scan::Degenerate;
        }
        let tangent_tol = T::lit(1e-10) * fscale;
        let theta = |i: usize| T::from_count(i) * step;
        let mut roots = Vec::new();
        for i in 0..m {
            let (f0, f1) = (vals[i].0, vals[i + 1].0);
            if f0 == T::zero() {
                roots.push(theta(i));
            } else if f1 != T::zero() && (f0 < T::zero()) != (f1 < T::zero()) {
                roots.push(bisect(t, theta(i), theta(i + 1), f0, refine_tol));
            } else if i > 0 {
                let (fp, a0, a1) = (vals[i - 1].0, f0.abs(), f1.abs());
                let same_sign = (fp < T::zero()) == (f0 < T::zero());
                if same_sign && a0 <= fp.abs() && a0 <= a1 && a0 <= tangent_tol {
                    let th = min_abs(t, theta(i - 1), theta(i + 1), refine_tol);
                    if angle_residual(t, th).0.abs() <= tangent_tol {
                        roots.push(th);
                    }
                }
            }
        }
        let close = roots.windows(2).any(|w| w[1] - w[0] < T::lit(4.0) * step)
            || (roots.len() > 1 && roots[0] + pi - roots[roots.len() - 1] < T::lit(4.0) * step);
        if !close || m >= MAX_SAMPLES {
            return Scan::Roots(roots);
        }
        m *= 2;
    }
}

/// Complete Z-spectrum of a symmetric tensor of dimension 2: every root of
/// `f(θ) = ⟨T(x^{∘(N−1)}), x^⊥⟩` on `[0, π)` is an eigenvector.
pub fn zeig_dim2<T: Scalar>(t: &DenseTensor<T>, opts: &ZeigOptions) -> Result<ZSpectrum<T>> {
    let n = check_symmetric_input(t)?;
    if n != 2 {
        return Err(Error::InvalidArgument(format!(
            "angle scan needs dimension 2, got {n}"
        )));
    }
    let tol = certify_tol(t, opts.certify_tol);
    let (thetas, complete) = match scan_roots(t, opts.samples, T::lit(opts.refine_tol)) {
        Scan::Roots(r) => (r, true),
        Scan::Degenerate => (vec![T::zero(), T::lit(std::f64::consts::FRAC_PI_2)], false),
    };
    let mut raw = Vec::new();
    for th in thetas {
        let x = angle_point(th).to_vec();
        let x = newton_polish(t, x.clone()).unwrap_or(x);
        raw.push(make_pair(t, x)?);
    }
    finish_spectrum(raw, t.order(), opts, tol, SolverMethod::AngleScan, complete)
}

/// Dimension 1: the only unit vectors are `±1`.
fn zeig_dim1<T: Scalar>(t: &DenseTensor<T>, opts: &ZeigOptions) -> Result<ZSpectrum<T>> {
    let tol = certify_tol(t, opts.certify_tol);
    let raw = vec![make_pair(t, vec![T::one()])?];
    finish_spectrum(raw, t.order(), opts, tol, SolverMethod::AngleScan, true)
}

fn finish_spectrum<T: Scalar>(
    raw: Vec<ZEigenpair<T>>,
    order: usize,
    opts: &ZeigOptions,
    tol: T,
    method: SolverMethod,
    complete: bool,
) -> Result<ZSpectrum<T>> {
    let dedup_tol = T::lit(opts.dedup_tol);
    let (ok, bad) = split_certified(raw, tol);
    Ok(ZSpectrum {
        pairs: canonicalize(ok, order, dedup_tol, tol),
        uncertified: canonicalize(bad, order, dedup_tol, tol),
        method,
        complete,
    })
}

/// Newton on `T(x^{∘(N−1)}) = λx, xᵀx = 1` from `x`. Returns the unit
/// iterate if the KKT system stayed solvable.
fn newton_kkt<T: Scalar>(t: &DenseTensor<T>, x0: &[T], iters: usize) -> Option<Vec<T>> {
    let n = x0.len();
    let order = t.order();
    let mut x = x0.to_vec();
    let g = t.contract_all_but_one(&x).ok()?;
    let mut lambda = scalar::dot(&g, &x);
    let k = T::from_count(order - 1);
    for _ in 0..iters {
        let h = t.contract_leading(&x, order - 2).ok()?;
        let mut jac = Matrix::zeros(n + 1, n + 1);
        let mut rhs = vec![T::zero(); n + 1];
        for i in 0..n {
            let mut gi = T::zero();
            for j in 0..n {
                gi += h[i * n + j] * x[j];
                jac[(i, j)] = k * h[i * n + j];
            }
            jac[(i, i)] -= lambda;
            jac[(i, n)] = -x[i];
            jac[(n, i)] = -x[i];
            rhs[i] = -(gi - lambda * x[i]);
        }
        rhs[n] = -(T::one() - scalar::dot(&x, &x)) * T::lit(0.5);
        let step = factor::solve(&jac, &rhs).ok()?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for i in 0..n {
            x[i] += step[i];
        }
        lambda += step[n];
        let size = scalar::norm2(&step);
        if size <= T::lit(1e-14) * (T::one() + lambda.abs()) {
            break;
        }
        if size > T::lit(1e6) {
            return None;
        }
    }
    if scalar::normalize(&mut x) == T::zero() {
        return None;
    }
    Some(x)
}

/// A couple of Newton steps, kept only if they lower the residual.
fn newton_polish<T: Scalar>(t: &DenseTensor<T>, x: Vec<T>) -> Option<Vec<T>> {
    let before = make_pair(t, x.clone()).ok()?;
    let y = newton_kkt(t, &x, 3)?;
    let after = make_pair(t, y.clone()).ok()?;
    (after.residual < before.residual && scalar::dot(&x, &y).abs() > T::lit(0.99)).then_some(y)
}

fn random_unit<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    loop {
        let mut v: Vec<T> = (0..n)
            .map(|_| T::lit(StandardNormal.sample(&mut *rng)))
            .collect();
        if scalar::normalize(&mut v) > T::zero() {
            return v;
        }
    }
}

/// Shifted symmetric power iteration; `maximize` picks the convex shift.
fn power_run<T: Scalar>(
    t: &DenseTensor<T>,
    mut x: Vec<T>,
    alpha: T,
    maximize: bool,
    tol: T,
    max_iter: usize,
) -> Vec<T> {
    for _ in 0..max_iter {
        let g = t.contract_all_but_one(&x).expect("validated");
        let mut next: Vec<T> = g
            .iter()
            .zip(&x)
            .map(|(&gi, &xi)| {
                if maximize {
                    gi + alpha * xi
                } else {
                    alpha * xi - gi
                }
            })
            .collect();
        if scalar::normalize(&mut next) == T::zero() {
            break;
        }
        let moved = next
            .iter()
            .zip(&x)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        x = next;
        if moved < tol {
            break;
        }
    }
    x
}

/// Best-effort Z-spectrum for any dimension: shifted power runs toward
/// maxima and minima from `starts` random unit vectors each, then Newton on
/// the KKT system from `starts` further random vectors to reach saddles.
/// Only certified pairs are kept.
pub fn zeig_multistart<T: Scalar>(t: &DenseTensor<T>, opts: &ZeigOptions) -> Result<ZSpectrum<T>> {
    let n = check_symmetric_input(t)?;
    let tol = certify_tol(t, opts.certify_tol);
    let order = t.order();
    let mut raw = Vec::new();
    if t.max_abs() == T::zero() {
        let mut e = vec![T::zero(); n];
        e[0] = T::one();
        raw.push(make_pair(t, e)?);
        return finish_spectrum(raw, order, opts, tol, SolverMethod::MultistartPower, false);
    }
    let alpha = T::from_count(order) * t.max_abs();
    let power_tol = T::lit(opts.power_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        let x0 = random_unit(n, &mut rng);
        for maximize in [true, false] {
            let x = power_run(t, x0.clone(), alpha, maximize, power_tol, opts.max_iter);
            let x = newton_polish(t, x.clone()).unwrap_or(x);
            raw.push(make_pair(t, x)?);
        }
    }
    // Saddle points: Newton on the KKT system from each random start and from
    // its image under the contraction, which lies in the tensor's range.
    for _ in 0..opts.starts {
        let x0 = random_unit(n, &mut rng);
        let mut image = t.contract_all_but_one(&x0)?;
        let seeds = if scalar::normalize(&mut image) > T::zero() {
            vec![x0, image]
        } else {
            vec![x0]
        };
        for s in seeds {
            if let Some(x) = newton_kkt(t, &s, NEWTON_ITERS) {
                raw.push(make_pair(t, x)?);
            }
        }
    }
    // Runs that did not converge are not findings.
    raw.retain(|p| p.residual <= tol);
    finish_spectrum(raw, order, opts, tol, SolverMethod::MultistartPower, false)
}

/// Z-spectrum through the symmetric Tucker core: solve on the rescaled core
/// (angle scan for core dimension 2, multistart otherwise), lift each
/// eigenvector by `X(XᵀX)^{−1/2}`, and add a zero eigenpair from the null
/// space of `Xᵀ` when the core is smaller than the tensor and no zero
/// eigenvalue was found already. Residuals are certified on `t` itself.
pub fn zeig_via_core<T: Scalar>(t: &DenseTensor<T>, opts: &ZeigOptions) -> Result<ZSpectrum<T>> {
    check_symmetric_input(t)?;
    let d = tucker::symmetric_tucker(t, T::lit(opts.rank_tol))?;
    zeig_with_decomposition(t, &d, opts)
}

/// As [`zeig_via_core`] with a precomputed symmetric decomposition of `t`.
pub fn zeig_with_decomposition<T: Scalar>(
    t: &DenseTensor<T>,
    d: &TuckerDecomposition<T>,
    opts: &ZeigOptions,
) -> Result<ZSpectrum<T>> {
    check_symmetric_input(t)?;
    if d.kind() != TuckerKind::Symmetric {
        return Err(Error::WrongKind {
            expected: "symmetric",
            found: d.kind().name(),
        });
    }
    if d.original_shape() != t.shape() {
        return Err(Error::DimensionMismatch(format!(
            "decomposition of shape {:?} for a tensor of shape {:?}",
            d.original_shape(),
            t.shape()
        )));
    }
    let tol = certify_tol(t, opts.certify_tol);
    let g = rescaled_core(d)?;
    let core_opts = ZeigOptions {
        certify_tol: None,
        ..*opts
    };
    let core_spec = if g.shape()[0] == 1 {
        zeig_dim1(&g, &core_opts)?
    } else if g.shape()[0] == 2 {
        zeig_dim2(&g, &core_opts)?
    } else {
        zeig_multistart(&g, &core_opts)?
    };
    let x = &d.factors()[0];
    let map = lift_map(x)?;
    let mut raw = Vec::new();
    for p in core_spec.pairs.iter().chain(&core_spec.uncertified) {
        raw.push(make_pair(t, lift_vector(&map, &p.x)?)?);
    }
    let has_zero = raw
        .iter()
        .any(|p| p.lambda.abs() <= tol && p.residual <= tol);
    if !has_zero {
        if let Some(v) = null_direction(x)? {
            raw.push(make_pair(t, v)?);
        }
    }
    finish_spectrum(
        raw,
        t.order(),
        opts,
        tol,
        core_spec.method,
        core_spec.complete,
    )
}

/// PSD test for even-order symmetric tensors via the minimum Z-eigenvalue
/// of the core. Decisive when the core solver is complete.
pub fn is_psd<T: Scalar>(t: &DenseTensor<T>, opts: &ZeigOptions) -> Result<PsdReport<T>> {
    check_symmetric_input(t)?;
    if t.order() % 2 == 1 {
        return Err(Error::OddOrder(t.order()));
    }
    let spec = zeig_via_core(t, opts)?;
    let tol = certify_tol(t, opts.certify_tol);
    let min = spec
        .pairs
        .iter()
        .min_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(Ordering::Equal))
        .ok_or_else(|| Error::InvalidArgument("no certified eigenpair found".into()))?;
    Ok(PsdReport {
        psd: min.lambda >= -tol,
        min_eigenvalue: min.lambda,
        witness: min.x.clone(),
        decisive: spec.complete,
    })
}

fn check_partial_input<T: Scalar>(t: &DenseTensor<T>) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t.order() != 4 {
        return Err(Error::InvalidArgument(format!(
            "M-eigenpairs need a 4-way tensor, got order {}",
            t.order()
        )));
    }
    if !t.is_partial_symmetric(T::lit(DEFAULT_SYMMETRY_TOL)) {
        return Err(Error::NotPartialSymmetric {
            tol: DEFAULT_SYMMETRY_TOL,
        });
    }
    Ok(())
}

fn contract_matrix<T: Scalar>(t: &DenseTensor<T>, slots: [Option<&[T]>; 4]) -> Matrix<T> {
    let c = t.contract(&slots).expect("validated shapes");
    let n = c.shape()[0];
    Matrix::from_fn(n, n, |i, j| {
        (c.data()[i * n + j] + c.data()[j * n + i]) * T::lit(0.5)
    })
}

fn make_mpair<T: Scalar>(t: &DenseTensor<T>, x: Vec<T>, y: Vec<T>) -> MEigenpair<T> {
    let gx = contract_matrix(t, [None, Some(&y), None, Some(&y)])
        .matvec(&x)
        .expect("validated shapes");
    let gy = contract_matrix(t, [Some(&x), None, Some(&x), None])
        .matvec(&y)
        .expect("validated shapes");
    let lambda = scalar::dot(&gx, &x);
    let mu = scalar::dot(&gy, &y);
    let rx: Vec<T> = gx.iter().zip(&x).map(|(&g, &v)| g - lambda * v).collect();
    let ry: Vec<T> = gy.iter().zip(&y).map(|(&g, &v)| g - mu * v).collect();
    MEigenpair {
        lambda,
        mu,
        residual: scalar::norm2(&rx) + scalar::norm2(&ry),
        x,
        y,
    }
}

fn extreme_vector<T: Scalar>(m: &Matrix<T>, largest: bool) -> Option<Vec<T>> {
    let e = factor::symmetric_eigen(m).ok()?;
    let k = if largest { m.rows() - 1 } else { 0 };
    Some(e.vectors.column(k))
}

fn dedup_m<T: Scalar>(mut pairs: Vec<MEigenpair<T>>, tol: T, zero_tol: T) -> Vec<MEigenpair<T>> {
    for p in pairs.iter_mut() {
        canonical_sign(&mut p.x);
        canonical_sign(&mut p.y);
    }
    pairs.sort_by(|a, b| by_descending(a.lambda, b.lambda));
    let mut kept: Vec<MEigenpair<T>> = Vec::new();
    for p in pairs {
        let dup = kept.iter().any(|q| {
            let both_zero = p.lambda.abs() <= zero_tol && q.lambda.abs() <= zero_tol;
            both_zero
                || ((p.lambda - q.lambda).abs() <= tol
                    && scalar::dot(&p.x, &q.x).abs() >= T::one() - tol
                    && scalar::dot(&p.y, &q.y).abs() >= T::one() - tol)
        });
        if !dup {
            kept.push(p);
        }
    }
    kept
}

fn finish_mspectrum<T: Scalar>(raw: Vec<MEigenpair<T>>, tol: T, dedup_tol: T) -> MSpectrum<T> {
    let (ok, bad): (Vec<_>, Vec<_>) = raw.into_iter().partition(|p| p.residual <= tol);
    MSpectrum {
        pairs: dedup_m(ok, dedup_tol, tol),
        uncertified: dedup_m(bad, dedup_tol, tol),
    }
}

/// Best-effort M-spectrum: alternating updates of `x` and `y` to extreme
/// eigenvectors of `T(·,y,·,y)` and `T(x,·,x,·)`, from random starts,
/// half tracking the largest and half the smallest eigenvalue.
pub fn meig_multistart<T: Scalar>(t: &DenseTensor<T>, opts: &MeigOptions) -> Result<MSpectrum<T>> {
    check_partial_input(t)?;
    let (n1, n2) = (t.shape()[0], t.shape()[1]);
    let tol = certify_tol(t, opts.certify_tol);
    let stall = T::lit(opts.stall_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut raw = Vec::new();
    for _ in 0..opts.starts {
        let x0: Vec<T> = random_unit(n1, &mut rng);
        let y0: Vec<T> = random_unit(n2, &mut rng);
        for largest in [true, false] {
            let (mut x, mut y) = (x0.clone(), y0.clone());
            let mut prev = T::infinity();
            for _ in 0..opts.max_iter {
                let mx = contract_matrix(t, [None, Some(&y), None, Some(&y)]);
                match extreme_vector(&mx, largest) {
                    Some(v) => x = v,
                    None => break,
                }
                let my = contract_matrix(t, [Some(&x), None, Some(&x), None]);
                match extreme_vector(&my, largest) {
                    Some(v) => y = v,
                    None => break,
                }
                let r = make_mpair(t, x.clone(), y.clone()).residual;
                if (prev - r).abs() < stall || r <= T::epsilon() {
                    break;
                }
                prev = r;
            }
            raw.push(make_mpair(t, x, y));
        }
    }
    Ok(finish_mspectrum(raw, tol, T::lit(opts.dedup_tol)))
}

/// M-spectrum through the partial symmetric core, lifting `x` by
/// `A(AᵀA)^{−1/2}` and `y` by `B(BᵀB)^{−1/2}`, with a zero pair added when
/// either core dimension is smaller than the tensor's.
pub fn meig_via_core<T: Scalar>(t: &DenseTensor<T>, opts: &MeigOptions) -> Result<MSpectrum<T>> {
    check_partial_input(t)?;
    let d = tucker::partial_symmetric_tucker(t, T::lit(opts.rank_tol))?;
    meig_with_decomposition(t, &d, opts)
}

/// As [`meig_via_core`] with a precomputed partial symmetric decomposition.
pub fn meig_with_decomposition<T: Scalar>(
    t: &DenseTensor<T>,
    d: &TuckerDecomposition<T>,
    opts: &MeigOptions,
) -> Result<MSpectrum<T>> {
    check_partial_input(t)?;
    if d.kind() != TuckerKind::PartialSymmetric {
        return Err(Error::WrongKind {
            expected: "partial_symmetric",
            found: d.kind().name(),
        });
    }
    if d.original_shape() != t.shape() {
        return Err(Error::DimensionMismatch(format!(
            "decomposition of shape {:?} for a tensor of shape {:?}",
            d.original_shape(),
            t.shape()
        )));
    }
    let g = rescaled_core(d)?;
    let core_opts = MeigOptions {
        certify_tol: None,
        ..*opts
    };
    let core_spec = meig_multistart(&g, &core_opts)?;
    let (a, b) = (&d.factors()[0], &d.factors()[1]);
    let (ma, mb) = (lift_map(a)?, lift_map(b)?);
    let tol = certify_tol(t, opts.certify_tol);
    let mut raw = Vec::new();
    for p in core_spec.pairs.iter().chain(&core_spec.uncertified) {
        raw.push(make_mpair(
            t,
            lift_vector(&ma, &p.x)?,
            lift_vector(&mb, &p.y)?,
        ));
    }
    let has_zero = raw
        .iter()
        .any(|p| p.lambda.abs() <= tol && p.residual <= tol);
    if !has_zero {
        let zero = match (null_direction(a)?, null_direction(b)?) {
            (Some(x), _) => Some((x, b.column(0))),
            (None, Some(y)) => Some((a.column(0), y)),
            (None, None) => None,
        };
        if let Some((x, mut y)) = zero {
            let mut x = x;
            scalar::normalize(&mut x);
            scalar::normalize(&mut y);
            raw.push(make_mpair(t, x, y));
        }
    }
    Ok(finish_mspectrum(raw, tol, T::lit(opts.dedup_tol)))
}

#[cfg(test)]
mod tests;
