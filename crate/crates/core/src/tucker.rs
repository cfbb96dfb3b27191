//! Exact Tucker decompositions and the norm sandwich they induce.
//!
//! Every decomposition stores, next to each full-column-rank factor `Xₙ`,
//! its left inverse `Yₙ = (XₙᵀXₙ)⁻¹Xₙᵀ`, so that the core can be recovered
//! from the tensor as `G = X ×₁ Y₁ ⋯ ×_N Y_N`.

use std::fmt;

use crate::error::{Error, Result};
use crate::factor::{self, DEFAULT_RANK_TOL};
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Matrix, DEFAULT_SYMMETRY_TOL};

/// Relative Frobenius tolerance for accepting a reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuckerKind {
    Orthonormal,
    Independent,
    Symmetric,
    PartialSymmetric,
}

impl TuckerKind {
    pub fn name(self) -> &'static str {
        match self {
            TuckerKind::Orthonormal => "orthonormal",
            TuckerKind::Independent => "independent",
            TuckerKind::Symmetric => "symmetric",
            TuckerKind::PartialSymmetric => "partial_symmetric",
        }
    }
}

impl fmt::Display for TuckerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct TuckerDecomposition<T> {
    core: DenseTensor<T>,
    factors: Vec<Matrix<T>>,
    inverse_factors: Vec<Matrix<T>>,
    kind: TuckerKind,
}

fn same_matrix<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> bool {
    a.rows() == b.rows()
        && a.cols() == b.cols()
        && a.sub(b)
            .is_ok_and(|d| d.max_abs() <= T::lit(1e-12) * a.max_abs().max(T::one()))
}

impl<T: Scalar> TuckerDecomposition<T> {
    /// Assembles a decomposition from a core and factors, validating the
    /// invariants of `kind` and computing the left inverses.
    pub fn new(core: DenseTensor<T>, factors: Vec<Matrix<T>>, kind: TuckerKind) -> Result<Self> {
        Self::with_rank_tol(core, factors, kind, T::lit(DEFAULT_RANK_TOL))
    }

    pub fn with_rank_tol(
        core: DenseTensor<T>,
        factors: Vec<Matrix<T>>,
        kind: TuckerKind,
        rank_tol: T,
    ) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for a core of order {}",
                factors.len(),
                core.order()
            )));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[n] {
                return Err(Error::DimensionMismatch(format!(
                    "factor {n} is {}x{} but core extent is {}",
                    f.rows(),
                    f.cols(),
                    core.shape()[n]
                )));
            }
        }
        let inverse_factors = factors
            .iter()
            .map(|f| factor::pseudo_inverse_with_tol(f, rank_tol))
            .collect::<Result<Vec<_>>>()?;
        let sym_tol = T::lit(DEFAULT_SYMMETRY_TOL);
        match kind {
            TuckerKind::Orthonormal => {
                for f in &factors {
                    let g = f.t_matmul(f)?;
                    if g.sub(&Matrix::identity(f.cols()))?.max_abs() > T::lit(1e-10) {
                        return Err(Error::InvalidArgument(
                            "orthonormal decomposition requires XᵀX = I".into(),
                        ));
                    }
                }
            }
            TuckerKind::Independent => {}
            TuckerKind::Symmetric => {
                if factors.iter().any(|f| !same_matrix(f, &factors[0])) {
                    return Err(Error::InvalidArgument(
                        "symmetric decomposition requires identical factors".into(),
                    ));
                }
                if !core.is_symmetric(sym_tol) {
                    return Err(Error::NotSymmetric {
                        tol: sym_tol.as_f64(),
                    });
                }
            }
            TuckerKind::PartialSymmetric => {
                if core.order() != 4
                    || !same_matrix(&factors[0], &factors[2])
                    || !same_matrix(&factors[1], &factors[3])
                {
                    return Err(Error::InvalidArgument(
                        "partial symmetric decomposition needs factors (A, B, A, B)".into(),
                    ));
                }
                if !core.is_partial_symmetric(sym_tol) {
                    return Err(Error::NotPartialSymmetric {
                        tol: sym_tol.as_f64(),
                    });
                }
            }
        }
        Ok(Self {
            core,
            factors,
            inverse_factors,
            kind,
        })
    }

    pub fn core(&self) -> &DenseTensor<T> {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn inverse_factors(&self) -> &[Matrix<T>] {
        &self.inverse_factors
    }

    pub fn kind(&self) -> TuckerKind {
        self.kind
    }

    pub fn core_shape(&self) -> &[usize] {
        self.core.shape()
    }

    pub fn original_shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// `⟦core; factors⟧`.
    pub fn reconstruct(&self) -> DenseTensor<T> {
        self.core
            .tucker_product(&self.factors)
            .expect("validated factor dimensions")
    }

    /// `‖t − ⟦core; factors⟧‖_F`.
    pub fn reconstruction_residual(&self, t: &DenseTensor<T>) -> Result<T> {
        Ok(t.sub(&self.reconstruct())?.frobenius_norm())
    }

    /// Replaces the core, keeping factors and kind; used for perturbed or
    /// approximate cores.
    pub fn with_core(&self, core: DenseTensor<T>) -> Result<Self> {
        if core.shape() != self.core.shape() {
            return Err(Error::DimensionMismatch(format!(
                "core shape {:?} does not match {:?}",
                core.shape(),
                self.core.shape()
            )));
        }
        Ok(Self {
            core,
            ..self.clone()
        })
    }
}

/// Leading `max(1, rank)` left singular vectors of the mode-`n` unfolding.
fn mode_basis<T: Scalar>(t: &DenseTensor<T>, n: usize, rank_tol: T) -> Result<Matrix<T>> {
    let f = factor::svd_with_tol(&t.matricize(n)?, rank_tol)?;
    Ok(f.u.leading_columns(f.numerical_rank.max(1)))
}

fn check_finite<T: Scalar>(t: &DenseTensor<T>) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Orthonormal (HOSVD) decomposition: each factor spans the column space of
/// the matching unfolding. The zero tensor yields an all-ones core shape
/// holding a single zero.
pub fn hosvd<T: Scalar>(t: &DenseTensor<T>, rank_tol: T) -> Result<TuckerDecomposition<T>> {
    check_finite(t)?;
    let factors = (0..t.order())
        .map(|n| mode_basis(t, n, rank_tol))
        .collect::<Result<Vec<_>>>()?;
    let inverse_factors: Vec<_> = factors.iter().map(Matrix::transpose).collect();
    let core = t.tucker_product(&inverse_factors)?;
    Ok(TuckerDecomposition {
        core,
        factors,
        inverse_factors,
        kind: TuckerKind::Orthonormal,
    })
}

/// Independent decomposition from caller-supplied full-column-rank factors.
/// Fails if the factors do not span the mode spaces of `t`.
pub fn independent_tucker<T: Scalar>(
    t: &DenseTensor<T>,
    factors: Vec<Matrix<T>>,
) -> Result<TuckerDecomposition<T>> {
    check_finite(t)?;
    if factors.len() != t.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            t.order()
        )));
    }
    let inverse_factors = factors
        .iter()
        .map(factor::pseudo_inverse)
        .collect::<Result<Vec<_>>>()?;
    let core = t.tucker_product(&inverse_factors)?;
    let d = TuckerDecomposition {
        core,
        factors,
        inverse_factors,
        kind: TuckerKind::Independent,
    };
    let residual = d.reconstruction_residual(t)?;
    let tolerance = T::lit(RECONSTRUCTION_TOL) * t.frobenius_norm();
    if residual > tolerance {
        return Err(Error::Reconstruction {
            residual: residual.as_f64(),
            tolerance: tolerance.as_f64(),
        });
    }
    Ok(d)
}

/// Symmetric decomposition `⟦G; U, …, U⟧` with one orthonormal factor taken
/// from the mode-1 unfolding (all unfoldings coincide for symmetric input).
pub fn symmetric_tucker<T: Scalar>(
    t: &DenseTensor<T>,
    rank_tol: T,
) -> Result<TuckerDecomposition<T>> {
    check_finite(t)?;
    let sym_tol = T::lit(DEFAULT_SYMMETRY_TOL);
    if !t.is_symmetric(sym_tol) {
        return Err(Error::NotSymmetric {
            tol: sym_tol.as_f64(),
        });
    }
    let u = mode_basis(t, 0, rank_tol)?;
    let ut = u.transpose();
    let n = t.order();
    let core = t.tucker_product(&vec![ut.clone(); n])?.symmetrize()?;
    Ok(TuckerDecomposition {
        core,
        factors: vec![u; n],
        inverse_factors: vec![ut; n],
        kind: TuckerKind::Symmetric,
    })
}

/// Partial symmetric decomposition `⟦G; A, B, A, B⟧` of a 4-way tensor
/// with `t_ijkl = t_kjil = t_ilkj = t_klij`.
pub fn partial_symmetric_tucker<T: Scalar>(
    t: &DenseTensor<T>,
    rank_tol: T,
) -> Result<TuckerDecomposition<T>> {
    check_finite(t)?;
    if t.order() != 4 {
        return Err(Error::InvalidArgument(format!(
            "partial symmetric decomposition needs a 4-way tensor, got order {}",
            t.order()
        )));
    }
    let sym_tol = T::lit(DEFAULT_SYMMETRY_TOL);
    if !t.is_partial_symmetric(sym_tol) {
        return Err(Error::NotPartialSymmetric {
            tol: sym_tol.as_f64(),
        });
    }
    let a = mode_basis(t, 0, rank_tol)?;
    let b = mode_basis(t, 1, rank_tol)?;
    let (at, bt) = (a.transpose(), b.transpose());
    let inverse_factors = vec![at.clone(), bt.clone(), at, bt];
    let core = t.tucker_product(&inverse_factors)?.partial_symmetrize()?;
    Ok(TuckerDecomposition {
        core,
        factors: vec![a.clone(), b.clone(), a, b],
        inverse_factors,
        kind: TuckerKind::PartialSymmetric,
    })
}

/// Numerical ranks of all unfoldings (all ones for the zero tensor).
pub fn tucker_rank<T: Scalar>(t: &DenseTensor<T>, rank_tol: T) -> Result<Vec<usize>> {
    check_finite(t)?;
    (0..t.order())
        .map(|n| {
            Ok(factor::svd_with_tol(&t.matricize(n)?, rank_tol)?
                .numerical_rank
                .max(1))
        })
        .collect()
}

/// Constants with `α‖G‖_F ≤ ‖X‖_F ≤ β‖G‖_F`. The same pair bounds the
/// CP-based p-quasi norms (nuclear norm at p = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct NormBounds<T> {
    /// `∏ σ_min(Xₙ)`.
    pub alpha: T,
    /// `∏ ‖Xₙ‖₂`.
    pub beta: T,
    /// `κ(Xₙ) = σ_max / σ_min` per mode.
    pub kappas: Vec<T>,
}

impl<T: Scalar> NormBounds<T> {
    /// Checks the Frobenius sandwich with a relative slack.
    pub fn sandwich_holds(&self, tensor_norm: T, core_norm: T, slack: T) -> bool {
        let lo = self.alpha * core_norm;
        let hi = self.beta * core_norm;
        let pad = slack * tensor_norm.max(hi);
        lo <= tensor_norm + pad && tensor_norm <= hi + pad
    }
}

pub fn norm_bounds<T: Scalar>(d: &TuckerDecomposition<T>) -> Result<NormBounds<T>> {
    let mut alpha = T::one();
    let mut beta = T::one();
    let mut kappas = Vec::with_capacity(d.factors.len());
    for f in &d.factors {
        let s = factor::svd(f)?;
        alpha *= s.sigma_min();
        beta *= s.sigma_max();
        kappas.push(s.sigma_max() / s.sigma_min());
    }
    Ok(NormBounds {
        alpha,
        beta,
        kappas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn random_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> DenseTensor<f64> {
        DenseTensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn rel_residual(d: &TuckerDecomposition<f64>, t: &DenseTensor<f64>) -> f64 {
        d.reconstruction_residual(t).unwrap() / t.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn hosvd_rank_one() {
        let (u, v, w) = ([1.0, 2.0], [0.5, -1.0, 2.0], [3.0, 0.0, 4.0, 1.0]);
        let t = DenseTensor::outer_vectors(&[&u, &v, &w]).unwrap();
        let d = hosvd(&t, TOL).unwrap();
        assert_eq!(d.core_shape(), &[1, 1, 1]);
        let expect = 5f64.sqrt() * 5.25f64.sqrt() * 26f64.sqrt();
        assert!((d.core().data()[0].abs() - expect).abs() < 1e-12);
        assert_eq!(tucker_rank(&t, TOL).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn hosvd_random_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(vec![4, 4, 4], &mut rng);
        let d = hosvd(&t, TOL).unwrap();
        assert_eq!(d.kind(), TuckerKind::Orthonormal);
        assert!(rel_residual(&d, &t) <= 1e-8);
        for (f, y) in d.factors().iter().zip(d.inverse_factors()) {
            assert_eq!(*y, f.transpose());
        }
    }

    #[test]
    fn zero_tensor_has_unit_core() {
        let t = DenseTensor::<f64>::zeros(vec![3, 2, 4]).unwrap();
        let d = hosvd(&t, TOL).unwrap();
        assert_eq!(d.core_shape(), &[1, 1, 1]);
        assert_eq!(d.core().data(), &[0.0]);
        assert_eq!(tucker_rank(&t, TOL).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn independent_with_identity_factors_keeps_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor(vec![2, 3, 2], &mut rng);
        let eye: Vec<_> = t.shape().iter().map(|&d| Matrix::identity(d)).collect();
        let d = independent_tucker(&t, eye).unwrap();
        assert!(d.core().sub(&t).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn independent_from_mixed_hosvd_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let core = random_tensor(vec![2, 3, 2], &mut rng);
        let fs = vec![
            random_matrix(4, 2, &mut rng),
            random_matrix(5, 3, &mut rng),
            random_matrix(3, 2, &mut rng),
        ];
        let t = core.tucker_product(&fs).unwrap();
        let h = hosvd(&t, TOL).unwrap();
        let mixed: Vec<_> = h
            .factors()
            .iter()
            .map(|f| {
                f.matmul(&random_matrix(f.cols(), f.cols(), &mut rng))
                    .unwrap()
            })
            .collect();
        let d = independent_tucker(&t, mixed).unwrap();
        assert_eq!(d.kind(), TuckerKind::Independent);
        assert!(rel_residual(&d, &t) <= 1e-8);
        lemma_identities(&d, &t);
    }

    #[test]
    fn independent_rejects_bad_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_tensor(vec![3, 3], &mut rng);
        let mut f0 = random_matrix(3, 2, &mut rng);
        for i in 0..3 {
            f0[(i, 1)] = 0.0;
        }
        let err = independent_tucker(&t, vec![f0, Matrix::identity(3)]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
        // Full rank but not spanning a generic 3x3 tensor's mode space.
        let f0 = random_matrix(3, 2, &mut rng);
        let err = independent_tucker(&t, vec![f0, Matrix::identity(3)]).unwrap_err();
        assert!(matches!(err, Error::Reconstruction { .. }));
    }

    /// `G = G ×ₙ Aₙ ×ₙ Bₙ` and `X = X ×ₙ Bₙ ×ₙ Aₙ` for every mode.
    fn lemma_identities(d: &TuckerDecomposition<f64>, t: &DenseTensor<f64>) {
        let core = d.core();
        for n in 0..t.order() {
            let (a, b) = (&d.factors()[n], &d.inverse_factors()[n]);
            let g2 = core.multi_mode_product(&[(n, a), (n, b)]).unwrap();
            assert!(g2.sub(core).unwrap().frobenius_norm() <= 1e-8 * core.frobenius_norm());
            let t2 = t.multi_mode_product(&[(n, b), (n, a)]).unwrap();
            assert!(t2.sub(t).unwrap().frobenius_norm() <= 1e-8 * t.frobenius_norm());
        }
    }

    #[test]
    fn symmetric_decomposition() {
        let x = [0.3, -0.4, 1.2, 0.1];
        let t = DenseTensor::symmetric_outer_power(&x, 3).unwrap();
        let d = symmetric_tucker(&t, TOL).unwrap();
        assert_eq!(d.core_shape(), &[1, 1, 1]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let core = random_tensor(vec![2, 2, 2, 2], &mut rng)
            .symmetrize()
            .unwrap();
        let x = random_matrix(5, 2, &mut rng);
        let t = core
            .tucker_product(&vec![x; 4])
            .unwrap()
            .symmetrize()
            .unwrap();
        let d = symmetric_tucker(&t, TOL).unwrap();
        assert_eq!(d.core_shape(), &[2, 2, 2, 2]);
        assert!(d.core().is_symmetric(1e-10));
        assert!(rel_residual(&d, &t) <= 1e-8);
        lemma_identities(&d, &t);

        let bad = random_tensor(vec![3, 3, 3], &mut rng);
        assert!(matches!(
            symmetric_tucker(&bad, TOL),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn partial_symmetric_decomposition() {
        let (u, v) = ([0.6, 0.8, 0.0], [1.0, -1.0]);
        let t = DenseTensor::outer_vectors(&[&u, &v, &u, &v]).unwrap();
        let d = partial_symmetric_tucker(&t, TOL).unwrap();
        assert_eq!(d.core_shape(), &[1, 1, 1, 1]);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut t = DenseTensor::zeros(vec![4, 3, 4, 3]).unwrap();
        for _ in 0..2 {
            let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let term = DenseTensor::outer_vectors(&[&a, &b, &a, &b]).unwrap();
            t = t.add(&term).unwrap();
        }
        let t = t.partial_symmetrize().unwrap();
        let d = partial_symmetric_tucker(&t, TOL).unwrap();
        assert_eq!(d.kind(), TuckerKind::PartialSymmetric);
        assert!(d.core().is_partial_symmetric(1e-10));
        assert_eq!(d.factors()[0], d.factors()[2]);
        assert_eq!(d.factors()[1], d.factors()[3]);
        assert!(rel_residual(&d, &t) <= 1e-8);
        lemma_identities(&d, &t);

        let bad = random_tensor(vec![3, 2, 3, 2], &mut rng);
        assert!(matches!(
            partial_symmetric_tucker(&bad, TOL),
            Err(Error::NotPartialSymmetric { .. })
        ));
        let wrong_order = random_tensor(vec![3, 3, 3], &mut rng);
        assert!(partial_symmetric_tucker(&wrong_order, TOL).is_err());
    }

    #[test]
    fn norm_bounds_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tensor(vec![3, 4, 2], &mut rng);
        let d = hosvd(&t, TOL).unwrap();
        let nb = norm_bounds(&d).unwrap();
        assert!((nb.alpha - 1.0).abs() < 1e-12 && (nb.beta - 1.0).abs() < 1e-12);
        assert!((t.frobenius_norm() - d.core().frobenius_norm()).abs() < 1e-12);

        let doubled: Vec<_> = d.factors().iter().map(|f| f.scaled(2.0)).collect();
        let d2 =
            TuckerDecomposition::new(d.core().clone(), doubled, TuckerKind::Independent).unwrap();
        let nb2 = norm_bounds(&d2).unwrap();
        assert!((nb2.beta - 8.0 * nb.beta).abs() < 1e-12);

        let core = random_tensor(vec![2, 3, 2], &mut rng);
        let fs = vec![
            random_matrix(4, 2, &mut rng),
            random_matrix(3, 3, &mut rng),
            random_matrix(5, 2, &mut rng),
        ];
        let d = TuckerDecomposition::new(core.clone(), fs, TuckerKind::Independent).unwrap();
        let nb = norm_bounds(&d).unwrap();
        let x = d.reconstruct();
        assert!(nb.alpha <= nb.beta);
        let prod: f64 = nb.kappas.iter().product();
        assert!((nb.beta / nb.alpha - prod).abs() <= 1e-10 * prod);
        assert!(nb.sandwich_holds(x.frobenius_norm(), core.frobenius_norm(), 1e-10));
    }

    #[test]
    fn core_of_core_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let core = random_tensor(vec![2, 2, 3], &mut rng);
        let fs = vec![
            random_matrix(5, 2, &mut rng),
            random_matrix(4, 2, &mut rng),
            random_matrix(6, 3, &mut rng),
        ];
        let t = core.tucker_product(&fs).unwrap();
        let d = hosvd(&t, TOL).unwrap();
        let dd = hosvd(d.core(), TOL).unwrap();
        assert_eq!(dd.core_shape(), d.core_shape());
        let (a, b) = (dd.core().frobenius_norm(), d.core().frobenius_norm());
        assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn new_validates_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let core = random_tensor(vec![2, 2, 2], &mut rng);
        let f = random_matrix(3, 2, &mut rng);
        assert!(TuckerDecomposition::new(
            core.clone(),
            vec![f.clone(); 3],
            TuckerKind::Orthonormal
        )
        .is_err());
        assert!(
            TuckerDecomposition::new(core.clone(), vec![f.clone(); 3], TuckerKind::Symmetric)
                .is_err()
        );
        let sym = core.symmetrize().unwrap();
        assert!(TuckerDecomposition::new(sym, vec![f.clone(); 3], TuckerKind::Symmetric).is_ok());
        assert!(TuckerDecomposition::new(core, vec![f; 2], TuckerKind::Independent).is_err());
    }
}
