//! Dense tensors, Tucker cores, and computations that run on the core.
//!
//! A tensor with an exact independent Tucker decomposition
//! `X = ⟦G; A₁, …, A_N⟧` shares its CP rank with the core `G`, has a
//! Frobenius norm sandwiched by the factor singular values, and (for
//! symmetric tensors) has the same nonzero Z-eigenvalues as a rescaled
//! core. This crate builds those decompositions and runs rank, norm and
//! eigenvalue computations on the smaller core, lifting the results back.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the default tolerances assume.

pub mod cp;
pub mod eig;
pub mod error;
pub mod factor;
pub mod gen;
pub mod scalar;
pub mod tensor;
pub mod tucker;

pub use cp::{CpAlsOptions, CpDecomposition, CpFitReport};
pub use eig::{
    MEigenpair, MSpectrum, MeigOptions, PsdReport, SolverMethod, ZEigenpair, ZSpectrum, ZeigOptions,
};
pub use error::{Error, Result};
pub use factor::SvdResult;
pub use gen::{GeneratorSpec, Planted};
pub use scalar::Scalar;
pub use tensor::{dematricize, DenseTensor, Matrix};
pub use tucker::{NormBounds, TuckerDecomposition, TuckerKind};

/// Double-precision dense tensor.
pub type Tensor = DenseTensor<f64>;
/// Double-precision matrix.
pub type Mat = Matrix<f64>;
/// Double-precision Tucker decomposition.
pub type Tucker = TuckerDecomposition<f64>;
/// Double-precision CP decomposition.
pub type Cp = CpDecomposition<f64>;
/// Double-precision Z-spectrum.
pub type Spectrum = ZSpectrum<f64>;
