//! Structured example tensors and seeded random instances with known
//! structure.
//!
//! Index bases follow each formula: the example tensors indexed from 1 use
//! `i ∈ 1..=n`, the `tan` and cubic cases use `i ∈ 0..=4`.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::factor;
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Matrix};
use crate::tucker::{TuckerDecomposition, TuckerKind};

fn cube<T: Scalar>(
    dim: usize,
    order: usize,
    f: impl FnMut(&[usize]) -> T,
) -> Result<DenseTensor<T>> {
    if order < 2 || dim < 1 {
        return Err(Error::InvalidArgument(format!(
            "generators need order >= 2 and dim >= 1, got order {order}, dim {dim}"
        )));
    }
    DenseTensor::from_fn(vec![dim; order], f)
}

/// The 5×5×5×5 tensor of `(x₁+x₂+x₃+x₄)⁴ + (x₂+x₃+x₄+x₅)⁴`, built as
/// `u^{∘4} + v^{∘4}`.
pub fn gen_example1<T: Scalar>() -> DenseTensor<T> {
    let (o, z) = (T::one(), T::zero());
    let u = [o, o, o, o, z];
    let v = [z, o, o, o, o];
    let a = DenseTensor::symmetric_outer_power(&u, 4).expect("valid");
    let b = DenseTensor::symmetric_outer_power(&v, 4).expect("valid");
    a.add(&b).expect("same shape")
}

/// `x_ijk = (−1)ⁱ/i + (−1)ʲ/j + (−1)ᵏ/k`, 1-based.
pub fn gen_sign_harmonic<T: Scalar>(n: usize) -> Result<DenseTensor<T>> {
    let f = |i: usize| {
        let i = i + 1;
        let s = if i.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        s / T::from_count(i)
    };
    cube(n, 3, |idx| idx.iter().map(|&i| f(i)).sum())
}

/// `x_{i₁…i_N} = Σ ln(iₖ)`, 1-based.
pub fn gen_log_sum<T: Scalar>(n: usize, order: usize) -> Result<DenseTensor<T>> {
    cube(n, order, |idx| {
        idx.iter().map(|&i| T::from_count(i + 1).ln()).sum()
    })
}

/// `t_{i₁…i_N} = sin(i₁ + ⋯ + i_N)`, 1-based.
pub fn gen_sin_sum<T: Scalar>(n: usize, order: usize) -> Result<DenseTensor<T>> {
    cube(n, order, |idx| {
        T::from_count(idx.iter().map(|&i| i + 1).sum()).sin()
    })
}

/// `x_{i₁…i_N} = Σₙ fₙ(iₙ)` with `fₙ` given as value tables; the table
/// lengths define the shape.
pub fn gen_separable<T: Scalar>(fs: &[Vec<T>]) -> Result<DenseTensor<T>> {
    if fs.is_empty() || fs.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument(
            "separable generator needs non-empty tables".into(),
        ));
    }
    let shape = fs.iter().map(Vec::len).collect();
    DenseTensor::from_fn(shape, |idx| idx.iter().zip(fs).map(|(&i, f)| f[i]).sum())
}

/// `t_{i₁i₂i₃i₄} = tan(i₁i₂i₃i₄)`, 0-based, `0 ≤ iₖ ≤ 4`.
pub fn gen_tan_product<T: Scalar>() -> DenseTensor<T> {
    cube(5, 4, |idx| T::from_count(idx.iter().product()).tan()).expect("valid")
}

/// `t_{i₁i₂i₃} = i₁i₂i₃ − i₁ − i₂ − i₃`, 0-based, `0 ≤ iₖ ≤ 4`.
pub fn gen_nie_cubic<T: Scalar>() -> DenseTensor<T> {
    cube(5, 3, |idx| {
        let p = T::from_count(idx.iter().product());
        p - T::from_count(idx.iter().sum())
    })
    .expect("valid")
}

/// Quartic form in `x₀, x₁, x₂` as (coefficient, exponents).
const QUARTIC: [(f64, [usize; 3]); 15] = [
    (81.0, [4, 0, 0]),
    (17.0, [0, 4, 0]),
    (626.0, [0, 0, 4]),
    (-144.0, [1, 2, 1]),
    (216.0, [3, 1, 0]),
    (-108.0, [3, 0, 1]),
    (216.0, [2, 2, 0]),
    (54.0, [2, 0, 2]),
    (96.0, [1, 3, 0]),
    (-12.0, [1, 0, 3]),
    (-52.0, [0, 3, 1]),
    (174.0, [0, 2, 2]),
    (-508.0, [0, 1, 3]),
    (72.0, [1, 1, 2]),
    (-216.0, [2, 1, 1]),
];

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// The symmetric 3×3×3×3 tensor whose quartic form is the fixed polynomial
/// `81x₀⁴ + 17x₁⁴ + 626x₂⁴ − 144x₀x₁²x₂ + …`. Each coefficient is spread
/// evenly over the index tuples of its monomial.
pub fn gen_quartic_case<T: Scalar>() -> DenseTensor<T> {
    cube(3, 4, |idx| {
        let mut e = [0usize; 3];
        for &i in idx {
            e[i] += 1;
        }
        let tuples = factorial(4) / e.iter().map(|&k| factorial(k)).product::<usize>();
        QUARTIC
            .iter()
            .find(|(_, ex)| *ex == e)
            .map_or(T::zero(), |(c, _)| T::lit(*c) / T::from_count(tuples))
    })
    .expect("valid")
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::lit(StandardNormal.sample(rng))
}

/// Symmetrized standard normal tensor.
pub fn gen_random_symmetric<T: Scalar>(
    dim: usize,
    order: usize,
    seed: u64,
) -> Result<DenseTensor<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cube(dim, order, |_| gaussian(&mut rng))?.symmetrize()
}

/// Seeded instance `⟦G; X, …, X⟧` with a known core size.
#[derive(Debug, Clone)]
pub struct Planted<T> {
    pub tensor: DenseTensor<T>,
    /// Ground truth: symmetric core and the shared factor `X`.
    pub decomposition: TuckerDecomposition<T>,
    /// Condition number of `X`.
    pub condition: T,
}

/// Random symmetric core of size `core_dim` pushed through a random
/// `dim × core_dim` factor, so every unfolding has rank at most `core_dim`.
pub fn gen_random_core_planted<T: Scalar>(
    core_dim: usize,
    dim: usize,
    order: usize,
    seed: u64,
) -> Result<Planted<T>> {
    if core_dim > dim || core_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "core dimension {core_dim} must be in 1..={dim}"
        )));
    }
    let core = gen_random_symmetric(core_dim, order, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let x = Matrix::from_fn(dim, core_dim, |_, _| gaussian(&mut rng));
    let tensor = core.tucker_product(&vec![x.clone(); order])?.symmetrize()?;
    let condition = factor::condition_number(&x)?;
    let decomposition = TuckerDecomposition::new(core, vec![x; order], TuckerKind::Symmetric)?;
    Ok(Planted {
        tensor,
        decomposition,
        condition,
    })
}

/// Partial symmetric 4-way tensor `Σₖ sym(aₖ ∘ bₖ ∘ cₖ ∘ dₖ)` of shape
/// `(i₁, i₂, i₁, i₂)`, where `sym` averages the four index swaps.
pub fn gen_random_partial_symmetric<T: Scalar>(
    i1: usize,
    i2: usize,
    terms: usize,
    seed: u64,
) -> Result<DenseTensor<T>> {
    if i1 == 0 || i2 == 0 || terms == 0 {
        return Err(Error::InvalidArgument(
            "partial symmetric generator needs positive sizes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DenseTensor::zeros(vec![i1, i2, i1, i2])?;
    for _ in 0..terms {
        let vs: Vec<Vec<T>> = [i1, i2, i1, i2]
            .iter()
            .map(|&n| (0..n).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let refs: Vec<&[T]> = vs.iter().map(Vec::as_slice).collect();
        out = out.add(&DenseTensor::outer_vectors(&refs)?)?;
    }
    out.partial_symmetrize()
}

/// Random partial symmetric core of shape `(j₁, j₂, j₁, j₂)` pushed through
/// random factors `A ∈ ℝ^{i₁×j₁}`, `B ∈ ℝ^{i₂×j₂}`.
pub fn gen_random_partial_planted<T: Scalar>(
    (j1, j2): (usize, usize),
    (i1, i2): (usize, usize),
    seed: u64,
) -> Result<(DenseTensor<T>, TuckerDecomposition<T>)> {
    if j1 > i1 || j2 > i2 {
        return Err(Error::InvalidArgument(format!(
            "core ({j1}, {j2}) larger than tensor ({i1}, {i2})"
        )));
    }
    let core = gen_random_partial_symmetric(j1, j2, 3, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let a = Matrix::from_fn(i1, j1, |_, _| gaussian(&mut rng));
    let b = Matrix::from_fn(i2, j2, |_, _| gaussian(&mut rng));
    let factors = vec![a.clone(), b.clone(), a, b];
    let t = core.tucker_product(&factors)?.partial_symmetrize()?;
    let d = TuckerDecomposition::new(core, factors, TuckerKind::PartialSymmetric)?;
    Ok((t, d))
}

/// Registered generator names.
pub const GENERATORS: [&str; 10] = [
    "example1",
    "sign_harmonic",
    "log_sum",
    "sin_sum",
    "tan_product",
    "quartic_case",
    "nie_cubic",
    "random_symmetric",
    "planted",
    "random_partial",
];

/// A named generator with its size and extra parameters (`seed`,
/// `core_dim`, `dim2`, `terms`).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub name: String,
    pub order: usize,
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
}

impl GeneratorSpec {
    /// Spec with the generator's natural size (the size used in the
    /// examples for the fixed ones).
    pub fn with_defaults(name: &str) -> Result<Self> {
        let (dim, order) = match name {
            "example1" => (5, 4),
            "sign_harmonic" => (8, 3),
            "log_sum" => (4, 5),
            "sin_sum" => (4, 4),
            "tan_product" => (5, 4),
            "quartic_case" => (3, 4),
            "nie_cubic" => (5, 3),
            "random_symmetric" | "planted" => (5, 4),
            "random_partial" => (3, 4),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown generator '{other}' (known: {})",
                    GENERATORS.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            order,
            dim,
            params: BTreeMap::new(),
        })
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count_param(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.param(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "parameter {key} must be a non-negative integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    fn fixed(&self, dim: usize, order: usize) -> Result<()> {
        if (self.dim, self.order) != (dim, order) {
            return Err(Error::InvalidArgument(format!(
                "generator '{}' has fixed dim {dim} and order {order}, got dim {} and order {}",
                self.name, self.dim, self.order
            )));
        }
        Ok(())
    }

    pub fn generate<T: Scalar>(&self) -> Result<DenseTensor<T>> {
        if self.order < 2 || self.dim < 1 {
            return Err(Error::InvalidArgument(format!(
                "generators need order >= 2 and dim >= 1, got order {}, dim {}",
                self.order, self.dim
            )));
        }
        let seed = self.count_param("seed", 0)? as u64;
        match self.name.as_str() {
            "example1" => self.fixed(5, 4).map(|_| gen_example1()),
            "sign_harmonic" => {
                self.fixed(self.dim, 3)?;
                gen_sign_harmonic(self.dim)
            }
            "log_sum" => gen_log_sum(self.dim, self.order),
            "sin_sum" => gen_sin_sum(self.dim, self.order),
            "tan_product" => self.fixed(5, 4).map(|_| gen_tan_product()),
            "quartic_case" => self.fixed(3, 4).map(|_| gen_quartic_case()),
            "nie_cubic" => self.fixed(5, 3).map(|_| gen_nie_cubic()),
            "random_symmetric" => gen_random_symmetric(self.dim, self.order, seed),
            "planted" => {
                let core_dim = self.count_param("core_dim", 2)?;
                Ok(gen_random_core_planted(core_dim, self.dim, self.order, seed)?.tensor)
            }
            "random_partial" => {
                self.fixed(self.dim, 4)?;
                let dim2 = self.count_param("dim2", self.dim)?;
                let terms = self.count_param("terms", 2)?;
                gen_random_partial_symmetric(self.dim, dim2, terms, seed)
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown generator '{other}' (known: {})",
                GENERATORS.join(", ")
            ))),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(dim={}, order={}", self.name, self.dim, self.order)?;
        for (k, v) in &self.params {
            write!(f, ", {k}={v}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tucker::{symmetric_tucker, tucker_rank};

    #[test]
    fn example1_form_values() {
        let t: DenseTensor<f64> = gen_example1();
        assert_eq!(t.shape(), &[5, 5, 5, 5]);
        assert!(t.is_symmetric(1e-14));
        assert_eq!(t.apply_form(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(t.apply_form(&[1.0; 5]).unwrap(), 512.0);
        // (x₁+…+x₄)⁴ + (x₂+…+x₅)⁴ at an arbitrary point.
        let x: [f64; 5] = [0.3, -1.2, 0.7, 2.0, -0.4];
        let want = (x[0] + x[1] + x[2] + x[3]).powi(4) + (x[1] + x[2] + x[3] + x[4]).powi(4);
        assert!((t.apply_form(&x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn sign_harmonic_entries() {
        let t: DenseTensor<f64> = gen_sign_harmonic(8).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), -3.0);
        assert_eq!(t.get(&[1, 1, 1]), 1.5);
        assert!((t.get(&[0, 1, 2]) - (-1.0 + 0.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert!(t.is_symmetric(1e-14));
        assert_eq!(tucker_rank(&t, 1e-10).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn log_and_sin_entries() {
        let t: DenseTensor<f64> = gen_log_sum(4, 5).unwrap();
        assert_eq!(t.get(&[0; 5]), 0.0);
        assert!((t.get(&[3, 0, 0, 0, 1]) - (4f64.ln() + 2f64.ln())).abs() < 1e-15);
        assert_eq!(tucker_rank(&t, 1e-10).unwrap(), vec![2; 5]);
        let s: DenseTensor<f64> = gen_sin_sum(4, 4).unwrap();
        assert_eq!(s.get(&[0; 4]), 4f64.sin());
        assert!(s.is_symmetric(1e-14));
        assert_eq!(tucker_rank(&s, 1e-10).unwrap(), vec![2; 4]);
    }

    #[test]
    fn separable_cases() {
        let z: DenseTensor<f64> = gen_separable(&[vec![0.0; 3], vec![0.0; 2]]).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let c: DenseTensor<f64> =
            gen_separable(&[vec![1.5; 3], vec![1.5; 4], vec![1.5; 2]]).unwrap();
        assert!(c.data().iter().all(|&v| v == 4.5));
        assert_eq!(tucker_rank(&c, 1e-10).unwrap(), vec![1, 1, 1]);
        assert!(gen_separable::<f64>(&[]).is_err());
        assert!(gen_separable::<f64>(&[vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn section_six_cases() {
        let q: DenseTensor<f64> = gen_quartic_case();
        assert!(q.is_symmetric(1e-14));
        // Spot-check the form against the polynomial.
        let x: [f64; 3] = [0.5, -1.0, 2.0];
        let poly: f64 = QUARTIC
            .iter()
            .map(|(c, e)| {
                c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
            })
            .sum();
        assert!((q.apply_form(&x).unwrap() - poly).abs() < 1e-9);
        assert_eq!(symmetric_tucker(&q, 1e-10).unwrap().core_shape(), &[2; 4]);

        let t: DenseTensor<f64> = gen_tan_product();
        assert_eq!(t.get(&[0, 3, 4, 2]), 0.0);
        assert_eq!(t.get(&[1, 2, 1, 1]), 2f64.tan());
        assert_eq!(symmetric_tucker(&t, 1e-10).unwrap().core_shape(), &[4; 4]);

        let n: DenseTensor<f64> = gen_nie_cubic();
        assert_eq!(n.get(&[2, 3, 4]), 24.0 - 9.0);
        assert_eq!(symmetric_tucker(&n, 1e-10).unwrap().core_shape(), &[2; 3]);
    }

    #[test]
    fn random_generators() {
        let a: DenseTensor<f64> = gen_random_symmetric(4, 3, 11).unwrap();
        let b: DenseTensor<f64> = gen_random_symmetric(4, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.is_symmetric(1e-14));
        let p: Planted<f64> = gen_random_core_planted(2, 6, 4, 3).unwrap();
        assert!(p.tensor.is_symmetric(1e-12));
        assert!(p.condition >= 1.0);
        assert_eq!(
            symmetric_tucker(&p.tensor, 1e-10).unwrap().core_shape(),
            &[2; 4]
        );
        assert!(gen_random_core_planted::<f64>(3, 2, 3, 0).is_err());
        let (t, d) = gen_random_partial_planted::<f64>((2, 1), (4, 3), 5).unwrap();
        assert!(t.is_partial_symmetric(1e-12));
        assert!(d.reconstruction_residual(&t).unwrap() <= 1e-10 * t.frobenius_norm());
    }

    #[test]
    fn registry() {
        for name in GENERATORS {
            let spec = GeneratorSpec::with_defaults(name)
                .unwrap()
                .with_param("seed", 1.0);
            let t: DenseTensor<f64> = spec.generate().unwrap();
            if name == "random_partial" {
                assert!(t.is_partial_symmetric(1e-12), "{spec}");
            } else {
                assert!(t.is_symmetric(1e-12), "{spec}");
            }
        }
        assert!(GeneratorSpec::with_defaults("nope").is_err());
        let mut bad = GeneratorSpec::with_defaults("example1").unwrap();
        bad.dim = 4;
        assert!(bad.generate::<f64>().is_err());
        let mut sized = GeneratorSpec::with_defaults("sin_sum").unwrap();
        sized.dim = 6;
        sized.order = 3;
        assert_eq!(sized.generate::<f64>().unwrap().shape(), &[6, 6, 6]);
    }
}
