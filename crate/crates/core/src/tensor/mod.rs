//! Dense N-way tensors and the multilinear primitives built on them.
//!
//! Storage is row-major (last index fastest). Matricization is decoupled
//! from storage: the mode-n unfolding places entry `(i_1, ..., i_N)` at row
//! `i_n` and column `sum_{k != n} i_k * J_k` with
//! `J_k = prod_{m < k, m != n} I_m`, i.e. the earliest remaining mode varies
//! fastest along the columns. All mode indices are 0-based.

mod matrix;

pub use matrix::Matrix;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Default tolerance for symmetry predicates, applied after dividing every
/// entry by the largest absolute entry.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-10;

/// Dense N-way array of real scalars.
#[derive(Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
        });
    }
    Ok(shape.iter().product())
}

/// Calls `f(index, flat_offset)` for every multi-index in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize], usize)) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(&idx, flat);
        for k in (0..shape.len()).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Column strides of the mode-`n` unfolding (`J_k`, zero at `k == n`).
fn unfolding_strides(shape: &[usize], n: usize) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for (k, &d) in shape.iter().enumerate() {
        if k != n {
            strides[k] = acc;
            acc *= d;
        }
    }
    strides
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected = check_shape(&shape)?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![T::zero(); len],
        })
    }

    /// Builds a tensor by evaluating `f` at every (0-based) multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        for_each_index(&shape, |idx, _| data.push(f(idx)));
        Ok(Self { shape, data })
    }

    /// Order-2 tensor with the entries of `m`.
    pub fn from_matrix(m: &Matrix<T>) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        }
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn is_cubical(&self) -> bool {
        self.shape.windows(2).all(|w| w[0] == w[1])
    }

    /// Common extent of a cubical tensor.
    pub fn cubical_dim(&self) -> Result<usize> {
        if self.is_cubical() {
            Ok(self.shape[0])
        } else {
            Err(Error::NotCubical {
                shape: self.shape.clone(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        scalar::max_abs(&self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn check_mode(&self, n: usize) -> Result<()> {
        if n >= self.order() {
            Err(Error::ModeOutOfRange {
                mode: n,
                order: self.order(),
            })
        } else {
            Ok(())
        }
    }

    /// Mode-`n` unfolding `X_(n)`, of size `I_n x prod_{k != n} I_k`.
    pub fn matricize(&self, n: usize) -> Result<Matrix<T>> {
        self.check_mode(n)?;
        let rows = self.shape[n];
        let cols = self.len() / rows;
        let strides = unfolding_strides(&self.shape, n);
        let mut out = vec![T::zero(); rows * cols];
        for_each_index(&self.shape, |idx, flat| {
            let col: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
            out[idx[n] * cols + col] = self.data[flat];
        });
        Matrix::new(rows, cols, out)
    }

    /// Mode-`n` product `self ×_n m`, computed as `m · X_(n)` refolded.
    pub fn mode_product(&self, n: usize, m: &Matrix<T>) -> Result<Self> {
        self.check_mode(n)?;
        if m.cols() != self.shape[n] {
            return Err(Error::DimensionMismatch(format!(
                "mode-{n} product needs a matrix with {} columns, got {}x{}",
                self.shape[n],
                m.rows(),
                m.cols()
            )));
        }
        let unfolded = m.matmul(&self.matricize(n)?)?;
        let mut shape = self.shape.clone();
        shape[n] = m.rows();
        dematricize(&unfolded, n, &shape)
    }

    /// Applies mode products in sequence.
    pub fn multi_mode_product(&self, ms: &[(usize, &Matrix<T>)]) -> Result<Self> {
        let mut out = self.clone();
        for &(n, m) in ms {
            out = out.mode_product(n, m)?;
        }
        Ok(out)
    }

    /// `⟦self; m_0, ..., m_{N-1}⟧`: one factor per mode, applied in mode order.
    pub fn tucker_product(&self, factors: &[Matrix<T>]) -> Result<Self> {
        if factors.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors supplied for an order-{} tensor",
                factors.len(),
                self.order()
            )));
        }
        let pairs: Vec<_> = factors.iter().enumerate().collect();
        self.multi_mode_product(&pairs)
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "inner product of shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(scalar::dot(&self.data, &other.data))
    }

    pub fn frobenius_norm(&self) -> T {
        scalar::norm2(&self.data)
    }

    /// Outer product; the result has shape `self.shape ++ other.shape`.
    pub fn outer(&self, other: &Self) -> Self {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut data = Vec::with_capacity(self.len() * other.len());
        for &a in &self.data {
            data.extend(other.data.iter().map(|&b| a * b));
        }
        Self { shape, data }
    }

    /// `v_1 ∘ v_2 ∘ ... ∘ v_N`.
    pub fn outer_vectors(vs: &[&[T]]) -> Result<Self> {
        let shape: Vec<usize> = vs.iter().map(|v| v.len()).collect();
        Self::from_fn(shape, |idx| {
            idx.iter().zip(vs).fold(T::one(), |acc, (&i, v)| acc * v[i])
        })
    }

    /// `x^{∘N}`.
    pub fn symmetric_outer_power(x: &[T], order: usize) -> Result<Self> {
        let vs: Vec<&[T]> = vec![x; order];
        Self::outer_vectors(&vs)
    }

    /// True if every entry matches its sorted-index representative within
    /// `tol` after unit scaling. The zero tensor is symmetric; non-cubical
    /// tensors are not.
    pub fn is_symmetric(&self, tol: T) -> bool {
        if !self.is_cubical() {
            return false;
        }
        let scale = self.max_abs();
        if scale == T::zero() {
            return true;
        }
        let mut sorted = vec![0usize; self.order()];
        let mut ok = true;
        for_each_index(&self.shape, |idx, flat| {
            if !ok {
                return;
            }
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            let rep = self.data[self.offset(&sorted)];
            if ((self.data[flat] - rep) / scale).abs() > tol {
                ok = false;
            }
        });
        ok
    }

    /// Average over all index permutations.
    pub fn symmetrize(&self) -> Result<Self> {
        self.cubical_dim()?;
        let mut sums = vec![T::zero(); self.len()];
        let mut counts = vec![0usize; self.len()];
        let mut keys = vec![0usize; self.len()];
        let mut sorted = vec![0usize; self.order()];
        for_each_index(&self.shape, |idx, flat| {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            let key = self.offset(&sorted);
            keys[flat] = key;
            sums[key] += self.data[flat];
            counts[key] += 1;
        });
        let data = keys
            .iter()
            .map(|&k| sums[k] / T::from_count(counts[k]))
            .collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    fn partial_shape_ok(&self) -> bool {
        self.order() == 4 && self.shape[0] == self.shape[2] && self.shape[1] == self.shape[3]
    }

    /// Checks `t_ijkl = t_kjil = t_ilkj = t_klij` within `tol` after unit
    /// scaling.
    pub fn is_partial_symmetric(&self, tol: T) -> bool {
        if !self.partial_shape_ok() {
            return false;
        }
        let scale = self.max_abs();
        if scale == T::zero() {
            return true;
        }
        let mut ok = true;
        for_each_index(&self.shape, |idx, flat| {
            if !ok {
                return;
            }
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let v = self.data[flat];
            for p in [[k, j, i, l], [i, l, k, j], [k, l, i, j]] {
                if ((v - self.get(&p)) / scale).abs() > tol {
                    ok = false;
                }
            }
        });
        ok
    }

    /// Projects onto the partial-symmetric subspace (average over the
    /// four index swaps).
    pub fn partial_symmetrize(&self) -> Result<Self> {
        if !self.partial_shape_ok() {
            return Err(Error::DimensionMismatch(format!(
                "partial symmetry needs shape (I1, I2, I1, I2), got {:?}",
                self.shape
            )));
        }
        let quarter = T::lit(0.25);
        Self::from_fn(self.shape.clone(), |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            (self.get(&[i, j, k, l])
                + self.get(&[k, j, i, l])
                + self.get(&[i, l, k, j])
                + self.get(&[k, l, i, j]))
                * quarter
        })
    }

    /// Contracts the leading `count` modes against `x`, returning the
    /// flattened remaining block (row-major over the trailing modes).
    pub fn contract_leading(&self, x: &[T], count: usize) -> Result<Vec<T>> {
        if count > self.order() {
            return Err(Error::InvalidArgument(format!(
                "cannot contract {count} modes of an order-{} tensor",
                self.order()
            )));
        }
        if self.shape[..count].iter().any(|&d| d != x.len()) {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against shape {:?}",
                x.len(),
                self.shape
            )));
        }
        let mut cur = self.data.clone();
        for _ in 0..count {
            let rest = cur.len() / x.len();
            let mut next = vec![T::zero(); rest];
            for (i, &xi) in x.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let block = &cur[i * rest..(i + 1) * rest];
                for (o, &b) in next.iter_mut().zip(block) {
                    *o += xi * b;
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// `T(x^{∘(N-1)})`: contraction of all modes but the last.
    pub fn contract_all_but_one(&self, x: &[T]) -> Result<Vec<T>> {
        self.cubical_dim()?;
        self.contract_leading(x, self.order() - 1)
    }

    /// `⟨T, x^{∘N}⟩`.
    pub fn apply_form(&self, x: &[T]) -> Result<T> {
        let v = self.contract_all_but_one(x)?;
        Ok(scalar::dot(&v, x))
    }

    /// Contracts every mode whose slot holds a vector. The free modes keep
    /// their relative order; a full contraction yields shape `[1]`.
    pub fn contract(&self, vectors: &[Option<&[T]>]) -> Result<Self> {
        if vectors.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} contraction slots for an order-{} tensor",
                vectors.len(),
                self.order()
            )));
        }
        for (k, v) in vectors.iter().enumerate() {
            if let Some(v) = v {
                if v.len() != self.shape[k] {
                    return Err(Error::DimensionMismatch(format!(
                        "mode {k} has extent {}, vector has length {}",
                        self.shape[k],
                        v.len()
                    )));
                }
            }
        }
        let free: Vec<usize> = (0..self.order())
            .filter(|&k| vectors[k].is_none())
            .collect();
        let out_shape: Vec<usize> = if free.is_empty() {
            vec![1]
        } else {
            free.iter().map(|&k| self.shape[k]).collect()
        };
        let mut out = vec![T::zero(); out_shape.iter().product()];
        for_each_index(&self.shape, |idx, flat| {
            let mut w = self.data[flat];
            let mut o = 0;
            for (k, v) in vectors.iter().enumerate() {
                match v {
                    Some(v) => w *= v[idx[k]],
                    None => o = o * self.shape[k] + idx[k],
                }
            }
            out[o] += w;
        });
        Self::new(out_shape, out)
    }
}

/// Inverse of [`DenseTensor::matricize`].
pub fn dematricize<T: Scalar>(m: &Matrix<T>, n: usize, shape: &[usize]) -> Result<DenseTensor<T>> {
    let total = check_shape(shape)?;
    if n >= shape.len() {
        return Err(Error::ModeOutOfRange {
            mode: n,
            order: shape.len(),
        });
    }
    if m.rows() != shape[n] || m.rows() * m.cols() != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix cannot fold into shape {:?} along mode {n}",
            m.rows(),
            m.cols(),
            shape
        )));
    }
    let strides = unfolding_strides(shape, n);
    let cols = m.cols();
    let src = m.data();
    let mut data = vec![T::zero(); total];
    for_each_index(shape, |idx, flat| {
        let col: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        data[flat] = src[idx[n] * cols + col];
    });
    DenseTensor::new(shape.to_vec(), data)
}

impl<T: fmt::Debug> fmt::Debug for DenseTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}
