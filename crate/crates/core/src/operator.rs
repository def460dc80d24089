//! Dense complex operators on finite tensor-product Hilbert spaces.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for Hermiticity checks, against the largest entry.
pub const HERMITIAN_RTOL: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A square complex matrix acting on a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(DMatrix<Complex64>);

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("entries", "operator entries must be finite"));
        }
        Ok(Self(m))
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (k, &v) in values.iter().enumerate() {
            m[(k, k)] = Complex64::new(v, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ other`; `self` owns the leading (slow) index.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Entrywise max-norm.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |self - other|` entrywise. Panics on dimension mismatch.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_diff: dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * Complex64::new(factor, 0.0))
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_RTOL * self.max_abs()
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect <= HERMITIAN_RTOL * self.max_abs() {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect })
        }
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }

    /// Smallest real part and largest |imaginary part| over all entries.
    pub fn entry_extremes(&self) -> (f64, f64) {
        self.0.iter().fold((f64::INFINITY, 0.0_f64), |(lo, im), z| {
            (lo.min(z.re), im.max(z.im.abs()))
        })
    }

    /// `U† self U`.
    pub fn conjugate_by(&self, u: &DMatrix<Complex64>) -> Self {
        Self(u.adjoint() * &self.0 * u)
    }

    /// Reorders tensor factors. `dims[k]` is the dimension of factor `k` in
    /// the current ordering; factor `k` of the result is factor `order[k]` of
    /// `self`.
    pub fn permute_factors(&self, dims: &[usize], order: &[usize]) -> Self {
        let map = factor_permutation(dims, order);
        assert_eq!(map.len(), self.dim(), "permute_factors: dims do not match");
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (new_r, &old_r) in map.iter().enumerate() {
            for (new_c, &old_c) in map.iter().enumerate() {
                out[(new_r, new_c)] = self.0[(old_r, old_c)];
            }
        }
        Self(out)
    }
}

/// Index map for a tensor-factor reordering: entry `i` is the old basis index
/// of new basis index `i`.
pub fn factor_permutation(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let nf = dims.len();
    assert_eq!(order.len(), nf, "factor_permutation: order length");
    let mut seen = vec![false; nf];
    for &o in order {
        assert!(o < nf && !seen[o], "factor_permutation: not a permutation");
        seen[o] = true;
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let mut old_strides = vec![1usize; nf];
    for k in (0..nf.saturating_sub(1)).rev() {
        old_strides[k] = old_strides[k + 1] * dims[k + 1];
    }
    let mut digits = vec![0usize; nf];
    (0..total)
        .map(|new_idx| {
            let mut rem = new_idx;
            for k in (0..nf).rev() {
                digits[k] = rem % new_dims[k];
                rem /= new_dims[k];
            }
            order.iter().zip(&digits).map(|(&o, &d)| d * old_strides[o]).sum()
        })
        .collect()
}

/// Kronecker product of a list of factors, in order. Empty list gives the 1×1 identity.
pub fn kron_all<'a, I>(factors: I) -> DenseOperator
where
    I: IntoIterator<Item = &'a DenseOperator>,
{
    factors
        .into_iter()
        .fold(DenseOperator::identity(1), |acc, f| acc.kron(f))
}

/// Places `ops` at the given factor positions, identity elsewhere.
pub fn embed_factors(dims: &[usize], ops: &[(usize, &DenseOperator)]) -> DenseOperator {
    let factors: Vec<DenseOperator> = dims
        .iter()
        .enumerate()
        .map(|(pos, &d)| {
            ops.iter()
                .filter(|(p, _)| *p == pos)
                .fold(DenseOperator::identity(d), |acc, (_, op)| &acc * *op)
        })
        .collect();
    kron_all(&factors)
}

impl<'a> Add<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &'a DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &'a DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &'a DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 * &rhs.0)
    }
}

impl Add for DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: DenseOperator) -> DenseOperator {
        DenseOperator(self.0 + rhs.0)
    }
}

impl Sub for DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: DenseOperator) -> DenseOperator {
        DenseOperator(self.0 - rhs.0)
    }
}

impl Mul for DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: DenseOperator) -> DenseOperator {
        DenseOperator(self.0 * rhs.0)
    }
}

impl Neg for DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        DenseOperator(-self.0)
    }
}

impl AddAssign<&DenseOperator> for DenseOperator {
    fn add_assign(&mut self, rhs: &DenseOperator) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&DenseOperator> for DenseOperator {
    fn sub_assign(&mut self, rhs: &DenseOperator) {
        self.0 -= &rhs.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_orders_leading_factor_first() {
        let a = DenseOperator::diagonal(&[1.0, 2.0]);
        let b = DenseOperator::diagonal(&[1.0, 10.0]);
        let k = a.kron(&b);
        let diag: Vec<f64> = (0..4).map(|i| k.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 10.0, 2.0, 20.0]);
    }

    #[test]
    fn permutation_swaps_two_factors() {
        let a = DenseOperator::diagonal(&[1.0, 2.0]);
        let b = DenseOperator::diagonal(&[3.0, 5.0, 7.0]);
        let ab = a.kron(&b);
        let ba = b.kron(&a);
        let swapped = ab.permute_factors(&[2, 3], &[1, 0]);
        assert_eq!(swapped.max_diff(&ba), 0.0);
    }

    #[test]
    fn permutation_of_three_factors_matches_kron() {
        let x = DenseOperator::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let z = DenseOperator::diagonal(&[1.0, -1.0]);
        let y = DenseOperator::from_rows(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let xyz = kron_all([&x, &y, &z]);
        // new order: (z, x, y) = old factors (2, 0, 1)
        let permuted = xyz.permute_factors(&[2, 2, 2], &[2, 0, 1]);
        assert_eq!(permuted.max_diff(&kron_all([&z, &x, &y])), 0.0);
    }

    #[test]
    fn hermiticity_check_is_relative() {
        let h = DenseOperator::from_rows(2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]).unwrap();
        assert!(h.is_hermitian());
        let nh = DenseOperator::from_rows(2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, 2.0), c(3.0, 0.0)]).unwrap();
        assert!(matches!(nh.ensure_hermitian(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = DMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert!(DenseOperator::from_matrix(m).is_err());
    }
}
