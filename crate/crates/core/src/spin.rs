//! Single-site spin matrices, lattices and their tensor-product embeddings.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{embed_factors, DenseOperator, ONE, ZERO};

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// Environment variable that overrides [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "XYINEQ_DIM_CAP";

static CAP_OVERRIDE: AtomicUsize = AtomicUsize::new(0);

/// Process-wide cap taking precedence over the environment; `None` clears it.
pub fn set_dim_cap_override(cap: Option<usize>) {
    CAP_OVERRIDE.store(cap.unwrap_or(0), Ordering::Relaxed);
}

/// Effective dimension cap: the process override, then the environment, then the default.
pub fn dim_cap() -> usize {
    match CAP_OVERRIDE.load(Ordering::Relaxed) {
        0 => std::env::var(DIM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_DIM_CAP),
        cap => cap,
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        Err(Error::DimensionCap { dim, cap })
    } else {
        Ok(())
    }
}

/// `base^exp`, saturating at `usize::MAX` so cap checks cannot overflow.
pub fn saturating_pow(base: usize, exp: usize) -> usize {
    (0..exp).fold(1usize, |acc, _| acc.saturating_mul(base))
}

/// Spin direction index `i` of `S^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    pub const ALL: [SpinAxis; 3] = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z];

    pub fn index(self) -> u8 {
        match self {
            SpinAxis::X => 1,
            SpinAxis::Y => 2,
            SpinAxis::Z => 3,
        }
    }
}

impl TryFrom<u8> for SpinAxis {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(SpinAxis::X),
            2 => Ok(SpinAxis::Y),
            3 => Ok(SpinAxis::Z),
            other => Err(Error::InvalidAxis(other)),
        }
    }
}

impl From<SpinAxis> for u8 {
    fn from(a: SpinAxis) -> u8 {
        a.index()
    }
}

impl fmt::Display for SpinAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Supported spin magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "1")]
    One,
}

impl Spin {
    pub fn from_value(s: f64) -> Result<Self> {
        if s == 0.5 {
            Ok(Spin::Half)
        } else if s == 1.0 {
            Ok(Spin::One)
        } else {
            Err(Error::UnsupportedSpin(s))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
        }
    }

    pub fn local_dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }

    fn from_local_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Spin::Half),
            3 => Ok(Spin::One),
            other => Err(Error::UnsupportedLocalDim(other)),
        }
    }
}

/// A set of site labels, used for coupling supports and observables.
pub type SiteSet = BTreeSet<String>;

/// Builds a [`SiteSet`] from anything string-like.
pub fn site_set<I, S>(labels: I) -> SiteSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    labels.into_iter().map(Into::into).collect()
}

/// A finite ordered set of sites with a uniform local dimension. The order of
/// `sites` is the order of tensor factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    sites: Vec<String>,
    spin: Spin,
    index: HashMap<String, usize>,
}

impl Lattice {
    pub fn new<I, S>(sites: I, spin: Spin) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sites: Vec<String> = sites.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(sites.len());
        for (k, s) in sites.iter().enumerate() {
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::DuplicateSite(s.clone()));
            }
        }
        check_dim(saturating_pow(spin.local_dim(), sites.len()))?;
        Ok(Self { sites, spin, index })
    }

    pub fn with_local_dim<I, S>(sites: I, local_dim: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(sites, Spin::from_local_dim(local_dim)?)
    }

    /// Sites labelled `"0"`, `"1"`, ….
    pub fn numbered(n: usize, spin: Spin) -> Result<Self> {
        Self::new((0..n).map(|k| k.to_string()), spin)
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn local_dim(&self) -> usize {
        self.spin.local_dim()
    }

    pub fn dim(&self) -> usize {
        saturating_pow(self.local_dim(), self.len())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownSite(label.to_string()))
    }

    /// Factor positions of a subset, ascending.
    pub fn positions<'a, I>(&self, subset: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut pos = subset
            .into_iter()
            .map(|s| self.position(s))
            .collect::<Result<Vec<_>>>()?;
        pos.sort_unstable();
        pos.dedup();
        Ok(pos)
    }

    pub fn site_set(&self) -> SiteSet {
        self.sites.iter().cloned().collect()
    }

    /// The lattice restricted to `keep`, preserving order.
    pub fn restrict(&self, keep: &SiteSet) -> Result<Self> {
        for s in keep {
            self.position(s)?;
        }
        Self::new(self.sites.iter().filter(|s| keep.contains(*s)).cloned(), self.spin)
    }

    fn local_dims(&self) -> Vec<usize> {
        vec![self.local_dim(); self.len()]
    }
}

/// Pauli matrix `σ^axis`.
pub fn pauli(axis: SpinAxis) -> DenseOperator {
    let i = Complex64::new(0.0, 1.0);
    let entries = match axis {
        SpinAxis::X => [ZERO, ONE, ONE, ZERO],
        SpinAxis::Y => [ZERO, -i, i, ZERO],
        SpinAxis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    DenseOperator::from_rows(2, &entries).expect("2x2 literal")
}

/// Spin matrix `S^axis` for `S ∈ {1/2, 1}`. Spin 1 uses the `S^3` eigenbasis
/// ordered by descending eigenvalue `(+1, 0, -1)`.
pub fn spin_matrix(spin: Spin, axis: SpinAxis) -> DenseOperator {
    match spin {
        Spin::Half => pauli(axis).scale(0.5),
        Spin::One => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let re = |x: f64| Complex64::new(x, 0.0);
            let im = |x: f64| Complex64::new(0.0, x);
            let entries = match axis {
                SpinAxis::X => [ZERO, re(r), ZERO, re(r), ZERO, re(r), ZERO, re(r), ZERO],
                SpinAxis::Y => [ZERO, im(-r), ZERO, im(r), ZERO, im(-r), ZERO, im(r), ZERO],
                SpinAxis::Z => [ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, -ONE],
            };
            DenseOperator::from_rows(3, &entries).expect("3x3 literal")
        }
    }
}

/// `op` acting on site `x`, identity on every other site.
pub fn embed_site(op: &DenseOperator, x: &str, lat: &Lattice) -> Result<DenseOperator> {
    op.ensure_dim(lat.local_dim())?;
    let pos = lat.position(x)?;
    Ok(embed_factors(&lat.local_dims(), &[(pos, op)]))
}

/// `∏_{x∈A} S_x^axis`; the empty product is the identity.
pub fn subset_product(lat: &Lattice, subset: &SiteSet, axis: SpinAxis, spin: Spin) -> Result<DenseOperator> {
    if spin != lat.spin() {
        return Err(Error::DimensionMismatch {
            expected: lat.local_dim(),
            got: spin.local_dim(),
        });
    }
    let local = spin_matrix(spin, axis);
    local_product(lat, subset, &local)
}

/// Same local operator placed on every site of `subset`.
pub(crate) fn local_product(lat: &Lattice, subset: &SiteSet, local: &DenseOperator) -> Result<DenseOperator> {
    let positions = lat.positions(subset)?;
    let ops: Vec<(usize, &DenseOperator)> = positions.iter().map(|&p| (p, local)).collect();
    Ok(embed_factors(&lat.local_dims(), &ops))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn pauli_matrices_match_the_standard_form() {
        let x = pauli(SpinAxis::X);
        assert_eq!(x, DenseOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
        let z = pauli(SpinAxis::Z);
        assert_eq!(z, DenseOperator::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap());
        let y = pauli(SpinAxis::Y);
        assert_eq!((&y * &y).max_diff(&DenseOperator::identity(2)), 0.0);
        for a in SpinAxis::ALL {
            let p = pauli(a);
            assert!(p.is_hermitian());
            assert_eq!(p.trace().norm(), 0.0);
        }
    }

    #[test]
    fn spin_half_is_half_pauli() {
        let s1 = spin_matrix(Spin::Half, SpinAxis::X);
        assert_eq!(s1, DenseOperator::from_real_rows(2, &[0.0, 0.5, 0.5, 0.0]).unwrap());
    }

    #[test]
    fn spin_one_z_is_descending_diagonal() {
        let s3 = spin_matrix(Spin::One, SpinAxis::Z);
        assert_eq!(s3, DenseOperator::diagonal(&[1.0, 0.0, -1.0]));
    }

    #[test]
    fn commutation_and_casimir() {
        let i = Complex64::new(0.0, 1.0);
        for spin in [Spin::Half, Spin::One] {
            let d = spin.local_dim();
            let s: Vec<DenseOperator> = SpinAxis::ALL.iter().map(|&a| spin_matrix(spin, a)).collect();
            for k in 0..3 {
                let (a, b, c) = (&s[k], &s[(k + 1) % 3], &s[(k + 2) % 3]);
                assert!(a.commutator(b).max_diff(&c.scale_complex(i)) <= TOL);
            }
            let casimir = s.iter().fold(DenseOperator::zeros(d), |acc, m| acc + m * m);
            let expected = DenseOperator::identity(d).scale(spin.value() * (spin.value() + 1.0));
            assert!(casimir.max_diff(&expected) <= TOL);
        }
    }

    #[test]
    fn embed_s3_on_first_of_two_sites() {
        let lat = Lattice::numbered(2, Spin::Half).unwrap();
        let op = embed_site(&spin_matrix(Spin::Half, SpinAxis::Z), "0", &lat).unwrap();
        assert_eq!(op, DenseOperator::diagonal(&[0.5, 0.5, -0.5, -0.5]));
    }

    #[test]
    fn embed_identity_and_trace() {
        let lat = Lattice::numbered(3, Spin::One).unwrap();
        let id = embed_site(&DenseOperator::identity(3), "1", &lat).unwrap();
        assert_eq!(id, DenseOperator::identity(27));
        let s1 = embed_site(&spin_matrix(Spin::One, SpinAxis::X), "2", &lat).unwrap();
        assert_eq!(s1.trace().norm(), 0.0);
    }

    #[test]
    fn embed_rejects_bad_inputs() {
        let lat = Lattice::numbered(2, Spin::Half).unwrap();
        assert!(matches!(
            embed_site(&pauli(SpinAxis::X), "9", &lat),
            Err(Error::UnknownSite(_))
        ));
        assert!(matches!(
            embed_site(&DenseOperator::identity(3), "0", &lat),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subset_products() {
        let lat = Lattice::numbered(2, Spin::Half).unwrap();
        let empty = subset_product(&lat, &SiteSet::new(), SpinAxis::X, Spin::Half).unwrap();
        assert_eq!(empty, DenseOperator::identity(4));
        let zz = subset_product(&lat, &site_set(["0", "1"]), SpinAxis::Z, Spin::Half).unwrap();
        assert_eq!(zz, DenseOperator::diagonal(&[0.25, -0.25, -0.25, 0.25]));
        let xx = subset_product(&lat, &site_set(["1"]), SpinAxis::X, Spin::Half).unwrap();
        assert!((0..4).all(|k| xx.get(k, k).norm() == 0.0));
        assert!(subset_product(&lat, &site_set(["z"]), SpinAxis::X, Spin::Half).is_err());
    }

    #[test]
    fn distinct_site_embeddings_commute() {
        let lat = Lattice::numbered(3, Spin::One).unwrap();
        for a in SpinAxis::ALL {
            for b in SpinAxis::ALL {
                let x = embed_site(&spin_matrix(Spin::One, a), "0", &lat).unwrap();
                let y = embed_site(&spin_matrix(Spin::One, b), "2", &lat).unwrap();
                assert!(x.commutator(&y).max_abs() <= TOL);
            }
        }
    }

    #[test]
    fn lattice_invariants() {
        assert!(matches!(
            Lattice::new(["a", "a"], Spin::Half),
            Err(Error::DuplicateSite(_))
        ));
        assert!(matches!(
            Lattice::with_local_dim(["a"], 4),
            Err(Error::UnsupportedLocalDim(4))
        ));
        assert!(matches!(
            Lattice::numbered(15, Spin::Half),
            Err(Error::DimensionCap { dim: 32768, .. })
        ));
        assert_eq!(Lattice::numbered(14, Spin::Half).unwrap().dim(), 1 << 14);
        assert!(matches!(SpinAxis::try_from(4), Err(Error::InvalidAxis(4))));
        assert!(matches!(Spin::from_value(1.5), Err(Error::UnsupportedSpin(_))));
    }
}
