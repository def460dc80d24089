//! XY-type Hamiltonians with arbitrary multi-site couplings.
//!
//! Every builder follows `H = -Σ_A Σ_i J_A^i ∏_{x∈A} S_x^i` with `J_A^i ≥ 0`,
//! plus the boundary-field, `+`-boundary and doubled-space variants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DenseOperator;
use crate::spin::{check_dim, spin_matrix, subset_product, Lattice, SiteSet, Spin, SpinAxis};

/// The two spin directions a Hamiltonian couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u8; 2]", into = "[u8; 2]")]
pub enum AxisPair {
    /// Interactions along `S^1` and `S^2`.
    XY,
    /// Interactions along `S^1` and `S^3`.
    XZ,
}

impl AxisPair {
    pub fn axes(self) -> [SpinAxis; 2] {
        match self {
            AxisPair::XY => [SpinAxis::X, SpinAxis::Y],
            AxisPair::XZ => [SpinAxis::X, SpinAxis::Z],
        }
    }

    pub fn transverse(self) -> SpinAxis {
        self.axes()[1]
    }

    pub fn contains(self, axis: SpinAxis) -> bool {
        self.axes().contains(&axis)
    }
}

impl TryFrom<[u8; 2]> for AxisPair {
    type Error = Error;

    fn try_from(v: [u8; 2]) -> Result<Self> {
        match v {
            [1, 2] => Ok(AxisPair::XY),
            [1, 3] => Ok(AxisPair::XZ),
            _ => Err(Error::invalid("axis_pair", format!("{v:?} is not (1,2) or (1,3)"))),
        }
    }
}

impl From<AxisPair> for [u8; 2] {
    fn from(p: AxisPair) -> [u8; 2] {
        let [a, b] = p.axes();
        [a.index(), b.index()]
    }
}

impl fmt::Display for AxisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.axes();
        write!(f, "({a},{b})")
    }
}

/// One term `J_A^i ∏_{x∈A} S_x^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub subset: SiteSet,
    pub axis: SpinAxis,
    pub strength: f64,
}

impl Coupling {
    pub fn new<I, S>(subset: I, axis: SpinAxis, strength: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            subset: subset.into_iter().map(Into::into).collect(),
            axis,
            strength,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawCouplingSet {
    axis_pair: AxisPair,
    #[serde(default)]
    couplings: Vec<Coupling>,
    #[serde(default)]
    allow_negative: bool,
}

/// A validated list of couplings, at most one per `(subset, axis)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCouplingSet")]
pub struct CouplingSet {
    axis_pair: AxisPair,
    couplings: Vec<Coupling>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_negative: bool,
}

impl TryFrom<RawCouplingSet> for CouplingSet {
    type Error = Error;

    fn try_from(raw: RawCouplingSet) -> Result<Self> {
        let mut cs = CouplingSet::empty(raw.axis_pair);
        cs.allow_negative = raw.allow_negative;
        for c in raw.couplings {
            cs.push(c)?;
        }
        Ok(cs)
    }
}

impl CouplingSet {
    pub fn empty(axis_pair: AxisPair) -> Self {
        Self {
            axis_pair,
            couplings: Vec::new(),
            allow_negative: false,
        }
    }

    pub fn new(axis_pair: AxisPair, couplings: Vec<Coupling>) -> Result<Self> {
        let mut cs = Self::empty(axis_pair);
        for c in couplings {
            cs.push(c)?;
        }
        Ok(cs)
    }

    /// Like [`CouplingSet::new`] but admits negative strengths. Only meant for
    /// demonstrating what happens outside the ferromagnetic hypothesis.
    pub fn new_allowing_negative(axis_pair: AxisPair, couplings: Vec<Coupling>) -> Result<Self> {
        let mut cs = Self::empty(axis_pair);
        cs.allow_negative = true;
        for c in couplings {
            cs.push(c)?;
        }
        Ok(cs)
    }

    pub fn push(&mut self, c: Coupling) -> Result<()> {
        if c.subset.is_empty() {
            return Err(Error::EmptyCouplingSubset);
        }
        if !self.axis_pair.contains(c.axis) {
            return Err(Error::AxisOutsidePair {
                axis: c.axis.index(),
                pair: self.axis_pair.to_string(),
            });
        }
        if !c.strength.is_finite() || (c.strength < 0.0 && !self.allow_negative) {
            return Err(Error::NegativeCoupling {
                subset: c.subset.iter().cloned().collect(),
                axis: c.axis.index(),
                strength: c.strength,
            });
        }
        if self.find(&c.subset, c.axis).is_some() {
            return Err(Error::DuplicateCoupling {
                subset: c.subset.iter().cloned().collect(),
                axis: c.axis.index(),
            });
        }
        self.couplings.push(c);
        Ok(())
    }

    fn find(&self, subset: &SiteSet, axis: SpinAxis) -> Option<usize> {
        self.couplings
            .iter()
            .position(|c| c.axis == axis && &c.subset == subset)
    }

    pub fn axis_pair(&self) -> AxisPair {
        self.axis_pair
    }

    pub fn allows_negative(&self) -> bool {
        self.allow_negative
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Coupling> {
        self.couplings.iter()
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn strength(&self, subset: &SiteSet, axis: SpinAxis) -> f64 {
        self.find(subset, axis).map_or(0.0, |k| self.couplings[k].strength)
    }

    /// Copy with `J_subset^axis` set to `value`, inserting the term if absent.
    pub fn with_strength(&self, subset: &SiteSet, axis: SpinAxis, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match out.find(subset, axis) {
            Some(k) => {
                if value < 0.0 && !out.allow_negative {
                    return Err(Error::NegativeCoupling {
                        subset: subset.iter().cloned().collect(),
                        axis: axis.index(),
                        strength: value,
                    });
                }
                out.couplings[k].strength = value;
            }
            None => out.push(Coupling {
                subset: subset.clone(),
                axis,
                strength: value,
            })?,
        }
        Ok(out)
    }

    /// Relabels the transverse axis so the set lives in `pair`
    /// (`S^2 ↔ S^3`, a site-local rotation about axis 1).
    pub fn with_axis_pair(&self, pair: AxisPair) -> Self {
        let from = self.axis_pair.transverse();
        let to = pair.transverse();
        Self {
            axis_pair: pair,
            couplings: self
                .couplings
                .iter()
                .map(|c| Coupling {
                    axis: if c.axis == from { to } else { c.axis },
                    ..c.clone()
                })
                .collect(),
            allow_negative: self.allow_negative,
        }
    }

    /// Couplings whose subsets lie entirely inside `sites`.
    pub fn restricted_to(&self, sites: &SiteSet) -> Self {
        Self {
            axis_pair: self.axis_pair,
            couplings: self
                .couplings
                .iter()
                .filter(|c| c.subset.is_subset(sites))
                .cloned()
                .collect(),
            allow_negative: self.allow_negative,
        }
    }

    /// Union of two sets with disjoint keys.
    pub fn merged(&self, other: &Self) -> Result<Self> {
        if self.axis_pair != other.axis_pair {
            return Err(Error::invalid("axis_pair", "cannot merge different axis pairs"));
        }
        let mut out = self.clone();
        out.allow_negative |= other.allow_negative;
        for c in &other.couplings {
            out.push(c.clone())?;
        }
        Ok(out)
    }

    /// Sites touched by at least one coupling with positive strength.
    pub fn coupled_sites(&self) -> SiteSet {
        self.couplings
            .iter()
            .filter(|c| c.strength > 0.0)
            .flat_map(|c| c.subset.iter().cloned())
            .collect()
    }

    pub fn validate_on(&self, lat: &Lattice) -> Result<()> {
        for c in &self.couplings {
            for s in &c.subset {
                lat.position(s)?;
            }
        }
        Ok(())
    }
}

/// `H_Λ = -Σ_A Σ_i J_A^i ∏_{x∈A} S_x^i`.
pub fn build_hamiltonian(lat: &Lattice, cs: &CouplingSet, spin: Spin) -> Result<DenseOperator> {
    if spin != lat.spin() {
        return Err(Error::DimensionMismatch {
            expected: lat.local_dim(),
            got: spin.local_dim(),
        });
    }
    cs.validate_on(lat)?;
    let mut h = DenseOperator::zeros(lat.dim());
    for c in cs.iter() {
        let term = subset_product(lat, &c.subset, c.axis, spin)?;
        h -= &term.scale(c.strength);
    }
    Ok(h)
}

/// A finite region `Λ` inside its range-`R` enlargement `Λ_R`, with exterior
/// boundary `∂_RΛ = Λ_R \ Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGeometry {
    inner: Lattice,
    range: usize,
    enlarged: Lattice,
    boundary: SiteSet,
}

impl BoundaryGeometry {
    /// `inner_sites` must be a subset of `enlarged`; the inner lattice keeps
    /// the enlarged lattice's site order.
    pub fn new(enlarged: Lattice, inner_sites: &SiteSet, range: usize) -> Result<Self> {
        if enlarged.spin() != Spin::Half {
            return Err(Error::invalid("geometry", "boundary fields require spin 1/2"));
        }
        let inner = enlarged.restrict(inner_sites)?;
        let boundary = enlarged
            .sites()
            .iter()
            .filter(|s| !inner_sites.contains(*s))
            .cloned()
            .collect();
        Ok(Self {
            inner,
            range,
            enlarged,
            boundary,
        })
    }

    pub fn inner(&self) -> &Lattice {
        &self.inner
    }

    pub fn enlarged(&self) -> &Lattice {
        &self.enlarged
    }

    pub fn boundary(&self) -> &SiteSet {
        &self.boundary
    }

    pub fn range(&self) -> usize {
        self.range
    }
}

/// `H^η = H_{Λ_R} - η Σ_{x∈∂_RΛ} S_x^1`.
pub fn build_boundary_hamiltonian(geom: &BoundaryGeometry, cs: &CouplingSet, eta: f64) -> Result<DenseOperator> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::invalid("eta", format!("must be nonnegative, got {eta}")));
    }
    let lat = geom.enlarged();
    let mut h = build_hamiltonian(lat, cs, Spin::Half)?;
    if eta > 0.0 {
        let s1 = spin_matrix(Spin::Half, SpinAxis::X);
        for b in geom.boundary() {
            h -= &crate::spin::embed_site(&s1, b, lat)?.scale(eta);
        }
    }
    Ok(h)
}

/// The `η → ∞` effective Hamiltonian on `ℋ_Λ`: bulk terms unchanged,
/// axis-1 terms crossing the boundary keep weight `2^{-|A∩∂_RΛ|}` on their
/// inner part, transverse crossing terms vanish. Subsets entirely in the
/// boundary contribute constants.
pub fn build_plus_hamiltonian(geom: &BoundaryGeometry, cs: &CouplingSet) -> Result<DenseOperator> {
    let lat = geom.inner();
    cs.validate_on(geom.enlarged())?;
    let mut h = DenseOperator::zeros(lat.dim());
    for c in cs.iter() {
        let outside = c.subset.intersection(geom.boundary()).count();
        if outside == 0 {
            h -= &subset_product(lat, &c.subset, c.axis, Spin::Half)?.scale(c.strength);
        } else if c.axis == SpinAxis::X {
            let inside: SiteSet = c
                .subset
                .iter()
                .filter(|s| !geom.boundary().contains(*s))
                .cloned()
                .collect();
            let weight = c.strength * 0.5_f64.powi(outside as i32);
            h -= &subset_product(lat, &inside, SpinAxis::X, Spin::Half)?.scale(weight);
        }
    }
    Ok(h)
}

/// `H_{Λ,+} = H ⊗ 1 + 1 ⊗ H` on `ℋ_Λ ⊗ ℋ_Λ` (all copy-1 factors first).
pub fn build_doubled_hamiltonian(lat: &Lattice, cs: &CouplingSet, spin: Spin) -> Result<DenseOperator> {
    check_dim(lat.dim().saturating_mul(lat.dim()))?;
    let h = build_hamiltonian(lat, cs, spin)?;
    Ok(kron_sum(&h))
}

pub(crate) fn kron_sum(h: &DenseOperator) -> DenseOperator {
    let id = DenseOperator::identity(h.dim());
    h.kron(&id) + id.kron(h)
}
