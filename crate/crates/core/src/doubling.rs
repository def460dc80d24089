//! Ginibre's product-space construction for spin 1/2: lifted operators
//! `a_± = a ⊗ 1 ± 1 ⊗ a` on `ℋ_Λ ⊗ ℋ_Λ` and the site-local basis in which the
//! lifted spin operators have nonnegative matrix elements.
//!
//! Factor ordering on the doubled space is copy-major: all copy-1 sites in
//! lattice order, then all copy-2 sites. The Ginibre transform reorders to
//! site-paired order `(x₁,copy1), (x₁,copy2), (x₂,copy1), …` before applying
//! the per-site 4×4 unitary.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{GibbsState, SpectralDecomposition};
use crate::hamiltonian::{build_doubled_hamiltonian, kron_sum, AxisPair, CouplingSet};
use crate::operator::{factor_permutation, kron_all, DenseOperator};
use crate::spin::{check_dim, embed_site, spin_matrix, Lattice, SiteSet, Spin, SpinAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// `a ⊗ 1 ± 1 ⊗ a`.
pub fn lift(a: &DenseOperator, sign: Sign) -> Result<DenseOperator> {
    check_dim(a.dim().saturating_mul(a.dim()))?;
    let id = DenseOperator::identity(a.dim());
    let left = a.kron(&id);
    let right = id.kron(a);
    Ok(match sign {
        Sign::Plus => left + right,
        Sign::Minus => left - right,
    })
}

/// `Σ_k c_k A_k ⊗ B_k` kept in factored form; products use
/// `(A ⊗ B)(C ⊗ D) = AC ⊗ BD` and only [`Factored::materialize`] builds
/// the doubled-space matrix.
#[derive(Debug, Clone)]
struct Factored(Vec<(f64, DenseOperator, DenseOperator)>);

impl Factored {
    fn lift(a: &DenseOperator, sign: Sign) -> Self {
        let id = DenseOperator::identity(a.dim());
        let c = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        Self(vec![(1.0, a.clone(), id.clone()), (c, id, a.clone())])
    }

    fn identity(dim: usize, c: f64) -> Self {
        let id = DenseOperator::identity(dim);
        Self(vec![(c, id.clone(), id)])
    }

    fn mul(&self, other: &Self, c: f64) -> Self {
        let mut out = Vec::with_capacity(self.0.len() * other.0.len());
        for (c1, a1, b1) in &self.0 {
            for (c2, a2, b2) in &other.0 {
                out.push((c * c1 * c2, a1 * a2, b1 * b2));
            }
        }
        Self(out)
    }

    fn plus(mut self, other: Self) -> Self {
        self.0.extend(other.0);
        self
    }

    fn materialize(&self, dim: usize) -> DenseOperator {
        let mut m = DenseOperator::zeros(dim * dim);
        for (c, a, b) in &self.0 {
            m += &a.kron(b).scale(*c);
        }
        m
    }
}

/// The 4×4 unitary with columns `p_+, q_+, p_-, q_-` in the product basis
/// ordered `(++, +-, -+, --)`, where `+` is the `S^3 = +1/2` state.
#[derive(Debug, Clone, PartialEq)]
pub struct GinibreBasis {
    unitary: DenseOperator,
}

pub const GINIBRE_LABELS: [&str; 4] = ["p+", "q+", "p-", "q-"];

impl GinibreBasis {
    pub fn unitary(&self) -> &DenseOperator {
        &self.unitary
    }

    /// Column `k` as a vector of four amplitudes.
    pub fn column(&self, k: usize) -> [Complex64; 4] {
        std::array::from_fn(|r| self.unitary.get(r, k))
    }

    /// Matrix elements `(e_r, op e_c)` in this basis.
    pub fn transform(&self, op: &DenseOperator) -> DenseOperator {
        op.conjugate_by(self.unitary.matrix())
    }
}

pub fn ginibre_basis() -> GinibreBasis {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let rows = [
        r,   0.0, r,   0.0,
        0.0, r,   0.0, -r,
        0.0, r,   0.0, r,
        r,   0.0, -r,  0.0,
    ];
    GinibreBasis {
        unitary: DenseOperator::from_real_rows(4, &rows).expect("4x4 literal"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisMode {
    Product,
    Ginibre,
}

/// `ℋ_Λ ⊗ ℋ_Λ` for a spin-1/2 lattice.
#[derive(Debug, Clone)]
pub struct DoubledSpace {
    base: Lattice,
}

impl DoubledSpace {
    pub fn new(base: Lattice) -> Result<Self> {
        if base.spin() != Spin::Half {
            return Err(Error::invalid("lattice", "the doubled space is built on spin 1/2"));
        }
        check_dim(base.dim().saturating_mul(base.dim()))?;
        Ok(Self { base })
    }

    pub fn base(&self) -> &Lattice {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim() * self.base.dim()
    }

    /// Factor order taking copy-major to site-paired layout.
    fn paired_order(&self) -> Vec<usize> {
        let n = self.base.len();
        (0..n).flat_map(|k| [k, n + k]).collect()
    }

    fn qubit_dims(&self) -> Vec<usize> {
        vec![2; 2 * self.base.len()]
    }

    fn paired_unitary(&self) -> DenseOperator {
        let u = ginibre_basis().unitary;
        let factors = vec![u; self.base.len()];
        kron_all(&factors)
    }

    /// The global basis change in copy-major ordering: column `j` is the
    /// `j`-th Ginibre basis vector (labels in site-paired order).
    pub fn global_unitary(&self) -> DenseOperator {
        let map = factor_permutation(&self.qubit_dims(), &self.paired_order());
        let wp = self.paired_unitary();
        let n = self.dim();
        let mut w = DMatrix::zeros(n, n);
        for (paired_row, &copy_major_row) in map.iter().enumerate() {
            w.set_row(copy_major_row, &wp.matrix().row(paired_row));
        }
        DenseOperator::from_matrix(w).expect("finite")
    }

    /// Matrix elements of a doubled-space operator in the Ginibre basis.
    pub fn to_ginibre(&self, op: &DenseOperator) -> Result<DenseOperator> {
        op.ensure_dim(self.dim())?;
        let paired = op.permute_factors(&self.qubit_dims(), &self.paired_order());
        Ok(paired.conjugate_by(self.paired_unitary().matrix()))
    }

    pub fn basis(&self, mode: BasisMode) -> DenseOperator {
        match mode {
            BasisMode::Product => DenseOperator::identity(self.dim()),
            BasisMode::Ginibre => self.global_unitary(),
        }
    }

    /// `S^axis_{x,±}`.
    pub fn lifted_spin(&self, x: &str, axis: SpinAxis, sign: Sign) -> Result<DenseOperator> {
        let sx = embed_site(&spin_matrix(Spin::Half, axis), x, &self.base)?;
        lift(&sx, sign)
    }
}

/// Both sides of `⟨a;b⟩_s - ⟨a⟩⟨b⟩ = ½⟨⟨a_-;b_-⟩⟩_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationIdentity {
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl TruncationIdentity {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Evaluates the truncated Schwinger function directly on `ℋ_Λ` and as half
/// the doubled-space Schwinger function of `a_-, b_-` under `H ⊗ 1 + 1 ⊗ H`
/// (whose partition function is `Z²`).
pub fn doubled_truncation_identity(
    h: &DenseOperator,
    a: &DenseOperator,
    b: &DenseOperator,
    beta: f64,
    s: f64,
) -> Result<TruncationIdentity> {
    Ok(doubled_truncation_identity_grid(h, a, b, beta, &[s])?[0])
}

/// [`doubled_truncation_identity`] over several `s`.
pub fn doubled_truncation_identity_grid(
    h: &DenseOperator,
    a: &DenseOperator,
    b: &DenseOperator,
    beta: f64,
    s_grid: &[f64],
) -> Result<Vec<TruncationIdentity>> {
    DoubledSpectra::new(h)?.identities(a, b, beta, s_grid)
}

/// Spectral decompositions of `H` and `H ⊗ 1 + 1 ⊗ H`, computed once and
/// shared by every observable, `β` and `s`.
#[derive(Debug, Clone)]
pub struct DoubledSpectra {
    single: SpectralDecomposition,
    doubled: SpectralDecomposition,
}

impl DoubledSpectra {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        check_dim(h.dim().saturating_mul(h.dim()))?;
        Ok(Self {
            single: SpectralDecomposition::new(h)?,
            doubled: SpectralDecomposition::new(&kron_sum(h))?,
        })
    }

    pub fn identities(
        &self,
        a: &DenseOperator,
        b: &DenseOperator,
        beta: f64,
        s_grid: &[f64],
    ) -> Result<Vec<TruncationIdentity>> {
        Ok(self.identity_sweep(a, b, &[beta], s_grid)?.remove(0))
    }

    /// Identities for every `(β, s)`, indexed `[β][s]`; observables are moved
    /// to the eigenbases once.
    pub fn identity_sweep(
        &self,
        a: &DenseOperator,
        b: &DenseOperator,
        betas: &[f64],
        s_grid: &[f64],
    ) -> Result<Vec<Vec<TruncationIdentity>>> {
        if let Some(&s) = s_grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::invalid("s", format!("must lie in [0, 1], got {s}")));
        }
        let (ae, be) = (self.single.to_eigenbasis(a)?, self.single.to_eigenbasis(b)?);
        let (am, bm) = (lift(a, Sign::Minus)?, lift(b, Sign::Minus)?);
        let (ame, bme) = (self.doubled.to_eigenbasis(&am)?, self.doubled.to_eigenbasis(&bm)?);
        betas
            .iter()
            .map(|&beta| {
                let single = GibbsState::from_decomposition(self.single.clone(), beta)?;
                let direct = single.pair_from_eigenbasis(ae.clone(), be.clone());
                let doubled = GibbsState::from_decomposition(self.doubled.clone(), beta)?;
                let lifted = doubled.pair_from_eigenbasis(ame.clone(), bme.clone());
                Ok(s_grid
                    .iter()
                    .map(|&s| TruncationIdentity {
                        lhs: direct.truncated(s),
                        rhs: lifted.schwinger(s) * 0.5,
                    })
                    .collect())
            })
            .collect()
    }
}

/// Max residual of `(ab)_± = ½a_+b_± + ½a_-b_∓` over both signs.
pub fn product_lift_residual(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    b.ensure_dim(a.dim())?;
    check_dim(a.dim().saturating_mul(a.dim()))?;
    let ab = a * b;
    let ap = Factored::lift(a, Sign::Plus);
    let am = Factored::lift(a, Sign::Minus);
    let mut worst = 0.0_f64;
    for sign in [Sign::Plus, Sign::Minus] {
        let lhs = lift(&ab, sign)?;
        let rhs = ap
            .mul(&Factored::lift(b, sign), 0.5)
            .plus(am.mul(&Factored::lift(b, sign.flip()), 0.5))
            .materialize(a.dim());
        worst = worst.max(lhs.max_diff(&rhs));
    }
    Ok(worst)
}

/// `(∏_{x∈A} S_x^axis)_sign` assembled only from the single-site lifts
/// `S_{x,±}^axis` by repeated use of `(ab)_± = ½a_+b_± + ½a_-b_∓`.
pub fn lifted_product_expansion(
    space: &DoubledSpace,
    subset: &SiteSet,
    axis: SpinAxis,
    sign: Sign,
) -> Result<DenseOperator> {
    let (plus, minus) = expand_both(space, &subset.iter().collect::<Vec<_>>(), axis)?;
    Ok(match sign {
        Sign::Plus => plus,
        Sign::Minus => minus,
    })
}

fn expand_both(space: &DoubledSpace, sites: &[&String], axis: SpinAxis) -> Result<(DenseOperator, DenseOperator)> {
    let (plus, minus) = expand_factored(space, sites, axis)?;
    let d = space.base.dim();
    Ok((plus.materialize(d), minus.materialize(d)))
}

fn expand_factored(space: &DoubledSpace, sites: &[&String], axis: SpinAxis) -> Result<(Factored, Factored)> {
    let d = space.base.dim();
    match sites.split_first() {
        None => Ok((Factored::identity(d, 2.0), Factored(Vec::new()))),
        Some((x, rest)) => {
            let sx = embed_site(&spin_matrix(Spin::Half, axis), x, &space.base)?;
            let xp = Factored::lift(&sx, Sign::Plus);
            let xm = Factored::lift(&sx, Sign::Minus);
            if rest.is_empty() {
                return Ok((xp, xm));
            }
            let (rp, rm) = expand_factored(space, rest, axis)?;
            let plus = xp.mul(&rp, 0.5).plus(xm.mul(&rm, 0.5));
            let minus = xp.mul(&rm, 0.5).plus(xm.mul(&rp, 0.5));
            Ok((plus, minus))
        }
    }
}

/// `max |H_{Λ,+} - (-Σ J_A^i (∏S^i)_+ expanded in single-site lifts)|` for
/// the couplings translated to axes (1,3).
pub fn lifted_expansion_residual(lat: &Lattice, cs: &CouplingSet) -> Result<f64> {
    let cs13 = cs.with_axis_pair(AxisPair::XZ);
    let space = DoubledSpace::new(lat.clone())?;
    let direct = build_doubled_hamiltonian(lat, &cs13, Spin::Half)?;
    let mut expanded = DenseOperator::zeros(space.dim());
    for c in cs13.iter() {
        let term = lifted_product_expansion(&space, &c.subset, c.axis, Sign::Plus)?;
        expanded -= &term.scale(c.strength);
    }
    Ok(direct.max_diff(&expanded))
}

/// Smallest real part and largest |imaginary part| of `-H_{Λ,+}` (axes (1,3))
/// in the Ginibre basis.
pub fn doubled_hamiltonian_extremes(lat: &Lattice, cs: &CouplingSet) -> Result<(f64, f64)> {
    let cs13 = cs.with_axis_pair(AxisPair::XZ);
    let space = DoubledSpace::new(lat.clone())?;
    let h = build_doubled_hamiltonian(lat, &cs13, Spin::Half)?;
    Ok(space.to_ginibre(&h.scale(-1.0))?.entry_extremes())
}

/// The four lifted single-site operators whose Ginibre-basis matrix elements are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftedSpin {
    /// `S^1_+`
    XPlus,
    /// `S^1_-`
    XMinus,
    /// `S^3_+`
    ZPlus,
    /// `-S^3_-`
    NegZMinus,
}

impl LiftedSpin {
    pub const ALL: [LiftedSpin; 4] = [
        LiftedSpin::XPlus,
        LiftedSpin::XMinus,
        LiftedSpin::ZPlus,
        LiftedSpin::NegZMinus,
    ];

    fn build(self, space: &DoubledSpace, x: &str) -> Result<DenseOperator> {
        Ok(match self {
            LiftedSpin::XPlus => space.lifted_spin(x, SpinAxis::X, Sign::Plus)?,
            LiftedSpin::XMinus => space.lifted_spin(x, SpinAxis::X, Sign::Minus)?,
            LiftedSpin::ZPlus => space.lifted_spin(x, SpinAxis::Z, Sign::Plus)?,
            LiftedSpin::NegZMinus => space.lifted_spin(x, SpinAxis::Z, Sign::Minus)?.scale(-1.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteOperatorExtremes {
    pub site: String,
    pub operator: LiftedSpin,
    pub min_entry: f64,
    pub max_imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegativityReport {
    pub entries: Vec<SiteOperatorExtremes>,
    pub min_entry: f64,
    pub max_imag: f64,
}

impl NonnegativityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_entry >= -tol && self.max_imag <= tol
    }
}

/// Ginibre-basis extremes of `S^1_{x,±}`, `S^3_{x,+}` and `-S^3_{x,-}` at every site.
pub fn nonnegativity_report(lat: &Lattice) -> Result<NonnegativityReport> {
    let space = DoubledSpace::new(lat.clone())?;
    let mut entries = Vec::with_capacity(4 * lat.len());
    for x in lat.sites() {
        for op in LiftedSpin::ALL {
            let (min_entry, max_imag) = space.to_ginibre(&op.build(&space, x)?)?.entry_extremes();
            entries.push(SiteOperatorExtremes {
                site: x.clone(),
                operator: op,
                min_entry,
                max_imag,
            });
        }
    }
    let min_entry = entries.iter().map(|e| e.min_entry).fold(f64::INFINITY, f64::min);
    let max_imag = entries.iter().map(|e| e.max_imag).fold(0.0, f64::max);
    Ok(NonnegativityReport {
        entries,
        min_entry,
        max_imag,
    })
}
