//! Gibbs states, Schwinger functions and ground-state limits, all evaluated
//! in the eigenbasis of the Hamiltonian.
//!
//! Boltzmann factors are always formed as `exp(-β(E - E_0))`, so nothing
//! overflows even at very large `β`; `log Z` carries the shift back.

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, CouplingSet};
use crate::operator::DenseOperator;
use crate::spin::{subset_product, Lattice, SiteSet, Spin, SpinAxis};

/// Imaginary parts above this (relative to `max(1, |re|)`) are reported as errors
/// when a real value is requested.
pub const IMAG_TOL: f64 = 1e-10;

/// Finite-difference step for coupling derivatives.
pub const FD_STEP: f64 = 1e-4;

/// Gauss–Legendre nodes for the Duhamel integral over `s ∈ [0, 1]`.
pub const QUADRATURE_NODES: usize = 32;

pub(crate) fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() <= IMAG_TOL * z.re.abs().max(1.0) {
        Ok(z.re)
    } else {
        Err(Error::ComplexValue { real: z.re, imag: z.im })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "beta",
            format!("must be positive and finite, got {beta}"),
        ))
    }
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::invalid("s", format!("must lie in [0, 1], got {s}")))
    }
}

/// Eigenvalues in ascending order with the matching unitary of eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn new(h: &DenseOperator) -> Result<Self> {
        h.ensure_hermitian()?;
        let eig = h.matrix().clone().symmetric_eigen();
        let n = h.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `U D U†`.
    pub fn reconstruct(&self) -> DenseOperator {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| Complex64::new(e, 0.0)),
        ));
        let u = &self.eigenvectors;
        DenseOperator::from_matrix(u * d * u.adjoint()).expect("finite")
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        DenseOperator::from_matrix(g)
            .expect("finite")
            .max_diff(&DenseOperator::identity(n))
    }

    /// Matrix elements of `a` in the eigenbasis, `U† a U`.
    pub fn to_eigenbasis(&self, a: &DenseOperator) -> Result<DMatrix<Complex64>> {
        a.ensure_dim(self.dim())?;
        Ok(self.eigenvectors.adjoint() * a.matrix() * &self.eigenvectors)
    }
}

/// The Gibbs state `⟨·⟩ = Tr(· e^{-βH}) / Z` of a fixed Hamiltonian.
#[derive(Debug, Clone)]
pub struct GibbsState {
    decomposition: SpectralDecomposition,
    beta: f64,
    log_z: f64,
    /// `e^{-β(E_k - E_0)}`, unnormalized.
    shifted: Vec<f64>,
    shifted_sum: f64,
}

impl GibbsState {
    pub fn new(h: &DenseOperator, beta: f64) -> Result<Self> {
        Self::from_decomposition(SpectralDecomposition::new(h)?, beta)
    }

    pub fn from_decomposition(decomposition: SpectralDecomposition, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let e0 = decomposition.ground_energy();
        let shifted: Vec<f64> = decomposition
            .eigenvalues()
            .iter()
            .map(|&e| (-beta * (e - e0)).exp())
            .collect();
        let shifted_sum: f64 = shifted.iter().sum();
        let log_z = -beta * e0 + shifted_sum.ln();
        Ok(Self {
            decomposition,
            beta,
            log_z,
            shifted,
            shifted_sum,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    /// Normalized Boltzmann weights, summing to one.
    pub fn weights(&self) -> Vec<f64> {
        self.shifted.iter().map(|w| w / self.shifted_sum).collect()
    }

    pub fn expectation(&self, a: &DenseOperator) -> Result<Complex64> {
        let ae = self.decomposition.to_eigenbasis(a)?;
        Ok(self.expectation_in_eigenbasis(&ae))
    }

    /// Real expectation of a Hermitian observable; errors if the imaginary
    /// part is not negligible.
    pub fn expectation_real(&self, a: &DenseOperator) -> Result<f64> {
        real_part(self.expectation(a)?)
    }

    fn expectation_in_eigenbasis(&self, ae: &DMatrix<Complex64>) -> Complex64 {
        let total: Complex64 = self.shifted.iter().enumerate().map(|(k, &w)| ae[(k, k)] * w).sum();
        total / self.shifted_sum
    }

    /// `⟨a;b⟩_s = Tr(a e^{-sβH} b e^{-(1-s)βH}) / Z`.
    pub fn schwinger(&self, a: &DenseOperator, b: &DenseOperator, s: f64) -> Result<Complex64> {
        check_s(s)?;
        let pair = self.eigenbasis_pair(a, b)?;
        Ok(pair.schwinger(s))
    }

    pub fn truncated_schwinger_complex(&self, a: &DenseOperator, b: &DenseOperator, s: f64) -> Result<Complex64> {
        check_s(s)?;
        let pair = self.eigenbasis_pair(a, b)?;
        Ok(pair.truncated(s))
    }

    /// `⟨a;b⟩_s - ⟨a⟩⟨b⟩`, required to be real.
    pub fn truncated_schwinger(&self, a: &DenseOperator, b: &DenseOperator, s: f64) -> Result<f64> {
        real_part(self.truncated_schwinger_complex(a, b, s)?)
    }

    /// Transforms `a` and `b` once so many `s` values can be evaluated cheaply.
    pub fn eigenbasis_pair(&self, a: &DenseOperator, b: &DenseOperator) -> Result<EigenbasisPair<'_>> {
        let ae = self.decomposition.to_eigenbasis(a)?;
        let be = self.decomposition.to_eigenbasis(b)?;
        Ok(self.pair_from_eigenbasis(ae, be))
    }

    /// Pair from matrices already expressed in this state's eigenbasis.
    pub(crate) fn pair_from_eigenbasis(&self, ae: DMatrix<Complex64>, be: DMatrix<Complex64>) -> EigenbasisPair<'_> {
        let mean_a = self.expectation_in_eigenbasis(&ae);
        let mean_b = self.expectation_in_eigenbasis(&be);
        EigenbasisPair {
            state: self,
            ae,
            be,
            mean_a,
            mean_b,
        }
    }
}

/// Two observables expressed in the eigenbasis of a Gibbs state.
pub struct EigenbasisPair<'a> {
    state: &'a GibbsState,
    ae: DMatrix<Complex64>,
    be: DMatrix<Complex64>,
    mean_a: Complex64,
    mean_b: Complex64,
}

impl EigenbasisPair<'_> {
    /// `Σ_{mn} a_{mn} b_{nm} e^{-β(s e_n + (1-s) e_m)} / Z'`, with `e_k = E_k - E_0`.
    pub fn schwinger(&self, s: f64) -> Complex64 {
        let st = self.state;
        let beta = st.beta;
        let e0 = st.decomposition.ground_energy();
        let gaps: Vec<f64> = st.decomposition.eigenvalues().iter().map(|&e| e - e0).collect();
        let left: Vec<f64> = gaps.iter().map(|&g| (-beta * s * g).exp()).collect();
        let right: Vec<f64> = gaps.iter().map(|&g| (-beta * (1.0 - s) * g).exp()).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (m, &rm) in right.iter().enumerate().filter(|(_, &r)| r != 0.0) {
            let row: Complex64 = left
                .iter()
                .enumerate()
                .filter(|(_, &l)| l != 0.0)
                .map(|(n, &l)| self.ae[(m, n)] * self.be[(n, m)] * l)
                .sum();
            total += row * rm;
        }
        total / st.shifted_sum
    }

    pub fn truncated(&self, s: f64) -> Complex64 {
        self.schwinger(s) - self.mean_a * self.mean_b
    }

    pub fn mean_a(&self) -> Complex64 {
        self.mean_a
    }

    pub fn mean_b(&self) -> Complex64 {
        self.mean_b
    }
}

/// `log Z` for `Z = Tr e^{-βH}`.
pub fn partition_function(h: &DenseOperator, beta: f64) -> Result<f64> {
    Ok(GibbsState::new(h, beta)?.log_partition())
}

pub fn expectation(h: &DenseOperator, a: &DenseOperator, beta: f64) -> Result<Complex64> {
    GibbsState::new(h, beta)?.expectation(a)
}

pub fn schwinger(h: &DenseOperator, a: &DenseOperator, b: &DenseOperator, beta: f64, s: f64) -> Result<Complex64> {
    GibbsState::new(h, beta)?.schwinger(a, b, s)
}

pub fn truncated_schwinger(h: &DenseOperator, a: &DenseOperator, b: &DenseOperator, beta: f64, s: f64) -> Result<f64> {
    GibbsState::new(h, beta)?.truncated_schwinger(a, b, s)
}

/// Which finite-difference stencil produced a derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `(f(J+h) - f(J-h)) / 2h`
    Central,
    /// `(-3f(J) + 4f(J+h) - f(J+2h)) / 2h`, used when `J - h < 0`.
    Forward,
}

/// The two evaluations of `∂⟨∏_B S^j⟩ / ∂J_A^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelDerivative {
    pub finite_difference: f64,
    pub quadrature: f64,
    pub stencil: Stencil,
}

impl DuhamelDerivative {
    pub fn discrepancy(&self) -> f64 {
        (self.finite_difference - self.quadrature).abs()
    }
}

/// Fixed 32-node Gauss–Legendre rule.
pub fn gauss_legendre() -> GaussLegendre {
    GaussLegendre::new(QUADRATURE_NODES).expect("degree >= 2")
}

/// Derivative of `⟨∏_{x∈B} S_x^j⟩` with respect to `J_A^i`, computed by
/// finite differences and by `β ∫_0^1 (⟨∏_B S^j ; ∏_A S^i⟩_s - ⟨∏_B S^j⟩⟨∏_A S^i⟩) ds`.
pub fn coupling_derivative(
    lat: &Lattice,
    cs: &CouplingSet,
    spin: Spin,
    beta: f64,
    target: (&SiteSet, SpinAxis),
    observable: (&SiteSet, SpinAxis),
) -> Result<DuhamelDerivative> {
    check_beta(beta)?;
    let (a_set, a_axis) = target;
    let (b_set, b_axis) = observable;
    if a_set.is_empty() {
        return Err(Error::EmptyCouplingSubset);
    }
    let obs = subset_product(lat, b_set, b_axis, spin)?;
    let perturbation = subset_product(lat, a_set, a_axis, spin)?;
    let j0 = cs.strength(a_set, a_axis);

    let value_at = |j: f64| -> Result<f64> {
        let h = build_hamiltonian(lat, &cs.with_strength(a_set, a_axis, j)?, spin)?;
        GibbsState::new(&h, beta)?.expectation_real(&obs)
    };
    let h = FD_STEP;
    let (finite_difference, stencil) = if j0 - h >= 0.0 || cs.allows_negative() {
        ((value_at(j0 + h)? - value_at(j0 - h)?) / (2.0 * h), Stencil::Central)
    } else {
        let f0 = value_at(j0)?;
        let f1 = value_at(j0 + h)?;
        let f2 = value_at(j0 + 2.0 * h)?;
        ((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h), Stencil::Forward)
    };

    let state = GibbsState::new(&build_hamiltonian(lat, cs, spin)?, beta)?;
    let pair = state.eigenbasis_pair(&obs, &perturbation)?;
    // Single nodes may be complex; the s-integral of a Hermitian pair is real.
    let rule = gauss_legendre();
    let integral = rule.integrate(0.0, 1.0, |s| pair.truncated(s).re);
    let imag = rule.integrate(0.0, 1.0, |s| pair.truncated(s).im);
    real_part(Complex64::new(integral, imag))?;

    Ok(DuhamelDerivative {
        finite_difference,
        quadrature: beta * integral,
        stencil,
    })
}

/// Default degeneracy tolerance `1e-8 · max(1, |E_0|)`.
pub fn default_gap_tol(ground_energy: f64) -> f64 {
    1e-8 * ground_energy.abs().max(1.0)
}

/// Eigenvalues within this multiple of `gap_tol` above the ground block make
/// the ground space ambiguous.
const AMBIGUITY_FACTOR: f64 = 10.0;

/// The ground eigenspace `P_0` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    energy: f64,
    projector: DenseOperator,
    vectors: DMatrix<Complex64>,
    degeneracy: usize,
    gap: Option<f64>,
    gap_tol: f64,
}

impl GroundSpace {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn projector(&self) -> &DenseOperator {
        &self.projector
    }

    /// Orthonormal ground vectors as columns.
    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn degeneracy(&self) -> usize {
        self.degeneracy
    }

    /// Distance from `E_0` to the first eigenvalue outside the ground block.
    pub fn gap(&self) -> Option<f64> {
        self.gap
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }

    fn compress(&self, a: &DenseOperator) -> Result<DMatrix<Complex64>> {
        a.ensure_dim(self.dim())?;
        Ok(self.vectors.adjoint() * a.matrix() * &self.vectors)
    }

    /// `tr(a P_0) / d_0`.
    pub fn expectation(&self, a: &DenseOperator) -> Result<Complex64> {
        Ok(self.compress(a)?.trace() / self.degeneracy as f64)
    }

    /// `tr(P_0 a P_0 b) / d_0`, the `β → ∞` limit of `⟨a;b⟩_s` for `s ∈ (0,1)`.
    pub fn schwinger(&self, a: &DenseOperator, b: &DenseOperator) -> Result<Complex64> {
        let ac = self.compress(a)?;
        let bc = self.compress(b)?;
        Ok((ac * bc).trace() / self.degeneracy as f64)
    }

    pub fn truncated_schwinger(&self, a: &DenseOperator, b: &DenseOperator) -> Result<Complex64> {
        Ok(self.schwinger(a, b)? - self.expectation(a)? * self.expectation(b)?)
    }
}

/// Ground space of `h` with membership `E_k - E_0 ≤ gap_tol`
/// (default [`default_gap_tol`]).
pub fn ground_space(h: &DenseOperator, gap_tol: Option<f64>) -> Result<GroundSpace> {
    ground_space_from(&SpectralDecomposition::new(h)?, gap_tol)
}

pub fn ground_space_from(dec: &SpectralDecomposition, gap_tol: Option<f64>) -> Result<GroundSpace> {
    let e0 = dec.ground_energy();
    let gap_tol = gap_tol.unwrap_or_else(|| default_gap_tol(e0));
    if gap_tol.is_nan() || gap_tol < 0.0 {
        return Err(Error::invalid("gap_tol", "must be nonnegative"));
    }
    let evs = dec.eigenvalues();
    let degeneracy = evs.iter().take_while(|&&e| e - e0 <= gap_tol).count();
    let gap = evs.get(degeneracy).map(|&e| e - e0);
    if let Some(g) = gap {
        if g <= AMBIGUITY_FACTOR * gap_tol {
            return Err(Error::AmbiguousGroundSpace { gap_tol, gap: g });
        }
    }
    let vectors = dec.eigenvectors().columns(0, degeneracy).into_owned();
    let projector = DenseOperator::from_matrix(&vectors * vectors.adjoint()).expect("finite");
    Ok(GroundSpace {
        energy: e0,
        projector,
        vectors,
        degeneracy,
        gap,
        gap_tol,
    })
}

pub fn ground_expectation(gs: &GroundSpace, a: &DenseOperator) -> Result<Complex64> {
    gs.expectation(a)
}

pub fn ground_schwinger(gs: &GroundSpace, a: &DenseOperator, b: &DenseOperator) -> Result<Complex64> {
    gs.schwinger(a, b)
}
