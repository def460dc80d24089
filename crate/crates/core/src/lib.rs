//! Exact diagonalization of quantum XY models with multi-site ferromagnetic
//! couplings, and numerical certification of their correlation inequalities.
//!
//! Operators are dense complex matrices on `⊗_x C^{2S+1}`. Every Gibbs or
//! ground-state quantity is evaluated in the eigenbasis of the Hamiltonian.

pub mod campaign;
pub mod doubling;
pub mod error;
pub mod gibbs;
pub mod hamiltonian;
pub mod operator;
pub mod spin;
pub mod spin_one;
pub mod volume;

pub use campaign::{
    parse_config, replay, run_campaign, CampaignConfig, Check, CheckKind, Instance, InstanceRecord, Mode,
    VerificationReport,
};
pub use error::{Error, Result};
pub use gibbs::{GibbsState, GroundSpace, SpectralDecomposition};
pub use hamiltonian::{AxisPair, BoundaryGeometry, Coupling, CouplingSet};
pub use operator::DenseOperator;
pub use spin::{site_set, Lattice, SiteSet, Spin, SpinAxis};
