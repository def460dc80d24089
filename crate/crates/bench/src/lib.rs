//! Fixtures shared by the benchmarks.

use xyineq_core::hamiltonian::build_hamiltonian;
use xyineq_core::spin::subset_product;
use xyineq_core::{site_set, AxisPair, Coupling, CouplingSet, DenseOperator, Lattice, Spin, SpinAxis};

/// Open XY chain on `n` spin-1/2 sites with alternating bond strengths and a
/// three-site term at the start.
pub fn chain(n: usize) -> (Lattice, CouplingSet) {
    let lat = Lattice::numbered(n, Spin::Half).expect("valid size");
    let s = lat.sites().to_vec();
    let mut terms = Vec::new();
    for k in 0..n.saturating_sub(1) {
        let j = if k % 2 == 0 { 1.0 } else { 0.6 };
        terms.push(Coupling::new([s[k].as_str(), s[k + 1].as_str()], SpinAxis::X, j));
        terms.push(Coupling::new([s[k].as_str(), s[k + 1].as_str()], SpinAxis::Y, 0.5 * j));
    }
    if n >= 3 {
        terms.push(Coupling::new(
            [s[0].as_str(), s[1].as_str(), s[2].as_str()],
            SpinAxis::X,
            0.3,
        ));
    }
    let cs = CouplingSet::new(AxisPair::XY, terms).expect("nonnegative couplings");
    (lat, cs)
}

pub fn chain_hamiltonian(n: usize) -> DenseOperator {
    let (lat, cs) = chain(n);
    build_hamiltonian(&lat, &cs, Spin::Half).expect("within the dimension cap")
}

/// `S^1` on the first and `S^axis` on the last site of the chain.
pub fn end_to_end(lat: &Lattice, axis: SpinAxis) -> (DenseOperator, DenseOperator) {
    let first = site_set([lat.sites()[0].as_str()]);
    let last = site_set([lat.sites()[lat.len() - 1].as_str()]);
    (
        subset_product(lat, &first, SpinAxis::X, Spin::Half).expect("site exists"),
        subset_product(lat, &last, axis, Spin::Half).expect("site exists"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_hermitian_with_expected_dimension() {
        let h = chain_hamiltonian(4);
        assert_eq!(h.dim(), 16);
        assert!(h.is_hermitian());
    }
}
