use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{CheckSettings, Mode};
use super::generate::{transverse_axis, Instance};
use crate::doubling::{
    doubled_hamiltonian_extremes, lifted_expansion_residual, nonnegativity_report, product_lift_residual,
    DoubledSpectra,
};
use crate::error::{Error, Result};
use crate::gibbs::{coupling_derivative, real_part, GibbsState};
use crate::hamiltonian::{build_hamiltonian, BoundaryGeometry, CouplingSet};
use crate::spin::{subset_product, SiteSet, Spin, SpinAxis};
use crate::spin_one::{
    all_subsets, commutation_check, ground_energy_monotonicity, ground_in_triplet_check, ham_in_subspace_residual,
    isometry_report, projected_gibbs_comparison, theorem2_check, ExtendedLattice, Perturbation,
};
use crate::volume::{
    eta_limit_check, nested_limit_consistency, volume_monotonicity, CouplingTemplate, Region, VolumeSequence,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Passes when `margin >= -tolerance`.
    Sign,
    /// Passes when `margin > 0`.
    Strict,
    /// Passes when `residual <= tolerance`.
    Residual,
    /// Recorded only.
    Diagnostic,
    /// A precondition failed; recorded with the reason and not counted.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

type Params<'a> = &'a [(&'a str, f64)];

fn params(p: Params<'_>) -> BTreeMap<String, f64> {
    p.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl Check {
    pub fn sign(name: &str, p: Params<'_>, value: f64, margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Sign,
            params: params(p),
            value,
            margin: Some(margin),
            residual: None,
            tolerance,
            pass: margin >= -tolerance,
            note: None,
        }
    }

    pub fn strict(name: &str, p: Params<'_>, value: f64, margin: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Strict,
            params: params(p),
            value,
            margin: Some(margin),
            residual: None,
            tolerance: 0.0,
            pass: margin > 0.0,
            note: None,
        }
    }

    pub fn residual(name: &str, p: Params<'_>, value: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Residual,
            params: params(p),
            value,
            margin: None,
            residual: Some(residual),
            tolerance,
            pass: residual <= tolerance,
            note: None,
        }
    }

    pub fn diagnostic(name: &str, p: Params<'_>, value: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Diagnostic,
            params: params(p),
            value,
            margin: None,
            residual: None,
            tolerance: 0.0,
            pass: true,
            note: None,
        }
    }

    fn skipped(name: &str, reason: String) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Skipped,
            params: BTreeMap::new(),
            value: 0.0,
            margin: None,
            residual: None,
            tolerance: 0.0,
            pass: true,
            note: Some(reason),
        }
    }
}

/// Runs `f`, turning failed preconditions into a skipped entry.
fn guarded(out: &mut Vec<Check>, name: &str, f: impl FnOnce(&mut Vec<Check>) -> Result<()>) -> Result<()> {
    let mut local = Vec::new();
    match f(&mut local) {
        Ok(()) => {
            out.extend(local);
            Ok(())
        }
        Err(e @ (Error::AmbiguousGroundSpace { .. } | Error::Hypothesis(_))) => {
            out.push(Check::skipped(name, e.to_string()));
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn axis_param(axis: SpinAxis) -> f64 {
    f64::from(axis.index())
}

/// All checks for the instance's mode.
pub fn run_checks(inst: &Instance, settings: &CheckSettings) -> Result<Vec<Check>> {
    match inst.mode {
        Mode::Theorem1 => theorem1(inst, settings),
        Mode::Corollary => corollary(inst, settings),
        Mode::DoublingLemmas => doubling(inst, settings),
        Mode::Spin1 => spin1(inst, settings),
        Mode::Theorem2 => theorem2(inst, settings),
        Mode::VolumeLimits => volume(inst, settings),
        Mode::All => Err(Error::invalid("mode", "instances carry a concrete mode")),
    }
}

fn theorem1(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let lat = inst.lattice()?;
    let h = build_hamiltonian(&lat, &inst.couplings, Spin::Half)?;
    let t = transverse_axis(inst);
    let a1 = subset_product(&lat, &inst.a, SpinAxis::X, Spin::Half)?;
    let b1 = subset_product(&lat, &inst.b, SpinAxis::X, Spin::Half)?;
    let bt = subset_product(&lat, &inst.b, t, Spin::Half)?;
    let tol = st.tolerances.margin;
    let mut out = Vec::new();
    for &beta in &st.beta_grid {
        let state = GibbsState::new(&h, beta)?;
        let same = state.eigenbasis_pair(&a1, &b1)?;
        let cross = state.eigenbasis_pair(&a1, &bt)?;
        for &s in &st.s_grid {
            let p = [("beta", beta), ("s", s)];
            let v = real_part(same.truncated(s))?;
            out.push(Check::sign("theorem1.same_axis", &p, v, v, tol));
            let v = real_part(cross.truncated(s))?;
            out.push(Check::sign(
                "theorem1.cross_axis",
                &[("beta", beta), ("s", s), ("axis_b", axis_param(t))],
                v,
                -v,
                tol,
            ));
        }
    }
    Ok(out)
}

fn corollary(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let lat = inst.lattice()?;
    let tol = st.tolerances;
    let mut out = Vec::new();
    for &beta in &st.beta_grid {
        for (axis, sign) in [(SpinAxis::X, 1.0), (transverse_axis(inst), -1.0)] {
            let d = coupling_derivative(
                &lat,
                &inst.couplings,
                Spin::Half,
                beta,
                (&inst.a, SpinAxis::X),
                (&inst.b, axis),
            )?;
            let p = [("beta", beta), ("axis_b", axis_param(axis))];
            let allowed = tol.duhamel_abs.max(tol.duhamel_rel * d.quadrature.abs());
            out.push(Check::residual(
                "corollary.duhamel",
                &p,
                d.finite_difference,
                d.discrepancy(),
                allowed,
            ));
            out.push(Check::sign(
                "corollary.sign",
                &p,
                d.quadrature,
                sign * d.quadrature,
                tol.derivative_sign,
            ));
        }
    }
    Ok(out)
}

fn doubling(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let lat = inst.lattice()?;
    let h = build_hamiltonian(&lat, &inst.couplings, Spin::Half)?;
    let t = transverse_axis(inst);
    let tol = st.tolerances;
    let a1 = subset_product(&lat, &inst.a, SpinAxis::X, Spin::Half)?;
    let spectra = DoubledSpectra::new(&h)?;
    let mut out = Vec::new();
    for axis in [SpinAxis::X, t] {
        let b = subset_product(&lat, &inst.b, axis, Spin::Half)?;
        let sweep = spectra.identity_sweep(&a1, &b, &st.beta_grid, &st.s_grid)?;
        for (&beta, ids) in st.beta_grid.iter().zip(&sweep) {
            for (&s, id) in st.s_grid.iter().zip(ids) {
                out.push(Check::residual(
                    "doubling.truncation_identity",
                    &[("beta", beta), ("s", s), ("axis_b", axis_param(axis))],
                    id.lhs.re,
                    id.residual(),
                    tol.truncation_identity,
                ));
            }
        }
        let r = product_lift_residual(&a1, &b)?;
        out.push(Check::residual(
            "doubling.product_lift",
            &[("axis_b", axis_param(axis))],
            r,
            r,
            tol.exact,
        ));
    }
    let r = lifted_expansion_residual(&lat, &inst.couplings)?;
    out.push(Check::residual("doubling.hamiltonian_expansion", &[], r, r, tol.exact));
    let (min, imag) = doubled_hamiltonian_extremes(&lat, &inst.couplings)?;
    out.push(Check::sign(
        "doubling.hamiltonian_nonnegative",
        &[],
        min,
        min,
        tol.exact,
    ));
    out.push(Check::residual(
        "doubling.hamiltonian_imaginary",
        &[],
        imag,
        imag,
        tol.exact,
    ));
    if lat.len() <= 2 {
        let rep = nonnegativity_report(&lat)?;
        out.push(Check::sign(
            "doubling.key_nonnegative",
            &[],
            rep.min_entry,
            rep.min_entry,
            tol.exact,
        ));
        out.push(Check::residual(
            "doubling.key_imaginary",
            &[],
            rep.max_imag,
            rep.max_imag,
            tol.exact,
        ));
    }
    Ok(out)
}

fn spin1(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let lat = inst.lattice()?;
    let ext = ExtendedLattice::new(lat.clone())?;
    let cs = &inst.couplings;
    let tol = st.tolerances;
    let mut out = Vec::new();

    let iso = isometry_report().max();
    out.push(Check::residual("spin1.isometry", &[], iso, iso, tol.exact));
    let subsets = all_subsets(&lat);
    let comm = commutation_check(&ext, &subsets)?;
    out.push(Check::residual("spin1.commutation", &[], comm, comm, tol.exact));
    let mut worst = 0.0_f64;
    for a in &subsets {
        worst = worst.max(ham_in_subspace_residual(&ext, cs, a)?);
    }
    out.push(Check::residual("spin1.ham_in_subspace", &[], worst, worst, tol.exact));

    for &beta in &st.beta_grid {
        for (set, axis) in [(&inst.a, SpinAxis::X), (&inst.b, SpinAxis::Z)] {
            let obs = subset_product(&lat, set, axis, Spin::One)?;
            let cmp = projected_gibbs_comparison(&ext, cs, &obs, beta)?;
            out.push(Check::residual(
                "spin1.projected_gibbs",
                &[("beta", beta), ("axis_b", axis_param(axis))],
                cmp.direct.re,
                cmp.residual(),
                tol.newgibbs,
            ));
        }
    }

    let mut targets: Vec<Perturbation> = cs
        .iter()
        .map(|c| Perturbation::Coupling {
            subset: c.subset.clone(),
            axis: c.axis,
        })
        .collect();
    targets.extend(inst.perturbation.clone());
    for (k, target) in targets.iter().enumerate() {
        for &eps in &st.epsilons {
            let rep = ground_energy_monotonicity(&ext, cs, target, eps)?;
            let name = match target {
                Perturbation::Coupling { .. } => "spin1.ground_energy_decrease",
                Perturbation::SigmaProduct { .. } => "spin1.ground_energy_decrease_sigma",
            };
            out.push(Check::strict(
                name,
                &[("epsilon", eps), ("target", k as f64)],
                rep.after,
                rep.margin,
            ));
            if k == 0 && eps == st.epsilons[0] {
                out.push(Check::sign(
                    "spin1.perron_frobenius",
                    &[],
                    rep.perron_frobenius_min_entry,
                    rep.perron_frobenius_min_entry,
                    tol.exact,
                ));
            }
        }
    }

    guarded(&mut out, "spin1.ground_in_triplet", |out| {
        let rep = ground_in_triplet_check(&ext, cs, None)?;
        let mut c = Check::residual(
            "spin1.ground_in_triplet",
            &[("degeneracy", rep.degeneracy as f64)],
            rep.residual,
            rep.residual,
            tol.triplet,
        );
        if !rep.excluded_sites.is_empty() {
            c.note = Some(format!("uncoupled sites excluded: {}", rep.excluded_sites.join(",")));
        }
        out.push(c);
        Ok(())
    })?;
    Ok(out)
}

fn theorem2(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let lat = inst.lattice()?;
    let tol = st.tolerances;
    let mut out = Vec::new();
    for axis in [SpinAxis::X, SpinAxis::Z] {
        guarded(&mut out, "theorem2", |out| {
            let rep = theorem2_check(&lat, &inst.couplings, &inst.a, &inst.b, (SpinAxis::X, axis))?;
            let p = [("axis_b", axis_param(axis))];
            let name = if axis == SpinAxis::X {
                "theorem2.same_axis"
            } else {
                "theorem2.cross_axis"
            };
            out.push(Check::sign(name, &p, rep.direct, rep.margin, tol.margin));
            out.push(Check::residual(
                "theorem2.route_agreement",
                &p,
                rep.decomposition,
                rep.route_residual,
                tol.route,
            ));
            for (beta, v) in rep.finite_beta {
                out.push(Check::diagnostic(
                    "theorem2.finite_beta",
                    &[("beta", beta), ("axis_b", axis_param(axis))],
                    v,
                ));
            }
            Ok(())
        })?;
    }
    Ok(out)
}

fn volume(inst: &Instance, st: &CheckSettings) -> Result<Vec<Check>> {
    let v = inst
        .volume
        .as_ref()
        .ok_or_else(|| Error::invalid("instance", "volume-limits instances need volume data"))?;
    let tol = st.tolerances;
    let lat = inst.lattice()?;
    let geom = BoundaryGeometry::new(lat, &v.inner, v.range)?;
    let cs = &inst.couplings;
    let mut out = Vec::new();

    let table = eta_limit_check(&geom, cs, &inst.a, SpinAxis::X, &st.eta_grid)?;
    let size = table.volume_size as f64;
    let mut prev: Option<f64> = None;
    let mut worst_step = f64::INFINITY;
    for row in &table.rows {
        out.push(Check::diagnostic(
            "volume.eta_value",
            &[("eta", row.eta), ("volume_size", size)],
            row.value,
        ));
        if let Some(p) = prev {
            worst_step = worst_step.min(p - row.deviation);
        }
        prev = Some(row.deviation);
    }
    let top = table.top_deviation();
    out.push(Check::residual(
        "volume.eta_limit_top",
        &[("eta", table.rows.last().map_or(0.0, |r| r.eta))],
        table.limit,
        top,
        tol.eta_limit,
    ));
    if worst_step.is_finite() {
        out.push(Check::sign(
            "volume.eta_limit_decreasing",
            &[],
            worst_step,
            worst_step,
            tol.margin,
        ));
    }

    let free = free_boundary_expectation(&geom, cs, &inst.a)?;
    out.push(Check::sign(
        "volume.plus_above_free",
        &[],
        table.limit,
        table.limit - free,
        tol.margin,
    ));

    let template = CouplingTemplate::nearest_neighbour_chain(cs.axis_pair(), v.chain_j1, v.chain_j2);
    let first = Region::interval(0, v.chain_lengths[0]);
    let wider = Region::interval(0, v.chain_lengths[0] + 1);
    let rep = nested_limit_consistency(
        &first,
        &wider,
        v.chain_range,
        &template,
        &v.chain_a,
        SpinAxis::X,
        st.nested_eta,
    )?;
    out.push(Check::residual(
        "volume.nested_limit",
        &[],
        rep.nested_limit_value,
        rep.limit_residual(),
        tol.exact,
    ));
    out.push(Check::diagnostic(
        "volume.nested_eta_deviation",
        &[("eta", rep.nested_eta)],
        rep.eta_deviation(),
    ));

    let seq = VolumeSequence::chain(&v.chain_lengths, v.chain_range, template)?;
    for axis in [SpinAxis::X, cs.axis_pair().transverse()] {
        let table = volume_monotonicity(&seq, &v.chain_a, axis)?;
        let bound = 0.5_f64.powi(v.chain_a.len() as i32);
        for row in &table.rows {
            let p = [
                ("axis_b", axis_param(axis)),
                ("n", row.n as f64),
                ("volume_size", row.volume_size as f64),
            ];
            out.push(Check::sign(
                "volume.bound",
                &p,
                row.value,
                bound - row.value.abs(),
                tol.exact,
            ));
            if let Some(m) = row.step_margin {
                out.push(Check::sign("volume.monotone", &p, row.value, m, tol.margin));
            }
        }
    }
    Ok(out)
}

/// `⟨∏_A S^1⟩` at `β = 1` with only the couplings inside `Λ`.
fn free_boundary_expectation(geom: &BoundaryGeometry, cs: &CouplingSet, a: &SiteSet) -> Result<f64> {
    let inner = geom.inner();
    let h = build_hamiltonian(inner, &cs.restricted_to(&inner.site_set()), Spin::Half)?;
    let obs = subset_product(inner, a, SpinAxis::X, Spin::Half)?;
    GibbsState::new(&h, 1.0)?.expectation_real(&obs)
}
