//! `+` boundary conditions, the `η → ∞` limit and volume monotonicity on
//! finite regions of `Z` and `Z²`.
//!
//! Sites are integer grid points labelled `"i"` or `"i,j"`. The range-`R`
//! enlargement of a region uses the ℓ1 (graph) distance, and couplings are
//! stamped from a translation-invariant template onto the enlarged region.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::GibbsState;
use crate::hamiltonian::{
    build_boundary_hamiltonian, build_plus_hamiltonian, AxisPair, BoundaryGeometry, Coupling, CouplingSet,
};
use crate::spin::{subset_product, Lattice, SiteSet, Spin, SpinAxis};

/// Tolerance on each monotone step.
pub const STEP_TOL: f64 = 1e-9;

/// Largest admissible deviation from the limit at the top of an η grid.
pub const ETA_LIMIT_TOL: f64 = 1e-6;

/// Slack allowed on the operator-norm bound `2^{-|A|}`.
pub const BOUND_SLACK: f64 = 1e-12;

/// A point of `Z` or `Z²`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint(pub Vec<i64>);

impl GridPoint {
    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn parse(label: &str) -> Result<Self> {
        let coords = label
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::UnknownSite(label.to_string()))?;
        if coords.is_empty() || coords.len() > 2 {
            return Err(Error::UnknownSite(label.to_string()));
        }
        Ok(Self(coords))
    }

    pub fn l1(&self, other: &Self) -> u64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    pub fn shifted(&self, by: &[i64]) -> Self {
        Self(self.0.iter().zip(by).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// A finite set of grid points of a single dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    points: BTreeSet<GridPoint>,
}

impl Region {
    pub fn new(points: impl IntoIterator<Item = GridPoint>) -> Result<Self> {
        let points: BTreeSet<GridPoint> = points.into_iter().collect();
        let mut dims = points.iter().map(GridPoint::dims);
        if let Some(d) = dims.next() {
            if !(1..=2).contains(&d) || dims.any(|e| e != d) {
                return Err(Error::invalid("region", "points must all lie in Z or all in Z^2"));
            }
        }
        Ok(Self { points })
    }

    /// `{start, …, start+len-1}` in `Z`.
    pub fn interval(start: i64, len: usize) -> Self {
        Self {
            points: (0..len as i64).map(|k| GridPoint(vec![start + k])).collect(),
        }
    }

    /// `[x0, x0+w) × [y0, y0+h)` in `Z²`.
    pub fn rectangle(origin: (i64, i64), width: usize, height: usize) -> Self {
        let mut points = BTreeSet::new();
        for i in 0..width as i64 {
            for j in 0..height as i64 {
                points.insert(GridPoint(vec![origin.0 + i, origin.1 + j]));
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &BTreeSet<GridPoint> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> Option<usize> {
        self.points.iter().next().map(GridPoint::dims)
    }

    pub fn contains(&self, p: &GridPoint) -> bool {
        self.points.contains(p)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.points.is_subset(&other.points)
    }

    pub fn labels(&self) -> SiteSet {
        self.points.iter().map(GridPoint::label).collect()
    }

    /// All points within ℓ1 distance `range` of the region.
    pub fn enlarged(&self, range: usize) -> Self {
        let r = range as i64;
        let mut points = self.points.clone();
        for p in &self.points {
            match p.dims() {
                1 => {
                    for d in -r..=r {
                        points.insert(p.shifted(&[d]));
                    }
                }
                _ => {
                    for dx in -r..=r {
                        let rest = r - dx.abs();
                        for dy in -rest..=rest {
                            points.insert(p.shifted(&[dx, dy]));
                        }
                    }
                }
            }
        }
        Self { points }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.points.iter().map(GridPoint::label), Spin::Half)
    }
}

/// One term of a coupling template: offsets relative to an anchor point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateTerm {
    pub offsets: Vec<Vec<i64>>,
    pub axis: SpinAxis,
    pub strength: f64,
}

impl TemplateTerm {
    fn normalized(&self) -> Vec<Vec<i64>> {
        let mut offs = self.offsets.clone();
        offs.sort();
        offs.dedup();
        let base = offs[0].clone();
        offs.iter()
            .map(|o| o.iter().zip(&base).map(|(a, b)| a - b).collect())
            .collect()
    }

    fn diameter(&self) -> u64 {
        let pts: Vec<GridPoint> = self.offsets.iter().cloned().map(GridPoint).collect();
        pts.iter()
            .flat_map(|a| pts.iter().map(move |b| a.l1(b)))
            .max()
            .unwrap_or(0)
    }
}

/// Translation-invariant finite-range interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTemplate {
    pub axis_pair: AxisPair,
    pub terms: Vec<TemplateTerm>,
}

impl CouplingTemplate {
    /// Nearest-neighbour chain with `J¹ = j1` and transverse `J = j2` on every bond.
    pub fn nearest_neighbour_chain(axis_pair: AxisPair, j1: f64, j2: f64) -> Self {
        let bond = vec![vec![0], vec![1]];
        Self {
            axis_pair,
            terms: vec![
                TemplateTerm {
                    offsets: bond.clone(),
                    axis: SpinAxis::X,
                    strength: j1,
                },
                TemplateTerm {
                    offsets: bond,
                    axis: axis_pair.transverse(),
                    strength: j2,
                },
            ],
        }
    }

    pub fn validate(&self, dims: usize, range: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.terms {
            if t.offsets.is_empty() {
                return Err(Error::EmptyCouplingSubset);
            }
            if t.offsets.iter().any(|o| o.len() != dims) {
                return Err(Error::invalid(
                    "template",
                    format!("offsets must have {dims} coordinates"),
                ));
            }
            if t.diameter() > range as u64 {
                return Err(Error::invalid(
                    "template",
                    format!("term {:?} has diameter {} > range {range}", t.offsets, t.diameter()),
                ));
            }
            if !self.axis_pair.contains(t.axis) {
                return Err(Error::AxisOutsidePair {
                    axis: t.axis.index(),
                    pair: self.axis_pair.to_string(),
                });
            }
            if !seen.insert((t.normalized(), t.axis.index())) {
                return Err(Error::invalid(
                    "template",
                    format!(
                        "term {:?} on axis {} repeats a translate of another term",
                        t.offsets, t.axis
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Every translate of every term lying entirely inside `region`.
    pub fn stamp(&self, region: &Region) -> Result<CouplingSet> {
        let mut cs = CouplingSet::empty(self.axis_pair);
        for t in &self.terms {
            let shape = t.normalized();
            for anchor in region.points() {
                let pts: Vec<GridPoint> = shape.iter().map(|o| anchor.shifted(o)).collect();
                if pts.iter().all(|p| region.contains(p)) && t.strength != 0.0 {
                    cs.push(Coupling::new(pts.iter().map(GridPoint::label), t.axis, t.strength))?;
                }
            }
        }
        Ok(cs)
    }
}

/// `Λ ⊂ Λ_R` as a [`BoundaryGeometry`] together with the stamped couplings on `Λ_R`.
pub fn stamped_geometry(
    region: &Region,
    range: usize,
    template: &CouplingTemplate,
) -> Result<(BoundaryGeometry, CouplingSet)> {
    let enlarged = region.enlarged(range);
    let geom = BoundaryGeometry::new(enlarged.lattice()?, &region.labels(), range)?;
    let cs = template.stamp(&enlarged)?;
    Ok((geom, cs))
}

/// Strictly nested regions `Λ₁ ⊂ Λ₂ ⊂ …` sharing a range and a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSequence {
    volumes: Vec<Region>,
    range: usize,
    template: CouplingTemplate,
}

impl VolumeSequence {
    pub fn new(volumes: Vec<Region>, range: usize, template: CouplingTemplate) -> Result<Self> {
        let first = volumes
            .first()
            .ok_or_else(|| Error::invalid("volumes", "sequence is empty"))?;
        let dims = first
            .dims()
            .ok_or_else(|| Error::invalid("volumes", "first region is empty"))?;
        for (k, pair) in volumes.windows(2).enumerate() {
            if pair[1].dims() != Some(dims) || !pair[0].is_subset(&pair[1]) || pair[0].len() == pair[1].len() {
                return Err(Error::NotNested(k + 1));
            }
        }
        template.validate(dims, range)?;
        Ok(Self {
            volumes,
            range,
            template,
        })
    }

    /// Intervals of the given increasing lengths, grown symmetrically around the first.
    pub fn chain(lengths: &[usize], range: usize, template: CouplingTemplate) -> Result<Self> {
        let l0 = lengths.first().copied().unwrap_or(0) as i64;
        let volumes = lengths
            .iter()
            .map(|&l| Region::interval(-((l as i64 - l0) / 2), l))
            .collect();
        Self::new(volumes, range, template)
    }

    pub fn volumes(&self) -> &[Region] {
        &self.volumes
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn template(&self) -> &CouplingTemplate {
        &self.template
    }
}

fn check_bound(value: f64, a: &SiteSet) -> Result<f64> {
    let bound = 0.5_f64.powi(a.len() as i32);
    if value.abs() > bound + BOUND_SLACK {
        Err(Error::BoundViolated { value, bound })
    } else {
        Ok(value)
    }
}

fn require_subset(a: &SiteSet, lat: &Lattice) -> Result<()> {
    match a.iter().find(|s| !lat.contains(s)) {
        Some(s) => Err(Error::UnknownSite(s.clone())),
        None => Ok(()),
    }
}

/// `⟨∏_{x∈A} S^axis_x⟩^{(+)}_Λ` at `β = 1`.
pub fn plus_state_expectation(geom: &BoundaryGeometry, cs: &CouplingSet, a: &SiteSet, axis: SpinAxis) -> Result<f64> {
    require_subset(a, geom.inner())?;
    let h = build_plus_hamiltonian(geom, cs)?;
    let obs = subset_product(geom.inner(), a, axis, Spin::Half)?;
    check_bound(GibbsState::new(&h, 1.0)?.expectation_real(&obs)?, a)
}

/// `⟨∏_{x∈A} S^axis_x⟩` under `H^η` on `ℋ_{Λ_R}` at `β = 1`.
pub fn finite_eta_expectation(
    geom: &BoundaryGeometry,
    cs: &CouplingSet,
    a: &SiteSet,
    axis: SpinAxis,
    eta: f64,
) -> Result<f64> {
    require_subset(a, geom.inner())?;
    let h = build_boundary_hamiltonian(geom, cs, eta)?;
    let obs = subset_product(geom.enlarged(), a, axis, Spin::Half)?;
    check_bound(GibbsState::new(&h, 1.0)?.expectation_real(&obs)?, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta: f64,
    pub value: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    pub volume_size: usize,
    pub limit: f64,
    pub rows: Vec<EtaRow>,
}

impl EtaTable {
    /// Deviations never increase along the grid beyond round-off.
    pub fn is_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].deviation <= w[0].deviation + 1e-14)
    }

    pub fn top_deviation(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.deviation)
    }

    pub fn passes(&self) -> bool {
        self.is_decreasing() && self.top_deviation() <= ETA_LIMIT_TOL
    }

    /// Columns: volume size, η, value, step margin (decrease of the deviation).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["volume_size", "eta", "value", "step_margin"])?;
        let mut prev: Option<f64> = None;
        for r in &self.rows {
            let margin = prev.map(|p| p - r.deviation);
            w.write_record([
                self.volume_size.to_string(),
                fmt_f64(r.eta),
                fmt_f64(r.value),
                margin.map(fmt_f64).unwrap_or_default(),
            ])?;
            prev = Some(r.deviation);
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn eta_limit_check(
    geom: &BoundaryGeometry,
    cs: &CouplingSet,
    a: &SiteSet,
    axis: SpinAxis,
    eta_grid: &[f64],
) -> Result<EtaTable> {
    if eta_grid.is_empty() || eta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("eta_grid", "must be nonempty and strictly ascending"));
    }
    let limit = plus_state_expectation(geom, cs, a, axis)?;
    let rows = eta_grid
        .iter()
        .map(|&eta| {
            let value = finite_eta_expectation(geom, cs, a, axis, eta)?;
            Ok(EtaRow {
                eta,
                value,
                deviation: (value - limit).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EtaTable {
        volume_size: geom.inner().len(),
        limit,
        rows,
    })
}

/// Power-of-two grid `1, 2, 4, …, 64`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=6).map(|k| f64::from(1u32 << k)).collect()
}

/// `Λ ⊂ Λ'`: the `+` state of `Λ` computed on `Λ_R`, and again with every
/// site of `Λ'_R \ Λ` treated as boundary, in the limit and at finite `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedLimitReport {
    pub plus_value: f64,
    pub nested_limit_value: f64,
    pub nested_eta: f64,
    pub nested_eta_value: f64,
}

impl NestedLimitReport {
    pub fn limit_residual(&self) -> f64 {
        (self.plus_value - self.nested_limit_value).abs()
    }

    pub fn eta_deviation(&self) -> f64 {
        (self.plus_value - self.nested_eta_value).abs()
    }
}

pub fn nested_limit_consistency(
    inner: &Region,
    outer: &Region,
    range: usize,
    template: &CouplingTemplate,
    a: &SiteSet,
    axis: SpinAxis,
    eta: f64,
) -> Result<NestedLimitReport> {
    if !inner.is_subset(outer) {
        return Err(Error::NotNested(1));
    }
    let (geom, cs) = stamped_geometry(inner, range, template)?;
    let plus_value = plus_state_expectation(&geom, &cs, a, axis)?;
    let big = outer.enlarged(range);
    let nested = BoundaryGeometry::new(big.lattice()?, &inner.labels(), range)?;
    let big_cs = template.stamp(&big)?;
    Ok(NestedLimitReport {
        plus_value,
        nested_limit_value: plus_state_expectation(&nested, &big_cs, a, axis)?,
        nested_eta: eta,
        nested_eta_value: finite_eta_expectation(&nested, &big_cs, a, axis, eta)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub n: usize,
    pub volume_size: usize,
    pub value: f64,
    /// Signed so that nonnegative means the predicted direction; absent for the first volume.
    pub step_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeTable {
    pub axis: SpinAxis,
    pub rows: Vec<VolumeRow>,
}

impl VolumeTable {
    pub fn min_margin(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.step_margin).reduce(f64::min)
    }

    pub fn passes(&self) -> bool {
        self.min_margin().is_none_or(|m| m >= -STEP_TOL)
    }

    /// Columns: volume size, n, value, step margin.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["volume_size", "n", "value", "step_margin"])?;
        for r in &self.rows {
            w.write_record([
                r.volume_size.to_string(),
                r.n.to_string(),
                fmt_f64(r.value),
                r.step_margin.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `⟨∏_{x∈A} S^axis_x⟩^{(+)}_{Λ_n}` along the sequence. Axis 1 should not
/// increase with `n`; the transverse axis should not decrease.
pub fn volume_monotonicity(seq: &VolumeSequence, a: &SiteSet, axis: SpinAxis) -> Result<VolumeTable> {
    let pair = seq.template().axis_pair;
    if !pair.contains(axis) {
        return Err(Error::AxisOutsidePair {
            axis: axis.index(),
            pair: pair.to_string(),
        });
    }
    require_subset(a, &seq.volumes()[0].lattice()?)?;
    let values = seq
        .volumes()
        .par_iter()
        .map(|region| {
            let (geom, cs) = stamped_geometry(region, seq.range(), seq.template())?;
            plus_state_expectation(&geom, &cs, a, axis)
        })
        .collect::<Result<Vec<f64>>>()?;
    let sign = if axis == SpinAxis::X { 1.0 } else { -1.0 };
    let rows = values
        .iter()
        .enumerate()
        .map(|(n, &value)| VolumeRow {
            n,
            volume_size: seq.volumes()[n].len(),
            value,
            step_margin: (n > 0).then(|| sign * (values[n - 1] - value)),
        })
        .collect();
    Ok(VolumeTable { axis, rows })
}
