use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{AxisPair, Coupling};
use crate::spin::{dim_cap, saturating_pow, Spin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theorem1,
    Corollary,
    DoublingLemmas,
    Spin1,
    Theorem2,
    VolumeLimits,
    All,
}

impl Mode {
    /// The concrete modes a campaign runs, in report order.
    pub fn expand(self) -> Vec<Mode> {
        match self {
            Mode::All => vec![
                Mode::Theorem1,
                Mode::Corollary,
                Mode::DoublingLemmas,
                Mode::Spin1,
                Mode::Theorem2,
                Mode::VolumeLimits,
            ],
            m => vec![m],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Theorem1 => "theorem1",
            Mode::Corollary => "corollary",
            Mode::DoublingLemmas => "doubling-lemmas",
            Mode::Spin1 => "spin1",
            Mode::Theorem2 => "theorem2",
            Mode::VolumeLimits => "volume-limits",
            Mode::All => "all",
        }
    }

    pub fn spin(self) -> Spin {
        match self {
            Mode::Spin1 | Mode::Theorem2 => Spin::One,
            _ => Spin::Half,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| Error::Config {
            path: "mode".into(),
            reason: format!("unknown mode `{s}`"),
        })
    }
}

/// Random-instance generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub max_subset_size: usize,
    pub max_couplings: usize,
    pub j_min: f64,
    pub j_max: f64,
    pub axis_pair: AxisPair,
    /// Site cap for the spin-1 modes, whose extended space has dimension `4^n`.
    pub max_sites_spin1: usize,
    /// Number of couplings per instance made negative; needs the hypothesis override.
    pub negative_couplings: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            max_subset_size: 3,
            max_couplings: 6,
            j_min: 0.0,
            j_max: 2.0,
            axis_pair: AxisPair::XY,
            max_sites_spin1: 3,
            negative_couplings: 0,
        }
    }
}

/// A fixed instance replacing the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInstance {
    pub sites: Vec<String>,
    #[serde(default = "default_axis_pair")]
    pub axis_pair: AxisPair,
    pub couplings: Vec<Coupling>,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

fn default_axis_pair() -> AxisPair {
    AxisPair::XY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeSpec {
    /// Interval lengths of the nested chain sequence.
    pub lengths: Vec<usize>,
    pub range: usize,
    /// Largest `|Λ_R|` of the random range-1 instances used for the η limit.
    pub max_enlarged_sites: usize,
    /// Field strength of the nested-volume consistency diagnostic.
    pub nested_eta: f64,
}

impl Default for VolumeSpec {
    fn default() -> Self {
        Self {
            lengths: vec![2, 4, 6],
            range: 1,
            max_enlarged_sites: 8,
            nested_eta: 64.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Sign margins of correlation inequalities and volume steps.
    pub margin: f64,
    pub duhamel_abs: f64,
    pub duhamel_rel: f64,
    pub derivative_sign: f64,
    pub truncation_identity: f64,
    pub exact: f64,
    pub newgibbs: f64,
    pub triplet: f64,
    pub route: f64,
    pub eta_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            margin: 1e-9,
            duhamel_abs: 1e-6,
            duhamel_rel: 1e-4,
            derivative_sign: 1e-8,
            truncation_identity: 1e-9,
            exact: 1e-12,
            newgibbs: 1e-9,
            triplet: 1e-9,
            route: 1e-8,
            eta_limit: 1e-6,
        }
    }
}

impl Tolerances {
    fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("margin", self.margin),
            ("duhamel_abs", self.duhamel_abs),
            ("duhamel_rel", self.duhamel_rel),
            ("derivative_sign", self.derivative_sign),
            ("truncation_identity", self.truncation_identity),
            ("exact", self.exact),
            ("newgibbs", self.newgibbs),
            ("triplet", self.triplet),
            ("route", self.route),
            ("eta_limit", self.eta_limit),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Everything a check needs besides the instance itself; stored in every
/// record so a single instance can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSettings {
    pub beta_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub nested_eta: f64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub mode: Mode,
    /// Largest lattice drawn by the generator.
    #[serde(default = "default_sites")]
    pub sites: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub instance: Option<ExplicitInstance>,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Vec<f64>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub volume: VolumeSpec,
    /// Shorthand for `tolerances.margin`.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub dim_cap: Option<usize>,
    #[serde(default)]
    pub allow_violating_hypotheses: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_sites() -> usize {
    3
}
fn default_trials() -> usize {
    1
}
pub fn default_beta_grid() -> Vec<f64> {
    vec![0.5, 1.0, 4.0]
}
pub fn default_s_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
pub fn default_eta_grid() -> Vec<f64> {
    crate::volume::default_eta_grid()
}
pub fn default_epsilons() -> Vec<f64> {
    vec![1e-3, 0.1]
}

fn config_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl CampaignConfig {
    /// A config for `mode` with every other field at its default.
    pub fn new(mode: Mode) -> Self {
        serde_json::from_value(serde_json::json!({ "mode": mode })).expect("defaults deserialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        Ok(cfg)
    }

    pub fn effective_tolerances(&self) -> Tolerances {
        let mut t = self.tolerances;
        if let Some(m) = self.tol {
            t.margin = m;
        }
        t
    }

    pub fn settings(&self) -> CheckSettings {
        CheckSettings {
            beta_grid: self.beta_grid.clone(),
            s_grid: self.s_grid.clone(),
            eta_grid: self.eta_grid.clone(),
            epsilons: self.epsilons.clone(),
            nested_eta: self.volume.nested_eta,
            tolerances: self.effective_tolerances(),
        }
    }

    pub fn effective_dim_cap(&self) -> usize {
        self.dim_cap.unwrap_or_else(dim_cap)
    }

    /// Largest Hilbert-space dimension any check of `mode` may build.
    pub fn required_dim(&self, mode: Mode) -> usize {
        let n = self.instance.as_ref().map_or(self.sites, |i| i.sites.len());
        match mode {
            Mode::Theorem1 | Mode::Corollary => saturating_pow(2, n),
            Mode::DoublingLemmas => saturating_pow(4, n),
            Mode::Spin1 | Mode::Theorem2 => {
                let n1 = if self.instance.is_some() {
                    n
                } else {
                    n.min(self.generator.max_sites_spin1)
                };
                saturating_pow(4, n1)
            }
            Mode::VolumeLimits => {
                let longest = self.volume.lengths.iter().copied().max().unwrap_or(0);
                let chain = saturating_pow(2, longest + 2 * self.volume.range);
                chain.max(saturating_pow(2, self.volume.max_enlarged_sites))
            }
            Mode::All => Mode::All
                .expand()
                .into_iter()
                .map(|m| self.required_dim(m))
                .max()
                .unwrap_or(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.sites == 0 {
            return Err(config_err("sites", "must be at least 1"));
        }
        for (k, &b) in self.beta_grid.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                return Err(config_err(
                    format!("beta_grid[{k}]"),
                    format!("beta must be positive and finite, got {b}"),
                ));
            }
        }
        if self.beta_grid.is_empty() {
            return Err(config_err("beta_grid", "must be nonempty"));
        }
        for (k, &s) in self.s_grid.iter().enumerate() {
            if !(0.0..=1.0).contains(&s) {
                return Err(config_err(
                    format!("s_grid[{k}]"),
                    format!("s must lie in [0, 1], got {s}"),
                ));
            }
        }
        if self.s_grid.is_empty() {
            return Err(config_err("s_grid", "must be nonempty"));
        }
        if self.eta_grid.is_empty() || self.eta_grid.windows(2).any(|w| w[1] <= w[0]) || self.eta_grid[0] < 0.0 {
            return Err(config_err(
                "eta_grid",
                "must be nonempty, nonnegative and strictly ascending",
            ));
        }
        for (k, &e) in self.epsilons.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(config_err(
                    format!("epsilons[{k}]"),
                    format!("must be positive, got {e}"),
                ));
            }
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(config_err("tol", format!("must be positive, got {t}")));
            }
        }
        for (name, v) in self.tolerances.fields() {
            if v.is_nan() || v <= 0.0 {
                return Err(config_err(
                    format!("tolerances.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        self.validate_generator()?;
        if let Some(inst) = &self.instance {
            self.validate_instance(inst)?;
        }
        if self.volume.lengths.is_empty()
            || self.volume.lengths.windows(2).any(|w| w[1] <= w[0])
            || self.volume.lengths[0] == 0
        {
            return Err(config_err(
                "volume.lengths",
                "must be nonempty, positive and strictly increasing",
            ));
        }
        if self.volume.range == 0 {
            return Err(config_err("volume.range", "must be at least 1"));
        }
        if self.volume.max_enlarged_sites < 3 {
            return Err(config_err("volume.max_enlarged_sites", "must be at least 3"));
        }
        if self.volume.nested_eta.is_nan() || self.volume.nested_eta < 0.0 {
            return Err(config_err("volume.nested_eta", "must be nonnegative"));
        }
        let cap = self.effective_dim_cap();
        let dim = self.required_dim(self.mode);
        if dim > cap {
            return Err(config_err(
                if self.instance.is_some() {
                    "instance.sites"
                } else {
                    "sites"
                },
                format!(
                    "mode {} needs Hilbert-space dimension {dim}, above the cap {cap}",
                    self.mode
                ),
            ));
        }
        Ok(())
    }

    fn validate_generator(&self) -> Result<()> {
        let g = &self.generator;
        if g.max_subset_size == 0 {
            return Err(config_err("generator.max_subset_size", "must be at least 1"));
        }
        if g.max_couplings == 0 {
            return Err(config_err("generator.max_couplings", "must be at least 1"));
        }
        if g.max_sites_spin1 == 0 {
            return Err(config_err("generator.max_sites_spin1", "must be at least 1"));
        }
        if !(g.j_min.is_finite() && g.j_max.is_finite() && g.j_min <= g.j_max) {
            return Err(config_err(
                "generator.j_max",
                "strength bounds must be finite with j_min <= j_max",
            ));
        }
        if !self.allow_violating_hypotheses {
            if g.j_min < 0.0 {
                return Err(config_err(
                    "generator.j_min",
                    format!("{} is negative; couplings must be nonnegative (ferromagnetic)", g.j_min),
                ));
            }
            if g.negative_couplings > 0 {
                return Err(config_err(
                    "generator.negative_couplings",
                    "negative couplings violate the nonnegativity assumption",
                ));
            }
        }
        if g.negative_couplings > g.max_couplings {
            return Err(config_err(
                "generator.negative_couplings",
                "cannot exceed max_couplings",
            ));
        }
        Ok(())
    }

    fn validate_instance(&self, inst: &ExplicitInstance) -> Result<()> {
        if inst.sites.is_empty() {
            return Err(config_err("instance.sites", "must be nonempty"));
        }
        let known = |s: &String| inst.sites.contains(s);
        for (k, c) in inst.couplings.iter().enumerate() {
            let path = format!("instance.couplings[{k}]");
            if c.subset.is_empty() {
                return Err(config_err(format!("{path}.subset"), "must be nonempty"));
            }
            if let Some(s) = c.subset.iter().find(|s| !known(s)) {
                return Err(config_err(format!("{path}.subset"), format!("unknown site `{s}`")));
            }
            if !inst.axis_pair.contains(c.axis) {
                return Err(config_err(
                    format!("{path}.axis"),
                    format!("axis {} is outside the pair {}", c.axis, inst.axis_pair),
                ));
            }
            if !c.strength.is_finite() {
                return Err(config_err(format!("{path}.strength"), "must be finite"));
            }
            if c.strength < 0.0 && !self.allow_violating_hypotheses {
                let subset: Vec<&str> = c.subset.iter().map(String::as_str).collect();
                return Err(config_err(
                    format!("{path}.strength"),
                    format!(
                        "coupling J^{}_{{{}}} = {} is negative; couplings must be nonnegative (ferromagnetic)",
                        c.axis,
                        subset.join(","),
                        c.strength
                    ),
                ));
            }
        }
        for (name, set) in [("a", &inst.a), ("b", &inst.b)] {
            if let Some(s) = set.iter().find(|s| !known(s)) {
                return Err(config_err(format!("instance.{name}"), format!("unknown site `{s}`")));
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let cfg = CampaignConfig::from_json_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}
