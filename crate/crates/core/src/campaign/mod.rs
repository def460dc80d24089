//! Seeded randomized verification campaigns: configuration, instance
//! generation, per-mode checks and the JSON/CSV report.

mod checks;
mod config;
mod generate;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checks::{run_checks, Check, CheckKind};
pub use config::{
    default_beta_grid, default_epsilons, default_eta_grid, default_s_grid, parse_config, CampaignConfig, CheckSettings,
    ExplicitInstance, GeneratorSpec, Mode, Outputs, Tolerances, VolumeSpec,
};
pub use generate::{explicit_instance, generate_instance, trial_rng, Instance, VolumeInstance};

use crate::error::{Error, Result};
use crate::volume::fmt_f64;

/// Outcome of every check of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub mode: Mode,
    pub trial: usize,
    pub seed: u64,
    pub instance: Instance,
    pub settings: CheckSettings,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

impl InstanceRecord {
    fn from_checks(
        instance: Instance,
        settings: CheckSettings,
        outcome: Result<Vec<Check>>,
        wall_time_ms: f64,
    ) -> Self {
        let (checks, error) = match outcome {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let counted = || {
            checks
                .iter()
                .filter(|c| matches!(c.kind, CheckKind::Sign | CheckKind::Strict))
        };
        let min_margin = counted().filter_map(|c| c.margin).reduce(f64::min);
        let max_residual = checks
            .iter()
            .filter(|c| c.kind == CheckKind::Residual)
            .filter_map(|c| c.residual)
            .reduce(f64::max);
        Self {
            mode: instance.mode,
            trial: instance.trial,
            seed: instance.seed,
            pass: error.is_none() && checks.iter().all(|c| c.pass),
            instance,
            settings,
            checks,
            min_margin,
            max_residual,
            error,
            wall_time_ms,
        }
    }

    /// The failing checks, if any.
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Records agree on everything except wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            r.wall_time_ms = 0.0;
            serde_json::to_string(&r).expect("records serialize")
        };
        strip(self) == strip(other)
    }
}

/// Evaluates one instance and times it.
pub fn evaluate(instance: Instance, settings: &CheckSettings) -> InstanceRecord {
    let start = Instant::now();
    let outcome = run_checks(&instance, settings);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    InstanceRecord::from_checks(instance, settings.clone(), outcome, ms)
}

/// Re-runs a record from its stored instance and settings.
pub fn replay(record: &InstanceRecord) -> InstanceRecord {
    evaluate(record.instance.clone(), &record.settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped_checks: usize,
    pub min_margin: Option<f64>,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped_checks: usize,
    pub min_margin: Option<f64>,
    pub max_residual: Option<f64>,
    pub by_mode: Vec<ModeSummary>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub summary: Summary,
    pub instances: Vec<InstanceRecord>,
}

fn fold_min(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().reduce(f64::min)
}

fn fold_max(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().reduce(f64::max)
}

fn mode_summary(mode: Mode, records: &[&InstanceRecord]) -> ModeSummary {
    let passed = records.iter().filter(|r| r.pass).count();
    ModeSummary {
        mode,
        instances: records.len(),
        passed,
        failed: records.len() - passed,
        skipped_checks: records
            .iter()
            .flat_map(|r| &r.checks)
            .filter(|c| c.kind == CheckKind::Skipped)
            .count(),
        min_margin: fold_min(records.iter().map(|r| r.min_margin)),
        max_residual: fold_max(records.iter().map(|r| r.max_residual)),
    }
}

impl VerificationReport {
    /// Sorts records by mode and trial and recomputes the summary, so the
    /// result is independent of execution order.
    pub fn assemble(
        mode: Mode,
        seed: u64,
        trials: usize,
        mut instances: Vec<InstanceRecord>,
        wall_time_ms: f64,
    ) -> Self {
        instances.sort_by_key(|r| (r.mode, r.trial));
        let modes = mode.expand();
        let by_mode: Vec<ModeSummary> = modes
            .iter()
            .map(|&m| {
                let rs: Vec<&InstanceRecord> = instances.iter().filter(|r| r.mode == m).collect();
                mode_summary(m, &rs)
            })
            .collect();
        let all: Vec<&InstanceRecord> = instances.iter().collect();
        let total = mode_summary(mode, &all);
        Self {
            summary: Summary {
                mode,
                seed,
                trials,
                instances: total.instances,
                passed: total.passed,
                failed: total.failed,
                skipped_checks: total.skipped_checks,
                min_margin: total.min_margin,
                max_residual: total.max_residual,
                by_mode,
                wall_time_ms,
            },
            instances,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// 0 when every instance passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn failed_records(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.instances.iter().filter(|r| !r.pass)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_json(file)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }

    /// One row per check; sweep parameters get their own columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["mode", "trial", "check", "kind"];
        header.extend(CSV_PARAMS);
        header.extend(["value", "margin", "residual", "tolerance", "pass"]);
        w.write_record(&header)?;
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for r in &self.instances {
            for c in &r.checks {
                let mut row = vec![
                    r.mode.to_string(),
                    r.trial.to_string(),
                    c.name.clone(),
                    serde_json::to_value(c.kind)?.as_str().unwrap_or_default().to_string(),
                ];
                row.extend(CSV_PARAMS.iter().map(|k| opt(c.params.get(*k).copied())));
                row.extend([
                    fmt_f64(c.value),
                    opt(c.margin),
                    opt(c.residual),
                    fmt_f64(c.tolerance),
                    c.pass.to_string(),
                ]);
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

const CSV_PARAMS: [&str; 8] = ["beta", "s", "eta", "n", "volume_size", "axis_b", "epsilon", "target"];

/// Instances a campaign evaluates, in (mode, trial) order.
pub fn campaign_instances(cfg: &CampaignConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for mode in cfg.mode.expand() {
        match (&cfg.instance, mode) {
            (Some(_), Mode::VolumeLimits) => {
                return Err(Error::Config {
                    path: "instance".into(),
                    reason: "volume-limits draws its own geometries; remove `instance`".into(),
                })
            }
            (Some(inst), _) => out.push(explicit_instance(cfg, inst, mode)?),
            (None, _) => {
                for t in 0..cfg.trials {
                    out.push(generate_instance(cfg, mode, t)?);
                }
            }
        }
    }
    Ok(out)
}

/// Runs the whole campaign on `jobs` worker threads (all cores when `None`).
pub fn run_campaign(cfg: &CampaignConfig, jobs: Option<usize>) -> Result<VerificationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let instances = campaign_instances(cfg)?;
    let settings = cfg.settings();
    let work = || -> Vec<InstanceRecord> {
        instances
            .into_par_iter()
            .map(|inst| evaluate(inst, &settings))
            .collect()
    };
    let records = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(VerificationReport::assemble(
        cfg.mode,
        cfg.seed,
        cfg.trials,
        records,
        start.elapsed().as_secs_f64() * 1e3,
    ))
}

/// Searches seeded `theorem1` instances carrying one negative coupling for a
/// sign violation, showing the nonnegativity hypothesis cannot be dropped.
pub fn search_hypothesis_violation(seed: u64, sites: usize, max_tries: usize) -> Result<Option<InstanceRecord>> {
    let mut cfg = CampaignConfig::new(Mode::Theorem1);
    cfg.seed = seed;
    cfg.sites = sites;
    cfg.allow_violating_hypotheses = true;
    cfg.generator.negative_couplings = 1;
    cfg.validate()?;
    let settings = cfg.settings();
    for t in 0..max_tries {
        let rec = evaluate(generate_instance(&cfg, Mode::Theorem1, t)?, &settings);
        if !rec.pass && rec.error.is_none() {
            return Ok(Some(rec));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode, trials: usize) -> CampaignConfig {
        let mut c = CampaignConfig::new(mode);
        c.sites = 3;
        c.trials = trials;
        c.seed = 5;
        c
    }

    #[test]
    fn theorem1_campaign_passes() {
        let rep = run_campaign(&small(Mode::Theorem1, 20), Some(2)).unwrap();
        assert!(rep.all_passed(), "{:?}", rep.failed_records().next());
        assert_eq!(rep.summary.instances, 20);
        assert!(rep.summary.min_margin.unwrap() >= -1e-9);
    }

    #[test]
    fn parallel_and_serial_reports_agree() {
        let cfg = small(Mode::Corollary, 6);
        let a = run_campaign(&cfg, Some(1)).unwrap();
        let b = run_campaign(&cfg, Some(4)).unwrap();
        assert_eq!(a.instances.len(), b.instances.len());
        for (x, y) in a.instances.iter().zip(&b.instances) {
            assert!(x.same_outcome(y));
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let rep = run_campaign(&small(Mode::DoublingLemmas, 3), Some(2)).unwrap();
        for r in &rep.instances {
            assert!(replay(r).same_outcome(r));
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let rep = run_campaign(&small(Mode::Theorem2, 2), None).unwrap();
        let mut buf = Vec::new();
        rep.write_json(&mut buf).unwrap();
        let back: VerificationReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.instances.len(), rep.instances.len());
        for (x, y) in back.instances.iter().zip(&rep.instances) {
            assert!(x.same_outcome(y));
        }
    }

    #[test]
    fn csv_rows_cover_every_check() {
        let rep = run_campaign(&small(Mode::Theorem1, 2), None).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let checks: usize = rep.instances.iter().map(|r| r.checks.len()).sum();
        assert_eq!(text.lines().count(), checks + 1);
        assert!(text.starts_with("mode,trial,check,kind,beta,s,eta"));
    }

    #[test]
    fn negative_coupling_search_finds_a_violation() {
        let rec = search_hypothesis_violation(1, 3, 200).unwrap().expect("a violation");
        assert!(rec.instance.couplings.iter().any(|c| c.strength < 0.0));
        assert!(rec.failures().next().is_some());
        assert!(replay(&rec).same_outcome(&rec));
    }
}
