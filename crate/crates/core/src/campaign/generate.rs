use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, ExplicitInstance, GeneratorSpec, Mode, VolumeSpec};
use crate::error::Result;
use crate::hamiltonian::{AxisPair, Coupling, CouplingSet};
use crate::spin::{Lattice, SiteSet, Spin, SpinAxis};
use crate::spin_one::{copy_label, Perturbation};
use crate::volume::Region;

/// Extra data for the volume-limit checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeInstance {
    /// `Λ`; the instance sites are `Λ_R`.
    pub inner: SiteSet,
    pub range: usize,
    pub chain_lengths: Vec<usize>,
    pub chain_range: usize,
    pub chain_j1: f64,
    pub chain_j2: f64,
    /// Observable support inside the smallest chain volume.
    pub chain_a: SiteSet,
}

/// A fully specified problem: enough to rerun every check of its mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub mode: Mode,
    pub trial: usize,
    pub seed: u64,
    pub spin: Spin,
    pub sites: Vec<String>,
    pub couplings: CouplingSet,
    pub a: SiteSet,
    pub b: SiteSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeInstance>,
}

impl Instance {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.sites.iter().cloned(), self.spin)
    }
}

/// Counter-based stream: the instance depends only on `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn strength(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn random_subset(rng: &mut ChaCha8Rng, sites: &[String], max_size: usize) -> SiteSet {
    let k = rng.gen_range(1..=max_size.min(sites.len()).max(1));
    sample(rng, sites.len(), k)
        .into_iter()
        .map(|i| sites[i].clone())
        .collect()
}

fn random_couplings(
    rng: &mut ChaCha8Rng,
    sites: &[String],
    pair: AxisPair,
    gen: &GeneratorSpec,
) -> Result<CouplingSet> {
    let count = rng.gen_range(1..=gen.max_couplings);
    let mut couplings: Vec<Coupling> = Vec::with_capacity(count);
    for _ in 0..count {
        let subset = random_subset(rng, sites, gen.max_subset_size);
        let axis = pair.axes()[rng.gen_range(0..2)];
        let j = strength(rng, gen.j_min, gen.j_max);
        if !couplings.iter().any(|c| c.subset == subset && c.axis == axis) {
            couplings.push(Coupling {
                subset,
                axis,
                strength: j,
            });
        }
    }
    if gen.negative_couplings > 0 {
        let k = gen.negative_couplings.min(couplings.len());
        for i in sample(rng, couplings.len(), k) {
            couplings[i].strength = -strength(rng, 0.0, gen.j_max.max(gen.j_min.abs())).max(f64::MIN_POSITIVE);
        }
    }
    if couplings.iter().any(|c| c.strength < 0.0) {
        CouplingSet::new_allowing_negative(pair, couplings)
    } else {
        CouplingSet::new(pair, couplings)
    }
}

fn numbered_sites(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

/// Deterministic random instance for `mode` from `(seed, trial)`.
pub fn generate_instance(cfg: &CampaignConfig, mode: Mode, trial: usize) -> Result<Instance> {
    let gen = &cfg.generator;
    let mut rng = trial_rng(cfg.seed, trial);
    match mode {
        Mode::Spin1 | Mode::Theorem2 => spin_one_instance(&mut rng, cfg, mode, trial),
        Mode::VolumeLimits => volume_instance(&mut rng, cfg, trial),
        _ => {
            let n = rng.gen_range(1..=cfg.sites);
            let sites = numbered_sites(n);
            let couplings = random_couplings(&mut rng, &sites, gen.axis_pair, gen)?;
            let a = random_subset(&mut rng, &sites, gen.max_subset_size);
            let b = random_subset(&mut rng, &sites, gen.max_subset_size);
            Ok(Instance {
                mode,
                trial,
                seed: cfg.seed,
                spin: Spin::Half,
                sites,
                couplings,
                a,
                b,
                perturbation: None,
                volume: None,
            })
        }
    }
}

fn spin_one_instance(rng: &mut ChaCha8Rng, cfg: &CampaignConfig, mode: Mode, trial: usize) -> Result<Instance> {
    let gen = &cfg.generator;
    let n = rng.gen_range(1..=cfg.sites.min(gen.max_sites_spin1));
    let sites = numbered_sites(n);
    let mut couplings = random_couplings(rng, &sites, AxisPair::XZ, gen)?;
    // Give every site a coupling so the ground state sits in the triplet sector.
    for x in &sites {
        if !couplings.coupled_sites().contains(x) {
            let axis = AxisPair::XZ.axes()[rng.gen_range(0..2)];
            let subset: SiteSet = [x.clone()].into();
            let j = strength(rng, gen.j_min.max(0.0), gen.j_max);
            if couplings.strength(&subset, axis) == 0.0 {
                couplings = couplings.with_strength(&subset, axis, j)?;
            }
        }
    }
    let a = random_subset(rng, &sites, gen.max_subset_size);
    let b = random_subset(rng, &sites, gen.max_subset_size);
    let extended: Vec<String> = sites
        .iter()
        .flat_map(|x| [copy_label(x, 1), copy_label(x, 2)])
        .collect();
    let y = random_subset(rng, &extended, extended.len());
    let perturbation = Perturbation::SigmaProduct {
        subset: y,
        axis: AxisPair::XZ.axes()[rng.gen_range(0..2)],
    };
    Ok(Instance {
        mode,
        trial,
        seed: cfg.seed,
        spin: Spin::One,
        sites,
        couplings,
        a,
        b,
        perturbation: Some(perturbation),
        volume: None,
    })
}

fn volume_instance(rng: &mut ChaCha8Rng, cfg: &CampaignConfig, trial: usize) -> Result<Instance> {
    let gen = &cfg.generator;
    let VolumeSpec {
        lengths,
        range,
        max_enlarged_sites,
        ..
    } = &cfg.volume;
    let len = rng.gen_range(1..=max_enlarged_sites - 2);
    let inner = Region::interval(0, len);
    let enlarged = inner.enlarged(1);
    let sites: Vec<String> = enlarged.points().iter().map(|p| p.label()).collect();
    let mut couplings = Vec::new();
    for (k, x) in sites.iter().enumerate() {
        let mut shapes = vec![vec![x.clone()]];
        if let Some(y) = sites.get(k + 1) {
            shapes.push(vec![x.clone(), y.clone()]);
        }
        for shape in shapes {
            for axis in gen.axis_pair.axes() {
                if rng.gen_bool(0.7) {
                    couplings.push(Coupling::new(shape.clone(), axis, strength(rng, gen.j_min, gen.j_max)));
                }
            }
        }
    }
    let couplings = CouplingSet::new(gen.axis_pair, couplings)?;
    let inner_sites: Vec<String> = inner.points().iter().map(|p| p.label()).collect();
    let a = random_subset(rng, &inner_sites, gen.max_subset_size);
    let first: Vec<String> = Region::interval(0, lengths[0])
        .points()
        .iter()
        .map(|p| p.label())
        .collect();
    let volume = VolumeInstance {
        inner: inner.labels(),
        range: 1,
        chain_lengths: lengths.clone(),
        chain_range: *range,
        chain_j1: strength(rng, gen.j_min, gen.j_max),
        chain_j2: strength(rng, gen.j_min, gen.j_max),
        chain_a: random_subset(rng, &first, gen.max_subset_size),
    };
    Ok(Instance {
        mode: Mode::VolumeLimits,
        trial,
        seed: cfg.seed,
        spin: Spin::Half,
        sites,
        couplings,
        a,
        b: SiteSet::new(),
        perturbation: None,
        volume: Some(volume),
    })
}

/// The configured fixed instance, adapted to `mode`.
pub fn explicit_instance(cfg: &CampaignConfig, inst: &ExplicitInstance, mode: Mode) -> Result<Instance> {
    let couplings = if cfg.allow_violating_hypotheses {
        CouplingSet::new_allowing_negative(inst.axis_pair, inst.couplings.clone())?
    } else {
        CouplingSet::new(inst.axis_pair, inst.couplings.clone())?
    };
    let spin = mode.spin();
    let couplings = if spin == Spin::One {
        couplings.with_axis_pair(AxisPair::XZ)
    } else {
        couplings
    };
    Ok(Instance {
        mode,
        trial: 0,
        seed: cfg.seed,
        spin,
        sites: inst.sites.clone(),
        couplings,
        a: inst.a.iter().cloned().collect(),
        b: inst.b.iter().cloned().collect(),
        perturbation: None,
        volume: None,
    })
}

/// Axis transverse to 1 in the instance's axis pair.
pub fn transverse_axis(inst: &Instance) -> SpinAxis {
    inst.couplings.axis_pair().transverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode) -> CampaignConfig {
        let mut c = CampaignConfig::new(mode);
        c.sites = 4;
        c.seed = 11;
        c
    }

    #[test]
    fn generation_is_deterministic() {
        for mode in Mode::All.expand() {
            let c = cfg(mode);
            for t in 0..5 {
                assert_eq!(
                    generate_instance(&c, mode, t).unwrap(),
                    generate_instance(&c, mode, t).unwrap()
                );
            }
            assert_ne!(
                generate_instance(&c, mode, 0).unwrap(),
                generate_instance(&c, mode, 1).unwrap()
            );
        }
    }

    #[test]
    fn large_subsets_are_generated() {
        let c = cfg(Mode::Theorem1);
        let hit = (0..100).any(|t| {
            generate_instance(&c, Mode::Theorem1, t)
                .unwrap()
                .couplings
                .iter()
                .any(|cp| cp.subset.len() == 3)
        });
        assert!(hit);
    }

    #[test]
    fn zero_strength_bound_gives_zero_couplings() {
        let mut c = cfg(Mode::Theorem1);
        c.generator.j_max = 0.0;
        for t in 0..20 {
            let inst = generate_instance(&c, Mode::Theorem1, t).unwrap();
            assert!(inst.couplings.iter().all(|cp| cp.strength == 0.0));
        }
    }

    #[test]
    fn spin_one_instances_couple_every_site() {
        let c = cfg(Mode::Theorem2);
        for t in 0..30 {
            let inst = generate_instance(&c, Mode::Theorem2, t).unwrap();
            assert!(inst.sites.len() <= 3);
            assert_eq!(inst.couplings.axis_pair(), AxisPair::XZ);
            assert_eq!(inst.couplings.coupled_sites().len(), inst.sites.len());
        }
    }

    #[test]
    fn volume_instances_fit_the_budget() {
        let c = cfg(Mode::VolumeLimits);
        for t in 0..30 {
            let inst = generate_instance(&c, Mode::VolumeLimits, t).unwrap();
            assert!(inst.sites.len() <= 8);
            let v = inst.volume.unwrap();
            assert!(inst.a.is_subset(&v.inner));
            assert!(v.chain_a.iter().all(|s| s == "0" || s == "1"));
        }
    }

    #[test]
    fn negative_couplings_are_injected() {
        let mut c = cfg(Mode::Theorem1);
        c.allow_violating_hypotheses = true;
        c.generator.negative_couplings = 1;
        for t in 0..10 {
            let inst = generate_instance(&c, Mode::Theorem1, t).unwrap();
            assert_eq!(inst.couplings.iter().filter(|cp| cp.strength < 0.0).count(), 1);
        }
    }
}
