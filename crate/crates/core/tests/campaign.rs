//! Campaign harness: determinism, report round trips and generator contracts.

use std::collections::BTreeSet;

use xyineq_core::campaign::{generate_instance, search_hypothesis_violation};
use xyineq_core::{parse_config, replay, run_campaign, CampaignConfig, Error, Mode, VerificationReport};

fn config(mode: Mode, trials: usize) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(mode);
    cfg.sites = 3;
    cfg.trials = trials;
    cfg.seed = 99;
    cfg.generator.max_sites_spin1 = 2;
    cfg.volume.lengths = vec![2, 4];
    cfg.volume.max_enlarged_sites = 6;
    cfg
}

#[test]
fn serial_and_parallel_runs_agree() {
    let cfg = config(Mode::All, 3);
    let serial = run_campaign(&cfg, Some(1)).unwrap();
    let parallel = run_campaign(&cfg, Some(3)).unwrap();
    assert_eq!(serial.instances.len(), parallel.instances.len());
    for (s, p) in serial.instances.iter().zip(&parallel.instances) {
        assert!(s.same_outcome(p), "{} trial {}", s.mode, s.trial);
    }
    assert_eq!(serial.summary.passed, parallel.summary.passed);
    assert_eq!(serial.summary.by_mode.len(), 6);
}

#[test]
fn every_record_replays_bit_identically() {
    let report = run_campaign(&config(Mode::All, 2), None).unwrap();
    assert!(report.instances.iter().all(|r| r.error.is_none()));
    for r in &report.instances {
        assert!(replay(r).same_outcome(r), "{} trial {}", r.mode, r.trial);
    }
}

#[test]
fn report_survives_a_json_round_trip() {
    let report = run_campaign(&config(Mode::Corollary, 3), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    report.save_json(&path).unwrap();
    let loaded = VerificationReport::load_json(&path).unwrap();
    for (a, b) in report.instances.iter().zip(&loaded.instances) {
        assert!(a.same_outcome(b));
        assert!(replay(b).same_outcome(a));
    }

    let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let keys = |v: &serde_json::Value| v.as_object().unwrap().keys().cloned().collect::<BTreeSet<_>>();
    assert_eq!(
        keys(&raw),
        BTreeSet::from(["summary".to_string(), "instances".to_string()])
    );
    let record = keys(&raw["instances"][0]);
    for field in [
        "mode",
        "trial",
        "seed",
        "instance",
        "settings",
        "checks",
        "pass",
        "wall_time_ms",
    ] {
        assert!(record.contains(field), "missing {field}");
    }
    let check = keys(&raw["instances"][0]["checks"][0]);
    for field in ["name", "kind", "params", "value", "tolerance", "pass"] {
        assert!(check.contains(field), "missing {field}");
    }
}

#[test]
fn csv_values_round_trip_exactly() {
    let report = run_campaign(&config(Mode::Theorem1, 2), None).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let header = rd.headers().unwrap().clone();
    let value_col = header.iter().position(|h| h == "value").unwrap();
    let values: Vec<f64> = rd.records().map(|r| r.unwrap()[value_col].parse().unwrap()).collect();
    let expected: Vec<f64> = report
        .instances
        .iter()
        .flat_map(|r| r.checks.iter().map(|c| c.value))
        .collect();
    assert_eq!(values, expected);
}

#[test]
fn instances_depend_only_on_seed_and_trial() {
    let cfg = config(Mode::Theorem1, 1);
    for trial in [0, 7, 1000] {
        let a = generate_instance(&cfg, Mode::Theorem1, trial).unwrap();
        let b = generate_instance(&cfg, Mode::Theorem1, trial).unwrap();
        assert_eq!(a, b);
    }
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(
        generate_instance(&cfg, Mode::Theorem1, 0).unwrap(),
        generate_instance(&other, Mode::Theorem1, 0).unwrap()
    );
}

#[test]
fn generator_reaches_three_site_subsets() {
    let cfg = config(Mode::Theorem1, 1);
    let found = (0..200).any(|t| {
        let inst = generate_instance(&cfg, Mode::Theorem1, t).unwrap();
        inst.couplings.iter().any(|c| c.subset.len() == 3)
    });
    assert!(found);
}

#[test]
fn zero_couplings_pass_trivially() {
    let mut cfg = config(Mode::Theorem1, 20);
    cfg.generator.j_max = 0.0;
    let report = run_campaign(&cfg, None).unwrap();
    assert!(report.all_passed());
    assert_eq!(report.exit_code(), 0);
    for r in &report.instances {
        assert!(r.instance.couplings.iter().all(|c| c.strength == 0.0));
        assert!(r.min_margin.is_some_and(|m| m >= -1e-15));
    }
}

#[test]
fn negative_coupling_violation_is_found_and_replayable() {
    let rec = search_hypothesis_violation(4, 3, 2000)
        .unwrap()
        .expect("a violation exists");
    assert!(!rec.pass);
    assert!(rec.instance.couplings.iter().any(|c| c.strength < 0.0));
    let again = replay(&rec);
    assert!(again.same_outcome(&rec));
    let report = VerificationReport::assemble(Mode::Theorem1, 4, rec.trial + 1, vec![rec], 0.0);
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn config_file_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"mode": "theorem1", "generator": {"j_max": "two"}}"#).unwrap();
    match parse_config(&path) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "generator.j_max"),
        other => panic!("unexpected {other:?}"),
    }
    std::fs::write(
        &path,
        r#"{"mode": "theorem1", "instance": {"sites": ["a", "b"], "couplings": [{"subset": ["a", "b"], "axis": 1, "strength": -0.1}], "a": ["a"], "b": ["b"]}}"#,
    )
    .unwrap();
    let err = parse_config(&path).and_then(|c| c.validate()).unwrap_err();
    assert!(err.to_string().contains("negative"), "{err}");
}
