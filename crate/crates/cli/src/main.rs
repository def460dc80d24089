//! `xyineq`: run and replay verification campaigns.
//!
//! Exit codes: 0 when every instance passes, 1 on any violation (the report is
//! still written), 2 on configuration or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use xyineq_core::campaign::{replay, search_hypothesis_violation, InstanceRecord};
use xyineq_core::spin::set_dim_cap_override;
use xyineq_core::{run_campaign, CampaignConfig, Mode, VerificationReport};

#[derive(Parser)]
#[command(
    name = "xyineq",
    version,
    about = "Certify XY-model correlation inequalities by exact diagonalization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded campaign.
    Verify(VerifyArgs),
    /// Re-evaluate records of a saved report and compare them bit for bit.
    Replay(ReplayArgs),
    /// Search for a sign violation among instances with one negative coupling.
    SearchViolation(SearchArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// theorem1, corollary, doubling-lemmas, spin1, theorem2, volume-limits or all
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sign-margin tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Accept negative couplings for demonstration runs.
    #[arg(long)]
    allow_violating_hypotheses: bool,
}

#[derive(clap::Args)]
struct ReplayArgs {
    report: PathBuf,
    /// Only this trial (all modes unless --mode is given).
    #[arg(long)]
    trial: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Replay every record instead of only the failed ones.
    #[arg(long)]
    all: bool,
}

#[derive(clap::Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    sites: usize,
    #[arg(long, default_value_t = 1000)]
    max_tries: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn load_config(args: &VerifyArgs) -> anyhow::Result<CampaignConfig> {
    let text =
        std::fs::read_to_string(&args.config).with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = CampaignConfig::from_json_str(&text)?;
    cfg.mode = args.mode;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.tol {
        cfg.tol = Some(t);
    }
    if args.report.is_some() {
        cfg.outputs.report = args.report.clone();
    }
    if args.csv.is_some() {
        cfg.outputs.csv = args.csv.clone();
    }
    cfg.allow_violating_hypotheses |= args.allow_violating_hypotheses;
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3e}"))
}

fn print_summary(report: &VerificationReport) {
    let s = &report.summary;
    for m in &s.by_mode {
        println!(
            "{:<16} instances {:>4}  passed {:>4}  failed {:>4}  skipped checks {:>3}  min margin {:>10}  max residual {:>10}",
            m.mode.as_str(),
            m.instances,
            m.passed,
            m.failed,
            m.skipped_checks,
            fmt_opt(m.min_margin),
            fmt_opt(m.max_residual),
        );
    }
    for r in report.failed_records().take(10) {
        print_failure(r);
    }
    println!(
        "{}: {} of {} instances passed in {:.1} s",
        if report.all_passed() { "PASS" } else { "FAIL" },
        s.passed,
        s.instances,
        s.wall_time_ms / 1e3
    );
}

fn print_failure(r: &InstanceRecord) {
    if let Some(e) = &r.error {
        println!("  {} trial {}: error: {e}", r.mode, r.trial);
    }
    for c in r.failures().take(3) {
        let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "  {} trial {}: {} [{}] value {:.6e} margin {} residual {} tol {:.1e}",
            r.mode,
            r.trial,
            c.name,
            params.join(" "),
            c.value,
            fmt_opt(c.margin),
            fmt_opt(c.residual),
            c.tolerance
        );
    }
}

fn write_outputs(report: &VerificationReport, json: Option<&Path>, csv: Option<&Path>) -> anyhow::Result<()> {
    if let Some(p) = json {
        report
            .save_json(p)
            .with_context(|| format!("writing report {}", p.display()))?;
    }
    if let Some(p) = csv {
        report
            .save_csv(p)
            .with_context(|| format!("writing CSV {}", p.display()))?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let cfg = load_config(&args)?;
    set_dim_cap_override(cfg.dim_cap);
    let report = run_campaign(&cfg, args.jobs)?;
    print_summary(&report);
    write_outputs(&report, cfg.outputs.report.as_deref(), cfg.outputs.csv.as_deref())?;
    Ok(report.all_passed())
}

fn replay_cmd(args: ReplayArgs) -> anyhow::Result<bool> {
    let report = VerificationReport::load_json(&args.report)
        .with_context(|| format!("reading report {}", args.report.display()))?;
    let selected: Vec<&InstanceRecord> = report
        .instances
        .iter()
        .filter(|r| args.all || args.trial.is_some() || !r.pass)
        .filter(|r| args.trial.is_none_or(|t| r.trial == t))
        .filter(|r| args.mode.is_none_or(|m| r.mode == m))
        .collect();
    if selected.is_empty() {
        println!("no records selected");
        return Ok(true);
    }
    let mut identical = true;
    for r in selected {
        let again = replay(r);
        let same = again.same_outcome(r);
        identical &= same;
        println!(
            "{} trial {}: {} ({})",
            r.mode,
            r.trial,
            if again.pass { "pass" } else { "fail" },
            if same {
                "bit-identical"
            } else {
                "DIFFERS from the stored record"
            }
        );
    }
    Ok(identical)
}

fn search(args: SearchArgs) -> anyhow::Result<bool> {
    let Some(rec) = search_hypothesis_violation(args.seed, args.sites, args.max_tries)? else {
        println!("no violation found in {} tries", args.max_tries);
        return Ok(true);
    };
    let negative: Vec<String> = rec
        .instance
        .couplings
        .iter()
        .filter(|c| c.strength < 0.0)
        .map(|c| {
            let s: Vec<&str> = c.subset.iter().map(String::as_str).collect();
            format!("J^{}_{{{}}} = {:.6}", c.axis, s.join(","), c.strength)
        })
        .collect();
    println!("violation at trial {} with {}", rec.trial, negative.join(", "));
    print_failure(&rec);
    if let Some(p) = &args.report {
        let report = VerificationReport::assemble(Mode::Theorem1, args.seed, rec.trial + 1, vec![rec], 0.0);
        report
            .save_json(p)
            .with_context(|| format!("writing report {}", p.display()))?;
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => verify(args),
        Command::Replay(args) => replay_cmd(args),
        Command::SearchViolation(args) => search(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
