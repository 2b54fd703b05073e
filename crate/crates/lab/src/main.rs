//! `zerolab` — equidistribution experiments for zeros of random polynomial
//! sections, plus the moderate/covering/Hölder verification suites.
//!
//! Exit codes: 0 when the requested suite passes, 1 on a suite failure or
//! runtime abort, 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use zerolab::config::ExperimentConfig;
use zerolab::runner::SCHEMA_VERSION;
use zerolab::{ratefit, runner, suites, LabError};

#[derive(Parser)]
#[command(
    name = "zerolab",
    version,
    about = "Zero statistics of random polynomial sections: equidistribution \
             experiments and verification suites"
)]
struct Cli {
    /// Experiment config file (flat `key = value` lines; unknown keys error)
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long, global = true, value_name = "u64")]
    seed: Option<u64>,
    /// Output directory for CSV/JSON/gnuplot reports
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    /// Worker threads for sample-level parallelism
    #[arg(long, global = true, value_name = "int")]
    workers: Option<usize>,
    /// Samples per degree (equidist/rate/exceptional); Monte-Carlo size for
    /// `moderate` and pair count for `holder` when ≥ 1000
    #[arg(long, global = true, value_name = "int")]
    samples: Option<usize>,
    /// Comma-separated strictly ascending degree list
    #[arg(long, global = true, value_name = "csv-list")]
    degrees: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample sections per degree and report discrepancy statistics
    Equidist,
    /// Fit the decay rate of the median discrepancy across degrees
    Rate,
    /// Estimate exceptional-set exceedance fractions and their decay
    Exceptional,
    /// Verify the moderate-measure bounds (uniform and perturbed)
    Moderate,
    /// Verify the covering-count bound across dimensions 1..=30
    Covering,
    /// Estimate the Hölder modulus of the max-log potential on P¹ and P²
    Holder,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli.cmd, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, zerolab::config::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(
        cli.seed,
        cli.out.clone(),
        cli.workers,
        cli.samples,
        cli.degrees.as_deref(),
    )?;
    Ok(cfg)
}

fn dispatch(cmd: &Cmd, cfg: &ExperimentConfig) -> Result<bool, LabError> {
    match cmd {
        Cmd::Equidist => cmd_equidist(cfg),
        Cmd::Rate => cmd_rate(cfg),
        Cmd::Exceptional => cmd_exceptional(cfg),
        Cmd::Moderate => cmd_moderate(cfg),
        Cmd::Covering => cmd_covering(cfg),
        Cmd::Holder => cmd_holder(cfg),
    }
}

/// Monte-Carlo sizes below this reuse the suite defaults (the estimators need
/// real sample counts; the equidist default of 200 is not meant for them).
const MC_MIN: usize = 1000;
const MODERATE_DEFAULT_M: usize = 20_000;
const HOLDER_DEFAULT_PAIRS: usize = 1_000_000;
const HOLDER_RHO: f64 = 0.99;

fn opt_stat(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.6}"),
        None => "-".into(),
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    kind: &'static str,
    seed: u64,
    payload: T,
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    kind: &'static str,
    seed: u64,
    payload: T,
) -> Result<PathBuf, LabError> {
    std::fs::create_dir_all(dir)?;
    let envelope = Envelope { schema_version: SCHEMA_VERSION, kind, seed, payload };
    let mut text = serde_json::to_string_pretty(&envelope).expect("plain data serializes");
    text.push('\n');
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, text)?;
    Ok(path)
}

fn cmd_equidist(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let report = runner::run_equidistribution(cfg)?;
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("measure: {}   seed: {}   samples/degree: {}", report.measure_label, report.seed, report.samples_per_degree);
    for s in &report.summaries {
        println!(
            "n={:>4}  rows={:<5} flagged={:<3} median={}  mean={}  p90={}",
            s.n,
            s.rows,
            s.flagged,
            opt_stat(s.median),
            opt_stat(s.mean),
            opt_stat(s.p90),
        );
    }
    if let Some(dir) = &cfg.out {
        for path in report.write_to(dir, "equidist")? {
            println!("wrote {}", path.display());
        }
    }
    Ok(true)
}

fn cmd_rate(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let report = runner::run_equidistribution(cfg)?;
    let fit = ratefit::fit_rate(&report.medians())?;
    println!("model: {}", fit.model);
    for p in &fit.medians {
        println!("n={:>4}  median={:.6}", p.n, p.median);
    }
    println!(
        "slope={:.4}  intercept={:.4}  r²={:.4}  refined C (median ≈ C·log n/n) = {:.4}",
        fit.slope, fit.intercept, fit.r_squared, fit.c_refined
    );
    if let Some(dir) = &cfg.out {
        let path = write_json(dir, "rate", "rate", cfg.seed, &fit)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn cmd_exceptional(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let report = runner::run_equidistribution(cfg)?;
    let a = match cfg.threshold_a {
        Some(a) => a,
        None => {
            let a = ratefit::calibrate_a(&report)?;
            println!("calibrated A = {a:.6} (0.5 exceedance quantile at n = {})", report.summaries[0].n);
            a
        }
    };
    let est = ratefit::estimate_exceptional(&report, a)?;
    for row in &est.rows {
        println!(
            "n={:>4}  threshold={:.6}  exceed={}/{}  fraction={:.4}  CI=[{:.4},{:.4}]",
            row.n, row.threshold, row.exceed, row.total, row.fraction, row.ci_low, row.ci_high
        );
    }
    println!("note: {}", est.battery_note);
    println!("{}", est.verdict);
    if let Some(dir) = &cfg.out {
        let path = write_json(dir, "exceptional", "exceptional", cfg.seed, &est)?;
        println!("wrote {}", path.display());
    }
    Ok(est.decaying)
}

fn cmd_moderate(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let m = if cfg.samples >= MC_MIN {
        cfg.samples
    } else {
        println!("note: samples {} below the Monte-Carlo minimum; using {MODERATE_DEFAULT_M}", cfg.samples);
        MODERATE_DEFAULT_M
    };
    let suite = suites::run_moderate_suite(&cfg.constants, m, cfg.seed)?;
    for lin in &suite.linear {
        println!(
            "[{}] uniform bound on P{}: max estimate/bound = {:.4} over {} functions (bound {})",
            pass_str(lin.pass),
            superscript(lin.k),
            lin.max_ratio,
            lin.cells.len(),
            lin.bound
        );
    }
    let p = &suite.perturbed;
    println!(
        "[{}] perturbed bound on P{}: ε={} (threshold {:.4}), α*={:.4}, {} cells, bound {}",
        pass_str(p.pass),
        superscript(p.k),
        p.epsilon,
        p.epsilon_threshold,
        p.alpha_star,
        p.cells.len(),
        p.bound
    );
    for (tau, margin) in &p.qpsh_margins {
        println!("    τ={tau}: positivity margin {margin:.2e}");
    }
    if let Some(dir) = &cfg.out {
        let path = write_json(dir, "moderate", "moderate", cfg.seed, &suite)?;
        println!("wrote {}", path.display());
    }
    Ok(suite.pass)
}

fn cmd_covering(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let suite = suites::run_covering_suite(1, 30);
    for row in &suite.rows {
        println!(
            "k={:>2}  ratio={:>14.3}  bound=8^(k+1)={:<12e}  {}",
            row.k,
            row.ratio,
            row.bound,
            if row.satisfied { "ok" } else { "exceeds" }
        );
    }
    if let Some(k) = suite.onset_k {
        println!("bound holds from k = {k} upward");
    }
    println!("[{}] covering bound on k ∈ [7, 30]", pass_str(suite.pass));
    if let Some(dir) = &cfg.out {
        let path = write_json(dir, "covering", "covering", cfg.seed, &suite)?;
        println!("wrote {}", path.display());
    }
    Ok(suite.pass)
}

fn cmd_holder(cfg: &ExperimentConfig) -> Result<bool, LabError> {
    let pairs = if cfg.samples >= MC_MIN {
        cfg.samples
    } else {
        println!("note: samples {} below the Monte-Carlo minimum; using {HOLDER_DEFAULT_PAIRS} pairs", cfg.samples);
        HOLDER_DEFAULT_PAIRS
    };
    let suite = suites::run_holder_suite(&[1, 2], HOLDER_RHO, pairs, cfg.seed);
    for row in &suite.rows {
        println!(
            "[{}] P{}: estimated modulus {:.4} vs declared {:.4} (ρ = {}, {} pairs)",
            pass_str(row.within),
            superscript(row.k),
            row.estimate,
            row.bound,
            suite.rho,
            suite.pairs
        );
    }
    if let Some(dir) = &cfg.out {
        let path = write_json(dir, "holder", "holder", cfg.seed, &suite)?;
        println!("wrote {}", path.display());
    }
    Ok(suite.pass)
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn superscript(k: usize) -> String {
    match k {
        1 => "¹".into(),
        2 => "²".into(),
        3 => "³".into(),
        other => format!("^{other}"),
    }
}
