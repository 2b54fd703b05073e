//! The equidistribution runner: draws m sections per degree, extracts zero
//! sets, pairs them against the battery and aggregates per-degree statistics,
//! with CSV/JSON/gnuplot renderings of the result.
//!
//! Parallelism is sample-level inside a dedicated rayon pool sized by the
//! config. Uniform runs give every sample its own derived RNG stream;
//! perturbed runs draw all coefficient points from one sequential Metropolis
//! chain per degree (the chain is inherently serial) and parallelize only the
//! root extraction. Either way the report is a pure function of (config,
//! seed).

use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use zerolab_core::measures::{mh_sample_perturbed, MeasureSampler};
use zerolab_core::potentials::Potential;
use zerolab_core::sections::{Section, SectionSpace};
use zerolab_core::stats;
use zerolab_core::zeros::{self, C2Grid, TestFunction};

use crate::config::{ExperimentConfig, MeasureSpec};
use crate::{stream, LabError};

pub const SCHEMA_VERSION: u32 = 1;

/// One sample's CSV row.
#[derive(Debug, Clone)]
pub struct SampleRow {
    pub n: usize,
    pub sample_id: u64,
    pub stream_index: u64,
    pub pairings: Vec<f64>,
    pub discrepancy: f64,
    pub flagged: bool,
}

/// Per-degree aggregate over the non-flagged rows. The statistics are `None`
/// when every row of the degree is flagged (never seen in practice; keeps the
/// JSON honest instead of writing NaN).
#[derive(Debug, Clone, Serialize)]
pub struct DegreeSummary {
    pub n: usize,
    pub rows: usize,
    pub flagged: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub p90: Option<f64>,
}

/// Battery metadata carried into the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryInfo {
    pub label: String,
    pub c2_norm: f64,
    pub fs_integral: f64,
}

#[derive(Debug, Clone)]
pub struct EquidistReport {
    pub seed: u64,
    pub measure_label: String,
    pub samples_per_degree: usize,
    pub battery: Vec<BatteryInfo>,
    pub warnings: Vec<String>,
    pub rows: Vec<SampleRow>,
    pub summaries: Vec<DegreeSummary>,
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    schema_version: u32,
    kind: &'static str,
    seed: u64,
    measure: &'a str,
    samples_per_degree: usize,
    total_rows: usize,
    battery: &'a [BatteryInfo],
    warnings: &'a [String],
    degrees: &'a [DegreeSummary],
}

impl EquidistReport {
    /// (n, median discrepancy) pairs for the degrees that have one.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.summaries
            .iter()
            .filter_map(|s| s.median.map(|m| (s.n, m)))
            .collect()
    }

    /// Non-flagged discrepancies at one degree, in sample order.
    pub fn discrepancies_at(&self, n: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && !r.flagged)
            .map(|r| r.discrepancy)
            .collect()
    }

    /// The full per-sample table. Column order is fixed: provenance, one
    /// pairing column per battery member, discrepancy, flag. Floats print via
    /// the shortest round-trip formatter, so the bytes are a pure function of
    /// the values.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str("n,sample_id,stream_index");
        for info in &self.battery {
            let col = info.label.replace(['-', ':', '.'], "_");
            let _ = write!(out, ",pairing_{col}");
        }
        out.push_str(",discrepancy,flagged\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.n, r.sample_id, r.stream_index);
            for p in &r.pairings {
                let _ = write!(out, ",{p}");
            }
            let _ = writeln!(out, ",{},{}", r.discrepancy, u8::from(r.flagged));
        }
        out
    }

    /// The JSON summary (schema_version, battery metadata, per-degree
    /// aggregates; totals equal the CSV row count).
    pub fn json(&self) -> String {
        let summary = JsonSummary {
            schema_version: SCHEMA_VERSION,
            kind: "equidist",
            seed: self.seed,
            measure: &self.measure_label,
            samples_per_degree: self.samples_per_degree,
            total_rows: self.rows.len(),
            battery: &self.battery,
            warnings: &self.warnings,
            degrees: &self.summaries,
        };
        let mut text = serde_json::to_string_pretty(&summary).expect("plain data serializes");
        text.push('\n');
        text
    }

    /// Two-column gnuplot tables: overall median discrepancy per degree, plus
    /// one file per battery member with the median of |pairing|/‖ψ‖_C². Keys
    /// are file stems, values file bodies.
    pub fn gnuplot_tables(&self) -> Vec<(String, String)> {
        let mut tables = Vec::new();
        let mut overall = String::from("# n median_discrepancy\n");
        for s in &self.summaries {
            if let Some(m) = s.median {
                let _ = writeln!(overall, "{} {}", s.n, m);
            }
        }
        tables.push(("medians_discrepancy".to_string(), overall));
        for (idx, info) in self.battery.iter().enumerate() {
            let mut body = format!("# n median_abs_pairing_over_c2 ({})\n", info.label);
            for s in &self.summaries {
                let mut vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.n == s.n && !r.flagged)
                    .map(|r| r.pairings[idx].abs() / info.c2_norm)
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let _ = writeln!(body, "{} {}", s.n, stats::median_sorted(&vals));
            }
            let stem = format!("medians_{}", info.label.replace(['-', ':', '.'], "_"));
            tables.push((stem, body));
        }
        tables
    }

    /// Writes CSV, JSON and the gnuplot tables under `dir` with the given
    /// file stem; returns the paths written.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, LabError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, self.csv())?;
        written.push(csv_path);
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, self.json())?;
        written.push(json_path);
        for (name, body) in self.gnuplot_tables() {
            let path = dir.join(format!("{name}.dat"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// The standard battery used by every run (`battery = default`).
pub fn battery() -> Vec<TestFunction> {
    zeros::default_battery(&C2Grid::default())
}

fn row_from_section(s: &Section, battery: &[TestFunction], sid: u64, sidx: u64) -> SampleRow {
    let rec = zeros::discrepancy(s, battery);
    SampleRow {
        n: rec.n,
        sample_id: sid,
        stream_index: sidx,
        pairings: rec.pairings,
        discrepancy: rec.discrepancy,
        flagged: rec.flagged,
    }
}

fn summarize(n: usize, rows: &[SampleRow]) -> DegreeSummary {
    let mut clean: Vec<f64> = rows.iter().filter(|r| !r.flagged).map(|r| r.discrepancy).collect();
    let flagged = rows.len() - clean.len();
    if clean.is_empty() {
        return DegreeSummary { n, rows: rows.len(), flagged, median: None, mean: None, p90: None };
    }
    clean.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (mean, _) = stats::mean_and_std(&clean);
    DegreeSummary {
        n,
        rows: rows.len(),
        flagged,
        median: Some(stats::median_sorted(&clean)),
        mean: Some(mean),
        p90: Some(stats::quantile_sorted(&clean, 0.9)),
    }
}

/// Builds the perturbed sampler for one degree: the potential label is
/// instantiated on the projectivized section space Pⁿ and scaled by ε. The
/// pilot chain consumes the head of the degree's chain stream; batch draws
/// continue on the same stream.
fn perturbed_sampler(
    n: usize,
    spec: &MeasureSpec,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<MeasureSampler, LabError> {
    let MeasureSpec::Perturbed { potential, epsilon, fd_step, chain } = spec else {
        unreachable!("caller matched the perturbed arm")
    };
    let inner = Potential::from_label(potential, n)?;
    let scaled = Potential::scaled(*epsilon, inner);
    Ok(mh_sample_perturbed(&scaled, n, *chain, *fd_step, rng)?)
}

/// Runs the full experiment described by the config and returns the report.
/// Aborts (rather than flags) when a sampler cannot be constructed, naming
/// the violated predicate.
pub fn run_equidistribution(cfg: &ExperimentConfig) -> Result<EquidistReport, LabError> {
    let battery = battery();
    let battery_info: Vec<BatteryInfo> = battery
        .iter()
        .map(|psi| BatteryInfo {
            label: psi.label.clone(),
            c2_norm: psi.c2_norm,
            fs_integral: psi.fs_integral,
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    let mut rows: Vec<SampleRow> = Vec::with_capacity(cfg.degrees.len() * cfg.samples);
    let mut summaries = Vec::with_capacity(cfg.degrees.len());
    let mut warnings = Vec::new();
    for &n in &cfg.degrees {
        let space = SectionSpace::new(n);
        let degree_rows: Vec<SampleRow> = match &cfg.measure {
            MeasureSpec::Uniform => pool.install(|| {
                (0..cfg.samples as u64)
                    .into_par_iter()
                    .map(|sid| {
                        let mut rng = stream::rng_for(cfg.seed, n, sid);
                        let s = Section::random_uniform(space.clone(), &mut rng);
                        row_from_section(&s, &battery, sid, stream::stream_index(n, sid))
                    })
                    .collect()
            }),
            spec @ MeasureSpec::Perturbed { .. } => {
                let mut chain_rng = stream::rng_for_chain(cfg.seed, n);
                let sampler = perturbed_sampler(n, spec, &mut chain_rng)?;
                if let Some(w) = &sampler.warning {
                    warnings.push(format!("n={n}: {w}"));
                }
                let points = sampler.draw_batch(&mut chain_rng, cfg.samples);
                pool.install(|| {
                    points
                        .into_par_iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let sid = i as u64;
                            let s = Section::from_projpoint(space.clone(), &p)
                                .expect("chain states are unit vectors");
                            row_from_section(&s, &battery, sid, stream::stream_index(n, sid))
                        })
                        .collect()
                })
            }
        };
        summaries.push(summarize(n, &degree_rows));
        rows.extend(degree_rows);
    }
    Ok(EquidistReport {
        seed: cfg.seed,
        measure_label: cfg.measure.label(),
        samples_per_degree: cfg.samples,
        battery: battery_info,
        warnings,
        rows,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.degrees = vec![2];
        cfg.samples = 1;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn single_sample_run_has_one_row_and_one_summary() {
        let report = run_equidistribution(&tiny_config()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.summaries.len(), 1);
        let s = &report.summaries[0];
        assert_eq!((s.n, s.rows, s.flagged), (2, 1, 0));
        assert_eq!(s.median, Some(report.rows[0].discrepancy));
        assert_eq!(report.rows[0].pairings.len(), report.battery.len());
    }

    #[test]
    fn csv_has_fixed_header_and_row_counts() {
        let mut cfg = tiny_config();
        cfg.degrees = vec![2, 3];
        cfg.samples = 4;
        let report = run_equidistribution(&cfg).unwrap();
        let csv = report.csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,sample_id,stream_index,pairing_one,pairing_abs2,pairing_re_cross,\
             pairing_im_cross,pairing_prod_sq,discrepancy,flagged"
        );
        assert_eq!(lines.count(), 8);
        let parsed: serde_json::Value = serde_json::from_str(&report.json()).unwrap();
        assert_eq!(parsed["schema_version"], 1);
        assert_eq!(parsed["total_rows"], 8);
        assert_eq!(parsed["degrees"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn worker_count_does_not_change_the_bytes() {
        let mut one = tiny_config();
        one.degrees = vec![3, 5];
        one.samples = 6;
        let mut four = one.clone();
        four.workers = 4;
        let a = run_equidistribution(&one).unwrap();
        let b = run_equidistribution(&four).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.json(), b.json());
    }

    #[test]
    fn perturbed_runs_are_reproducible() {
        let mut cfg = tiny_config();
        cfg.degrees = vec![3];
        cfg.samples = 5;
        cfg.measure = MeasureSpec::Perturbed {
            potential: "softmax:0.2".into(),
            epsilon: 1e-6,
            fd_step: 1e-3,
            chain: zerolab_core::measures::ChainParams {
                burn_in: 20,
                thin: 2,
                proposal_sigma: 0.35,
            },
        };
        let a = run_equidistribution(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_equidistribution(&cfg).unwrap();
        assert_eq!(a.csv(), b.csv());
        // flat target at epsilon 1e-6 accepts nearly always; the warning
        // channel must carry that, not drop it
        assert!(!a.warnings.is_empty());
    }

    #[test]
    fn unknown_potential_label_aborts_the_run() {
        let mut cfg = tiny_config();
        cfg.measure = MeasureSpec::Perturbed {
            potential: "mystery".into(),
            epsilon: 1e-6,
            fd_step: 1e-3,
            chain: Default::default(),
        };
        let err = run_equidistribution(&cfg).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn maxlog_perturbation_is_refused_as_nonsmooth() {
        let mut cfg = tiny_config();
        cfg.measure = MeasureSpec::Perturbed {
            potential: "maxlog".into(),
            epsilon: 1e-6,
            fd_step: 1e-3,
            chain: Default::default(),
        };
        let err = run_equidistribution(&cfg).unwrap_err();
        assert!(err.to_string().contains("smooth"), "{err}");
    }

    #[test]
    fn gnuplot_tables_cover_battery_and_overall() {
        let report = run_equidistribution(&tiny_config()).unwrap();
        let tables = report.gnuplot_tables();
        assert_eq!(tables.len(), 1 + report.battery.len());
        assert_eq!(tables[0].0, "medians_discrepancy");
        assert!(tables[0].1.lines().count() >= 2);
    }
}
