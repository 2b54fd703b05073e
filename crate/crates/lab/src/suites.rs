//! The verification suites behind the `moderate`, `covering` and `holder`
//! subcommands: each wraps the corresponding core estimators, pins the lab's
//! standard inputs (class-F battery, dimension ranges, exponents) and
//! aggregates a serializable pass/fail report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use zerolab_core::geometry::{self, covering_ratio};
use zerolab_core::measures::{
    verify_prop_2_2, verify_prop_2_11, ChainParams, Constants, ModerateReport,
};
use zerolab_core::potentials::{
    holder_modulus_estimate, maxlog_potential, pairing_log_potential, prop211_epsilon_threshold,
    softmax_potential, ClassFFunction,
};

use crate::stream::splitmix64;
use crate::LabError;

fn suite_rng(seed: u64, tag: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag.wrapping_add((k as u64) << 40))))
}

// ---------------------------------------------------------------------------
// covering

#[derive(Debug, Clone, Serialize)]
pub struct CoveringRow {
    pub k: usize,
    pub ratio: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringSuite {
    pub rows: Vec<CoveringRow>,
    /// Smallest k in the range from which every later row is satisfied.
    pub onset_k: Option<usize>,
    /// The verified claim: every k in [7, 30] ∩ range satisfies the bound.
    pub pass: bool,
}

/// Quadrature ratios vol(Pᵏ)/vol(B(π/8)) against the 8^(k+1) covering bound
/// for each k in the range.
pub fn run_covering_suite(k_lo: usize, k_hi: usize) -> CoveringSuite {
    assert!(1 <= k_lo && k_lo <= k_hi);
    let rows: Vec<CoveringRow> = (k_lo..=k_hi)
        .map(|k| {
            let r = covering_ratio(k);
            CoveringRow { k: r.k, ratio: r.ratio, bound: r.bound, satisfied: r.satisfied }
        })
        .collect();
    let onset_k = rows
        .iter()
        .rev()
        .take_while(|r| r.satisfied)
        .last()
        .map(|r| r.k);
    let pass = rows.iter().filter(|r| (7..=30).contains(&r.k)).all(|r| r.satisfied);
    CoveringSuite { rows, onset_k, pass }
}

// ---------------------------------------------------------------------------
// Hölder

#[derive(Debug, Clone, Serialize)]
pub struct HolderRow {
    pub k: usize,
    pub estimate: f64,
    pub bound: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderSuite {
    pub rho: f64,
    pub pairs: usize,
    pub rows: Vec<HolderRow>,
    pub pass: bool,
}

const HOLDER_TAG: u64 = 0x484f_4c44_4552;

/// Estimated Hölder modulus of the max-log potential on Pᵏ against its
/// declared √π·k bound, one row per dimension. The estimate is a scan
/// lower bound, so `within` failing means the declared constant is wrong,
/// while passing only corroborates it.
pub fn run_holder_suite(dims: &[usize], rho: f64, pairs: usize, seed: u64) -> HolderSuite {
    let rows: Vec<HolderRow> = dims
        .iter()
        .map(|&k| {
            let u = maxlog_potential(k);
            let mut rng = suite_rng(seed, HOLDER_TAG, k);
            let estimate = holder_modulus_estimate(&u, rho, pairs, &mut rng);
            let bound = u.claimed_modulus;
            HolderRow { k, estimate, bound, within: estimate <= bound }
        })
        .collect();
    let pass = rows.iter().all(|r| r.within);
    HolderSuite { rho, pairs, rows, pass }
}

// ---------------------------------------------------------------------------
// moderate

#[derive(Debug, Clone, Serialize)]
pub struct ModerateCell {
    pub label: String,
    pub alpha: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub clamped: usize,
    pub samples: usize,
    pub bound: f64,
    pub pass: bool,
}

fn cell_from(report: &ModerateReport) -> ModerateCell {
    ModerateCell {
        label: report.label.clone(),
        alpha: report.alpha,
        estimate: report.integral_estimate,
        std_error: report.std_error,
        clamped: report.clamp_count,
        samples: report.samples,
        bound: report.claim.unwrap_or(f64::NAN),
        pass: report.verdict.unwrap_or(false),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearBoundSummary {
    pub k: usize,
    pub alpha0: f64,
    pub bound: f64,
    pub max_ratio: f64,
    pub cells: Vec<ModerateCell>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbedCell {
    pub tau: f64,
    pub alpha: f64,
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub in_hypothesis: bool,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbedBoundSummary {
    pub k: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub alpha_star: f64,
    pub bound: f64,
    pub qpsh_margins: Vec<(f64, f64)>,
    pub cells: Vec<PerturbedCell>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModerateSuite {
    pub linear: Vec<LinearBoundSummary>,
    pub perturbed: PerturbedBoundSummary,
    pub pass: bool,
}

const MODERATE_TAG: u64 = 0x4d4f_4445_5241;

/// Standard class-F battery on Pᵏ: the max-log potential, the pairing log at
/// a coordinate point and at a random point, and a soft-max surrogate — all
/// with max exactly 0, so no normalization offset is needed.
fn class_f_battery(k: usize, rng: &mut ChaCha8Rng) -> Vec<ClassFFunction> {
    let coordinate = {
        let mut raw = vec![num_complex::Complex64::new(0.0, 0.0); k + 1];
        raw[0] = num_complex::Complex64::new(1.0, 0.0);
        geometry::normalize(&raw).expect("unit vector")
    };
    vec![
        ClassFFunction { base: maxlog_potential(k), normalization_offset: 0.0 },
        pairing_log_potential(coordinate),
        pairing_log_potential(geometry::uniform_fs_sample(rng, k)),
        ClassFFunction { base: softmax_potential(k, 0.2), normalization_offset: 0.0 },
    ]
}

/// Runs the uniform-measure linear bound on P¹ and P², then the ε-perturbed
/// bound on P¹ across soft-max temperatures {0.2, 0.1, 0.05} at ε = 10⁻³
/// (inside the admissible threshold) with exponents {α*, α*/2}.
pub fn run_moderate_suite(
    constants: &Constants,
    m: usize,
    seed: u64,
) -> Result<ModerateSuite, LabError> {
    let mut linear = Vec::new();
    for k in [1usize, 2] {
        let mut rng = suite_rng(seed, MODERATE_TAG, k);
        let battery = class_f_battery(k, &mut rng);
        let report = verify_prop_2_2(k, &battery, constants, m, &mut rng)?;
        linear.push(LinearBoundSummary {
            k: report.k,
            alpha0: report.alpha0,
            bound: report.bound,
            max_ratio: report.max_ratio,
            cells: report.entries.iter().map(cell_from).collect(),
            pass: report.pass,
        });
    }

    let k = 1;
    let rho = 0.99;
    let epsilon = 1e-3;
    debug_assert!(epsilon < prop211_epsilon_threshold(k, rho, constants.beta0));
    let alpha_star = constants.alpha0 * (rho / 4.0).powi(k as i32);
    let mut rng = suite_rng(seed, MODERATE_TAG, 100 + k);
    let battery = class_f_battery(k, &mut rng);
    let report = verify_prop_2_11(
        k,
        rho,
        epsilon,
        &[0.2, 0.1, 0.05],
        &[alpha_star, alpha_star / 2.0],
        &battery,
        constants,
        m,
        ChainParams::default(),
        1e-3,
        &mut rng,
    )?;
    let perturbed = PerturbedBoundSummary {
        k: report.k,
        rho: report.rho,
        epsilon: report.epsilon,
        epsilon_threshold: report.epsilon_threshold,
        alpha_star: report.alpha_star,
        bound: report.bound,
        qpsh_margins: report.qpsh_margins.clone(),
        cells: report
            .rows
            .iter()
            .map(|row| PerturbedCell {
                tau: row.tau,
                alpha: row.alpha,
                label: row.report.label.clone(),
                estimate: row.report.integral_estimate,
                std_error: row.report.std_error,
                in_hypothesis: row.in_hypothesis,
                within_bound: row.within_bound,
            })
            .collect(),
        pass: report.pass,
    };
    let pass = linear.iter().all(|s| s.pass) && perturbed.pass;
    Ok(ModerateSuite { linear, perturbed, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_bound_holds_from_seven_up() {
        let suite = run_covering_suite(1, 30);
        assert_eq!(suite.rows.len(), 30);
        assert!(suite.pass);
        assert!(!suite.rows[0].satisfied, "k=1 must fail the 8^(k+1) bound");
        assert!((suite.rows[0].ratio - 80.3).abs() < 0.5, "ratio = {}", suite.rows[0].ratio);
        let onset = suite.onset_k.unwrap();
        assert!(onset <= 7, "onset k = {onset}");
        for row in &suite.rows {
            assert_eq!(row.satisfied, row.ratio <= row.bound);
        }
    }

    #[test]
    fn holder_estimates_stay_under_the_declared_modulus() {
        let suite = run_holder_suite(&[1, 2], 0.99, 4000, 20260814);
        assert!(suite.pass, "{:?}", suite.rows);
        // the scan must find a decent fraction of the true modulus, not 0
        for row in &suite.rows {
            assert!(row.estimate > 0.3 * row.bound, "estimate degenerate: {row:?}");
        }
    }

    #[test]
    fn moderate_suite_passes_with_default_constants() {
        let constants = Constants::default();
        let suite = run_moderate_suite(&constants, 2000, 20260814).unwrap();
        assert!(suite.pass);
        assert_eq!(suite.linear.len(), 2);
        assert_eq!(suite.linear[0].cells.len(), 4);
        assert!(suite.linear[0].max_ratio < 1.0, "P¹ battery should sit well under c₀·k");
        assert_eq!(suite.perturbed.cells.len(), 3 * 2 * 4);
        assert!(suite.perturbed.cells.iter().all(|c| c.in_hypothesis));
        // honest bookkeeping: every cell the verdict counted is within bound
        for cell in &suite.perturbed.cells {
            assert!(cell.within_bound, "{cell:?}");
        }
    }

    #[test]
    fn moderate_suite_rejects_bad_constants() {
        let mut constants = Constants::default();
        constants.alpha0 = -1.0;
        assert!(run_moderate_suite(&constants, 2000, 1).is_err());
    }
}
