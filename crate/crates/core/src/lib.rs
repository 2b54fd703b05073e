//! Numerical core for a laboratory studying the equidistribution of zeros of
//! random holomorphic sections on complex projective space.
//!
//! The objects live on Pᴺ with the Fubini–Study form normalized to total mass
//! one. Degree-n polynomials on P¹ are treated as sections of O(n) with the
//! L² inner product that makes weighted monomials orthonormal; their zero sets
//! are point multisets on P¹, and the statistic of interest is the pairing of
//! the normalized zero current (1/n)[Z_s] − ω_FS against a battery of C² test
//! functions. Around that sit the supporting function classes (quasi-p.s.h.
//! potentials with Hölder data) and measure machinery (moderate-measure
//! estimators, perturbed Monge–Ampère densities with Metropolis sampling).
//!
//! Modules:
//! - [`geometry`]: projective points, charts, Fubini–Study distance and
//!   sampling, sin-power integrals and the covering-count ratio.
//! - [`potentials`]: max-log / pairing-log / soft-max potentials, Hölder
//!   modulus estimation, quasi-plurisubharmonicity margins, hypothesis
//!   thresholds.
//! - [`measures`]: moderate-measure estimators, Monge–Ampère densities,
//!   Metropolis–Hastings sampling of perturbed measures.
//! - [`sections`]: H⁰(P¹, O(n)) with orthonormal weighted-monomial bases and
//!   the Kodaira pullback density.
//! - [`zeros`]: root extraction, zero-current pairings, C² norms and the
//!   discrepancy statistic.
//! - [`quad`]: adaptive quadrature used as an independent oracle by tests and
//!   by the measure suites.
//! - [`stats`]: order statistics, Kolmogorov–Smirnov tests and binomial
//!   confidence intervals shared by the estimators and the lab harness.

pub mod geometry;
pub mod measures;
pub mod potentials;
pub mod quad;
pub mod sections;
pub mod stats;
pub mod zeros;

pub use geometry::{ChartPoint, CoveringReport, ProjPoint, METRIC_SCALE};
pub use measures::{ChainParams, Constants, MeasureSampler, ModerateReport};
pub use potentials::{ClassFFunction, Potential};
pub use sections::{Section, SectionSpace};
pub use zeros::{DiscrepancyRecord, TestFunction, ZeroSet};
