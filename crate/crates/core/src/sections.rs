//! Spaces of degree-n sections over P¹ and their coordinate realization: a
//! section is a polynomial Σ_j c_j·ω_j·w^j in the affine chart, where the
//! weights ω_j = √binom(n,j) make the monomial basis orthonormal (up to one
//! common scale factor, irrelevant projectively) for the L² inner product
//! induced by the Fubini–Study metric on O(n). Coefficient vectors c drawn
//! uniformly from the unit sphere of Cⁿ⁺¹ give the Fubini–Study ensemble.

use crate::geometry::{uniform_fs_sample, ProjPoint};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("coefficient vector has {got} entries, expected {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("coefficient vector must not be identically zero")]
    ZeroSection,
}

/// H⁰(P¹, O(n)): dimension n+1, identified with polynomials of degree ≤ n in
/// the chart variable through the weighted monomial basis.
#[derive(Debug, Clone)]
pub struct SectionSpace {
    n: usize,
    weights: Vec<f64>,
}

impl SectionSpace {
    pub fn new(n: usize) -> SectionSpace {
        assert!(n >= 1, "degree must be at least 1");
        SectionSpace { n, weights: basis_weights(n) }
    }

    /// The degree n (also the zero count of every nonzero section).
    pub fn degree(&self) -> usize {
        self.n
    }

    /// Complex dimension of the space of sections.
    pub fn section_dim(&self) -> usize {
        self.n + 1
    }

    pub fn basis_weights(&self) -> &[f64] {
        &self.weights
    }

    /// B(t) = Σ_j ω_j²·t^j at t = |w|²; equals (1+t)ⁿ for the binomial
    /// weights (the Bergman kernel of O(n) restricted to the diagonal, up to
    /// the chart factor).
    pub fn bergman_sum(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &w in self.weights.iter().rev() {
            acc = acc * t + w * w;
        }
        acc
    }
}

/// ω_j = √binom(n,j), computed multiplicatively to avoid factorial overflow.
pub fn basis_weights(n: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(n + 1);
    let mut log_binom = 0.0f64;
    weights.push(1.0);
    for j in 1..=n {
        log_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        weights.push((0.5 * log_binom).exp());
    }
    weights
}

/// A section with unit-sphere coefficient vector in the weighted basis.
#[derive(Debug, Clone)]
pub struct Section {
    space: SectionSpace,
    coeffs: Vec<Complex64>,
}

impl Section {
    pub fn new(space: SectionSpace, coeffs: Vec<Complex64>) -> Result<Section, SectionError> {
        if coeffs.len() != space.section_dim() {
            return Err(SectionError::CoefficientLength {
                expected: space.section_dim(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(SectionError::ZeroSection);
        }
        Ok(Section { space, coeffs })
    }

    /// Draws coefficients uniformly from the unit sphere of Cⁿ⁺¹ — the
    /// Fubini–Study ensemble on the projectivized section space.
    pub fn random_uniform<R: Rng + ?Sized>(space: SectionSpace, rng: &mut R) -> Section {
        let p = uniform_fs_sample(rng, space.n);
        Section { coeffs: p.coords().to_vec(), space }
    }

    /// Interprets a point of the projectivized section space P(H⁰) ≅ Pⁿ as a
    /// section.
    pub fn from_projpoint(space: SectionSpace, p: &ProjPoint) -> Result<Section, SectionError> {
        Section::new(space, p.coords().to_vec())
    }

    pub fn space(&self) -> &SectionSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Chart-polynomial coefficients a_j = c_j·ω_j, so the section reads
    /// p(w) = Σ_j a_j w^j on U₀.
    pub fn chart_coefficients(&self) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .zip(self.space.weights.iter())
            .map(|(c, &w)| c * w)
            .collect()
    }
}

/// Evaluates the chart polynomial p(w) = Σ_j c_j ω_j w^j by Horner's rule.
pub fn eval_section(s: &Section, w: Complex64) -> Complex64 {
    let a = s.chart_coefficients();
    let mut acc = Complex64::new(0.0, 0.0);
    for &aj in a.iter().rev() {
        acc = acc * w + aj;
    }
    acc
}

/// Density against ω_FS of the expected-zero current (1/n)·E[Z_s] at the
/// chart points of `grid`, computed from the Bergman sum B(t) = Σ ω_j² t^j,
/// t = |w|², through the closed form
///   density(w) = (1+t)²·[ B′/B + t·(B″·B − B′²)/B² ] / n,
/// which is (ddᶜ of (1/2n)·log B) divided by ω_FS in the chart. Exactly 1
/// for the binomial weights; analytic derivatives keep deviations at the
/// rounding level rather than at finite-difference accuracy.
pub fn kodaira_density(space: &SectionSpace, grid: &[Complex64]) -> Vec<f64> {
    let n = space.degree();
    let w2: Vec<f64> = space.basis_weights().iter().map(|w| w * w).collect();
    grid.iter()
        .map(|w| {
            let t = w.norm_sqr();
            // B, B′, B″ by simultaneous Horner in t.
            let (mut b, mut b1, mut b2) = (0.0f64, 0.0f64, 0.0f64);
            for &c in w2.iter().rev() {
                b2 = b2 * t + 2.0 * b1;
                b1 = b1 * t + b;
                b = b * t + c;
            }
            let r1 = b1 / b;
            let r2 = b2 / b;
            (1.0 + t) * (1.0 + t) * (r1 + t * (r2 - r1 * r1)) / n as f64
        })
        .collect()
}

/// Zero counts for the degree-n power of a line bundle with top
/// self-intersection `chern_top`: d_n = n·chern_top zeros per section, with
/// the lower-order defect δ_n bounded uniformly in n (not computed here).
pub fn degrees(n: usize, chern_top: usize) -> (usize, &'static str) {
    assert!(n >= 1);
    (n * chern_top, "bounded (not computed)")
}
