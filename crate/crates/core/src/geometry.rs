//! Projective-space primitives: points of Pᴺ as unit vectors of C^{N+1},
//! the affine chart U₀, Fubini–Study distance and uniform sampling, and the
//! sin-power integrals behind the covering-count ratio.
//!
//! Conventions. `fs_distance` returns the round metric arccos|⟨p,q⟩| with
//! diameter π/2. The mass-normalized metric (the one under which the ambient
//! form has total mass one, with g₁₁ = 1/π at the chart origin) is this value
//! times [`METRIC_SCALE`] = 1/√π; Hölder-modulus checks apply that constant,
//! everything else works in the round metric.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Conversion from the round metric (diameter π/2) to the mass-normalized
/// Fubini–Study metric: multiply distances by 1/√π.
pub const METRIC_SCALE: f64 = 0.564_189_583_547_756_3;

/// Unit-norm tolerance enforced on [`ProjPoint`] construction.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// |z₀| below which a point counts as lying at infinity of chart U₀.
pub const CHART_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("not a projective point: the zero vector has no direction")]
    ZeroVector,
    #[error("point at infinity of chart U0 (|z0| = {z0_abs:.3e})")]
    PointAtInfinity { z0_abs: f64 },
    #[error("sin-power recurrence is defined for even exponents, got {0}")]
    OddPower(u32),
    #[error("invalid integration interval [{a}, {b}]: need 0 <= a < b <= pi")]
    BadInterval { a: f64, b: f64 },
}

/// A point of Pᴺ stored as a unit-norm homogeneous coordinate vector in
/// C^{N+1}. Two points are equal as projective points iff |⟨p,q⟩| = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjPoint {
    coords: Vec<Complex64>,
}

impl ProjPoint {
    /// Homogeneous coordinates (unit Euclidean norm).
    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Projective dimension N (one less than the coordinate count).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Whether `self` and `other` represent the same projective point,
    /// i.e. |⟨p,q⟩| = 1 within `tol`.
    pub fn same_point(&self, other: &ProjPoint, tol: f64) -> bool {
        (inner_abs(self, other) - 1.0).abs() <= tol
    }
}

/// Affine coordinates w = (z₁/z₀, …, z_N/z₀) of a point in chart U₀.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    w: Vec<Complex64>,
}

impl ChartPoint {
    pub fn new(w: Vec<Complex64>) -> ChartPoint {
        assert!(
            w.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            "chart coordinates must be finite"
        );
        ChartPoint { w }
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.w
    }

    /// Euclidean norm ‖w‖ of the affine coordinates.
    pub fn norm(&self) -> f64 {
        self.w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Verdict of the covering-count ratio test for P^k: is
/// ∫₀^π sin^{2k} / ∫₀^{π/8} sin^{2k} ≤ 8^{k+1}?
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    pub k: usize,
    pub ratio: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Scales a nonzero vector to unit norm.
pub fn normalize(raw: &[Complex64]) -> Result<ProjPoint, GeometryError> {
    let norm_sqr: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    if norm_sqr == 0.0 || !norm_sqr.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    let inv = 1.0 / norm_sqr.sqrt();
    Ok(ProjPoint {
        coords: raw.iter().map(|c| c * inv).collect(),
    })
}

fn inner_abs(p: &ProjPoint, q: &ProjPoint) -> f64 {
    debug_assert_eq!(p.coords.len(), q.coords.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in p.coords.iter().zip(&q.coords) {
        acc += a * b.conj();
    }
    acc.norm()
}

/// Round-metric Fubini–Study distance arccos(clamp(|⟨p,q⟩|, 0, 1)).
/// Symmetric, zero iff the two points coincide, diameter π/2.
pub fn fs_distance(p: &ProjPoint, q: &ProjPoint) -> f64 {
    inner_abs(p, q).clamp(0.0, 1.0).acos()
}

/// sin of the Fubini–Study angle, computed from the cross terms
/// √Σ_{i<j}|p_i q_j − p_j q_i|². Equivalent to fs_distance to O(θ³) for small
/// separations but free of the arccos cancellation that floors computed
/// distances of near-coincident points at √ulp ≈ 1.5e−8; use this whenever a
/// test or match criterion must resolve separations below that.
pub fn sin_distance(p: &ProjPoint, q: &ProjPoint) -> f64 {
    debug_assert_eq!(p.coords.len(), q.coords.len());
    let n = p.coords.len();
    let mut acc = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += (p.coords[i] * q.coords[j] - p.coords[j] * q.coords[i]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Affine coordinates of `p` in chart U₀. Errors when |z₀| ≤ 1e−12.
pub fn to_chart(p: &ProjPoint) -> Result<ChartPoint, GeometryError> {
    let z0 = p.coords[0];
    if z0.norm() <= CHART_TOLERANCE {
        return Err(GeometryError::PointAtInfinity { z0_abs: z0.norm() });
    }
    Ok(ChartPoint {
        w: p.coords[1..].iter().map(|z| z / z0).collect(),
    })
}

/// The point [1 : w₁ : … : w_N], renormalized.
pub fn from_chart(w: &ChartPoint) -> ProjPoint {
    let mut raw = Vec::with_capacity(w.w.len() + 1);
    raw.push(Complex64::new(1.0, 0.0));
    raw.extend_from_slice(&w.w);
    normalize(&raw).expect("chart point is never the zero vector")
}

/// Local Fubini–Study potential g(w) = ½ log(1+‖w‖²) in chart U₀.
pub fn fs_chart_potential(w: &ChartPoint) -> f64 {
    let r2: f64 = w.w.iter().map(|c| c.norm_sqr()).sum();
    0.5 * (1.0 + r2).ln()
}

/// Complex Hessian G_{jl} = ∂²g/∂w_j∂w̄_l of the Fubini–Study chart potential,
/// G = ½[δ/(1+‖w‖²) − w̄⊗w/(1+‖w‖²)²]. Hermitian positive definite.
pub fn fs_metric_hessian(w: &ChartPoint) -> DMatrix<Complex64> {
    let n = w.w.len();
    let r2: f64 = w.w.iter().map(|c| c.norm_sqr()).sum();
    let d1 = 1.0 / (1.0 + r2);
    let d2 = d1 * d1;
    DMatrix::from_fn(n, n, |j, l| {
        let kron = if j == l { Complex64::new(d1, 0.0) } else { Complex64::new(0.0, 0.0) };
        0.5 * (kron - w.w[j].conj() * w.w[l] * d2)
    })
}

/// Draws from the unitarily invariant probability measure on Pᴺ (the
/// Fubini–Study volume with total mass one): an i.i.d. standard complex
/// Gaussian vector, normalized.
pub fn uniform_fs_sample<R: Rng + ?Sized>(rng: &mut R, n_dim: usize) -> ProjPoint {
    assert!(n_dim >= 1, "projective dimension must be at least 1");
    loop {
        let raw: Vec<Complex64> = (0..=n_dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(p) = normalize(&raw) {
            return p;
        }
    }
}

/// Applies a (N+1)×(N+1) matrix to the homogeneous coordinates and
/// renormalizes; with a unitary this is an isometry of Pᴺ.
pub fn apply_unitary(u: &DMatrix<Complex64>, p: &ProjPoint) -> ProjPoint {
    assert_eq!(u.ncols(), p.coords.len(), "matrix size must match coordinates");
    let v = u * DMatrix::from_column_slice(p.coords.len(), 1, &p.coords);
    normalize(v.column(0).as_slice()).expect("unitary image of a unit vector is nonzero")
}

/// Haar-distributed random unitary of the given size (QR of a complex
/// Ginibre matrix with the R-diagonal phase correction).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, size: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(size, size, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..size {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..size {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Forward reduction is used while sin(x)^{−m} stays below e^{LIMIT}; past
/// that the boundary terms cancel against the result and the inverted
/// direction takes over.
const SIN_POWER_FORWARD_LIMIT: f64 = 6.9; // ln(1e3)

/// Start the inverted reduction 2·K above the target with K chosen so the
/// discarded integral is below e^{−38} of the result.
const SIN_POWER_MILLER_DECAY: f64 = 38.0;

/// ∫ₐᵇ sin^m θ dθ for even m via the reduction
/// I_j = −sin^{j−1}θ cos θ / j |ₐᵇ + (j−1)/j · I_{j−2}, evaluated in the
/// direction in which it is numerically stable (see `cumulative_half`).
pub fn sin_power_integral(m: u32, a: f64, b: f64) -> Result<f64, GeometryError> {
    if m % 2 != 0 {
        return Err(GeometryError::OddPower(m));
    }
    if !(0.0 <= a && a < b && b <= PI) || !a.is_finite() || !b.is_finite() {
        return Err(GeometryError::BadInterval { a, b });
    }
    Ok(sin_power_cumulative(m, b) - sin_power_cumulative(m, a))
}

/// I_m(x) = ∫₀ˣ sin^m θ dθ on [0, π], reflected about π/2 so the half-range
/// routine only sees [0, π/2] (no cancellation: I_m(x) = 2·I_m(π/2) − I_m(π−x)
/// and both terms are of the same order).
fn sin_power_cumulative(m: u32, x: f64) -> f64 {
    if x <= FRAC_PI_2 {
        sin_power_half(m, x)
    } else {
        2.0 * wallis(m) - sin_power_half(m, PI - x)
    }
}

/// I_m(π/2) = (π/2)·∏_{j=2,4,…,m} (j−1)/j — the recurrence on [0, π/2], where
/// every boundary term vanishes.
fn wallis(m: u32) -> f64 {
    let mut v = FRAC_PI_2;
    let mut j = 2u32;
    while j <= m {
        v *= (j - 1) as f64 / j as f64;
        j += 2;
    }
    v
}

/// I_m(x) for x ∈ [0, π/2]. Forward reduction from I₀ = x subtracts a
/// boundary term comparable to (j−1)/j·I_{j−2} at every step, which loses
/// sin(x)^{−2} of precision per step; it is therefore only used while
/// sin(x)^{−m} ≤ e^{6.9}. Beyond that the same reduction is run inverted
/// (I_{j−2} = j/(j−1)·(I_j + sin^{j−1}x·cos x/j), all terms positive) from a
/// zero start sufficiently far above m, Miller style: the start error decays
/// by sin²x per step and the arithmetic never cancels.
fn sin_power_half(m: u32, x: f64) -> f64 {
    if m == 0 {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    let s = x.sin();
    let c = x.cos();
    let log_sin = s.ln(); // ≤ 0 on (0, π/2]
    if (m as f64) * (-log_sin) <= SIN_POWER_FORWARD_LIMIT {
        let mut integral = x;
        let mut j = 2u32;
        while j <= m {
            let jf = j as f64;
            let boundary = -((jf - 1.0) * log_sin).exp() * c / jf;
            integral = boundary + (jf - 1.0) / jf * integral;
            j += 2;
        }
        integral
    } else {
        let k_extra = (SIN_POWER_MILLER_DECAY / (-2.0 * log_sin)).ceil() as u32 + 1;
        let mut integral = 0.0f64;
        let mut j = m + 2 * k_extra;
        while j > m {
            let jf = j as f64;
            let boundary = ((jf - 1.0) * log_sin).exp() * c / jf;
            integral = (integral + boundary) * jf / (jf - 1.0);
            j -= 2;
        }
        integral
    }
}

/// The covering-count ratio of P^k: ∫₀^π sin^{2k} / ∫₀^{π/8} sin^{2k},
/// tested against the bound 8^{k+1}.
pub fn covering_ratio(k: usize) -> CoveringReport {
    assert!(k >= 1, "dimension must be at least 1");
    let m = 2 * k as u32;
    let full = sin_power_integral(m, 0.0, PI).expect("valid interval");
    let cap = sin_power_integral(m, 0.0, PI / 8.0).expect("valid interval");
    let ratio = full / cap;
    let bound = 8f64.powi(k as i32 + 1);
    CoveringReport {
        k,
        ratio,
        bound,
        satisfied: ratio <= bound,
    }
}
