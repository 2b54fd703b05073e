//! Potential classes on Pᴺ: quasi-plurisubharmonic functions with declared
//! Hölder data, the max-log potential and its smooth soft-max surrogate, the
//! pairing-log family whose members are the canonical test battery for
//! moderate-measure estimates, Hölder-modulus and positivity-margin
//! estimators, and the hypothesis-threshold formulas.
//!
//! Sign and normalization conventions: points carry unit-norm homogeneous
//! coordinates, so log|z_i| means log(|z_i|/‖z‖); all bounded-above families
//! are normalized to max = 0 on Pᴺ. Evaluation may return −∞ (and for the
//! chart-potential family +∞) on a measure-zero locus; integrators clamp at
//! [`EVAL_FLOOR`] and report how often.

use crate::geometry::{
    self, fs_chart_potential, uniform_fs_sample, ChartPoint, ProjPoint, METRIC_SCALE,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Clamp applied to potential values by Monte-Carlo integrators near a −∞
/// locus; the clamp count is always reported alongside.
pub const EVAL_FLOOR: f64 = -50.0;

/// Largest chart radius a positivity grid may reach; beyond this the chart
/// representation of a projective point degenerates (|z₀|² < 1e−12) and a
/// finite-difference stencil no longer sees the manifold.
pub const MAX_GRID_RADIUS: f64 = 1e6;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("grid touching the chart boundary: rmax + h = {reach:.3e} exceeds {MAX_GRID_RADIUS:.0e}")]
    GridOutsideChart { reach: f64 },
    #[error("potential '{label}' is not finite on the requested grid")]
    NonFiniteOnGrid { label: String },
    #[error("unknown potential label '{0}'")]
    UnknownLabel(String),
    #[error("invalid parameter in potential label '{label}': {message}")]
    BadLabel { label: String, message: String },
}

/// The concrete potential families.
#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// v(z) = max_i log|z_i| — continuous, ω_FS-p.s.h., max 0 at the
    /// coordinate points.
    MaxLog,
    /// φ_a(z) = log|⟨z,a⟩| — ω_FS-p.s.h. with a −∞ locus on the hyperplane
    /// ⟨z,a⟩ = 0 and max 0 at a.
    PairingLog { a: ProjPoint },
    /// v_τ(z) = τ·log Σᵢ |z_i|^{1/τ} − max(0, (τ−½)log(N+1)) — smooth in
    /// |z_i|², within τ·log(N+1) of MaxLog uniformly.
    SoftMax { tau: f64 },
    /// c times another potential.
    Scaled { c: f64, inner: Box<Potential> },
    /// c·(½log(1+‖w‖²) in chart U₀) = −c·log|z₀| — the chart potential of
    /// c·ω_FS; smooth away from {z₀ = 0}, used as a Monge–Ampère oracle.
    FsChart { c: f64 },
    /// u ≡ 0.
    Zero,
}

/// A real function on Pᴺ with declared Hölder data (exponent ρ, modulus ξ)
/// and declared ε for ε·ω_FS-plurisubharmonicity. A modulus of +∞ means no
/// Hölder claim is made.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    dim: usize,
    pub holder_exponent: f64,
    pub claimed_modulus: f64,
    pub claimed_epsilon: f64,
    pub label: String,
}

impl Potential {
    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Projective dimension N of the domain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// u ≡ 0 on Pᴺ.
    pub fn zero(n_dim: usize) -> Potential {
        Potential {
            kind: PotentialKind::Zero,
            dim: n_dim,
            holder_exponent: 0.99,
            claimed_modulus: 0.0,
            claimed_epsilon: 0.0,
            label: "zero".into(),
        }
    }

    /// c·u. Hölder modulus and ε scale linearly (c ≥ 0).
    pub fn scaled(c: f64, inner: Potential) -> Potential {
        assert!(c >= 0.0, "scaling must be nonnegative");
        Potential {
            dim: inner.dim,
            holder_exponent: inner.holder_exponent,
            claimed_modulus: c * inner.claimed_modulus,
            claimed_epsilon: c * inner.claimed_epsilon,
            label: format!("scaled:{c}:{}", inner.label),
            kind: PotentialKind::Scaled { c, inner: Box::new(inner) },
        }
    }

    /// The chart potential of c·ω_FS (see [`PotentialKind::FsChart`]).
    pub fn fs_chart_scaled(c: f64, n_dim: usize) -> Potential {
        Potential {
            kind: PotentialKind::FsChart { c },
            dim: n_dim,
            holder_exponent: 0.99,
            claimed_modulus: f64::INFINITY,
            claimed_epsilon: 0.0,
            label: format!("fs-scaled:{c}"),
        }
    }

    /// Evaluates the potential at a point. May return ±∞ on the family's
    /// measure-zero singular locus (see module docs); never NaN.
    pub fn eval(&self, z: &ProjPoint) -> f64 {
        debug_assert_eq!(z.dim(), self.dim, "dimension mismatch");
        match &self.kind {
            PotentialKind::MaxLog => {
                let mut best = f64::NEG_INFINITY;
                for c in z.coords() {
                    best = best.max(c.norm());
                }
                best.ln()
            }
            PotentialKind::PairingLog { a } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (zi, ai) in z.coords().iter().zip(a.coords()) {
                    acc += zi * ai.conj();
                }
                acc.norm().ln()
            }
            PotentialKind::SoftMax { tau } => {
                let inv_tau = 1.0 / tau;
                let sum: f64 = z
                    .coords()
                    .iter()
                    .map(|c| {
                        let r = c.norm();
                        if r == 0.0 { 0.0 } else { (r.ln() * inv_tau).exp() }
                    })
                    .sum();
                tau * sum.ln() - softmax_offset(self.dim, *tau)
            }
            PotentialKind::Scaled { c, inner } => c * inner.eval(z),
            PotentialKind::FsChart { c } => {
                let z0 = z.coords()[0].norm();
                -c * z0.ln()
            }
            PotentialKind::Zero => 0.0,
        }
    }

    /// Whether the Monge–Ampère density of this potential exists pointwise
    /// almost everywhere as a smooth determinant (finite-difference Hessians
    /// are meaningful). The kinked max-log and the −∞-locus pairing-log are
    /// not usable; callers switch to the soft-max surrogate.
    pub fn is_smooth_for_ma(&self) -> bool {
        match &self.kind {
            PotentialKind::MaxLog | PotentialKind::PairingLog { .. } => false,
            PotentialKind::Scaled { inner, .. } => inner.is_smooth_for_ma(),
            PotentialKind::SoftMax { .. } | PotentialKind::FsChart { .. } | PotentialKind::Zero => {
                true
            }
        }
    }

    /// The α at which ∫exp(−α·u)dω_FS starts to diverge (Lelong-number
    /// threshold): 2 for the pairing-log family on any Pᴺ, +∞ for families
    /// bounded below.
    pub fn divergence_alpha(&self) -> f64 {
        match &self.kind {
            PotentialKind::PairingLog { .. } => 2.0,
            PotentialKind::Scaled { c, inner } => {
                if *c == 0.0 { f64::INFINITY } else { inner.divergence_alpha() / c }
            }
            _ => f64::INFINITY,
        }
    }

    /// Constructs a potential from its config label: `maxlog`, `zero`,
    /// `softmax:<tau>`, `pairing:<coordinate index>`, `scaled:<c>:<inner>`.
    pub fn from_label(label: &str, n_dim: usize) -> Result<Potential, PotentialError> {
        let bad = |message: String| PotentialError::BadLabel { label: label.into(), message };
        if label == "maxlog" {
            return Ok(maxlog_potential(n_dim));
        }
        if label == "zero" {
            return Ok(Potential::zero(n_dim));
        }
        if let Some(rest) = label.strip_prefix("softmax:") {
            let tau: f64 = rest.parse().map_err(|_| bad(format!("bad tau '{rest}'")))?;
            if tau <= 0.0 {
                return Err(bad("tau must be positive".into()));
            }
            return Ok(softmax_potential(n_dim, tau));
        }
        if let Some(rest) = label.strip_prefix("pairing:") {
            let idx: usize = rest.parse().map_err(|_| bad(format!("bad index '{rest}'")))?;
            if idx > n_dim {
                return Err(bad(format!("coordinate index {idx} exceeds dimension {n_dim}")));
            }
            let mut raw = vec![Complex64::new(0.0, 0.0); n_dim + 1];
            raw[idx] = Complex64::new(1.0, 0.0);
            let a = geometry::normalize(&raw).expect("unit vector");
            return Ok(pairing_log_potential(a).base);
        }
        if let Some(rest) = label.strip_prefix("scaled:") {
            let (c_str, inner_label) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected scaled:<c>:<inner>".into()))?;
            let c: f64 = c_str.parse().map_err(|_| bad(format!("bad scale '{c_str}'")))?;
            if c < 0.0 {
                return Err(bad("scale must be nonnegative".into()));
            }
            let inner = Potential::from_label(inner_label, n_dim)?;
            return Ok(Potential::scaled(c, inner));
        }
        Err(PotentialError::UnknownLabel(label.into()))
    }
}

fn softmax_offset(n_dim: usize, tau: f64) -> f64 {
    // max over the sphere of τ·log Σ|z_i|^{1/τ} is attained at the diagonal
    // point when 1/τ < 2 and at coordinate points (value 0) otherwise.
    (0.0f64).max((tau - 0.5) * ((n_dim + 1) as f64).ln())
}

/// A potential normalized into class F: quasi-p.s.h. with ddᶜ ≥ −ω_FS and
/// max = 0. Evaluation subtracts `normalization_offset` from the base.
#[derive(Debug, Clone)]
pub struct ClassFFunction {
    pub base: Potential,
    pub normalization_offset: f64,
}

impl ClassFFunction {
    pub fn eval(&self, z: &ProjPoint) -> f64 {
        self.base.eval(z) - self.normalization_offset
    }

    pub fn label(&self) -> &str {
        &self.base.label
    }
}

/// v(z) = maxᵢ log(|z_i|/‖z‖) on Pᴺ: continuous, ≤ 0 with equality exactly at
/// the coordinate points, ω_FS-p.s.h., Hölder with modulus ≤ √π·N in the
/// mass-normalized metric (any exponent ρ < 1; the declared data uses 0.99).
pub fn maxlog_potential(n_dim: usize) -> Potential {
    assert!(n_dim >= 1);
    Potential {
        kind: PotentialKind::MaxLog,
        dim: n_dim,
        holder_exponent: 0.99,
        claimed_modulus: std::f64::consts::PI.sqrt() * n_dim as f64,
        claimed_epsilon: 1.0,
        label: "maxlog".into(),
    }
}

/// φ_a(z) = log|⟨z,a⟩| as a class-F member: max 0 at a, ω_FS-p.s.h., −∞ on
/// the hyperplane orthogonal to a. No finite Hölder modulus.
pub fn pairing_log_potential(a: ProjPoint) -> ClassFFunction {
    let dim = a.dim();
    ClassFFunction {
        base: Potential {
            kind: PotentialKind::PairingLog { a },
            dim,
            holder_exponent: 0.99,
            claimed_modulus: f64::INFINITY,
            claimed_epsilon: 1.0,
            label: "pairing".into(),
        },
        normalization_offset: 0.0,
    }
}

/// Smooth surrogate v_τ for the max-log potential (log-sum-exp with
/// temperature τ, shifted so sup ≤ 0): ‖v_τ − v‖_∞ ≤ τ·log(N+1), ω_FS-p.s.h.
pub fn softmax_potential(n_dim: usize, tau: f64) -> Potential {
    assert!(n_dim >= 1);
    assert!(tau > 0.0, "smoothing temperature must be positive");
    Potential {
        kind: PotentialKind::SoftMax { tau },
        dim: n_dim,
        holder_exponent: 0.99,
        claimed_modulus: f64::INFINITY,
        claimed_epsilon: 1.0,
        label: format!("softmax:{tau}"),
    }
}

/// Gaussian perturbation of a projective point: normalize(p + σ·g) with g a
/// standard complex Gaussian vector. Rotationally symmetric around p, hence a
/// symmetric proposal kernel on Pᴺ.
pub fn perturb_point<R: Rng + ?Sized>(rng: &mut R, p: &ProjPoint, sigma: f64) -> ProjPoint {
    loop {
        let raw: Vec<Complex64> = p
            .coords()
            .iter()
            .map(|c| {
                c + sigma
                    * Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
            .collect();
        if let Ok(q) = geometry::normalize(&raw) {
            return q;
        }
    }
}

fn holder_ratio(u: &Potential, rho: f64, x: &ProjPoint, y: &ProjPoint) -> Option<f64> {
    let d = METRIC_SCALE * geometry::fs_distance(x, y);
    if d == 0.0 {
        return None;
    }
    let ux = u.eval(x);
    let uy = u.eval(y);
    if !ux.is_finite() || !uy.is_finite() {
        return None;
    }
    Some((ux - uy).abs() / d.powf(rho))
}

fn holder_raw_scan<R: Rng + ?Sized>(
    u: &Potential,
    rho: f64,
    pairs: usize,
    rng: &mut R,
) -> (f64, Option<(ProjPoint, ProjPoint)>) {
    let mut best = 0.0f64;
    let mut best_pair = None;
    for _ in 0..pairs {
        let x = uniform_fs_sample(rng, u.dim());
        let y = uniform_fs_sample(rng, u.dim());
        if let Some(r) = holder_ratio(u, rho, &x, &y) {
            if r > best {
                best = r;
                best_pair = Some((x, y));
            }
        }
    }
    (best, best_pair)
}

/// Estimates sup |u(x)−u(y)| / d(x,y)^ρ (d in the mass-normalized metric) by
/// a random-pair scan followed by a local stochastic refinement around the
/// best pair. Always a lower bound on the true modulus.
pub fn holder_modulus_estimate<R: Rng + ?Sized>(
    u: &Potential,
    rho: f64,
    pairs: usize,
    rng: &mut R,
) -> f64 {
    assert!(rho > 0.0 && rho <= 1.0, "exponent must be in (0, 1]");
    assert!(pairs >= 1);
    let (mut best, best_pair) = holder_raw_scan(u, rho, pairs, rng);
    let (mut x, mut y) = match best_pair {
        Some(p) => p,
        None => return best,
    };
    // Hill climb with a step size that halves every 50 proposals.
    let mut sigma = 0.3;
    for it in 0..400 {
        if it % 50 == 49 {
            sigma *= 0.5;
        }
        let xp = perturb_point(rng, &x, sigma);
        let yp = perturb_point(rng, &y, sigma);
        if let Some(r) = holder_ratio(u, rho, &xp, &yp) {
            if r > best {
                best = r;
                x = xp;
                y = yp;
            }
        }
    }
    best
}

/// Specification of the finite-difference grid for positivity margins: the
/// chart region ‖w‖ ≤ rmax sampled with `points_per_axis` nodes per real
/// axis (tensor grid on P¹, a deterministic low-discrepancy scatter of
/// points_per_axis² points in higher dimension), stencil step `h`.
#[derive(Debug, Clone)]
pub struct ChartGrid {
    pub rmax: f64,
    pub points_per_axis: usize,
    pub h: f64,
}

impl Default for ChartGrid {
    fn default() -> Self {
        ChartGrid { rmax: 3.0, points_per_axis: 21, h: 1e-3 }
    }
}

impl ChartGrid {
    pub fn with_step(h: f64) -> ChartGrid {
        ChartGrid { h, ..ChartGrid::default() }
    }

    fn points(&self, n_dim: usize) -> Vec<ChartPoint> {
        let m = self.points_per_axis;
        if n_dim == 1 {
            let mut pts = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let x = -self.rmax + 2.0 * self.rmax * i as f64 / (m - 1) as f64;
                    let y = -self.rmax + 2.0 * self.rmax * j as f64 / (m - 1) as f64;
                    pts.push(ChartPoint::new(vec![Complex64::new(x, y)]));
                }
            }
            pts
        } else {
            // Halton scatter over the polydisc [−rmax, rmax]^{2N}.
            let primes = [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            assert!(2 * n_dim <= primes.len(), "scatter grid supports N ≤ 8");
            let count = m * m;
            (0..count)
                .map(|i| {
                    let w: Vec<Complex64> = (0..n_dim)
                        .map(|d| {
                            let x = self.rmax * (2.0 * van_der_corput(i as u32 + 1, primes[2 * d]) - 1.0);
                            let y = self.rmax
                                * (2.0 * van_der_corput(i as u32 + 1, primes[2 * d + 1]) - 1.0);
                            Complex64::new(x, y)
                        })
                        .collect();
                    ChartPoint::new(w)
                })
                .collect()
        }
    }
}

fn van_der_corput(mut i: u32, base: u32) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        result += (i % base) as f64 * f;
        i /= base;
        f /= base as f64;
    }
    result
}

/// Centered-difference complex Hessian H_{jl} = ∂²f/∂w_j∂w̄_l of a real
/// function of N complex chart variables:
/// H_{jl} = ¼[(f_{x_jx_l} + f_{y_jy_l}) + i·(f_{x_jy_l} − f_{y_jx_l})],
/// symmetrized to exactly Hermitian form.
pub fn fd_complex_hessian<F: Fn(&ChartPoint) -> f64>(
    f: F,
    w: &ChartPoint,
    h: f64,
) -> DMatrix<Complex64> {
    let n = w.coords().len();
    let center = f(w);
    let shift = |da: usize, ha: f64, db: usize, hb: f64| -> f64 {
        let mut coords = w.coords().to_vec();
        // real axis index 2j ↦ Re w_j, 2j+1 ↦ Im w_j
        let apply = |coords: &mut [Complex64], axis: usize, step: f64| {
            if axis % 2 == 0 {
                coords[axis / 2].re += step;
            } else {
                coords[axis / 2].im += step;
            }
        };
        apply(&mut coords, da, ha);
        apply(&mut coords, db, hb);
        f(&ChartPoint::new(coords))
    };
    let second = |a: usize| -> f64 {
        (shift(a, h, a, 0.0) - 2.0 * center + shift(a, -h, a, 0.0)) / (h * h)
    };
    let mixed = |a: usize, b: usize| -> f64 {
        (shift(a, h, b, h) - shift(a, h, b, -h) - shift(a, -h, b, h) + shift(a, -h, b, -h))
            / (4.0 * h * h)
    };
    let mut hess = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let fxx = second(2 * j);
        let fyy = second(2 * j + 1);
        hess[(j, j)] = Complex64::new(0.25 * (fxx + fyy), 0.0);
        for l in (j + 1)..n {
            let re = 0.25 * (mixed(2 * j, 2 * l) + mixed(2 * j + 1, 2 * l + 1));
            let im = 0.25 * (mixed(2 * j, 2 * l + 1) - mixed(2 * j + 1, 2 * l));
            hess[(j, l)] = Complex64::new(re, im);
            hess[(l, j)] = Complex64::new(re, -im);
        }
    }
    hess
}

/// Smallest eigenvalue over the grid of the finite-difference complex Hessian
/// of u∘from_chart + ε·½log(1+‖w‖²). A value ≥ −tolerance certifies
/// ε·ω_FS-plurisubharmonicity numerically (the chart potential of ω_FS is
/// exactly ½log(1+‖w‖²)).
pub fn qpsh_margin(
    u: &Potential,
    epsilon: f64,
    grid: &ChartGrid,
) -> Result<f64, PotentialError> {
    assert!(epsilon >= 0.0);
    if grid.rmax + grid.h >= MAX_GRID_RADIUS {
        return Err(PotentialError::GridOutsideChart { reach: grid.rmax + grid.h });
    }
    let f = |w: &ChartPoint| -> f64 {
        u.eval(&geometry::from_chart(w)) + epsilon * fs_chart_potential(w)
    };
    let mut margin = f64::INFINITY;
    let mut evaluated = 0usize;
    'points: for w in grid.points(u.dim()) {
        // Skip stencils that touch a singular locus of u.
        let probe = f(&w);
        if !probe.is_finite() {
            continue;
        }
        let hess = fd_complex_hessian(&f, &w, grid.h);
        for entry in hess.iter() {
            if !entry.re.is_finite() || !entry.im.is_finite() {
                continue 'points;
            }
        }
        let min_eig = if u.dim() == 1 {
            hess[(0, 0)].re
        } else {
            hess.symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |acc, &e| acc.min(e))
        };
        margin = margin.min(min_eig);
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(PotentialError::NonFiniteOnGrid { label: u.label.clone() });
    }
    Ok(margin)
}

/// The measure-perturbation admissibility threshold on c:
/// c > (12/ρ)^{2·chern_top/k!}.
pub fn theorem11_c_threshold(rho: f64, chern_top: u32, k: usize) -> f64 {
    assert!(rho > 0.0 && rho < 1.0, "Hölder exponent must be in (0,1)");
    assert!(chern_top >= 1);
    let k_factorial: f64 = (1..=k).map(|i| i as f64).product();
    (12.0 / rho).powf(2.0 * chern_top as f64 / k_factorial)
}

/// The smallness threshold for the quasi-p.s.h. perturbation:
/// ε < β₀·k⁻³·(ρ/12)^{2k}.
pub fn prop211_epsilon_threshold(k: usize, rho: f64, beta0: f64) -> f64 {
    assert!(k >= 1);
    assert!(rho > 0.0 && rho < 1.0);
    assert!(beta0 > 0.0);
    beta0 * (k as f64).powi(-3) * (rho / 12.0).powi(2 * k as i32)
}
