//! Zero sets of sections on P¹ and the discrepancy statistic: the normalized
//! zero current (1/n)[Z_s] pairs against C² test functions as the average of
//! ψ over the roots minus ∫ψ ω_FS. Roots come from a balanced
//! companion-matrix eigenvalue computation with Newton refinement and a
//! relative-backward-error certificate; leading coefficients that vanish
//! exactly shift multiplicity to the point at infinity.

use crate::geometry::{self, ProjPoint};
use crate::sections::Section;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Largest degree the companion-matrix extractor accepts.
pub const MAX_DEGREE: usize = 256;
/// Relative backward error above which extraction is reported ill-conditioned.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ZerosError {
    #[error("ill-conditioned root extraction: relative residual {residual:.3e}")]
    IllConditioned { residual: f64 },
    #[error("degree {0} exceeds the extractor cap {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("eigenvalue iteration failed to converge")]
    EigenvalueFailure,
}

/// The zero set of a degree-n section: points with multiplicities, total
/// count (with multiplicity) always n.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub points: Vec<(ProjPoint, usize)>,
    pub total: usize,
}

/// Parlett–Reinsch balancing by powers of two (exact rescalings, no rounding)
/// to equalize row and column norms before the eigenvalue iteration.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c: f64 = 0.0;
            let mut r: f64 = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0f64;
            let mut cc = c;
            let s = c + r;
            while cc < r / radix {
                f *= radix;
                cc *= radix * radix;
            }
            while cc > r * radix {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a complex upper Hessenberg matrix by explicit single-shift
/// QR iteration: Wilkinson shifts, an exceptional shift every tenth stalled
/// sweep, and a hard cap of thirty sweeps per eigenvalue. Companion matrices
/// of structured sections include unitary permutation-like cases (cyclotomic
/// polynomials, involutions) whose equal-modulus spectra make naive shift
/// choices cycle forever; the exceptional branch breaks those orbits.
fn hessenberg_eigenvalues(h: &mut DMatrix<Complex64>) -> Result<Vec<Complex64>, ZerosError> {
    let n = h.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    if n == 0 {
        return Ok(eig);
    }
    let hnorm: f64 = h.iter().map(|c| c.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut l = n - 1;
    let mut its = 0u32;
    loop {
        // Deflate converged trailing 1×1 blocks; find the active block start.
        let q = loop {
            if l == 0 {
                eig[0] = h[(0, 0)];
                return Ok(eig);
            }
            let mut q = 0usize;
            for i in (1..=l).rev() {
                let s = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
                let s = if s == 0.0 { hnorm } else { s };
                if h[(i, i - 1)].norm() <= f64::EPSILON * s {
                    h[(i, i - 1)] = zero;
                    q = i;
                    break;
                }
            }
            if q == l {
                eig[l] = h[(l, l)];
                l -= 1;
                its = 0;
            } else {
                break q;
            }
        };
        its += 1;
        if its > 30 {
            return Err(ZerosError::EigenvalueFailure);
        }
        let shift = if its % 10 == 0 {
            let sub = h[(l, l - 1)].norm()
                + if l >= q + 2 { h[(l - 1, l - 2)].norm() } else { 0.0 };
            h[(l, l)] + Complex64::new(0.75 * sub, 0.4375 * sub)
        } else {
            // Wilkinson: the eigenvalue of the trailing 2×2 closest to h[l,l].
            let a = h[(l - 1, l - 1)];
            let b = h[(l - 1, l)];
            let c = h[(l, l - 1)];
            let d = h[(l, l)];
            let t = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
            if (t + disc - d).norm() < (t - disc - d).norm() { t + disc } else { t - disc }
        };
        qr_sweep(h, q, l, shift);
    }
}

/// One explicit shifted QR step H − σI = QR, H ← RQ + σI on the Hessenberg
/// block rows/columns q..=l, via complex Givens rotations.
fn qr_sweep(h: &mut DMatrix<Complex64>, q: usize, l: usize, shift: Complex64) {
    for i in q..=l {
        h[(i, i)] -= shift;
    }
    let mut rot = Vec::with_capacity(l - q);
    for k in q..l {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        rot.push((c, s));
        for j in k..=l {
            let top = h[(k, j)];
            let bot = h[(k + 1, j)];
            h[(k, j)] = c.conj() * top + s.conj() * bot;
            h[(k + 1, j)] = -s * top + c * bot;
        }
    }
    for (idx, &(c, s)) in rot.iter().enumerate() {
        let k = q + idx;
        for i in q..=(k + 1).min(l) {
            let left = h[(i, k)];
            let right = h[(i, k + 1)];
            h[(i, k)] = c * left + s * right;
            h[(i, k + 1)] = -s.conj() * left + c.conj() * right;
        }
    }
    for i in q..=l {
        h[(i, i)] += shift;
    }
}

/// Horner evaluation of p, p′ and the local scale Σ|a_j||z|^j whose ratio to
/// |p(z)| is the relative backward error.
fn eval_and_deriv(a: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let n = a.len() - 1;
    let mut p = a[n];
    let mut dp = Complex64::new(0.0, 0.0);
    let mut scale = a[n].norm();
    let az = z.norm();
    for j in (0..n).rev() {
        dp = dp * z + p;
        p = p * z + a[j];
        scale = scale * az + a[j].norm();
    }
    (p, dp, scale)
}

fn newton_steps(a: &[Complex64], mut r: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (p, dp, scale) = eval_and_deriv(a, r);
        if p.norm() <= 1e-15 * scale || dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        r -= step;
    }
    r
}

/// Newton refinement that switches to the reversed polynomial at 1/r for
/// |r| > 1, so powers of the root magnitude never overflow at high degree.
fn polish_root(a: &[Complex64], rev: &[Complex64], r: Complex64) -> Complex64 {
    if r.norm() <= 1.0 {
        newton_steps(a, r)
    } else {
        let u = newton_steps(rev, r.inv());
        if u.norm() == 0.0 { r } else { u.inv() }
    }
}

fn backward_error(a: &[Complex64], rev: &[Complex64], r: Complex64) -> f64 {
    let (p, _, scale) = if r.norm() <= 1.0 {
        eval_and_deriv(a, r)
    } else {
        eval_and_deriv(rev, r.inv())
    };
    p.norm() / scale
}

/// Computes the zero set of a section: eigenvalues of the balanced companion
/// matrix of the monic chart polynomial, Newton-polished, with the residual
/// certificate `max |p(r)|/Σ|a_j||r|^j ≤ 1e−6` enforced.
///
/// Only coefficients that vanish exactly shift multiplicity to [0:1] (or to
/// the chart origin). A thresholded strip would misplace genuine roots: for
/// the monomial-weighted ensembles the end coefficients sit twenty orders of
/// magnitude below the coefficient norm while the nearby roots are at chart
/// radius O(1), so "negligible relative to ‖a‖" is not negligible relative to
/// the local scale that positions those roots. Tiny nonzero leading
/// coefficients instead produce genuine huge eigenvalues, polished on the
/// reversed polynomial and stored well-scaled as [1/r : 1].
pub fn roots(s: &Section) -> Result<ZeroSet, ZerosError> {
    let n = s.space().degree();
    if n > MAX_DEGREE {
        return Err(ZerosError::DegreeTooLarge(n));
    }
    let a = s.chart_coefficients();
    let mut deg = n;
    while deg > 0 && a[deg].norm() == 0.0 {
        deg -= 1;
    }
    let infinity_multiplicity = n - deg;
    // Trailing (constant-side) exact zeros are roots of the chart polynomial
    // at the origin; factoring them out up front also keeps nilpotent
    // companion blocks (pure monomials) away from the QR iteration.
    let mut low = 0usize;
    while low < deg && a[low].norm() == 0.0 {
        low += 1;
    }
    let mut points: Vec<(ProjPoint, usize)> = Vec::with_capacity(deg - low + 2);
    if low > 0 {
        let origin = geometry::normalize(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            .expect("unit vector");
        points.push((origin, low));
    }
    if deg > low {
        let trunc = &a[low..=deg];
        let m = deg - low;
        let rev: Vec<Complex64> = trunc.iter().rev().copied().collect();
        let lead = trunc[m];
        let mut companion = DMatrix::<Complex64>::zeros(m, m);
        for i in 1..m {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..m {
            let entry = -trunc[i] / lead;
            if !entry.re.is_finite() || !entry.im.is_finite() {
                // |a_i/a_deg| past the f64 range: no representable companion
                return Err(ZerosError::IllConditioned { residual: f64::INFINITY });
            }
            companion[(i, m - 1)] = entry;
        }
        balance(&mut companion);
        let eigenvalues = hessenberg_eigenvalues(&mut companion)?;
        let mut worst = 0.0f64;
        for r0 in eigenvalues.iter() {
            let r = polish_root(trunc, &rev, *r0);
            worst = worst.max(backward_error(trunc, &rev, r));
            let p = if r.norm() <= 1.0 {
                geometry::normalize(&[Complex64::new(1.0, 0.0), r])
            } else {
                // build from [1/r : 1] to stay well-scaled for huge roots
                geometry::normalize(&[r.inv(), Complex64::new(1.0, 0.0)])
            }
            .expect("root coordinates are finite and nonzero");
            points.push((p, 1));
        }
        if worst > RESIDUAL_TOLERANCE {
            return Err(ZerosError::IllConditioned { residual: worst });
        }
    }
    if infinity_multiplicity > 0 {
        let infinity = geometry::normalize(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .expect("unit vector");
        points.push((infinity, infinity_multiplicity));
    }
    Ok(ZeroSet { points, total: n })
}

/// A C² test function on P¹, smooth in homogeneous coordinates, with its
/// grid-estimated C² norm and exact Fubini–Study integral attached.
#[derive(Clone)]
pub struct TestFunction {
    kind: BatteryKind,
    pub c2_norm: f64,
    pub fs_integral: f64,
    pub label: String,
}

#[derive(Clone)]
enum BatteryKind {
    /// ψ ≡ 1
    One,
    /// |z₁|²/‖z‖²
    SecondCoord,
    /// Re(z₁·z̄₀)/‖z‖²
    RealCross,
    /// Im(z₁·z̄₀)/‖z‖²
    ImagCross,
    /// |z₁|²|z₀|²/‖z‖⁴
    ProductSq,
    Custom(Arc<dyn Fn(&ProjPoint) -> f64 + Send + Sync>),
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("c2_norm", &self.c2_norm)
            .field("fs_integral", &self.fs_integral)
            .finish()
    }
}

impl TestFunction {
    pub fn eval(&self, p: &ProjPoint) -> f64 {
        let z = p.coords();
        match &self.kind {
            BatteryKind::One => 1.0,
            BatteryKind::SecondCoord => z[1].norm_sqr(),
            BatteryKind::RealCross => (z[1] * z[0].conj()).re,
            BatteryKind::ImagCross => (z[1] * z[0].conj()).im,
            BatteryKind::ProductSq => z[1].norm_sqr() * z[0].norm_sqr(),
            BatteryKind::Custom(f) => f(p),
        }
    }

    /// Builds a test function from a closure; the C² norm is grid-estimated
    /// and the FS integral must be supplied by the caller.
    pub fn custom<F: Fn(&ProjPoint) -> f64 + Send + Sync + 'static>(
        f: F,
        label: &str,
        fs_integral: f64,
        grid: &C2Grid,
    ) -> TestFunction {
        let kind = BatteryKind::Custom(Arc::new(f));
        let probe = TestFunction { kind: kind.clone(), c2_norm: 1.0, fs_integral, label: label.into() };
        let c2 = c2_norm(&probe, grid);
        TestFunction { kind, c2_norm: c2, fs_integral, label: label.into() }
    }
}

/// Grid specification for C²-norm estimation: `points_per_axis`² points over
/// the square [−extent, extent]² in each of the two standard charts (extent 1
/// covers P¹), finite-difference step `h`.
#[derive(Debug, Clone)]
pub struct C2Grid {
    pub points_per_axis: usize,
    pub extent: f64,
    pub h: f64,
}

impl Default for C2Grid {
    fn default() -> Self {
        C2Grid { points_per_axis: 41, extent: 1.0, h: 1e-3 }
    }
}

/// sup|ψ| + sup‖∇ψ‖ + sup‖Hess ψ‖ over both charts, derivatives measured in
/// the round FS metric: with the conformal factor (1+r²)⁻² against the flat
/// chart metric, gradients scale by (1+r²) and Hessian magnitudes (spectral
/// norm, Christoffel terms omitted by convention) by (1+r²)².
pub fn c2_norm(psi: &TestFunction, grid: &C2Grid) -> f64 {
    let h = grid.h;
    let m = grid.points_per_axis;
    let mut sup_val = 0.0f64;
    let mut sup_grad = 0.0f64;
    let mut sup_hess = 0.0f64;
    for chart in 0..2 {
        // chart 0: w ↦ [1:w]; chart 1: w ↦ [w:1]
        let embed = |x: f64, y: f64| -> ProjPoint {
            let w = Complex64::new(x, y);
            let one = Complex64::new(1.0, 0.0);
            let coords = if chart == 0 { [one, w] } else { [w, one] };
            geometry::normalize(&coords).expect("chart point")
        };
        let f = |x: f64, y: f64| psi.eval(&embed(x, y));
        for i in 0..m {
            for j in 0..m {
                let x = -grid.extent + 2.0 * grid.extent * i as f64 / (m - 1) as f64;
                let y = -grid.extent + 2.0 * grid.extent * j as f64 / (m - 1) as f64;
                let conformal = 1.0 + x * x + y * y;
                let center = f(x, y);
                sup_val = sup_val.max(center.abs());
                let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
                let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
                sup_grad = sup_grad.max(conformal * (fx * fx + fy * fy).sqrt());
                let fxx = (f(x + h, y) - 2.0 * center + f(x - h, y)) / (h * h);
                let fyy = (f(x, y + h) - 2.0 * center + f(x, y - h)) / (h * h);
                let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h)
                    + f(x - h, y - h))
                    / (4.0 * h * h);
                // spectral norm of the symmetric 2×2 [[fxx, fxy], [fxy, fyy]]
                let half_tr = 0.5 * (fxx + fyy);
                let disc = (0.5 * (fxx - fyy)).hypot(fxy);
                let spec = half_tr.abs() + disc;
                sup_hess = sup_hess.max(conformal * conformal * spec);
            }
        }
    }
    sup_val + sup_grad + sup_hess
}

/// The five-member default battery with exact FS integrals 1, ½, 0, 0, 1/6
/// and grid-estimated C² norms.
pub fn default_battery(grid: &C2Grid) -> Vec<TestFunction> {
    let make = |kind: BatteryKind, label: &str, fs_integral: f64| {
        let probe = TestFunction { kind, c2_norm: 1.0, fs_integral, label: label.into() };
        let c2 = c2_norm(&probe, grid);
        TestFunction { c2_norm: c2, ..probe }
    };
    vec![
        make(BatteryKind::One, "one", 1.0),
        make(BatteryKind::SecondCoord, "abs2", 0.5),
        make(BatteryKind::RealCross, "re-cross", 0.0),
        make(BatteryKind::ImagCross, "im-cross", 0.0),
        make(BatteryKind::ProductSq, "prod-sq", 1.0 / 6.0),
    ]
}

/// ⟨(1/n)[Z] − ω_FS, ψ⟩ = (1/n)Σ_{roots} ψ − ∫ψ ω_FS.
pub fn pair_zero_current(z: &ZeroSet, psi: &TestFunction, n: usize) -> f64 {
    assert_eq!(z.total, n, "zero set does not match the declared degree");
    let mut acc = 0.0;
    for (p, mult) in &z.points {
        acc += *mult as f64 * psi.eval(p);
    }
    acc / n as f64 - psi.fs_integral
}

/// One sample's pairing row: per-ψ pairings and the max of |pairing|/‖ψ‖_C²,
/// with provenance fields filled by the orchestration layer.
#[derive(Debug, Clone)]
pub struct DiscrepancyRecord {
    pub n: usize,
    pub sample_id: u64,
    pub pairings: Vec<f64>,
    pub discrepancy: f64,
    pub seed: u64,
    pub flagged: bool,
}

impl DiscrepancyRecord {
    pub fn with_provenance(mut self, sample_id: u64, seed: u64) -> DiscrepancyRecord {
        self.sample_id = sample_id;
        self.seed = seed;
        self
    }
}

/// Computes the discrepancy record of one section against a battery. Root
/// extraction failures yield a flagged record with NaN statistics rather
/// than an abort.
pub fn discrepancy(s: &Section, battery: &[TestFunction]) -> DiscrepancyRecord {
    assert!(!battery.is_empty(), "battery must be nonempty");
    for psi in battery {
        assert!(psi.c2_norm > 0.0, "battery norms must be positive");
    }
    let n = s.space().degree();
    match roots(s) {
        Ok(zero_set) => {
            let pairings: Vec<f64> =
                battery.iter().map(|psi| pair_zero_current(&zero_set, psi, n)).collect();
            let disc = pairings
                .iter()
                .zip(battery)
                .map(|(p, psi)| p.abs() / psi.c2_norm)
                .fold(0.0f64, f64::max);
            DiscrepancyRecord { n, sample_id: 0, pairings, discrepancy: disc, seed: 0, flagged: false }
        }
        Err(_) => DiscrepancyRecord {
            n,
            sample_id: 0,
            pairings: vec![f64::NAN; battery.len()],
            discrepancy: f64::NAN,
            seed: 0,
            flagged: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_unitary, fs_distance, normalize, random_unitary, sin_distance};
    use crate::sections::SectionSpace;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn section_from_chart_poly(n: usize, chart: &[Complex64]) -> Section {
        // coefficients c_j = a_j / ω_j reproduce the chart polynomial exactly
        let space = SectionSpace::new(n);
        let coeffs: Vec<Complex64> = chart
            .iter()
            .zip(space.basis_weights())
            .map(|(a, &w)| a / w)
            .collect();
        Section::new(space, coeffs).unwrap()
    }

    fn min_distance_to(set: &ZeroSet, target: &ProjPoint) -> f64 {
        set.points
            .iter()
            .map(|(p, _)| sin_distance(p, target))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn factored_quadratic() {
        let s = section_from_chart_poly(2, &[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let z = roots(&s).unwrap();
        assert_eq!(z.total, 2);
        let plus = normalize(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let minus = normalize(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!(min_distance_to(&z, &plus) < 1e-10);
        assert!(min_distance_to(&z, &minus) < 1e-10);
    }

    #[test]
    fn monomial_sections() {
        // coeffs = eₙ: p(w) = wⁿ → n·[1:0]
        let n = 9;
        let space = SectionSpace::new(n);
        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        coeffs[n] = c(1.0, 0.0);
        let z = roots(&Section::new(space, coeffs).unwrap()).unwrap();
        assert_eq!(z.total, n);
        let origin = normalize(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(z.points.len(), 1);
        assert_eq!(z.points[0].1, n);
        assert!(fs_distance(&z.points[0].0, &origin) < 1e-15);
        // coeffs = e₀: section ∝ z₀ⁿ → n·[0:1] (all zeros at infinity)
        let space = SectionSpace::new(n);
        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        coeffs[0] = c(1.0, 0.0);
        let z = roots(&Section::new(space, coeffs).unwrap()).unwrap();
        assert_eq!(z.points.len(), 1);
        let infinity = normalize(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(fs_distance(&z.points[0].0, &infinity) < 1e-15);
        assert_eq!(z.points[0].1, n);
        assert_eq!(z.total, n);
    }

    #[test]
    fn cyclotomic_roots_on_the_unit_circle() {
        for n in [5usize, 12, 40] {
            let mut chart = vec![c(0.0, 0.0); n + 1];
            chart[0] = c(-1.0, 0.0);
            chart[n] = c(1.0, 0.0);
            let z = roots(&section_from_chart_poly(n, &chart)).unwrap();
            assert_eq!(z.total, n);
            for k in 0..n {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let target = normalize(&[c(1.0, 0.0), c(theta.cos(), theta.sin())]).unwrap();
                assert!(min_distance_to(&z, &target) < 1e-9, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn root_count_matches_degree_in_bulk() {
        // 10⁴ random sections split across the degree ladder; flagged < 0.1%.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut flagged = 0usize;
        let mut tested = 0usize;
        for &n in &[2usize, 8, 32, 128] {
            let space = SectionSpace::new(n);
            for _ in 0..2500 {
                let s = Section::random_uniform(space.clone(), &mut rng);
                tested += 1;
                match roots(&s) {
                    Ok(z) => {
                        let count: usize = z.points.iter().map(|(_, m)| m).sum();
                        assert_eq!(count, n);
                        assert_eq!(z.total, n);
                    }
                    Err(ZerosError::IllConditioned { .. }) => flagged += 1,
                    Err(e) => panic!("unexpected failure: {e}"),
                }
            }
        }
        assert_eq!(tested, 10_000);
        assert!(
            (flagged as f64) < 0.001 * tested as f64,
            "{flagged} flagged out of {tested}"
        );
    }

    #[test]
    fn residuals_are_small_for_random_sections() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let space = SectionSpace::new(64);
        for _ in 0..50 {
            let s = Section::random_uniform(space.clone(), &mut rng);
            let a = s.chart_coefficients();
            let rev: Vec<Complex64> = a.iter().rev().copied().collect();
            let z = roots(&s).unwrap();
            for (p, _) in &z.points {
                let w = p.coords()[1] / p.coords()[0];
                assert!(backward_error(&a, &rev, w) < 1e-10);
            }
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let space = SectionSpace::new(300);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = Section::random_uniform(space, &mut rng);
        assert!(matches!(roots(&s), Err(ZerosError::DegreeTooLarge(300))));
        // and the discrepancy path converts the failure into a flagged record
        let battery = default_battery(&C2Grid { points_per_axis: 11, ..C2Grid::default() });
        let rec = discrepancy(&s, &battery);
        assert!(rec.flagged);
        assert!(rec.discrepancy.is_nan());
    }

    #[test]
    fn exact_zero_leading_coefficients_move_mass_to_infinity() {
        let n = 6;
        let mut chart = vec![c(0.3, -0.1); n + 1];
        chart[n] = c(0.0, 0.0);
        chart[n - 1] = c(0.0, 0.0);
        let z = roots(&section_from_chart_poly(n, &chart)).unwrap();
        let infinity = normalize(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let at_infinity: usize = z
            .points
            .iter()
            .filter(|(p, _)| fs_distance(p, &infinity) < 1e-12)
            .map(|(_, m)| m)
            .sum();
        assert_eq!(at_infinity, 2);
        assert_eq!(z.total, n);
    }

    #[test]
    fn tiny_leading_coefficients_become_certified_roots_near_infinity() {
        // Top two coefficients sixteen orders below the rest: the polynomial
        // genuinely has two huge roots (|w| ≈ √(0.3/1e−16) ≈ 5e7, i.e. chart
        // distance ~2e−8 from [0:1]) — they must be returned as such, not
        // snapped onto the pole, and must carry a clean residual certificate.
        let n = 6;
        let mut chart = vec![c(0.3, -0.1); n + 1];
        chart[n] = c(1e-16, 0.0);
        chart[n - 1] = c(0.0, 1e-16);
        let z = roots(&section_from_chart_poly(n, &chart)).unwrap();
        assert_eq!(z.total, n);
        assert_eq!(z.points.len(), n, "all six roots simple");
        let infinity = normalize(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        // sin_distance resolves separations far below the arccos noise floor
        let near: Vec<f64> = z
            .points
            .iter()
            .map(|(p, _)| sin_distance(p, &infinity))
            .filter(|d| *d < 1e-4)
            .collect();
        assert_eq!(near.len(), 2, "two roots near the pole: {near:?}");
        assert!(near.iter().all(|d| *d > 1e-12), "but none exactly on it: {near:?}");
        let a = {
            let s = section_from_chart_poly(n, &chart);
            s.chart_coefficients()
        };
        let rev: Vec<Complex64> = a.iter().rev().copied().collect();
        for (p, _) in &z.points {
            let w = p.coords()[1] / p.coords()[0];
            assert!(backward_error(&a, &rev, w) < 1e-10);
        }
    }

    #[test]
    fn c2_norm_of_constant_is_one() {
        let battery = default_battery(&C2Grid::default());
        assert!((battery[0].c2_norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn c2_norm_is_homogeneous() {
        let grid = C2Grid { points_per_axis: 21, ..C2Grid::default() };
        let base = TestFunction::custom(
            |p| p.coords()[1].norm_sqr(),
            "abs2",
            0.5,
            &grid,
        );
        let scaled = TestFunction::custom(
            |p| 3.0 * p.coords()[1].norm_sqr(),
            "3·abs2",
            1.5,
            &grid,
        );
        assert!((scaled.c2_norm - 3.0 * base.c2_norm).abs() < 1e-9 * scaled.c2_norm);
    }

    #[test]
    fn c2_norm_stable_under_grid_refinement() {
        let coarse = c2_norm(
            &default_battery(&C2Grid { points_per_axis: 41, ..C2Grid::default() })[1],
            &C2Grid { points_per_axis: 41, ..C2Grid::default() },
        );
        let fine = c2_norm(
            &default_battery(&C2Grid { points_per_axis: 83, ..C2Grid::default() })[1],
            &C2Grid { points_per_axis: 83, ..C2Grid::default() },
        );
        assert!((coarse - fine).abs() < 0.01 * fine, "coarse {coarse} vs fine {fine}");
        // |z₁|²/‖z‖²: sup 1, sup grad 1 at r=1 ((1+r²)·2r/(1+r²)² there), Hessian
        // scan peaks ≈ 3.33 — total near 5.33
        assert!((5.0..5.7).contains(&fine), "fine {fine}");
    }

    #[test]
    fn pairing_examples_for_roots_of_unity() {
        let battery = default_battery(&C2Grid::default());
        let abs2 = &battery[1];
        for n in [4usize, 16, 64] {
            let mut chart = vec![c(0.0, 0.0); n + 1];
            chart[0] = c(-1.0, 0.0);
            chart[n] = c(1.0, 0.0);
            let z = roots(&section_from_chart_poly(n, &chart)).unwrap();
            // ψ = |z₁|²: equals ½ on |w| = 1, and ∫ψω_FS = ½ → pairing 0
            assert!(pair_zero_current(&z, abs2, n).abs() < 1e-12);
            // ψ ≡ 1 → exactly 0
            assert_eq!(pair_zero_current(&z, &battery[0], n), 0.0);
            // cross terms sum to zero over the full root cycle
            assert!(pair_zero_current(&z, &battery[2], n).abs() < 1e-12);
            assert!(pair_zero_current(&z, &battery[3], n).abs() < 1e-12);
            // |z₀z₁|²/‖z‖⁴ = ¼ on the circle, ∫ = 1/6 → pairing 1/12: the
            // permanent floor for circle-supported zeros
            assert!((pair_zero_current(&z, &battery[4], n) - 1.0 / 12.0).abs() < 1e-12);
            let rec = discrepancy(&section_from_chart_poly(n, &chart), &battery);
            assert!((rec.discrepancy - (1.0 / 12.0) / battery[4].c2_norm).abs() < 1e-9);
        }
    }

    #[test]
    fn monomial_pairing_example() {
        // Z = n·[1:0]: ψ = |z₁|² vanishes there → pairing −½
        let battery = default_battery(&C2Grid::default());
        let n = 7;
        let space = SectionSpace::new(n);
        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        coeffs[n] = c(1.0, 0.0);
        let z = roots(&Section::new(space, coeffs).unwrap()).unwrap();
        assert!((pair_zero_current(&z, &battery[1], n) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn pairing_is_linear_in_the_test_function() {
        let grid = C2Grid { points_per_axis: 11, ..C2Grid::default() };
        let f1 = |p: &ProjPoint| p.coords()[1].norm_sqr();
        let f2 = |p: &ProjPoint| (p.coords()[1] * p.coords()[0].conj()).re;
        let (alpha, beta) = (2.5, -1.25);
        let psi1 = TestFunction::custom(f1, "f1", 0.5, &grid);
        let psi2 = TestFunction::custom(f2, "f2", 0.0, &grid);
        let combo = TestFunction::custom(
            move |p| alpha * f1(p) + beta * f2(p),
            "combo",
            alpha * 0.5 + beta * 0.0,
            &grid,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = Section::random_uniform(SectionSpace::new(16), &mut rng);
        let z = roots(&s).unwrap();
        let lhs = pair_zero_current(&z, &combo, 16);
        let rhs = alpha * pair_zero_current(&z, &psi1, 16) + beta * pair_zero_current(&z, &psi2, 16);
        assert!((lhs - rhs).abs() < 1e-13, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn rescaling_coefficients_preserves_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let battery = default_battery(&C2Grid::default());
        let space = SectionSpace::new(24);
        let s = Section::random_uniform(space.clone(), &mut rng);
        // power-of-two rescaling is exact in floating point: bitwise-equal records
        let doubled: Vec<Complex64> = s.coeffs().iter().map(|c| c * 128.0).collect();
        let s2 = Section::new(space.clone(), doubled).unwrap();
        let r1 = discrepancy(&s, &battery);
        let r2 = discrepancy(&s2, &battery);
        assert_eq!(r1.pairings, r2.pairings);
        assert_eq!(r1.discrepancy, r2.discrepancy);
        // generic complex rescaling agrees to refinement accuracy
        let lambda = c(0.37, -1.94);
        let twisted: Vec<Complex64> = s.coeffs().iter().map(|c| c * lambda).collect();
        let s3 = Section::new(space, twisted).unwrap();
        let r3 = discrepancy(&s3, &battery);
        for (a, b) in r1.pairings.iter().zip(r3.pairings.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_pairing_vanishes_under_the_uniform_ensemble() {
        // E[(1/n)[Z_s]] = ω_FS: per-ψ sample means sit within 3 standard errors.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let battery = default_battery(&C2Grid::default());
        let m = 200;
        let n = 8;
        let space = SectionSpace::new(n);
        let mut pairings: Vec<Vec<f64>> = vec![Vec::with_capacity(m); battery.len()];
        for _ in 0..m {
            let s = Section::random_uniform(space.clone(), &mut rng);
            let rec = discrepancy(&s, &battery);
            assert!(!rec.flagged);
            for (k, v) in rec.pairings.iter().enumerate() {
                pairings[k].push(*v);
            }
        }
        for (k, vals) in pairings.iter().enumerate() {
            let (mean, std) = stats::mean_and_std(vals);
            assert!(
                mean.abs() <= 3.0 * std / (m as f64).sqrt() + 1e-14,
                "battery {k}: mean {mean}, std {std}"
            );
        }
    }

    #[test]
    fn moebius_rotation_permutes_zero_sets() {
        // if s'(z) = s(Uz) then Z_{s'} = U⁻¹·Z_s; chart coefficients of s'
        // come from expanding Σ_j a_j (γ+δw)^j (α+βw)^{n−j}.
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let n = 8;
        for _ in 0..5 {
            let space = SectionSpace::new(n);
            let s = Section::random_uniform(space.clone(), &mut rng);
            let a = s.chart_coefficients();
            let u = random_unitary(&mut rng, 2);
            let (alpha, beta) = (u[(0, 0)], u[(0, 1)]);
            let (gamma, delta) = (u[(1, 0)], u[(1, 1)]);
            // polynomial multiplication bottom-up
            let mut q = vec![c(0.0, 0.0); n + 1];
            for (j, aj) in a.iter().enumerate() {
                let mut term = vec![c(1.0, 0.0)];
                for _ in 0..j {
                    term = poly_mul(&term, &[gamma, delta]);
                }
                for _ in 0..(n - j) {
                    term = poly_mul(&term, &[alpha, beta]);
                }
                for (idx, t) in term.iter().enumerate() {
                    q[idx] += aj * t;
                }
            }
            let z_orig = roots(&s).unwrap();
            let z_rot = roots(&section_from_chart_poly(n, &q)).unwrap();
            let u_inv = u.adjoint();
            for (p, _) in &z_orig.points {
                let moved = apply_unitary(&u_inv, p);
                let nearest = z_rot
                    .points
                    .iter()
                    .map(|(q, _)| sin_distance(q, &moved))
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-8, "nearest {nearest}");
            }
        }
    }

    fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn single_root_discrepancy_is_order_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let battery = default_battery(&C2Grid::default());
        let space = SectionSpace::new(1);
        let mut discs: Vec<f64> = (0..200)
            .map(|_| discrepancy(&Section::random_uniform(space.clone(), &mut rng), &battery).discrepancy)
            .collect();
        discs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = stats::median_sorted(&discs);
        assert!((0.02..0.5).contains(&median), "median {median}");
    }

    #[test]
    #[should_panic(expected = "battery norms must be positive")]
    fn battery_with_degenerate_norm_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let s = Section::random_uniform(SectionSpace::new(2), &mut rng);
        let zero_fn = TestFunction {
            kind: BatteryKind::Custom(Arc::new(|_: &ProjPoint| 0.0)),
            c2_norm: 0.0,
            fs_integral: 0.0,
            label: "null".into(),
        };
        discrepancy(&s, &[zero_fn]);
    }
}
