//! Adaptive quadrature used as an independent oracle: the recurrence-based
//! integrals and Monte-Carlo estimators elsewhere in the crate are checked
//! against these routines, and the measure suites use them for small
//! closed-chart integrals. Not a general-purpose integration library.

/// Hard cap on refinement panels; reaching it means the requested tolerances
/// are unattainable for the integrand (e.g. asking for relative accuracy of
/// an integral that cancels to rounding noise), which is a caller bug worth
/// failing loudly over rather than silently mis-integrating.
const PANEL_BUDGET: u64 = 10_000_000;

/// Adaptive Simpson integration of `f` over [a, b].
///
/// A panel is accepted when the Richardson estimate |S₂ − S₁|/15 is below
/// `rel_tol`·|S₂| or `abs_tol`; the relative criterion keeps termination
/// meaningful for integrands spanning hundreds of orders of magnitude
/// (sin^m near the origin), the absolute one for integrals near zero.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let (s, fm, m) = simpson(f, a, fa, b, fb);
    let mut budget = PANEL_BUDGET;
    recurse(f, a, fa, b, fb, m, fm, s, rel_tol, abs_tol, 60, &mut budget)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm, m)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64 + Copy>(
    f: F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
    budget: &mut u64,
) -> f64 {
    assert!(*budget > 0, "quadrature tolerance unattainable: raise abs_tol for near-zero integrals");
    *budget -= 1;
    let (left, flm, lm) = simpson(f, a, fa, m, fm);
    let (right, frm, rm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * f64::max(abs_tol, rel_tol * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, fa, m, fm, lm, flm, left, rel_tol, abs_tol, depth - 1, budget)
        + recurse(f, m, fm, b, fb, rm, frm, right, rel_tol, abs_tol, depth - 1, budget)
}

/// ∫_{P¹} f dω_FS over the chart U₀, i.e.
/// ∫₀^{rmax}∫₀^{2π} f(r·e^{iθ}) · r/(π(1+r²)²) dθ dr.
///
/// The angular integral of a smooth periodic integrand converges spectrally
/// under the trapezoid rule (`n_theta` nodes); the radial integral is adaptive.
/// The neglected tail is bounded by sup|f|/(1+rmax²). `abs_tol` must reflect
/// the expected answer scale: when the angular average cancels to rounding
/// noise (orthogonality integrals), only the absolute criterion can ever
/// terminate the radial refinement.
pub fn integrate_p1_fs<F: Fn(num_complex::Complex64) -> f64>(
    f: F,
    rmax: f64,
    n_theta: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    use num_complex::Complex64;
    use std::f64::consts::PI;
    assert!(abs_tol > 0.0, "an absolute tolerance floor is required");
    let angular = |r: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n_theta {
            let theta = 2.0 * PI * i as f64 / n_theta as f64;
            acc += f(Complex64::from_polar(r, theta));
        }
        acc / n_theta as f64
    };
    adaptive_simpson(
        |r| angular(r) * 2.0 * r / (1.0 + r * r).powi(2),
        0.0,
        rmax,
        rel_tol,
        abs_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 1e-300);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_across_magnitudes() {
        // ∫₀^{π/8} sin⁴⁰: value ≈ 2e−19, far below any sane absolute tolerance.
        let v = adaptive_simpson(|x| x.sin().powi(40), 0.0, PI / 8.0, 1e-12, 1e-300);
        assert!(v > 0.0);
        // Compare against the same integral split at an interior point.
        let v2 = adaptive_simpson(|x| x.sin().powi(40), 0.0, 0.2, 1e-12, 1e-300)
            + adaptive_simpson(|x| x.sin().powi(40), 0.2, PI / 8.0, 1e-12, 1e-300);
        assert!(((v - v2) / v).abs() < 1e-11);
    }

    #[test]
    fn fs_chart_integral_normalizes_to_one() {
        // f ≡ 1 integrates to the FS mass inside radius rmax: rmax²/(1+rmax²).
        let rmax = 30.0;
        let v = integrate_p1_fs(|_| 1.0, rmax, 8, 1e-12, 1e-12);
        let expected = rmax * rmax / (1.0 + rmax * rmax);
        assert!((v - expected).abs() < 1e-10);
    }

    #[test]
    fn fs_chart_integral_of_battery_function() {
        // ψ = |z₁|²/‖z‖² = r²/(1+r²) integrates to 1/2 over all of P¹.
        let v = integrate_p1_fs(|w| w.norm_sqr() / (1.0 + w.norm_sqr()), 200.0, 8, 1e-12, 1e-12);
        assert!((v - 0.5).abs() < 1e-4); // tail at rmax=200 is ~2.5e−5
    }
}
