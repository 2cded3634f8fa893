use nalgebra::DMatrix;
use num_complex::Complex64;
use subwave_core::oscint::{default_pts_per_dim, oscillatory_integral, stationary_phase_leading, CriticalPointData};

/// `∫ e^{−(a + ib)s²} ds` over R.
fn gaussian(a: f64, b: f64) -> Complex64 {
    (Complex64::new(std::f64::consts::PI, 0.0) / Complex64::new(a, b)).sqrt()
}

#[test]
fn indefinite_quadratic_phase_in_two_dimensions() {
    // f = (ξ₁² − ξ₂²)/2, b = e^{−3|ξ|²}: the integral factorizes.
    let lambda = 40.0;
    let q = oscillatory_integral(
        |p| 0.5 * (p[0] * p[0] - p[1] * p[1]),
        |p| Complex64::new((-3.0 * (p[0] * p[0] + p[1] * p[1])).exp(), 0.0),
        lambda,
        &[(-3.5, 3.5), (-3.5, 3.5)],
        // The box is wider than the default sizing assumes.
        400,
    );
    let exact = gaussian(3.0, -0.5 * lambda) * gaussian(3.0, 0.5 * lambda);
    assert!((q - exact).norm() < 1e-9 * exact.norm(), "{q} vs {exact}");
}

#[test]
fn leading_term_has_signature_phase() {
    let cp = CriticalPointData::new(vec![0.0, 0.0], 0.25, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
    assert_eq!(cp.signature, 2);
    let lambda = 10.0;
    let lead = stationary_phase_leading(&cp, Complex64::new(1.0, 0.0), lambda, 2);
    // (2π/λ)·|det|^{−1/2}·e^{iπ/2}·e^{iλ/4}
    let expected = Complex64::new(0.0, 1.0) * Complex64::from_polar(2.0 * std::f64::consts::PI / lambda / 2.0, lambda / 4.0);
    assert!((lead - expected).norm() < 1e-14);
}

#[test]
fn quadrature_is_converged_at_acceptance_scale() {
    let lambda = 1024.0;
    let f = |pts| {
        oscillatory_integral(|p| -0.5 * p[0] * p[0], |p| Complex64::new((-8.0 * p[0] * p[0]).exp(), 0.0), lambda, &[(-2.0, 2.0)], pts)
    };
    let pts = default_pts_per_dim(lambda);
    let (a, b) = (f(pts), f(2 * pts));
    assert!((a - b).norm() <= 1e-6 * b.norm());
}
