use approx::assert_relative_eq;
use num_complex::Complex64;
use subwave_core::mult::{
    apply_function, apply_multiplier_spectral, euclidean_opnorm_l1, grushin_operator_matrix, mh_lowerbound_experiment,
    schrodinger_multiplier, sobolev_sloc_norm, wave_multiplier, CutoffSpec, GridSpec, GrushinBox, MultiplierGrid,
    OpNormOptions, Target,
};

const BUMP: CutoffSpec = CutoffSpec::SmoothBump { a: 0.5, b: 1.5 };

/// `2|λ|^{1/2} ∫ χ(t) e^{−iλt²/2} cos(st) dt` by composite Simpson.
fn schrodinger_reference(lambda: f64, s: f64) -> Complex64 {
    let n = 200_000;
    let (a, b) = (0.5, 1.5);
    let h = (b - a) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let t = a + k as f64 * h;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * BUMP.eval(t) * Complex64::from_polar(1.0, -0.5 * lambda * t * t) * (s * t).cos();
    }
    2.0 * lambda.sqrt() * acc * h / 3.0
}

#[test]
fn schrodinger_values_match_direct_quadrature() {
    let lambda = 64.0;
    let m = schrodinger_multiplier(&BUMP, lambda, GridSpec::default()).unwrap();
    for s in [0.0, 20.0, 64.0, 90.0] {
        let exact = schrodinger_reference(lambda, s);
        let got = m.eval(s).unwrap();
        assert!((got - exact).norm() < 1e-6 * m.max_abs(), "s = {s}: {got} vs {exact}");
    }
}

#[test]
fn schrodinger_peak_sits_on_the_stationary_band() {
    let lambda = 64.0;
    let m = schrodinger_multiplier(&BUMP, lambda, GridSpec::default()).unwrap();
    let (s_peak, _) = m
        .s_grid()
        .iter()
        .zip(m.values())
        .map(|(s, v)| (s.abs(), v.norm()))
        .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    assert!((0.5 * lambda..=1.5 * lambda).contains(&s_peak), "{s_peak}");
    assert!(m.evenness_defect() <= 1e-10 * m.max_abs());
    assert!(m.tail_ratio() < 1e-6);
}

#[test]
fn wave_multiplier_examples() {
    let chi = CutoffSpec::GaussianWindow { c: 1.0, w: 0.25 };
    let m = wave_multiplier(&chi, 32.0, 1e-12, GridSpec::default()).unwrap();
    // Off-node values carry cubic interpolation error.
    assert_relative_eq!(m.eval(32.0).unwrap().re, 1.0, epsilon = 1e-5);
    let b = wave_multiplier(&BUMP, 32.0, 0.5, GridSpec::default()).unwrap();
    for (s, v) in b.s_grid().iter().zip(b.values()) {
        if !(16.0..=48.0).contains(&s.abs()) {
            assert_eq!(*v, Complex64::new(0.0, 0.0), "s = {s}");
        }
    }
    assert!(b.evenness_defect() <= 1e-10 * b.max_abs());
}

#[test]
fn sobolev_norm_of_order_zero_is_the_l2_norm() {
    let rho = CutoffSpec::SmoothBump { a: 0.5, b: 2.0 };
    let bump = CutoffSpec::SmoothBump { a: 1.0, b: 3.0 };
    let m = MultiplierGrid::from_fn(20.0, 0.01, |s| Complex64::new(bump.eval(s.abs()), 0.0)).unwrap();
    let ts = [0.8, 1.0, 1.6];
    let got = sobolev_sloc_norm(&m, 0.0, &rho, Some(&ts)).unwrap();
    for (t, v) in ts.iter().zip(&got.norms) {
        // Midpoint rule on ∫ |ρ(s) m(ts)|² ds.
        let n = 200_000;
        let h = 1.5 / n as f64;
        let l2 = (0..n)
            .map(|k| {
                let s = 0.5 + (k as f64 + 0.5) * h;
                (rho.eval(s) * bump.eval(t * s)).powi(2)
            })
            .sum::<f64>()
            * h;
        assert_relative_eq!(*v, l2.sqrt(), max_relative = 1e-4);
    }
}

#[test]
fn second_derivative_of_gaussian_kernel() {
    // m(s) = s²e^{−s²/2} has kernel −G'' with G the unit Gaussian, and
    // ∫|G''| = E|X² − 1| = 4φ(1).
    let m = MultiplierGrid::from_fn(14.0, 0.01, |s| Complex64::new(s * s * (-0.5 * s * s).exp(), 0.0)).unwrap();
    let r = euclidean_opnorm_l1(&m, 1, &OpNormOptions { half_width: Some(10.0), ..Default::default() }).unwrap();
    let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    assert_relative_eq!(r.value, 4.0 * phi1, max_relative = 1e-3);
}

#[test]
fn schrodinger_kernel_norm_is_grid_stable() {
    let lambda = 256.0;
    let m = schrodinger_multiplier(&BUMP, lambda, GridSpec::default()).unwrap();
    let base = euclidean_opnorm_l1(&m, 1, &OpNormOptions::default()).unwrap();
    let coarse = OpNormOptions { grid_pts: Some(base.refined_pts), refine: false, half_width: Some(base.half_width) };
    let fine = OpNormOptions { grid_pts: Some(2 * base.refined_pts), ..coarse };
    let (a, b) = (euclidean_opnorm_l1(&m, 1, &coarse).unwrap().value, euclidean_opnorm_l1(&m, 1, &fine).unwrap().value);
    assert!((a - b).abs() <= 0.05 * b, "{a} vs {b}");
}

#[test]
fn grushin_low_spectrum_matches_fiber_oscillators() {
    let g = grushin_operator_matrix(33, 33, GrushinBox::default()).unwrap();
    let eig = g.eigen();
    let top = eig.eigenvalues.last().copied().unwrap();
    assert!(eig.eigenvalues[0] >= -1e-8 * top);
    // η = 0: Dirichlet modes (jπ/2X)²; η = ±k (period 2π): oscillator levels |η|(2j + 1).
    let x_half = GrushinBox::default().x_half;
    let mut oracle: Vec<f64> = (1..6).map(|j| (j as f64 * std::f64::consts::PI / (2.0 * x_half)).powi(2)).collect();
    for k in 1..4 {
        for j in 0..3 {
            let level = k as f64 * (2 * j + 1) as f64;
            oracle.extend([level, level]);
        }
    }
    oracle.sort_by(f64::total_cmp);
    for (got, want) in eig.eigenvalues.iter().zip(&oracle).take(5) {
        assert!((got - want).abs() <= 0.05 * want, "{got} vs {want}");
    }
}

#[test]
fn spectral_calculus_reproduces_the_matrix() {
    let g = grushin_operator_matrix(9, 8, GrushinBox::default()).unwrap();
    let eig = g.eigen();
    let n = g.matrix.nrows();
    let f: Vec<Complex64> = (0..n).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
    // m(√μ) = μ applied through the decomposition equals L f.
    let values: Vec<Complex64> = eig.eigenvalues.iter().map(|&mu| Complex64::new(mu.max(0.0), 0.0)).collect();
    let lf = apply_function(&eig, &values, &f).unwrap();
    for i in 0..n {
        let direct: Complex64 = (0..n).map(|j| g.matrix[(i, j)] * f[j]).sum();
        assert!((lf[i] - direct).norm() < 1e-8 * (1.0 + direct.norm()));
    }
    let s_top = eig.frequencies().last().copied().unwrap();
    let one = MultiplierGrid::from_fn(s_top + 1.0, 0.05, |_| Complex64::new(1.0, 0.0)).unwrap();
    let same = apply_multiplier_spectral(&eig, &one, &f).unwrap();
    for (a, b) in same.iter().zip(&f) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn experiments_validate_their_inputs() {
    let t = Target::Euclidean { n: 1 };
    assert!(mh_lowerbound_experiment(&t, 3, &[16.0, 32.0, 64.0, 128.0], &BUMP).is_err());
    assert!(mh_lowerbound_experiment(&t, 1, &[16.0, 32.0, 64.0], &BUMP).is_err());
    assert!(mh_lowerbound_experiment(&t, 1, &[16.0, 32.0, 16.0, 64.0], &BUMP).is_err());
    let gw = CutoffSpec::GaussianWindow { c: 1.0, w: 0.25 };
    assert!(mh_lowerbound_experiment(&t, 1, &[16.0, 32.0, 64.0, 128.0], &gw).is_err());
}
