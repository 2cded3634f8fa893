use subwave_core::flow::exp_h;
use subwave_core::register_builtin;
use subwave_core::varjac::{conjugate_scan, dexp_h};

#[test]
fn variational_jacobian_matches_finite_differences() {
    for (name, x, xi) in [
        ("heisenberg", vec![0.1, -0.2, 0.3], vec![0.7, 0.4, 1.3]),
        ("grushin", vec![0.5, 0.1], vec![-0.3, 0.9]),
        ("engel", vec![0.1, 0.0, -0.1, 0.2], vec![0.5, -0.4, 0.3, 0.2]),
    ] {
        let m = register_builtin(name).unwrap();
        let d = dexp_h(&m, &x, &xi, 1e-12).unwrap();
        let n = x.len();
        let h = 1e-5;
        for k in 0..n {
            let mut p = xi.clone();
            let mut q = xi.clone();
            p[k] += h;
            q[k] -= h;
            let (fp, fq) = (exp_h(&m, &x, &p, 1e-12).unwrap(), exp_h(&m, &x, &q, 1e-12).unwrap());
            for i in 0..n {
                let fd = (fp[i] - fq[i]) / (2.0 * h);
                assert!((d[(i, k)] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{name} ({i},{k}): {} vs {fd}", d[(i, k)]);
            }
        }
    }
}

#[test]
fn heisenberg_conjugate_parameter_scales_inversely_with_theta() {
    // The first conjugate parameter on s·(1, 0, θ) is π/θ.
    let m = register_builtin("heisenberg").unwrap();
    for theta in [0.8, 1.25] {
        let scan = conjugate_scan(&m, &[0.0; 3], &[1.0, 0.0, theta], 0.05, 1.3 * std::f64::consts::PI / theta, 120, 1e-12).unwrap();
        let first = scan.conjugate[0];
        assert!((first - std::f64::consts::PI / theta).abs() < 1e-4, "θ = {theta}: {first}");
    }
}
