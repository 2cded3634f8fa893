use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use subwave_core::flow::{exp_a, flow_endpoint, hamilton_flow, horizontal_distance};
use subwave_core::{register_builtin, CotangentPoint};

/// Heisenberg geodesic from the origin: with c = a + ib and θ = ξ₃,
/// x + iy = c(e^{2iθt} − 1)/(iθ) and z = |c|²(t − sin(2θt)/(2θ))/θ.
fn heisenberg_closed_form(xi: [f64; 3], t: f64) -> [f64; 3] {
    let (a, b, th) = (xi[0], xi[1], xi[2]);
    let (s, c) = (2.0 * th * t).sin_cos();
    // (c − 1 + i s)/(iθ) = (s − i(c − 1))/θ
    let (re, im) = (s / th, (1.0 - c) / th);
    let x = a * re - b * im;
    let y = a * im + b * re;
    let z = (a * a + b * b) * (t - s / (2.0 * th)) / th;
    [x, y, z]
}

/// Grushin geodesic: ẍ = −4η²x and ẏ = 2ηx², integrated in closed form.
fn grushin_closed_form(x0: [f64; 2], xi: [f64; 2], t: f64) -> [f64; 2] {
    let eta = xi[1];
    let w = 2.0 * eta;
    let (a, b) = (x0[0], xi[0] / eta);
    let x = a * (w * t).cos() + b * (w * t).sin();
    let s2 = (2.0 * w * t).sin() / (4.0 * w);
    let int_x2 = a * a * (0.5 * t + s2) + b * b * (0.5 * t - s2) + a * b * (1.0 - (2.0 * w * t).cos()) / (2.0 * w);
    [x, x0[1] + 2.0 * eta * int_x2]
}

#[test]
fn heisenberg_matches_closed_form() {
    let m = register_builtin("heisenberg").unwrap();
    for (xi, t) in [([1.0, 0.0, 0.3], 1.0), ([0.4, -0.7, 1.1], 2.0), ([-0.2, 0.5, -0.6], 0.7)] {
        let z0: Vec<f64> = [0.0, 0.0, 0.0].iter().chain(&xi).copied().collect();
        let z = flow_endpoint(&m, &z0, t, 1e-12).unwrap();
        let expected = heisenberg_closed_form(xi, t);
        for k in 0..3 {
            assert_abs_diff_eq!(z[k], expected[k], epsilon = 1e-9);
        }
    }
}

#[test]
fn grushin_matches_closed_form() {
    let m = register_builtin("grushin").unwrap();
    for (x0, xi, t) in [([0.3, -0.2], [0.5, 1.0], 1.0), ([-0.7, 0.4], [-0.2, 0.6], 1.5)] {
        let z0 = [x0[0], x0[1], xi[0], xi[1]];
        let z = flow_endpoint(&m, &z0, t, 1e-12).unwrap();
        let expected = grushin_closed_form(x0, xi, t);
        assert_abs_diff_eq!(z[0], expected[0], epsilon = 1e-9);
        assert_abs_diff_eq!(z[1], expected[1], epsilon = 1e-9);
    }
}

#[test]
fn trajectory_conserves_energy() {
    let m = register_builtin("engel").unwrap();
    let p0 = CotangentPoint::new(vec![0.1, -0.2, 0.3, 0.0], vec![0.5, 0.4, -0.3, 0.2]).unwrap();
    let traj = hamilton_flow(&m, &p0, 1.5, 1e-10).unwrap();
    assert!(traj.energy_drift() <= traj.drift_bound());
    assert_eq!(traj.times.len(), traj.states.len());
}

fn state(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0..1.0f64, n), prop::collection::vec(-1.0..1.0f64, n))
        .prop_filter("nonzero covector", |(_, xi)| xi.iter().map(|v| v * v).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_scaling((x, xi) in state(3), t in 0.1..1.0f64, c in 0.5..3.0f64) {
        let m = register_builtin("heisenberg").unwrap();
        let za: Vec<f64> = x.iter().copied().chain(xi.iter().map(|v| c * v)).collect();
        let zb: Vec<f64> = x.iter().chain(&xi).copied().collect();
        let a = flow_endpoint(&m, &za, t, 1e-12).unwrap();
        let b = flow_endpoint(&m, &zb, c * t, 1e-12).unwrap();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-8);
            prop_assert!((a[3 + k] - c * b[3 + k]).abs() <= 1e-8 * c);
        }
    }

    #[test]
    fn flow_is_reversible((x, xi) in state(2), t in 0.1..1.5f64) {
        let m = register_builtin("grushin").unwrap();
        let z0: Vec<f64> = x.iter().chain(&xi).copied().collect();
        let z1 = flow_endpoint(&m, &z0, t, 1e-12).unwrap();
        let back = flow_endpoint(&m, &z1, -t, 1e-12).unwrap();
        for k in 0..4 {
            prop_assert!((back[k] - z0[k]).abs() <= 1e-8);
        }
    }

    #[test]
    fn velocity_is_horizontal((x, xi) in state(3)) {
        let m = register_builtin("heisenberg").unwrap();
        let z: Vec<f64> = x.iter().chain(&xi).copied().collect();
        let mut dz = vec![0.0; 6];
        m.hamilton_rhs(&z, &mut dz);
        let v = &dz[..3];
        let speed = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!(horizontal_distance(&m, &x, v) <= 1e-12 * (1.0 + speed));
    }

    #[test]
    fn exp_a_is_zero_homogeneous((x, xi) in state(3), c in 0.2..5.0f64, t in -0.8..0.8f64) {
        let m = register_builtin("heisenberg").unwrap();
        prop_assume!(m.hamiltonian_at(&x, &xi) > 0.05);
        let scaled: Vec<f64> = xi.iter().map(|v| c * v).collect();
        let a = exp_a(&m, &x, &xi, t, 1e-12).unwrap();
        let b = exp_a(&m, &x, &scaled, t, 1e-12).unwrap();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-12 * (1.0 + a[k].abs()));
        }
    }
}
