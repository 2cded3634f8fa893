//! Acceptance suite: one PASS/FAIL line per criterion. Reference values are
//! closed forms computed here, independently of the library code paths.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subwave_core::eikonal::{critical_check, eikonal_residual, hessian_rank_at_critical, phase_w};
use subwave_core::flow::{exp_a, flow_endpoint, hamilton_flow};
use subwave_core::mult::{
    mh_lowerbound_experiment, mp_lowerbound_experiment, schrodinger_multiplier, sobolev_sloc_norm, CutoffSpec, GridSpec,
    Target,
};
use subwave_core::oscint::{mixed_phase_critical, oscillatory_integral, statphase_sweep, StatPhaseProblem};
use subwave_core::varjac::{conjugate_scan, rank_reduction_check};
use subwave_core::{register_builtin, CotangentPoint, ModelSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// `H` on the Heisenberg group with frame `∂x − y/2 ∂z`, `∂y + x/2 ∂z`.
fn heisenberg_h(x: &[f64], xi: &[f64]) -> f64 {
    (xi[0] - 0.5 * x[1] * xi[2]).powi(2) + (xi[1] + 0.5 * x[0] * xi[2]).powi(2)
}

/// `H` on the Grushin plane with frame `∂x`, `x ∂y`.
fn grushin_h(x: &[f64], xi: &[f64]) -> f64 {
    xi[0].powi(2) + (x[0] * xi[1]).powi(2)
}

fn model(name: &str) -> ModelSpec {
    register_builtin(name).expect("built-in model")
}

/// Unit covector with `H(x, ξ) ≥ 1/4` and a base point in `[−1/2, 1/2]^n`.
fn regime_point(rng: &mut ChaCha8Rng, n: usize, h: fn(&[f64], &[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&xi);
        if !(r > 1e-3 && r <= 1.0) {
            continue;
        }
        let xi: Vec<f64> = xi.iter().map(|v| v / r).collect();
        if h(&x, &xi) >= 0.25 {
            return (x, xi);
        }
    }
}

fn c1_energy() -> Outcome {
    let start = Instant::now();
    let m = model("heisenberg");
    let p0 = CotangentPoint::new(vec![0.0; 3], vec![1.0, 0.0, 0.3]).unwrap();
    let traj = match hamilton_flow(&m, &p0, 2.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("flow failed: {e}")),
    };
    let h0 = heisenberg_h(&p0.x, &p0.xi);
    let drift = traj.states.iter().map(|s| (heisenberg_h(&s.x, &s.xi) - h0).abs()).fold(0.0, f64::max) / h0;
    let secs = start.elapsed().as_secs_f64();
    outcome(drift <= 1e-8 && secs < 1.0, format!("relative H drift {drift:.2e} (≤ 1e-8), {secs:.2} s (< 1 s)"))
}

fn c2_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (name, n) = if k % 2 == 0 { ("heisenberg", 3) } else { ("grushin", 2) };
        let m = model(name);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = rng.gen_range(0.2..1.0);
        let z2: Vec<f64> = x.iter().copied().chain(xi.iter().map(|v| 2.0 * v)).collect();
        let z1: Vec<f64> = x.iter().chain(&xi).copied().collect();
        match (flow_endpoint(&m, &z2, t, 1e-12), flow_endpoint(&m, &z1, 2.0 * t, 1e-12)) {
            (Ok(a), Ok(b)) => worst = worst.max(dist(&a[..n], &b[..n])),
            _ => return outcome(false, format!("flow failed on sample {k}")),
        }
    }
    outcome(worst <= 1e-7, format!("max base distance {worst:.2e} over 20 states (≤ 1e-7)"))
}

fn c3_euclidean_phase() -> Outcome {
    let m = model("euclidean2");
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..10 {
        let x = [-1.0 + 0.2 * i as f64, 0.7 - 0.15 * i as f64];
        for j in 0..10 {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / 10.0 + 0.1;
            let r = 0.5 + 0.25 * j as f64;
            let xi = [r * ang.cos(), r * ang.sin()];
            for k in 0..8 {
                let t = -0.8 + 1.6 * k as f64 / 7.0;
                let exact = x[0] * xi[0] + x[1] * xi[1] + t * norm(&xi);
                match phase_w(&m, t, &x, &xi, 1e-12) {
                    Ok(s) => worst = worst.max((s.w - exact).abs()),
                    Err(e) => return outcome(false, format!("phase failed: {e}")),
                }
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-8, format!("max |w − (x·ξ + t|ξ|)| = {worst:.2e} on {count} samples (≤ 1e-8)"))
}

fn c4_eikonal() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for (name, n, h) in [("grushin", 2, grushin_h as fn(&[f64], &[f64]) -> f64), ("heisenberg", 3, heisenberg_h)] {
        let m = model(name);
        for _ in 0..30 {
            let (x, xi) = regime_point(&mut rng, n, h);
            let t = rng.gen_range(-0.8..=0.8);
            match eikonal_residual(&m, t, &x, &xi, 1e-12) {
                Ok(r) => worst = worst.max(r),
                Err(e) => return outcome(false, format!("{name}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-5 && secs < 30.0, format!("max residual {worst:.2e} on 2×30 samples (≤ 1e-5), {secs:.1} s (< 30 s)"))
}

fn c5_critical() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_lhs, mut worst_dt, mut min_perturbed) = (0.0f64, 0.0f64, f64::INFINITY);
    for (name, n, h) in [("grushin", 2, grushin_h as fn(&[f64], &[f64]) -> f64), ("heisenberg", 3, heisenberg_h)] {
        let m = model(name);
        for _ in 0..5 {
            let (y, xi) = regime_point(&mut rng, n, h);
            let t = rng.gen_range(0.2..0.8);
            // x is placed so that (t, x, y, ξ) is critical.
            let Ok(x) = exp_a(&m, &y, &xi, -t, 1e-12) else { return outcome(false, "Exp_A failed") };
            let c = match critical_check(&m, t, &x, &y, &xi, 1e-12) {
                Ok(c) => c,
                Err(e) => return outcome(false, format!("{name}: {e}")),
            };
            let sqrt_h = h(&y, &xi).sqrt();
            worst_lhs = worst_lhs.max(c.lhs);
            worst_dt = worst_dt.max((c.dt_at_crit - sqrt_h).abs() / (1.0 + sqrt_h));
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + 0.1 * d / norm(&dir)).collect();
            match phase_w(&m, t, &xp, &xi, 1e-12) {
                Ok(s) => min_perturbed = min_perturbed.min(dist(&s.dxi_w, &y)),
                Err(e) => return outcome(false, format!("{name}: {e}")),
            }
        }
    }
    outcome(
        worst_lhs <= 1e-5 && worst_dt <= 1e-5 && min_perturbed > 1e-2,
        format!("|∂ξw − y| ≤ {worst_lhs:.1e}, |∂tw − √H|/(1+√H) ≤ {worst_dt:.1e}, perturbed min {min_perturbed:.2e} (> 1e-2)"),
    )
}

/// Singular values of a symmetric 2×2 matrix, in closed form.
fn sym2_singular(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let (e1, e2) = ((mean + rad).abs(), (mean - rad).abs());
    (e1.max(e2), e1.min(e2))
}

fn c6_hessian_rank() -> Outcome {
    let eu = model("euclidean2");
    let mut eu_ok = true;
    let mut eu_err: f64 = 0.0;
    for (t, x, xi) in [(0.5, [0.1, -0.3], [1.0, 0.5]), (-0.4, [0.7, 0.2], [-0.3, 2.0]), (0.8, [0.0, 0.0], [0.6, -0.8])] {
        let s = match phase_w(&eu, t, &x, &xi, 1e-12) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("euclidean: {e}")),
        };
        let h = &s.dxi2_w;
        let (s1, s2) = sym2_singular(h[(0, 0)], 0.5 * (h[(0, 1)] + h[(1, 0)]), h[(1, 1)]);
        let expected = f64::abs(t) / norm(&xi);
        eu_err = eu_err.max((s1 - expected).abs());
        eu_ok &= (s1 - expected).abs() <= 1e-6 && s2 <= 1e-8 * s1;
    }
    let he = model("heisenberg");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut heis_ok, mut reduction_ok) = (true, 0);
    for k in 0..10 {
        let (y, xi) = regime_point(&mut rng, 3, heisenberg_h);
        let t = rng.gen_range(0.2..0.8);
        if k < 5 {
            let Ok(x) = exp_a(&he, &y, &xi, -t, 1e-12) else { return outcome(false, "Exp_A failed") };
            match hessian_rank_at_critical(&he, t, &x, &y, &xi, 1e-12) {
                Ok(r) => heis_ok &= r.hessian.numerical_rank == 2 && r.exp_a.numerical_rank == 2,
                Err(e) => return outcome(false, format!("heisenberg: {e}")),
            }
        }
        match rank_reduction_check(&he, &y, &xi, t, 1e-12) {
            Ok(r) if r.ranks_equal => reduction_ok += 1,
            Ok(_) => {}
            Err(e) => return outcome(false, format!("rank reduction: {e}")),
        }
    }
    outcome(
        eu_ok && heis_ok && reduction_ok == 10,
        format!(
            "euclidean σ₁ error {eu_err:.1e} (≤ 1e-6), null σ ok: {eu_ok}; heisenberg rank 2 = rank D Exp_A: {heis_ok}; restricted ranks equal {reduction_ok}/10"
        ),
    )
}

/// First conjugate parameter on the Heisenberg ray `s·(1, 0, θ)`: the first
/// positive zero of `sin u·(sin u − u cos u)`, `u = sθ`, found by bisection.
fn heisenberg_first_conjugate(theta: f64) -> f64 {
    let f = |u: f64| u.sin() * (u.sin() - u * u.cos());
    let (mut a, mut b) = (0.5, 0.5);
    while f(b).signum() == f(a).signum() {
        a = b;
        b += 0.01;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid).signum() == f(a).signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b) / theta
}

fn c7_re_witness() -> Outcome {
    let m = model("heisenberg");
    let xi = [1.0, 0.0, 0.5];
    let x = [0.0; 3];
    let (Ok(neg), Ok(pos)) = (conjugate_scan(&m, &x, &xi, -1.0, -0.05, 96, 1e-12), conjugate_scan(&m, &x, &xi, 0.05, 1.0, 96, 1e-12))
    else {
        return outcome(false, "scan failed");
    };
    let min = neg.min_abs_det.min(pos.min_abs_det);
    let max = neg.max_abs_det.max(pos.max_abs_det);
    let Ok(far) = conjugate_scan(&m, &x, &xi, 0.05, 9.0, 180, 1e-12) else { return outcome(false, "far scan failed") };
    let oracle = heisenberg_first_conjugate(0.5);
    let first = far.conjugate.first().copied().unwrap_or(f64::NAN);
    let err = (first - oracle).abs();
    outcome(
        min > 1e-4 * max && err <= 1e-4,
        format!("min|det| / max|det| = {:.3e} (> 1e-4); first conjugate {first:.6} vs {oracle:.6} (Δ {err:.1e})", min / max),
    )
}

fn c8_stationary_phase() -> Outcome {
    // (a) ∫ e^{−iλξ²/2} e^{−8ξ²} dξ = √(π/(8 + iλ/2)); the tail beyond |ξ| = 2 is below e^{−32}.
    let lambda = 100.0;
    let q = oscillatory_integral(|p| -0.5 * p[0] * p[0], |p| Complex64::new((-8.0 * p[0] * p[0]).exp(), 0.0), lambda, &[(-2.0, 2.0)], 512);
    let exact = (Complex64::new(std::f64::consts::PI, 0.0) / Complex64::new(8.0, 0.5 * lambda)).sqrt();
    let rel_a = (q - exact).norm() / exact.norm();
    // (b) leading-term error exponents.
    let lambdas: Vec<f64> = (5..=10).map(|k| 2f64.powi(k)).collect();
    let mut slopes = Vec::new();
    let mut ok_b = true;
    for (problem, d) in [(StatPhaseProblem::Gaussian1d, 1.0), (StatPhaseProblem::EuclideanMixed, 2.0)] {
        match statphase_sweep(problem, &lambdas) {
            Ok(s) => {
                ok_b &= (s.slope + (d / 2.0 + 1.0)).abs() <= 0.2;
                slopes.push(s.slope);
            }
            Err(e) => return outcome(false, format!("sweep: {e}")),
        }
    }
    // (c) mixed Hessian factorization at Heisenberg critical points with y = 0.
    let m = model("heisenberg");
    let mut worst_c: f64 = 0.0;
    for xi in [[0.6f64, 0.2, 0.5], [-0.3, 0.5, -0.8], [0.4, -0.4, 1.2]] {
        // Critical when t = A(0, ξ) and x = Exp_A^{0,−t}(ξ).
        let t = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let Ok(x) = exp_a(&m, &[0.0; 3], &xi, -t, 1e-12) else { return outcome(false, "Exp_A failed") };
        let guess: Vec<f64> = xi.iter().map(|v| v * 1.02).collect();
        match mixed_phase_critical(&m, &x, &guess, 0.98 * t) {
            Ok(c) => worst_c = worst_c.max(c.factorization_error),
            Err(e) => return outcome(false, format!("mixed critical point: {e}")),
        }
    }
    outcome(
        rel_a <= 1e-6 && ok_b && worst_c <= 1e-3,
        format!(
            "(a) rel err {rel_a:.1e} (≤ 1e-6); (b) slopes {:.3} (d=1, target −1.5), {:.3} (d=2, target −2); (c) factorization err {worst_c:.1e} (≤ 1e-3)",
            slopes[0], slopes[1]
        ),
    )
}

fn pow2(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

const MH_CHI: CutoffSpec = CutoffSpec::SmoothBump { a: 0.5, b: 1.5 };

fn c9_mh() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, lo, hi) in [(1, 0.4, 0.6), (2, 0.85, 1.15)] {
        let start = Instant::now();
        match mh_lowerbound_experiment(&Target::Euclidean { n }, 1, &pow2(4, 10), &MH_CHI) {
            Ok(r) => {
                let secs = start.elapsed().as_secs_f64();
                ok &= r.slope >= lo && r.slope <= hi && r.r2 >= 0.95 && secs < 60.0;
                parts.push(format!("n={n}: slope {:.3} ∈ [{lo}, {hi}], R² {:.4}, {secs:.1} s", r.slope, r.r2));
            }
            Err(e) => return outcome(false, format!("n={n}: {e}")),
        }
    }
    outcome(ok, parts.join("; "))
}

fn c10_sobolev() -> Outcome {
    let rho = CutoffSpec::SmoothBump { a: 0.5, b: 2.0 };
    let grids: Vec<_> = match pow2(4, 9).into_iter().map(|l| schrodinger_multiplier(&MH_CHI, l, GridSpec::default()).map(|m| (l, m))).collect() {
        Ok(g) => g,
        Err(e) => return outcome(false, format!("multiplier: {e}")),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let mut ratios = Vec::new();
        for (l, m) in &grids {
            match sobolev_sloc_norm(m, alpha, &rho, None) {
                Ok(s) => ratios.push(s.value / (1.0 + l).powf(alpha)),
                Err(e) => return outcome(false, format!("α = {alpha}: {e}")),
            }
        }
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= spread <= 3.0;
        parts.push(format!("α={alpha}: {spread:.3}"));
    }
    outcome(ok, format!("max/min of ‖m‖/(1+λ)^α (≤ 3): {}", parts.join(", ")))
}

fn c11_mp() -> Outcome {
    let chi = CutoffSpec::GaussianWindow { c: 1.0, w: 0.25 };
    let ls = pow2(4, 10);
    let target = Target::Euclidean { n: 2 };
    match (mp_lowerbound_experiment(&target, 1, &ls, 0.25, &chi), mp_lowerbound_experiment(&target, 2, &ls, 0.25, &chi)) {
        (Ok(r1), Ok(r2)) => outcome(
            (0.35..=0.65).contains(&r1.slope) && r2.slope.abs() <= 0.05,
            format!("p=1 slope {:.3} ∈ [0.35, 0.65]; p=2 slope {:.3} (|·| ≤ 0.05)", r1.slope, r2.slope),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn c12_grushin() -> Outcome {
    let start = Instant::now();
    match mh_lowerbound_experiment(&Target::grushin_default(), 1, &pow2(3, 6), &MH_CHI) {
        Ok(r) => {
            let secs = start.elapsed().as_secs_f64();
            let values: Vec<String> = r.rows.iter().map(|row| format!("{:.3}", row.value)).collect();
            // Context only: the same surrogate on λ ∈ {1..8}, where the
            // band-pass stays inside the resolved part of the grid spectrum.
            let resolved = mh_lowerbound_experiment(&Target::grushin_default(), 1, &pow2(0, 3), &MH_CHI)
                .map_or_else(|e| e.to_string(), |r| format!("{:.3}", r.slope));
            outcome(
                r.slope >= 0.7 && secs < 120.0,
                format!(
                    "slope {:.3} (≥ 0.7, target 1.0), ratios [{}], {secs:.1} s (< 120 s); slope on λ ∈ {{1..8}}: {resolved}",
                    r.slope,
                    values.join(", ")
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "model = \"euclidean1\"\nseed = 13\n\n[experiment]\nkind = \"mh\"\np = 1\nlambdas = \"16..256\"\n").unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let argv: Vec<String> =
            ["subwave", "experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()].map(String::from).to_vec();
        let code = subwave_cli::run(&argv);
        if code != 0 {
            return outcome(false, format!("run {k} exited with {code}"));
        }
        let text = std::fs::read_to_string(out.join("report.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("wall_clock_seconds");
        // The output directory differs by construction.
        obj["config"].as_object_mut().unwrap().remove("out");
        reports.push(serde_json::to_string_pretty(&v).unwrap());
    }
    outcome(reports[0] == reports[1], format!("report.json identical across runs: {}", reports[0] == reports[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, bool); 13] = [
        ("energy conservation", c1_energy, true),
        ("flow scaling", c2_scaling, true),
        ("Euclidean phase exactness", c3_euclidean_phase, true),
        ("eikonal residual", c4_eikonal, true),
        ("critical-point equivalence", c5_critical, true),
        ("Hessian rank identity", c6_hessian_rank, true),
        ("(RE) witness", c7_re_witness, true),
        ("stationary phase", c8_stationary_phase, true),
        ("MH lower bound", c9_mh, true),
        ("Sobolev-norm growth", c10_sobolev, true),
        ("MP lower bound", c11_mp, true),
        ("Grushin exploratory MH run", c12_grushin, false),
        ("determinism", c13_determinism, true),
    ];
    let mut failed = Vec::new();
    for (k, (name, check, gated)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if *gated { "" } else { " [exploratory, not gated]" };
        println!("criterion {:>2}: {tag} {name}{note}: {} ({:.1} s)", k + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass && *gated {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all gated criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
