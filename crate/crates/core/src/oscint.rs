//! Oscillatory integrals by composite Gauss–Legendre quadrature and the
//! leading stationary-phase term.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::eikonal::{PhaseCache, PhaseOptions};
use crate::error::{Error, Result};
use crate::linalg::{loglog_fit, orthogonal_complement, solve};
use crate::models::{norm, ModelSpec, RANK_THRESHOLD};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Nodes per Gauss–Legendre panel of the composite rule.
pub const PANEL_NODES: usize = 16;

/// Composite rule on `[a, b]` with at least `pts` nodes, in 16-node panels.
pub fn composite_rule(a: f64, b: f64, pts: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = pts.div_ceil(PANEL_NODES).max(1);
    let (gx, gw) = gauss_legendre(PANEL_NODES);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * PANEL_NODES);
    let mut ws = Vec::with_capacity(panels * PANEL_NODES);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// `∫_box e^{iλf(ξ)} b(ξ) dξ` by tensor-product composite Gauss–Legendre
/// quadrature. Rows of the outermost dimension are summed in index order,
/// so the result does not depend on the thread count.
pub fn oscillatory_integral<F, B>(phase: F, amplitude: B, lambda: f64, bx: &[(f64, f64)], pts_per_dim: usize) -> Complex64
where
    F: Fn(&[f64]) -> f64 + Sync,
    B: Fn(&[f64]) -> Complex64 + Sync,
{
    let d = bx.len();
    if d == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let rules: Vec<(Vec<f64>, Vec<f64>)> = bx.iter().map(|&(a, b)| composite_rule(a, b, pts_per_dim)).collect();
    let m = rules[0].0.len();
    let inner: usize = rules[1..].iter().map(|r| r.0.len()).product();
    let rows: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut p = vec![0.0; d];
            p[0] = rules[0].0[i0];
            let mut acc = Complex64::new(0.0, 0.0);
            for flat in 0..inner {
                let mut rem = flat;
                let mut w = rules[0].1[i0];
                for k in (1..d).rev() {
                    let len = rules[k].0.len();
                    let j = rem % len;
                    rem /= len;
                    p[k] = rules[k].0[j];
                    w *= rules[k].1[j];
                }
                let b = amplitude(&p);
                if b != Complex64::new(0.0, 0.0) {
                    acc += w * b * Complex64::from_polar(1.0, lambda * phase(&p));
                }
            }
            acc
        })
        .collect();
    rows.into_iter().sum()
}

fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointData {
    pub location: Vec<f64>,
    pub phase_value: f64,
    #[serde(serialize_with = "serialize_rows")]
    pub hessian: DMatrix<f64>,
    pub signature: i32,
    pub det_abs: f64,
}

impl CriticalPointData {
    /// Symmetrizes the Hessian and computes signature and `|det|`.
    /// Eigenvalues within `1e-8` of the largest count as zero, which is an
    /// error.
    pub fn new(location: Vec<f64>, phase_value: f64, hessian: DMatrix<f64>) -> Result<Self> {
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let (signature, det_abs) = signature_and_det(&hessian)?;
        Ok(Self { location, phase_value, hessian, signature, det_abs })
    }
}

/// Eigenvalue-sign signature and `|det|` of a symmetric matrix.
pub fn signature_and_det(h: &DMatrix<f64>) -> Result<(i32, f64)> {
    let eig = h.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || eig.eigenvalues.iter().any(|v| v.abs() <= RANK_THRESHOLD * scale) {
        return Err(Error::DegenerateCriticalPoint(format!("eigenvalues {:?}", eig.eigenvalues.as_slice())));
    }
    let sig = eig.eigenvalues.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).sum();
    Ok((sig, eig.eigenvalues.iter().map(|v| v.abs()).product()))
}

/// Newton iteration for `grad = 0`, at most 50 steps.
pub fn find_critical_point<G, H>(grad: G, hess: H, guess: &[f64], tol: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
    H: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut p = guess.to_vec();
    let mut res = f64::INFINITY;
    for it in 0..50 {
        let g = grad(&p);
        res = norm(&g);
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: res });
        }
        if res <= tol {
            return Ok(p);
        }
        let step = solve(&hess(&p), &DVector::from_vec(g))?;
        p.iter_mut().zip(step.iter()).for_each(|(a, s)| *a -= s);
    }
    Err(Error::NoConvergence { iterations: 50, residual: res })
}

/// `(2π/λ)^{d/2} |det|^{−1/2} e^{iπσ/4} e^{iλf(c)} b(c)`.
pub fn stationary_phase_leading(cp: &CriticalPointData, amplitude_at_cp: Complex64, lambda: f64, d: usize) -> Complex64 {
    let mag = (2.0 * PI / lambda).powf(0.5 * d as f64) / cp.det_abs.sqrt();
    let arg = PI * cp.signature as f64 / 4.0 + lambda * cp.phase_value;
    amplitude_at_cp * Complex64::from_polar(mag, arg)
}

/// Critical point of the mixed phase `f(t, ξ) = w(t, x, ξ) − t²/2` and the
/// block-determinant factorization
/// `|det ∂²_{(t,ξ)} f| = (t/|ξ|)² |det ∂²_ξw|_{ξ^⊥}|`.
#[derive(Debug, Clone, Serialize)]
pub struct MixedCritical {
    pub t: f64,
    pub xi: Vec<f64>,
    pub data: CriticalPointData,
    /// `|det ∂²_ξw|` restricted to the orthogonal complement of `ξ`.
    pub restricted_det: f64,
    /// `(t/|ξ|)²·restricted_det`.
    pub factorized_det: f64,
    pub factorization_error: f64,
    pub iterations: usize,
}

pub fn mixed_phase_critical(model: &ModelSpec, x: &[f64], xi_guess: &[f64], t_guess: f64) -> Result<MixedCritical> {
    mixed_phase_critical_with(model, x, xi_guess, t_guess, &PhaseOptions::default(), &PhaseCache::new())
}

pub fn mixed_phase_critical_with(
    model: &ModelSpec,
    x: &[f64],
    xi_guess: &[f64],
    t_guess: f64,
    opts: &PhaseOptions,
    cache: &PhaseCache,
) -> Result<MixedCritical> {
    let n = model.dim();
    let mut t = t_guess;
    let mut xi = xi_guess.to_vec();
    let mut iterations = 0;
    loop {
        let s = cache.phase(model, t, x, &xi, opts)?;
        let mut g = DVector::zeros(n + 1);
        g[0] = s.dt_w - t;
        for k in 0..n {
            g[1 + k] = s.dxi_w[k];
        }
        let hess = mixed_hessian(&s);
        let res = g.norm();
        if res <= 1e-9 * (1.0 + norm(x)) {
            let data = CriticalPointData::new(
                std::iter::once(t).chain(xi.iter().copied()).collect(),
                s.w - 0.5 * t * t,
                hess,
            )?;
            let basis = orthogonal_complement(&DVector::from_column_slice(&xi));
            let restricted = basis.transpose() * &s.dxi2_w * &basis;
            let restricted_det = if n > 1 { restricted.determinant().abs() } else { 1.0 };
            let ratio = t / norm(&xi);
            let factorized_det = ratio * ratio * restricted_det;
            if restricted_det <= RANK_THRESHOLD * s.dxi2_w.norm().powi(n as i32 - 1) {
                return Err(Error::DegenerateCriticalPoint("restricted ξ-Hessian is singular (conjugate point)".into()));
            }
            let factorization_error = (data.det_abs - factorized_det).abs() / factorized_det;
            return Ok(MixedCritical { t, xi, data, restricted_det, factorized_det, factorization_error, iterations });
        }
        if iterations >= 50 {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        let step = solve(&hess, &g)?;
        t -= step[0];
        for k in 0..n {
            xi[k] -= step[1 + k];
        }
        iterations += 1;
        if !t.is_finite() || t.abs() > opts.t_max || xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
    }
}

/// `∂²_{(t,ξ)}(w − t²/2)` from a phase sample.
pub fn mixed_hessian(s: &crate::eikonal::PhaseSample) -> DMatrix<f64> {
    let n = s.xi.len();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h[(0, 0)] = s.dt2_w - 1.0;
    for k in 0..n {
        h[(0, 1 + k)] = s.dtdxi_w[k];
        h[(1 + k, 0)] = s.dtdxi_w[k];
        for l in 0..n {
            h[(1 + k, 1 + l)] = s.dxi2_w[(k, l)];
        }
    }
    h
}

/// Built-in stationary-phase test problems with closed-form critical data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatPhaseProblem {
    /// `d = 1`: `f(ξ) = −ξ²/2`, `b(ξ) = e^{−8ξ²}`.
    Gaussian1d,
    /// `d = 2`: the mixed phase `xξ + t|ξ| − t²/2` of the Euclidean line at
    /// `x = −1`, with a product bump amplitude around `(t, ξ) = (1, 1)`.
    EuclideanMixed,
}

impl std::str::FromStr for StatPhaseProblem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian1d" | "gaussian-1d" => Ok(Self::Gaussian1d),
            "euclidean-mixed" | "mixed" => Ok(Self::EuclideanMixed),
            _ => Err(Error::InvalidArgument(format!("unknown stationary-phase problem `{s}`"))),
        }
    }
}

fn bump(v: f64, a: f64, b: f64) -> f64 {
    let u = (2.0 * v - a - b) / (b - a);
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

impl StatPhaseProblem {
    pub fn dim(self) -> usize {
        match self {
            Self::Gaussian1d => 1,
            Self::EuclideanMixed => 2,
        }
    }

    pub fn phase(self, p: &[f64]) -> f64 {
        match self {
            Self::Gaussian1d => -0.5 * p[0] * p[0],
            Self::EuclideanMixed => -p[1] + p[0] * p[1].abs() - 0.5 * p[0] * p[0],
        }
    }

    pub fn amplitude(self, p: &[f64]) -> Complex64 {
        match self {
            Self::Gaussian1d => Complex64::new((-8.0 * p[0] * p[0]).exp(), 0.0),
            Self::EuclideanMixed => Complex64::new(bump(p[0], 0.5, 1.5) * bump(p[1], 0.5, 1.5), 0.0),
        }
    }

    pub fn domain(self) -> Vec<(f64, f64)> {
        match self {
            Self::Gaussian1d => vec![(-2.0, 2.0)],
            Self::EuclideanMixed => vec![(0.5, 1.5), (0.5, 1.5)],
        }
    }

    pub fn critical_point(self) -> Result<CriticalPointData> {
        match self {
            Self::Gaussian1d => CriticalPointData::new(vec![0.0], 0.0, DMatrix::from_element(1, 1, -1.0)),
            Self::EuclideanMixed => {
                CriticalPointData::new(vec![1.0, 1.0], -0.5, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, 0.0]))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatPhaseRow {
    pub lambda: f64,
    pub quadrature_abs: f64,
    pub leading_abs: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatPhaseSweep {
    pub problem: StatPhaseProblem,
    pub rows: Vec<StatPhaseRow>,
    pub slope: f64,
    pub r2: f64,
    /// `−(d/2 + 1)`.
    pub expected_slope: f64,
}

/// Quadrature nodes per dimension used for a given `λ`: at least
/// `16·⌈√λ⌉`, and enough to resolve the oscillation on the domain.
pub fn default_pts_per_dim(lambda: f64) -> usize {
    (16 * lambda.sqrt().ceil() as usize).max((2.0 * lambda) as usize).max(64)
}

/// Leading-term error `|quadrature − leading|` over a list of `λ`, with a
/// log-log slope fit.
pub fn statphase_sweep(problem: StatPhaseProblem, lambdas: &[f64]) -> Result<StatPhaseSweep> {
    let cp = problem.critical_point()?;
    let amp = problem.amplitude(&cp.location);
    let d = problem.dim();
    let dom = problem.domain();
    let rows: Vec<StatPhaseRow> = lambdas
        .iter()
        .map(|&lambda| {
            let q = oscillatory_integral(
                |p| problem.phase(p),
                |p| problem.amplitude(p),
                lambda,
                &dom,
                default_pts_per_dim(lambda),
            );
            let lead = stationary_phase_leading(&cp, amp, lambda, d);
            StatPhaseRow { lambda, quadrature_abs: q.norm(), leading_abs: lead.norm(), error: (q - lead).norm() }
        })
        .collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let (slope, _, r2) = loglog_fit(&ls, &es);
    Ok(StatPhaseSweep { problem, rows, slope, r2, expected_slope: -(0.5 * d as f64 + 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn zero_amplitude() {
        let v = oscillatory_integral(|p| p[0], |_| Complex64::new(0.0, 0.0), 10.0, &[(0.0, 1.0)], 32);
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn quadratic_phase_one_newton_step() {
        let p = find_critical_point(
            |p| vec![2.0 * (p[0] - 1.0), 4.0 * (p[1] + 2.0)],
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
            &[5.0, 5.0],
            1e-12,
        )
        .unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn degenerate_hessian_rejected() {
        assert!(CriticalPointData::new(vec![0.0], 0.0, DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn leading_term_pure_gaussian() {
        let cp = CriticalPointData::new(vec![0.0], 0.0, DMatrix::from_element(1, 1, -1.0)).unwrap();
        let l = stationary_phase_leading(&cp, Complex64::new(1.0, 0.0), 100.0, 1);
        let want = Complex64::from_polar((2.0 * PI / 100.0).sqrt(), -PI / 4.0);
        assert!((l - want).norm() < 1e-15);
    }
}
