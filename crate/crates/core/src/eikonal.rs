//! Characteristics construction of `ρ_t`, `σ_t`, the phase
//! `w(t, x, ξ) = ξ·σ_t(x)` and its derivatives, critical-point and rank
//! identities, and the leading transport amplitude.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use parking_lot::Mutex;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flow::{a_value, exp_a};
use crate::linalg::{central_jacobian, richardson_gradient, richardson_hessian};
use crate::models::{dot, norm, ModelSpec, RANK_THRESHOLD};
use crate::ode::rk4;
use crate::varjac::{dexp_a, numerical_rank, RankReport};

#[derive(Debug, Clone, Copy)]
pub struct PhaseOptions {
    /// Integrator tolerance for every flow evaluation.
    pub flow_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Largest `|t|` accepted as inside the existence regime.
    pub t_max: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { flow_tol: 1e-12, newton_tol: 1e-10, max_iter: 50, t_max: 1.0 }
    }
}

impl PhaseOptions {
    pub fn with_flow_tol(self, flow_tol: f64) -> Self {
        Self { flow_tol, ..self }
    }
}

/// `ρ_t^{ξ·dx}(x) = Exp_A^{x,−t}(ξ)`.
pub fn rho(model: &ModelSpec, xi: &[f64], t: f64, x: &[f64], tol: f64) -> Result<Vec<f64>> {
    exp_a(model, x, xi, -t, tol)
}

#[derive(Debug, Clone)]
pub struct SigmaSolution {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Jacobian of `y ↦ ρ_t(y)` used by the (chord) Newton iteration.
    pub jacobian: DMatrix<f64>,
}

fn rho_jacobian(model: &ModelSpec, xi: &[f64], t: f64, y: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    let steps: Vec<f64> = vec![1e-5 * (1.0 + norm(y)); y.len()];
    central_jacobian(y, &steps, |z| rho(model, xi, t, z, tol))
}

/// `σ_t^{ξ·dx}(x)`, the inverse of `ρ_t`, by Newton iteration.
pub fn sigma(model: &ModelSpec, xi: &[f64], t: f64, x: &[f64], newton_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let opts = PhaseOptions { newton_tol, max_iter, ..PhaseOptions::default() };
    Ok(sigma_solve(model, xi, t, x, &opts, None, None)?.point)
}

/// Newton solve of `ρ_t(y) = x`. A supplied Jacobian is used as a chord
/// matrix and refreshed only if convergence stalls above tolerance; with a
/// fresh Jacobian, steps that do not reduce the residual are backtracked. Once
/// within `newton_tol` the iteration continues while the residual still
/// halves, so the result sits at the rounding floor and depends smoothly
/// on the inputs.
pub fn sigma_solve(
    model: &ModelSpec,
    xi: &[f64],
    t: f64,
    x: &[f64],
    opts: &PhaseOptions,
    guess: Option<&[f64]>,
    jacobian: Option<&DMatrix<f64>>,
) -> Result<SigmaSolution> {
    let n = model.dim();
    if x.len() != n || xi.len() != n {
        return Err(Error::InvalidArgument(format!("expected vectors of length {n}")));
    }
    if t == 0.0 {
        a_value(model, x, xi)?;
        return Ok(SigmaSolution { point: x.to_vec(), iterations: 0, residual: 0.0, jacobian: DMatrix::identity(n, n) });
    }
    let mut y = match guess {
        Some(g) => g.to_vec(),
        None => exp_a(model, x, xi, t, opts.flow_tol)?,
    };
    let mut jac = match jacobian {
        Some(j) => j.clone(),
        None => rho_jacobian(model, xi, t, &y, opts.flow_tol)?,
    };
    let mut lu = jac.clone().lu();
    // Whether `jac` was evaluated at the current iterate.
    let mut fresh = jacobian.is_none();
    let residual_at = |y: &[f64]| -> Result<(DVector<f64>, f64)> {
        let r = DVector::from_iterator(n, rho(model, xi, t, y, opts.flow_tol)?.iter().zip(x).map(|(a, b)| a - b));
        let nr = r.norm();
        Ok((r, nr))
    };
    let (mut r, mut res) = residual_at(&y)?;
    let floor = 1e-15 * (1.0 + norm(x));
    let mut best = (y.clone(), res);
    let mut iterations = 0;
    while res > floor && iterations < opts.max_iter {
        let dy = lu.solve(&r).ok_or(Error::SingularJacobian)?;
        iterations += 1;
        let step = |alpha: f64| -> Vec<f64> { y.iter().zip(dy.iter()).map(|(a, d)| a - alpha * d).collect() };
        let full = step(1.0);
        let trial = residual_at(&full);
        if let Ok((r_new, res_new)) = trial {
            if res_new < best.1 {
                best = (full.clone(), res_new);
            }
            if res_new <= 0.5 * res {
                y = full;
                r = r_new;
                res = res_new;
                fresh = false;
                continue;
            }
        }
        if best.1 <= opts.newton_tol {
            break;
        }
        if !fresh {
            // Stale chord matrix: refresh it at the best point and retry.
            y = best.0.clone();
            jac = rho_jacobian(model, xi, t, &y, opts.flow_tol)?;
            lu = jac.clone().lu();
            (r, res) = residual_at(&y)?;
            fresh = true;
            continue;
        }
        // The exact Newton step overshoots: backtrack along it.
        let mut alpha = 0.5;
        let mut found = None;
        while alpha >= 1.0 / 1024.0 {
            let yc = step(alpha);
            if let Ok((rc, nc)) = residual_at(&yc) {
                if nc <= (1.0 - 0.25 * alpha) * res {
                    found = Some((yc, rc, nc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((yc, rc, nc)) = found else { break };
        if nc < best.1 {
            best = (yc.clone(), nc);
        }
        jac = rho_jacobian(model, xi, t, &yc, opts.flow_tol)?;
        lu = jac.clone().lu();
        y = yc;
        r = rc;
        res = nc;
    }
    let (point, residual) = best;
    if !(residual <= opts.newton_tol) {
        return Err(Error::NoConvergence { iterations, residual });
    }
    Ok(SigmaSolution { point, iterations, residual, jacobian: jac })
}

fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

/// The phase `w(t, x, ξ)` with its derivatives at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub w: f64,
    pub dt_w: f64,
    pub dx_w: Vec<f64>,
    pub dxi_w: Vec<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub dxi2_w: DMatrix<f64>,
    pub dt2_w: f64,
    pub dtdxi_w: Vec<f64>,
    pub sigma_point: Vec<f64>,
    pub converged: bool,
}

impl PhaseSample {
    /// `|ξ·∂_ξw − w|`, zero for a 1-homogeneous phase.
    pub fn euler_defect(&self) -> f64 {
        (dot(&self.xi, &self.dxi_w) - self.w).abs()
    }

    /// `|∂_ξw − σ_t(x)|`, zero by the Trèves derivative formula.
    pub fn treves_defect(&self) -> f64 {
        self.dxi_w.iter().zip(&self.sigma_point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Relative step for `t` and `ξ` stencils; these also feed second
/// derivatives, so they are larger than the first-derivative `x` step.
const XI_T_STEP: f64 = 1e-3;
const X_STEP: f64 = 1e-5;

/// Richardson combination of central differences at steps `h` and `h/2`.
fn richardson(d_h: f64, d_half: f64) -> f64 {
    d_half + (d_half - d_h) / 3.0
}

/// `w = ξ·σ_t(x)` with all derivatives, by central differences of Newton
/// solves that share the base solve's Jacobian.
pub fn phase_w(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], tol: f64) -> Result<PhaseSample> {
    phase_sample(model, t, x, xi, &PhaseOptions::default().with_flow_tol(tol))
}

pub fn phase_sample(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], opts: &PhaseOptions) -> Result<PhaseSample> {
    let n = model.dim();
    if t.abs() > opts.t_max {
        return Err(Error::InvalidArgument(format!(
            "|t| = {} exceeds the existence regime bound {}",
            t.abs(),
            opts.t_max
        )));
    }
    let base = sigma_solve(model, xi, t, x, opts, None, None)?;
    let s0 = base.point.clone();
    let jac0 = if t == 0.0 { rho_jacobian(model, xi, 0.0, x, opts.flow_tol)? } else { base.jacobian.clone() };
    let w0 = dot(xi, &s0);
    let lu0 = jac0.clone().lu();
    let solve = |tt: f64, xx: &[f64], ee: &[f64], guess: &[f64]| -> Result<Vec<f64>> {
        Ok(sigma_solve(model, ee, tt, xx, opts, Some(guess), Some(&jac0))?.point)
    };

    // ξ stencil: ∂_ξw from w, ∂²_ξw as the ξ-Jacobian of σ (= ∂_ξw).
    let h_xi = XI_T_STEP * norm(xi);
    let mut dxi_w = vec![0.0; n];
    let mut dsigma = DMatrix::zeros(n, n);
    let mut e = xi.to_vec();
    for k in 0..n {
        let mut dw = [0.0; 2];
        let mut ds = [vec![0.0; n], vec![0.0; n]];
        for (lvl, h) in [h_xi, 0.5 * h_xi].into_iter().enumerate() {
            e[k] = xi[k] + h;
            let sp = solve(t, x, &e, &s0)?;
            let wp = dot(&e, &sp);
            e[k] = xi[k] - h;
            let sm = solve(t, x, &e, &s0)?;
            let wm = dot(&e, &sm);
            e[k] = xi[k];
            dw[lvl] = (wp - wm) / (2.0 * h);
            for i in 0..n {
                ds[lvl][i] = (sp[i] - sm[i]) / (2.0 * h);
            }
        }
        dxi_w[k] = richardson(dw[0], dw[1]);
        for i in 0..n {
            dsigma[(i, k)] = richardson(ds[0][i], ds[1][i]);
        }
    }
    let dxi2_w = (&dsigma + dsigma.transpose()) * 0.5;

    // x stencil, warm-started with the linear prediction σ0 + J⁻¹δx.
    let h_x = X_STEP * (1.0 + norm(x));
    let mut dx_w = vec![0.0; n];
    let mut xp = x.to_vec();
    for k in 0..n {
        let mut dw = [0.0; 2];
        for (lvl, h) in [h_x, 0.5 * h_x].into_iter().enumerate() {
            let mut w_pm = [0.0; 2];
            for (slot, sgn) in [1.0, -1.0].into_iter().enumerate() {
                xp[k] = x[k] + sgn * h;
                let mut delta = DVector::zeros(n);
                delta[k] = sgn * h;
                let guess: Vec<f64> = match lu0.solve(&delta) {
                    Some(d) => s0.iter().zip(d.iter()).map(|(a, b)| a + b).collect(),
                    None => s0.clone(),
                };
                w_pm[slot] = dot(xi, &solve(t, &xp, xi, &guess)?);
            }
            xp[k] = x[k];
            dw[lvl] = (w_pm[0] - w_pm[1]) / (2.0 * h);
        }
        dx_w[k] = richardson(dw[0], dw[1]);
    }

    // t stencil: ∂_tw, ∂²_tw and ∂_t∂_ξw = ∂_tσ.
    let h_t = XI_T_STEP * t.abs().max(1.0);
    let mut dt = [0.0; 2];
    let mut dtt = [0.0; 2];
    let mut dts = [vec![0.0; n], vec![0.0; n]];
    for (lvl, h) in [h_t, 0.5 * h_t].into_iter().enumerate() {
        let sp = solve(t + h, x, xi, &s0)?;
        let sm = solve(t - h, x, xi, &s0)?;
        let (wp, wm) = (dot(xi, &sp), dot(xi, &sm));
        dt[lvl] = (wp - wm) / (2.0 * h);
        dtt[lvl] = (wp - 2.0 * w0 + wm) / (h * h);
        for i in 0..n {
            dts[lvl][i] = (sp[i] - sm[i]) / (2.0 * h);
        }
    }
    let dtdxi_w = (0..n).map(|i| richardson(dts[0][i], dts[1][i])).collect();

    Ok(PhaseSample {
        t,
        x: x.to_vec(),
        xi: xi.to_vec(),
        w: w0,
        dt_w: richardson(dt[0], dt[1]),
        dx_w,
        dxi_w,
        dxi2_w,
        dt2_w: richardson(dtt[0], dtt[1]),
        dtdxi_w,
        sigma_point: s0,
        converged: true,
    })
}

/// Thread-safe memo of phase samples keyed on inputs rounded to a `1e-9`
/// grid, so repeated queries skip the Newton solves.
#[derive(Debug, Default)]
pub struct PhaseCache {
    map: Mutex<HashMap<(String, Vec<i64>), PhaseSample>>,
}

impl PhaseCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64]) -> (String, Vec<i64>) {
        let q = |v: f64| (v * 1e9).round() as i64;
        let mut k = Vec::with_capacity(1 + 2 * x.len());
        k.push(q(t));
        k.extend(x.iter().chain(xi).map(|&v| q(v)));
        (model.name().to_string(), k)
    }

    pub fn phase(&self, model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], opts: &PhaseOptions) -> Result<PhaseSample> {
        let key = Self::key(model, t, x, xi);
        if let Some(s) = self.map.lock().get(&key) {
            return Ok(s.clone());
        }
        let s = phase_sample(model, t, x, xi, opts)?;
        self.map.lock().insert(key, s.clone());
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.map.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `|∂_tw − √H(x, ∂_xw)|`.
pub fn eikonal_residual(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], tol: f64) -> Result<f64> {
    let s = phase_w(model, t, x, xi, tol)?;
    Ok((s.dt_w - a_value(model, x, &s.dx_w)?).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalCheck {
    /// `|∂_ξw(t, x, ξ) − y|`.
    pub lhs: f64,
    /// `|x − Exp_A^{y,−t}(ξ)|`.
    pub rhs: f64,
    pub dt_at_crit: f64,
    pub sqrt_h: f64,
}

impl CriticalCheck {
    /// Whether both sides of the equivalence hold to the stated tolerances.
    pub fn holds(&self, y_norm: f64) -> bool {
        self.lhs <= 1e-5 * (1.0 + y_norm) && (self.dt_at_crit - self.sqrt_h).abs() <= 1e-5 * (1.0 + self.sqrt_h)
    }
}

pub fn critical_check(model: &ModelSpec, t: f64, x: &[f64], y: &[f64], xi: &[f64], tol: f64) -> Result<CriticalCheck> {
    let sqrt_h = a_value(model, y, xi)?;
    let s = phase_w(model, t, x, xi, tol)?;
    let lhs = s.dxi_w.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let back = exp_a(model, y, xi, -t, tol)?;
    let rhs = x.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(CriticalCheck { lhs, rhs, dt_at_crit: s.dt_w, sqrt_h })
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianRankCheck {
    pub hessian: RankReport,
    pub exp_a: RankReport,
    pub ranks_equal: bool,
}

/// Ranks of `∂²_ξw(t, x, ξ)` and `D Exp_A^{y,−t}|_ξ` at a critical triple.
pub fn hessian_rank_at_critical(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    y: &[f64],
    xi: &[f64],
    tol: f64,
) -> Result<HessianRankCheck> {
    let s = phase_w(model, t, x, xi, tol)?;
    let hessian = numerical_rank(&s.dxi2_w, RANK_THRESHOLD);
    let exp_a = numerical_rank(&dexp_a(model, y, xi, -t, tol)?, RANK_THRESHOLD);
    let ranks_equal = hessian.numerical_rank == exp_a.numerical_rank;
    Ok(HessianRankCheck { hessian, exp_a, ranks_equal })
}

/// Gradient and Hessian of `x ↦ w(t, x, ξ)`.
fn spatial_derivatives(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], opts: &PhaseOptions) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = model.dim();
    let base = sigma_solve(model, xi, t, x, opts, None, None)?;
    let lu = base.jacobian.clone().lu();
    let w = |z: &[f64]| -> Result<f64> {
        let delta = DVector::from_iterator(n, z.iter().zip(x).map(|(a, b)| a - b));
        let guess: Vec<f64> = match lu.solve(&delta) {
            Some(d) => base.point.iter().zip(d.iter()).map(|(a, b)| a + b).collect(),
            None => base.point.clone(),
        };
        Ok(dot(xi, &sigma_solve(model, xi, t, z, opts, Some(&guess), Some(&base.jacobian))?.point))
    };
    let w0 = dot(xi, &base.point);
    let steps = vec![XI_T_STEP * (1.0 + norm(x)); n];
    let grad = richardson_gradient(x, &steps, w)?;
    let hess = richardson_hessian(x, w0, &steps, w)?;
    Ok((grad, hess))
}

/// Minimum number of RK4 steps along the characteristic.
pub const TRANSPORT_STEPS: usize = 200;

/// Leading amplitude `q_0(t, x)` solving `∂_tq + Wq + Fq = 0`, `q(0) = g0`,
/// with `W = −∂_ξA(x, ∂_xw)·∇` and `F = −½ tr(∂²_ξA(x, ∂_xw)·∂²_xw)`
/// (subprincipal term set to zero). Integrates the characteristic
/// `γ' = −∂_ξA` backwards from `(t, x)` to time 0 with RK4.
pub fn transport_q0<G>(model: &ModelSpec, t: f64, x: &[f64], xi: &[f64], g0: G, tol: f64) -> Result<Complex64>
where
    G: Fn(&[f64]) -> Complex64,
{
    let n = model.dim();
    let opts = PhaseOptions::default().with_flow_tol(tol);
    if t == 0.0 {
        return Ok(g0(x));
    }
    let mut failure: Option<Error> = None;
    let z0: Vec<f64> = x.iter().copied().chain([0.0]).collect();
    let zf = rk4(
        |s, z, dz| {
            dz.iter_mut().for_each(|d| *d = 0.0);
            if failure.is_some() {
                return;
            }
            let p = &z[..n];
            let res = spatial_derivatives(model, s, p, xi, &opts).and_then(|(eta, wxx)| {
                let c = model.cometric(p);
                let e = DVector::from_column_slice(&eta);
                let ce = &c * &e;
                let a = a_value(model, p, &eta)?;
                let d2a = &c / a - &ce * ce.transpose() / (a * a * a);
                Ok((ce / a, -0.5 * (d2a * wxx).trace()))
            });
            match res {
                Ok((da, f)) => {
                    for i in 0..n {
                        dz[i] = -da[i];
                    }
                    dz[n] = -f;
                }
                Err(e) => failure = Some(e),
            }
        },
        t,
        &z0,
        0.0,
        TRANSPORT_STEPS,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(g0(&zf[..n]) * (-zf[n]).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::register_builtin;

    #[test]
    fn euclidean_sigma_and_rho() {
        let m = register_builtin("euclidean(2)").unwrap();
        let xi = [3.0, 4.0];
        let x = [0.2, -0.1];
        let r = rho(&m, &xi, 0.5, &x, 1e-12).unwrap();
        assert!((r[0] - (0.2 - 0.3)).abs() < 1e-14 && (r[1] - (-0.1 - 0.4)).abs() < 1e-14);
        let s = sigma(&m, &xi, 0.5, &x, 1e-10, 50).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 0.3).abs() < 1e-12);
        assert_eq!(sigma(&m, &xi, 0.0, &x, 1e-10, 50).unwrap(), x.to_vec());
    }

    #[test]
    fn euclidean_phase_sample() {
        let m = register_builtin("euclidean(2)").unwrap();
        let s = phase_w(&m, 0.5, &[0.3, -0.2], &[1.0, 0.0], 1e-12).unwrap();
        assert!((s.w - (0.3 + 0.5)).abs() < 1e-12);
        assert!((s.dt_w - 1.0).abs() < 1e-9);
        assert!((s.dx_w[0] - 1.0).abs() < 1e-9 && s.dx_w[1].abs() < 1e-9);
        assert!((s.dxi_w[0] - 0.8).abs() < 1e-9 && (s.dxi_w[1] + 0.2).abs() < 1e-9);
        assert!((s.dxi2_w.clone() - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.5])).norm() < 1e-9);
    }

    #[test]
    fn zero_amplitude_transports_to_zero() {
        let m = register_builtin("euclidean(1)").unwrap();
        let q = transport_q0(&m, 0.3, &[0.1], &[1.0], |_| Complex64::new(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(q, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cache_reuses_samples() {
        let m = register_builtin("euclidean(2)").unwrap();
        let cache = PhaseCache::new();
        let o = PhaseOptions::default();
        let a = cache.phase(&m, 0.2, &[0.0, 0.0], &[1.0, 1.0], &o).unwrap();
        let b = cache.phase(&m, 0.2 + 1e-12, &[0.0, 0.0], &[1.0, 1.0], &o).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(a.w, b.w);
    }
}
