//! Hamiltonian flows on `T*M` and the exponential maps `Exp_H`, `Exp_A`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{dot, CotangentPoint, ModelSpec, DEGENERACY_THRESHOLD};
use crate::ode::Dopri5;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Uniform dense-output samples per trajectory (intervals + 1).
pub const TRAJECTORY_SAMPLES: usize = 65;

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CotangentPoint>,
    pub energy: Vec<f64>,
    pub tol: f64,
}

impl FlowTrajectory {
    pub fn final_state(&self) -> &CotangentPoint {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// `max_t |H(t) − H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// Drift bound `100·tol·(1 + |H(0)|)` of the conservation invariant.
    pub fn drift_bound(&self) -> f64 {
        100.0 * self.tol * (1.0 + self.energy[0].abs())
    }
}

fn solver(tol: f64) -> Result<Dopri5> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(Dopri5::new(tol))
}

fn check_dim(model: &ModelSpec, x: &[f64], xi: &[f64]) -> Result<()> {
    let n = model.dim();
    if x.len() != n || xi.len() != n {
        return Err(Error::InvalidArgument(format!(
            "model `{}` has dimension {n}, got x of length {} and ξ of length {}",
            model.name(),
            x.len(),
            xi.len()
        )));
    }
    Ok(())
}

fn check_energy(h0: f64, h1: f64, tol: f64) -> Result<()> {
    let drift = (h1 - h0).abs();
    let bound = 100.0 * tol * (1.0 + h0.abs());
    if drift > bound {
        return Err(Error::EnergyDrift { drift, bound });
    }
    Ok(())
}

/// Integrates Hamilton's equations from `p0` to `t_final` (either sign),
/// sampling at [`TRAJECTORY_SAMPLES`] uniform times.
pub fn hamilton_flow(model: &ModelSpec, p0: &CotangentPoint, t_final: f64, tol: f64) -> Result<FlowTrajectory> {
    hamilton_flow_sampled(model, p0, t_final, tol, TRAJECTORY_SAMPLES)
}

pub fn hamilton_flow_sampled(
    model: &ModelSpec,
    p0: &CotangentPoint,
    t_final: f64,
    tol: f64,
    samples: usize,
) -> Result<FlowTrajectory> {
    check_dim(model, &p0.x, &p0.xi)?;
    if !t_final.is_finite() {
        return Err(Error::InvalidArgument("final time must be finite".into()));
    }
    let samples = samples.max(2);
    let times: Vec<f64> = (0..samples).map(|k| t_final * k as f64 / (samples - 1) as f64).collect();
    let out = solver(tol)?.integrate(
        |_, z, dz| {
            model.hamilton_rhs(z, dz);
        },
        0.0,
        &p0.to_state(),
        t_final,
        &times,
    )?;
    let states: Vec<CotangentPoint> = out.samples.iter().map(|z| CotangentPoint::from_state(z)).collect();
    let energy: Vec<f64> = states.iter().map(|p| model.hamiltonian(p)).collect();
    let traj = FlowTrajectory { times, states, energy, tol };
    let drift = traj.energy_drift();
    if drift > traj.drift_bound() {
        return Err(Error::EnergyDrift { drift, bound: traj.drift_bound() });
    }
    Ok(traj)
}

/// Endpoint `Φ_H^t(z0)` of the flow in flattened `(x, ξ)` coordinates,
/// without intermediate samples. Energy is checked at the endpoint only.
pub fn flow_endpoint(model: &ModelSpec, z0: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    let n = model.dim();
    check_dim(model, &z0[..n.min(z0.len())], &z0[n.min(z0.len())..])?;
    let h0 = model.hamiltonian_at(&z0[..n], &z0[n..]);
    let out = solver(tol)?.integrate(
        |_, z, dz| {
            model.hamilton_rhs(z, dz);
        },
        0.0,
        z0,
        t,
        &[],
    )?;
    let z = out.y_end;
    check_energy(h0, model.hamiltonian_at(&z[..n], &z[n..]), tol)?;
    Ok(z)
}

/// `Exp_H^x(ξ)`: base projection of `Φ_H^1(x, ξ)`.
pub fn exp_h(model: &ModelSpec, x: &[f64], xi: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_dim(model, x, xi)?;
    let z0: Vec<f64> = x.iter().chain(xi).copied().collect();
    let mut z = flow_endpoint(model, &z0, 1.0, tol)?;
    z.truncate(model.dim());
    Ok(z)
}

/// `√H(y, ξ)`, or a degeneracy error outside the elliptic cone.
pub fn a_value(model: &ModelSpec, y: &[f64], xi: &[f64]) -> Result<f64> {
    let h = model.hamiltonian_at(y, xi);
    if !(h > DEGENERACY_THRESHOLD * dot(xi, xi)) {
        return Err(Error::DegenerateCovector { h });
    }
    Ok(h.sqrt())
}

/// Full state of `Φ_A^t(y, ξ)`, computed as `Φ_H^{t/(2√H)}(y, ξ)`.
///
/// The flow is started from the energy-normalized covector `ξ/√H` for time
/// `t/2` and the covector is scaled back afterwards. This makes the result
/// exactly 0-homogeneous in `ξ` (up to rounding) rather than only to the
/// integrator tolerance, which keeps finite differences along rays clean.
pub fn a_flow_state(model: &ModelSpec, y: &[f64], xi: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    check_dim(model, y, xi)?;
    let a = a_value(model, y, xi)?;
    if t == 0.0 {
        return Ok(y.iter().chain(xi).copied().collect());
    }
    let z0: Vec<f64> = y.iter().copied().chain(xi.iter().map(|v| v / a)).collect();
    let mut z = flow_endpoint(model, &z0, 0.5 * t, tol)?;
    let n = model.dim();
    z[n..].iter_mut().for_each(|v| *v *= a);
    Ok(z)
}

/// `Exp_A^{y,t}(ξ)`: base projection of `Φ_A^t(y, ξ)`.
pub fn exp_a(model: &ModelSpec, y: &[f64], xi: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    let mut z = a_flow_state(model, y, xi, t, tol)?;
    z.truncate(model.dim());
    Ok(z)
}

/// Distance from `v` to the horizontal span `span{v_j(x)}`.
pub fn horizontal_distance(model: &ModelSpec, x: &[f64], v: &[f64]) -> f64 {
    let n = model.dim();
    let r = model.rank();
    let frame = nalgebra::DMatrix::from_fn(n, r, |i, j| model.field_value(j, x)[i]);
    let vv = nalgebra::DVector::from_column_slice(v);
    let svd = frame.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut proj = nalgebra::DVector::zeros(n);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-12 * smax.max(f64::MIN_POSITIVE) {
            let uk = u.column(k);
            proj += uk * uk.dot(&vv);
        }
    }
    (vv - proj).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::register_builtin;

    #[test]
    fn euclidean_flow_is_linear() {
        let m = register_builtin("euclidean(2)").unwrap();
        let p0 = CotangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let traj = hamilton_flow(&m, &p0, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(traj.times.len(), TRAJECTORY_SAMPLES);
        let end = traj.final_state();
        assert!((end.x[0] - 2.0).abs() < 1e-12 && end.x[1].abs() < 1e-12);
        assert_eq!(end.xi, vec![1.0, 0.0]);
    }

    #[test]
    fn exp_a_zero_time_and_unit_speed() {
        let m = register_builtin("euclidean(3)").unwrap();
        let y = [0.5, -1.0, 2.0];
        assert_eq!(exp_a(&m, &y, &[1.0, 2.0, 2.0], 0.0, DEFAULT_TOL).unwrap(), y.to_vec());
        let e = exp_a(&m, &y, &[0.0, 3.0, 4.0], 0.5, DEFAULT_TOL).unwrap();
        let want = [0.5, -1.0 + 0.3, 2.0 + 0.4];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_covector_rejected() {
        let m = register_builtin("heisenberg").unwrap();
        let err = exp_a(&m, &[0.0; 3], &[0.0, 0.0, 1.0], 0.5, DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::DegenerateCovector { .. }));
    }

    #[test]
    fn bad_tolerance_rejected() {
        let m = register_builtin("grushin").unwrap();
        assert!(exp_h(&m, &[1.0, 0.0], &[0.0, 1.0], 0.0).is_err());
    }
}
