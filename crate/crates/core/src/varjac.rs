//! Differentials of the exponential maps, numerical rank, conjugate scans
//! and the rank identity relating `D Exp_A` to `D Exp_H` on `ker D_2H`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flow::{a_value, exp_a};
use crate::linalg::{central_jacobian, numerical_rank_of, orthogonal_complement, singular_values};
use crate::models::{norm, ModelSpec, RANK_THRESHOLD};
use crate::ode::Dopri5;

/// Singular values and numerical rank of a Jacobian.
#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    #[serde(serialize_with = "serialize_rows")]
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub threshold: f64,
}

fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

pub fn numerical_rank(matrix: &DMatrix<f64>, threshold: f64) -> RankReport {
    let sv = singular_values(matrix);
    RankReport {
        matrix: matrix.clone(),
        numerical_rank: numerical_rank_of(&sv, threshold),
        singular_values: sv,
        threshold,
    }
}

/// `D_ξ Exp_H^x|_ξ` from the variational equations along the orbit.
pub fn dexp_h(model: &ModelSpec, x: &[f64], xi: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    let n = model.dim();
    if x.len() != n || xi.len() != n {
        return Err(Error::InvalidArgument(format!("expected vectors of length {n}")));
    }
    // State: (x, ξ) followed by the 2n×n block of variations, column-major.
    let mut z0 = vec![0.0; 2 * n + 2 * n * n];
    z0[..n].copy_from_slice(x);
    z0[n..2 * n].copy_from_slice(xi);
    for k in 0..n {
        z0[2 * n + k * 2 * n + n + k] = 1.0;
    }
    let h0 = model.hamiltonian_at(x, xi);
    let out = Dopri5::new(tol).integrate(
        |_, z, dz| {
            let p = crate::models::CotangentPoint::from_state(&z[..2 * n]);
            let d = model.hamiltonian_derivs(&p);
            for i in 0..n {
                dz[i] = d.dxi[i];
                dz[n + i] = -d.dx[i];
            }
            let hess = &d.hess;
            for k in 0..n {
                let col = &z[2 * n + k * 2 * n..2 * n + (k + 1) * 2 * n];
                let dcol = &mut dz[2 * n + k * 2 * n..2 * n + (k + 1) * 2 * n];
                for a in 0..n {
                    // δẋ = H_ξx δx + H_ξξ δξ,  δξ̇ = −H_xx δx − H_xξ δξ
                    let mut vx = 0.0;
                    let mut vxi = 0.0;
                    for b in 0..2 * n {
                        vx += hess[(n + a, b)] * col[b];
                        vxi -= hess[(a, b)] * col[b];
                    }
                    dcol[a] = vx;
                    dcol[n + a] = vxi;
                }
            }
        },
        0.0,
        &z0,
        1.0,
        &[],
    )?;
    let z = out.y_end;
    let h1 = model.hamiltonian_at(&z[..n], &z[n..2 * n]);
    let bound = 100.0 * tol * (1.0 + h0.abs());
    if (h1 - h0).abs() > bound {
        return Err(Error::EnergyDrift { drift: (h1 - h0).abs(), bound });
    }
    Ok(DMatrix::from_fn(n, n, |i, k| z[2 * n + k * 2 * n + i]))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub s: f64,
    pub det: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugateScan {
    pub points: Vec<ScanPoint>,
    /// Parameters where `det D Exp_H^x|_{sξ}` changes sign, bisected.
    pub conjugate: Vec<f64>,
    /// Local minima of `|det|` that touch zero without a sign change.
    pub grazing: Vec<f64>,
    pub min_abs_det: f64,
    pub max_abs_det: f64,
}

pub const BISECTION_TOL: f64 = 1e-6;

/// Scans `det D Exp_H^x|_{sξ}` over `samples` uniform values of `s`.
pub fn conjugate_scan(
    model: &ModelSpec,
    x: &[f64],
    xi: &[f64],
    s_min: f64,
    s_max: f64,
    samples: usize,
    tol: f64,
) -> Result<ConjugateScan> {
    if samples < 2 || !(s_max > s_min) {
        return Err(Error::InvalidArgument("scan needs s_min < s_max and at least 2 samples".into()));
    }
    let det_at = |s: f64| -> Result<(f64, f64)> {
        let sxi: Vec<f64> = xi.iter().map(|v| s * v).collect();
        let d = dexp_h(model, x, &sxi, tol)?;
        let sv = singular_values(&d);
        Ok((d.determinant(), sv.last().copied().unwrap_or(0.0)))
    };
    let points: Vec<ScanPoint> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let s = s_min + (s_max - s_min) * k as f64 / (samples - 1) as f64;
            det_at(s).map(|(det, sigma_min)| ScanPoint { s, det, sigma_min })
        })
        .collect::<Result<_>>()?;

    let mut conjugate = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.det == 0.0 {
            continue;
        }
        if b.det == 0.0 || a.det.signum() != b.det.signum() {
            let (mut lo, mut hi, dlo) = (a.s, b.s, a.det);
            if b.det == 0.0 {
                conjugate.push(b.s);
                continue;
            }
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                let (dm, _) = det_at(mid)?;
                if dm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if dm.signum() == dlo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            conjugate.push(0.5 * (lo + hi));
        }
    }

    let abs: Vec<f64> = points.iter().map(|p| p.det.abs()).collect();
    let min_abs_det = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_det = abs.iter().copied().fold(0.0, f64::max);
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let typical = sorted[sorted.len() / 2];
    let mut grazing = Vec::new();
    for k in 1..points.len() - 1 {
        let no_flip = points[k - 1].det.signum() == points[k].det.signum()
            && points[k].det.signum() == points[k + 1].det.signum();
        if no_flip && abs[k] <= abs[k - 1] && abs[k] <= abs[k + 1] && abs[k] < 1e-6 * typical {
            grazing.push(points[k].s);
        }
    }
    Ok(ConjugateScan { points, conjugate, grazing, min_abs_det, max_abs_det })
}

/// `D Exp_A^{y,t}|_ξ` by central differences of `exp_A` with step `1e-5·|ξ|`.
pub fn dexp_a(model: &ModelSpec, y: &[f64], xi: &[f64], t: f64, tol: f64) -> Result<DMatrix<f64>> {
    a_value(model, y, xi)?;
    let h = 1e-5 * norm(xi);
    central_jacobian(xi, &vec![h; xi.len()], |e| exp_a(model, y, e, t, tol))
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReduction {
    /// `D Exp_A^{y,t}|_ξ`.
    pub full: RankReport,
    /// `D Exp_H^y|_{λξ}` restricted to `ker D_2H|_{λξ}`, `λ = t/(2√H(y,ξ))`.
    pub restricted: RankReport,
    pub lambda: f64,
    pub ranks_equal: bool,
}

pub fn rank_reduction_check(model: &ModelSpec, y: &[f64], xi: &[f64], t: f64, tol: f64) -> Result<RankReduction> {
    if t == 0.0 {
        return Err(Error::InvalidArgument("rank reduction check needs t ≠ 0".into()));
    }
    let a = a_value(model, y, xi)?;
    let full = numerical_rank(&dexp_a(model, y, xi, t, tol)?, RANK_THRESHOLD);
    let lambda = t / (2.0 * a);
    let eta: Vec<f64> = xi.iter().map(|v| lambda * v).collect();
    // D_2H|_η[β] = 2β^T C(y) η, so its kernel is the complement of C(y)η.
    let c_eta = model.cometric(y) * DVector::from_column_slice(&eta);
    let basis = orthogonal_complement(&c_eta);
    let restricted = numerical_rank(&(dexp_h(model, y, &eta, tol)? * basis), RANK_THRESHOLD);
    let ranks_equal = full.numerical_rank == restricted.numerical_rank;
    Ok(RankReduction { full, restricted, lambda, ranks_equal })
}
