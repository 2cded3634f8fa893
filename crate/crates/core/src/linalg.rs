//! Small dense linear-algebra and finite-difference helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `#{σ_i > threshold·σ_1}`, zero when `σ_1 = 0`.
pub fn numerical_rank_of(sv: &[f64], threshold: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().filter(|&&s| s > threshold * s1).count(),
        _ => 0,
    }
}

/// Solves `a·x = b` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = a.clone().lu().solve(b).ok_or(Error::SingularJacobian)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularJacobian)
    }
}

/// Orthonormal basis (as columns) of the complement of `v` in R^n.
pub fn orthogonal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let u = v.normalize();
    // Householder reflector mapping u to ±e_1; its remaining columns span u^⊥.
    let mut w = u.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let wn = w.norm_squared();
    let q = DMatrix::identity(n, n) - (2.0 / wn) * &w * w.transpose();
    q.columns(1, n - 1).into_owned()
}

/// Central-difference Jacobian of `f: R^n → R^m` with per-coordinate steps.
pub fn central_jacobian<F>(x: &[f64], steps: &[f64], mut f: F) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut xp = x.to_vec();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        xp[k] = x[k] + steps[k];
        let fp = f(&xp)?;
        xp[k] = x[k] - steps[k];
        let fm = f(&xp)?;
        xp[k] = x[k];
        cols.push(
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * steps[k])).collect::<Vec<f64>>(),
        );
    }
    let m = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

/// Central-difference gradient of a scalar function, Richardson-extrapolated
/// over steps `h` and `h/2`.
pub fn richardson_gradient<F>(z: &[f64], steps: &[f64], mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut zp = z.to_vec();
    let mut grad = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let mut d = [0.0; 2];
        for (slot, h) in d.iter_mut().zip([steps[k], 0.5 * steps[k]]) {
            zp[k] = z[k] + h;
            let fp = f(&zp)?;
            zp[k] = z[k] - h;
            let fm = f(&zp)?;
            zp[k] = z[k];
            *slot = (fp - fm) / (2.0 * h);
        }
        grad.push(d[1] + (d[1] - d[0]) / 3.0);
    }
    Ok(grad)
}

/// Second-difference Hessian of a scalar function, Richardson-extrapolated
/// over steps `h` and `h/2`, then symmetrized. `f0` is `f(z)`.
pub fn richardson_hessian<F>(z: &[f64], f0: f64, steps: &[f64], mut f: F) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = z.len();
    let mut out = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut zp = z.to_vec();
    for (level, scale) in [1.0, 0.5].into_iter().enumerate() {
        for k in 0..n {
            let hk = scale * steps[k];
            zp[k] = z[k] + hk;
            let fp = f(&zp)?;
            zp[k] = z[k] - hk;
            let fm = f(&zp)?;
            zp[k] = z[k];
            out[level][(k, k)] = (fp - 2.0 * f0 + fm) / (hk * hk);
            for l in (k + 1)..n {
                let hl = scale * steps[l];
                let mut corner = |sk: f64, sl: f64| -> Result<f64> {
                    zp[k] = z[k] + sk * hk;
                    zp[l] = z[l] + sl * hl;
                    let v = f(&zp);
                    zp[k] = z[k];
                    zp[l] = z[l];
                    v
                };
                let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?)
                    / (4.0 * hk * hl);
                out[level][(k, l)] = v;
                out[level][(l, k)] = v;
            }
        }
    }
    let h = &out[1] + (&out[1] - &out[0]) / 3.0;
    Ok((&h + h.transpose()) * 0.5)
}

/// Least-squares line `y = a + b·x`; returns `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Log-log fit of `ys` against `xs`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
