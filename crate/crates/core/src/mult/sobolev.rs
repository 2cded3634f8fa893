use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::cutoff::CutoffSpec;
use super::grid::MultiplierGrid;
use crate::error::{Error, Result};

/// Samples of `ρ·m(t·)` per norm evaluation.
pub const SOBOLEV_GRID: usize = 4096;
/// Log-spaced dilations `t` per norm evaluation.
pub const T_SAMPLES: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct SobolevNorm {
    /// `max_t ‖ρ·m(t·)‖_{L²_α}`.
    pub value: f64,
    pub best_t: f64,
    pub t_samples: Vec<f64>,
    pub norms: Vec<f64>,
}

/// 64 log-spaced dilations covering `[S·1e-3, S·10]`, where `S` is the
/// extent beyond which `|m| < 1e-6·max|m|`.
pub fn default_t_samples(m: &MultiplierGrid) -> Vec<f64> {
    let s = m.effective_extent(1e-6).max(m.spacing());
    let (lo, hi) = ((s * 1e-3).ln(), (s * 10.0).ln());
    (0..T_SAMPLES).map(|k| (lo + (hi - lo) * k as f64 / (T_SAMPLES - 1) as f64).exp()).collect()
}

/// Scale-invariant local Sobolev norm `sup_t ‖ρ·m(t·)‖_{L²_α}` with
/// `‖g‖² = ∫ (1 + ω²)^α |ĝ(ω)|² dω/2π`, computed by DFT of `ρ·m(t·)` on a
/// 4096-point grid spanning the support of `ρ` with half-width margins.
pub fn sobolev_sloc_norm(m: &MultiplierGrid, alpha: f64, rho: &CutoffSpec, t_samples: Option<&[f64]>) -> Result<SobolevNorm> {
    rho.validate()?;
    let (a, b) = match rho.support() {
        Some((a, b)) if a > 0.0 => (a, b),
        _ => return Err(Error::InvalidArgument(format!("ρ must be supported in (0, ∞), got {rho}"))),
    };
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("α must be nonnegative".into()));
    }
    let ts = match t_samples {
        Some(ts) => ts.to_vec(),
        None => default_t_samples(m),
    };
    if m.max_abs() == 0.0 {
        return Ok(SobolevNorm { value: 0.0, best_t: ts.first().copied().unwrap_or(1.0), norms: vec![0.0; ts.len()], t_samples: ts });
    }
    let n = SOBOLEV_GRID;
    let lo = a - 0.5 * (b - a);
    let len = 2.0 * (b - a);
    let dx = len / n as f64;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            let w = 2.0 * std::f64::consts::PI * kk / len;
            (1.0 + w * w).powf(alpha)
        })
        .collect();
    // Per dilation: (weighted norm, plain energy, energy near Nyquist).
    let parts: Vec<(f64, f64, f64)> = ts
        .par_iter()
        .map(|&t| {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|j| {
                    let s = lo + j as f64 * dx;
                    let r = rho.eval(s);
                    if r == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        m.eval_or_zero(t * s) * r
                    }
                })
                .collect();
            fft.process(&mut buf);
            // ĝ_k = Δ·DFT_k; ∫…dω/2π becomes Σ_k (…)·|ĝ_k|²/(NΔ).
            let mut total = 0.0;
            let mut plain = 0.0;
            let mut high = 0.0;
            for (k, v) in buf.iter().enumerate() {
                let e = v.norm_sqr() * dx * dx;
                total += weights[k] * e;
                plain += e;
                let kk = if k < n / 2 { k } else { n - k };
                if kk > (n * 9) / 20 {
                    high += e;
                }
            }
            ((total / (n as f64 * dx)).sqrt(), plain, high)
        })
        .collect();
    // Tails seen at large t are tiny, so compare against the largest energy.
    let peak = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    if let Some((k, p)) = parts.iter().enumerate().find(|(_, p)| p.2 > 1e-6 * peak) {
        return Err(Error::GridTooCoarse(format!(
            "ρ·m(t·) at t = {:.4e} has {:.2e} of the peak energy near the Nyquist frequency",
            ts[k],
            p.2 / peak
        )));
    }
    let norms: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let (best, value) = norms.iter().enumerate().fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    Ok(SobolevNorm { value, best_t: ts[best], t_samples: ts, norms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_multiplier_has_zero_norm() {
        let m = MultiplierGrid::from_fn(10.0, 0.1, |_| Complex64::new(0.0, 0.0)).unwrap();
        let rho = CutoffSpec::SmoothBump { a: 0.5, b: 2.0 };
        assert_eq!(sobolev_sloc_norm(&m, 1.0, &rho, None).unwrap().value, 0.0);
    }
}
