use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::cutoff::CutoffSpec;
use super::grid::MultiplierGrid;
use crate::error::{Error, Result};
use crate::oscint::composite_rule;

#[derive(Debug, Clone, Copy)]
pub struct OpNormOptions {
    /// Half-width `L` of the periodic box `[−L, L]^n`; default `1.25×` the
    /// kernel radius (or 8 when unknown).
    pub half_width: Option<f64>,
    /// Grid points per dimension of the coarse grid.
    pub grid_pts: Option<usize>,
    pub refine: bool,
}

impl Default for OpNormOptions {
    fn default() -> Self {
        Self { half_width: None, grid_pts: None, refine: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpNormResult {
    /// Kernel `L¹` norm on the refined grid.
    pub value: f64,
    pub coarse_value: f64,
    /// `|fine − coarse|/fine`.
    pub delta: f64,
    pub grid_pts: usize,
    pub refined_pts: usize,
    pub half_width: f64,
}

/// Largest acceptable relative change under grid refinement.
pub const REFINEMENT_LIMIT: f64 = 0.05;
/// Largest number of grid points per computation.
pub const MAX_GRID_POINTS: usize = 1 << 25;

fn next_fft_size(n: usize) -> usize {
    let mut m = n.max(8);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 && m % 2 == 0 {
            return m;
        }
        m += 1;
    }
}

/// `‖m(|D|)‖_{L¹→L¹}` on `R^n`, `n ∈ {1, 2}`: the `L¹` norm of the
/// convolution kernel, obtained by inverse DFT of `ω ↦ m(|ω|)` on a
/// periodic box, and repeated on a refined grid for error control.
pub fn euclidean_opnorm_l1(m: &MultiplierGrid, n: usize, opts: &OpNormOptions) -> Result<OpNormResult> {
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidArgument(format!("Euclidean operator norms support n ∈ {{1, 2}}, got {n}")));
    }
    let half_width = opts.half_width.unwrap_or_else(|| m.kernel_radius().map_or(8.0, |r| 1.25 * r));
    let decays = m.tail_ratio() < 1e-5;
    let pi = std::f64::consts::PI;
    if !decays {
        // Without decay the DFT band must stay inside the grid; refine by
        // enlarging the box instead.
        let fit = |l: f64| (((2.0 * l * m.s_max / pi).floor() as usize) / 2 * 2).max(8);
        let coarse = opts.grid_pts.unwrap_or_else(|| fit(half_width));
        let coarse_value = kernel_l1(m, n, coarse, half_width)?;
        if !opts.refine {
            return Ok(OpNormResult { value: coarse_value, coarse_value, delta: 0.0, grid_pts: coarse, refined_pts: coarse, half_width });
        }
        let fine = fit(1.5 * half_width);
        let value = kernel_l1(m, n, fine, 1.5 * half_width)?;
        return finish(value, coarse_value, coarse, fine, half_width);
    }
    let extent = m.effective_extent(1e-5);
    // Points per kernel oscillation; cheap to raise in one dimension.
    let oversample = if n == 1 { 4.0 } else { 1.2 };
    let mut coarse = opts
        .grid_pts
        .unwrap_or_else(|| next_fft_size((2.0 * half_width * extent * oversample / pi).ceil() as usize));
    let mut coarse_value = kernel_l1(m, n, coarse, half_width)?;
    if !opts.refine {
        return Ok(OpNormResult { value: coarse_value, coarse_value, delta: 0.0, grid_pts: coarse, refined_pts: coarse, half_width });
    }
    // |K| is not band-limited, so its Riemann sum converges slowly for
    // oscillatory kernels; refine until two successive grids agree.
    let factor = if n == 1 { 2.0 } else { 1.5 };
    loop {
        let fine = next_fft_size((coarse as f64 * factor).ceil() as usize);
        let value = kernel_l1(m, n, fine, half_width)?;
        let result = finish(value, coarse_value, coarse, fine, half_width);
        let next = next_fft_size((fine as f64 * factor).ceil() as usize);
        let affordable = next.checked_pow(n as u32).map_or(false, |t| t <= MAX_GRID_POINTS);
        if result.is_ok() || !affordable {
            return result;
        }
        coarse = fine;
        coarse_value = value;
    }
}

fn finish(value: f64, coarse_value: f64, coarse: usize, fine: usize, half_width: f64) -> Result<OpNormResult> {
    let delta = (value - coarse_value).abs() / value.abs().max(f64::MIN_POSITIVE);
    if delta > REFINEMENT_LIMIT {
        return Err(Error::UnresolvedKernel { delta, limit: REFINEMENT_LIMIT });
    }
    Ok(OpNormResult { value, coarse_value, delta, grid_pts: coarse, refined_pts: fine, half_width })
}

fn kernel_l1(m: &MultiplierGrid, n: usize, pts: usize, half_width: f64) -> Result<f64> {
    let total = pts.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > MAX_GRID_POINTS {
        return Err(Error::SizeExceeded { size: total, limit: MAX_GRID_POINTS });
    }
    let dw = std::f64::consts::PI / half_width;
    let freq = |k: usize| if k < pts / 2 { k as f64 } else { k as f64 - pts as f64 } * dw;
    let fft = FftPlanner::new().plan_fft_inverse(pts);
    // K_j = (2L)^{−n} Σ_k M_k e^{iω_k x_j} and ‖K‖₁ ≈ Σ|K_j|Δx^n = N^{−n} Σ|IDFT(M)_j|.
    let sum = if n == 1 {
        let mut buf: Vec<Complex64> = (0..pts).map(|k| m.eval_or_zero(freq(k).abs())).collect();
        fft.process(&mut buf);
        buf.iter().map(|v| v.norm()).sum::<f64>()
    } else {
        let mut buf = vec![Complex64::new(0.0, 0.0); pts * pts];
        buf.par_chunks_mut(pts).enumerate().for_each(|(r, row)| {
            let wr = freq(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = m.eval_or_zero(wr.hypot(freq(c)));
            }
            fft.process(row);
        });
        for r in 0..pts {
            for c in (r + 1)..pts {
                buf.swap(r * pts + c, c * pts + r);
            }
        }
        let rows: Vec<f64> = buf
            .par_chunks_mut(pts)
            .map(|row| {
                fft.process(row);
                row.iter().map(|v| v.norm()).sum::<f64>()
            })
            .collect();
        rows.into_iter().sum()
    };
    Ok(sum / (total as f64))
}

/// `‖m(|D|)g‖₂/‖g‖₂` for a test function whose Fourier transform is a
/// smooth bump in `|ω| ∈ [0.5λ, 1.5λ]` times an angular bump around a fixed
/// direction. By Plancherel the angular factor cancels and the ratio is a
/// radial integral, evaluated by Gauss–Legendre quadrature.
pub fn euclidean_l2_ratio(m: &MultiplierGrid, n: usize, lambda: f64) -> Result<f64> {
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidArgument(format!("Euclidean L² ratios support n ∈ {{1, 2}}, got {n}")));
    }
    let band = CutoffSpec::SmoothBump { a: 0.5 * lambda, b: 1.5 * lambda };
    let (rs, ws) = composite_rule(0.5 * lambda, 1.5 * lambda, 4096);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&r, &w) in rs.iter().zip(&ws) {
        let g2 = band.eval(r).powi(2) * r.powi(n as i32 - 1) * w;
        let mv = m.eval(r).ok_or(Error::OutsideGrid { value: r, lo: -m.s_max, hi: m.s_max })?;
        num += mv.norm_sqr() * g2;
        den += g2;
    }
    Ok((num / den).sqrt())
}
