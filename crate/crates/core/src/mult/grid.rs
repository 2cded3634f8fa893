use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::oscint::composite_rule;
use crate::quad::adaptive_gk;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `m_λ^χ(s) = 2|λ|^{1/2} ∫ χ(t) e^{−iλt²/2} cos(st) dt`.
    Schrodinger,
    /// `m_{λ,t}^χ(s) = χ(s/λ) cos(ts)`.
    Wave { t: f64 },
    /// Sampled from an arbitrary function.
    Custom,
}

/// Grid controls; unset fields are chosen from the family and cutoff.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridSpec {
    pub s_max: Option<f64>,
    pub spacing: Option<f64>,
}

/// A multiplier sampled on the uniform symmetric grid
/// `s_j = −S + 2jS/(N − 1)`, `N` odd so that `s = 0` is a node.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierGrid {
    pub s_max: f64,
    pub samples: usize,
    pub lambda: f64,
    pub family: Family,
    pub chi: Option<CutoffSpec>,
    #[serde(skip)]
    values: Vec<Complex64>,
}

/// Interior points per tail check: the outer 1% of each half-grid.
const TAIL_FRACTION: f64 = 0.01;

impl MultiplierGrid {
    /// Samples `f` on `[−s_max, s_max]` with spacing at most `spacing`.
    pub fn from_fn<F>(s_max: f64, spacing: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let half = half_count(s_max, spacing)?;
        let values = (0..2 * half + 1)
            .into_par_iter()
            .map(|j| f(s_max * (j as f64 - half as f64) / half as f64))
            .collect();
        Ok(Self { s_max, samples: 2 * half + 1, lambda: 0.0, family: Family::Custom, chi: None, values })
    }

    /// Builds a grid from the values at `s_j ≥ 0`, mirrored to an even grid.
    fn from_half(s_max: f64, half_values: Vec<Complex64>, lambda: f64, family: Family, chi: CutoffSpec) -> Self {
        let half = half_values.len() - 1;
        let mut values = Vec::with_capacity(2 * half + 1);
        values.extend(half_values[1..].iter().rev());
        values.extend(half_values.iter());
        Self { s_max, samples: 2 * half + 1, lambda, family, chi: Some(chi), values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.s_max / (self.samples - 1) as f64
    }

    pub fn s_at(&self, j: usize) -> f64 {
        -self.s_max + j as f64 * self.spacing()
    }

    pub fn s_grid(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.s_at(j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Local cubic (4-point Lagrange) interpolation; `None` outside the grid.
    pub fn eval(&self, s: f64) -> Option<Complex64> {
        let h = self.spacing();
        let pos = (s + self.s_max) / h;
        let last = (self.samples - 1) as f64;
        if !(pos >= -1e-9 && pos <= last + 1e-9) {
            return None;
        }
        let pos = pos.clamp(0.0, last);
        let n = self.samples;
        let j = (pos.floor() as usize).clamp(1, n.saturating_sub(3).max(1));
        if n < 4 {
            let j0 = (pos.floor() as usize).min(n - 1);
            return Some(self.values[j0]);
        }
        let u = pos - j as f64;
        let w = [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ];
        Some((0..4).map(|k| self.values[j - 1 + k] * w[k]).sum())
    }

    /// Interpolated value, zero outside the grid.
    pub fn eval_or_zero(&self, s: f64) -> Complex64 {
        self.eval(s).unwrap_or_default()
    }

    /// `max |m(s) − m(−s)| / max |m|`.
    pub fn evenness_defect(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let n = self.samples;
        (0..n / 2).map(|j| (self.values[j] - self.values[n - 1 - j]).norm()).fold(0.0, f64::max) / max
    }

    /// Largest `|m|` over the outer 1% of the grid, relative to `max |m|`.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let k = ((self.samples as f64 * TAIL_FRACTION * 0.5).ceil() as usize).max(1);
        let n = self.samples;
        self.values[..k].iter().chain(&self.values[n - k..]).map(|v| v.norm()).fold(0.0, f64::max) / max
    }

    /// Largest `|s|` with `|m(s)| > threshold·max|m|`.
    pub fn effective_extent(&self, threshold: f64) -> f64 {
        let cut = threshold * self.max_abs();
        (0..self.samples)
            .filter(|&j| self.values[j].norm() > cut)
            .map(|j| self.s_at(j).abs())
            .fold(0.0, f64::max)
    }

    /// Radius containing the convolution kernel of `m(|D|)`, when known from
    /// finite propagation speed: the half-wave group `e^{it|D|}` moves
    /// supports by at most `|t|`.
    pub fn kernel_radius(&self) -> Option<f64> {
        let chi = self.chi?;
        match self.family {
            Family::Schrodinger => Some(chi.effective_radius()),
            Family::Wave { t } => {
                let spread = match chi {
                    CutoffSpec::GaussianWindow { w, .. } => 9.0 / (self.lambda * w),
                    CutoffSpec::SmoothBump { a, b } => 40.0 / (self.lambda * (b - a)),
                };
                Some(t.abs() + spread)
            }
            Family::Custom => None,
        }
    }
}

fn half_count(s_max: f64, spacing: f64) -> Result<usize> {
    if !(s_max > 0.0 && spacing > 0.0 && s_max.is_finite()) {
        return Err(Error::InvalidArgument("multiplier grid needs positive extent and spacing".into()));
    }
    let half = (s_max / spacing).ceil() as usize;
    if half > 5_000_000 {
        return Err(Error::SizeExceeded { size: 2 * half + 1, limit: 10_000_001 });
    }
    Ok(half.max(2))
}

/// Relative tolerance of the multiplier quadrature.
pub const QUAD_RTOL: f64 = 1e-8;

/// `m_λ^χ` on a grid. Values for `s ≥ 0` come from one composite
/// Gauss–Legendre rule shared by all grid points, certified against
/// per-point adaptive Gauss–Kronrod at probe points (panels doubled until
/// they agree to `1e-8` of the multiplier scale), then mirrored. The grid
/// extent grows until `m` has decayed below `1e-6·max|m|` at the edge.
pub fn schrodinger_multiplier(chi: &CutoffSpec, lambda: f64, grid: GridSpec) -> Result<MultiplierGrid> {
    chi.validate()?;
    let (a, b) = match chi.support() {
        Some((a, b)) if a > 0.0 => (a, b),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "the Schrödinger family needs a cutoff supported in (0, ∞), got {chi}"
            )))
        }
    };
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument("λ must be finite and nonzero".into()));
    }
    let lam = lambda.abs();
    let spacing = grid.spacing.unwrap_or_else(|| (std::f64::consts::PI / (16.0 * b)).min(0.1));
    let mut pad = 60.0 / (b - a);
    for attempt in 0..6 {
        let s_max = grid.s_max.unwrap_or(lam * b + pad);
        let half = half_count(s_max, spacing)?;
        let values = schrodinger_half(chi, lambda, a, b, s_max, half)?;
        let g = MultiplierGrid::from_half(s_max, values, lambda, Family::Schrodinger, *chi);
        if grid.s_max.is_some() || g.tail_ratio() < 1e-6 || attempt == 5 {
            return Ok(g);
        }
        pad *= 2.0;
    }
    unreachable!("loop returns on its last attempt")
}

fn schrodinger_half(chi: &CutoffSpec, lambda: f64, a: f64, b: f64, s_max: f64, half: usize) -> Result<Vec<Complex64>> {
    let lam = lambda.abs();
    let pref = 2.0 * lam.sqrt();
    let integrand = |s: f64| {
        move |t: f64| Complex64::from_polar(pref * chi.eval(t), -0.5 * lambda * t * t) * (s * t).cos()
    };
    // Phase budget of ~3 rad per 16-node panel.
    let mut panels = (((b - a) * (lam * b + s_max)) / 3.0).ceil().max(4.0) as usize;
    let (rx, rw) = composite_rule(a, b, 16);
    let scale = pref * rw.iter().zip(&rx).map(|(w, t)| w * chi.eval(*t)).sum::<f64>();
    let probes: Vec<f64> = (0..9).map(|k| s_max * k as f64 / 8.0).chain([lam * 0.5 * (a + b)]).collect();
    let reference: Vec<Complex64> = probes
        .par_iter()
        .map(|&s| adaptive_gk(integrand(s), a, b, 1e-2 * QUAD_RTOL * scale, 1e-2 * QUAD_RTOL, panels))
        .collect();
    for _ in 0..5 {
        let (ts, ws) = composite_rule(a, b, panels * 16);
        let weights: Vec<Complex64> =
            ts.iter().zip(&ws).map(|(&t, &w)| Complex64::from_polar(pref * w * chi.eval(t), -0.5 * lambda * t * t)).collect();
        let eval = |s: f64| -> Complex64 { ts.iter().zip(&weights).map(|(t, c)| c * (s * t).cos()).sum() };
        let worst = probes.iter().zip(&reference).map(|(&s, r)| (eval(s) - r).norm()).fold(0.0, f64::max);
        if worst <= QUAD_RTOL * scale {
            return Ok(sample_cosine_sum(&ts, &weights, s_max / half as f64, half));
        }
        panels *= 2;
    }
    Err(Error::GridTooCoarse("multiplier quadrature failed to reach its tolerance".into()))
}

/// `Σ_i c_i cos(s_j t_i)` for `s_j = j·h`, `j = 0..=half`, using
/// phase rotation within blocks that restart from exact values.
fn sample_cosine_sum(ts: &[f64], weights: &[Complex64], h: f64, half: usize) -> Vec<Complex64> {
    const BLOCK: usize = 256;
    let blocks: Vec<Vec<Complex64>> = (0..=half / BLOCK)
        .into_par_iter()
        .map(|blk| {
            let j0 = blk * BLOCK;
            let len = BLOCK.min(half + 1 - j0);
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            for (t, c) in ts.iter().zip(weights) {
                let rot = Complex64::from_polar(1.0, h * t);
                let mut z = Complex64::from_polar(1.0, j0 as f64 * h * t);
                for o in out.iter_mut() {
                    *o += c * z.re;
                    z *= rot;
                }
            }
            out
        })
        .collect();
    blocks.into_iter().flatten().collect()
}

/// `m_{λ,t}^χ(s) = χ(s/λ) cos(ts)`, evaluated pointwise.
pub fn wave_multiplier(chi: &CutoffSpec, lambda: f64, t: f64, grid: GridSpec) -> Result<MultiplierGrid> {
    chi.validate()?;
    if !(lambda > 0.0 && t >= 0.0 && lambda.is_finite() && t.is_finite()) {
        return Err(Error::InvalidArgument("the wave family needs λ > 0 and t ≥ 0".into()));
    }
    let s_max = grid.s_max.unwrap_or(lambda * chi.effective_radius() * 1.02);
    let mut spacing = lambda * chi.width() / 20.0;
    if t > 0.0 {
        spacing = spacing.min(std::f64::consts::PI / (10.0 * t));
    }
    let spacing = grid.spacing.unwrap_or(spacing);
    let half = half_count(s_max, spacing)?;
    let values = (0..2 * half + 1)
        .into_par_iter()
        .map(|j| {
            let s = s_max * (j as f64 - half as f64) / half as f64;
            Complex64::new(chi.eval(s.abs() / lambda) * (t * s).cos(), 0.0)
        })
        .collect();
    Ok(MultiplierGrid { s_max, samples: 2 * half + 1, lambda, family: Family::Wave { t }, chi: Some(*chi), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let g = MultiplierGrid::from_fn(2.0, 0.1, |s| Complex64::new(s * s * s - s, 0.0)).unwrap();
        for s in [-1.93, -0.51, 0.0, 0.333, 1.99] {
            assert!((g.eval(s).unwrap().re - (s * s * s - s)).abs() < 1e-12);
        }
        assert!(g.eval(2.5).is_none());
    }

    #[test]
    fn zero_cutoff_region_gives_zero() {
        let chi = CutoffSpec::SmoothBump { a: 0.5, b: 1.5 };
        let g = wave_multiplier(&chi, 10.0, 0.3, GridSpec::default()).unwrap();
        assert_eq!(g.eval(3.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!((g.eval(10.0).unwrap().re - (3.0f64).cos()).abs() < 1e-3);
    }
}
