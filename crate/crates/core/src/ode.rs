//! Explicit Runge–Kutta integrators: Dormand–Prince 5(4) with PI step-size
//! control and 4th-order dense output, and classical fixed-step RK4.

use crate::error::{Error, Result};

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, DOPRI5 continuous extension).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2; // h_new ≥ h/5
const FAC_MAX: f64 = 10.0; // h_new ≤ 10h

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutput {
    pub y_end: Vec<f64>,
    /// States at the requested sample times, in the order given.
    pub samples: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction), with
    /// dense-output samples at `sample_times`, which must be monotone from
    /// `t0` towards `t1`. Backward integration runs the time-reversed field
    /// forward.
    pub fn integrate<F>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        sample_times: &[f64],
    ) -> Result<OdeOutput>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("integrator tolerance must be positive".into()));
        }
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        let svals: Vec<f64> = sample_times.iter().map(|&t| dir * (t - t0)).collect();
        if svals.iter().any(|&s| !(-1e-12 * (1.0 + span)..=span * (1.0 + 1e-12) + 1e-300).contains(&s))
            || svals.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidArgument("sample times must be monotone within the span".into()));
        }
        let mut g = |s: f64, y: &[f64], dy: &mut [f64]| {
            f(t0 + dir * s, y, dy);
            if dir < 0.0 {
                dy.iter_mut().for_each(|d| *d = -*d);
            }
        };
        let out = self.forward(&mut g, y0, span, &svals);
        out.map_err(|e| match e {
            Error::StepUnderflow { t } => Error::StepUnderflow { t: t0 + dir * t },
            Error::NonFinite { t } => Error::NonFinite { t: t0 + dir * t },
            Error::TooManySteps { max_steps, t } => Error::TooManySteps { max_steps, t: t0 + dir * t },
            other => other,
        })
    }

    fn forward<F>(&self, f: &mut F, y0: &[f64], t_end: f64, samples: &[f64]) -> Result<OdeOutput>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut out = OdeOutput { y_end: y0.to_vec(), samples: Vec::with_capacity(samples.len()), accepted: 0, rejected: 0 };
        let mut next = 0;
        while next < samples.len() && samples[next] <= 0.0 {
            out.samples.push(y0.to_vec());
            next += 1;
        }
        if t_end == 0.0 {
            while next < samples.len() {
                out.samples.push(y0.to_vec());
                next += 1;
            }
            return Ok(out);
        }

        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut cont = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

        f(0.0, &y, &mut k1);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: 0.0 });
        }
        let mut t = 0.0;
        let mut h = self.initial_step(f, &y, &k1, t_end);
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;
        let mut steps = 0usize;

        loop {
            if steps >= self.max_steps {
                return Err(Error::TooManySteps { max_steps: self.max_steps, t });
            }
            if h < 1e-14 * t_end {
                return Err(Error::StepUnderflow { t });
            }
            let last = t + 1.01 * h >= t_end;
            if last {
                h = t_end - t;
            }
            steps += 1;

            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ytmp, &mut k2);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ytmp, &mut k3);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ytmp, &mut k4);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ytmp, &mut k5);
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ytmp, &mut k6);
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, &ynew, &mut k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sk).powi(2);
            }
            err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                if ynew.iter().chain(&k7).any(|v| !v.is_finite()) && h < 1e-10 {
                    return Err(Error::NonFinite { t });
                }
                h *= FAC_MIN;
                last_rejected = true;
                out.rejected += 1;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let t_new = t + h;
                if next < samples.len() && samples[next] <= t_new {
                    for i in 0..n {
                        let dy = ynew[i] - y[i];
                        let bspl = h * k1[i] - dy;
                        cont[0][i] = y[i];
                        cont[1][i] = dy;
                        cont[2][i] = bspl;
                        cont[3][i] = dy - h * k7[i] - bspl;
                        cont[4][i] = h
                            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    while next < samples.len() && (samples[next] <= t_new || last) {
                        let s = samples[next];
                        if last && s >= t_new || s == t_new {
                            out.samples.push(ynew.clone());
                        } else {
                            let th = (s - t) / h;
                            let th1 = 1.0 - th;
                            out.samples.push(
                                (0..n)
                                    .map(|i| {
                                        cont[0][i]
                                            + th * (cont[1][i]
                                                + th1 * (cont[2][i] + th * (cont[3][i] + th1 * cont[4][i])))
                                    })
                                    .collect(),
                            );
                        }
                        next += 1;
                    }
                }
                let mut fac = fac11 / facold.powf(BETA);
                facold = err.max(1e-4);
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                out.accepted += 1;
                if last {
                    break;
                }
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                h = h_new;
            } else {
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
                out.rejected += 1;
            }
        }
        out.y_end = y;
        Ok(out)
    }

    fn initial_step<F>(&self, f: &mut F, y: &[f64], f0: &[f64], t_end: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let sk: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let rms = |v: &[f64]| {
            (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(f0);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(t_end);
        let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
        let mut f1 = vec![0.0; n];
        f(h0, &y1, &mut f1);
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
        (100.0 * h0).min(h1).min(t_end)
    }
}

/// Classical RK4 with `steps` equal steps from `t0` to `t1`.
pub fn rk4<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let h = (t1 - t0) / steps.max(1) as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for s in 0..steps.max(1) {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}
