use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cutoff functions for the multiplier families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CutoffSpec {
    /// `exp(1 − 1/(1 − u²))` on `(a, b)`, `u = (2s − a − b)/(b − a)`;
    /// smooth, compactly supported, peak 1 at the midpoint.
    SmoothBump { a: f64, b: f64 },
    /// Even Schwartz window `exp(−((s² − c²)/(2cw))²)` peaking at `|s| = c`
    /// (for `c = 0`: `exp(−(s/w)²)`).
    GaussianWindow { c: f64, w: f64 },
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::SmoothBump { a, b } if a.is_finite() && b.is_finite() && a < b => Ok(()),
            Self::GaussianWindow { c, w } if c >= 0.0 && w > 0.0 && c.is_finite() && w.is_finite() => Ok(()),
            _ => Err(Error::InvalidArgument(format!("invalid cutoff {self}"))),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::SmoothBump { a, b } => {
                let u = (2.0 * s - a - b) / (b - a);
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            Self::GaussianWindow { c, w } => {
                if c > 0.0 {
                    (-((s * s - c * c) / (2.0 * c * w)).powi(2)).exp()
                } else {
                    (-(s / w).powi(2)).exp()
                }
            }
        }
    }

    /// Compact support, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::SmoothBump { a, b } => Some((a, b)),
            Self::GaussianWindow { .. } => None,
        }
    }

    /// Radius beyond which the cutoff is below `~1e-7`.
    pub fn effective_radius(&self) -> f64 {
        match *self {
            Self::SmoothBump { a, b } => a.abs().max(b.abs()),
            Self::GaussianWindow { c, w } => {
                if c > 0.0 {
                    (c * c + 2.0 * c * w * 4.03).sqrt()
                } else {
                    4.03 * w
                }
            }
        }
    }

    /// Width of the region where the cutoff varies; sets sampling scales.
    pub fn width(&self) -> f64 {
        match *self {
            Self::SmoothBump { a, b } => b - a,
            Self::GaussianWindow { w, .. } => w,
        }
    }

    pub fn is_even(&self) -> bool {
        matches!(self, Self::GaussianWindow { .. })
    }

    /// Supported in `(0, ∞)`, as required of the Mihlin–Hörmander cutoffs.
    pub fn is_positive_supported(&self) -> bool {
        matches!(*self, Self::SmoothBump { a, .. } if a > 0.0)
    }
}

impl fmt::Display for CutoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SmoothBump { a, b } => write!(f, "bump({a},{b})"),
            Self::GaussianWindow { c, w } => write!(f, "gaussian({c},{w})"),
        }
    }
}

impl FromStr for CutoffSpec {
    type Err = Error;

    /// Parses `bump(a,b)` or `gaussian(c,w)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse cutoff `{s}`; expected bump(a,b) or gaussian(c,w)"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = inner.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        if args.len() != 2 {
            return Err(bad());
        }
        let spec = match &s[..open] {
            "bump" | "smooth-bump" => Self::SmoothBump { a: args[0], b: args[1] },
            "gaussian" | "gaussian-window" => Self::GaussianWindow { c: args[0], w: args[1] },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}
