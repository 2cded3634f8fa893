//! Sub-Riemannian model manifolds given by a horizontal frame `v_1..v_r` on
//! R^n, with Hamiltonian `H(x, ξ) = Σ_j (ξ·v_j(x))²`.

mod bracket;
mod builtin;
pub mod poly;
mod user;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use smallvec::SmallVec;

pub use bracket::{bracket_generating_step, bracket_generating_step_with, BracketStep};
pub use builtin::{register_builtin, BuiltinModel};
pub use poly::{FieldTerm, PolyField, Polynomial};
pub use user::{load_model_file, parse_model_file, ModelFile};

use crate::error::{Error, Result};

/// Relative cutoff on singular values used wherever a numerical rank is taken.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Default central-difference step (scaled by `1 + |x|`).
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Maximum Lie-bracket nesting depth explored by the bracket test.
pub const MAX_BRACKET_DEPTH: usize = 6;

pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes the row-major Jacobian `out[i * n + k] = ∂v^i/∂x_k`.
pub type JacobianFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

type Scratch = SmallVec<[f64; 16]>;
type MatScratch = SmallVec<[f64; 64]>;

#[derive(Clone)]
pub enum VectorField {
    Polynomial(PolyField),
    Closure { value: FieldFn, jacobian: Option<JacobianFn> },
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Polynomial(p) => f.debug_tuple("Polynomial").field(p).finish(),
            VectorField::Closure { jacobian, .. } => f
                .debug_struct("Closure")
                .field("analytic_jacobian", &jacobian.is_some())
                .finish(),
        }
    }
}

impl VectorField {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            VectorField::Polynomial(p) => p.eval(x, out),
            VectorField::Closure { value, .. } => value(x, out),
        }
    }

    fn has_analytic_jacobian(&self) -> bool {
        match self {
            VectorField::Polynomial(_) => true,
            VectorField::Closure { jacobian, .. } => jacobian.is_some(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Central differences with base step `h`, scaled by `1 + |x|`.
    CentralDifference { h: f64 },
}

/// A point `(x, ξ)` of the cotangent bundle in canonical coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CotangentPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::InvalidArgument(format!(
                "base point has dimension {} but covector has {}",
                x.len(),
                xi.len()
            )));
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite cotangent point".into()));
        }
        Ok(Self { x, xi })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Flattened `(x, ξ)` state vector.
    pub fn to_state(&self) -> Vec<f64> {
        self.x.iter().chain(&self.xi).copied().collect()
    }

    pub fn from_state(z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self { x: z[..n].to_vec(), xi: z[n..].to_vec() }
    }
}

/// First and second derivatives of `H` at a cotangent point.
#[derive(Debug, Clone)]
pub struct HamiltonianDerivs {
    pub h: f64,
    pub dx: DVector<f64>,
    pub dxi: DVector<f64>,
    /// Hessian in the ordering `(x, ξ)`, size `2n × 2n`.
    pub hess: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    name: String,
    n: usize,
    frame: Vec<VectorField>,
    mode: DerivativeMode,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        frame: Vec<VectorField>,
        mode: DerivativeMode,
    ) -> Result<Self> {
        let name = name.into();
        if n == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if frame.is_empty() || frame.len() > n {
            return Err(Error::InvalidModel(format!(
                "horizontal rank {} must lie in 1..={n}",
                frame.len()
            )));
        }
        for f in &frame {
            if let VectorField::Polynomial(p) = f {
                if p.dim() != n {
                    return Err(Error::InvalidModel(format!(
                        "polynomial field of dimension {} in a model of dimension {n}",
                        p.dim()
                    )));
                }
            }
        }
        match mode {
            DerivativeMode::Analytic => {
                if frame.iter().any(|f| !f.has_analytic_jacobian()) {
                    return Err(Error::InvalidModel(
                        "analytic derivative mode needs a Jacobian for every frame field".into(),
                    ));
                }
            }
            DerivativeMode::CentralDifference { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidModel(format!("difference step must be positive, got {h}")));
                }
            }
        }
        Ok(Self { name, n, frame, mode })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    /// The same model with a different derivative mode.
    pub fn with_mode(&self, mode: DerivativeMode) -> Result<Self> {
        Self::new(self.name.clone(), self.n, self.frame.clone(), mode)
    }

    fn step_at(&self, x: &[f64]) -> f64 {
        let h = match self.mode {
            DerivativeMode::Analytic => DEFAULT_FD_STEP,
            DerivativeMode::CentralDifference { h } => h,
        };
        h * (1.0 + norm(x))
    }

    pub fn field_value(&self, j: usize, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        self.frame[j].eval(x, out.as_mut_slice());
        out
    }

    /// `Dv_j(x)` with `(i, k)` entry `∂v_j^i/∂x_k`.
    pub fn field_jacobian(&self, j: usize, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut buf: MatScratch = SmallVec::from_elem(0.0, n * n);
        self.jacobian_into(j, x, &mut buf);
        DMatrix::from_row_slice(n, n, &buf)
    }

    fn jacobian_into(&self, j: usize, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let field = &self.frame[j];
        match (self.mode, field) {
            (DerivativeMode::Analytic, VectorField::Polynomial(p)) => p.jacobian(x, out),
            (DerivativeMode::Analytic, VectorField::Closure { jacobian: Some(jf), .. }) => jf(x, out),
            _ => {
                let h = self.step_at(x);
                let mut xp: Scratch = SmallVec::from_slice(x);
                let mut vp: Scratch = SmallVec::from_elem(0.0, n);
                let mut vm: Scratch = SmallVec::from_elem(0.0, n);
                for k in 0..n {
                    xp[k] = x[k] + h;
                    field.eval(&xp, &mut vp);
                    xp[k] = x[k] - h;
                    field.eval(&xp, &mut vm);
                    xp[k] = x[k];
                    for i in 0..n {
                        out[i * n + k] = (vp[i] - vm[i]) / (2.0 * h);
                    }
                }
            }
        }
    }

    /// `Σ_i w_i ∂²v_j^i/∂x_k∂x_l`, row-major.
    fn contracted_hessian_into(&self, j: usize, x: &[f64], w: &[f64], out: &mut [f64]) {
        let n = self.n;
        let field = &self.frame[j];
        match (self.mode, field) {
            (DerivativeMode::Analytic, VectorField::Polynomial(p)) => p.contracted_hessian(x, w, out),
            (DerivativeMode::Analytic, VectorField::Closure { jacobian: Some(jf), .. }) => {
                // Differentiate the analytic Jacobian once more.
                let h = self.step_at(x);
                let mut xp: Scratch = SmallVec::from_slice(x);
                let mut jp: MatScratch = SmallVec::from_elem(0.0, n * n);
                let mut jm: MatScratch = SmallVec::from_elem(0.0, n * n);
                for l in 0..n {
                    xp[l] = x[l] + h;
                    jf(&xp, &mut jp);
                    xp[l] = x[l] - h;
                    jf(&xp, &mut jm);
                    xp[l] = x[l];
                    for k in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            acc += w[i] * (jp[i * n + k] - jm[i * n + k]);
                        }
                        out[k * n + l] = acc / (2.0 * h);
                    }
                }
                symmetrize_in_place(out, n);
            }
            _ => {
                // Second differences of the scalar x ↦ w·v(x); a larger step
                // balances truncation against cancellation.
                let h = 10.0 * self.step_at(x);
                let mut xp: Scratch = SmallVec::from_slice(x);
                let mut v: Scratch = SmallVec::from_elem(0.0, n);
                let mut phi = |xp: &[f64]| {
                    field.eval(xp, &mut v);
                    dot(w, &v)
                };
                let f0 = phi(x);
                for k in 0..n {
                    xp[k] = x[k] + h;
                    let fp = phi(&xp);
                    xp[k] = x[k] - h;
                    let fm = phi(&xp);
                    xp[k] = x[k];
                    out[k * n + k] = (fp - 2.0 * f0 + fm) / (h * h);
                    for l in (k + 1)..n {
                        let mut corner = |sk: f64, sl: f64| {
                            xp[k] = x[k] + sk * h;
                            xp[l] = x[l] + sl * h;
                            let r = phi(&xp);
                            xp[k] = x[k];
                            xp[l] = x[l];
                            r
                        };
                        let val = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                            + corner(-1.0, -1.0))
                            / (4.0 * h * h);
                        out[k * n + l] = val;
                        out[l * n + k] = val;
                    }
                }
            }
        }
    }

    /// `C(x) = Σ_j v_j(x) v_j(x)^T`.
    pub fn cometric(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut c = DMatrix::zeros(n, n);
        let mut v: Scratch = SmallVec::from_elem(0.0, n);
        for f in &self.frame {
            f.eval(x, &mut v);
            for a in 0..n {
                for b in 0..n {
                    c[(a, b)] += v[a] * v[b];
                }
            }
        }
        c
    }

    /// `H(x, ξ) = Σ_j (ξ·v_j(x))²`.
    pub fn hamiltonian(&self, p: &CotangentPoint) -> f64 {
        self.hamiltonian_at(&p.x, &p.xi)
    }

    pub fn hamiltonian_at(&self, x: &[f64], xi: &[f64]) -> f64 {
        let mut v: Scratch = SmallVec::from_elem(0.0, self.n);
        self.frame
            .iter()
            .map(|f| {
                f.eval(x, &mut v);
                let p = dot(xi, &v);
                p * p
            })
            .sum()
    }

    /// Hamilton's equations `ẋ = ∂_ξH`, `ξ̇ = −∂_xH` written into `dz`;
    /// returns `H`. Allocation-free for `n ≤ 8`.
    pub fn hamilton_rhs(&self, z: &[f64], dz: &mut [f64]) -> f64 {
        let n = self.n;
        let (x, xi) = z.split_at(n);
        let (dx, dxi) = dz.split_at_mut(n);
        dx.iter_mut().chain(dxi.iter_mut()).for_each(|d| *d = 0.0);
        let mut v: Scratch = SmallVec::from_elem(0.0, n);
        let mut jac: MatScratch = SmallVec::from_elem(0.0, n * n);
        let mut h = 0.0;
        for j in 0..self.frame.len() {
            self.frame[j].eval(x, &mut v);
            let p = dot(xi, &v);
            h += p * p;
            if p == 0.0 {
                continue;
            }
            self.jacobian_into(j, x, &mut jac);
            for i in 0..n {
                dx[i] += 2.0 * p * v[i];
            }
            for k in 0..n {
                let mut g = 0.0;
                for i in 0..n {
                    g += xi[i] * jac[i * n + k];
                }
                dxi[k] -= 2.0 * p * g;
            }
        }
        h
    }

    /// `∂_xH`, `∂_ξH = 2C(x)ξ` and the full `(x, ξ)` Hessian.
    pub fn hamiltonian_derivs(&self, p: &CotangentPoint) -> HamiltonianDerivs {
        let n = self.n;
        let x = &p.x;
        let xi = DVector::from_column_slice(&p.xi);
        let c = self.cometric(x);
        let dxi = 2.0 * &c * &xi;

        let mut dx = DVector::zeros(n);
        let mut hxx = DMatrix::zeros(n, n);
        let mut hxxi = DMatrix::zeros(n, n);
        let mut h = 0.0;
        let mut s: MatScratch = SmallVec::from_elem(0.0, n * n);
        for j in 0..self.frame.len() {
            let v = self.field_value(j, x);
            let dv = self.field_jacobian(j, x);
            let pj = xi.dot(&v);
            h += pj * pj;
            let g = dv.transpose() * &xi;
            dx += 2.0 * pj * &g;
            hxx += 2.0 * &g * g.transpose();
            hxxi += 2.0 * (&g * v.transpose() + pj * dv.transpose());
            if pj != 0.0 {
                self.contracted_hessian_into(j, x, &p.xi, &mut s);
                hxx += 2.0 * pj * DMatrix::from_row_slice(n, n, &s);
            }
        }
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        hess.view_mut((0, 0), (n, n)).copy_from(&hxx);
        hess.view_mut((0, n), (n, n)).copy_from(&hxxi);
        hess.view_mut((n, 0), (n, n)).copy_from(&hxxi.transpose());
        hess.view_mut((n, n), (n, n)).copy_from(&(2.0 * c));
        HamiltonianDerivs { h, dx, dxi, hess }
    }

    /// Whether `H(x, ξ)` lies above the shared degeneracy threshold
    /// `H > 1e-12·|ξ|²`.
    pub fn is_elliptic(&self, x: &[f64], xi: &[f64]) -> bool {
        self.hamiltonian_at(x, xi) > DEGENERACY_THRESHOLD * dot(xi, xi)
    }
}

/// `H ≤ 1e-12·|ξ|²` counts as outside the elliptic cone.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn symmetrize_in_place(m: &mut [f64], n: usize) {
    for k in 0..n {
        for l in (k + 1)..n {
            let avg = 0.5 * (m[k * n + l] + m[l * n + k]);
            m[k * n + l] = avg;
            m[l * n + k] = avg;
        }
    }
}
