//! Polynomial vector fields on R^n.
//!
//! Built-in frames and user model files are expressed with these, which makes
//! Jacobians, second derivatives and Lie brackets exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A real polynomial in `n` variables, keyed by exponent multi-index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(c, vec![0; n]);
        p
    }

    /// `c * x_k`.
    pub fn linear(n: usize, k: usize, c: f64) -> Self {
        let mut exps = vec![0; n];
        exps[k] = 1;
        let mut p = Self::zero(n);
        p.add_term(c, exps);
        p
    }

    pub fn monomial(c: f64, exps: Vec<u32>) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(c, exps);
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, c: f64, exps: Vec<u32>) {
        assert_eq!(exps.len(), self.n, "exponent length mismatch");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, c)| {
                exps.iter()
                    .zip(x)
                    .fold(*c, |acc, (&e, &xi)| if e == 0 { acc } else { acc * xi.powi(e as i32) })
            })
            .sum()
    }

    pub fn partial(&self, k: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (exps, c) in &self.terms {
            if exps[k] == 0 {
                continue;
            }
            let mut e = exps.clone();
            e[k] -= 1;
            out.add_term(c * exps[k] as f64, e);
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*c, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            out.add_term(c * s, e.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(ca * cb, e);
            }
        }
        out
    }
}

/// One monomial term of a vector field: `coefficient * x^exponents` in
/// component `component`. This is the on-disk form used by model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTerm {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
    pub component: usize,
}

/// A polynomial vector field with cached first and second derivatives.
#[derive(Debug, Clone)]
pub struct PolyField {
    components: Vec<Polynomial>,
    // jac[i][k] = d v^i / d x_k
    jac: Vec<Vec<Polynomial>>,
    // hess[i][k][l] = d^2 v^i / d x_k d x_l
    hess: Vec<Vec<Vec<Polynomial>>>,
}

impl PolyField {
    pub fn new(components: Vec<Polynomial>) -> Self {
        let n = components.len();
        assert!(components.iter().all(|p| p.nvars() == n), "field must map R^n to R^n");
        let jac: Vec<Vec<Polynomial>> = components
            .iter()
            .map(|p| (0..n).map(|k| p.partial(k)).collect())
            .collect();
        let hess = jac
            .iter()
            .map(|row| row.iter().map(|p| (0..n).map(|l| p.partial(l)).collect()).collect())
            .collect();
        Self { components, jac, hess }
    }

    /// Coordinate field `c * d/dx_k`.
    pub fn coordinate(n: usize, k: usize) -> Self {
        let mut comps = vec![Polynomial::zero(n); n];
        comps[k] = Polynomial::constant(n, 1.0);
        Self::new(comps)
    }

    pub fn from_terms(n: usize, terms: &[FieldTerm]) -> Result<Self, String> {
        let mut comps = vec![Polynomial::zero(n); n];
        for t in terms {
            if t.component >= n {
                return Err(format!("term component {} out of range for dimension {n}", t.component));
            }
            if t.exponents.len() != n {
                return Err(format!(
                    "term exponent multi-index has length {}, expected {n}",
                    t.exponents.len()
                ));
            }
            if !t.coefficient.is_finite() {
                return Err("non-finite coefficient".into());
            }
            comps[t.component].add_term(t.coefficient, t.exponents.clone());
        }
        Ok(Self::new(comps))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    /// Row-major Jacobian, `out[i * n + k] = d v^i / d x_k`.
    pub fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = self.jac[i][k].eval(x);
            }
        }
    }

    /// `out[k * n + l] = sum_i w_i d^2 v^i / dx_k dx_l`.
    pub fn contracted_hessian(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out[..n * n].iter_mut().for_each(|o| *o = 0.0);
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let p = &self.hess[i][k][l];
                    if !p.is_zero() {
                        out[k * n + l] += wi * p.eval(x);
                    }
                }
            }
        }
    }

    /// Lie bracket `[self, other] = D(other)·self − D(self)·other`.
    pub fn bracket(&self, other: &PolyField) -> PolyField {
        let n = self.dim();
        let comps = (0..n)
            .map(|i| {
                let mut acc = Polynomial::zero(n);
                for k in 0..n {
                    acc = acc.add(&self.components[k].mul(&other.jac[i][k]));
                    acc = acc.sub(&other.components[k].mul(&self.jac[i][k]));
                }
                acc
            })
            .collect();
        PolyField::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_partials() {
        // p = 3 x0^2 x1 + 2
        let mut p = Polynomial::monomial(3.0, vec![2, 1]);
        p.add_term(2.0, vec![0, 0]);
        assert_eq!(p.eval(&[2.0, 5.0]), 62.0);
        assert_eq!(p.partial(0).eval(&[2.0, 5.0]), 60.0);
        assert_eq!(p.partial(1).eval(&[2.0, 5.0]), 12.0);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = Polynomial::linear(2, 0, 1.5);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn grushin_bracket_is_d2() {
        let v1 = PolyField::coordinate(2, 0);
        let v2 = PolyField::new(vec![Polynomial::zero(2), Polynomial::linear(2, 0, 1.0)]);
        let b = v1.bracket(&v2);
        let mut out = [0.0; 2];
        b.eval(&[0.3, -1.0], &mut out);
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn from_terms_rejects_bad_component() {
        let t = FieldTerm { coefficient: 1.0, exponents: vec![0, 0], component: 2 };
        assert!(PolyField::from_terms(2, &[t]).is_err());
    }
}
