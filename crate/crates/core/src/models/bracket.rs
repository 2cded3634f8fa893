use nalgebra::DMatrix;

use super::poly::PolyField;
use super::{norm, DerivativeMode, ModelSpec, VectorField, MAX_BRACKET_DEPTH, RANK_THRESHOLD};
use crate::linalg::{numerical_rank_of, singular_values};

/// Outcome of the bracket-generating test at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketStep {
    /// Smallest bracket depth at which the span is all of R^n.
    Step(usize),
    NotGenerated { max_depth: usize, rank: usize },
}

pub fn bracket_generating_step(model: &ModelSpec, x: &[f64], max_depth: usize) -> BracketStep {
    bracket_generating_step_with(model, x, max_depth, RANK_THRESHOLD)
}

/// Accumulates right-nested brackets `[v_i1, [v_i2, … v_ik]]` depth by depth
/// and reports the first depth whose span has full rank.
pub fn bracket_generating_step_with(
    model: &ModelSpec,
    x: &[f64],
    max_depth: usize,
    threshold: f64,
) -> BracketStep {
    let max_depth = max_depth.clamp(1, MAX_BRACKET_DEPTH);
    let n = model.dim();
    let symbolic = model.mode() == DerivativeMode::Analytic
        && model.frame().iter().all(|f| matches!(f, VectorField::Polynomial(_)));

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut rank = 0;
    if symbolic {
        let frame: Vec<&PolyField> = model
            .frame()
            .iter()
            .map(|f| match f {
                VectorField::Polynomial(p) => p,
                VectorField::Closure { .. } => unreachable!(),
            })
            .collect();
        let mut level: Vec<PolyField> = frame.iter().map(|p| (*p).clone()).collect();
        for depth in 1..=max_depth {
            for f in &level {
                let mut v = vec![0.0; n];
                f.eval(x, &mut v);
                columns.push(v);
            }
            rank = span_rank(&columns, n, threshold);
            if rank == n {
                return BracketStep::Step(depth);
            }
            if depth < max_depth {
                level = frame
                    .iter()
                    .flat_map(|vi| level.iter().map(move |w| vi.bracket(w)))
                    .collect();
            }
        }
    } else {
        let mut level: Vec<Word> = (0..model.rank()).map(Word::Leaf).collect();
        for depth in 1..=max_depth {
            for w in &level {
                columns.push(w.eval(model, x));
            }
            rank = span_rank(&columns, n, threshold);
            if rank == n {
                return BracketStep::Step(depth);
            }
            if depth < max_depth {
                level = (0..model.rank())
                    .flat_map(|i| level.iter().map(move |w| Word::Bracket(i, Box::new(w.clone()))))
                    .collect();
            }
        }
    }
    BracketStep::NotGenerated { max_depth, rank }
}

fn span_rank(columns: &[Vec<f64>], n: usize, threshold: f64) -> usize {
    let m = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    numerical_rank_of(&singular_values(&m), threshold)
}

/// A right-nested bracket evaluated numerically.
#[derive(Debug, Clone)]
enum Word {
    Leaf(usize),
    Bracket(usize, Box<Word>),
}

impl Word {
    fn eval(&self, model: &ModelSpec, x: &[f64]) -> Vec<f64> {
        match self {
            Word::Leaf(j) => model.field_value(*j, x).as_slice().to_vec(),
            Word::Bracket(i, inner) => {
                let n = model.dim();
                let vi = model.field_value(*i, x);
                let dvi = model.field_jacobian(*i, x);
                let w = inner.eval(model, x);
                let dw = inner.jacobian(model, x);
                (0..n)
                    .map(|a| {
                        (0..n).map(|k| dw[(a, k)] * vi[k] - dvi[(a, k)] * w[k]).sum::<f64>()
                    })
                    .collect()
            }
        }
    }

    fn jacobian(&self, model: &ModelSpec, x: &[f64]) -> DMatrix<f64> {
        match self {
            Word::Leaf(j) => model.field_jacobian(*j, x),
            Word::Bracket(..) => {
                // Nested differences: a coarser step keeps cancellation error
                // from compounding with depth.
                let n = model.dim();
                let h = 1e-3 * (1.0 + norm(x));
                let mut jac = DMatrix::zeros(n, n);
                let mut xp = x.to_vec();
                for k in 0..n {
                    xp[k] = x[k] + h;
                    let fp = self.eval(model, &xp);
                    xp[k] = x[k] - h;
                    let fm = self.eval(model, &xp);
                    xp[k] = x[k];
                    for a in 0..n {
                        jac[(a, k)] = (fp[a] - fm[a]) / (2.0 * h);
                    }
                }
                jac
            }
        }
    }
}
