use std::fmt;
use std::str::FromStr;

use super::poly::{PolyField, Polynomial};
use super::{DerivativeMode, ModelSpec, VectorField};
use crate::error::{Error, Result};

/// The built-in model registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinModel {
    /// Flat R^n with the coordinate frame.
    Euclidean(usize),
    /// First Heisenberg group, `v_1 = ∂_1 − (x_2/2)∂_3`, `v_2 = ∂_2 + (x_1/2)∂_3`.
    Heisenberg,
    /// `v_1 = ∂_1`, `v_2 = x_1∂_2` on R².
    Grushin,
    /// `v_1 = ∂_1`, `v_2 = ∂_2 + x_1∂_3 + x_1²∂_4` on R⁴.
    Engel,
}

impl BuiltinModel {
    pub fn dim(self) -> usize {
        match self {
            BuiltinModel::Euclidean(n) => n,
            BuiltinModel::Heisenberg => 3,
            BuiltinModel::Grushin => 2,
            BuiltinModel::Engel => 4,
        }
    }

    pub fn build(self) -> ModelSpec {
        let n = self.dim();
        let fields: Vec<PolyField> = match self {
            BuiltinModel::Euclidean(n) => (0..n).map(|k| PolyField::coordinate(n, k)).collect(),
            BuiltinModel::Heisenberg => {
                let one = Polynomial::constant(3, 1.0);
                let zero = Polynomial::zero(3);
                vec![
                    PolyField::new(vec![one.clone(), zero.clone(), Polynomial::linear(3, 1, -0.5)]),
                    PolyField::new(vec![zero, one, Polynomial::linear(3, 0, 0.5)]),
                ]
            }
            BuiltinModel::Grushin => vec![
                PolyField::coordinate(2, 0),
                PolyField::new(vec![Polynomial::zero(2), Polynomial::linear(2, 0, 1.0)]),
            ],
            BuiltinModel::Engel => {
                let zero = Polynomial::zero(4);
                vec![
                    PolyField::coordinate(4, 0),
                    PolyField::new(vec![
                        zero.clone(),
                        Polynomial::constant(4, 1.0),
                        Polynomial::linear(4, 0, 1.0),
                        Polynomial::monomial(1.0, vec![2, 0, 0, 0]),
                    ]),
                ]
            }
        };
        ModelSpec::new(
            self.to_string(),
            n,
            fields.into_iter().map(VectorField::Polynomial).collect(),
            DerivativeMode::Analytic,
        )
        .expect("built-in frames are valid")
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinModel::Euclidean(n) => write!(f, "euclidean({n})"),
            BuiltinModel::Heisenberg => f.write_str("heisenberg"),
            BuiltinModel::Grushin => f.write_str("grushin"),
            BuiltinModel::Engel => f.write_str("engel"),
        }
    }
}

impl FromStr for BuiltinModel {
    type Err = Error;

    /// Accepts `heisenberg`, `grushin`, `engel`, and `euclidean(n)` or
    /// `euclideanN`.
    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        match name.as_str() {
            "heisenberg" => return Ok(BuiltinModel::Heisenberg),
            "grushin" => return Ok(BuiltinModel::Grushin),
            "engel" => return Ok(BuiltinModel::Engel),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix("euclidean") {
            let digits = rest.trim_start_matches('(').trim_end_matches(')');
            if let Ok(n) = digits.parse::<usize>() {
                if n >= 1 {
                    return Ok(BuiltinModel::Euclidean(n));
                }
            }
        }
        Err(Error::UnknownModel(s.to_string()))
    }
}

/// Looks up a built-in model by name.
pub fn register_builtin(name: &str) -> Result<ModelSpec> {
    Ok(name.parse::<BuiltinModel>()?.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in [
            BuiltinModel::Euclidean(1),
            BuiltinModel::Euclidean(3),
            BuiltinModel::Heisenberg,
            BuiltinModel::Grushin,
            BuiltinModel::Engel,
        ] {
            assert_eq!(m.to_string().parse::<BuiltinModel>().unwrap(), m);
        }
        assert_eq!("euclidean2".parse::<BuiltinModel>().unwrap(), BuiltinModel::Euclidean(2));
    }

    #[test]
    fn unknown_name_errors() {
        assert!(matches!(register_builtin("sphere"), Err(Error::UnknownModel(_))));
        assert!(register_builtin("euclidean(0)").is_err());
    }

    #[test]
    fn dims_and_ranks() {
        let h = register_builtin("heisenberg").unwrap();
        assert_eq!((h.dim(), h.rank()), (3, 2));
        let e = register_builtin("engel").unwrap();
        assert_eq!((e.dim(), e.rank()), (4, 2));
    }
}
