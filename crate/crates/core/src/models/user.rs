//! Declarative model files: each frame field is a list of monomial terms.
//!
//! ```toml
//! name = "my-grushin"
//! dimension = 2
//! derivative_mode = "analytic"   # or "central"
//! step = 1e-5                    # central-difference base step
//!
//! [[fields]]
//! terms = [{ coefficient = 1.0, exponents = [0, 0], component = 0 }]
//!
//! [[fields]]
//! terms = [{ coefficient = 1.0, exponents = [1, 0], component = 1 }]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::poly::{FieldTerm, PolyField};
use super::{DerivativeMode, ModelSpec, VectorField, DEFAULT_FD_STEP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub derivative_mode: Option<String>,
    #[serde(default)]
    pub step: Option<f64>,
    pub fields: Vec<FieldSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub terms: Vec<FieldTerm>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<ModelSpec> {
        let n = self.dimension;
        let mode = match self.derivative_mode.as_deref() {
            None | Some("analytic") => DerivativeMode::Analytic,
            Some("central") | Some("central-difference") => {
                DerivativeMode::CentralDifference { h: self.step.unwrap_or(DEFAULT_FD_STEP) }
            }
            Some(other) => {
                return Err(Error::InvalidModel(format!("unknown derivative_mode `{other}`")))
            }
        };
        let frame = self
            .fields
            .iter()
            .map(|f| PolyField::from_terms(n, &f.terms).map(VectorField::Polynomial))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(Error::InvalidModel)?;
        ModelSpec::new(self.name, n, frame, mode)
    }
}

pub fn parse_model_file(text: &str) -> Result<ModelSpec> {
    let file: ModelFile = toml::from_str(text)?;
    file.into_model()
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelSpec> {
    parse_model_file(&std::fs::read_to_string(path)?)
}
