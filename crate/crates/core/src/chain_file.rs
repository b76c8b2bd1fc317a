//! The JSON chain spec: `{"n_states": N, "A": [[..]], "pi": [..]?, "f": [..] | [[..]]?}`.

use serde::Deserialize;

use crate::chain::{validate_chain, Observable, ProbabilityVector, StationaryChain, TransitionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Scalar(Vec<f64>),
    Vector(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n_states: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub pi: Option<Vec<f64>>,
    #[serde(default)]
    pub f: Option<ObservableSpec>,
}

impl ChainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ChainFile(e.to_string()))
    }

    /// Validates the chain; the observable, if present, must have one entry per state.
    pub fn build(&self) -> Result<(StationaryChain, Option<Observable>)> {
        if self.a.len() != self.n_states {
            return Err(Error::DimensionMismatch { expected: self.n_states, got: self.a.len() });
        }
        let a = TransitionMatrix::from_rows(&self.a)?;
        let pi = self.pi.clone().map(ProbabilityVector::new).transpose()?;
        let chain = validate_chain(a, pi)?;
        let f = match &self.f {
            None => None,
            Some(ObservableSpec::Scalar(v)) => Some(Observable::scalar(v.clone())?),
            Some(ObservableSpec::Vector(rows)) => Some(Observable::vector(rows.clone())?),
        };
        if let Some(f) = &f {
            if f.n_states() != self.n_states {
                return Err(Error::DimensionMismatch { expected: self.n_states, got: f.n_states() });
            }
        }
        Ok((chain, f))
    }
}
