//! Parsing of the JSON state-spec format.

use qbstat_core::{Error as CoreError, StateSpec};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed state spec: {0}")]
    Parse(String),
    #[error("invalid state spec at `{path}`: {reason}")]
    Validation { path: String, reason: String },
}

/// Parses and validates a state spec such as `{"kind":"fock","n":3}`.
pub fn parse_state_spec(text: &str) -> Result<StateSpec, SpecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
    let spec: StateSpec = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        SpecError::Validation {
            path: if path == "." { String::new() } else { path },
            reason: e.into_inner().to_string(),
        }
    })?;
    spec.validate().map_err(|e| match e {
        CoreError::InvalidState { path, reason } => SpecError::Validation { path, reason },
        other => SpecError::Validation {
            path: String::new(),
            reason: other.to_string(),
        },
    })?;
    Ok(spec)
}
