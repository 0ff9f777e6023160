/*
  Copyright 2026 The conplan Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid kinematic chain: {0}")]
    InvalidChain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    /// The planning query itself is malformed (start/goal off-manifold, in collision, ...).
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid configuration of {component}: {reason}")]
    Config {
        component: &'static str,
        reason: String,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        value: f64,
    },

    #[error("incompatible {what} format: expected version {expected}, found {found}")]
    VersionMismatch {
        what: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("parse error in {what} at {location}: {message}")]
    Parse {
        what: &'static str,
        location: String,
        message: String,
    },

    #[error("corpus aborted: oracle success {rate:.3} below required {required:.3}")]
    OracleTooWeak { rate: f64, required: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(component: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            component,
            reason: reason.into(),
        }
    }
}

/// Deserializes JSON, reporting failures with the field path and line/column.
pub(crate) fn from_json_str<T: serde::de::DeserializeOwned>(
    what: &'static str,
    text: &str,
) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            what,
            location: format!("{} (line {}, column {})", path, inner.line(), inner.column()),
            message: inner.to_string(),
        }
    })
}

/// Reads the `version` field of a JSON document without parsing the rest.
pub(crate) fn check_version(what: &'static str, text: &str, expected: u32) -> Result<()> {
    #[derive(serde::Deserialize)]
    struct Versioned {
        version: u32,
    }
    let v: Versioned = from_json_str(what, text)?;
    if v.version != expected {
        return Err(Error::VersionMismatch {
            what,
            expected,
            found: v.version,
        });
    }
    Ok(())
}
