use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Architecture, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON model checkpoint. Floats are written in shortest round-trip form,
/// so save/load is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Checkpoint<T = f64> {
    pub format_version: u32,
    pub scalar: String,
    pub architecture: Architecture,
    pub params: ModelParams<T>,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            scalar: T::NAME.to_string(),
            architecture: params.architecture(),
            params,
        }
    }

    pub fn into_params(self) -> Result<ModelParams<T>> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Contract(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        if self.scalar != T::NAME {
            return Err(Error::Contract(format!(
                "checkpoint stores {} weights, expected {}",
                self.scalar,
                T::NAME
            )));
        }
        self.params.validate()?;
        if self.params.architecture() != self.architecture {
            return Err(Error::Contract("checkpoint architecture does not match weights".into()));
        }
        Ok(self.params)
    }
}

pub fn save_checkpoint<T: Real>(params: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &Checkpoint::new(params.clone()))?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<ModelParams<T>> {
    let ckpt: Checkpoint<T> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    ckpt.into_params()
}
