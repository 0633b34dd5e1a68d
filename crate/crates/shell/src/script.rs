//! Operation scripts: a JSON list of operations replayed on an empty
//! structure.

use serde::{Deserialize, Serialize};
use tensegrid_core::stress::{assemble_basis_with, AssembleOptions};

use crate::document::{Document, Meta};
use crate::session::{replay, Op};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub seed: u64,
    pub ops: Vec<Op>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot parse script: {0}")]
    Parse(String),
    #[error("operation {index} failed: {source}")]
    Op { index: usize, source: tensegrid_core::Error },
    #[error("basis: {0}")]
    Basis(tensegrid_core::Error),
}

impl Script {
    /// Accepts `{"seed": .., "ops": [..]}` or a bare list of operations.
    pub fn parse(bytes: &[u8]) -> Result<Self, ScriptError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Full(Script),
            Bare(Vec<Op>),
        }
        match serde_json::from_slice::<Raw>(bytes) {
            Ok(Raw::Full(s)) => Ok(s),
            Ok(Raw::Bare(ops)) => Ok(Script { seed: 0, ops }),
            Err(e) => Err(ScriptError::Parse(e.to_string())),
        }
    }

    /// Replays the script and assembles the basis of the result.
    pub fn run(&self) -> Result<Document, ScriptError> {
        let structure = replay(&self.ops).map_err(|(index, source)| ScriptError::Op { index, source })?;
        let basis = assemble_basis_with(&structure, &AssembleOptions { seed: self.seed, ..Default::default() })
            .map_err(ScriptError::Basis)?;
        let meta = Meta {
            seed: Some(self.seed),
            generator: Some(serde_json::json!({ "kind": "script", "ops": self.ops.len() })),
        };
        Ok(Document::new(&structure, &basis, meta))
    }
}
