//! Versioned JSON dumps of a whole stack: every layer's rule base together
//! with voting weights, decaying factors, feature weights, dormancy flags
//! and the detector configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::stack::DeepStack;
use crate::{Error, Result};

const FORMAT: &str = "devfnn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<S> {
    format: String,
    version: u32,
    stack: S,
}

pub fn to_json(stack: &DeepStack) -> Result<String> {
    let envelope = Envelope {
        format: FORMAT.to_string(),
        version: VERSION,
        stack,
    };
    serde_json::to_string(&envelope).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn from_json(text: &str) -> Result<DeepStack> {
    let header: Envelope<serde::de::IgnoredAny> =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if header.format != FORMAT {
        return Err(Error::Checkpoint(format!("unknown format `{}`", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (expected {VERSION})",
            header.version
        )));
    }
    let envelope: Envelope<DeepStack> =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    envelope.stack.config().validate()?;
    Ok(envelope.stack)
}

pub fn save(path: impl AsRef<Path>, stack: &DeepStack) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(stack)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<DeepStack> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
