//! Building blocks of the `holoseries` command-line tool.

pub mod engine;
pub mod expand;
pub mod grid;
pub mod identities;
pub mod output;

use anyhow::{Context, Result};
use holoseries::ModelSpec;

/// Reads a model document; parse errors carry line and column.
pub fn load_model(path: &std::path::Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
