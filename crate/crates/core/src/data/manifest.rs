//! Machine-readable description of a loaded dataset.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AttributeBounds, ColumnSpec, DataError, Dataset, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub n_records: usize,
    pub n_attributes: usize,
    pub classes: Vec<String>,
    pub class_counts: Vec<usize>,
    pub bounds: Vec<AttributeBounds>,
    /// Column encodings; categorical columns map each level to its index.
    pub columns: Vec<ColumnSpec>,
    /// Hex SHA-256 of the source file, when loaded from one.
    pub source_sha256: Option<String>,
}

impl DatasetManifest {
    pub fn describe(data: &Dataset, schema: &Schema, source_sha256: Option<String>) -> Self {
        Self {
            name: data.name().to_string(),
            n_records: data.len(),
            n_attributes: data.n_attributes(),
            classes: data.classes().to_vec(),
            class_counts: data.class_counts(),
            bounds: data.bounds().to_vec(),
            columns: schema.columns.clone(),
            source_sha256,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest fields are serializable")
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String, DataError> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
