use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::WindowSpec;

pub const FIXTURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    SampleEfficiency,
    TimeExtrapolation,
    CrossMolecule,
    /// Subsampled training window and test window compared by SOAP similarity.
    WindowSimilarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeIndices {
    pub molecule: String,
    pub trajectory_len: usize,
    pub indices: Vec<usize>,
}

/// Auditable description of one fixture with its explicit index lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema_version: u32,
    pub id: String,
    pub kind: FixtureKind,
    pub sampling_rule: String,
    pub test_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    pub train: Vec<MoleculeIndices>,
    pub test: Vec<MoleculeIndices>,
}

impl FixtureFile {
    pub fn new(id: String, kind: FixtureKind, test_fraction: f64, window: Option<WindowSpec>) -> Self {
        Self {
            schema_version: FIXTURE_SCHEMA_VERSION,
            id,
            kind,
            sampling_rule: "even_stride".to_string(),
            test_fraction,
            window,
            train: Vec::new(),
            test: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("fixture serializes");
        text.push('\n');
        text
    }

    /// SHA-256 of the canonical JSON text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn train_count(&self) -> usize {
        self.train.iter().map(|m| m.indices.len()).sum()
    }
}
