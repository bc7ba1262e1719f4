use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::units::UnitSystem;
use super::{parse_extxyz, restore_temporal_order, OrderError, ParseError, Species, Trajectory};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("duplicate molecule id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Order { path: PathBuf, source: OrderError },
    #[error("{path}: manifest declares {declared} frames, file has {parsed}")]
    FrameCount { path: PathBuf, declared: usize, parsed: usize },
    #[error("unknown molecule `{0}`")]
    UnknownMolecule(String),
}

/// One dataset file. `frames` and `species` are optional on input and always
/// filled in for canonical stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub units: UnitSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<BTreeMap<Species, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub molecules: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, serde_json::Error> {
        let mut manifest: DatasetManifest = serde_json::from_str(text)?;
        manifest.base_dir = base_dir.into();
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest =
            Self::from_json(&text, base).map_err(|source| ManifestError::Json { path: path.to_path_buf(), source })?;
        manifest.check_unique()?;
        Ok(manifest)
    }

    pub fn check_unique(&self) -> Result<(), ManifestError> {
        let mut seen = BTreeSet::new();
        for entry in &self.molecules {
            if !seen.insert(entry.id.as_str()) {
                return Err(ManifestError::DuplicateId(entry.id.clone()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.molecules.iter().find(|e| e.id == id)
    }

    /// Parses, orders and checks the declared frame count of one entry.
    pub fn load_trajectory(&self, id: &str) -> Result<Trajectory, ManifestError> {
        let entry = self.entry(id).ok_or_else(|| ManifestError::UnknownMolecule(id.to_string()))?;
        let path = self.resolve(entry);
        let text = std::fs::read_to_string(&path).map_err(|source| ManifestError::Io { path: path.clone(), source })?;
        let frames =
            parse_extxyz(&text, entry.units).map_err(|source| ManifestError::Parse { path: path.clone(), source })?;
        if let Some(declared) = entry.frames {
            if declared != frames.len() {
                return Err(ManifestError::FrameCount { path, declared, parsed: frames.len() });
            }
        }
        restore_temporal_order(&entry.id, frames).map_err(|source| ManifestError::Order { path, source })
    }

    pub fn ids(&self) -> Vec<String> {
        self.molecules.iter().map(|e| e.id.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_manifest() {
        let m = DatasetManifest::from_json(
            r#"{"molecules":[{"id":"a","path":"aspirin.xyz","units":"kcal_mol"}]}"#,
            "/data",
        )
        .unwrap();
        assert_eq!(m.molecules[0].units, UnitSystem::KcalMol);
        assert_eq!(m.resolve(&m.molecules[0]), PathBuf::from("/data/aspirin.xyz"));
        assert!(m.check_unique().is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let m =
            DatasetManifest::from_json(r#"{"molecules":[{"id":"a","path":"x"},{"id":"a","path":"y"}]}"#, ".").unwrap();
        assert!(matches!(m.check_unique(), Err(ManifestError::DuplicateId(id)) if id == "a"));
    }
}
