//! Canonical dataset stores: ingestion from a manifest and the synthetic
//! demo datasets.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;

use trajbench_core::dataset::{
    validate_trajectory, write_extxyz, DatasetManifest, ManifestEntry, Trajectory, UnitSystem,
};
use trajbench_core::synthetic::{anharmonic_triatomic, bundled_trajectory, drifting_triatomic};

/// Per-molecule line of the ingest summary.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedMolecule {
    pub id: String,
    pub frames: usize,
    pub atoms: usize,
    pub path: PathBuf,
}

/// Writes `<id>.xyz` (eV, eV/Å, temporally ordered) and `manifest.json`.
pub fn write_store(out: &Path, trajectories: &[Trajectory]) -> Result<Vec<IngestedMolecule>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    for traj in trajectories {
        let file = format!("{}.xyz", traj.molecule_id);
        let path = out.join(&file);
        fs::write(&path, write_extxyz(&traj.frames)).with_context(|| format!("writing {}", path.display()))?;
        entries.push(ManifestEntry {
            id: traj.molecule_id.clone(),
            path: PathBuf::from(file),
            units: UnitSystem::Ev,
            frames: Some(traj.len()),
            species: traj.frames.first().map(|f| f.composition()),
        });
        summary.push(IngestedMolecule {
            id: traj.molecule_id.clone(),
            frames: traj.len(),
            atoms: traj.frames.first().map_or(0, |f| f.len()),
            path,
        });
    }
    let manifest = DatasetManifest { molecules: entries, base_dir: out.to_path_buf() };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = out.join("manifest.json");
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(summary)
}

/// Parses, orders, converts and validates every manifest entry, then writes
/// the canonical store. Any validation violation is an error.
pub fn ingest(manifest_path: &Path, out: &Path) -> Result<Vec<IngestedMolecule>> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let mut trajectories = Vec::new();
    for id in manifest.ids() {
        let traj = manifest.load_trajectory(&id)?;
        let report = validate_trajectory(&traj);
        if !report.is_clean() {
            let path = manifest.resolve(manifest.entry(&id).expect("id from manifest"));
            let lines: Vec<String> = report.violations.iter().map(|v| format!("  {v}")).collect();
            bail!("{}: molecule `{id}` failed validation:\n{}", path.display(), lines.join("\n"));
        }
        info!("molecule {id}: {} frames", traj.len());
        trajectories.push(traj);
    }
    write_store(out, &trajectories)
}

/// The synthetic datasets: `syn` (1000-frame five-atom demo), `tri`
/// (2000-frame anharmonic triatomic) and `drift` (1000-frame drifting
/// triatomic).
pub fn synthetic_trajectories() -> Vec<Trajectory> {
    vec![bundled_trajectory(), anharmonic_triatomic(11), drifting_triatomic(1000, 0.3, 5)]
}
