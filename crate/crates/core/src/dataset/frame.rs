use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Species;

/// One time step: positions in Å, energy in eV, forces in eV/Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub species: Vec<Species>,
    pub positions: Vec<[f64; 3]>,
    pub energy: f64,
    pub forces: Vec<[f64; 3]>,
    /// Original time ordinal (`old_index`), or the file ordinal when absent.
    pub source_index: u64,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    /// Species multiset as counts keyed by species.
    pub fn composition(&self) -> BTreeMap<Species, usize> {
        composition(&self.species)
    }

    pub fn translated(&self, shift: [f64; 3]) -> Frame {
        let mut out = self.clone();
        for p in &mut out.positions {
            for k in 0..3 {
                p[k] += shift[k];
            }
        }
        out
    }

    /// Applies a 3x3 rotation (row-major) to positions and forces.
    pub fn rotated(&self, rotation: &[[f64; 3]; 3]) -> Frame {
        let apply = |v: &[f64; 3]| {
            let mut out = [0.0; 3];
            for (i, row) in rotation.iter().enumerate() {
                out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
            }
            out
        };
        let mut out = self.clone();
        out.positions = self.positions.iter().map(apply).collect();
        out.forces = self.forces.iter().map(apply).collect();
        out
    }

    /// Reorders atoms so that new atom `k` is old atom `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Frame {
        Frame {
            species: order.iter().map(|&i| self.species[i]).collect(),
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            energy: self.energy,
            forces: order.iter().map(|&i| self.forces[i]).collect(),
            source_index: self.source_index,
        }
    }
}

pub fn composition(species: &[Species]) -> BTreeMap<Species, usize> {
    let mut counts = BTreeMap::new();
    for &s in species {
        *counts.entry(s).or_insert(0) += 1;
    }
    counts
}

/// Temporally ordered frames of one molecule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub molecule_id: String,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn species_inventory(&self) -> std::collections::BTreeSet<Species> {
        self.frames.first().map(|f| f.species.iter().copied().collect()).unwrap_or_default()
    }
}
