//! Trajectory ingestion: extended XYZ parsing, unit normalization, temporal
//! ordering and validation.

mod elements;
mod extxyz;
mod frame;
mod manifest;
mod units;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use elements::{Species, UnknownElement};
pub use extxyz::{comment_pairs, parse_extxyz, write_extxyz, ParseError, ParseErrorKind};
pub use frame::{composition, Frame, Trajectory};
pub use manifest::{DatasetManifest, ManifestEntry, ManifestError};
pub use units::{convert_units, Dimension, DimensionMismatch, Unit, UnitSystem, EV_PER_KCAL_MOL, MEV_PER_EV};

/// Trajectories shorter than this cannot host a temporal split.
pub const MIN_TRAJECTORY_LEN: usize = 10;

/// Closest allowed approach between two atoms, in Å.
pub const MIN_INTERATOMIC_DISTANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("duplicate source_index {0}")]
    DuplicateIndex(u64),
    #[error("frame {frame} has a different species multiset than frame 0")]
    InconsistentSpecies { frame: usize },
    #[error("no frames")]
    Empty,
}

/// Sorts frames by `source_index` into a trajectory.
pub fn restore_temporal_order(molecule_id: &str, mut frames: Vec<Frame>) -> Result<Trajectory, OrderError> {
    let reference = frames.first().ok_or(OrderError::Empty)?.composition();
    for (i, f) in frames.iter().enumerate().skip(1) {
        if f.composition() != reference {
            return Err(OrderError::InconsistentSpecies { frame: i });
        }
    }
    frames.sort_by_key(|f| f.source_index);
    if let Some(w) = frames.windows(2).find(|w| w[0].source_index == w[1].source_index) {
        return Err(OrderError::DuplicateIndex(w[0].source_index));
    }
    Ok(Trajectory { molecule_id: molecule_id.to_string(), frames })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooShort { len: usize },
    NonIncreasingIndex { frame: usize },
    InconsistentSpecies { frame: usize },
    ShapeMismatch { frame: usize },
    EmptyFrame { frame: usize },
    NonFinite { frame: usize, field: &'static str },
    AtomsTooClose { frame: usize, atoms: (usize, usize), distance: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooShort { len } => write!(f, "trajectory has {len} frames (< {MIN_TRAJECTORY_LEN})"),
            Violation::NonIncreasingIndex { frame } => write!(f, "frame {frame}: source_index not increasing"),
            Violation::InconsistentSpecies { frame } => write!(f, "frame {frame}: species multiset differs"),
            Violation::ShapeMismatch { frame } => write!(f, "frame {frame}: positions/forces/species shape mismatch"),
            Violation::EmptyFrame { frame } => write!(f, "frame {frame}: no atoms"),
            Violation::NonFinite { frame, field } => write!(f, "frame {frame}: non-finite {field}"),
            Violation::AtomsTooClose { frame, atoms, distance } => {
                write!(f, "frame {frame}: atoms {} and {} are {distance:.4} Å apart", atoms.0, atoms.1)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks trajectory invariants; never fails, lists every violation.
pub fn validate_trajectory(traj: &Trajectory) -> ValidationReport {
    let mut violations = Vec::new();
    if traj.len() < MIN_TRAJECTORY_LEN {
        violations.push(Violation::TooShort { len: traj.len() });
    }
    let reference: Option<BTreeMap<Species, usize>> = traj.frames.first().map(Frame::composition);
    for (i, frame) in traj.frames.iter().enumerate() {
        if i > 0 && frame.source_index <= traj.frames[i - 1].source_index {
            violations.push(Violation::NonIncreasingIndex { frame: i });
        }
        if frame.is_empty() {
            violations.push(Violation::EmptyFrame { frame: i });
        }
        if frame.positions.len() != frame.species.len() || frame.forces.len() != frame.species.len() {
            violations.push(Violation::ShapeMismatch { frame: i });
            continue;
        }
        if reference.as_ref().is_some_and(|r| *r != frame.composition()) {
            violations.push(Violation::InconsistentSpecies { frame: i });
        }
        if !frame.energy.is_finite() {
            violations.push(Violation::NonFinite { frame: i, field: "energy" });
        }
        if frame.positions.iter().flatten().any(|v| !v.is_finite()) {
            violations.push(Violation::NonFinite { frame: i, field: "positions" });
        }
        if frame.forces.iter().flatten().any(|v| !v.is_finite()) {
            violations.push(Violation::NonFinite { frame: i, field: "forces" });
        }
        for a in 0..frame.len() {
            for b in a + 1..frame.len() {
                let d = distance(frame.positions[a], frame.positions[b]);
                // NaN distances are covered by the finiteness check
                if d <= MIN_INTERATOMIC_DISTANCE {
                    violations.push(Violation::AtomsTooClose { frame: i, atoms: (a, b), distance: d });
                }
            }
        }
    }
    ValidationReport { violations }
}

pub(crate) fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(idx: u64, x: f64) -> Frame {
        Frame {
            species: vec![Species::H, Species::H],
            positions: vec![[0.0, 0.0, 0.0], [x, 0.0, 0.0]],
            energy: -1.0,
            forces: vec![[0.0; 3]; 2],
            source_index: idx,
        }
    }

    #[test]
    fn sorts_by_source_index() {
        let traj = restore_temporal_order("a", vec![frame(2, 1.0), frame(0, 1.1), frame(1, 1.2)]).unwrap();
        let idx: Vec<u64> = traj.frames.iter().map(|f| f.source_index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(traj.frames[0].positions[1][0], 1.1);
    }

    #[test]
    fn ordered_input_is_unchanged() {
        let frames = vec![frame(0, 1.0), frame(1, 1.1), frame(2, 1.2)];
        let traj = restore_temporal_order("a", frames.clone()).unwrap();
        assert_eq!(traj.frames, frames);
    }

    #[test]
    fn duplicate_index_rejected() {
        let err = restore_temporal_order("a", vec![frame(5, 1.0), frame(5, 1.1)]).unwrap_err();
        assert_eq!(err, OrderError::DuplicateIndex(5));
    }

    #[test]
    fn inconsistent_species_rejected() {
        let mut other = frame(1, 1.0);
        other.species[1] = Species::O;
        let err = restore_temporal_order("a", vec![frame(0, 1.0), other]).unwrap_err();
        assert_eq!(err, OrderError::InconsistentSpecies { frame: 1 });
    }

    #[test]
    fn validation_of_clean_trajectory() {
        let frames: Vec<Frame> = (0..100).map(|i| frame(i, 1.0 + 0.001 * i as f64)).collect();
        let traj = restore_temporal_order("a", frames).unwrap();
        assert!(validate_trajectory(&traj).is_clean());
    }

    #[test]
    fn validation_lists_overlap_and_nan() {
        let mut frames: Vec<Frame> = (0..12).map(|i| frame(i, 1.0)).collect();
        frames[3].positions[1] = [0.0, 0.0, 0.0];
        frames[7].forces[0][1] = f64::NAN;
        let traj = Trajectory { molecule_id: "a".into(), frames };
        let report = validate_trajectory(&traj);
        assert_eq!(report.violations.len(), 2);
        assert!(matches!(report.violations[0], Violation::AtomsTooClose { frame: 3, .. }));
        assert_eq!(report.violations[1], Violation::NonFinite { frame: 7, field: "forces" });
    }

    #[test]
    fn validation_flags_short_trajectory() {
        let traj = Trajectory { molecule_id: "a".into(), frames: vec![frame(0, 1.0)] };
        assert_eq!(validate_trajectory(&traj).violations, vec![Violation::TooShort { len: 1 }]);
    }
}
