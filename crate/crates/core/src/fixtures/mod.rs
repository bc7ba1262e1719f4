//! Train/test fixture construction over temporally ordered trajectories.
//!
//! Every fixture is a pure function of the trajectory length and a handful of
//! fractions and counts, so index lists are reproducible bit-exactly. Training
//! data never overlaps the final test window.

mod file;
mod generalization;
mod reference;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;

pub use file::{FixtureFile, FixtureKind, MoleculeIndices, FIXTURE_SCHEMA_VERSION};
pub use generalization::{
    available_generalization_plans, build_generalization_plans, rmd17_inventories, GeneralizationPlan, RMD17_MOLECULES,
    TABLE_BUILDS,
};
pub use reference::{fit_reference_energies, CombinedDataset, ReferenceFit, TaggedFrame};

/// Fraction of the trajectory held out at the end.
pub const DEFAULT_TEST_FRACTION: f64 = 0.1;
/// Upper end of any training window, as a fraction of the trajectory.
pub const TRAIN_LIMIT: f64 = 0.9;
pub const WINDOW_SLACK: f64 = 1e-12;
pub const SAMPLE_EFFICIENCY_COUNTS: [usize; 7] = [200, 400, 600, 800, 1000, 15000, 50000];
pub const GRID_SIZES: [f64; 5] = [0.30, 0.45, 0.60, 0.75, 0.90];
pub const GRID_STARTS: [f64; 5] = [0.0, 0.15, 0.30, 0.45, 0.60];
pub const GRID_COUNTS: [usize; 2] = [1000, 15000];
/// Frames drawn from each trajectory for the cross-molecule builds.
pub const GENERALIZATION_SAMPLES: usize = 1000;

/// Guards `floor`/`ceil` of products like `0.15 * 1000` against representation error.
const ROUNDING_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("trajectory has {len} frames, at least {min} required")]
    TooShort { len: usize, min: usize },
    #[error("fraction {0} outside the allowed range")]
    InvalidFraction(f64),
    #[error("window [{start}, {end}) is empty")]
    EmptyRange { start: usize, end: usize },
    #[error("window start {start} + size {size} exceeds {TRAIN_LIMIT}")]
    WindowOverlapsTest { start: f64, size: f64 },
    #[error("cannot sample {k} indices from a window of {window}")]
    SampleExceedsWindow { k: usize, window: usize },
    #[error("molecule `{0}` is referenced by a build but missing from the dataset")]
    MissingMolecule(String),
    #[error("reference energy regression failed: {0}")]
    Regression(#[from] LinalgError),
    #[error("no frames to fit")]
    NoFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSplit {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub test_fraction: f64,
}

/// Holds out the last `ceil(test_fraction * len)` frames.
pub fn temporal_split(len: usize, test_fraction: f64) -> Result<TemporalSplit, FixtureError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FixtureError::InvalidFraction(test_fraction));
    }
    if len < crate::dataset::MIN_TRAJECTORY_LEN {
        return Err(FixtureError::TooShort { len, min: crate::dataset::MIN_TRAJECTORY_LEN });
    }
    let n_test = test_window_len(len, test_fraction);
    let boundary = len - n_test;
    Ok(TemporalSplit { train_indices: (0..boundary).collect(), test_indices: (boundary..len).collect(), test_fraction })
}

fn test_window_len(len: usize, test_fraction: f64) -> usize {
    ((test_fraction * len as f64 - ROUNDING_GUARD).ceil() as usize).clamp(1, len - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub start_frac: f64,
    pub size_frac: f64,
    pub sample_count: usize,
}

impl WindowSpec {
    pub fn new(start_frac: f64, size_frac: f64, sample_count: usize) -> Result<Self, FixtureError> {
        if !(0.0..1.0).contains(&start_frac) {
            return Err(FixtureError::InvalidFraction(start_frac));
        }
        if !(size_frac > 0.0 && size_frac <= 1.0) {
            return Err(FixtureError::InvalidFraction(size_frac));
        }
        if start_frac + size_frac > TRAIN_LIMIT + WINDOW_SLACK {
            return Err(FixtureError::WindowOverlapsTest { start: start_frac, size: size_frac });
        }
        if sample_count == 0 {
            return Err(FixtureError::SampleExceedsWindow { k: 0, window: 0 });
        }
        Ok(Self { start_frac, size_frac, sample_count })
    }

    /// The full training range `[0, 0.9)`.
    pub fn full_train(sample_count: usize) -> Self {
        Self { start_frac: 0.0, size_frac: TRAIN_LIMIT, sample_count }
    }

    /// `win_s{start}_w{size}_n{count}`.
    pub fn fixture_id(&self) -> String {
        format!("win_s{:.2}_w{:.2}_n{}", self.start_frac, self.size_frac, self.sample_count)
    }

    /// Identifier of the window geometry alone.
    pub fn geometry_id(&self) -> String {
        format!("s{:.2}_w{:.2}", self.start_frac, self.size_frac)
    }
}

/// Half-open range `[floor(start * len), floor((start + size) * len))`.
pub fn window_indices(len: usize, spec: &WindowSpec) -> Result<std::ops::Range<usize>, FixtureError> {
    let start = (spec.start_frac * len as f64 + ROUNDING_GUARD).floor() as usize;
    let end = (((spec.start_frac + spec.size_frac) * len as f64 + ROUNDING_GUARD).floor() as usize).min(len);
    if end <= start {
        return Err(FixtureError::EmptyRange { start, end });
    }
    Ok(start..end)
}

/// Window-relative even-stride indices `floor(j * window / k)`, `j = 0..k`.
pub fn deterministic_sample(window: usize, k: usize) -> Result<Vec<usize>, FixtureError> {
    if k == 0 || k > window {
        return Err(FixtureError::SampleExceedsWindow { k, window });
    }
    Ok((0..k).map(|j| ((j as u128 * window as u128) / k as u128) as usize).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSubset {
    pub spec: WindowSpec,
    pub indices: Vec<usize>,
}

/// Samples `spec.sample_count` trajectory indices inside the spec's window.
pub fn sample_window(len: usize, spec: &WindowSpec) -> Result<SampledSubset, FixtureError> {
    let range = window_indices(len, spec)?;
    let rel = deterministic_sample(range.len(), spec.sample_count)?;
    Ok(SampledSubset { spec: *spec, indices: rel.into_iter().map(|i| i + range.start).collect() })
}

/// Subsets of the first 90% for each requested count; counts that do not fit
/// the window are dropped with a warning.
pub fn sample_efficiency_series(len: usize, counts: &[usize]) -> Vec<SampledSubset> {
    let full = WindowSpec::full_train(1);
    let window = match window_indices(len, &full) {
        Ok(r) => r.len(),
        Err(_) => 0,
    };
    let mut out = Vec::new();
    let mut dropped = Vec::new();
    for &count in counts {
        if count == 0 || count > window {
            dropped.push(count);
            continue;
        }
        let spec = WindowSpec::full_train(count);
        if let Ok(subset) = sample_window(len, &spec) {
            out.push(subset);
        }
    }
    if !dropped.is_empty() {
        warn!("sample counts {dropped:?} exceed the {window}-frame training window and were dropped");
    }
    out
}

/// `se_n{count}`.
pub fn sample_efficiency_id(count: usize) -> String {
    format!("se_n{count}")
}

/// `gen_{build}`.
pub fn generalization_id(build: &str) -> String {
    format!("gen_{build}")
}

/// Window geometries of the grid scan (size-major), each repeated per count.
pub fn grid_scan_specs(counts: &[usize]) -> Vec<WindowSpec> {
    let mut specs = Vec::new();
    for &size in &GRID_SIZES {
        for &start in &GRID_STARTS {
            if start + size > TRAIN_LIMIT + WINDOW_SLACK {
                continue;
            }
            for &count in counts {
                specs.push(WindowSpec { start_frac: start, size_frac: size, sample_count: count });
            }
        }
    }
    specs
}
