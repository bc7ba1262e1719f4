//! Per-atom force and energy errors, plus the ranking and grouping views of
//! a set of records.
//!
//! Force MAE is component-wise: the mean of `|f - f~|` over every selected
//! atom, frame and Cartesian component. Per-species values therefore
//! partition the overall value exactly when weighted by atom count.

mod io;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Species, EV_PER_KCAL_MOL, MEV_PER_EV};
use crate::fixtures::WindowSpec;
use crate::scalar::pairwise_sum;

pub use io::{read_records_jsonl, records_csv, records_jsonl, sort_records};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const FORCE_MAE_ALL: &str = "force_mae_all";
pub const ENERGY_MAE_PER_ATOM: &str = "energy_mae_per_atom";
pub const SOAP_SIMILARITY: &str = "soap_similarity";
pub const FORCE_UNIT: &str = "meV/Å";
pub const ENERGY_UNIT: &str = "meV";

pub fn force_species_metric(s: Species) -> String {
    format!("force_mae_species:{}", s.symbol())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("species {0} does not occur in the batch")]
    EmptySelection(Species),
    #[error("frame {frame}: {reason}")]
    Shape { frame: usize, reason: String },
    #[error("records mix metrics `{0}` and `{1}`")]
    MixedMetrics(String, String),
    #[error("record for fixture `{0}` has no window metadata")]
    MissingWindow(String),
    #[error("records mix schema versions {0} and {1}")]
    MixedSchema(u32, u32),
    #[error("records have schema version {found}, this build reads version {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One test frame with reference and predicted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub species: Vec<Species>,
    pub true_energy: f64,
    pub pred_energy: f64,
    pub true_forces: Vec<[f64; 3]>,
    pub pred_forces: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBatch {
    pub fixture_id: String,
    pub model_id: String,
    pub molecule: String,
    pub frames: Vec<FramePrediction>,
}

impl PredictionBatch {
    pub fn new(
        fixture_id: impl Into<String>,
        model_id: impl Into<String>,
        molecule: impl Into<String>,
        frames: Vec<FramePrediction>,
    ) -> Result<Self, MetricsError> {
        for (i, f) in frames.iter().enumerate() {
            let n = f.species.len();
            if n == 0 {
                return Err(MetricsError::Shape { frame: i, reason: "frame has no atoms".into() });
            }
            if f.true_forces.len() != n || f.pred_forces.len() != n {
                return Err(MetricsError::Shape {
                    frame: i,
                    reason: format!(
                        "{n} atoms but {} reference and {} predicted force rows",
                        f.true_forces.len(),
                        f.pred_forces.len()
                    ),
                });
            }
        }
        Ok(Self { fixture_id: fixture_id.into(), model_id: model_id.into(), molecule: molecule.into(), frames })
    }

    pub fn species(&self) -> BTreeSet<Species> {
        self.frames.iter().flat_map(|f| f.species.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Error,
}

/// One (fixture, model, metric) result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub schema_version: u32,
    pub suite: String,
    pub fixture_id: String,
    pub molecule: String,
    pub model_id: String,
    pub metric: String,
    /// meV/Å for forces, meV for energies, unitless for similarity. Empty on error.
    pub value: Option<f64>,
    /// kcal/mol/Å or kcal/mol.
    pub value_kcal: Option<f64>,
    pub unit: String,
    pub frame_count: usize,
    pub atom_count: usize,
    pub sample_count: Option<usize>,
    pub window_start: Option<f64>,
    pub window_size: Option<f64>,
    pub similarity_min: Option<f64>,
    pub similarity_max: Option<f64>,
    pub status: RecordStatus,
    pub error: Option<String>,
    pub fixture_hash: String,
    pub soap_hash: String,
}

impl MetricRecord {
    pub fn new(fixture_id: &str, model_id: &str, molecule: &str, metric: &str, unit: &str) -> Self {
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            suite: String::new(),
            fixture_id: fixture_id.into(),
            molecule: molecule.into(),
            model_id: model_id.into(),
            metric: metric.into(),
            value: None,
            value_kcal: None,
            unit: unit.into(),
            frame_count: 0,
            atom_count: 0,
            sample_count: None,
            window_start: None,
            window_size: None,
            similarity_min: None,
            similarity_max: None,
            status: RecordStatus::Ok,
            error: None,
            fixture_hash: String::new(),
            soap_hash: String::new(),
        }
    }

    /// An error-tagged record standing in for a metric that could not be computed.
    pub fn failed(fixture_id: &str, model_id: &str, molecule: &str, metric: &str, unit: &str, error: &str) -> Self {
        let mut r = Self::new(fixture_id, model_id, molecule, metric, unit);
        r.status = RecordStatus::Error;
        r.error = Some(error.to_string());
        r
    }

    pub fn with_suite(mut self, suite: &str) -> Self {
        self.suite = suite.into();
        self
    }

    pub fn with_window(mut self, spec: &WindowSpec) -> Self {
        self.window_start = Some(spec.start_frac);
        self.window_size = Some(spec.size_frac);
        self.sample_count = Some(spec.sample_count);
        self
    }

    pub fn with_provenance(mut self, fixture_hash: &str, soap_hash: &str) -> Self {
        self.fixture_hash = fixture_hash.into();
        self.soap_hash = soap_hash.into();
        self
    }

    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// meV (or meV/Å) to kcal/mol (or kcal/mol/Å).
pub fn mev_to_kcal(value: f64) -> f64 {
    value / MEV_PER_EV / EV_PER_KCAL_MOL
}

fn base_record(batch: &PredictionBatch, metric: &str, unit: &str) -> MetricRecord {
    let mut r = MetricRecord::new(&batch.fixture_id, &batch.model_id, &batch.molecule, metric, unit);
    r.frame_count = batch.frames.len();
    r
}

/// Component-wise force MAE in meV/Å over all atoms, or over one species.
pub fn force_mae(batch: &PredictionBatch, species: Option<Species>) -> Result<MetricRecord, MetricsError> {
    if batch.frames.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let mut errors = Vec::new();
    let mut atoms = 0;
    for f in &batch.frames {
        for (i, s) in f.species.iter().enumerate() {
            if species.is_some_and(|want| want != *s) {
                continue;
            }
            atoms += 1;
            for u in 0..3 {
                errors.push((f.true_forces[i][u] - f.pred_forces[i][u]).abs());
            }
        }
    }
    if errors.is_empty() {
        return Err(species.map_or(MetricsError::EmptyBatch, MetricsError::EmptySelection));
    }
    let metric = species.map_or_else(|| FORCE_MAE_ALL.to_string(), force_species_metric);
    let value = pairwise_sum(&errors) / errors.len() as f64 * MEV_PER_EV;
    let mut r = base_record(batch, &metric, FORCE_UNIT);
    r.value = Some(value);
    r.value_kcal = Some(mev_to_kcal(value));
    r.atom_count = atoms;
    Ok(r)
}

/// Mean over frames of `|E - E~| / N`, in meV.
pub fn energy_mae_per_atom(batch: &PredictionBatch) -> Result<MetricRecord, MetricsError> {
    if batch.frames.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let per_frame: Vec<f64> =
        batch.frames.iter().map(|f| (f.true_energy - f.pred_energy).abs() / f.species.len() as f64).collect();
    let value = pairwise_sum(&per_frame) / per_frame.len() as f64 * MEV_PER_EV;
    let mut r = base_record(batch, ENERGY_MAE_PER_ATOM, ENERGY_UNIT);
    r.value = Some(value);
    r.value_kcal = Some(mev_to_kcal(value));
    r.atom_count = batch.frames.iter().map(|f| f.species.len()).sum();
    Ok(r)
}

/// Energy, overall force and per-species force records, in that order.
pub fn evaluate_batch(batch: &PredictionBatch) -> Result<Vec<MetricRecord>, MetricsError> {
    let mut out = vec![energy_mae_per_atom(batch)?, force_mae(batch, None)?];
    for s in batch.species() {
        out.push(force_mae(batch, Some(s))?);
    }
    Ok(out)
}

fn rank_key(r: &MetricRecord) -> f64 {
    r.value.unwrap_or(f64::INFINITY)
}

/// Ascending by value, ties by fixture id; failed records go last.
pub fn rank_records(records: &[MetricRecord]) -> Result<Vec<MetricRecord>, MetricsError> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.metric != first.metric) {
            return Err(MetricsError::MixedMetrics(first.metric.clone(), other.metric.clone()));
        }
    }
    let mut out = records.to_vec();
    out.sort_by(|a, b| rank_key(a).total_cmp(&rank_key(b)).then_with(|| a.fixture_id.cmp(&b.fixture_id)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    WindowSize,
    WindowStart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    /// Value along the axis not grouped on.
    pub position: f64,
    pub value: f64,
    pub fixture_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    /// Shared value of the grouping axis.
    pub key: f64,
    pub points: Vec<SeriesPoint>,
}

/// One series per distinct value of `axis`, each ordered along the other
/// axis. Failed records carry no value and are left out.
pub fn group_project(records: &[MetricRecord], axis: Axis) -> Result<Vec<Series>, MetricsError> {
    let mut groups: BTreeMap<u64, Vec<SeriesPoint>> = BTreeMap::new();
    for r in records {
        let (Some(start), Some(size)) = (r.window_start, r.window_size) else {
            return Err(MetricsError::MissingWindow(r.fixture_id.clone()));
        };
        let Some(value) = r.value else { continue };
        let (key, position) = match axis {
            Axis::WindowSize => (size, start),
            Axis::WindowStart => (start, size),
        };
        groups.entry(key.to_bits()).or_default().push(SeriesPoint {
            position,
            value,
            fixture_id: r.fixture_id.clone(),
        });
    }
    let mut out: Vec<Series> = groups
        .into_iter()
        .map(|(bits, mut points)| {
            points.sort_by(|a, b| a.position.total_cmp(&b.position).then_with(|| a.fixture_id.cmp(&b.fixture_id)));
            Series { key: f64::from_bits(bits), points }
        })
        .collect();
    out.sort_by(|a, b| a.key.total_cmp(&b.key));
    Ok(out)
}
