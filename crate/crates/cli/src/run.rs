//! Suite execution: fixture generation, per-fixture training and evaluation,
//! and the records, fixture files and report written to the output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use trajbench_core::baseline::{RidgeSoapModel, TrainConfig};
use trajbench_core::dataset::{DatasetManifest, Frame, Species, Trajectory};
use trajbench_core::fixtures::{
    available_generalization_plans, deterministic_sample, generalization_id, grid_scan_specs, sample_efficiency_id,
    sample_efficiency_series, sample_window, temporal_split, window_indices, CombinedDataset, FixtureFile, FixtureKind,
    MoleculeIndices, WindowSpec, DEFAULT_TEST_FRACTION, GENERALIZATION_SAMPLES, GRID_COUNTS, SAMPLE_EFFICIENCY_COUNTS,
};
use trajbench_core::metrics::{
    evaluate_batch, records_csv, records_jsonl, sort_records, FramePrediction, MetricRecord, PredictionBatch,
    FORCE_MAE_ALL, FORCE_UNIT, SOAP_SIMILARITY,
};
use trajbench_core::protocol::{ModelHandle, PredictedFrame, Timeouts, WireTrainConfig};
use trajbench_core::soap::{window_similarity, SoapCalculator, SoapParams, DEFAULT_MAX_PAIRS_PER_SIDE};

use crate::report;

/// Exit status when every fixture succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status when some but not all fixtures failed.
pub const EXIT_PARTIAL: i32 = 10;
/// Exit status for configuration or I/O errors, or when every fixture failed.
pub const EXIT_ERROR: i32 = 1;

/// Frames per `predict` request sent to an external model.
const PREDICT_CHUNK: usize = 1000;
pub const SIMILARITY_UNIT: &str = "cosine";
pub const BUILTIN_MODEL_ID: &str = "ridge_soap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    SampleEfficiency,
    TimeExtrapolation,
    CrossMolecule,
    SoapSimilarity,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::SampleEfficiency => "sample_efficiency",
            Suite::TimeExtrapolation => "time_extrapolation",
            Suite::CrossMolecule => "cross_molecule",
            Suite::SoapSimilarity => "soap_similarity",
        }
    }
}

/// `builtin` or `cmd:"program args..."`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Builtin,
    External(Vec<String>),
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            return Ok(ModelSpec::Builtin);
        }
        let Some(cmd) = s.strip_prefix("cmd:") else {
            return Err(format!("model must be `builtin` or `cmd:<command line>`, got `{s}`"));
        };
        let words = shlex::split(cmd).ok_or_else(|| format!("cannot split command line `{cmd}`"))?;
        if words.is_empty() {
            return Err("empty model command".into());
        }
        Ok(ModelSpec::External(words))
    }
}

impl ModelSpec {
    /// Identifier written into records; external models are named after the
    /// program's file name so records do not depend on install paths.
    pub fn model_id(&self) -> String {
        match self {
            ModelSpec::Builtin => BUILTIN_MODEL_ID.to_string(),
            ModelSpec::External(cmd) => {
                let program =
                    Path::new(&cmd[0]).file_name().map_or(cmd[0].clone(), |n| n.to_string_lossy().into_owned());
                format!("cmd:{program}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: Suite,
    /// Canonical store written by `ingest`.
    pub data_dir: PathBuf,
    pub model: ModelSpec,
    pub out_dir: PathBuf,
    /// Descriptor settings; the species list is filled from the data.
    pub soap: SoapParams<f64>,
    /// Overrides the suite's sample counts.
    pub samples: Option<Vec<usize>>,
    pub workers: usize,
    pub seed: u64,
    /// Molecule for single-molecule suites; defaults to the first in the store.
    pub molecule: Option<String>,
    pub ridge_lambda: f64,
    pub fd_step: f64,
    pub timeouts: Timeouts,
    pub similarity_frames: usize,
}

impl RunConfig {
    pub fn new(suite: Suite, data_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        let defaults = TrainConfig::default();
        Self {
            suite,
            data_dir: data_dir.into(),
            model: ModelSpec::Builtin,
            out_dir: out_dir.into(),
            soap: SoapParams::with_species([]),
            samples: None,
            workers: 1,
            seed: 0,
            molecule: None,
            ridge_lambda: defaults.ridge_lambda,
            fd_step: defaults.fd_step,
            timeouts: Timeouts::default(),
            similarity_frames: DEFAULT_MAX_PAIRS_PER_SIDE,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            ridge_lambda: self.ridge_lambda,
            soap: self.soap.clone(),
            fd_step: self.fd_step,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Parameters echoed into `run.json` and the report header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub trajbench_version: String,
    pub suite: Suite,
    pub model: ModelSpec,
    pub model_id: String,
    pub molecules: Vec<String>,
    pub sample_counts: Vec<usize>,
    pub test_fraction: f64,
    pub train_limit: f64,
    pub sampling_rule: String,
    pub soap: SoapParams<f64>,
    pub soap_hash: String,
    pub ridge_lambda: f64,
    pub fd_step: f64,
    pub energy_weight: f64,
    pub force_weight: f64,
    pub seed: u64,
    pub workers: usize,
    pub handshake_timeout_s: f64,
    pub train_timeout_s: f64,
    pub predict_timeout_s: f64,
    pub similarity_frames: usize,
    pub fixtures: Vec<FixtureSummary>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub id: String,
    pub hash: String,
    pub train_frames: usize,
    pub test_frames: usize,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<MetricRecord>,
    pub info: RunInfo,
    pub failed_fixtures: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.failed_fixtures, self.info.fixtures.len())
    }
}

pub fn exit_code(failed: usize, total: usize) -> i32 {
    match failed {
        0 => EXIT_OK,
        n if n < total => EXIT_PARTIAL,
        _ => EXIT_ERROR,
    }
}

enum TrainSet<'a> {
    Borrowed(Vec<&'a Frame>),
    Owned(Vec<Frame>),
}

impl TrainSet<'_> {
    fn frames(&self) -> Vec<&Frame> {
        match self {
            TrainSet::Borrowed(v) => v.clone(),
            TrainSet::Owned(v) => v.iter().collect(),
        }
    }
}

struct TestSet<'a> {
    molecule: String,
    frames: Vec<&'a Frame>,
    /// Added to predicted energies; undoes reference-energy centering.
    energy_shift: f64,
}

struct Job<'a> {
    fixture: FixtureFile,
    train: TrainSet<'a>,
    tests: Vec<TestSet<'a>>,
    /// Train a model and emit error metrics.
    evaluate: bool,
    /// Emit the train/test SOAP similarity record.
    similarity: bool,
}

/// Runs one suite and writes every output file.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let manifest_path = config.data_dir.join("manifest.json");
    let manifest = DatasetManifest::load(&manifest_path)
        .with_context(|| format!("loading dataset store {}", config.data_dir.display()))?;
    if manifest.molecules.is_empty() {
        bail!("dataset store {} lists no molecules", config.data_dir.display());
    }
    let molecules = match config.suite {
        Suite::CrossMolecule => manifest.ids(),
        _ => vec![match &config.molecule {
            Some(m) => {
                if manifest.entry(m).is_none() {
                    bail!("molecule `{m}` is not in the dataset store (have {:?})", manifest.ids());
                }
                m.clone()
            }
            None => manifest.molecules[0].id.clone(),
        }],
    };
    let trajectories: BTreeMap<String, Trajectory> =
        molecules.iter().map(|id| manifest.load_trajectory(id).map(|t| (id.clone(), t))).collect::<Result<_, _>>()?;

    let species: BTreeSet<Species> = trajectories.values().flat_map(|t| t.species_inventory()).collect();
    let mut soap = config.soap.clone();
    soap.species = species.into_iter().collect();
    soap.validate().map_err(|e| anyhow!("invalid SOAP parameters: {e}"))?;
    let calculator = SoapCalculator::new(soap.clone())?;
    let soap_hash = soap.hash();
    let train_config = config.train_config();
    train_config.validate()?;
    if config.workers == 0 {
        bail!("--workers must be at least 1");
    }

    let mut skipped = Vec::new();
    let (jobs, sample_counts) = match config.suite {
        Suite::SampleEfficiency => sample_efficiency_jobs(config, &trajectories[&molecules[0]], &mut skipped)?,
        Suite::TimeExtrapolation => time_extrapolation_jobs(config, &trajectories[&molecules[0]], &mut skipped)?,
        Suite::SoapSimilarity => similarity_jobs(config, &trajectories[&molecules[0]])?,
        Suite::CrossMolecule => cross_molecule_jobs(config, &trajectories, &mut skipped)?,
    };
    if jobs.is_empty() {
        bail!("suite {} produced no fixtures for this dataset (skipped: {skipped:?})", config.suite.as_str());
    }
    info!("{} fixtures for suite {}", jobs.len(), config.suite.as_str());

    let fixture_dir = config.out_dir.join("fixtures");
    fs::create_dir_all(&fixture_dir).with_context(|| format!("creating {}", fixture_dir.display()))?;
    for job in &jobs {
        let path = fixture_dir.join(format!("{}.json", job.fixture.id));
        fs::write(&path, job.fixture.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let model_id = config.model.model_id();
    let outcomes: Vec<(Vec<MetricRecord>, bool)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let hash = job.fixture.hash();
                let result = execute(job, config, &train_config, &calculator, &model_id);
                let ok = result.is_ok();
                let records = match result {
                    Ok(records) => records,
                    Err(e) => {
                        warn!("fixture {} failed: {e:#}", job.fixture.id);
                        let molecule = job.tests.first().map_or("", |t| t.molecule.as_str());
                        vec![MetricRecord::failed(
                            &job.fixture.id,
                            &model_id,
                            molecule,
                            FORCE_MAE_ALL,
                            FORCE_UNIT,
                            &format!("{e:#}"),
                        )]
                    }
                };
                let records = records
                    .into_iter()
                    .map(|mut r| {
                        if let Some(spec) = &job.fixture.window {
                            r = r.with_window(spec);
                        }
                        r.sample_count = Some(job.fixture.train_count());
                        r.with_suite(config.suite.as_str()).with_provenance(&hash, &soap_hash)
                    })
                    .collect();
                (records, ok)
            })
            .collect()
    });

    let fixtures: Vec<FixtureSummary> = jobs
        .iter()
        .zip(&outcomes)
        .map(|(job, (_, ok))| FixtureSummary {
            id: job.fixture.id.clone(),
            hash: job.fixture.hash(),
            train_frames: job.fixture.train_count(),
            test_frames: job.fixture.test.iter().map(|m| m.indices.len()).sum(),
            ok: *ok,
        })
        .collect();
    let failed_fixtures = fixtures.iter().filter(|f| !f.ok).count();
    let mut records: Vec<MetricRecord> = outcomes.into_iter().flat_map(|(r, _)| r).collect();
    sort_records(&mut records);

    let info = RunInfo {
        trajbench_version: env!("CARGO_PKG_VERSION").to_string(),
        suite: config.suite,
        model: config.model.clone(),
        model_id,
        molecules,
        sample_counts,
        test_fraction: DEFAULT_TEST_FRACTION,
        train_limit: trajbench_core::fixtures::TRAIN_LIMIT,
        sampling_rule: "even_stride floor(j*W/k)".to_string(),
        soap,
        soap_hash,
        ridge_lambda: train_config.ridge_lambda,
        fd_step: train_config.fd_step,
        energy_weight: train_config.energy_weight,
        force_weight: train_config.force_weight,
        seed: config.seed,
        workers: config.workers,
        handshake_timeout_s: config.timeouts.handshake.as_secs_f64(),
        train_timeout_s: config.timeouts.train.as_secs_f64(),
        predict_timeout_s: config.timeouts.predict.as_secs_f64(),
        similarity_frames: config.similarity_frames,
        fixtures,
        skipped,
    };
    write_outputs(&config.out_dir, &records, &info)?;
    Ok(RunSummary { records, info, failed_fixtures })
}

fn write_outputs(out: &Path, records: &[MetricRecord], info: &RunInfo) -> Result<()> {
    let write = |name: &str, text: &str| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write("records.csv", &records_csv(records)?)?;
    write("records.jsonl", &records_jsonl(records))?;
    let mut run_json = serde_json::to_string_pretty(info)?;
    run_json.push('\n');
    write("run.json", &run_json)?;
    report::write_report(out, records, Some(info))?;
    Ok(())
}

fn test_set<'a>(traj: &'a Trajectory) -> Result<(Vec<usize>, TestSet<'a>)> {
    let split = temporal_split(traj.len(), DEFAULT_TEST_FRACTION)?;
    let frames = split.test_indices.iter().map(|&i| &traj.frames[i]).collect();
    Ok((split.test_indices, TestSet { molecule: traj.molecule_id.clone(), frames, energy_shift: 0.0 }))
}

fn indices(traj: &Trajectory, idx: Vec<usize>) -> MoleculeIndices {
    MoleculeIndices { molecule: traj.molecule_id.clone(), trajectory_len: traj.len(), indices: idx }
}

fn single_molecule_job<'a>(
    traj: &'a Trajectory,
    id: String,
    kind: FixtureKind,
    spec: WindowSpec,
    train_idx: Vec<usize>,
    evaluate: bool,
    similarity: bool,
) -> Result<Job<'a>> {
    let (test_idx, test) = test_set(traj)?;
    let mut fixture = FixtureFile::new(id, kind, DEFAULT_TEST_FRACTION, Some(spec));
    let train = TrainSet::Borrowed(train_idx.iter().map(|&i| &traj.frames[i]).collect());
    fixture.train.push(indices(traj, train_idx));
    fixture.test.push(indices(traj, test_idx));
    Ok(Job { fixture, train, tests: vec![test], evaluate, similarity })
}

fn sample_efficiency_jobs<'a>(
    config: &RunConfig,
    traj: &'a Trajectory,
    skipped: &mut Vec<String>,
) -> Result<(Vec<Job<'a>>, Vec<usize>)> {
    let counts = config.samples.clone().unwrap_or_else(|| SAMPLE_EFFICIENCY_COUNTS.to_vec());
    let series = sample_efficiency_series(traj.len(), &counts);
    let kept: BTreeSet<usize> = series.iter().map(|s| s.spec.sample_count).collect();
    skipped.extend(counts.iter().filter(|c| !kept.contains(c)).map(|c| sample_efficiency_id(*c)));
    let jobs = series
        .into_iter()
        .map(|s| {
            let id = sample_efficiency_id(s.spec.sample_count);
            single_molecule_job(traj, id, FixtureKind::SampleEfficiency, s.spec, s.indices, true, false)
        })
        .collect::<Result<_>>()?;
    Ok((jobs, counts))
}

fn time_extrapolation_jobs<'a>(
    config: &RunConfig,
    traj: &'a Trajectory,
    skipped: &mut Vec<String>,
) -> Result<(Vec<Job<'a>>, Vec<usize>)> {
    let counts = config.samples.clone().unwrap_or_else(|| GRID_COUNTS.to_vec());
    let mut jobs = Vec::new();
    for spec in grid_scan_specs(&counts) {
        let window = window_indices(traj.len(), &spec)?;
        if spec.sample_count > window.len() {
            warn!(
                "skipping {}: {} samples do not fit the {}-frame window",
                spec.fixture_id(),
                spec.sample_count,
                window.len()
            );
            skipped.push(spec.fixture_id());
            continue;
        }
        let subset = sample_window(traj.len(), &spec)?;
        jobs.push(single_molecule_job(
            traj,
            spec.fixture_id(),
            FixtureKind::TimeExtrapolation,
            spec,
            subset.indices,
            true,
            true,
        )?);
    }
    Ok((jobs, counts))
}

/// `sim_s{start}_w{size}`.
pub fn similarity_id(spec: &WindowSpec) -> String {
    format!("sim_{}", spec.geometry_id())
}

fn similarity_jobs<'a>(config: &RunConfig, traj: &'a Trajectory) -> Result<(Vec<Job<'a>>, Vec<usize>)> {
    let mut jobs = Vec::new();
    for geometry in grid_scan_specs(&[1]) {
        let window = window_indices(traj.len(), &geometry)?;
        let count = config.similarity_frames.min(window.len()).max(1);
        let spec = WindowSpec::new(geometry.start_frac, geometry.size_frac, count)?;
        let subset = sample_window(traj.len(), &spec)?;
        let (test_idx, mut test) = test_set(traj)?;
        let keep = deterministic_sample(test_idx.len(), config.similarity_frames.min(test_idx.len()))?;
        let test_idx: Vec<usize> = keep.iter().map(|&k| test_idx[k]).collect();
        test.frames = test_idx.iter().map(|&i| &traj.frames[i]).collect();
        let mut fixture =
            FixtureFile::new(similarity_id(&spec), FixtureKind::WindowSimilarity, DEFAULT_TEST_FRACTION, Some(spec));
        let train = TrainSet::Borrowed(subset.indices.iter().map(|&i| &traj.frames[i]).collect());
        fixture.train.push(indices(traj, subset.indices));
        fixture.test.push(indices(traj, test_idx));
        jobs.push(Job { fixture, train, tests: vec![test], evaluate: false, similarity: true });
    }
    Ok((jobs, vec![config.similarity_frames]))
}

fn cross_molecule_jobs<'a>(
    config: &RunConfig,
    trajectories: &'a BTreeMap<String, Trajectory>,
    skipped: &mut Vec<String>,
) -> Result<(Vec<Job<'a>>, Vec<usize>)> {
    let inventories = trajectories.iter().map(|(id, t)| (id.clone(), t.species_inventory())).collect();
    let (plans, missing) = available_generalization_plans(&inventories);
    skipped.extend(missing.iter().map(|b| generalization_id(b)));
    let requested = config.samples.as_ref().and_then(|s| s.first().copied()).unwrap_or(GENERALIZATION_SAMPLES);
    let mut jobs = Vec::new();
    for plan in plans {
        let id = generalization_id(&plan.train_build);
        if plan.test_molecules.is_empty() {
            warn!("skipping {id}: no molecule left to test");
            skipped.push(id);
            continue;
        }
        let mut members = Vec::new();
        for m in plan.members() {
            let traj = &trajectories[&m];
            let window = window_indices(traj.len(), &WindowSpec::full_train(1))?;
            let k = requested.min(window.len());
            let idx: Vec<usize> =
                deterministic_sample(window.len(), k)?.into_iter().map(|i| i + window.start).collect();
            members.push((traj, idx));
        }
        let mut combined = CombinedDataset::combine(&members);
        combined.center()?;
        let mut fixture = FixtureFile::new(id, FixtureKind::CrossMolecule, DEFAULT_TEST_FRACTION, None);
        fixture.train = members.iter().map(|(t, idx)| indices(t, idx.clone())).collect();
        let mut tests = Vec::new();
        for m in &plan.test_molecules {
            let traj = &trajectories[m];
            let (test_idx, mut test) = test_set(traj)?;
            test.energy_shift = combined.energy_shift(&traj.frames[0].composition());
            fixture.test.push(indices(traj, test_idx));
            tests.push(test);
        }
        let train = TrainSet::Owned(combined.frames.into_iter().map(|t| t.frame).collect());
        jobs.push(Job { fixture, train, tests, evaluate: true, similarity: false });
    }
    Ok((jobs, vec![requested]))
}

enum Trained {
    Builtin(Box<RidgeSoapModel>),
    External(ModelHandle),
}

impl Trained {
    fn fit(spec: &ModelSpec, frames: &[&Frame], config: &TrainConfig, timeouts: Timeouts) -> Result<Self> {
        match spec {
            ModelSpec::Builtin => Ok(Trained::Builtin(Box::new(RidgeSoapModel::fit(frames, config)?))),
            ModelSpec::External(cmd) => {
                let mut handle = ModelHandle::launch(cmd, timeouts)?;
                handle.handshake()?;
                let wire = WireTrainConfig {
                    energy_weight: config.energy_weight,
                    force_weight: config.force_weight,
                    seed: config.seed,
                    ridge_lambda: config.ridge_lambda,
                };
                handle.train(frames, &wire)?;
                Ok(Trained::External(handle))
            }
        }
    }

    fn predict(&mut self, frames: &[&Frame]) -> Result<Vec<PredictedFrame>> {
        match self {
            Trained::Builtin(model) => {
                Ok(model.predict_many(frames)?.into_iter().map(|p| (p.energy, p.forces)).collect())
            }
            Trained::External(handle) => {
                let mut out = Vec::with_capacity(frames.len());
                for chunk in frames.chunks(PREDICT_CHUNK) {
                    out.extend(handle.predict(chunk)?);
                }
                Ok(out)
            }
        }
    }

    fn close(self) {
        if let Trained::External(mut handle) = self {
            handle.shutdown();
        }
    }
}

fn execute(
    job: &Job<'_>,
    config: &RunConfig,
    train_config: &TrainConfig,
    calculator: &SoapCalculator<f64>,
    model_id: &str,
) -> Result<Vec<MetricRecord>> {
    let train = job.train.frames();
    let mut records = Vec::new();
    if job.similarity {
        let test = &job.tests[0];
        let sim = window_similarity(calculator, &train, &test.frames, config.similarity_frames)?;
        let mut r = MetricRecord::new(&job.fixture.id, model_id, &test.molecule, SOAP_SIMILARITY, SIMILARITY_UNIT);
        r.value = Some(sim.mean);
        r.similarity_min = Some(sim.min);
        r.similarity_max = Some(sim.max);
        r.frame_count = test.frames.len().min(config.similarity_frames);
        r.atom_count = sim.pairs;
        records.push(r);
    }
    if job.evaluate {
        info!("training {} on {} frames", job.fixture.id, train.len());
        let mut model = Trained::fit(&config.model, &train, train_config, config.timeouts)?;
        let result = evaluate_tests(&mut model, job, model_id);
        model.close();
        records.extend(result?);
    }
    Ok(records)
}

fn evaluate_tests(model: &mut Trained, job: &Job<'_>, model_id: &str) -> Result<Vec<MetricRecord>> {
    let mut records = Vec::new();
    for test in &job.tests {
        let predictions = model.predict(&test.frames)?;
        let frames = test
            .frames
            .iter()
            .zip(predictions)
            .map(|(f, (energy, forces))| FramePrediction {
                species: f.species.clone(),
                true_energy: f.energy,
                pred_energy: energy + test.energy_shift,
                true_forces: f.forces.clone(),
                pred_forces: forces,
            })
            .collect();
        let batch = PredictionBatch::new(job.fixture.id.clone(), model_id, test.molecule.clone(), frames)?;
        records.extend(evaluate_batch(&batch)?);
    }
    Ok(records)
}

/// Default worker count: the available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Timeouts with the training limit replaced.
pub fn timeouts_with_train(train_s: f64) -> Timeouts {
    Timeouts { train: Duration::from_secs_f64(train_s), ..Timeouts::default() }
}
