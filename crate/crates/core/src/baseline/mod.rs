//! Per-species ridge regression on summed atomic SOAP descriptors.
//!
//! The model is extensive, `E = sum_i (c[z_i] + w[z_i] . p_i)`, with `c` the
//! reference energies fitted first and `w` fitted by ridge least squares on
//! the residuals. Forces are central finite differences of the energy.

mod fd;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Frame, Species};
use crate::fixtures::{fit_reference_energies, FixtureError};
use crate::linalg::{solve_spd_with_jitter, LinalgError};
use crate::scalar::{dot, pairwise_sum};
use crate::soap::{SoapCalculator, SoapError, SoapParams};

pub use fd::{central_difference_forces, net_force};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-8;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const FD_STEP_RANGE: (f64, f64) = (1e-5, 1e-2);
/// Diagonal shifts tried in turn, relative to `trace / n` of the system matrix.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training set has {0} frames, at least 2 required")]
    TooFewFrames(usize),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Soap(#[from] SoapError),
    #[error("reference energy fit failed: {0}")]
    Reference(#[from] FixtureError),
    #[error("ridge system is singular: {0}")]
    Linalg(#[from] LinalgError),
    #[error("species {0} was not present in the training data")]
    UnseenSpecies(Species),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub ridge_lambda: f64,
    /// Descriptor settings. The species list is replaced by the species of
    /// the training frames at fit time.
    pub soap: SoapParams<f64>,
    /// Energy loss weight, passed through to external models.
    pub energy_weight: f64,
    /// Force loss weight, passed through to external models.
    pub force_weight: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            soap: SoapParams::with_species([]),
            energy_weight: 1.0,
            force_weight: 1.0,
            fd_step: DEFAULT_FD_STEP,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(BaselineError::Config(format!("ridge_lambda must be >= 0, got {}", self.ridge_lambda)));
        }
        let (lo, hi) = FD_STEP_RANGE;
        if !(lo..=hi).contains(&self.fd_step) {
            return Err(BaselineError::Config(format!("fd_step must be in [{lo}, {hi}], got {}", self.fd_step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// RMS of training energy residuals after the full fit, eV.
    pub residual_rms: f64,
    /// RMS after the reference energies alone, eV.
    pub reference_rms: f64,
    pub sample_count: usize,
    /// Diagonal shift that made the ridge system factorizable.
    pub jitter: f64,
    /// Whether the Gram (sample-space) form was solved.
    pub dual: bool,
    pub reference_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    config: TrainConfig,
    reference_energies: BTreeMap<Species, f64>,
    weights: BTreeMap<Species, Vec<f64>>,
    fit_report: FitReport,
}

/// Energy and forces of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub energy: f64,
    pub forces: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct RidgeSoapModel {
    data: ModelFile,
    calculator: SoapCalculator<f64>,
    /// Weight vectors indexed by descriptor species slot.
    slot_weights: Vec<Vec<f64>>,
    slot_reference: Vec<f64>,
}

impl RidgeSoapModel {
    pub fn fit(frames: &[&Frame], config: &TrainConfig) -> Result<Self, BaselineError> {
        config.validate()?;
        if frames.len() < 2 {
            return Err(BaselineError::TooFewFrames(frames.len()));
        }
        let species: BTreeSet<Species> = frames.iter().flat_map(|f| f.species.iter().copied()).collect();
        let mut config = config.clone();
        config.soap.species = species.iter().copied().collect();
        let calculator = SoapCalculator::new(config.soap.clone())?;

        let rows: Vec<_> = frames.iter().map(|f| (f.composition(), f.energy)).collect();
        let reference = fit_reference_energies(&rows)?;
        let targets: Vec<f64> = rows.iter().map(|(c, e)| e - reference.baseline(c)).collect();
        let reference_rms = rms(&targets);

        let features: Vec<Vec<f64>> =
            frames.par_iter().map(|f| summed_descriptors(&calculator, f)).collect::<Result<_, _>>()?;
        let n = features.len();
        let d = features[0].len();
        let dual = n < d;
        let (w, jitter) = if dual {
            let gram = gram_rows(&features);
            let mut k = gram;
            for i in 0..n {
                k[i * n + i] += config.ridge_lambda;
            }
            let sol = solve_spd_with_jitter(&k, n, &targets, &JITTER_LADDER)?;
            let mut w = vec![0.0; d];
            for (alpha, x) in sol.x.iter().zip(&features) {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += alpha * xj;
                }
            }
            (w, sol.jitter)
        } else {
            let columns: Vec<Vec<f64>> = (0..d).map(|j| features.iter().map(|x| x[j]).collect()).collect();
            let mut a = gram_rows(&columns);
            for j in 0..d {
                a[j * d + j] += config.ridge_lambda;
            }
            let b: Vec<f64> = columns.iter().map(|c| dot(c, &targets)).collect();
            let sol = solve_spd_with_jitter(&a, d, &b, &JITTER_LADDER)?;
            (sol.x, sol.jitter)
        };
        if w.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::Linalg(LinalgError::SingularAfterJitter));
        }

        let residuals: Vec<f64> = features.iter().zip(&targets).map(|(x, t)| t - dot(x, &w)).collect();
        let dim = calculator.descriptor_len();
        let weights =
            species.iter().enumerate().map(|(slot, &s)| (s, w[slot * dim..(slot + 1) * dim].to_vec())).collect();
        let data = ModelFile {
            config,
            reference_energies: reference.energies,
            weights,
            fit_report: FitReport {
                residual_rms: rms(&residuals),
                reference_rms,
                sample_count: n,
                jitter,
                dual,
                reference_fallback: reference.fallback,
            },
        };
        Self::from_data(data)
    }

    fn from_data(data: ModelFile) -> Result<Self, BaselineError> {
        let calculator = SoapCalculator::new(data.config.soap.clone())?;
        let dim = calculator.descriptor_len();
        let mut slot_weights = Vec::new();
        let mut slot_reference = Vec::new();
        for s in &data.config.soap.species {
            let w = data.weights.get(s).cloned().unwrap_or_default();
            if w.len() != dim {
                return Err(BaselineError::Config(format!(
                    "weight vector for {s} has {} entries, descriptor has {dim}",
                    w.len()
                )));
            }
            slot_weights.push(w);
            slot_reference.push(data.reference_energies.get(s).copied().unwrap_or(0.0));
        }
        Ok(Self { data, calculator, slot_weights, slot_reference })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.data.config
    }

    pub fn fit_report(&self) -> &FitReport {
        &self.data.fit_report
    }

    pub fn reference_energies(&self) -> &BTreeMap<Species, f64> {
        &self.data.reference_energies
    }

    pub fn weights(&self) -> &BTreeMap<Species, Vec<f64>> {
        &self.data.weights
    }

    pub fn species(&self) -> &[Species] {
        &self.data.config.soap.species
    }

    /// Serializes with shortest round-trip floats, so reloading is bit-exact.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.data).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, BaselineError> {
        Self::from_data(serde_json::from_str(text)?)
    }

    fn slots(&self, species: &[Species]) -> Result<Vec<usize>, BaselineError> {
        species
            .iter()
            .map(|&s| self.calculator.params().species_slot(s).ok_or(BaselineError::UnseenSpecies(s)))
            .collect()
    }

    fn atom_energy(&self, slot: usize, coeffs: &[f64]) -> f64 {
        dot(&self.slot_weights[slot], &self.calculator.power_spectrum(coeffs))
    }

    pub fn predict_energy(&self, frame: &Frame) -> Result<f64, BaselineError> {
        self.energy_at(&frame.positions, &frame.species)
    }

    /// Energy of an arbitrary configuration.
    pub fn energy_at(&self, positions: &[[f64; 3]], species: &[Species]) -> Result<f64, BaselineError> {
        let slots = self.slots(species)?;
        let mut terms = Vec::with_capacity(positions.len());
        for (i, &slot) in slots.iter().enumerate() {
            let coeffs = self.calculator.expansion_coefficients(positions, species, i)?;
            terms.push(self.slot_reference[slot] + self.atom_energy(slot, &coeffs));
        }
        Ok(pairwise_sum(&terms))
    }

    pub fn predict_forces(&self, frame: &Frame) -> Result<Vec<[f64; 3]>, BaselineError> {
        Ok(self.predict(frame)?.forces)
    }

    /// Energy and central-difference forces with step `fd_step`.
    ///
    /// Displacing atom `k` only changes the density of atom `k` itself and of
    /// atoms within the cutoff of its old or new position, so each displaced
    /// energy is the base energy plus a local correction.
    pub fn predict(&self, frame: &Frame) -> Result<Prediction, BaselineError> {
        self.predict_with_step(frame, self.data.config.fd_step)
    }

    pub fn predict_with_step(&self, frame: &Frame, h: f64) -> Result<Prediction, BaselineError> {
        let positions = &frame.positions;
        let species = &frame.species;
        let slots = self.slots(species)?;
        let n = positions.len();
        let base_coeffs: Vec<Vec<f64>> =
            (0..n).map(|i| self.calculator.expansion_coefficients(positions, species, i)).collect::<Result<_, _>>()?;
        let base_atom: Vec<f64> = (0..n).map(|i| self.atom_energy(slots[i], &base_coeffs[i])).collect();
        let mut terms: Vec<f64> = (0..n).map(|i| self.slot_reference[slots[i]] + base_atom[i]).collect();
        let energy = pairwise_sum(&terms);
        terms.clear();

        let r_cut = self.calculator.params().r_cut;
        let displaced_delta = |k: usize, axis: usize, step: f64| -> Result<f64, BaselineError> {
            let mut moved = positions.clone();
            moved[k][axis] += step;
            let own = self.calculator.expansion_coefficients(&moved, species, k)?;
            let mut delta = self.atom_energy(slots[k], &own) - base_atom[k];
            for i in 0..n {
                if i == k {
                    continue;
                }
                let old = sub(positions[k], positions[i]);
                let new = sub(moved[k], positions[i]);
                if crate::scalar::norm(&old) >= r_cut && crate::scalar::norm(&new) >= r_cut {
                    continue;
                }
                let mut c = base_coeffs[i].clone();
                self.calculator.add_neighbor(&mut c, slots[k], old, -1.0);
                self.calculator.add_neighbor(&mut c, slots[k], new, 1.0);
                delta += self.atom_energy(slots[i], &c) - base_atom[i];
            }
            Ok(delta)
        };
        let components: Vec<f64> = (0..3 * n)
            .into_par_iter()
            .map(|q| {
                let (k, axis) = (q / 3, q % 3);
                let plus = displaced_delta(k, axis, h)?;
                let minus = displaced_delta(k, axis, -h)?;
                Ok(-(plus - minus) / (2.0 * h))
            })
            .collect::<Result<_, BaselineError>>()?;
        let forces = components.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Prediction { energy, forces })
    }

    pub fn predict_many(&self, frames: &[&Frame]) -> Result<Vec<Prediction>, BaselineError> {
        frames.iter().map(|f| self.predict(f)).collect()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    (pairwise_sum(&squares) / values.len() as f64).sqrt()
}

/// Atomic descriptors summed per species, concatenated in species-slot order.
fn summed_descriptors(calc: &SoapCalculator<f64>, frame: &Frame) -> Result<Vec<f64>, SoapError> {
    let dim = calc.descriptor_len();
    let slots = calc.slots(&frame.species)?;
    let mut out = vec![0.0; dim * calc.params().species.len()];
    for (i, &slot) in slots.iter().enumerate() {
        let p = calc.power_spectrum(&calc.expansion_coefficients(&frame.positions, &frame.species, i)?);
        for (o, v) in out[slot * dim..(slot + 1) * dim].iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// Row-major `G[a][b] = rows[a] . rows[b]`. Each entry is a sequential dot
/// product, so the result does not depend on the thread count.
fn gram_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let upper: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|a| (a..n).map(|b| dot(&rows[a], &rows[b])).collect()).collect();
    let mut g = vec![0.0; n * n];
    for (a, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let b = a + offset;
            g[a * n + b] = v;
            g[b * n + a] = v;
        }
    }
    g
}
