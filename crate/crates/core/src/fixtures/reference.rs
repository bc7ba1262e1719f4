//! Per-species reference energies and energy-centered combined datasets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::FixtureError;
use crate::dataset::{Frame, Species, Trajectory};
use crate::linalg::{solve_spd_with_jitter, symmetric_eigen};
use crate::scalar::{pairwise_sum, Scalar};

/// Smallest eigenvalue of the normal matrix, relative to the largest, below
/// which the composition design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;
const JITTER_LADDER: [f64; 2] = [0.0, 1e-10];
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit<T> {
    pub energies: BTreeMap<Species, T>,
    pub residual_rms: T,
    /// Set when the design was rank deficient and the equal per-atom split was used.
    pub fallback: bool,
}

impl<T: Scalar> ReferenceFit<T> {
    pub fn baseline(&self, composition: &BTreeMap<Species, usize>) -> T {
        let mut total = T::zero();
        for (s, &n) in composition {
            total += self.energies.get(s).copied().unwrap_or_else(T::zero) * T::from_usize_lossy(n);
        }
        total
    }
}

/// Least-squares `c` minimizing `sum_m (E_m - sum_s c_s N_{m,s})^2`.
///
/// Each row is a composition and a total energy. Rank-deficient designs (for
/// example a single molecule) fall back to `c_s = mean_m(E_m / N_m)` for every
/// species, flagged in the result.
pub fn fit_reference_energies<T: Scalar>(
    rows: &[(BTreeMap<Species, usize>, T)],
) -> Result<ReferenceFit<T>, FixtureError> {
    if rows.is_empty() {
        return Err(FixtureError::NoFrames);
    }
    let species: Vec<Species> =
        rows.iter().flat_map(|(c, _)| c.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let k = species.len();
    let design: Vec<Vec<T>> = rows
        .iter()
        .map(|(c, _)| species.iter().map(|s| T::from_usize_lossy(c.get(s).copied().unwrap_or(0))).collect())
        .collect();

    let mut normal = vec![T::zero(); k * k];
    let mut rhs = vec![T::zero(); k];
    for (row, (_, energy)) in design.iter().zip(rows) {
        for a in 0..k {
            rhs[a] += row[a] * *energy;
            for b in 0..k {
                normal[a * k + b] += row[a] * row[b];
            }
        }
    }

    let (eigenvalues, _) = symmetric_eigen(&normal, k);
    let largest = eigenvalues.last().copied().unwrap_or_else(T::zero);
    let smallest = eigenvalues.first().copied().unwrap_or_else(T::zero);
    let rank_deficient = !(smallest > T::lit(RANK_TOLERANCE) * largest);

    let (coefficients, fallback) = if rank_deficient {
        let per_atom: Vec<T> =
            rows.iter().map(|(c, e)| *e / T::from_usize_lossy(c.values().sum::<usize>().max(1))).collect();
        let mean = pairwise_sum(&per_atom) / T::from_usize_lossy(per_atom.len());
        (vec![mean; k], true)
    } else {
        let ladder: Vec<T> = JITTER_LADDER.iter().map(|&v| T::lit(v)).collect();
        let mut x = solve_spd_with_jitter(&normal, k, &rhs, &ladder)?.x;
        // Refinement against the design-space residual removes the roundoff
        // of the normal-equation solve, so consistent systems come out exact.
        for _ in 0..REFINEMENT_STEPS {
            let mut gradient = vec![T::zero(); k];
            let mut exact = true;
            for (row, (_, energy)) in design.iter().zip(rows) {
                let mut r = *energy;
                for a in 0..k {
                    r -= row[a] * x[a];
                }
                if r != T::zero() {
                    exact = false;
                }
                for a in 0..k {
                    gradient[a] += row[a] * r;
                }
            }
            if exact {
                break;
            }
            let dx = solve_spd_with_jitter(&normal, k, &gradient, &ladder)?.x;
            for (xa, d) in x.iter_mut().zip(dx) {
                *xa += d;
            }
        }
        (x, false)
    };

    let squared: Vec<T> = design
        .iter()
        .zip(rows)
        .map(|(row, (_, e))| {
            let mut predicted = T::zero();
            for a in 0..k {
                predicted += row[a] * coefficients[a];
            }
            let r = *e - predicted;
            r * r
        })
        .collect();
    let residual_rms = (pairwise_sum(&squared) / T::from_usize_lossy(rows.len())).sqrt();

    Ok(ReferenceFit { energies: species.into_iter().zip(coefficients).collect(), residual_rms, fallback })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedFrame {
    pub molecule: String,
    /// Position of the frame in its source trajectory.
    pub index: usize,
    pub frame: Frame,
}

/// Frames of several molecules merged into one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedDataset {
    pub member_ids: String,
    pub frames: Vec<TaggedFrame>,
    pub reference_energies: BTreeMap<Species, f64>,
    /// Mean residual removed along with the reference energies.
    pub offset: f64,
    pub centered: bool,
    pub fallback: bool,
}

impl CombinedDataset {
    /// Concatenates the given index sets of each member trajectory, in member order.
    pub fn combine(members: &[(&Trajectory, Vec<usize>)]) -> Self {
        let member_ids = members.iter().map(|(t, _)| t.molecule_id.as_str()).collect::<String>();
        let frames = members
            .iter()
            .flat_map(|(t, idx)| {
                idx.iter().map(move |&i| TaggedFrame {
                    molecule: t.molecule_id.clone(),
                    index: i,
                    frame: t.frames[i].clone(),
                })
            })
            .collect();
        Self { member_ids, frames, reference_energies: BTreeMap::new(), offset: 0.0, centered: false, fallback: false }
    }

    /// Fits reference energies and subtracts them (plus the mean residual)
    /// from every frame energy.
    pub fn center(&mut self) -> Result<ReferenceFit<f64>, FixtureError> {
        if self.centered {
            self.uncenter();
        }
        let rows: Vec<_> = self.frames.iter().map(|t| (t.frame.composition(), t.frame.energy)).collect();
        let fit = fit_reference_energies(&rows)?;
        let residuals: Vec<f64> = rows.iter().map(|(c, e)| e - fit.baseline(c)).collect();
        self.offset = pairwise_sum(&residuals) / residuals.len() as f64;
        for (tagged, r) in self.frames.iter_mut().zip(residuals) {
            tagged.frame.energy = r - self.offset;
        }
        self.reference_energies = fit.energies.clone();
        self.fallback = fit.fallback;
        self.centered = true;
        Ok(fit)
    }

    /// Energy to add to a centered prediction for a frame of this composition.
    pub fn energy_shift(&self, composition: &BTreeMap<Species, usize>) -> f64 {
        let mut total = self.offset;
        for (s, &n) in composition {
            total += self.reference_energies.get(s).copied().unwrap_or(0.0) * n as f64;
        }
        total
    }

    pub fn uncenter(&mut self) {
        if !self.centered {
            return;
        }
        for i in 0..self.frames.len() {
            let shift = self.energy_shift(&self.frames[i].frame.composition());
            self.frames[i].frame.energy += shift;
        }
        self.centered = false;
    }

    pub fn species(&self) -> BTreeSet<Species> {
        self.frames.iter().flat_map(|t| t.frame.species.iter().copied()).collect()
    }
}
