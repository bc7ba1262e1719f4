//! SOAP power-spectrum descriptors.
//!
//! The neighbor density around each atom is a sum of Gaussians of width
//! `sigma`, damped by the smooth cutoff `f(r) = (cos(pi r / r_cut) + 1) / 2`,
//! with the central atom left out. It is expanded on an orthonormal Gaussian
//! radial basis times real spherical harmonics:
//!
//! ```text
//! c[s,n,l,m] = sum_{j in s} 4 pi f(r_j) Y_lm(r_j^) int_0^rc R_n(r) e^{-a(r - r_j)^2} [e^{-x} i_l(x)] r^2 dr,
//! x = 2 a r r_j,  a = 1 / (2 sigma^2)
//! ```
//!
//! and contracted over `m` into the rotation-invariant power spectrum.

mod params;
mod radial;
mod similarity;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Frame, Species};
use crate::scalar::{norm, Scalar};
use crate::special::{scaled_modified_spherical_bessel, RealSphericalHarmonics};

pub use params::{
    SoapParams, DEFAULT_L_MAX, DEFAULT_N_MAX, DEFAULT_QUADRATURE_ORDER, DEFAULT_R_CUT, DEFAULT_SIGMA, MAX_N_MAX,
};
pub use radial::RadialBasis;
pub use similarity::{
    cosine_similarity, descriptor_window_similarity, descriptors_csv, similarity_matrix_csv, window_similarity,
    WindowSimilarity, DEFAULT_MAX_PAIRS_PER_SIDE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SoapError {
    #[error("invalid SOAP parameters: {0}")]
    InvalidParams(String),
    #[error("quadrature order {order} is below 2 * n_max = {}", 2 * n_max)]
    QuadratureTooLow { order: usize, n_max: usize },
    #[error("species {0} is not in the descriptor species list")]
    UnknownSpecies(Species),
    #[error("descriptor is zero (no atom has neighbors within the cutoff)")]
    ZeroDescriptor,
    #[error("window is empty")]
    EmptyWindow,
    #[error("positions and species lengths differ")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    /// `x_j - x_i`.
    pub displacement: [T; 3],
    pub distance: T,
}

/// All pairs closer than `r_cut`, per atom.
pub fn neighbor_list<T: Scalar>(positions: &[[T; 3]], r_cut: T) -> Vec<Vec<Neighbor<T>>> {
    let n = positions.len();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = [
                positions[j][0] - positions[i][0],
                positions[j][1] - positions[i][1],
                positions[j][2] - positions[i][2],
            ];
            let r = norm(&d);
            if r < r_cut {
                out[i].push(Neighbor { index: j, displacement: d, distance: r });
                out[j].push(Neighbor { index: i, displacement: [-d[0], -d[1], -d[2]], distance: r });
            }
        }
    }
    for list in &mut out {
        list.sort_by_key(|nb| nb.index);
    }
    out
}

/// L2-normalized mean of the atomic power spectra of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureDescriptor<T> {
    pub vector: Vec<T>,
    /// Norm of the mean before normalization.
    pub norm: T,
    /// Set when every atom is isolated; `vector` is then all zeros.
    pub zero: bool,
}

/// Precomputed tables for one parameter set; immutable and shareable.
#[derive(Debug, Clone)]
pub struct SoapCalculator<T> {
    params: SoapParams<T>,
    basis: RadialBasis<T>,
    harmonics: RealSphericalHarmonics<T>,
    alpha: T,
}

impl<T: Scalar> SoapCalculator<T> {
    pub fn new(params: SoapParams<T>) -> Result<Self, SoapError> {
        params.validate()?;
        let basis = RadialBasis::new(params.n_max, params.r_cut, params.quadrature_order);
        let harmonics = RealSphericalHarmonics::new(params.l_max);
        let alpha = T::one() / (T::lit(2.0) * params.sigma * params.sigma);
        Ok(Self { params, basis, harmonics, alpha })
    }

    pub fn params(&self) -> &SoapParams<T> {
        &self.params
    }

    pub fn basis(&self) -> &RadialBasis<T> {
        &self.basis
    }

    fn lm_count(&self) -> usize {
        (self.params.l_max + 1) * (self.params.l_max + 1)
    }

    /// Length of a coefficient buffer, laid out as `[species][n][lm]`.
    pub fn coefficient_len(&self) -> usize {
        self.params.channels() * self.lm_count()
    }

    pub fn descriptor_len(&self) -> usize {
        self.params.descriptor_len()
    }

    /// Offset of `c[slot, n, l=0, m=0]` in a coefficient buffer.
    pub fn coefficient_offset(&self, slot: usize, n: usize) -> usize {
        (slot * self.params.n_max + n) * self.lm_count()
    }

    pub fn cutoff(&self, r: T) -> T {
        if r >= self.params.r_cut {
            return T::zero();
        }
        let pi = T::PI();
        ((pi * r / self.params.r_cut).cos() + T::one()) / T::lit(2.0)
    }

    /// Adds `scale` times the density contribution of one neighbor at
    /// `displacement` (belonging to species channel `slot`) to `coeffs`.
    pub fn add_neighbor(&self, coeffs: &mut [T], slot: usize, displacement: [T; 3], scale: T) {
        let r_j = norm(&displacement);
        let fc = self.cutoff(r_j);
        if fc == T::zero() || r_j == T::zero() {
            return;
        }
        let l_max = self.params.l_max;
        let n_max = self.params.n_max;
        let nodes = self.basis.nodes();

        // radial integrals I[n][l]
        let mut bessel = vec![T::zero(); l_max + 1];
        let mut gaussian_bessel = vec![T::zero(); nodes.len() * (l_max + 1)];
        for (q, &r) in nodes.iter().enumerate() {
            let diff = r - r_j;
            let envelope = (-self.alpha * diff * diff).exp();
            scaled_modified_spherical_bessel(T::lit(2.0) * self.alpha * r * r_j, &mut bessel);
            for l in 0..=l_max {
                gaussian_bessel[l * nodes.len() + q] = envelope * bessel[l];
            }
        }
        let mut ylm = vec![T::zero(); self.harmonics.len()];
        let unit = [displacement[0] / r_j, displacement[1] / r_j, displacement[2] / r_j];
        self.harmonics.compute(unit, &mut ylm);

        let prefactor = scale * T::lit(4.0) * T::PI() * fc;
        for n in 0..n_max {
            let row = self.basis.weighted_row(n);
            let base = self.coefficient_offset(slot, n);
            for l in 0..=l_max {
                let g = &gaussian_bessel[l * nodes.len()..(l + 1) * nodes.len()];
                let mut integral = T::zero();
                for (&w, &v) in row.iter().zip(g) {
                    integral += w * v;
                }
                let radial = prefactor * integral;
                for lm in l * l..(l + 1) * (l + 1) {
                    coeffs[base + lm] += radial * ylm[lm];
                }
            }
        }
    }

    /// Expansion coefficients of the density around atom `center`.
    pub fn expansion_coefficients(
        &self,
        positions: &[[T; 3]],
        species: &[Species],
        center: usize,
    ) -> Result<Vec<T>, SoapError> {
        if positions.len() != species.len() {
            return Err(SoapError::Shape);
        }
        let slots = self.slots(species)?;
        let mut coeffs = vec![T::zero(); self.coefficient_len()];
        let origin = positions[center];
        for (j, p) in positions.iter().enumerate() {
            if j == center {
                continue;
            }
            let d = [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]];
            if norm(&d) < self.params.r_cut {
                self.add_neighbor(&mut coeffs, slots[j], d, T::one());
            }
        }
        Ok(coeffs)
    }

    pub fn slots(&self, species: &[Species]) -> Result<Vec<usize>, SoapError> {
        species.iter().map(|&s| self.params.species_slot(s).ok_or(SoapError::UnknownSpecies(s))).collect()
    }

    /// `p[(a,b),l] = pi sqrt(8/(2l+1)) sum_m c[a,l,m] c[b,l,m]` over channel
    /// pairs `a <= b`, off-diagonal pairs scaled by `sqrt(2)`.
    pub fn power_spectrum(&self, coeffs: &[T]) -> Vec<T> {
        let channels = self.params.channels();
        let l_max = self.params.l_max;
        let lm = self.lm_count();
        let prefactors: Vec<T> =
            (0..=l_max).map(|l| T::PI() * (T::lit(8.0) / T::from_usize_lossy(2 * l + 1)).sqrt()).collect();
        let sqrt2 = T::SQRT_2();
        let mut out = Vec::with_capacity(self.descriptor_len());
        for a in 0..channels {
            let ca = &coeffs[a * lm..(a + 1) * lm];
            for b in a..channels {
                let cb = &coeffs[b * lm..(b + 1) * lm];
                let pair = if a == b { T::one() } else { sqrt2 };
                for (l, &prefactor) in prefactors.iter().enumerate() {
                    let mut s = T::zero();
                    for k in l * l..(l + 1) * (l + 1) {
                        s += ca[k] * cb[k];
                    }
                    out.push(pair * prefactor * s);
                }
            }
        }
        out
    }

    pub fn atomic_descriptors(&self, positions: &[[T; 3]], species: &[Species]) -> Result<Vec<Vec<T>>, SoapError> {
        (0..positions.len())
            .map(|i| Ok(self.power_spectrum(&self.expansion_coefficients(positions, species, i)?)))
            .collect()
    }

    pub fn structure_descriptor(
        &self,
        positions: &[[T; 3]],
        species: &[Species],
    ) -> Result<StructureDescriptor<T>, SoapError> {
        let atomic = self.atomic_descriptors(positions, species)?;
        Ok(self.average(&atomic))
    }

    /// Mean then L2 normalization of atomic descriptors.
    pub fn average(&self, atomic: &[Vec<T>]) -> StructureDescriptor<T> {
        let dim = self.descriptor_len();
        let mut mean = vec![T::zero(); dim];
        for d in atomic {
            for (m, &v) in mean.iter_mut().zip(d) {
                *m += v;
            }
        }
        let count = T::from_usize_lossy(atomic.len().max(1));
        for m in &mut mean {
            *m /= count;
        }
        let magnitude = norm(&mean);
        let tiny = T::lit(1e-300).max(T::min_positive_value());
        if !(magnitude >= tiny) {
            return StructureDescriptor { vector: vec![T::zero(); dim], norm: magnitude, zero: true };
        }
        for m in &mut mean {
            *m /= magnitude;
        }
        StructureDescriptor { vector: mean, norm: magnitude, zero: false }
    }

    pub fn frame_descriptor(&self, frame: &Frame) -> Result<StructureDescriptor<T>, SoapError> {
        self.structure_descriptor(&cast_positions(frame), &frame.species)
    }

    /// Descriptors of many frames, computed in parallel; output order matches input.
    pub fn frame_descriptors(&self, frames: &[&Frame]) -> Result<Vec<StructureDescriptor<T>>, SoapError> {
        frames.par_iter().map(|f| self.frame_descriptor(f)).collect()
    }
}

pub fn cast_positions<T: Scalar>(frame: &Frame) -> Vec<[T; 3]> {
    frame.positions.iter().map(|p| [T::lit(p[0]), T::lit(p[1]), T::lit(p[2])]).collect()
}
