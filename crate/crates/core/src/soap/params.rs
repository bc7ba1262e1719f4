use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SoapError;
use crate::dataset::Species;
use crate::scalar::Scalar;
use crate::special::MAX_DEGREE;

pub const DEFAULT_R_CUT: f64 = 5.0;
pub const DEFAULT_SIGMA: f64 = 0.5;
pub const DEFAULT_N_MAX: usize = 8;
pub const DEFAULT_L_MAX: usize = 6;
pub const DEFAULT_QUADRATURE_ORDER: usize = 64;
pub const MAX_N_MAX: usize = 12;

/// SOAP hyperparameters. Lengths in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoapParams<T> {
    pub r_cut: T,
    /// Width of the Gaussian placed on each neighbor.
    pub sigma: T,
    pub n_max: usize,
    pub l_max: usize,
    /// Species channels, sorted by atomic number.
    pub species: Vec<Species>,
    pub quadrature_order: usize,
}

impl<T: Scalar> SoapParams<T> {
    /// Default hyperparameters for the given species.
    pub fn with_species(species: impl IntoIterator<Item = Species>) -> Self {
        let mut species: Vec<Species> = species.into_iter().collect();
        species.sort();
        species.dedup();
        Self {
            r_cut: T::lit(DEFAULT_R_CUT),
            sigma: T::lit(DEFAULT_SIGMA),
            n_max: DEFAULT_N_MAX,
            l_max: DEFAULT_L_MAX,
            species,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
        }
    }

    pub fn validate(&self) -> Result<(), SoapError> {
        let bad = |msg: String| Err(SoapError::InvalidParams(msg));
        if !(self.r_cut > T::zero()) || !self.r_cut.is_finite() {
            return bad(format!("r_cut must be positive, got {}", self.r_cut));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(1..=MAX_N_MAX).contains(&self.n_max) {
            return bad(format!("n_max must be in 1..={MAX_N_MAX}, got {}", self.n_max));
        }
        if self.l_max > MAX_DEGREE {
            return bad(format!("l_max must be at most {MAX_DEGREE}, got {}", self.l_max));
        }
        if self.species.is_empty() {
            return bad("species list is empty".into());
        }
        if self.species.windows(2).any(|w| w[0] >= w[1]) {
            return bad("species list must be sorted by atomic number without duplicates".into());
        }
        if self.quadrature_order < 2 * self.n_max {
            return Err(SoapError::QuadratureTooLow { order: self.quadrature_order, n_max: self.n_max });
        }
        Ok(())
    }

    /// Number of (species, radial) channels.
    pub fn channels(&self) -> usize {
        self.species.len() * self.n_max
    }

    pub fn descriptor_len(&self) -> usize {
        let p = self.channels();
        p * (p + 1) / 2 * (self.l_max + 1)
    }

    pub fn species_slot(&self, s: Species) -> Option<usize> {
        self.species.iter().position(|&x| x == s)
    }

    /// SHA-256 of the JSON encoding, used to tie records to descriptor settings.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.cast::<f64>()).expect("params serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn cast<U: Scalar>(&self) -> SoapParams<U> {
        SoapParams {
            r_cut: U::lit(self.r_cut.to_f64_lossy()),
            sigma: U::lit(self.sigma.to_f64_lossy()),
            n_max: self.n_max,
            l_max: self.l_max,
            species: self.species.clone(),
            quadrature_order: self.quadrature_order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let p = SoapParams::<f64>::with_species([Species::O, Species::H]);
        assert_eq!(p.species, vec![Species::H, Species::O]);
        assert!(p.validate().is_ok());
        assert_eq!(p.descriptor_len(), 16 * 17 / 2 * 7);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = SoapParams::<f64>::with_species([Species::H]);
        p.quadrature_order = 15;
        assert_eq!(p.validate().unwrap_err(), SoapError::QuadratureTooLow { order: 15, n_max: 8 });
        let mut p = SoapParams::<f64>::with_species([Species::H]);
        p.l_max = 10;
        assert!(p.validate().is_err());
        let mut p = SoapParams::<f64>::with_species([Species::H]);
        p.species = vec![Species::O, Species::H];
        assert!(p.validate().is_err());
        let mut p = SoapParams::<f64>::with_species([Species::H]);
        p.sigma = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SoapParams::<f64>::with_species([Species::H]);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.n_max = 4;
        assert_ne!(a.hash(), b.hash());
    }
}
