use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// eV per kcal/mol: 4184 J / (N_A · e), CODATA 2018 exact constants.
pub const EV_PER_KCAL_MOL: f64 = 4184.0 / (6.022_140_76e23 * 1.602_176_634e-19);
pub const MEV_PER_EV: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Energy,
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    KcalPerMol,
    ElectronVolt,
    MilliElectronVolt,
    KcalPerMolPerAngstrom,
    ElectronVoltPerAngstrom,
    MilliElectronVoltPerAngstrom,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::KcalPerMol | Unit::ElectronVolt | Unit::MilliElectronVolt => Dimension::Energy,
            _ => Dimension::Force,
        }
    }

    /// Multiplier to eV (energy) or eV/Å (force).
    fn to_canonical(self) -> f64 {
        match self {
            Unit::KcalPerMol | Unit::KcalPerMolPerAngstrom => EV_PER_KCAL_MOL,
            Unit::ElectronVolt | Unit::ElectronVoltPerAngstrom => 1.0,
            Unit::MilliElectronVolt | Unit::MilliElectronVoltPerAngstrom => 1.0 / MEV_PER_EV,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Unit::KcalPerMol => "kcal/mol",
            Unit::ElectronVolt => "eV",
            Unit::MilliElectronVolt => "meV",
            Unit::KcalPerMolPerAngstrom => "kcal/mol/Å",
            Unit::ElectronVoltPerAngstrom => "eV/Å",
            Unit::MilliElectronVoltPerAngstrom => "meV/Å",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot convert {from} to {to}: incompatible dimensions")]
pub struct DimensionMismatch {
    pub from: Unit,
    pub to: Unit,
}

pub fn convert_units(value: f64, from: Unit, to: Unit) -> Result<f64, DimensionMismatch> {
    if from.dimension() != to.dimension() {
        return Err(DimensionMismatch { from, to });
    }
    if from == to {
        return Ok(value);
    }
    Ok(value * (from.to_canonical() / to.to_canonical()))
}

/// Unit system a dataset file is declared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    KcalMol,
    #[default]
    Ev,
}

impl UnitSystem {
    pub fn energy(self) -> Unit {
        match self {
            UnitSystem::KcalMol => Unit::KcalPerMol,
            UnitSystem::Ev => Unit::ElectronVolt,
        }
    }

    pub fn force(self) -> Unit {
        match self {
            UnitSystem::KcalMol => Unit::KcalPerMolPerAngstrom,
            UnitSystem::Ev => Unit::ElectronVoltPerAngstrom,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UnitSystem::KcalMol => "kcal_mol",
            UnitSystem::Ev => "ev",
        }
    }
}

impl FromStr for UnitSystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kcal_mol" => Ok(UnitSystem::KcalMol),
            "ev" => Ok(UnitSystem::Ev),
            other => Err(format!("unknown unit system `{other}` (expected kcal_mol or ev)")),
        }
    }
}
