use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use super::FixtureError;
use crate::dataset::Species;

/// Training builds for the cross-molecule benchmark: one to five molecules,
/// three builds each.
pub const TABLE_BUILDS: [&str; 15] =
    ["f", "b", "a", "ab", "bc", "de", "abg", "abd", "cef", "abeg", "bcdf", "abce", "abceg", "abcde", "bcdef"];

/// Molecule labels, names and formulas (H, C, N, O counts).
pub const RMD17_MOLECULES: [(&str, &str, [usize; 4]); 7] = [
    ("a", "aspirin", [8, 9, 0, 4]),
    ("b", "ethanol", [6, 2, 0, 1]),
    ("c", "malonaldehyde", [4, 3, 0, 2]),
    ("d", "naphthalene", [8, 10, 0, 0]),
    ("e", "salicylic acid", [6, 7, 0, 3]),
    ("f", "toluene", [8, 7, 0, 0]),
    ("g", "uracil", [4, 4, 2, 2]),
];

/// Species inventories of the seven reference molecules.
pub fn rmd17_inventories() -> BTreeMap<String, BTreeSet<Species>> {
    let order = [Species::H, Species::C, Species::N, Species::O];
    RMD17_MOLECULES
        .iter()
        .map(|(id, _, counts)| {
            let set = order.iter().zip(counts).filter(|(_, &n)| n > 0).map(|(s, _)| *s).collect();
            (id.to_string(), set)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizationPlan {
    /// Molecule labels concatenated, e.g. `abg`.
    pub train_build: String,
    pub test_molecules: Vec<String>,
    /// Molecules left out of testing because they contain unseen species.
    pub excluded: Vec<String>,
}

impl GeneralizationPlan {
    pub fn members(&self) -> Vec<String> {
        self.train_build.chars().map(String::from).collect()
    }
}

fn plan_for(
    build: &str,
    inventories: &BTreeMap<String, BTreeSet<Species>>,
) -> Result<GeneralizationPlan, FixtureError> {
    let mut seen = BTreeSet::new();
    for id in build.chars().map(String::from) {
        let inv = inventories.get(&id).ok_or_else(|| FixtureError::MissingMolecule(id.clone()))?;
        seen.extend(inv.iter().copied());
    }
    let members: BTreeSet<String> = build.chars().map(String::from).collect();
    let mut test_molecules = Vec::new();
    let mut excluded = Vec::new();
    for (id, inv) in inventories {
        if members.contains(id) {
            continue;
        }
        if inv.is_subset(&seen) {
            test_molecules.push(id.clone());
        } else {
            excluded.push(id.clone());
        }
    }
    Ok(GeneralizationPlan { train_build: build.to_string(), test_molecules, excluded })
}

/// One plan per table build; errors if a build references a molecule that is
/// not in `inventories`.
pub fn build_generalization_plans(
    inventories: &BTreeMap<String, BTreeSet<Species>>,
) -> Result<Vec<GeneralizationPlan>, FixtureError> {
    TABLE_BUILDS.iter().map(|b| plan_for(b, inventories)).collect()
}

/// Plans restricted to builds whose members are all available; the rest are
/// skipped with a warning and returned as the second element.
pub fn available_generalization_plans(
    inventories: &BTreeMap<String, BTreeSet<Species>>,
) -> (Vec<GeneralizationPlan>, Vec<String>) {
    let mut plans = Vec::new();
    let mut skipped = Vec::new();
    for build in TABLE_BUILDS {
        match plan_for(build, inventories) {
            Ok(plan) => plans.push(plan),
            Err(e) => {
                warn!("skipping build `{build}`: {e}");
                skipped.push(build.to_string());
            }
        }
    }
    (plans, skipped)
}
