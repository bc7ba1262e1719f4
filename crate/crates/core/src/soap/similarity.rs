use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{SoapCalculator, SoapError, StructureDescriptor};
use crate::dataset::Frame;
use crate::fixtures::deterministic_sample;
use crate::scalar::{dot, pairwise_sum, Scalar};

/// Frames kept per side when comparing two windows.
pub const DEFAULT_MAX_PAIRS_PER_SIDE: usize = 64;

/// Cosine of the angle between two structure descriptors, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(a: &StructureDescriptor<T>, b: &StructureDescriptor<T>) -> Result<T, SoapError> {
    if a.zero || b.zero {
        return Err(SoapError::ZeroDescriptor);
    }
    if a.vector == b.vector {
        return Ok(T::one());
    }
    Ok(dot(&a.vector, &b.vector).max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSimilarity {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub pairs: usize,
}

fn subsample<'a>(frames: &[&'a Frame], max: usize) -> Result<Vec<&'a Frame>, SoapError> {
    if frames.is_empty() {
        return Err(SoapError::EmptyWindow);
    }
    let k = max.min(frames.len()).max(1);
    let idx = deterministic_sample(frames.len(), k).map_err(|_| SoapError::EmptyWindow)?;
    Ok(idx.into_iter().map(|i| frames[i]).collect())
}

/// Mean (with min and max) of all pairwise cosine similarities between two
/// windows, each subsampled by even stride to at most `max_per_side` frames.
pub fn window_similarity<T: Scalar>(
    calculator: &SoapCalculator<T>,
    train: &[&Frame],
    test: &[&Frame],
    max_per_side: usize,
) -> Result<WindowSimilarity, SoapError> {
    let train = calculator.frame_descriptors(&subsample(train, max_per_side)?)?;
    let test = calculator.frame_descriptors(&subsample(test, max_per_side)?)?;
    descriptor_window_similarity(&train, &test)
}

pub fn descriptor_window_similarity<T: Scalar>(
    train: &[StructureDescriptor<T>],
    test: &[StructureDescriptor<T>],
) -> Result<WindowSimilarity, SoapError> {
    if train.is_empty() || test.is_empty() {
        return Err(SoapError::EmptyWindow);
    }
    let mut values = Vec::with_capacity(train.len() * test.len());
    for a in train {
        for b in test {
            values.push(cosine_similarity(a, b)?.to_f64_lossy());
        }
    }
    let mean = pairwise_sum(&values) / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(WindowSimilarity { mean, min, max, pairs: values.len() })
}

/// One row per structure, with a header naming each component
/// `<species><n>_<species><n>_l<l>`.
pub fn descriptors_csv<T: Scalar>(
    calculator: &SoapCalculator<T>,
    ordinals: &[usize],
    descriptors: &[StructureDescriptor<T>],
) -> String {
    let params = calculator.params();
    let mut out = String::from("frame,norm,zero");
    let channels: Vec<String> =
        params.species.iter().flat_map(|s| (0..params.n_max).map(move |n| format!("{}{}", s.symbol(), n))).collect();
    for a in 0..channels.len() {
        for b in a..channels.len() {
            for l in 0..=params.l_max {
                let _ = write!(out, ",{}_{}_l{}", channels[a], channels[b], l);
            }
        }
    }
    out.push('\n');
    for (ordinal, d) in ordinals.iter().zip(descriptors) {
        let _ = write!(out, "{},{:?},{}", ordinal, d.norm.to_f64_lossy(), d.zero);
        for v in &d.vector {
            let _ = write!(out, ",{:?}", v.to_f64_lossy());
        }
        out.push('\n');
    }
    out
}

/// Pairwise similarity matrix with frame ordinals as row and column labels.
pub fn similarity_matrix_csv<T: Scalar>(
    row_ordinals: &[usize],
    rows: &[StructureDescriptor<T>],
    col_ordinals: &[usize],
    cols: &[StructureDescriptor<T>],
) -> Result<String, SoapError> {
    let mut out = String::from("frame");
    for c in col_ordinals {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (r, a) in row_ordinals.iter().zip(rows) {
        let _ = write!(out, "{r}");
        for b in cols {
            let _ = write!(out, ",{:?}", cosine_similarity(a, b)?.to_f64_lossy());
        }
        out.push('\n');
    }
    Ok(out)
}
