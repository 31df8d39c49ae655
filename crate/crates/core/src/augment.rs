//! Weight levels and feature replication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::voting::FeaturePartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightLevels {
    pub levels: Vec<usize>,
    pub num_levels: usize,
    pub bin_edges: Vec<f64>,
}

/// Uniform bins over `[min W, max W]`, left-closed except the top bin which
/// also takes the maximum. Level = bin index + 1. A constant `W` maps every
/// band to level 1.
pub fn discretize(w: &[f64], num_levels: usize) -> Result<WeightLevels> {
    if w.is_empty() {
        return Err(Error::Parameter("no weights to discretize".into()));
    }
    if num_levels == 0 {
        return Err(Error::Parameter("num_levels must be at least 1".into()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("band weights"));
    }
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(WeightLevels {
            levels: vec![1; w.len()],
            num_levels,
            bin_edges: vec![lo, hi],
        });
    }
    let span = hi - lo;
    let n = num_levels as f64;
    let bin_edges = (0..=num_levels)
        .map(|k| if k == num_levels { hi } else { lo + span * k as f64 / n })
        .collect();
    let levels = w
        .iter()
        .map(|&v| {
            let t = (v - lo) / span;
            ((t * n).floor() as usize).min(num_levels - 1) + 1
        })
        .collect();
    Ok(WeightLevels {
        levels,
        num_levels,
        bin_edges,
    })
}

/// Origin of one augmented value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub band: usize,
    pub feature: usize,
    pub copy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFeatureVector {
    pub values: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

/// Column layout of the augmented features: bands in order, each feature
/// repeated `level` times with its copies adjacent.
pub fn augmentation_plan(partition: &FeaturePartition, levels: &WeightLevels) -> Result<Vec<Provenance>> {
    if levels.levels.len() != partition.m {
        return Err(Error::Dimension(format!(
            "{} levels for {} subsets",
            levels.levels.len(),
            partition.m
        )));
    }
    let mut plan = Vec::new();
    for (band, (range, &level)) in partition.subset_ranges.iter().zip(&levels.levels).enumerate() {
        for feature in range.clone() {
            plan.extend((0..level).map(|copy| Provenance { band, feature, copy }));
        }
    }
    Ok(plan)
}

pub fn augment(
    features: &[f64],
    partition: &FeaturePartition,
    levels: &WeightLevels,
) -> Result<AugmentedFeatureVector> {
    if features.len() != partition.n_features() {
        return Err(Error::Dimension(format!(
            "{} features, partition covers {}",
            features.len(),
            partition.n_features()
        )));
    }
    let provenance = augmentation_plan(partition, levels)?;
    Ok(AugmentedFeatureVector {
        values: provenance.iter().map(|p| features[p.feature]).collect(),
        provenance,
    })
}

/// Applies the augmentation to every row of a sample matrix.
pub fn augment_matrix(x: &Matrix, partition: &FeaturePartition, levels: &WeightLevels) -> Result<Matrix> {
    if x.cols() != partition.n_features() {
        return Err(Error::Dimension(format!(
            "{} columns, partition covers {}",
            x.cols(),
            partition.n_features()
        )));
    }
    let cols: Vec<usize> = augmentation_plan(partition, levels)?
        .iter()
        .map(|p| p.feature)
        .collect();
    x.select_columns(&cols)
}

/// Everything needed to reproduce an augmentation from artifacts alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub num_levels: usize,
    pub bin_edges: Vec<f64>,
    pub levels: Vec<usize>,
    pub band_ranges_hz: Vec<(f64, f64)>,
}

impl AugmentationSpec {
    pub fn new(levels: &WeightLevels, partition: &FeaturePartition) -> Self {
        Self {
            num_levels: levels.num_levels,
            bin_edges: levels.bin_edges.clone(),
            levels: levels.levels.clone(),
            band_ranges_hz: partition.band_labels.clone(),
        }
    }

    pub fn weight_levels(&self) -> WeightLevels {
        WeightLevels {
            levels: self.levels.clone(),
            num_levels: self.num_levels,
            bin_edges: self.bin_edges.clone(),
        }
    }
}
