//! Linear eigenvalue statistic of each spectral block: rows are
//! standardized, the sample covariance `M = XXᵀ/n` is formed and the Von
//! Neumann entropy `Σ −λ ln λ` of its spectrum becomes the block's feature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sym_eig, Matrix};
use crate::signal::SpectralBlock;

/// Row-standardized block. Rows with zero variance are left as zeros and
/// flagged in `zero_variance`.
#[derive(Debug, Clone)]
pub struct StandardizedBlock {
    pub data: Matrix,
    pub row_means: Vec<f64>,
    pub row_stds: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl StandardizedBlock {
    pub fn flagged_rows(&self) -> usize {
        self.zero_variance.iter().filter(|&&z| z).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LesFeature {
    pub block_index: usize,
    pub freq_lo: f64,
    pub freq_hi: f64,
    pub value: f64,
    /// Rows of the block that had zero variance.
    #[serde(default)]
    pub flagged_rows: usize,
}

/// One LES value per block, ordered by block index with no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    features: Vec<LesFeature>,
}

impl FeatureVector {
    pub fn new(features: Vec<LesFeature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InsufficientData("feature vector is empty".into()));
        }
        if let Some((i, f)) = features
            .iter()
            .enumerate()
            .find(|(i, f)| f.block_index != *i)
        {
            return Err(Error::Format(format!(
                "feature at position {i} has block index {}",
                f.block_index
            )));
        }
        if features.iter().any(|f| !f.value.is_finite()) {
            return Err(Error::NonFinite("LES feature"));
        }
        Ok(Self { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[LesFeature] {
        &self.features
    }

    pub fn values(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.value).collect()
    }

    pub fn freq_ranges(&self) -> Vec<(f64, f64)> {
        self.features.iter().map(|f| (f.freq_lo, f.freq_hi)).collect()
    }

    pub fn flagged_rows(&self) -> usize {
        self.features.iter().map(|f| f.flagged_rows).sum()
    }
}

/// Centres each row and scales it to unit sample variance (divisor `n − 1`).
pub fn standardize(block: &Matrix) -> Result<StandardizedBlock> {
    let n = block.cols();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 columns, got {n}"
        )));
    }
    let p = block.rows();
    let mut data = Vec::with_capacity(p * n);
    let mut row_means = Vec::with_capacity(p);
    let mut row_stds = Vec::with_capacity(p);
    let mut zero_variance = Vec::with_capacity(p);
    for row in block.iter_rows() {
        let mean = row.iter().sum::<f64>() / n as f64;
        let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = (ss / (n - 1) as f64).sqrt();
        let degenerate = std == 0.0 || std <= 1e-12 * mean.abs();
        if degenerate {
            data.extend(std::iter::repeat_n(0.0, n));
        } else {
            data.extend(row.iter().map(|v| (v - mean) / std));
        }
        row_means.push(mean);
        row_stds.push(std);
        zero_variance.push(degenerate);
    }
    Ok(StandardizedBlock {
        data: Matrix::new(p, n, data)?,
        row_means,
        row_stds,
        zero_variance,
    })
}

/// `M = XXᵀ / n` for a `p × n` block.
pub fn sample_covariance(x: &Matrix) -> Matrix {
    let p = x.rows();
    let n = x.cols() as f64;
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        let ri = x.row(i);
        for j in i..p {
            let v = ri.iter().zip(x.row(j)).map(|(a, b)| a * b).sum::<f64>() / n;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

const PSD_TOL: f64 = 1e-10;

/// Von Neumann entropy `Σ −λ ln λ` over the eigenvalues of `m`, with
/// `0·ln 0 = 0`. Eigenvalues in `[−1e-10·‖M‖, 0)` are clamped to zero.
pub fn les_entropy(m: &Matrix) -> Result<f64> {
    let spectrum = sym_eig(m, false)?;
    entropy_of_spectrum(&spectrum.values, m.frobenius_norm())
}

pub(crate) fn entropy_of_spectrum(eigenvalues: &[f64], norm: f64) -> Result<f64> {
    let floor = -PSD_TOL * norm;
    let mut total = 0.0;
    for &lambda in eigenvalues {
        if lambda < floor {
            return Err(Error::NotPsd { eigenvalue: lambda });
        }
        if lambda > 0.0 {
            total -= lambda * lambda.ln();
        }
    }
    Ok(total)
}

/// Feature of a single block.
pub fn block_feature(block: &SpectralBlock) -> Result<LesFeature> {
    let standardized = standardize(&block.data)?;
    let value = les_entropy(&sample_covariance(&standardized.data))?;
    Ok(LesFeature {
        block_index: block.index,
        freq_lo: block.freq_range.0,
        freq_hi: block.freq_range.1,
        value,
        flagged_rows: standardized.flagged_rows(),
    })
}

/// One LES feature per block, in input order and re-indexed by position.
pub fn extract_features(blocks: &[SpectralBlock]) -> Result<FeatureVector> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InsufficientData("no blocks to featurize".into()))?;
    let channels = first.data.rows();
    let features = blocks
        .iter()
        .enumerate()
        .map(|(pos, block)| {
            if block.data.rows() != channels {
                return Err(Error::Block {
                    index: block.index,
                    source: Box::new(Error::Dimension(format!(
                        "{} channels, expected {channels}",
                        block.data.rows()
                    ))),
                });
            }
            let mut f = block_feature(block).map_err(|e| Error::Block {
                index: block.index,
                source: Box::new(e),
            })?;
            f.block_index = pos;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(features)
}
