//! Leave-one-subset-out weak classifiers and the vote weights fitted to
//! their predictions.

use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierSpec, LabeledDataset, TrainedClassifier};
use crate::error::{Error, Result};
use crate::numerics::{norm2, Matrix};
use crate::qp::{solve_simplex_qp, solve_unconstrained, uniform_start, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMethod {
    Constrained,
    Unconstrained,
}

impl WeightMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMethod::Constrained => "constrained",
            WeightMethod::Unconstrained => "unconstrained",
        }
    }
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Contiguous split of the feature indices into `m` subsets, larger subsets
/// first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePartition {
    pub m: usize,
    pub subset_ranges: Vec<Range<usize>>,
    /// Hz range spanned by each subset, empty until attached.
    #[serde(default)]
    pub band_labels: Vec<(f64, f64)>,
}

pub fn partition_features(n_features: usize, m: usize) -> Result<FeaturePartition> {
    if m < 2 {
        return Err(Error::Parameter(format!("need at least 2 subsets, got {m}")));
    }
    if m > n_features {
        return Err(Error::Parameter(format!(
            "cannot split {n_features} features into {m} subsets"
        )));
    }
    let base = n_features / m;
    let extra = n_features % m;
    let mut start = 0;
    let subset_ranges = (0..m)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(FeaturePartition {
        m,
        subset_ranges,
        band_labels: Vec::new(),
    })
}

impl FeaturePartition {
    pub fn n_features(&self) -> usize {
        self.subset_ranges.last().map_or(0, |r| r.end)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subset_ranges.iter().map(|r| r.len()).collect()
    }

    /// Labels each subset with the span of its features' frequency ranges.
    pub fn with_band_labels(mut self, freq_ranges: &[(f64, f64)]) -> Result<Self> {
        if freq_ranges.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "{} frequency ranges for {} features",
                freq_ranges.len(),
                self.n_features()
            )));
        }
        self.band_labels = self
            .subset_ranges
            .iter()
            .map(|r| (freq_ranges[r.start].0, freq_ranges[r.end - 1].1))
            .collect();
        Ok(self)
    }

    /// Feature indices outside subset `i`, ascending.
    pub fn complement(&self, i: usize) -> Vec<usize> {
        let r = &self.subset_ranges[i];
        (0..r.start).chain(r.end..self.n_features()).collect()
    }
}

/// Numeric code used for class labels in the least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelEncoding {
    /// Two classes only: code 0 maps to +1, code 1 to −1.
    Signed,
    /// Class code `c` maps to `c`.
    Ordinal,
    /// One indicator fit per class; the weights are averaged.
    OneVsRest,
}

impl LabelEncoding {
    pub fn default_for(n_classes: usize) -> Self {
        if n_classes == 2 {
            LabelEncoding::Signed
        } else {
            LabelEncoding::Ordinal
        }
    }

    fn check(self, n_classes: usize) -> Result<()> {
        if self == LabelEncoding::Signed && n_classes != 2 {
            return Err(Error::Parameter(format!(
                "signed encoding needs exactly 2 classes, got {n_classes}"
            )));
        }
        Ok(())
    }

    /// Scalar code of a class. One-vs-rest has no scalar code and uses the
    /// ordinal one here.
    pub fn code(self, class: usize) -> f64 {
        match self {
            LabelEncoding::Signed => {
                if class == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            LabelEncoding::Ordinal | LabelEncoding::OneVsRest => class as f64,
        }
    }
}

/// Weak-classifier predictions, one row per sample and one column per
/// complement classifier.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    pub predictions: Vec<Vec<usize>>,
    pub entries: Matrix,
    pub encoding: LabelEncoding,
}

impl LabelMatrix {
    pub fn from_predictions(predictions: Vec<Vec<usize>>, encoding: LabelEncoding) -> Result<Self> {
        let k = predictions.len();
        let m = predictions.first().map_or(0, Vec::len);
        if k == 0 || m == 0 || predictions.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("label matrix must be a non-empty rectangle".into()));
        }
        let data = predictions.iter().flatten().map(|&c| encoding.code(c)).collect();
        Ok(Self {
            entries: Matrix::new(k, m, data)?,
            predictions,
            encoding,
        })
    }

    /// Indicator matrix for one class.
    fn indicator(&self, class: usize) -> Matrix {
        let data = self
            .predictions
            .iter()
            .flatten()
            .map(|&c| f64::from(u8::from(c == class)))
            .collect();
        Matrix::new(self.entries.rows(), self.entries.cols(), data).expect("same shape")
    }
}

/// A base classifier that sees every feature except one subset.
#[derive(Debug, Clone)]
pub struct ComplementClassifier {
    pub subset: usize,
    pub columns: Vec<usize>,
    pub n_features: usize,
    model: TrainedClassifier,
}

impl ComplementClassifier {
    /// Predicts from a full-length feature row.
    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::Dimension(format!(
                "sample has {} features, expected {}",
                row.len(),
                self.n_features
            )));
        }
        let sub: Vec<f64> = self.columns.iter().map(|&c| row[c]).collect();
        self.model.predict(&sub)
    }
}

pub fn train_weak_classifiers(
    data: &LabeledDataset,
    partition: &FeaturePartition,
    base: &ClassifierSpec,
) -> Result<Vec<ComplementClassifier>> {
    if data.n_features() != partition.n_features() {
        return Err(Error::Dimension(format!(
            "dataset has {} features, partition covers {}",
            data.n_features(),
            partition.n_features()
        )));
    }
    let present = data.classes_present().len();
    if present < 2 {
        return Err(Error::DegenerateData(format!(
            "weak classifiers need 2 classes, found {present}"
        )));
    }
    (0..partition.m)
        .into_par_iter()
        .map(|i| {
            let columns = partition.complement(i);
            let model = base.fit(&data.select_features(&columns)?)?;
            Ok(ComplementClassifier {
                subset: i,
                columns,
                n_features: partition.n_features(),
                model,
            })
        })
        .collect()
}

pub fn build_label_matrix(
    classifiers: &[ComplementClassifier],
    samples: &Matrix,
    encoding: LabelEncoding,
) -> Result<LabelMatrix> {
    let predictions = predict_rows(classifiers, samples)?;
    LabelMatrix::from_predictions(predictions, encoding)
}

fn predict_rows(classifiers: &[ComplementClassifier], samples: &Matrix) -> Result<Vec<Vec<usize>>> {
    samples
        .iter_rows()
        .map(|row| classifiers.iter().map(|c| c.predict(row)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub method: WeightMethod,
    pub m: usize,
    #[serde(default)]
    pub band_ranges_hz: Vec<(f64, f64)>,
    pub w: Vec<f64>,
    #[serde(rename = "W")]
    pub band_w: Vec<f64>,
    pub residual: f64,
    /// Set when the unconstrained system was singular and the constrained
    /// solver supplied `w` instead.
    #[serde(default)]
    pub fallback: bool,
}

impl WeightVector {
    pub fn with_bands(mut self, partition: &FeaturePartition) -> Self {
        self.band_ranges_hz = partition.band_labels.clone();
        self
    }
}

fn solve_method(l: &Matrix, target: &[f64], method: WeightMethod) -> Result<Vec<f64>> {
    match method {
        WeightMethod::Constrained => {
            let problem = QpProblem::from_least_squares(l, target)?;
            Ok(solve_simplex_qp(&problem, &uniform_start(l.cols()))?.w)
        }
        WeightMethod::Unconstrained => solve_unconstrained(l, target),
    }
}

/// Least-squares vote weights for `L w ≈ l*`.
pub fn fit_weights(l: &LabelMatrix, l_star: &[f64], method: WeightMethod) -> Result<WeightVector> {
    let wrap = |e: Error| Error::Fit {
        method,
        source: Box::new(e),
    };
    if l_star.len() != l.entries.rows() {
        return Err(wrap(Error::Dimension(format!(
            "{} targets for {} label rows",
            l_star.len(),
            l.entries.rows()
        ))));
    }
    let w = solve_method(&l.entries, l_star, method).map_err(wrap)?;
    finish(l, l_star, method, w, false)
}

/// As [`fit_weights`], but a singular unconstrained system falls back to the
/// constrained solver and is flagged.
pub fn fit_weights_with_fallback(
    l: &LabelMatrix,
    l_star: &[f64],
    method: WeightMethod,
) -> Result<WeightVector> {
    match fit_weights(l, l_star, method) {
        Err(Error::Fit { source, .. })
            if method == WeightMethod::Unconstrained && matches!(*source, Error::Singular { .. }) =>
        {
            log::debug!("unconstrained weight fit is singular; using the constrained solver");
            let mut v = fit_weights(l, l_star, WeightMethod::Constrained)?;
            v.method = method;
            v.fallback = true;
            Ok(v)
        }
        other => other,
    }
}

fn finish(
    l: &LabelMatrix,
    l_star: &[f64],
    method: WeightMethod,
    w: Vec<f64>,
    fallback: bool,
) -> Result<WeightVector> {
    let s = vote_scores(l, &w)?;
    let r: Vec<f64> = s.iter().zip(l_star).map(|(a, b)| a - b).collect();
    Ok(WeightVector {
        method,
        m: w.len(),
        band_ranges_hz: Vec::new(),
        band_w: redistribute(&w)?,
        residual: norm2(&r),
        w,
        fallback,
    })
}

/// `W_i = (Σ_{j≠i} w_j)/(m−1)`: each complement weight is shared equally by
/// the subsets its classifier used.
pub fn redistribute(w: &[f64]) -> Result<Vec<f64>> {
    let m = w.len();
    if m < 2 {
        return Err(Error::Parameter(format!("redistribution needs m >= 2, got {m}")));
    }
    let denom = (m - 1) as f64;
    Ok((0..m)
        .map(|i| {
            let mut s = 0.0;
            for (j, v) in w.iter().enumerate() {
                if j != i {
                    s += v;
                }
            }
            s / denom
        })
        .collect())
}

/// `S = L w`.
pub fn vote_scores(l: &LabelMatrix, w: &[f64]) -> Result<Vec<f64>> {
    l.entries.matvec(w)
}

/// Weights fitted on one training set, with the out-of-fold label matrix
/// they came from.
#[derive(Debug, Clone)]
pub struct BandWeights {
    pub labels: LabelMatrix,
    pub targets: Vec<f64>,
    pub fits: Vec<WeightVector>,
}

impl BandWeights {
    pub fn get(&self, method: WeightMethod) -> Option<&WeightVector> {
        self.fits.iter().find(|f| f.method == method)
    }
}

/// Stratified fold assignment: within each class the samples are shuffled
/// and dealt round-robin.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut assignment = vec![0; labels.len()];
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

/// Fits band weights on `train` alone. Each row of the label matrix comes
/// from weak classifiers that did not see that sample: the training set is
/// cut into `folds` stratified folds and each fold is predicted by
/// classifiers trained on the rest.
pub fn fit_band_weights(
    train: &LabeledDataset,
    partition: &FeaturePartition,
    base: &ClassifierSpec,
    encoding: LabelEncoding,
    methods: &[WeightMethod],
    folds: usize,
    seed: u64,
) -> Result<BandWeights> {
    encoding.check(train.n_classes())?;
    if folds < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {folds}")));
    }
    let k = train.n_samples();
    if k < partition.m {
        return Err(Error::InsufficientData(format!(
            "{k} training samples for {} weights",
            partition.m
        )));
    }
    let assignment = stratified_folds(train.labels(), folds, seed);
    let mut predictions = vec![Vec::new(); k];
    for fold in 0..folds {
        let held: Vec<usize> = (0..k).filter(|&i| assignment[i] == fold).collect();
        if held.is_empty() {
            continue;
        }
        let rest: Vec<usize> = (0..k).filter(|&i| assignment[i] != fold).collect();
        let weak = train_weak_classifiers(&train.subset(&rest)?, partition, base)?;
        let rows = predict_rows(&weak, &train.features().select_rows(&held)?)?;
        for (i, row) in held.into_iter().zip(rows) {
            predictions[i] = row;
        }
    }
    let labels = LabelMatrix::from_predictions(predictions, encoding)?;
    let targets: Vec<f64> = train.labels().iter().map(|&c| encoding.code(c)).collect();

    let fits = methods
        .iter()
        .map(|&method| {
            let fit = if encoding == LabelEncoding::OneVsRest {
                one_vs_rest(&labels, train.labels(), train.n_classes(), method)?
            } else {
                fit_weights_with_fallback(&labels, &targets, method)?
            };
            Ok(fit.with_bands(partition))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandWeights {
        labels,
        targets,
        fits,
    })
}

fn one_vs_rest(
    labels: &LabelMatrix,
    truth: &[usize],
    n_classes: usize,
    method: WeightMethod,
) -> Result<WeightVector> {
    let m = labels.entries.cols();
    let mut w = vec![0.0; m];
    let mut residual_sq = 0.0;
    let mut fallback = false;
    for class in 0..n_classes {
        let ind = LabelMatrix {
            entries: labels.indicator(class),
            predictions: labels.predictions.clone(),
            encoding: labels.encoding,
        };
        let target: Vec<f64> = truth.iter().map(|&c| f64::from(u8::from(c == class))).collect();
        let fit = fit_weights_with_fallback(&ind, &target, method)?;
        for (a, b) in w.iter_mut().zip(&fit.w) {
            *a += b / n_classes as f64;
        }
        residual_sq += fit.residual * fit.residual;
        fallback |= fit.fallback;
    }
    Ok(WeightVector {
        method,
        m,
        band_ranges_hz: Vec::new(),
        band_w: redistribute(&w)?,
        w,
        residual: residual_sq.sqrt(),
        fallback,
    })
}
