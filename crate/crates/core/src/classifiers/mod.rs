//! Base learners shared by the weak classifiers and the final classifier,
//! plus evaluation metrics.

mod knn;
mod metrics;
mod svm;

use serde::{Deserialize, Serialize};

pub use knn::{knn_train, KnnModel};
pub use metrics::{evaluate, ConfusionMatrix, MetricsSummary, RunMetrics};
pub use svm::{svm_train, BinarySvm, SvmModel, SvmOptions};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `k` samples by `d` features with integer class codes indexing `class_names`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} samples but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Parameter(format!(
                "label {bad} has no class name ({} classes)",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Distinct class codes present, ascending.
    pub fn classes_present(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_classes()];
        for &l in &self.labels {
            seen[l] = true;
        }
        (0..seen.len()).filter(|&c| seen[c]).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Result<LabeledDataset> {
        Ok(Self {
            features: self.features.select_rows(rows)?,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_names: self.class_names.clone(),
        })
    }

    pub fn select_features(&self, cols: &[usize]) -> Result<LabeledDataset> {
        Ok(Self {
            features: self.features.select_columns(cols)?,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        })
    }

    pub fn with_features(&self, features: Matrix) -> Result<LabeledDataset> {
        Self::new(features, self.labels.clone(), self.class_names.clone())
    }
}

/// Per-feature z-scoring with statistics from the training fold.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows() as f64;
        let d = x.cols();
        let mut mean = vec![0.0; d];
        for r in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let denom = (x.rows().max(2) - 1) as f64;
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / denom).sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let data = x.iter_rows().flat_map(|r| self.transform_row(r)).collect();
        Matrix::new(x.rows(), x.cols(), data).expect("shape preserved")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn {
        k: usize,
    },
    Svm {
        c: f64,
        #[serde(default = "default_svm_tol")]
        tol: f64,
        #[serde(default = "default_svm_iter")]
        max_iter: usize,
    },
}

fn default_svm_tol() -> f64 {
    SvmOptions::default().tol
}

fn default_svm_iter() -> usize {
    SvmOptions::default().max_iter
}

impl ClassifierSpec {
    pub fn knn() -> Self {
        ClassifierSpec::Knn { k: 5 }
    }

    pub fn svm() -> Self {
        let o = SvmOptions::default();
        ClassifierSpec::Svm {
            c: o.c,
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn { .. } => "KNN",
            ClassifierSpec::Svm { .. } => "SVM",
        }
    }

    /// Standardizes features on `data` and trains the base model.
    pub fn fit(&self, data: &LabeledDataset) -> Result<TrainedClassifier> {
        let standardizer = Standardizer::fit(data.features());
        let scaled = data.with_features(standardizer.transform(data.features()))?;
        let model = match *self {
            ClassifierSpec::Knn { k } => Model::Knn(knn_train(&scaled, k)?),
            ClassifierSpec::Svm { c, tol, max_iter } => {
                Model::Svm(svm_train(&scaled, &SvmOptions { c, tol, max_iter })?)
            }
        };
        Ok(TrainedClassifier {
            standardizer,
            model,
        })
    }
}

#[derive(Debug, Clone)]
enum Model {
    Knn(KnnModel),
    Svm(SvmModel),
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    standardizer: Standardizer,
    model: Model,
}

impl TrainedClassifier {
    pub fn n_features(&self) -> usize {
        self.standardizer.mean.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "sample has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        let z = self.standardizer.transform_row(x);
        Ok(match &self.model {
            Model::Knn(m) => m.predict(&z),
            Model::Svm(m) => m.predict(&z),
        })
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<usize>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }
}
