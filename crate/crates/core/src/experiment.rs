//! Repeated train/test protocol: baseline classification on LES features,
//! band-weight fitting, augmentation and reclassification, with tabular
//! outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_matrix, discretize, AugmentationSpec};
use crate::classifiers::{
    evaluate, ClassifierSpec, ConfusionMatrix, LabeledDataset, MetricsSummary, RunMetrics,
};
use crate::error::{Error, Result, StageExt};
use crate::formats::{read_features_csv, read_recording, Manifest, ManifestKind};
use crate::les::{extract_features, FeatureVector};
use crate::numerics::Matrix;
use crate::signal::{bandpass_filter, compute_psd, split_blocks, PsdConfig, Recording};
use crate::synth::{generate_recording, SynthSpec};
use crate::voting::{
    fit_band_weights, partition_features, BandWeights, FeaturePartition, LabelEncoding,
    WeightMethod, WeightVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DataSource {
    Synth { spec: SynthSpec },
    /// A recordings or features manifest.
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub freq_start_hz: f64,
    pub freq_end_hz: f64,
    pub out_cols: usize,
    pub block_width: usize,
    pub psd: PsdConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 0.5,
            band_high_hz: 50.0,
            freq_start_hz: 0.5,
            freq_end_hz: 50.0,
            out_cols: 14200,
            block_width: 100,
            psd: PsdConfig::default(),
        }
    }
}

/// Filter, PSD, blocking and LES extraction for one recording.
pub fn recording_features(rec: &Recording, p: &PipelineConfig) -> Result<FeatureVector> {
    let filtered = bandpass_filter(rec, p.band_low_hz, p.band_high_hz).stage("filter")?;
    let psd = compute_psd(&filtered, p.freq_start_hz, p.freq_end_hz, p.out_cols, &p.psd).stage("psd")?;
    let (blocks, _) = split_blocks(&psd, p.block_width).stage("blocking")?;
    extract_features(&blocks).stage("les")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub profile: String,
    pub data: DataSource,
    /// Class names to keep, in code order; empty keeps every class.
    pub classes: Vec<String>,
    pub pipeline: PipelineConfig,
    pub m: usize,
    pub methods: Vec<WeightMethod>,
    pub classifiers: Vec<ClassifierSpec>,
    /// Defaults to signed coding for two classes and ordinal otherwise.
    pub encoding: Option<LabelEncoding>,
    pub inner_folds: usize,
    pub repetitions: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub num_levels: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::tiny()
    }
}

impl ExperimentConfig {
    /// Small synthetic run. Ten-second recordings resolve 0.1 Hz, so the
    /// grid is coarsened to 24 blocks of about 41 native bins each; 142
    /// blocks would leave each covariance only three or four independent
    /// columns.
    pub fn tiny() -> Self {
        Self {
            profile: "tiny".into(),
            data: DataSource::Synth {
                spec: SynthSpec::tiny(),
            },
            classes: Vec::new(),
            pipeline: PipelineConfig {
                out_cols: 2400,
                ..PipelineConfig::default()
            },
            m: 8,
            methods: vec![WeightMethod::Unconstrained, WeightMethod::Constrained],
            classifiers: vec![ClassifierSpec::svm(), ClassifierSpec::knn()],
            encoding: None,
            inner_folds: 5,
            repetitions: 20,
            train_per_class: 30,
            test_per_class: 10,
            num_levels: 5,
            seed: 0,
        }
    }

    pub fn paper() -> Self {
        Self {
            profile: "paper".into(),
            data: DataSource::Synth {
                spec: SynthSpec::paper(),
            },
            pipeline: PipelineConfig::default(),
            ..Self::tiny()
        }
    }

    pub fn from_profile(name: &str) -> Result<Self> {
        match name {
            "tiny" => Ok(Self::tiny()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::Parameter(format!("unknown profile {other:?}"))),
        }
    }

    /// Sets the master seed, including the generator seed of synthetic data.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let DataSource::Synth { spec } = &mut self.data {
            spec.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.classifiers.is_empty() {
            return bad("no classifiers configured".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return bad("train and test counts per class must be positive".into());
        }
        if self.num_levels == 0 {
            return bad("num_levels must be at least 1".into());
        }
        if self.inner_folds < 2 {
            return bad("inner_folds must be at least 2".into());
        }
        if let DataSource::Synth { spec } = &self.data {
            spec.validate()?;
        }
        Ok(())
    }
}

/// LES features of a whole dataset, one row per recording.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub freq_ranges: Vec<(f64, f64)>,
    pub flagged_rows: usize,
}

impl FeatureTable {
    pub fn from_vectors(vectors: &[FeatureVector], labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InsufficientData("no recordings".into()))?;
        let n = first.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::Dimension(format!("feature vectors of length {n} and {}", v.len())));
        }
        let data = vectors.iter().flat_map(|v| v.values()).collect();
        Ok(Self {
            features: Matrix::new(vectors.len(), n, data)?,
            labels,
            class_names,
            freq_ranges: first.freq_ranges(),
            flagged_rows: vectors.iter().map(|v| v.flagged_rows()).sum(),
        })
    }

    pub fn dataset(&self) -> Result<LabeledDataset> {
        LabeledDataset::new(self.features.clone(), self.labels.clone(), self.class_names.clone())
    }

    /// Keeps the named classes, recoded in the given order.
    pub fn restrict(self, classes: &[String]) -> Result<Self> {
        if classes.is_empty() {
            return Ok(self);
        }
        let codes = classes
            .iter()
            .map(|name| {
                self.class_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::Parameter(format!("unknown class {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<usize> = (0..self.labels.len())
            .filter(|&i| codes.contains(&self.labels[i]))
            .collect();
        let labels = rows
            .iter()
            .map(|&i| codes.iter().position(|&c| c == self.labels[i]).unwrap())
            .collect();
        Ok(Self {
            features: self.features.select_rows(&rows)?,
            labels,
            class_names: classes.to_vec(),
            freq_ranges: self.freq_ranges,
            flagged_rows: self.flagged_rows,
        })
    }
}

/// Loads or generates the configured data and extracts features, one
/// recording at a time so that only features stay in memory.
pub fn load_features(config: &ExperimentConfig) -> Result<FeatureTable> {
    let table = match &config.data {
        DataSource::Synth { spec } => {
            spec.validate().stage("synth")?;
            let vectors = (0..spec.n_recordings())
                .into_par_iter()
                .map(|i| {
                    let rec = generate_recording(spec, i).stage("synth")?;
                    recording_features(&rec, &config.pipeline)
                })
                .collect::<Result<Vec<_>>>()?;
            let labels = (0..spec.n_recordings()).map(|i| spec.class_of(i)).collect();
            FeatureTable::from_vectors(&vectors, labels, spec.class_names.clone())?
        }
        DataSource::Manifest { path } => load_manifest_features(path, &config.pipeline)?,
    };
    table.restrict(&config.classes)
}

pub fn load_manifest_features(path: &Path, pipeline: &PipelineConfig) -> Result<FeatureTable> {
    let manifest = Manifest::load(path).stage("load")?;
    let vectors = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let file = manifest.resolve(path, entry);
            match manifest.kind {
                ManifestKind::Recordings => {
                    let rec = read_recording(&file).stage("load")?;
                    recording_features(&rec, pipeline)
                }
                ManifestKind::Features => {
                    read_features_csv(fs::File::open(&file)?).stage("load")
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureTable::from_vectors(&vectors, manifest.labels(), manifest.class_names.clone())
}

/// Seed of repetition `rep`, drawn from its own stream of the master seed.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep as u64 + 1);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random per-class selection of `train_per_class` training and
/// `test_per_class` test samples; both index lists ascend.
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < train_per_class + test_per_class {
            return Err(Error::InsufficientData(format!(
                "class {class} has {} samples, need {} + {}",
                idx.len(),
                train_per_class,
                test_per_class
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..train_per_class]);
        test.extend_from_slice(&idx[train_per_class..train_per_class + test_per_class]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub const ORIGINAL: &str = "original";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub classifier: String,
    /// `original` or a weight method.
    pub condition: String,
    pub metrics: RunMetrics,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub classifier: String,
    pub weights: WeightVector,
    pub augmentation: AugmentationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub cells: Vec<CellResult>,
    pub weights: Vec<WeightRecord>,
}

/// One cell of the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub classifier: String,
    pub condition: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mse_accuracy: f64,
    pub mean_sensitivity: Option<f64>,
    pub mean_specificity: Option<f64>,
}

/// Confusion counts summed over repetitions, with per-actual-class
/// percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub classifier: String,
    pub condition: String,
    pub counts: ConfusionMatrix,
    pub percentages: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub n_samples: usize,
    pub n_features: usize,
    pub partition_sizes: Vec<usize>,
    pub band_ranges_hz: Vec<(f64, f64)>,
    pub flagged_rows: usize,
    pub repetitions: Vec<RepetitionResult>,
    pub table: Vec<TableCell>,
    pub confusion: Vec<ConfusionSummary>,
}

impl ExperimentReport {
    pub fn conditions(&self) -> Vec<String> {
        let mut c = vec![ORIGINAL.to_string()];
        c.extend(self.config.methods.iter().map(|m| m.to_string()));
        c
    }

    pub fn classifier_names(&self) -> Vec<String> {
        self.config.classifiers.iter().map(|c| c.name().to_string()).collect()
    }

    pub fn cell(&self, classifier: &str, condition: &str) -> Option<&TableCell> {
        self.table
            .iter()
            .find(|c| c.classifier == classifier && c.condition == condition)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let table = load_features(config)?;
    run_on_features(config, &table)
}

/// The protocol on already extracted features.
pub fn run_on_features(config: &ExperimentConfig, table: &FeatureTable) -> Result<ExperimentReport> {
    config.validate()?;
    let data = table.dataset()?;
    let partition = partition_features(data.n_features(), config.m)
        .and_then(|p| p.with_band_labels(&table.freq_ranges))
        .stage("partition")?;
    let encoding = config
        .encoding
        .unwrap_or_else(|| LabelEncoding::default_for(data.n_classes()));
    log::info!(
        "{} samples, {} features, {} classes, {} repetitions",
        data.n_samples(),
        data.n_features(),
        data.n_classes(),
        config.repetitions
    );

    let repetitions = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, &data, &partition, encoding, rep))
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport {
        config: config.clone(),
        seed: config.seed,
        class_names: data.class_names().to_vec(),
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        partition_sizes: partition.sizes(),
        band_ranges_hz: partition.band_labels.clone(),
        flagged_rows: table.flagged_rows,
        repetitions,
        table: Vec::new(),
        confusion: Vec::new(),
    };
    aggregate(&mut report);
    Ok(report)
}

fn run_repetition(
    config: &ExperimentConfig,
    data: &LabeledDataset,
    partition: &FeaturePartition,
    encoding: LabelEncoding,
    rep: usize,
) -> Result<RepetitionResult> {
    let seed = repetition_seed(config.seed, rep);
    let split = stratified_split(
        data.labels(),
        data.n_classes(),
        config.train_per_class,
        config.test_per_class,
        seed,
    )
    .stage("split")?;
    let train = data.subset(&split.train)?;
    let test = data.subset(&split.test)?;
    let mut cells = Vec::new();
    let mut weights = Vec::new();

    for spec in &config.classifiers {
        let name = spec.name().to_string();
        let evaluate_on = |tr: &LabeledDataset, te: &LabeledDataset, condition: String| -> Result<CellResult> {
            let model = spec.fit(tr)?;
            let predictions = model.predict_all(te.features())?;
            let (metrics, confusion) = evaluate(&predictions, te.labels(), te.class_names(), 0)?;
            Ok(CellResult {
                classifier: name.clone(),
                condition,
                metrics,
                confusion,
            })
        };
        cells.push(evaluate_on(&train, &test, ORIGINAL.into()).stage("baseline")?);

        let fitted: BandWeights = fit_band_weights(
            &train,
            partition,
            spec,
            encoding,
            &config.methods,
            config.inner_folds,
            seed.wrapping_add(1),
        )
        .stage("weights")?;
        for fit in &fitted.fits {
            let levels = discretize(&fit.band_w, config.num_levels).stage("augment")?;
            let aug_train = train
                .with_features(augment_matrix(train.features(), partition, &levels)?)
                .stage("augment")?;
            let aug_test = test
                .with_features(augment_matrix(test.features(), partition, &levels)?)
                .stage("augment")?;
            cells.push(evaluate_on(&aug_train, &aug_test, fit.method.to_string()).stage("classify")?);
            weights.push(WeightRecord {
                classifier: name.clone(),
                weights: fit.clone(),
                augmentation: AugmentationSpec::new(&levels, partition),
            });
        }
    }
    log::debug!("repetition {rep} done");
    Ok(RepetitionResult {
        repetition: rep,
        seed,
        train_indices: split.train,
        test_indices: split.test,
        cells,
        weights,
    })
}

/// Accuracy of each configured classifier over repeated splits of fixed
/// features, with no weight fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRun {
    pub classifier: String,
    pub seeds: Vec<u64>,
    pub summary: MetricsSummary,
}

pub fn classify_repeated(config: &ExperimentConfig, table: &FeatureTable) -> Result<Vec<ClassificationRun>> {
    config.validate()?;
    let data = table.dataset()?;
    config
        .classifiers
        .iter()
        .map(|spec| {
            let runs = (0..config.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let seed = repetition_seed(config.seed, rep);
                    let split = stratified_split(
                        data.labels(),
                        data.n_classes(),
                        config.train_per_class,
                        config.test_per_class,
                        seed,
                    )
                    .stage("split")?;
                    let train = data.subset(&split.train)?;
                    let test = data.subset(&split.test)?;
                    let predictions = spec.fit(&train).stage("classify")?.predict_all(test.features())?;
                    Ok((seed, evaluate(&predictions, test.labels(), test.class_names(), 0)?.0))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ClassificationRun {
                classifier: spec.name().to_string(),
                seeds: runs.iter().map(|r| r.0).collect(),
                summary: MetricsSummary::from_runs(runs.into_iter().map(|r| r.1).collect()),
            })
        })
        .collect()
}

pub fn classification_csv(runs: &[ClassificationRun]) -> String {
    let mut s = String::from(
        "repetition,seed,classifier,accuracy,sensitivity,specificity,accuracy_std,accuracy_mse\n",
    );
    for run in runs {
        for (i, (m, seed)) in run.summary.runs.iter().zip(&run.seeds).enumerate() {
            let _ = writeln!(
                s,
                "{i},{seed},{},{},{},{},,",
                run.classifier,
                m.accuracy,
                opt(m.sensitivity),
                opt(m.specificity)
            );
        }
        let t = &run.summary;
        let _ = writeln!(
            s,
            "aggregate,,{},{},{},{},{},{}",
            run.classifier,
            t.mean_accuracy,
            opt(t.mean_sensitivity),
            opt(t.mean_specificity),
            t.std_accuracy,
            t.mse_accuracy
        );
    }
    s
}

fn aggregate(report: &mut ExperimentReport) {
    let n = report.class_names.len();
    for classifier in report.classifier_names() {
        for condition in report.conditions() {
            let cells: Vec<&CellResult> = report
                .repetitions
                .iter()
                .flat_map(|r| &r.cells)
                .filter(|c| c.classifier == classifier && c.condition == condition)
                .collect();
            let summary = MetricsSummary::from_runs(cells.iter().map(|c| c.metrics).collect());
            report.table.push(TableCell {
                classifier: classifier.clone(),
                condition: condition.clone(),
                mean_accuracy: summary.mean_accuracy,
                std_accuracy: summary.std_accuracy,
                mse_accuracy: summary.mse_accuracy,
                mean_sensitivity: summary.mean_sensitivity,
                mean_specificity: summary.mean_specificity,
            });
            let mut counts = vec![vec![0usize; n]; n];
            for c in &cells {
                for (t, row) in c.confusion.counts.iter().enumerate() {
                    for (a, v) in row.iter().enumerate() {
                        counts[t][a] += v;
                    }
                }
            }
            let counts = ConfusionMatrix {
                class_names: report.class_names.clone(),
                counts,
            };
            report.confusion.push(ConfusionSummary {
                classifier: classifier.clone(),
                condition,
                percentages: counts.column_percentages(),
                counts,
            });
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-repetition rows followed by one aggregate row per table cell.
pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut s = String::from(
        "repetition,seed,classifier,condition,accuracy,sensitivity,specificity,accuracy_std,accuracy_mse\n",
    );
    for rep in &report.repetitions {
        for c in &rep.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},,",
                rep.repetition,
                rep.seed,
                c.classifier,
                c.condition,
                c.metrics.accuracy,
                opt(c.metrics.sensitivity),
                opt(c.metrics.specificity)
            );
        }
    }
    for t in &report.table {
        let _ = writeln!(
            s,
            "aggregate,{},{},{},{},{},{},{},{}",
            report.seed,
            t.classifier,
            t.condition,
            t.mean_accuracy,
            opt(t.mean_sensitivity),
            opt(t.mean_specificity),
            t.std_accuracy,
            t.mse_accuracy
        );
    }
    s
}

/// Mean redistributed band weight per method for one classifier (the first
/// configured when `classifier` is `None`).
pub fn emit_weight_profile(report: &ExperimentReport, classifier: Option<&str>) -> String {
    let mut s = String::from("band_lo_hz,band_hi_hz,W_constrained_mean,W_unconstrained_mean\n");
    let names = report.classifier_names();
    let Some(name) = classifier.or(names.first().map(String::as_str)) else {
        return s;
    };
    let mean_for = |method: WeightMethod| -> Option<Vec<f64>> {
        let ws: Vec<&Vec<f64>> = report
            .repetitions
            .iter()
            .flat_map(|r| &r.weights)
            .filter(|w| w.classifier == name && w.weights.method == method)
            .map(|w| &w.weights.band_w)
            .collect();
        let m = ws.first()?.len();
        Some(
            (0..m)
                .map(|i| ws.iter().map(|w| w[i]).sum::<f64>() / ws.len() as f64)
                .collect(),
        )
    };
    let constrained = mean_for(WeightMethod::Constrained);
    let unconstrained = mean_for(WeightMethod::Unconstrained);
    if constrained.is_none() && unconstrained.is_none() {
        return s;
    }
    for (i, (lo, hi)) in report.band_ranges_hz.iter().enumerate() {
        let cell = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
        let _ = writeln!(s, "{lo},{hi},{},{}", cell(&constrained), cell(&unconstrained));
    }
    s
}

/// Summed confusion counts and per-actual-class percentages; rows are test
/// labels, columns actual labels.
pub fn confusion_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("classifier,condition,kind,test_label");
    for name in &report.class_names {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for c in &report.confusion {
        for (t, name) in report.class_names.iter().enumerate() {
            let _ = write!(s, "{},{},count,{name}", c.classifier, c.condition);
            for v in &c.counts.counts[t] {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        for (t, name) in report.class_names.iter().enumerate() {
            let _ = write!(s, "{},{},percent,{name}", c.classifier, c.condition);
            for v in &c.percentages[t] {
                let _ = write!(s, ",{v:.2}");
            }
            s.push('\n');
        }
    }
    s
}

/// Accuracy table: one row per classifier, one column per condition.
pub fn accuracy_table(report: &ExperimentReport) -> String {
    let conditions = report.conditions();
    let mut s = String::from("classifier");
    for c in &conditions {
        let _ = write!(s, "\t{c}");
    }
    s.push('\n');
    for name in report.classifier_names() {
        s.push_str(&name);
        for c in &conditions {
            match report.cell(&name, c) {
                Some(t) => {
                    let _ = write!(s, "\t{:.2} ± {:.2}%", t.mean_accuracy, t.std_accuracy);
                }
                None => s.push_str("\t-"),
            }
        }
        s.push('\n');
    }
    s
}

/// Confusion percentages laid out as test-label rows by actual-label columns.
pub fn confusion_table(summary: &ConfusionSummary) -> String {
    let names = &summary.counts.class_names;
    let mut s = String::from("test\\actual");
    for n in names {
        let _ = write!(s, "\t{n}");
    }
    s.push('\n');
    for (t, n) in names.iter().enumerate() {
        s.push_str(n);
        for v in &summary.percentages[t] {
            let _ = write!(s, "\t{v:.2}%");
        }
        s.push('\n');
    }
    s
}

/// Writes report.json, metrics.csv, weights.csv (first classifier),
/// weights_<classifier>.csv and confusion.csv into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(report))?;
    fs::write(dir.join("weights.csv"), emit_weight_profile(report, None))?;
    for name in report.classifier_names() {
        fs::write(
            dir.join(format!("weights_{}.csv", name.to_lowercase())),
            emit_weight_profile(report, Some(&name)),
        )?;
    }
    fs::write(dir.join("confusion.csv"), confusion_csv(report))?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(fs::File::open(path)?))?)
}
