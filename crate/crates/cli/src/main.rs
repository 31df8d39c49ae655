use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bandvote::augment::{augment_matrix, discretize, AugmentationSpec};
use bandvote::classifiers::ClassifierSpec;
use bandvote::experiment::{
    accuracy_table, classification_csv, classify_repeated, confusion_table, load_manifest_features,
    load_report, recording_features, run_experiment, write_outputs, DataSource, ExperimentConfig,
    FeatureTable,
};
use bandvote::formats::{
    read_recording, write_features_csv, write_recording, Manifest, ManifestEntry, ManifestKind,
};
use bandvote::synth::{generate_recording, SynthSpec};
use bandvote::voting::{fit_band_weights, partition_features, LabelEncoding};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bandvote", version, about = "Band-weighted LES feature pipeline")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic recordings and a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Recording file format.
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
    /// Extract LES feature vectors from a recordings manifest.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Fit band weights on every sample of a manifest.
    Weights {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Repeated train/test classification of a manifest, optionally augmented.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Augmentation spec written by `weights`.
        #[arg(long)]
        augmentation: Option<PathBuf>,
    },
    /// Run the full protocol and write report.json and CSV tables.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Print tables from a report and rewrite its CSV outputs.
    Report {
        #[command(flatten)]
        common: Common,
        /// report.json written by `experiment`.
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config: an experiment config, or a synth spec for `synth`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Profile::Tiny)]
    profile: Profile,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Tiny,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Csv,
}

impl Common {
    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => serde_json::from_str(&read(path)?)
                .with_context(|| format!("parsing config {}", path.display()))?,
            None => match self.profile {
                Profile::Tiny => ExperimentConfig::tiny(),
                Profile::Paper => ExperimentConfig::paper(),
            },
        };
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        Ok(config)
    }

    fn synth_spec(&self) -> Result<SynthSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = read(path)?;
                // Accept either a bare synth spec or an experiment config.
                match serde_json::from_str::<SynthSpec>(&text) {
                    Ok(spec) => spec,
                    Err(_) => match self.experiment_config()?.data {
                        DataSource::Synth { spec } => spec,
                        DataSource::Manifest { .. } => bail!("config has no synth spec"),
                    },
                }
            }
            None => match self.experiment_config()?.data {
                DataSource::Synth { spec } => spec,
                DataSource::Manifest { .. } => unreachable!("profiles are synthetic"),
            },
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { common, format } => synth(&common, format),
        Command::Extract { common, manifest } => extract(&common, &manifest),
        Command::Weights { common, manifest } => weights(&common, &manifest),
        Command::Classify {
            common,
            manifest,
            augmentation,
        } => classify(&common, &manifest, augmentation.as_deref()),
        Command::Experiment { common } => {
            let config = common.experiment_config()?;
            let report = run_experiment(&config)?;
            write_outputs(&report, &common.out)?;
            print!("{}", accuracy_table(&report));
            Ok(())
        }
        Command::Report { common, report } => {
            let report = load_report(&report)?;
            write_outputs(&report, &common.out)?;
            print!("{}", accuracy_table(&report));
            for c in &report.confusion {
                println!("\n{} / {}", c.classifier, c.condition);
                print!("{}", confusion_table(c));
            }
            Ok(())
        }
    }
}

fn synth(common: &Common, format: Format) -> Result<()> {
    let spec = common.synth_spec()?;
    spec.validate()?;
    fs::create_dir_all(&common.out)?;
    let ext = match format {
        Format::Binary => "eegr",
        Format::Csv => "csv",
    };
    let mut entries = Vec::new();
    for i in 0..spec.n_recordings() {
        let rec = generate_recording(&spec, i)?;
        let name = format!("rec_{i:04}.{ext}");
        write_recording(&rec, &common.out.join(&name))?;
        entries.push(ManifestEntry {
            path: name.into(),
            label: spec.class_names[spec.class_of(i)].clone(),
        });
        log::info!("wrote recording {}/{}", i + 1, spec.n_recordings());
    }
    write_json(&common.out.join("spec.json"), &spec)?;
    Manifest {
        kind: ManifestKind::Recordings,
        class_names: spec.class_names.clone(),
        entries,
    }
    .save(&common.out.join("manifest.json"))?;
    println!("{} recordings in {}", spec.n_recordings(), common.out.display());
    Ok(())
}

fn extract(common: &Common, manifest_path: &Path) -> Result<()> {
    let config = common.experiment_config()?;
    let manifest = Manifest::load(manifest_path)?;
    if manifest.kind != ManifestKind::Recordings {
        bail!("extract needs a recordings manifest");
    }
    fs::create_dir_all(&common.out)?;
    let mut entries = Vec::new();
    for entry in &manifest.entries {
        let path = manifest.resolve(manifest_path, entry);
        let rec = read_recording(&path).with_context(|| format!("reading {}", path.display()))?;
        let features = recording_features(&rec, &config.pipeline)
            .with_context(|| format!("extracting {}", path.display()))?;
        let stem = entry.path.file_stem().unwrap_or_default().to_string_lossy();
        let name = format!("{stem}.features.csv");
        write_features_csv(&features, fs::File::create(common.out.join(&name))?)?;
        entries.push(ManifestEntry {
            path: name.into(),
            label: entry.label.clone(),
        });
    }
    Manifest {
        kind: ManifestKind::Features,
        class_names: manifest.class_names.clone(),
        entries,
    }
    .save(&common.out.join("manifest.json"))?;
    println!("{} feature vectors in {}", manifest.entries.len(), common.out.display());
    Ok(())
}

fn load_table(config: &ExperimentConfig, manifest: &Path) -> Result<FeatureTable> {
    Ok(load_manifest_features(manifest, &config.pipeline)?.restrict(&config.classes)?)
}

fn weights(common: &Common, manifest: &Path) -> Result<()> {
    let config = common.experiment_config()?;
    let table = load_table(&config, manifest)?;
    let data = table.dataset()?;
    let partition = partition_features(data.n_features(), config.m)?.with_band_labels(&table.freq_ranges)?;
    let base: &ClassifierSpec = config.classifiers.first().context("no classifier configured")?;
    let encoding = config
        .encoding
        .unwrap_or_else(|| LabelEncoding::default_for(data.n_classes()));
    let fitted = fit_band_weights(
        &data,
        &partition,
        base,
        encoding,
        &config.methods,
        config.inner_folds,
        config.seed,
    )?;
    fs::create_dir_all(&common.out)?;
    for fit in &fitted.fits {
        let levels = discretize(&fit.band_w, config.num_levels)?;
        write_json(&common.out.join(format!("weights_{}.json", fit.method)), fit)?;
        write_json(
            &common.out.join(format!("augmentation_{}.json", fit.method)),
            &AugmentationSpec::new(&levels, &partition),
        )?;
        println!("{}: W = {:?}, levels = {:?}", fit.method, fit.band_w, levels.levels);
    }
    Ok(())
}

fn classify(common: &Common, manifest: &Path, augmentation: Option<&Path>) -> Result<()> {
    let config = common.experiment_config()?;
    let mut table = load_table(&config, manifest)?;
    if let Some(path) = augmentation {
        let spec: AugmentationSpec = serde_json::from_str(&read(path)?)?;
        let partition = partition_features(table.features.cols(), spec.levels.len())?;
        table.features = augment_matrix(&table.features, &partition, &spec.weight_levels())?;
    }
    let runs = classify_repeated(&config, &table)?;
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join("metrics.csv"), classification_csv(&runs))?;
    for run in &runs {
        println!("{}\t{}", run.classifier, run.summary.accuracy_cell());
    }
    Ok(())
}
