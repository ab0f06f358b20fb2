use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use laks::classifier::predict;
use laks::harness::protocol::{class_half_split, cross_subject_split};
use laks::harness::{
    benchmark, evaluate, evaluate_model, extraction_scaling, linear_r2, sweep, Protocol, ReportFormat, RunConfig,
    SweepParam,
};
use laks::model_io::{load_model, save_model};
use laks::skeleton::{load_canonical, load_raw, save_dataset, Dataset, DatasetFormat, LoadReport};
use laks::synthetic::{generate, SynthConfig};
use laks::training::train_model;
use laks::{Error, Result};

#[derive(Parser)]
#[command(name = "laks", version, about = "Skeleton action recognition with binary hash codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on the protocol's training side and write it to --model
    Train(Common),
    /// Classify one or more sequence files
    Predict {
        #[command(flatten)]
        common: Common,
        /// Sequence files to classify
        #[arg(required = true)]
        sequences: Vec<PathBuf>,
    },
    /// Run the evaluation protocol, or test --model on the whole dataset
    Evaluate(Common),
    /// Time the four test phases per sequence
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Predictions per sequence
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Also measure extraction time on synthetic 20/40/80-frame sequences
        #[arg(long)]
        scaling: bool,
    },
    /// Re-evaluate under a list of values of one parameter
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lambda1, lambda2, lambda3, epsilon, atoms or code_len
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Write a synthetic labelled dataset in canonical format
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        #[arg(long, default_value_t = 2)]
        episodes: usize,
        #[arg(long, default_value_t = 40)]
        frames: usize,
        #[arg(long, default_value_t = 0.01)]
        jitter: f64,
        /// Probability per frame of one displaced joint
        #[arg(long, default_value_t = 0.0)]
        spike_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Key-value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of sequence files
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// canonical or msr-like
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    joint_map: Option<PathBuf>,
    /// Regex with named groups `action` and optionally `subject`
    #[arg(long)]
    naming_pattern: Option<String>,
    /// cross-subject, loso or class-half
    #[arg(long)]
    protocol: Option<String>,
    /// Comma-separated subject ids used for training in the cross-subject split
    #[arg(long)]
    train_subjects: Option<String>,
    /// Model file to write (train) or read (other commands)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// text or json
    #[arg(long)]
    report: Option<String>,
    /// msra, utkinect or florence; sets the noisy-frame threshold
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    /// Noisy-frame threshold
    #[arg(long)]
    epsilon: Option<usize>,
    /// Hash code length
    #[arg(long)]
    code_len: Option<usize>,
    /// Number of analysis atoms
    #[arg(long)]
    atoms: Option<usize>,
    /// Frame gap of the motion offsets
    #[arg(long)]
    tau: Option<usize>,
    /// K-means repetitions
    #[arg(long)]
    runs: Option<usize>,
    /// Clusters per codebook
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let text = |v: &Option<String>| v.clone();
        fn num<T: ToString>(v: Option<T>) -> Option<String> {
            v.map(|v| v.to_string())
        }
        let overrides = [
            ("preset", text(&self.preset)),
            ("dataset", path(&self.dataset)),
            ("format", text(&self.format)),
            ("joint_map", path(&self.joint_map)),
            ("naming_pattern", text(&self.naming_pattern)),
            ("protocol", text(&self.protocol)),
            ("train_subjects", text(&self.train_subjects)),
            ("out", path(&self.out)),
            ("report", text(&self.report)),
            ("seed", num(self.seed)),
            ("lambda1", num(self.lambda1)),
            ("lambda2", num(self.lambda2)),
            ("lambda3", num(self.lambda3)),
            ("epsilon", num(self.epsilon)),
            ("code_len", num(self.code_len)),
            ("atoms", num(self.atoms)),
            ("tau", num(self.tau)),
            ("runs", num(self.runs)),
            ("clusters", num(self.clusters)),
            ("mu0", num(self.mu0)),
            ("rho", num(self.rho)),
            ("mu_max", num(self.mu_max)),
            ("max_iter", num(self.max_iter)),
            ("tol", num(self.tol)),
            ("ridge", num(self.ridge)),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn model_path(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs --model".into()))
    }
}

fn load(config: &RunConfig) -> Result<Dataset> {
    let (ds, report): (Dataset, LoadReport) = config.load_dataset()?;
    for (path, why) in &report.skipped {
        eprintln!("warning: skipped {}: {why}", path.display());
    }
    if report.ignored > 0 {
        eprintln!("note: {} files did not match the naming pattern", report.ignored);
    }
    Ok(ds)
}

fn emit(config: &RunConfig, text: String, json: String) -> Result<()> {
    let body = match config.report {
        ReportFormat::Text => text,
        ReportFormat::Json => json,
    };
    match &config.out {
        Some(path) => std::fs::write(path, body).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            print!("{body}");
            if !body.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn cmd_train(common: &Common) -> Result<()> {
    let config = common.run_config()?;
    let out = common.model_path()?;
    let ds = load(&config)?;
    let train: Vec<usize> = match config.protocol {
        Protocol::CrossSubject => cross_subject_split(&ds, &config.train_subjects)?.train,
        Protocol::ClassHalf => class_half_split(&ds)?.train,
        Protocol::LeaveOneSubjectOut => (0..ds.len()).collect(),
    };
    let seqs: Vec<_> = train.iter().map(|&i| &ds.sequences()[i]).collect();
    let outcome = train_model(&seqs, ds.class_count(), ds.class_names().map(<[String]>::to_vec), &config.model)?;
    println!("iteration\tobjective\tflipped\tmu");
    for r in &outcome.trace {
        println!("{}\t{:.6e}\t{:.6}\t{}", r.iteration, r.objective, r.flipped_fraction, r.mu);
    }
    println!(
        "trained on {} sequences: {} iterations ({}), {} features denoised",
        seqs.len(),
        outcome.iterations,
        if outcome.converged { "converged" } else { "iteration cap" },
        outcome.replaced_features
    );
    save_model(&outcome.model, out)?;
    println!("model written to {}", out.display());
    Ok(())
}

fn cmd_predict(common: &Common, files: &[PathBuf]) -> Result<()> {
    let config = common.run_config()?;
    let model = load_model(common.model_path()?)?;
    let map = config.load_joint_map()?;
    for file in files {
        let seq = match config.format {
            DatasetFormat::Canonical => load_canonical(file)?,
            DatasetFormat::MsrLike => load_raw(file, &map)?,
        };
        let label = predict(&seq, &model)?;
        match model.class_name(label) {
            Some(name) => println!("{}\t{label}\t{name}", file.display()),
            None => println!("{}\t{label}", file.display()),
        }
    }
    Ok(())
}

fn cmd_evaluate(common: &Common) -> Result<()> {
    let config = common.run_config()?;
    let ds = load(&config)?;
    let report = match &common.model {
        Some(path) => evaluate_model(&ds, &load_model(path)?)?,
        None => evaluate(&ds, &config)?,
    };
    emit(&config, report.to_text(), report.to_json())
}

fn cmd_benchmark(common: &Common, repeats: usize, scaling: bool) -> Result<()> {
    let config = common.run_config()?;
    let model = load_model(common.model_path()?)?;
    let ds = load(&config)?;
    let seqs: Vec<_> = ds.sequences().iter().collect();
    let mut report = benchmark(&model, &seqs, repeats)?;
    if scaling {
        let points = extraction_scaling(&[20, 40, 80], model.params.tau, 7, 200)?;
        let xy: Vec<(f64, f64)> = points.iter().map(|&(f, t)| (f as f64, t)).collect();
        report.extraction_r2 = Some(linear_r2(&xy));
        report.extraction_scaling = points;
    }
    emit(&config, report.to_text(), report.to_json())
}

fn cmd_sweep(common: &Common, param: &str, values: &[f64]) -> Result<()> {
    let param: SweepParam = param.parse()?;
    let config = common.run_config()?;
    let ds = load(&config)?;
    let table = sweep(&ds, &config, param, values)?;
    emit(&config, table.to_text(), table.to_json())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => cmd_train(&common),
        Command::Predict { common, sequences } => cmd_predict(&common, &sequences),
        Command::Evaluate(common) => cmd_evaluate(&common),
        Command::Benchmark {
            common,
            repeats,
            scaling,
        } => cmd_benchmark(&common, repeats, scaling),
        Command::Sweep { common, param, values } => cmd_sweep(&common, &param, &values),
        Command::Synth {
            out,
            classes,
            subjects,
            episodes,
            frames,
            jitter,
            spike_rate,
            seed,
        } => {
            let ds = generate(&SynthConfig {
                classes,
                subjects,
                episodes,
                frames,
                jitter,
                spike_rate,
                seed,
                ..SynthConfig::default()
            })?;
            save_dataset(&ds, &out)?;
            println!("wrote {} sequences to {}", ds.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
