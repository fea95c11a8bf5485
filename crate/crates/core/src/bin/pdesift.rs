use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use pdesift::baseline::stridge;
use pdesift::dictionary::build_problem;
use pdesift::field::{load_snapshot, save_snapshot, SnapshotHeader};
use pdesift::harness::{
    predict_with_uncertainty, run_experiments, truth_labels, ConfigFile, ExperimentConfig, FitConfig,
};
use pdesift::solvers::{add_noise, simulate, NoiseSpec, SystemKind, SystemSpec};
use pdesift::ssvb::{discover, DiscoveredModel, ModelExport};
use pdesift::{Error, Field};

#[derive(Parser)]
#[command(
    name = "pdesift",
    version,
    about = "Discover PDEs from gridded data with spike-and-slab variational Bayes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark system and write a field snapshot.
    Simulate {
        /// Benchmark system name.
        #[arg(long)]
        system: SystemKind,
        /// System description or experiment config overriding the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Noise level as a fraction of the field's standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the variational model to a snapshot and write the identified model.
    Discover(FitArgs),
    /// Fit the STRidge baseline to a snapshot.
    Baseline(FitArgs),
    /// Run noise/seed sweeps and write the report.
    Benchmark {
        /// Experiment config (one object or a list); all benchmark systems
        /// when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Resimulate posterior draws of an identified model.
    Predict {
        /// Model JSON written by `discover` or `benchmark`.
        #[arg(long)]
        model: PathBuf,
        /// System whose grid, initial condition and boundary are used.
        #[arg(long)]
        system: SystemKind,
        /// System description or experiment config overriding the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    /// Field snapshot.
    #[arg(long)]
    data: PathBuf,
    /// Fit settings or an experiment config; tuned benchmark settings for the
    /// snapshot's system when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise level used to choose derivative estimators; read from the
    /// snapshot when absent.
    #[arg(long)]
    noise: Option<f64>,
    /// Row-subsampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time-derivative order of the target; from the snapshot's system when
    /// absent, otherwise 1.
    #[arg(long)]
    time_order: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes that map to distinct exit codes.
enum Failure {
    Config(Error),
    Run(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(_) => 2,
        }
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn run_err(e: Error) -> Failure {
    Failure::Run(e)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            system,
            config,
            noise,
            seed,
            out,
        } => cmd_simulate(system, config.as_deref(), noise, seed, &out),
        Command::Discover(args) => cmd_fit(&args, true),
        Command::Baseline(args) => cmd_fit(&args, false),
        Command::Benchmark {
            config,
            out,
            seeds,
            noise,
            workers,
        } => cmd_benchmark(config.as_deref(), out, seeds, noise, workers),
        Command::Predict {
            model,
            system,
            config,
            samples,
            seed,
            out,
        } => cmd_predict(&model, system, config.as_deref(), samples, seed, &out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let (Failure::Config(e) | Failure::Run(e)) = &f;
            eprintln!("error: {e}");
            ExitCode::from(f.code())
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
        .map_err(config_err)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .map_err(config_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| run_err(e.into()))?;
    fs::write(path, text + "\n").map_err(|e| run_err(e.into()))
}

/// A system description, accepted either bare or inside an experiment config.
fn read_spec(path: &Path, kind: SystemKind) -> Result<SystemSpec, Failure> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum SpecFile {
        Experiment(Box<ExperimentConfig>),
        Spec(SystemSpec),
    }
    let spec = match read_json::<SpecFile>(path)? {
        SpecFile::Experiment(c) => c.system,
        SpecFile::Spec(s) => s,
    };
    if spec.kind != kind {
        return Err(config_err(Error::Config(format!(
            "{} describes {}, not {kind}",
            path.display(),
            spec.kind
        ))));
    }
    spec.validate().map_err(config_err)?;
    Ok(spec)
}

fn system_spec(kind: SystemKind, config: Option<&Path>) -> Result<SystemSpec, Failure> {
    match config {
        Some(path) => read_spec(path, kind),
        None => Ok(ExperimentConfig::benchmark(kind).system),
    }
}

fn cmd_simulate(
    kind: SystemKind,
    config: Option<&Path>,
    noise: f64,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, Failure> {
    let spec = system_spec(kind, config)?;
    let noise_spec = NoiseSpec { level: noise, seed };
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(config_err(Error::Config(format!("noise level {noise} must be >= 0"))));
    }
    let clean = simulate(&spec).map_err(run_err)?;
    let field = add_noise(&clean, &noise_spec).map_err(run_err)?;
    let mut header = SnapshotHeader::for_grid(field.grid());
    header.system = Some(kind.to_string());
    header.coefficients = truth_labels(&spec.true_model().map_err(config_err)?)
        .into_iter()
        .collect();
    header.noise = (noise > 0.0).then_some(noise_spec);
    save_snapshot(out, &header, &field).map_err(run_err)?;
    println!("wrote {} ({} values)", out.display(), field.values().len());
    Ok(ExitCode::SUCCESS)
}

/// Fit settings: the benchmark settings of `kind` (library defaults for
/// untagged fields), overridden by `--config`. A full experiment config,
/// recognised by its `system` key, is used as is.
fn fit_config(path: Option<&Path>, kind: Option<SystemKind>) -> Result<FitConfig, Failure> {
    let base = kind.map(|k| ExperimentConfig::benchmark(k).fit()).unwrap_or_default();
    let config = match path {
        Some(p) => {
            let value: serde_json::Value = read_json(p)?;
            let in_file = |e: Error| {
                let msg = match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                };
                config_err(Error::Config(format!("{}: {msg}", p.display())))
            };
            if value.get("system").is_some() {
                let experiment: ExperimentConfig =
                    serde_json::from_value(value).map_err(|e| in_file(Error::Config(e.to_string())))?;
                experiment.fit()
            } else {
                base.with_overrides(value).map_err(in_file)?
            }
        }
        None => base,
    };
    config.validate().map_err(config_err)?;
    Ok(config)
}

fn cmd_fit(args: &FitArgs, variational: bool) -> Result<ExitCode, Failure> {
    let (header, field): (SnapshotHeader, Field) = load_snapshot(&args.data)
        .map_err(|e| config_err(Error::Config(format!("cannot load {}: {e}", args.data.display()))))?;
    let kind = header.system.as_deref().and_then(|s| s.parse::<SystemKind>().ok());
    let config = fit_config(args.config.as_deref(), kind)?;
    let noise = args
        .noise
        .unwrap_or_else(|| header.noise.map(|n| n.level).unwrap_or(0.0));
    let time_order = args
        .time_order
        .unwrap_or_else(|| kind.map(SystemKind::time_order).unwrap_or(1));
    let settings = config.problem_settings(kind, field.grid().is_2d(), time_order, noise, args.seed);
    let problem = build_problem(&field, &settings).map_err(run_err)?;
    if variational {
        let (_, model) = discover(&problem, &config.vb, &config.stridge, time_order).map_err(run_err)?;
        print_model(&model);
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir).map_err(|e| run_err(e.into()))?;
            write_json(&dir.join("model.json"), &model.to_export())?;
        }
    } else {
        let fit = stridge(&problem, &config.stridge).map_err(run_err)?;
        let labels = problem.dictionary.labels();
        let coefficients: Vec<(String, f64)> = fit
            .support
            .iter()
            .map(|&i| (labels[i].clone(), fit.coefficients[i]))
            .collect();
        for (label, c) in &coefficients {
            println!("{label:>16} {c:+.6}");
        }
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir).map_err(|e| run_err(e.into()))?;
            write_json(
                &dir.join("baseline.json"),
                &serde_json::json!({
                    "time_order": time_order,
                    "tol": fit.tol,
                    "coefficients": coefficients.into_iter().collect::<std::collections::BTreeMap<_, _>>(),
                }),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_model(model: &DiscoveredModel) {
    println!("{}", model.equation());
    for (term, mean, std) in model.coefficients() {
        println!("{:>16} {mean:+.6} ± {std:.2e}", term.label());
    }
    println!(
        "{} sweeps, {}",
        model.sweeps,
        if model.converged {
            "converged"
        } else {
            "stopped at max_sweeps"
        }
    );
}

fn cmd_benchmark(
    config: Option<&Path>,
    out: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    noise: Option<Vec<f64>>,
    workers: Option<usize>,
) -> Result<ExitCode, Failure> {
    let mut configs = match config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| config_err(Error::Config(format!("cannot read {}: {e}", p.display()))))?;
            ConfigFile::parse(&text).map_err(|e| config_err(Error::Config(format!("{}: {e}", p.display()))))?
        }
        None => SystemKind::ALL.into_iter().map(ExperimentConfig::benchmark).collect(),
    };
    if configs.is_empty() {
        return Err(config_err(Error::Config("the config lists no experiments".into())));
    }
    for c in &mut configs {
        if let Some(s) = &seeds {
            c.seeds = s.clone();
        }
        if let Some(n) = &noise {
            c.noise_levels = n.clone();
        }
    }
    let workers = workers.unwrap_or(configs[0].workers);
    let out = out
        .or_else(|| configs[0].out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let report = run_experiments(&configs, workers).map_err(config_err)?;
    report.write_to(&out).map_err(run_err)?;
    for row in report.rows() {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<8} noise={:<5} seed={:<3} {:<8} fpr={} fnr={} err={} {}",
            row.system,
            row.noise,
            row.seed,
            row.method.name(),
            fmt(row.fpr),
            fmt(row.fnr),
            fmt(row.coeff_rel_err),
            row.status
        );
    }
    println!("report written to {}", out.join("report.csv").display());
    let failed = report.failed_rows();
    if failed > 0 {
        eprintln!("{failed} cells failed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_predict(
    model: &Path,
    kind: SystemKind,
    config: Option<&Path>,
    samples: usize,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, Failure> {
    let export: ModelExport = read_json(model)?;
    let model = DiscoveredModel::from_export(&export).map_err(config_err)?;
    let spec = system_spec(kind, config)?;
    let prediction = predict_with_uncertainty(&model, &spec, samples, seed).map_err(run_err)?;
    fs::create_dir_all(out).map_err(|e| run_err(e.into()))?;
    let mut header = SnapshotHeader::for_grid(prediction.mean.grid());
    header.system = Some(kind.to_string());
    for (name, field) in [("mean", &prediction.mean), ("std", &prediction.std)] {
        save_snapshot(&out.join(format!("{name}.field")), &header, field).map_err(run_err)?;
    }
    println!(
        "{} of {samples} samples accepted; wrote mean.field and std.field to {}",
        samples - prediction.rejected,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
