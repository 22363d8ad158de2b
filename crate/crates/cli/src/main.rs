//! Command-line interface for LFP event-classification experiments.
//!
//! Subcommands mirror the pipeline stages:
//!
//! * `generate` — write a synthetic multi-contact recording to disk,
//! * `features` — extract per-rate spectrogram features to CSV,
//! * `run`      — execute a cross-validated classifier sweep and report it,
//! * `report`   — re-render a previously saved report.
//!
//! Exit codes: `0` success, `2` configuration error (bad flags or config
//! file), `3` data error (unreadable/degenerate input), `1` anything else.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfpmkl::experiment::{
    extract_rate_features, prepare_dataset, run_experiment, DataSource, ExperimentConfig,
    ExperimentReport,
};
use lfpmkl::lfp::{generate_synthetic_recording, io::save_recording, SyntheticSpec};
use lfpmkl::spectrogram::{dump_spectrogram, hemisphere_spectrogram};
use lfpmkl::{ClassifierKind, Error, MorletParams, Result, TaskSet};

#[derive(Parser)]
#[command(
    name = "lfpmkl",
    version,
    about = "Classify behavioral events from multi-channel LFP recordings",
    propagate_version = true
)]
struct Cli {
    /// Size of the worker thread pool (default: one per CPU).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Print per-fold accuracies, stage timings, and extra artifacts.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording and write it to a directory.
    Generate(GenerateArgs),
    /// Extract per-rate feature vectors and write them as CSV.
    Features(FeaturesArgs),
    /// Run the cross-validated classifier sweep described by a config.
    Run(RunArgs),
    /// Re-render a saved report (JSON) as a table and CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config (TOML or JSON) whose synthetic source to use.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for `recording.lfp` and `spec.json`.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Generator seed (overrides the config).
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Task set to draw event classes from when no config is given.
    #[arg(long, value_name = "3|5", value_parser = parse_task_set)]
    tasks: Option<TaskSet>,

    /// Events per class when no config is given.
    #[arg(long, value_name = "N")]
    events: Option<usize>,

    /// Recording sample rate in Hz (overrides the config).
    #[arg(long, value_name = "HZ")]
    rate: Option<f64>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Experiment config (TOML or JSON); defaults to the synthetic sweep.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Comma-separated analysis rates in Hz (overrides the config).
    #[arg(long, value_name = "HZ,...", value_delimiter = ',')]
    rates: Option<Vec<f64>>,

    /// Task set: 3 or 5 (overrides the config).
    #[arg(long, value_name = "3|5", value_parser = parse_task_set)]
    tasks: Option<TaskSet>,

    /// Seed for synthetic data and fold assignment (overrides the config).
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory for the per-rate CSV files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML or JSON); defaults to the synthetic sweep.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for synthetic data and fold assignment (overrides the config).
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Comma-separated analysis rates in Hz (overrides the config).
    #[arg(long, value_name = "HZ,...", value_delimiter = ',')]
    rates: Option<Vec<f64>>,

    /// Task set: 3 or 5 (overrides the config).
    #[arg(long, value_name = "3|5", value_parser = parse_task_set)]
    tasks: Option<TaskSet>,

    /// Run only this classifier (svm-linear | svm-rbf | svm-poly | mkl).
    #[arg(long, value_name = "NAME", value_parser = parse_classifier)]
    classifier: Option<ClassifierKind>,

    /// Directory for report.json / report.txt / report.csv.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved report (JSON) to re-render.
    #[arg(value_name = "REPORT.json")]
    input: PathBuf,

    /// Directory for the re-rendered report.txt and report.csv.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_task_set(s: &str) -> std::result::Result<TaskSet, String> {
    s.parse::<TaskSet>().map_err(|e| e.to_string())
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse::<ClassifierKind>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists (e.g. in tests); that pool is
        // then used as-is.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let verbose = cli.verbose;
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args, verbose),
        Command::Features(args) => cmd_features(args, verbose),
        Command::Run(args) => cmd_run(args, verbose),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            if err.is_config() {
                ExitCode::from(2)
            } else if err.is_data() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

/// Load `--config` or fall back to the built-in synthetic sweep, then apply
/// the shared CLI overrides. `--seed` reseeds both the fold assignment and,
/// for synthetic sources, the generator.
fn resolve_config(
    path: Option<&Path>,
    tasks: Option<TaskSet>,
    seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let mut c = ExperimentConfig::default();
            if let Some(t) = tasks {
                c = ExperimentConfig::synthetic(t, 40, c.seed)?;
            }
            c
        }
    };
    if let Some(t) = tasks {
        config.task_set = t;
    }
    if let Some(s) = seed {
        config.seed = s;
        if let DataSource::Synthetic { spec } = &mut config.data {
            spec.seed = s;
        }
    }
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_generate(args: GenerateArgs, verbose: bool) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => match ExperimentConfig::load(path)?.data {
            DataSource::Synthetic { spec } => spec,
            DataSource::File { .. } => {
                return Err(Error::InvalidConfig(
                    "config reads data from a file; nothing to generate".into(),
                ))
            }
        },
        None => {
            let tasks = args.tasks.unwrap_or(TaskSet::Three);
            SyntheticSpec::standard(
                tasks.event_labels(),
                args.events.unwrap_or(40),
                args.seed.unwrap_or(0),
            )?
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(rate) = args.rate {
        spec.sample_rate = rate;
    }
    spec.validate()?;

    let recording = generate_synthetic_recording(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    let data_path = args.out.join("recording.lfp");
    save_recording(&recording, &data_path)?;
    println!("wrote {}", data_path.display());
    write_file(
        &args.out.join("spec.json"),
        &serde_json::to_string_pretty(&spec)?,
    )?;

    let samples = recording.channels.ncols();
    println!(
        "{} channels x {} samples at {} Hz ({:.1} s), {} events",
        recording.channels.nrows(),
        samples,
        recording.sample_rate,
        samples as f64 / recording.sample_rate,
        recording.events.len()
    );
    if verbose {
        for class in &spec.classes {
            println!(
                "  class {}: depth {:.2}, lag {:+.2} s, width {:.2} s",
                class.label, class.depth, class.lag_s, class.width_s
            );
        }
    }
    Ok(())
}

fn cmd_features(args: FeaturesArgs, verbose: bool) -> Result<()> {
    let mut config = resolve_config(args.config.as_deref(), args.tasks, args.seed)?;
    if let Some(rates) = args.rates {
        config.rates = rates;
    }
    config.validate()?;

    let dataset = prepare_dataset(&config)?;
    let extraction = extract_rate_features(&dataset, &config.rates, config.wavelet_bandwidth)?;
    std::fs::create_dir_all(&args.out)?;

    for rate_features in &extraction.rates {
        for (side, views) in [("left", &rate_features.left), ("right", &rate_features.right)] {
            let dim = views.first().map_or(0, |v| v.values.len());
            let mut csv = String::from("label,hemisphere,rate_hz");
            for i in 0..dim {
                write!(csv, ",f{i}").expect("string write");
            }
            csv.push('\n');
            for view in views {
                write!(csv, "{},{},{}", view.label, view.hemisphere, view.rate)
                    .expect("string write");
                for v in &view.values {
                    write!(csv, ",{v}").expect("string write");
                }
                csv.push('\n');
            }
            let path = args
                .out
                .join(format!("features-{}hz-{side}.csv", rate_features.rate_hz));
            write_file(&path, &csv)?;
        }
    }

    if verbose {
        // Dump the first trial's raw spectrograms for inspection.
        let params = MorletParams::beta_band(config.wavelet_bandwidth)?;
        for (side, window) in [("left", &dataset.left[0]), ("right", &dataset.right[0])] {
            let spec = hemisphere_spectrogram(window, &params)?;
            let path = args.out.join(format!("spectrogram-{side}.f32"));
            dump_spectrogram(&spec, &path)?;
            println!("wrote {} (+ .json header)", path.display());
        }
        println!(
            "wavelet transform: {:.2} s over {} windows",
            extraction.cwt_s,
            dataset.left.len() + dataset.right.len()
        );
    }
    Ok(())
}

fn cmd_run(args: RunArgs, verbose: bool) -> Result<()> {
    let mut config = resolve_config(args.config.as_deref(), args.tasks, args.seed)?;
    if let Some(rates) = args.rates {
        config.rates = rates;
    }
    if let Some(classifier) = args.classifier {
        config.classifiers = vec![classifier];
    }

    let report = run_experiment(&config)?;
    print!("{}", report.render_table());

    if verbose {
        println!("\nper-fold accuracies (%):");
        for cell in &report.cells {
            let folds: Vec<String> = cell
                .fold_accuracies_pct
                .iter()
                .map(|a| format!("{a:.1}"))
                .collect();
            println!(
                "  {} @ {} Hz: [{}]  train {:.2} s, test {:.2} s",
                cell.classifier.name(),
                cell.rate_hz,
                folds.join(", "),
                cell.timing.train_s,
                cell.timing.test_s
            );
        }
        let t = &report.timing;
        println!(
            "\nstages: wavelet {:.2} s, total {:.2} s",
            t.cwt_s, t.total_wall_s
        );
        for prep in &t.rates {
            println!(
                "  {} Hz: features {:.2} s, gram {:.2} s",
                prep.rate_hz, prep.features_s, prep.gram_s
            );
        }
    }

    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        write_file(&dir.join("report.json"), &report.to_json()?)?;
        write_file(&dir.join("report.txt"), &report.render_table())?;
        write_file(&dir.join("report.csv"), &report.to_csv())?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    print!("{}", report.render_table());
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        write_file(&dir.join("report.txt"), &report.render_table())?;
        write_file(&dir.join("report.csv"), &report.to_csv())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn task_and_classifier_values_parse() {
        assert_eq!(parse_task_set("3").unwrap(), TaskSet::Three);
        assert_eq!(parse_task_set("five").unwrap(), TaskSet::Five);
        assert!(parse_task_set("4").is_err());
        assert_eq!(
            parse_classifier("mkl").unwrap(),
            ClassifierKind::Mkl
        );
        assert_eq!(
            parse_classifier("rbf").unwrap(),
            ClassifierKind::SvmRbf
        );
        assert!(parse_classifier("forest").is_err());
    }

    #[test]
    fn seed_override_reaches_generator_and_folds() {
        let config = resolve_config(None, Some(TaskSet::Three), Some(99)).unwrap();
        assert_eq!(config.seed, 99);
        match &config.data {
            DataSource::Synthetic { spec } => assert_eq!(spec.seed, 99),
            DataSource::File { .. } => panic!("default config is synthetic"),
        }
    }
}
