use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use asrc::classify::{FittedClassifier, Method, MethodKind};
use asrc::experiments::corrupt::observed_range;
use asrc::experiments::dataset::{load_dataset, write_csv, write_image_matrix, LabelColumn, LabeledDataset};
use asrc::experiments::{corrupt_dataset, emit_report, run_benchmark, BenchmarkConfig, ReportFormat, SynthSpec};
use asrc::properties::run_properties;
use asrc::{Dictionary, Error, Query};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Adaptive sparse representation classification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark config and write the report (format from the extension).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt a fraction of the pixels of every sample in a dataset.
    Corrupt {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to `<stem>-corrupt<fraction>.<ext>` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Label column for CSV input: `last`, `first`, an index or a header name.
        #[arg(long, default_value = "last")]
        label: String,
    },
    /// Classify every sample of a query file against a dictionary file.
    Classify {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "asrc")]
        method: MethodKind,
        /// Weight for asrc and src.
        #[arg(long)]
        lambda: Option<f64>,
        /// Weight for crc.
        #[arg(long)]
        sigma: Option<f64>,
        /// Score asrc classes on the query minus its estimated gross errors.
        #[arg(long)]
        denoise: bool,
        #[arg(long, default_value = "last")]
        label: String,
    },
    /// Run the built-in checks of the regularizer, proximal maps and solver.
    Properties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplies the number of random trials.
        #[arg(long, default_value_t = 1)]
        scale: usize,
    },
    /// Generate a synthetic face-like dataset.
    Synth {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = asrc::experiments::synth::DEFAULT_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `.csv`, or any other extension for a packed image matrix
        /// (values min-max scaled to [0, 1]).
        #[arg(long, default_value = "synth.csv")]
        out: PathBuf,
    },
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn write_dataset(ds: &LabeledDataset, path: &Path) -> asrc::Result<()> {
    if is_csv(path) {
        write_csv(ds, path)
    } else {
        let (lo, hi) = observed_range(ds.features.as_slice());
        let mut scaled = ds.clone();
        if lo < 0.0 || hi > 1.0 {
            let span = if hi > lo { hi - lo } else { 1.0 };
            scaled.features = ds.features.map(|v| (v - lo) / span);
        }
        write_image_matrix(&scaled, path)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = BenchmarkConfig::load(&config)?;
            let report = run_benchmark(&cfg)?;
            emit_report(&report, ReportFormat::from_path(&out), &out)?;
            for r in &report.results {
                println!(
                    "{:<16} {:<5} dim {:>5} corruption {:.2}  accuracy {:.2} +- {:.2}",
                    r.dataset,
                    r.method,
                    r.requested_dim.map_or_else(|| "raw".into(), |d| d.to_string()),
                    r.corruption,
                    100.0 * r.accuracy_mean,
                    100.0 * r.accuracy_std
                );
            }
            eprintln!("report written to {}", out.display());
        }
        Command::Corrupt {
            dataset,
            fraction,
            seed,
            out,
            label,
        } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::Config(format!("fraction must lie in [0, 1], got {fraction}")).into());
            }
            let ds = load_dataset(&dataset, &LabelColumn::parse(&label))?;
            let range = if is_csv(&dataset) {
                observed_range(ds.features.as_slice())
            } else {
                (0.0, 1.0)
            };
            let corrupted = corrupt_dataset(&ds, fraction, seed, range);
            let out = out.unwrap_or_else(|| {
                let stem = dataset.file_stem().unwrap_or_default().to_string_lossy();
                let ext = dataset.extension().unwrap_or_default().to_string_lossy();
                dataset.with_file_name(format!("{stem}-corrupt{fraction}.{ext}"))
            });
            write_dataset(&corrupted, &out)?;
            eprintln!("wrote {} samples to {}", corrupted.len(), out.display());
        }
        Command::Classify {
            dict,
            query,
            method,
            lambda,
            sigma,
            denoise,
            label,
        } => {
            let lc = LabelColumn::parse(&label);
            let train = load_dataset(&dict, &lc).with_context(|| format!("loading {}", dict.display()))?;
            let queries = load_dataset(&query, &lc).with_context(|| format!("loading {}", query.display()))?;
            let weight = match method {
                MethodKind::Asrc | MethodKind::Src => lambda,
                MethodKind::Crc => sigma,
                _ => None,
            };
            let mut m = method.default_method();
            if let Some(w) = weight {
                m = m.with_weight(w);
            }
            if let Method::Asrc { denoise: d, .. } = &mut m {
                *d = denoise;
            }
            let clf = FittedClassifier::fit(&Dictionary::new(train.features.clone(), train.labels.clone())?, m)?;
            println!("sample,truth,predicted,{}", residual_header(&train));
            let mut correct = 0;
            for i in 0..queries.len() {
                let y = Query::new(queries.features.column(i).into_owned())?;
                let p = clf.classify(&y)?;
                let truth = &queries.class_names[queries.labels[i]];
                let predicted = &train.class_names[p.class_id];
                correct += usize::from(truth == predicted);
                let res: Vec<String> = p.residuals.iter().map(|r| format!("{r:.6e}")).collect();
                println!("{i},{truth},{predicted},{}", res.join(","));
            }
            eprintln!(
                "{correct}/{} correct ({:.2}%)",
                queries.len(),
                100.0 * correct as f64 / queries.len() as f64
            );
        }
        Command::Properties { seed, scale } => {
            let checks = run_properties(seed, scale);
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(Error::NumericalDivergence { iteration: 0 })
                    .with_context(|| format!("{failed} property check(s) failed"));
            }
        }
        Command::Synth {
            classes,
            per_class,
            dim,
            rho,
            noise,
            seed,
            out,
        } => {
            let spec = SynthSpec::new(classes, per_class, dim, rho)
                .with_noise(noise)
                .with_seed(seed);
            let ds = spec.generate()?;
            write_dataset(&ds, &out)?;
            eprintln!(
                "wrote {} samples of dimension {} to {}",
                ds.len(),
                ds.dim(),
                out.display()
            );
        }
    }
    Ok(())
}

fn residual_header(ds: &LabeledDataset) -> String {
    ds.class_names
        .iter()
        .map(|c| format!("residual_{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) => e.kind().exit_code() as u8,
        None => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
