use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qkr::bench::{self, write_benchmark_files, write_csv_rows};
use qkr::config::{KernelKind, PipelineConfig, RunSeeds};
use qkr::feature_map::FeatureMapSpec;
use qkr::pipeline::{prepare, train_pipeline, PipelineBundle};
use qkr::preprocess::{self, read_records_path, synth_dataset, write_records_path, SynthConfig};
use qkr::qkernel::gram_matrix;

#[derive(Parser)]
#[command(name = "qkr", version, about = "Quantum-kernel regression for contact-resistance data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset in the recipe CSV schema.
    Synth {
        #[arg(long, default_value_t = 159, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Standard deviation of the label noise, ohm-mm.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the full pipeline and write a model bundle plus a training report.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_out: PathBuf,
        /// Training report path. Defaults to `<model_out>.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict contact resistance for every record in a CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Prediction CSV. Printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated-split comparison of the quantum model against classical ones.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        repetitions: u64,
        /// Also compare the four feature-map variants.
        #[arg(long)]
        maps: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write the Gram matrix of the experimental rows of one split side.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Side::Test)]
        set: Side,
        /// Estimate entries from measurement shots instead of exactly.
        #[arg(long)]
        sampled: bool,
        /// Shots per entry with `--sampled`. Overrides the config value.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a frozen bundle on labelled external records.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Per-record table CSV. Printed to stdout either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Dataset CSV. Falls back to `data_path` in the config.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON config. Every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fit PCA separately on the test set.
    #[arg(long)]
    pca_per_set: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Train,
    Test,
}

impl Common {
    fn load(&self) -> anyhow::Result<(PipelineConfig, Vec<preprocess::DeviceRecord>)> {
        let mut config = match &self.config {
            Some(p) => PipelineConfig::from_path(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if self.pca_per_set {
            config.pca_per_set = true;
        }
        let data = self
            .data
            .clone()
            .or_else(|| config.data_path.as_ref().map(PathBuf::from))
            .ok_or_else(|| anyhow!("no dataset given: pass --data or set data_path in the config"))?;
        let records = read_records_path(&data)?;
        Ok((config, records))
    }
}

/// `println!` that reports write failures instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(io::stdout(), $($arg)*)?
    };
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| qkr::Error::from(e).context(format!("writing {}", path.display())))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { n, seed, noise, out } => {
            let records = synth_dataset(&SynthConfig {
                n: n as usize,
                seed,
                noise_sd: noise,
            })?;
            write_records_path(&out, &records)?;
            say!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Train {
            common,
            model_out,
            report,
        } => {
            let (config, records) = common.load()?;
            let (bundle, report_data) = train_pipeline(&records, &config)?;
            bundle
                .save(&model_out)
                .map_err(|e| e.context(format!("writing {}", model_out.display())))?;
            let report_path = report.unwrap_or_else(|| {
                let mut p = model_out.clone().into_os_string();
                p.push(".report.json");
                PathBuf::from(p)
            });
            write_json(&report_path, &report_data)?;
            let m = &report_data.test_metrics;
            say!(
                "test n={} mae={:.4} mse={:.4} rmse={:.4} pearson={}",
                m.n,
                m.mae,
                m.mse,
                m.rmse,
                m.pearson_r.map_or("undefined".to_string(), |r| format!("{r:.4}"))
            );
            say!("bundle {} report {}", model_out.display(), report_path.display());
        }
        Command::Predict { model, data, out } => {
            let bundle = PipelineBundle::load(&model)?;
            let records = read_records_path(&data)?;
            let predicted = bundle.predict(&records)?;
            #[derive(Serialize)]
            struct Row<'a> {
                id: &'a str,
                predicted: f64,
            }
            let rows: Vec<Row> = records
                .iter()
                .zip(&predicted)
                .map(|(r, &p)| Row {
                    id: &r.record_id,
                    predicted: p,
                })
                .collect();
            match out {
                Some(path) => {
                    write_csv_rows(&path, &rows)?;
                    say!("wrote {} predictions to {}", rows.len(), path.display());
                }
                None => {
                    say!("id,predicted");
                    for r in rows {
                        say!("{},{}", r.id, r.predicted);
                    }
                }
            }
        }
        Command::Benchmark {
            common,
            repetitions,
            maps,
            out_dir,
        } => {
            let (config, records) = common.load()?;
            let out_dir = out_dir
                .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| anyhow!("no output directory: pass --out-dir or set out_dir in the config"))?;
            let mut report = bench::run_benchmark(&records, &config, repetitions as usize, config.seed)?;
            if maps {
                let specs = FeatureMapSpec::benchmark_variants(config.pca_components)?;
                report.feature_maps = Some(bench::compare_feature_maps(&records, &config, &specs, config.seed)?);
            }
            let written = write_benchmark_files(&report, &out_dir)
                .map_err(|e| e.context(format!("writing into {}", out_dir.display())))?;
            say!("{:<10} {:>10} {:>10} {:>10}", "model", "mae", "mse", "rmse");
            for m in report.models.iter().chain(std::iter::once(&report.reference)) {
                say!(
                    "{:<10} {:>10.4} {:>10.4} {:>10.4}",
                    m.model, m.mae.mean, m.mse.mean, m.rmse.mean
                );
            }
            if let Some(cmp) = &report.feature_maps {
                say!("feature map winner: {}", cmp.winner);
            }
            say!("wrote {} files under {}", written.len(), out_dir.display());
        }
        Command::Kernel {
            common,
            set,
            sampled,
            shots,
            out,
        } => {
            let (mut config, records) = common.load()?;
            if sampled {
                config.kernel = KernelKind::Sampled;
            }
            if let Some(s) = shots {
                if !sampled && config.kernel != KernelKind::Sampled {
                    bail!("--shots only applies with --sampled");
                }
                config.shots = s;
            }
            config.validate()?;
            let seeds = RunSeeds::from_master(config.seed);
            let (train, test) = preprocess::split(&records, config.train_fraction, seeds.split)?;
            let prep = prepare(&train, &test, &config, seeds.vae)?;
            let (x, ids) = match set {
                Side::Test => (&prep.test.x[..], &prep.test.ids[..]),
                Side::Train => {
                    let n = prep.real_train_len();
                    (&prep.train.x[..n], &prep.train.ids[..n])
                }
            };
            let gram = gram_matrix(&config.feature_map_spec()?, x, ids, config.kernel_mode(seeds.kernel))?;
            let file = fs::File::create(&out)
                .map_err(|e| qkr::Error::from(e).context(format!("writing {}", out.display())))?;
            gram.write_csv(std::io::BufWriter::new(file))?;
            say!("wrote {0}x{0} kernel to {1}", gram.nrows(), out.display());
        }
        Command::Verify { model, data, out } => {
            let bundle = PipelineBundle::load(&model)?;
            let records = read_records_path(&data)?;
            let report = bench::verify_holdout(&bundle, &records)?;
            say!("id,measured,predicted,abs_error");
            for r in &report.rows {
                say!("{},{},{},{}", r.id, r.measured, r.predicted, r.abs_error);
            }
            say!("mae {:.6}", report.mae);
            if let Some(path) = out {
                write_csv_rows(&path, &report.rows)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
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
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            let internal = e
                .downcast_ref::<qkr::Error>()
                .is_some_and(|q| !q.is_input_error());
            eprintln!("error: {e}");
            ExitCode::from(if internal { 2 } else { 1 })
        }
    }
}
