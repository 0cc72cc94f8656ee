use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use pyrite::config::{parse_config_with, RunConfig};
use pyrite::csvio::{self, MetricsRow};
use pyrite::engine::{run as engine_run, Stimuli};
use pyrite::error::{Error, Result};
use pyrite::experiments::{run_discrimination, run_recognition};
use pyrite::fabric::{apply_mismatch, build_network};
use pyrite::stimulus::{generate_pattern, SpikeTrain};
use pyrite::svg::{render_from_files, PlotKind};

#[derive(Parser)]
#[command(
    name = "pyrite",
    version,
    about = "Spiking-network simulator with local hysteretic plasticity"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one readout on a pattern and measure learning gain and
    /// selectivity.
    Recognition {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run N seed variants (base seed + i) and add a seed column to
        /// metrics.csv; per-seed outputs land in seed_<n>/ subdirectories.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Train two readouts on two patterns and test classification.
    Discrimination {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Raw run without any protocol: pattern 1 (plus the teacher if
    /// enabled) over engine.duration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a CSV file as a static SVG plot.
    Plot {
        /// Input CSV; for histograms `pre.csv,post.csv` renders both.
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Calcium,
    Histogram,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Recognition { config, out, seeds } => {
            let cfg = load_config(&config, RunConfig::recognition_defaults())?;
            run_sweep(&cfg, &out, seeds, |cfg, dir| {
                let report = run_recognition(cfg)?;
                csvio::write_recognition(&report, dir)?;
                println!(
                    "seed {}: L = {} D = {}",
                    cfg.engine.seed,
                    csvio::fmt_sig9(report.l),
                    csvio::fmt_sig9(report.d)
                );
                Ok(report.metrics_rows())
            })
        }
        Cmd::Discrimination { config, out, seeds } => {
            let cfg = load_config(&config, RunConfig::discrimination_defaults())?;
            run_sweep(&cfg, &out, seeds, |cfg, dir| {
                let report = run_discrimination(cfg)?;
                csvio::write_discrimination(&report, dir)?;
                println!(
                    "seed {}: winners {:?} correct {:?}",
                    cfg.engine.seed, report.winners, report.correct
                );
                Ok(report.metrics_rows())
            })
        }
        Cmd::Simulate { config, out } => {
            let cfg = load_config(&config, RunConfig::recognition_defaults())?;
            let mut net = build_network(&cfg.architecture(), &cfg.nominals())?;
            apply_mismatch(&mut net, &cfg.mismatch())?;
            let spec = cfg.pattern_spec();
            let pattern = generate_pattern(&spec)?;
            let input = if cfg.stimulus.periodic {
                pattern.tiled(spec.duration, cfg.engine.duration)
            } else {
                pattern
            };
            let teacher = if cfg.engine.teacher {
                cfg.teacher_train(cfg.engine.duration)?
                    .broadcast(cfg.architecture.n_readout)?
            } else {
                SpikeTrain::empty(cfg.architecture.n_readout)
            };
            let recording = engine_run(
                &mut net,
                &Stimuli { input, teacher },
                &cfg.engine_config(),
                cfg.engine.learning,
            )?;
            csvio::write_simulation(&recording, &out)?;
            println!(
                "simulated {} s: {} readout spikes",
                csvio::fmt_sig9(cfg.engine.duration),
                recording.spikes_readout.len()
            );
            Ok(())
        }
        Cmd::Plot { input, kind, out } => {
            let kind = match kind {
                KindArg::Calcium => PlotKind::Calcium,
                KindArg::Histogram => PlotKind::Histogram,
            };
            let svg = render_from_files(&input, kind)?;
            csvio::write_file(&out, &svg)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn load_config(path: &Path, defaults: RunConfig) -> Result<RunConfig> {
    let text = csvio::read_file(path)?;
    parse_config_with(&text, &defaults)
}

/// Runs one experiment per seed variant. Single runs write directly into
/// `out`; sweeps write per-seed subdirectories plus a merged metrics.csv
/// with the seed column.
fn run_sweep(
    cfg: &RunConfig,
    out: &Path,
    seeds: Option<u64>,
    mut runner: impl FnMut(&RunConfig, &Path) -> Result<Vec<(String, f64)>>,
) -> Result<()> {
    match seeds {
        None => {
            runner(cfg, out)?;
            Ok(())
        }
        Some(n) => {
            if n == 0 {
                return Err(Error::invalid("--seeds", "must be >= 1"));
            }
            let mut merged = Vec::new();
            for i in 0..n {
                let variant = cfg.with_seed_offset(i);
                let dir = out.join(format!("seed_{i}"));
                let rows = runner(&variant, &dir)?;
                for (name, value) in rows {
                    merged.push(MetricsRow {
                        name,
                        value,
                        seed: Some(variant.engine.seed),
                    });
                }
            }
            csvio::write_file(&out.join("metrics.csv"), &csvio::metrics_csv(&merged))
        }
    }
}
