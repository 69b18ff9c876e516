use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chirpofdm::harness::{emit_csv, render_csv, run};
use chirpofdm::{Error, Experiment, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

/// Monte Carlo experiments for chirped DFT-s-OFDM and baseline waveforms.
#[derive(Parser)]
#[command(name = "chirpofdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against SNR for each waveform
    Ber(Overrides),
    /// PAPR samples and their CCDF
    Papr(Overrides),
    /// LMMSE output SNR per symbol
    Outsnr(Overrides),
    /// ML union bound and diversity order
    Bound(Overrides),
    /// Diversity order only
    Diversity(Overrides),
}

/// Flags applied after the config file, so they win.
#[derive(Args)]
struct Overrides {
    /// `key = value` config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Waveform to include; repeat for several
    #[arg(long = "waveform", value_name = "NAME")]
    waveforms: Vec<String>,
    /// SNR grid as start:end:step in dB
    #[arg(long, value_name = "A:B:STEP")]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    workers: Option<usize>,
    /// Any other config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Command {
    fn split(self) -> (Experiment, Overrides) {
        match self {
            Command::Ber(o) => (Experiment::Ber, o),
            Command::Papr(o) => (Experiment::Papr, o),
            Command::Outsnr(o) => (Experiment::OutSnr, o),
            Command::Bound(o) => (Experiment::Bound, o),
            Command::Diversity(o) => (Experiment::Diversity, o),
        }
    }
}

fn build_config(experiment: Experiment, o: &Overrides) -> chirpofdm::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &o.config {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        cfg.apply_text(&text)?;
    }
    cfg.experiment = experiment;
    for kv in &o.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    if !o.waveforms.is_empty() {
        cfg.set("waveforms", &o.waveforms.join(","))?;
    }
    if let Some(snr) = &o.snr {
        cfg.set("snr_grid_db", snr)?;
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = o.trials {
        cfg.trials = trials;
    }
    if let Some(workers) = o.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &o.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => 3,
        Error::Io { .. } => 4,
        _ => 2,
    }
}

fn execute(experiment: Experiment, o: &Overrides) -> chirpofdm::Result<()> {
    let cfg = build_config(experiment, o)?;
    let result = run(&cfg)?;
    match &cfg.output_path {
        Some(path) => emit_csv(&cfg, &result, path),
        None => std::io::stdout()
            .lock()
            .write_all(render_csv(&cfg, &result).as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn main() -> ExitCode {
    let (experiment, overrides) = Cli::parse().command.split();
    match execute(experiment, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("chirpofdm: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
