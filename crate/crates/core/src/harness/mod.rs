//! Configuration, Monte Carlo drivers and CSV output.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{load_config, parse_snr_grid, Experiment, ExperimentConfig};
pub use report::{emit_csv, render_csv};
pub use runner::{
    noise_variance, run, run_ber, run_bound, run_diversity, run_outsnr, run_papr, BerCurve, BerPoint, BoundResult,
    DiversityResult, ExperimentResult, OutSnrSummary, PaprResult, PaprSeries,
};
