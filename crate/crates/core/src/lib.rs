//! Chirped DFT-spread OFDM over doubly-selective channels, with OFDM, AFDM
//! and OTFS baselines, LMMSE/ML equalization, pairwise-error analysis and a
//! seeded Monte Carlo harness.

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod equalizers;
mod error;
pub mod harness;
pub mod modem;
pub mod numerics;
pub mod waveform;

pub use analysis::CurvePoint;
pub use channel::{ChannelRealization, ChannelSpec, DopplerModel, EffectiveChannel};
pub use equalizers::{EqualizerMethod, EqualizerOutput, OutputSnrReport};
pub use error::{Error, Result};
pub use harness::{Experiment, ExperimentConfig};
pub use modem::{Modem, Waveform};
pub use numerics::{Complex64, ComplexMatrix, SimRng};
pub use waveform::{Alphabet, FrameConfig, SymbolVector, TimeFrame};
