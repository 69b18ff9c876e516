//! Experiment configuration: flat `key = value` lines, `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{AfdmConfig, OtfsConfig};
use crate::channel::ChannelSpec;
use crate::equalizers::EqualizerMethod;
use crate::error::{Error, Result};
use crate::modem::{Modem, Waveform};
use crate::waveform::FrameConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Ber,
    Papr,
    OutSnr,
    Bound,
    Diversity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ber => "ber",
            Experiment::Papr => "papr",
            Experiment::OutSnr => "outsnr",
            Experiment::Bound => "bound",
            Experiment::Diversity => "diversity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        [
            Experiment::Ber,
            Experiment::Papr,
            Experiment::OutSnr,
            Experiment::Bound,
            Experiment::Diversity,
        ]
        .into_iter()
        .find(|e| e.name() == key)
        .ok_or_else(|| Error::config(format!("unknown experiment '{s}'")))
    }
}

/// Fully resolved experiment settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub waveforms: Vec<Waveform>,
    pub frame: FrameConfig,
    pub channel: ChannelSpec,
    pub afdm_c1: Option<f64>,
    pub afdm_c2: Option<f64>,
    pub otfs_delay_bins: Option<usize>,
    pub otfs_doppler_bins: Option<usize>,
    pub snr_grid_db: Vec<f64>,
    /// Frames per SNR point (ber), frames per waveform (papr) or channel
    /// draws (outsnr).
    pub trials: u64,
    /// Per-point early stop once this many bit errors have accumulated.
    pub max_bit_errors: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub equalizer: EqualizerMethod,
    /// Worker threads; 0 lets the thread pool decide. Never affects results.
    pub workers: usize,
    pub oversample: usize,
    /// Operating point of the output-SNR experiment.
    pub input_snr_db: f64,
    /// Per-path Doppler used for the pairwise analysis; zeros when unset.
    pub bound_dopplers: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Ber,
            waveforms: Waveform::ALL.to_vec(),
            frame: FrameConfig::default(),
            channel: ChannelSpec::default(),
            afdm_c1: None,
            afdm_c2: None,
            otfs_delay_bins: None,
            otfs_doppler_bins: None,
            snr_grid_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            trials: 10_000,
            max_bit_errors: 500,
            seed: 1,
            output_path: None,
            equalizer: EqualizerMethod::Lmmse,
            workers: 0,
            oversample: 1,
            input_snr_db: 15.0,
            bound_dopplers: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "experiment",
    "waveforms",
    "n_fft",
    "m_dft",
    "chirp_a",
    "chirp_b",
    "cp_len",
    "alphabet",
    "n_paths",
    "carrier_hz",
    "subcarrier_hz",
    "velocity_mps",
    "doppler_model",
    "doppler_norm_max",
    "afdm_c1",
    "afdm_c2",
    "otfs_delay_bins",
    "otfs_doppler_bins",
    "snr_grid_db",
    "trials",
    "max_bit_errors",
    "seed",
    "output_path",
    "equalizer",
    "workers",
    "oversample",
    "input_snr_db",
    "bound_dopplers",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// `A:B:STEP` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let a: f64 = parse_num("snr_grid_db", a)?;
            let b: f64 = parse_num("snr_grid_db", b)?;
            let step: f64 = parse_num("snr_grid_db", step)?;
            if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
                return Err(Error::config(format!("snr_grid_db: bad range '{value}'")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // rounding keeps 0.1-style steps free of binary noise in output
            Ok((0..count)
                .map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        [_] => parse_list("snr_grid_db", value),
        _ => Err(Error::config(format!(
            "snr_grid_db: expected A:B:STEP or a list, got '{value}'"
        ))),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Applies one setting; keys are the same in files and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let opt_f64 = |v: &str| -> Result<Option<f64>> {
            if v.is_empty() || v == "auto" {
                Ok(None)
            } else {
                parse_num(key, v).map(Some)
            }
        };
        let opt_usize = |v: &str| -> Result<Option<usize>> {
            if v.is_empty() || v == "auto" {
                Ok(None)
            } else {
                parse_num(key, v).map(Some)
            }
        };
        match key {
            "experiment" => self.experiment = v.parse()?,
            "waveforms" => {
                self.waveforms = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "n_fft" => self.frame.n_fft = parse_num(key, v)?,
            "m_dft" => self.frame.m_dft = parse_num(key, v)?,
            "chirp_a" => self.frame.chirp_a = parse_num(key, v)?,
            "chirp_b" => self.frame.chirp_b = parse_num(key, v)?,
            "cp_len" => self.frame.cp_len = parse_num(key, v)?,
            "alphabet" => self.frame.alphabet = v.parse()?,
            "n_paths" => self.channel.n_paths = parse_num(key, v)?,
            "carrier_hz" => self.channel.carrier_hz = parse_num(key, v)?,
            "subcarrier_hz" => self.channel.subcarrier_hz = parse_num(key, v)?,
            "velocity_mps" => self.channel.velocity_mps = parse_num(key, v)?,
            "doppler_model" => self.channel.doppler_model = v.parse()?,
            "doppler_norm_max" => self.channel.doppler_norm_max = opt_f64(v)?,
            "afdm_c1" => self.afdm_c1 = opt_f64(v)?,
            "afdm_c2" => self.afdm_c2 = opt_f64(v)?,
            "otfs_delay_bins" => self.otfs_delay_bins = opt_usize(v)?,
            "otfs_doppler_bins" => self.otfs_doppler_bins = opt_usize(v)?,
            "snr_grid_db" => self.snr_grid_db = parse_snr_grid(v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "max_bit_errors" => self.max_bit_errors = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "output_path" => self.output_path = (!v.is_empty()).then(|| PathBuf::from(v)),
            "equalizer" => self.equalizer = v.parse()?,
            "workers" => self.workers = parse_num(key, v)?,
            "oversample" => self.oversample = parse_num(key, v)?,
            "input_snr_db" => self.input_snr_db = parse_num(key, v)?,
            "bound_dopplers" => {
                self.bound_dopplers = if v.is_empty() || v == "zero" {
                    None
                } else {
                    Some(parse_list(key, v)?)
                }
            }
            other => return Err(Error::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::config(format!("line {}: {}", lineno + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    pub fn afdm_config(&self) -> AfdmConfig {
        let auto = AfdmConfig::for_doppler(self.frame.n_fft, self.channel.nu_max());
        AfdmConfig {
            n_fft: self.frame.n_fft,
            c1: self.afdm_c1.unwrap_or(auto.c1),
            c2: self.afdm_c2.unwrap_or(auto.c2),
        }
    }

    /// Grid defaults to 16 delay bins when that divides the frame.
    pub fn otfs_config(&self) -> OtfsConfig {
        let n = self.frame.n_fft;
        let delay = self
            .otfs_delay_bins
            .or_else(|| self.otfs_doppler_bins.filter(|&d| d > 0).map(|d| n / d))
            .unwrap_or(if n.is_multiple_of(16) { 16 } else { n });
        let doppler = self.otfs_doppler_bins.unwrap_or(n.checked_div(delay).unwrap_or(0));
        OtfsConfig {
            delay_bins: delay,
            doppler_bins: doppler,
        }
    }

    pub fn bound_dopplers(&self) -> Vec<f64> {
        self.bound_dopplers
            .clone()
            .unwrap_or_else(|| vec![0.0; self.channel.n_paths])
    }

    pub fn modem(&self, waveform: Waveform) -> Result<Modem> {
        Modem::new(waveform, &self.frame, &self.afdm_config(), &self.otfs_config())
    }

    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        self.channel.validate()?;
        if self.waveforms.is_empty() {
            return Err(Error::config("waveforms: at least one waveform is required"));
        }
        for &w in &self.waveforms {
            self.modem(w)
                .map_err(|e| Error::config(format!("waveforms: {w}: {}", strip_prefix(e))))?;
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        if self.max_bit_errors == 0 {
            return Err(Error::config("max_bit_errors must be positive"));
        }
        if self.oversample == 0 {
            return Err(Error::config("oversample must be positive"));
        }
        if !self.input_snr_db.is_finite() {
            return Err(Error::config("input_snr_db must be finite"));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("snr_grid_db must be finite"));
        }
        if matches!(self.experiment, Experiment::Ber | Experiment::Bound) && self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db must not be empty"));
        }
        if self.channel.n_paths > self.frame.n_fft {
            return Err(Error::config(format!(
                "n_paths: {} paths do not fit a frame of {}",
                self.channel.n_paths, self.frame.n_fft
            )));
        }
        if self.experiment == Experiment::Ber && self.frame.cp_len + 1 < self.channel.n_paths {
            return Err(Error::config(format!(
                "cp_len: {} samples cannot cover {} paths",
                self.frame.cp_len, self.channel.n_paths
            )));
        }
        if let Some(d) = &self.bound_dopplers {
            if d.len() != self.channel.n_paths {
                return Err(Error::config(format!(
                    "bound_dopplers: {} values for {} paths",
                    d.len(),
                    self.channel.n_paths
                )));
            }
        }
        Ok(())
    }

    /// Every setting that can influence results, in a fixed order. Worker
    /// count and output path are left out so they never change output.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let otfs = self.otfs_config();
        let afdm = self.afdm_config();
        let dopplers = self.bound_dopplers();
        vec![
            ("experiment", self.experiment.to_string()),
            ("waveforms", join(&self.waveforms)),
            ("n_fft", self.frame.n_fft.to_string()),
            ("m_dft", self.frame.m_dft.to_string()),
            ("chirp_a", self.frame.chirp_a.to_string()),
            ("chirp_b", self.frame.chirp_b.to_string()),
            ("cp_len", self.frame.cp_len.to_string()),
            ("alphabet", self.frame.alphabet.to_string()),
            ("n_paths", self.channel.n_paths.to_string()),
            ("carrier_hz", self.channel.carrier_hz.to_string()),
            ("subcarrier_hz", self.channel.subcarrier_hz.to_string()),
            ("velocity_mps", self.channel.velocity_mps.to_string()),
            ("doppler_model", self.channel.doppler_model.to_string()),
            ("doppler_norm_max", self.channel.nu_max().to_string()),
            ("afdm_c1", afdm.c1.to_string()),
            ("afdm_c2", afdm.c2.to_string()),
            ("otfs_delay_bins", otfs.delay_bins.to_string()),
            ("otfs_doppler_bins", otfs.doppler_bins.to_string()),
            ("snr_grid_db", join(&self.snr_grid_db)),
            ("trials", self.trials.to_string()),
            ("max_bit_errors", self.max_bit_errors.to_string()),
            ("seed", self.seed.to_string()),
            ("equalizer", self.equalizer.to_string()),
            ("oversample", self.oversample.to_string()),
            ("input_snr_db", self.input_snr_db.to_string()),
            ("bound_dopplers", join(&dopplers)),
        ]
    }
}

/// Drops the "configuration error: " prefix when nesting messages.
fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg.frame.n_fft, 256);
        assert_eq!(cfg.frame.m_dft, 64);
        assert!((cfg.frame.chirp_rate().unwrap() - 1.0 / 256.0).abs() < 1e-18);
        assert_eq!(cfg.frame.alphabet, crate::waveform::Alphabet::Qpsk);
        assert_eq!(cfg.channel.n_paths, 3);
        assert!((cfg.channel.velocity_mps * 3.6 - 500.0).abs() < 1e-9);
        assert_eq!(cfg.channel.carrier_hz, 4e9);
        assert_eq!(cfg.channel.subcarrier_hz, 15e3);
        assert_eq!(
            cfg.otfs_config(),
            OtfsConfig {
                delay_bins: 16,
                doppler_bins: 16
            }
        );
    }

    #[test]
    fn non_divisible_frame_is_named() {
        let err = ExperimentConfig::parse("n_fft = 255\nm_dft = 64").unwrap_err();
        assert!(err.to_string().contains("N not divisible by M"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("n_fft = 64\nbogus_key = 3").unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn parsing_is_deterministic() {
        let text = "waveforms = ofdm, afdm\nsnr_grid_db = 0:3:1\nseed = 9";
        let a = ExperimentConfig::parse(text).unwrap();
        let b = ExperimentConfig::parse(text).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.waveforms, vec![Waveform::Ofdm, Waveform::Afdm]);
        assert_eq!(a.snr_grid_db, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn snr_grids() {
        assert_eq!(parse_snr_grid("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_snr_grid("5, 7.5").unwrap(), vec![5.0, 7.5]);
        assert!(parse_snr_grid("3:1:1").is_err());
        assert!(parse_snr_grid("0:1:0").is_err());
    }

    #[test]
    fn every_key_is_settable_and_listed() {
        let cfg = ExperimentConfig::default();
        let listed: Vec<&str> = cfg.entries().iter().map(|(k, _)| *k).collect();
        for key in CONFIG_KEYS {
            if *key != "workers" && *key != "output_path" {
                assert!(listed.contains(key), "{key}");
            }
        }
        // round trip through the listed values
        let text: String = cfg.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back.entries(), cfg.entries());
    }

    #[test]
    fn workers_do_not_appear_in_entries() {
        let mut cfg = ExperimentConfig::default();
        let before = cfg.entries();
        cfg.set("workers", "8").unwrap();
        assert_eq!(cfg.entries(), before);
    }

    #[test]
    fn short_cp_rejected_for_ber() {
        let err = ExperimentConfig::parse("cp_len = 1").unwrap_err();
        assert!(err.to_string().contains("cp_len"), "{err}");
    }

    #[test]
    fn bound_dopplers_must_match_paths() {
        assert!(ExperimentConfig::parse("experiment = bound\nbound_dopplers = 0.1, 0.2").is_err());
        let cfg = ExperimentConfig::parse("experiment = bound\nbound_dopplers = 0.1, 0.2, 0").unwrap();
        assert_eq!(cfg.bound_dopplers(), vec![0.1, 0.2, 0.0]);
    }
}
