//! Doubly-selective multipath channel: one tap per integer delay, each tap
//! rotating at its own normalized Doppler frequency.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::Modem;
use crate::numerics::{complex_gaussian, cyclic_shift_matrix, ComplexMatrix, SimRng};
use crate::waveform::TimeFrame;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DopplerModel {
    /// Each path draws its Doppler uniformly on `[−ν_max, ν_max]`.
    UniformPerPath,
    /// Paths alternate between `+ν_max` and `−ν_max`.
    FixedExtremes,
    Static,
}

impl DopplerModel {
    pub fn name(self) -> &'static str {
        match self {
            DopplerModel::UniformPerPath => "uniform-per-path",
            DopplerModel::FixedExtremes => "fixed-extremes",
            DopplerModel::Static => "static",
        }
    }
}

impl fmt::Display for DopplerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DopplerModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        [
            DopplerModel::UniformPerPath,
            DopplerModel::FixedExtremes,
            DopplerModel::Static,
        ]
        .into_iter()
        .find(|m| m.name() == key)
        .ok_or_else(|| Error::config(format!("unknown doppler model '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    /// Number of taps, `L + 1`.
    pub n_paths: usize,
    pub carrier_hz: f64,
    pub subcarrier_hz: f64,
    pub velocity_mps: f64,
    pub doppler_model: DopplerModel,
    /// Replaces the value derived from carrier, velocity and spacing.
    pub doppler_norm_max: Option<f64>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            n_paths: 3,
            carrier_hz: 4e9,
            subcarrier_hz: 15e3,
            velocity_mps: 500.0 / 3.6,
            doppler_model: DopplerModel::UniformPerPath,
            doppler_norm_max: None,
        }
    }
}

impl ChannelSpec {
    /// Maximum Doppler shift in Hz.
    pub fn doppler_hz(&self) -> f64 {
        self.carrier_hz * self.velocity_mps / SPEED_OF_LIGHT
    }

    /// Maximum Doppler normalized to the subcarrier spacing.
    pub fn nu_max(&self) -> f64 {
        self.doppler_norm_max
            .unwrap_or_else(|| self.doppler_hz() / self.subcarrier_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        for (key, v) in [("carrier_hz", self.carrier_hz), ("velocity_mps", self.velocity_mps)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{key} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.subcarrier_hz.is_finite() && self.subcarrier_hz > 0.0) {
            return Err(Error::config(format!(
                "subcarrier_hz must be positive, got {}",
                self.subcarrier_hz
            )));
        }
        let nu = self.nu_max();
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::config(format!(
                "doppler_norm_max must be non-negative, got {nu}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathTap {
    pub delay_samples: usize,
    pub gain: Complex64,
    pub doppler_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathTap>,
}

impl ChannelRealization {
    /// Path `p` gets delay `p`.
    pub fn new(gains: &[Complex64], dopplers: &[f64]) -> Result<Self> {
        if gains.len() != dopplers.len() || gains.is_empty() {
            return Err(Error::dim(format!(
                "{} gains and {} Doppler values",
                gains.len(),
                dopplers.len()
            )));
        }
        let paths = gains
            .iter()
            .zip(dopplers)
            .enumerate()
            .map(|(p, (&gain, &doppler_norm))| PathTap {
                delay_samples: p,
                gain,
                doppler_norm,
            })
            .collect();
        Ok(Self { paths })
    }

    /// Unit single-tap channel.
    pub fn identity() -> Self {
        Self::new(&[Complex64::new(1.0, 0.0)], &[0.0]).expect("one path")
    }

    /// Largest delay `L`.
    pub fn order(&self) -> usize {
        self.paths.iter().map(|p| p.delay_samples).max().unwrap_or(0)
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.gain).collect()
    }

    pub fn dopplers(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.doppler_norm).collect()
    }
}

pub fn sample_channel(spec: &ChannelSpec, rng: &mut SimRng) -> ChannelRealization {
    let n = spec.n_paths;
    let nu = spec.nu_max();
    let gains = complex_gaussian(n, 1.0 / n as f64, rng);
    let dopplers: Vec<f64> = (0..n)
        .map(|p| match spec.doppler_model {
            DopplerModel::UniformPerPath => rng.uniform(-nu, nu),
            DopplerModel::FixedExtremes if p % 2 == 0 => nu,
            DopplerModel::FixedExtremes => -nu,
            DopplerModel::Static => 0.0,
        })
        .collect();
    ChannelRealization::new(&gains, &dopplers).expect("matching lengths")
}

/// Per-sample tap gain `h_l·e^{j2πν_l·n/N}`; `n` may be negative inside the CP.
fn tap_gain(tap: &PathTap, n: isize, n_fft: usize) -> Complex64 {
    tap.gain * Complex64::from_polar(1.0, 2.0 * PI * tap.doppler_norm * n as f64 / n_fft as f64)
}

fn check_delays(real: &ChannelRealization, n_fft: usize) -> Result<()> {
    if real.order() >= n_fft {
        return Err(Error::dim(format!(
            "channel delay {} does not fit a frame of {n_fft}",
            real.order()
        )));
    }
    Ok(())
}

/// Dense `H_t = Σ h_l·D_l·Πˡ`.
pub fn build_time_channel(real: &ChannelRealization, n_fft: usize) -> Result<ComplexMatrix> {
    check_delays(real, n_fft)?;
    let mut h = ComplexMatrix::zeros(n_fft, n_fft);
    for tap in &real.paths {
        let shift = cyclic_shift_matrix(n_fft, tap.delay_samples);
        for r in 0..n_fft {
            let d = tap_gain(tap, r as isize, n_fft);
            for (dst, &p) in h.row_mut(r).iter_mut().zip(shift.row(r)) {
                *dst += d * p;
            }
        }
    }
    Ok(h)
}

/// `H_t` stored as its `L + 1` non-zero cyclic diagonals.
#[derive(Clone, Debug)]
pub struct TimeVaryingChannel {
    n_fft: usize,
    taps: Vec<(usize, Vec<Complex64>)>,
}

impl TimeVaryingChannel {
    pub fn new(real: &ChannelRealization, n_fft: usize) -> Result<Self> {
        check_delays(real, n_fft)?;
        let taps = real
            .paths
            .iter()
            .map(|tap| {
                let g = (0..n_fft).map(|n| tap_gain(tap, n as isize, n_fft)).collect();
                (tap.delay_samples, g)
            })
            .collect();
        Ok(Self { n_fft, taps })
    }

    pub fn size(&self) -> usize {
        self.n_fft
    }

    /// `H_t·s`.
    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_fft;
        assert_eq!(s.len(), n, "channel input length");
        let mut r = vec![Complex64::new(0.0, 0.0); n];
        for (delay, g) in &self.taps {
            for (i, out) in r.iter_mut().enumerate() {
                *out += g[i] * s[(i + n - delay) % n];
            }
        }
        r
    }

    /// `H_tᴴ·r`.
    pub fn apply_adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_fft;
        assert_eq!(r.len(), n, "channel input length");
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        for (delay, g) in &self.taps {
            for (i, v) in r.iter().enumerate() {
                s[(i + n - delay) % n] += g[i].conj() * v;
            }
        }
        s
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let n = self.n_fft;
        let mut h = ComplexMatrix::zeros(n, n);
        for (delay, g) in &self.taps {
            for (i, gi) in g.iter().enumerate() {
                h[(i, (i + n - delay) % n)] += gi;
            }
        }
        h
    }

    /// `H_tᴴ·H_t`, non-zero only within `L` of the cyclic diagonal.
    pub fn normal_matrix(&self) -> ComplexMatrix {
        let n = self.n_fft;
        let mut b = ComplexMatrix::zeros(n, n);
        // (HᴴH)[a,b] = Σ_i conj(H[i,a])·H[i,b]; row i touches columns i−l
        for i in 0..n {
            for (da, ga) in &self.taps {
                let a = (i + n - da) % n;
                for (db, gb) in &self.taps {
                    let c = (i + n - db) % n;
                    b[(a, c)] += ga[i].conj() * gb[i];
                }
            }
        }
        b
    }
}

/// Passes a CP-prefixed frame through the channel, strips the CP and adds
/// complex white noise of variance `noise_var` (none when it is zero).
pub fn apply_channel(
    frame: &TimeFrame,
    real: &ChannelRealization,
    noise_var: f64,
    rng: &mut SimRng,
) -> Result<TimeFrame> {
    let cp = frame.cp_len;
    let order = real.order();
    if cp < order {
        return Err(Error::InvalidInput(format!(
            "cyclic prefix of {cp} samples is shorter than channel order {order}"
        )));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::InvalidInput(format!("noise variance {noise_var}")));
    }
    let n = frame.samples.len() - cp;
    check_delays(real, n)?;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for tap in &real.paths {
        for (k, o) in out.iter_mut().enumerate() {
            let idx = cp + k - tap.delay_samples;
            *o += tap_gain(tap, k as isize, n) * frame.samples[idx];
        }
    }
    if noise_var > 0.0 {
        for (o, w) in out.iter_mut().zip(complex_gaussian(n, noise_var, rng)) {
            *o += w;
        }
    }
    Ok(TimeFrame::without_cp(out))
}

#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub matrix: ComplexMatrix,
    pub noise_variance: f64,
}

impl EffectiveChannel {
    pub fn new(matrix: ComplexMatrix, noise_variance: f64) -> Self {
        Self { matrix, noise_variance }
    }

    pub fn observations(&self) -> usize {
        self.matrix.rows()
    }

    pub fn symbols(&self) -> usize {
        self.matrix.cols()
    }
}

/// `R·H_t·T` for the given modem and realization.
pub fn assemble_effective(modem: &Modem, real: &ChannelRealization, noise_variance: f64) -> Result<EffectiveChannel> {
    let h = TimeVaryingChannel::new(real, modem.samples())?;
    let k = modem.symbols();
    let columns: Vec<Vec<Complex64>> = (0..k)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); k];
            e[j] = Complex64::new(1.0, 0.0);
            modem.receive(&h.apply(&modem.transmit(&e)))
        })
        .collect();
    Ok(EffectiveChannel::new(
        ComplexMatrix::from_columns(modem.samples(), &columns)?,
        noise_variance,
    ))
}
