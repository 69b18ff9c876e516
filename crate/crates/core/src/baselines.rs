//! Comparison modems: AFDM (DAFT-domain chirp multiplexing) and OTFS
//! (delay-Doppler grid, inverse Zak transform with rectangular pulses).
//!
//! Both share the single-CP frame structure of the DFT-spread family so the
//! same circulant time-domain channel applies to every waveform.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::modem::Modem;
use crate::numerics::{fft_unitary, ifft_unitary, ComplexMatrix};
use crate::waveform::TimeFrame;

#[derive(Clone, Debug, PartialEq)]
pub struct AfdmConfig {
    pub n_fft: usize,
    /// Pre-chirp rate.
    pub c1: f64,
    /// Post-chirp rate.
    pub c2: f64,
}

impl AfdmConfig {
    /// Rates tuned to a maximum normalized Doppler `nu_max`:
    /// `c1 = (2⌈ν_max⌉ + 1)/(2N)` and an irrational `c2 = ((√5−1)/2)/(2N²)`.
    pub fn for_doppler(n_fft: usize, nu_max: f64) -> Self {
        let k_max = nu_max.abs().ceil();
        let n = n_fft as f64;
        Self {
            n_fft,
            c1: (2.0 * k_max + 1.0) / (2.0 * n),
            c2: ((5f64.sqrt() - 1.0) / 2.0) / (2.0 * n * n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 {
            return Err(Error::config("AFDM frame length must be positive"));
        }
        if self.c1.is_nan() || self.c1 < 0.0 || !self.c2.is_finite() {
            return Err(Error::config(format!(
                "AFDM chirp rates must be finite with c1 >= 0 (c1={}, c2={})",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    /// Diagonal of `Λ_c = diag(e^{−j2πcn²})`.
    pub(crate) fn lambda(n_fft: usize, c: f64) -> Vec<Complex64> {
        (0..n_fft)
            .map(|n| {
                let n = n as f64;
                Complex64::from_polar(1.0, -2.0 * PI * (c * n * n).rem_euclid(1.0))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtfsConfig {
    pub delay_bins: usize,
    pub doppler_bins: usize,
}

impl Default for OtfsConfig {
    fn default() -> Self {
        Self {
            delay_bins: 16,
            doppler_bins: 16,
        }
    }
}

impl OtfsConfig {
    pub fn frame_len(&self) -> usize {
        self.delay_bins * self.doppler_bins
    }

    pub fn validate(&self, n_fft: usize) -> Result<()> {
        if self.delay_bins == 0 || self.doppler_bins == 0 {
            return Err(Error::config("OTFS grid dimensions must be positive"));
        }
        if self.frame_len() != n_fft {
            return Err(Error::config(format!(
                "OTFS grid {}x{} does not match frame length {n_fft}",
                self.delay_bins, self.doppler_bins
            )));
        }
        Ok(())
    }
}

pub(crate) fn afdm_transmit(x: &[Complex64], l1: &[Complex64], l2: &[Complex64]) -> Vec<Complex64> {
    let mut s: Vec<Complex64> = x.iter().zip(l2).map(|(v, l)| v * l.conj()).collect();
    ifft_unitary(&mut s);
    for (v, l) in s.iter_mut().zip(l1) {
        *v *= l.conj();
    }
    s
}

pub(crate) fn afdm_receive(r: &[Complex64], l1: &[Complex64], l2: &[Complex64]) -> Vec<Complex64> {
    let mut y: Vec<Complex64> = r.iter().zip(l1).map(|(v, l)| v * l).collect();
    fft_unitary(&mut y);
    for (v, l) in y.iter_mut().zip(l2) {
        *v *= l;
    }
    y
}

/// `s = Λ_{c1}ᴴ·F_Nᴴ·Λ_{c2}ᴴ·x`, with a cyclic prefix when `cp_len > 0`.
pub fn afdm_modulate(cfg: &AfdmConfig, x: &[Complex64], cp_len: usize) -> Result<TimeFrame> {
    cfg.validate()?;
    if x.len() != cfg.n_fft {
        return Err(Error::dim(format!(
            "{} symbols for AFDM frame of {}",
            x.len(),
            cfg.n_fft
        )));
    }
    let l1 = AfdmConfig::lambda(cfg.n_fft, cfg.c1);
    let l2 = AfdmConfig::lambda(cfg.n_fft, cfg.c2);
    TimeFrame::with_cp(afdm_transmit(x, &l1, &l2), cp_len)
}

/// Discrete affine Fourier transform `Λ_{c2}·F_N·Λ_{c1}` of the frame body.
pub fn afdm_demodulate(cfg: &AfdmConfig, frame: &TimeFrame) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let body = frame.body();
    if body.len() != cfg.n_fft {
        return Err(Error::dim(format!(
            "frame body of {} samples, expected {}",
            body.len(),
            cfg.n_fft
        )));
    }
    let l1 = AfdmConfig::lambda(cfg.n_fft, cfg.c1);
    let l2 = AfdmConfig::lambda(cfg.n_fft, cfg.c2);
    Ok(afdm_receive(body, &l1, &l2))
}

/// Delay-Doppler symbols laid out row-major as `x[m·doppler_bins + k]`
/// become time samples `s[k'·delay_bins + m]`.
pub(crate) fn otfs_transmit(x: &[Complex64], cfg: &OtfsConfig) -> Vec<Complex64> {
    let (m_bins, n_bins) = (cfg.delay_bins, cfg.doppler_bins);
    let mut s = vec![Complex64::new(0.0, 0.0); m_bins * n_bins];
    let mut row = vec![Complex64::new(0.0, 0.0); n_bins];
    for m in 0..m_bins {
        row.copy_from_slice(&x[m * n_bins..(m + 1) * n_bins]);
        ifft_unitary(&mut row);
        for (k, v) in row.iter().enumerate() {
            s[k * m_bins + m] = *v;
        }
    }
    s
}

pub(crate) fn otfs_receive(r: &[Complex64], cfg: &OtfsConfig) -> Vec<Complex64> {
    let (m_bins, n_bins) = (cfg.delay_bins, cfg.doppler_bins);
    let mut y = vec![Complex64::new(0.0, 0.0); m_bins * n_bins];
    let mut row = vec![Complex64::new(0.0, 0.0); n_bins];
    for m in 0..m_bins {
        for (k, v) in row.iter_mut().enumerate() {
            *v = r[k * m_bins + m];
        }
        fft_unitary(&mut row);
        y[m * n_bins..(m + 1) * n_bins].copy_from_slice(&row);
    }
    y
}

/// Inverse Zak transform with rectangular pulses and one CP per frame.
pub fn otfs_modulate(cfg: &OtfsConfig, x_dd: &[Complex64], cp_len: usize) -> Result<TimeFrame> {
    cfg.validate(x_dd.len())?;
    TimeFrame::with_cp(otfs_transmit(x_dd, cfg), cp_len)
}

/// Zak transform of the frame body back onto the delay-Doppler grid.
pub fn otfs_demodulate(cfg: &OtfsConfig, frame: &TimeFrame) -> Result<Vec<Complex64>> {
    let body = frame.body();
    cfg.validate(body.len())?;
    Ok(otfs_receive(body, cfg))
}

/// `receiver · H_t · transmitter` for any modem, as a dense matrix.
pub fn effective_channel_for(modem: &Modem, h_t: &ComplexMatrix, noise_variance: f64) -> Result<EffectiveChannel> {
    let n = modem.samples();
    if h_t.rows() != n || h_t.cols() != n {
        return Err(Error::dim(format!(
            "time channel is {}x{}, modem frame is {n}",
            h_t.rows(),
            h_t.cols()
        )));
    }
    let columns: Vec<Vec<Complex64>> = (0..modem.symbols())
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); modem.symbols()];
            e[k] = Complex64::new(1.0, 0.0);
            let s = modem.transmit(&e);
            let r = h_t.mul_vec(&s)?;
            Ok(modem.receive(&r))
        })
        .collect::<Result<_>>()?;
    Ok(EffectiveChannel::new(
        ComplexMatrix::from_columns(n, &columns)?,
        noise_variance,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_gaussian, energy, max_abs_diff, unitary_dft, SimRng};
    use crate::waveform::{modulate, DftsVariant, FrameConfig};

    #[test]
    fn zero_rate_afdm_is_ofdm() {
        let cfg = AfdmConfig {
            n_fft: 32,
            c1: 0.0,
            c2: 0.0,
        };
        let x = complex_gaussian(32, 1.0, &mut SimRng::new(1, 0));
        let a = afdm_modulate(&cfg, &x, 0).unwrap();
        let fc = FrameConfig {
            n_fft: 32,
            m_dft: 32,
            ..FrameConfig::default()
        };
        let o = modulate(&fc, &x, DftsVariant::Ofdm, false).unwrap();
        assert_eq!(a.samples, o.samples);
    }

    #[test]
    fn afdm_is_unitary_and_invertible() {
        let cfg = AfdmConfig::for_doppler(64, 2.0 / 15.0);
        assert!((cfg.c1 - 3.0 / 128.0).abs() < 1e-15);
        let x = complex_gaussian(64, 1.0, &mut SimRng::new(2, 0));
        let frame = afdm_modulate(&cfg, &x, 3).unwrap();
        assert!((energy(frame.body()) - energy(&x)).abs() < 1e-10);
        let back = afdm_demodulate(&cfg, &frame).unwrap();
        assert!(max_abs_diff(&back, &x) < 1e-12);
    }

    #[test]
    fn afdm_matches_dense_definition() {
        let cfg = AfdmConfig::for_doppler(16, 0.1);
        let l1 = ComplexMatrix::diag(&AfdmConfig::lambda(16, cfg.c1));
        let l2 = ComplexMatrix::diag(&AfdmConfig::lambda(16, cfg.c2));
        let dense = l1
            .adjoint()
            .matmul(&unitary_dft(16).adjoint())
            .unwrap()
            .matmul(&l2.adjoint())
            .unwrap();
        let x = complex_gaussian(16, 1.0, &mut SimRng::new(3, 0));
        let frame = afdm_modulate(&cfg, &x, 0).unwrap();
        assert!(max_abs_diff(&frame.samples, &dense.mul_vec(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn single_doppler_bin_otfs_is_identity() {
        let cfg = OtfsConfig {
            delay_bins: 8,
            doppler_bins: 1,
        };
        let x = complex_gaussian(8, 1.0, &mut SimRng::new(4, 0));
        assert!(max_abs_diff(&otfs_modulate(&cfg, &x, 0).unwrap().samples, &x) < 1e-15);
    }

    #[test]
    fn otfs_round_trip_and_energy() {
        let cfg = OtfsConfig {
            delay_bins: 4,
            doppler_bins: 8,
        };
        let x = complex_gaussian(32, 1.0, &mut SimRng::new(5, 0));
        let frame = otfs_modulate(&cfg, &x, 2).unwrap();
        assert_eq!(frame.samples.len(), 34);
        assert!((energy(frame.body()) - energy(&x)).abs() < 1e-10);
        assert!(max_abs_diff(&otfs_demodulate(&cfg, &frame).unwrap(), &x) < 1e-12);
        assert!(otfs_modulate(&cfg, &x[..31], 0).is_err());
    }

    #[test]
    fn otfs_impulse_in_delay_spreads_over_time_slots() {
        // a symbol at (delay m, doppler 0) appears once per Doppler slot at
        // offset m with equal amplitude
        let cfg = OtfsConfig {
            delay_bins: 4,
            doppler_bins: 4,
        };
        let mut x = vec![Complex64::new(0.0, 0.0); 16];
        x[2 * 4] = Complex64::new(1.0, 0.0);
        let s = otfs_modulate(&cfg, &x, 0).unwrap().samples;
        for (i, v) in s.iter().enumerate() {
            let expected = if i % 4 == 2 { 0.5 } else { 0.0 };
            assert!((v.norm() - expected).abs() < 1e-15);
        }
    }
}
