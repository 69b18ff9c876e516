//! Frame dimensioning, chirps, subcarrier mapping and the DFT-spread OFDM
//! family of modulation chains (chirped DFT-s-OFDM, DFT-s-OFDM, OFDM).
//!
//! All transforms are unitary, so the time-domain frame body carries exactly
//! the energy of the data symbols.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{fft_unitary, ifft_unitary, ComplexMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Bpsk,
    Qpsk,
}

impl Alphabet {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Alphabet::Bpsk => 1,
            Alphabet::Qpsk => 2,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Constellation points indexed by their bit label (MSB first).
    pub fn points(self) -> Vec<Complex64> {
        (0..self.order())
            .map(|label| {
                let bits: Vec<u8> = (0..self.bits_per_symbol())
                    .rev()
                    .map(|b| ((label >> b) & 1) as u8)
                    .collect();
                self.map_symbol(&bits)
            })
            .collect()
    }

    fn map_symbol(self, bits: &[u8]) -> Complex64 {
        match self {
            Alphabet::Bpsk => Complex64::new(1.0 - 2.0 * bits[0] as f64, 0.0),
            Alphabet::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Complex64::new(s * (1.0 - 2.0 * bits[0] as f64), s * (1.0 - 2.0 * bits[1] as f64))
            }
        }
    }

    /// Nearest constellation point's bits. Ties resolve toward the point with
    /// the smaller label.
    pub fn decide(self, z: Complex64, out: &mut Vec<u8>) {
        match self {
            Alphabet::Bpsk => out.push((z.re < 0.0) as u8),
            Alphabet::Qpsk => {
                out.push((z.re < 0.0) as u8);
                out.push((z.im < 0.0) as u8);
            }
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alphabet::Bpsk => "bpsk",
            Alphabet::Qpsk => "qpsk",
        })
    }
}

impl FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Alphabet::Bpsk),
            "qpsk" => Ok(Alphabet::Qpsk),
            other => Err(Error::config(format!("unknown alphabet '{other}'"))),
        }
    }
}

/// Modem dimensioning shared by the DFT-spread family.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameConfig {
    /// IFFT size `N`.
    pub n_fft: usize,
    /// DFT-precoder size `M`.
    pub m_dft: usize,
    /// Chirp-rate offset `a`, `1 ≤ a ≤ SF−1`.
    pub chirp_a: usize,
    /// Chirp-rate multiple `b` of the spreading factor.
    pub chirp_b: usize,
    pub cp_len: usize,
    pub alphabet: Alphabet,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            n_fft: 256,
            m_dft: 64,
            chirp_a: 1,
            chirp_b: 0,
            cp_len: 2,
            alphabet: Alphabet::Qpsk,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.m_dft == 0 {
            return Err(Error::config("n_fft and m_dft must be positive"));
        }
        if !self.n_fft.is_multiple_of(self.m_dft) {
            return Err(Error::config(format!(
                "N not divisible by M (n_fft={}, m_dft={})",
                self.n_fft, self.m_dft
            )));
        }
        let sf = self.spreading_factor();
        if sf > 1 && !(1..sf).contains(&self.chirp_a) {
            return Err(Error::config(format!(
                "chirp_a={} outside 1..={} (full-band occupancy requires 1 <= a <= SF-1)",
                self.chirp_a,
                sf - 1
            )));
        }
        Ok(())
    }

    pub fn spreading_factor(&self) -> usize {
        self.n_fft / self.m_dft
    }

    /// `c = (a + b·SF)/N`.
    pub fn chirp_rate(&self) -> Result<f64> {
        self.validate()?;
        Ok((self.chirp_a + self.chirp_b * self.spreading_factor()) as f64 / self.n_fft as f64)
    }

    pub fn bits_per_frame(&self) -> usize {
        self.m_dft * self.alphabet.bits_per_symbol()
    }
}

/// `(a + b·SF)/N` for a validated configuration.
pub fn chirp_rate(cfg: &FrameConfig) -> Result<f64> {
    cfg.chirp_rate()
}

/// Linear chirp `[e^{jπ·rate·n²}]`, `n = 0…len−1`.
pub fn gen_chirp(len: usize, rate: f64) -> Vec<Complex64> {
    (0..len)
        .map(|n| {
            let n = n as f64;
            // keep the phase argument reduced mod 2 before scaling by π
            let half_turns = (rate * n * n).rem_euclid(2.0);
            Complex64::from_polar(1.0, PI * half_turns)
        })
        .collect()
}

/// Interleaved subcarrier mapping `P = I_M ⊗ [1; 0_{(SF−1)×1}]` (N×M).
pub fn interleaved_map(n_fft: usize, m_dft: usize) -> Result<ComplexMatrix> {
    if m_dft == 0 || !n_fft.is_multiple_of(m_dft) {
        return Err(Error::config(format!(
            "N not divisible by M (n_fft={n_fft}, m_dft={m_dft})"
        )));
    }
    let sf = n_fft / m_dft;
    Ok(ComplexMatrix::from_fn(n_fft, m_dft, |r, c| {
        if r == c * sf {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector {
    pub symbols: Vec<Complex64>,
    pub bits: Vec<u8>,
}

/// Maps a bit sequence onto unit-energy Gray-labelled symbols.
pub fn map_bits(bits: &[u8], alphabet: Alphabet) -> Result<SymbolVector> {
    let k = alphabet.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::InvalidInput(format!(
            "{} bits is not a multiple of {k} bits per {alphabet} symbol",
            bits.len()
        )));
    }
    let symbols = bits.chunks(k).map(|b| alphabet.map_symbol(b)).collect();
    Ok(SymbolVector {
        symbols,
        bits: bits.to_vec(),
    })
}

/// Nearest-neighbour hard decisions back to bits.
pub fn demap_symbols(symbols: &[Complex64], alphabet: Alphabet) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * alphabet.bits_per_symbol());
    for &z in symbols {
        alphabet.decide(z, &mut bits);
    }
    bits
}

/// Time-domain samples, optionally with a cyclic prefix in front.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFrame {
    pub samples: Vec<Complex64>,
    pub cp_len: usize,
}

impl TimeFrame {
    pub fn without_cp(samples: Vec<Complex64>) -> Self {
        Self { samples, cp_len: 0 }
    }

    /// Prepends the last `cp_len` body samples.
    pub fn with_cp(body: Vec<Complex64>, cp_len: usize) -> Result<Self> {
        if cp_len > body.len() {
            return Err(Error::dim(format!(
                "cyclic prefix of {cp_len} longer than frame body of {}",
                body.len()
            )));
        }
        let mut samples = Vec::with_capacity(body.len() + cp_len);
        samples.extend_from_slice(&body[body.len() - cp_len..]);
        samples.extend_from_slice(&body);
        Ok(Self { samples, cp_len })
    }

    pub fn has_cp(&self) -> bool {
        self.cp_len > 0
    }

    pub fn body(&self) -> &[Complex64] {
        &self.samples[self.cp_len..]
    }
}

/// The three members of the DFT-spread family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DftsVariant {
    ChirpedDftsOfdm,
    DftsOfdm,
    Ofdm,
}

impl DftsVariant {
    pub fn symbols_per_frame(self, cfg: &FrameConfig) -> usize {
        match self {
            DftsVariant::Ofdm => cfg.n_fft,
            _ => cfg.m_dft,
        }
    }
}

/// `Fᴴ_N·P·F_M·x`, optionally followed by the chirp.
pub(crate) fn dfts_transmit(x: &[Complex64], n_fft: usize, chirp: Option<&[Complex64]>) -> Vec<Complex64> {
    let m = x.len();
    let sf = n_fft / m;
    let mut spread = x.to_vec();
    fft_unitary(&mut spread);
    let mut s = vec![Complex64::new(0.0, 0.0); n_fft];
    for (k, v) in spread.into_iter().enumerate() {
        s[k * sf] = v;
    }
    ifft_unitary(&mut s);
    if let Some(c) = chirp {
        for (v, c) in s.iter_mut().zip(c) {
            *v *= c;
        }
    }
    s
}

/// Adjoint of [`dfts_transmit`]: `F_Mᴴ·Pᵀ·F_N·Cᴴ·s`.
pub(crate) fn dfts_transmit_adjoint(s: &[Complex64], m_dft: usize, chirp: Option<&[Complex64]>) -> Vec<Complex64> {
    let n = s.len();
    let sf = n / m_dft;
    let mut buf = s.to_vec();
    if let Some(c) = chirp {
        for (v, c) in buf.iter_mut().zip(c) {
            *v *= c.conj();
        }
    }
    fft_unitary(&mut buf);
    let mut x: Vec<Complex64> = (0..m_dft).map(|k| buf[k * sf]).collect();
    ifft_unitary(&mut x);
    x
}

/// `F_N·Cᴴ·r` (the chirp is skipped when `None`).
pub(crate) fn dechirp_fft(r: &[Complex64], chirp: Option<&[Complex64]>) -> Vec<Complex64> {
    let mut y = r.to_vec();
    if let Some(c) = chirp {
        for (v, c) in y.iter_mut().zip(c) {
            *v *= c.conj();
        }
    }
    fft_unitary(&mut y);
    y
}

/// `C·F_Nᴴ·y`, the adjoint of [`dechirp_fft`].
pub(crate) fn ifft_chirp(y: &[Complex64], chirp: Option<&[Complex64]>) -> Vec<Complex64> {
    let mut r = y.to_vec();
    ifft_unitary(&mut r);
    if let Some(c) = chirp {
        for (v, c) in r.iter_mut().zip(c) {
            *v *= c;
        }
    }
    r
}

fn variant_chirp(cfg: &FrameConfig, variant: DftsVariant) -> Result<Option<Vec<Complex64>>> {
    Ok(match variant {
        DftsVariant::ChirpedDftsOfdm => Some(gen_chirp(cfg.n_fft, cfg.chirp_rate()?)),
        _ => None,
    })
}

/// Builds the time-domain frame `C·Fᴴ_N·P·F_M·x` (DFT-s-OFDM drops `C`;
/// OFDM drops `C`, `P` and `F_M`). A cyclic prefix of `cfg.cp_len` samples
/// is prepended when `with_cp` is set.
pub fn modulate(cfg: &FrameConfig, x: &[Complex64], variant: DftsVariant, with_cp: bool) -> Result<TimeFrame> {
    cfg.validate()?;
    let k = variant.symbols_per_frame(cfg);
    if x.len() != k {
        return Err(Error::dim(format!("{} symbols for a frame of {k}", x.len())));
    }
    let body = match variant {
        DftsVariant::Ofdm => {
            let mut s = x.to_vec();
            ifft_unitary(&mut s);
            s
        }
        _ => {
            let chirp = variant_chirp(cfg, variant)?;
            dfts_transmit(x, cfg.n_fft, chirp.as_deref())
        }
    };
    if with_cp {
        TimeFrame::with_cp(body, cfg.cp_len)
    } else {
        Ok(TimeFrame::without_cp(body))
    }
}

/// `y = F_N·Cᴴ·r` on the CP-free body of `frame`.
pub fn demodulate_to_freq(cfg: &FrameConfig, frame: &TimeFrame, variant: DftsVariant) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let body = frame.body();
    if body.len() != cfg.n_fft {
        return Err(Error::dim(format!(
            "frame body of {} samples, expected {}",
            body.len(),
            cfg.n_fft
        )));
    }
    let chirp = variant_chirp(cfg, variant)?;
    Ok(dechirp_fft(body, chirp.as_deref()))
}

/// Soft and hard symbol estimates recovered from frequency-domain estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredSymbols {
    pub soft: Vec<Complex64>,
    pub hard: SymbolVector,
}

/// Discards unused subcarriers (when given all `N` bins) and undoes the
/// `M`-point precoder, then slices to the alphabet.
pub fn recover_symbols(cfg: &FrameConfig, freq_est: &[Complex64], variant: DftsVariant) -> Result<RecoveredSymbols> {
    cfg.validate()?;
    let soft = match variant {
        DftsVariant::Ofdm => {
            if freq_est.len() != cfg.n_fft {
                return Err(Error::dim(format!(
                    "{} estimates for {} subcarriers",
                    freq_est.len(),
                    cfg.n_fft
                )));
            }
            freq_est.to_vec()
        }
        _ => {
            let sf = cfg.spreading_factor();
            let mut used: Vec<Complex64> = if freq_est.len() == cfg.n_fft {
                (0..cfg.m_dft).map(|k| freq_est[k * sf]).collect()
            } else if freq_est.len() == cfg.m_dft {
                freq_est.to_vec()
            } else {
                return Err(Error::dim(format!(
                    "{} estimates, expected {} or {}",
                    freq_est.len(),
                    cfg.m_dft,
                    cfg.n_fft
                )));
            };
            ifft_unitary(&mut used);
            used
        }
    };
    let bits = demap_symbols(&soft, cfg.alphabet);
    let hard = map_bits(&bits, cfg.alphabet)?;
    Ok(RecoveredSymbols { soft, hard })
}
