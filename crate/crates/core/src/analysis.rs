//! Pairwise-error analysis of ML detection and PAPR statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::equalizers::ml_guard;
use crate::error::{Error, Result};
use crate::modem::Modem;
use crate::numerics::{fft_unitary, hermitian_rank_eigs, ifft_unitary, ComplexMatrix, DEFAULT_RANK_TOL};
use crate::waveform::{map_bits, Alphabet, SymbolVector, TimeFrame};

/// One point of a BER, bound or CCDF curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub ordinate: f64,
    pub trials_used: u64,
    pub errors_counted: u64,
}

/// `N×(L+1)` matrix whose column `l` is `R·D_l·Πˡ·T·x`, so that the
/// noiseless observation for path gains `h` is `E·h`.
pub fn build_e(modem: &Modem, x: &[Complex64], dopplers: &[f64]) -> Result<ComplexMatrix> {
    if x.len() != modem.symbols() {
        return Err(Error::dim(format!(
            "{} symbols, modem carries {}",
            x.len(),
            modem.symbols()
        )));
    }
    let n = modem.samples();
    if dopplers.is_empty() || dopplers.len() > n {
        return Err(Error::dim(format!("{} paths for a frame of {n}", dopplers.len())));
    }
    let s = modem.transmit(x);
    let columns: Vec<Vec<Complex64>> = dopplers
        .iter()
        .enumerate()
        .map(|(l, &nu)| {
            let shifted: Vec<Complex64> = (0..n)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * nu * i as f64 / n as f64) * s[(i + n - l) % n])
                .collect();
            modem.receive(&shifted)
        })
        .collect();
    ComplexMatrix::from_columns(n, &columns)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSpectrum {
    pub rank: usize,
    /// Non-zero eigenvalues of `Θ`, descending.
    pub eigenvalues: Vec<f64>,
    pub hamming_bits: usize,
}

/// Spectrum of `Θ = (E(x) − E(x̂))ᴴ(E(x) − E(x̂))`.
pub fn pair_spectrum(modem: &Modem, x: &SymbolVector, x_hat: &SymbolVector, dopplers: &[f64]) -> Result<PairSpectrum> {
    if x.bits.len() != x_hat.bits.len() {
        return Err(Error::dim(format!("{} vs {} bits", x.bits.len(), x_hat.bits.len())));
    }
    if x.bits == x_hat.bits {
        return Err(Error::InvalidInput("pairwise spectrum of identical codewords".into()));
    }
    let hamming_bits = x.bits.iter().zip(&x_hat.bits).filter(|(a, b)| a != b).count();
    let diff: Vec<Complex64> = x.symbols.iter().zip(&x_hat.symbols).map(|(a, b)| a - b).collect();
    // E is linear in x, so E(x) − E(x̂) = E(x − x̂)
    let theta = build_e(modem, &diff, dopplers)?.gram();
    let (rank, eigenvalues) = hermitian_rank_eigs(&theta, DEFAULT_RANK_TOL)?;
    Ok(PairSpectrum {
        rank,
        eigenvalues,
        hamming_bits,
    })
}

/// Pairwise error probability from the two-term Q-function approximation.
pub fn pep(spec: &PairSpectrum, gamma: f64, n_paths: usize) -> f64 {
    let lp = n_paths as f64;
    let term = |k: f64| {
        spec.eigenvalues
            .iter()
            .map(|&l| 1.0 / (1.0 + gamma * l / (k * lp)))
            .product::<f64>()
    };
    term(4.0) / 12.0 + term(3.0) / 4.0
}

/// High-SNR asymptote of [`pep`], a pure power law of slope `−R`.
pub fn pep_high_snr(spec: &PairSpectrum, gamma: f64, n_paths: usize) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "high-SNR PEP needs gamma > 0, got {gamma}"
        )));
    }
    if spec.rank == 0 {
        return Err(Error::InvalidInput("high-SNR PEP of a rank-0 pair".into()));
    }
    let r = spec.rank as f64;
    let geo = (spec.eigenvalues.iter().map(|l| l.ln()).sum::<f64>() / r).exp();
    let lp = n_paths as f64;
    Ok((geo * gamma / (4.0 * lp)).powf(-r) / 12.0 + (geo * gamma / (3.0 * lp)).powf(-r) / 4.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PepForm {
    #[default]
    Exact,
    HighSnr,
}

/// Every codeword of `symbols` alphabet symbols, in bit-label order.
fn codebook(alphabet: Alphabet, symbols: usize) -> Result<Vec<SymbolVector>> {
    ml_guard(alphabet.order(), symbols)?;
    let bits = symbols * alphabet.bits_per_symbol();
    (0..1usize << bits)
        .map(|label| {
            let b: Vec<u8> = (0..bits).rev().map(|i| ((label >> i) & 1) as u8).collect();
            map_bits(&b, alphabet)
        })
        .collect()
}

/// Spectra of all unordered codeword pairs. `Θ(x̂, x)` equals `Θ(x, x̂)`,
/// so each pair stands for both orderings.
pub fn codeword_spectra(modem: &Modem, alphabet: Alphabet, dopplers: &[f64]) -> Result<Vec<PairSpectrum>> {
    let book = codebook(alphabet, modem.symbols())?;
    let pairs: Vec<(usize, usize)> = (0..book.len())
        .flat_map(|i| (i + 1..book.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| pair_spectrum(modem, &book[i], &book[j], dopplers))
        .collect()
}

/// Union bound on ML bit error rate over `snr_db`, with `γ = 10^(snr/10)`
/// the inverse noise variance per observation.
pub fn ber_union_bound(
    modem: &Modem,
    alphabet: Alphabet,
    snr_db: &[f64],
    dopplers: &[f64],
    form: PepForm,
) -> Result<Vec<CurvePoint>> {
    let spectra = codeword_spectra(modem, alphabet, dopplers)?;
    union_bound_from_spectra(&spectra, modem.symbols(), alphabet, snr_db, dopplers.len(), form)
}

pub fn union_bound_from_spectra(
    spectra: &[PairSpectrum],
    symbols: usize,
    alphabet: Alphabet,
    snr_db: &[f64],
    n_paths: usize,
    form: PepForm,
) -> Result<Vec<CurvePoint>> {
    let words = (alphabet.order() as f64).powi(symbols as i32);
    let norm = words * symbols as f64 * alphabet.bits_per_symbol() as f64;
    snr_db
        .iter()
        .map(|&snr| {
            let gamma = 10f64.powf(snr / 10.0);
            let mut total = 0.0;
            for s in spectra {
                let p = match form {
                    PepForm::Exact => pep(s, gamma, n_paths),
                    PepForm::HighSnr => pep_high_snr(s, gamma, n_paths)?,
                };
                total += 2.0 * p * s.hamming_bits as f64;
            }
            Ok(CurvePoint {
                abscissa: snr,
                ordinate: total / norm,
                trials_used: 0,
                errors_counted: 0,
            })
        })
        .collect()
}

/// Minimum `Θ` rank over all distinct codeword pairs.
pub fn diversity_order(modem: &Modem, alphabet: Alphabet, dopplers: &[f64]) -> Result<usize> {
    let spectra = codeword_spectra(modem, alphabet, dopplers)?;
    spectra
        .iter()
        .map(|s| s.rank)
        .min()
        .ok_or_else(|| Error::InvalidInput("diversity order needs at least two codewords".into()))
}

/// Peak-to-mean power ratio of the CP-free body, in dB. `oversample > 1`
/// interpolates by zero-padding the spectrum.
pub fn papr_db(frame: &TimeFrame, oversample: usize) -> Result<f64> {
    if oversample == 0 {
        return Err(Error::InvalidInput("oversampling factor 0".into()));
    }
    let body = frame.body();
    let samples = if oversample == 1 {
        body.to_vec()
    } else {
        let n = body.len();
        let mut spec = body.to_vec();
        fft_unitary(&mut spec);
        let mut padded = vec![Complex64::new(0.0, 0.0); n * oversample];
        let half = n.div_ceil(2);
        padded[..half].copy_from_slice(&spec[..half]);
        padded[n * oversample - (n - half)..].copy_from_slice(&spec[half..]);
        ifft_unitary(&mut padded);
        padded
    };
    let powers = samples.iter().map(|z| z.norm_sqr());
    let (peak, sum) = powers.fold((0.0f64, 0.0), |(p, s), v| (p.max(v), s + v));
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::InvalidInput("PAPR of an all-zero frame".into()));
    }
    Ok(10.0 * (peak * samples.len() as f64 / sum).log10())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcdfCurve {
    /// `(threshold_db, P[value > threshold])`.
    pub points: Vec<(f64, f64)>,
}

/// Fraction of `values` strictly above each grid threshold.
pub fn ccdf(values: &[f64], grid: &[f64]) -> Result<CcdfCurve> {
    if values.is_empty() {
        return Err(Error::InvalidInput("CCDF of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let points = grid
        .iter()
        .map(|&t| {
            let at_or_below = sorted.partition_point(|&v| v <= t);
            (t, (sorted.len() - at_or_below) as f64 / n)
        })
        .collect();
    Ok(CcdfCurve { points })
}
