//! Linear MMSE and exhaustive maximum-likelihood detection, plus the
//! per-symbol signal/noise split of the LMMSE output.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{EffectiveChannel, TimeVaryingChannel};
use crate::error::{Error, Result};
use crate::modem::Modem;
use crate::numerics::{hermitian_eigen, Cholesky, ComplexMatrix, ProfileMatrix, DEFAULT_RANK_TOL};
use crate::waveform::{demap_symbols, map_bits, Alphabet, SymbolVector};

/// Largest candidate set exhaustive detection will enumerate.
pub const ML_CANDIDATE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EqualizerMethod {
    Lmmse,
    Ml,
}

impl fmt::Display for EqualizerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EqualizerMethod::Lmmse => "lmmse",
            EqualizerMethod::Ml => "ml",
        })
    }
}

impl FromStr for EqualizerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lmmse" => Ok(EqualizerMethod::Lmmse),
            "ml" => Ok(EqualizerMethod::Ml),
            other => Err(Error::config(format!("unknown equalizer '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqualizerOutput {
    /// Soft symbol estimates.
    pub estimates: Vec<Complex64>,
    pub hard: SymbolVector,
    pub method: EqualizerMethod,
    /// Set when a noiseless LMMSE solve met a singular Gram matrix and fell
    /// back to the pseudo-inverse.
    pub pseudo_inverse_fallback: bool,
}

/// Nearest-point decisions, re-mapped so `hard.symbols` are on the alphabet.
pub fn hard_decisions(estimates: &[Complex64], alphabet: Alphabet) -> SymbolVector {
    let bits = demap_symbols(estimates, alphabet);
    map_bits(&bits, alphabet).expect("whole symbols")
}

fn check_observation(y: &[Complex64], h: &EffectiveChannel) -> Result<()> {
    if y.len() != h.observations() {
        return Err(Error::dim(format!(
            "{} observations for a channel with {} rows",
            y.len(),
            h.observations()
        )));
    }
    Ok(())
}

fn check_noise(sigma2: f64, strictly_positive: bool) -> Result<()> {
    let ok = sigma2.is_finite() && if strictly_positive { sigma2 > 0.0 } else { sigma2 >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("noise variance {sigma2}")))
    }
}

/// `(HᴴH + σ²I)⁻¹·Hᴴ·y`, the same estimate as `Hᴴ(HHᴴ + σ²I)⁻¹·y` without
/// forming the larger `N×N` system.
pub fn lmmse_equalize(y: &[Complex64], h: &EffectiveChannel, alphabet: Alphabet) -> Result<EqualizerOutput> {
    check_observation(y, h)?;
    let sigma2 = h.noise_variance;
    check_noise(sigma2, false)?;
    let mut gram = h.matrix.gram();
    let rhs = h.matrix.adjoint_mul_vec(y)?;
    let (estimates, fallback) = if sigma2 > 0.0 {
        gram.add_diagonal(sigma2);
        (Cholesky::factor(&gram)?.solve(&rhs)?, false)
    } else {
        pseudo_inverse_solve(&gram, &rhs)?
    };
    Ok(EqualizerOutput {
        hard: hard_decisions(&estimates, alphabet),
        estimates,
        method: EqualizerMethod::Lmmse,
        pseudo_inverse_fallback: fallback,
    })
}

/// Solves `G·x = b` through the eigenvalues of `G` above the rank threshold.
/// The flag reports whether any eigenvalue was dropped.
fn pseudo_inverse_solve(gram: &ComplexMatrix, rhs: &[Complex64]) -> Result<(Vec<Complex64>, bool)> {
    let eig = hermitian_eigen(gram)?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let threshold = DEFAULT_RANK_TOL * lambda_max.max(1.0);
    let coeffs = eig.vectors.adjoint_mul_vec(rhs)?;
    let mut x = vec![Complex64::new(0.0, 0.0); gram.rows()];
    let mut dropped = false;
    for (k, (&lambda, c)) in eig.values.iter().zip(&coeffs).enumerate() {
        if lambda <= threshold {
            dropped = true;
            continue;
        }
        let w = c / lambda;
        for (xi, vi) in x.iter_mut().zip(eig.vectors.column(k)) {
            *xi += vi * w;
        }
    }
    Ok((x, dropped))
}

/// Exhaustive search over every alphabet sequence of length `H.cols()`.
/// Equal metrics keep the candidate with the smaller bit label.
pub fn ml_equalize(y: &[Complex64], h: &EffectiveChannel, alphabet: Alphabet) -> Result<EqualizerOutput> {
    check_observation(y, h)?;
    let k = h.symbols();
    let q = alphabet.order();
    ml_guard(q, k)?;
    let points = alphabet.points();
    // contributions[j][p] = column j scaled by point p
    let contributions: Vec<Vec<Vec<Complex64>>> = (0..k)
        .map(|j| {
            let col = h.matrix.column(j);
            points.iter().map(|&p| col.iter().map(|c| c * p).collect()).collect()
        })
        .collect();

    let total = q.pow(k as u32);
    let mut labels = vec![0usize; k];
    let mut best = (f64::INFINITY, 0usize);
    let mut residual = vec![Complex64::new(0.0, 0.0); y.len()];
    for candidate in 0..total {
        let mut rest = candidate;
        for slot in labels.iter_mut().rev() {
            *slot = rest % q;
            rest /= q;
        }
        residual.copy_from_slice(y);
        for (j, &label) in labels.iter().enumerate() {
            for (r, c) in residual.iter_mut().zip(&contributions[j][label]) {
                *r -= c;
            }
        }
        let metric: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
        if metric < best.0 {
            best = (metric, candidate);
        }
    }

    let bps = alphabet.bits_per_symbol();
    let bits: Vec<u8> = (0..k * bps).rev().map(|b| ((best.1 >> b) & 1) as u8).collect();
    let hard = map_bits(&bits, alphabet)?;
    Ok(EqualizerOutput {
        estimates: hard.symbols.clone(),
        hard,
        method: EqualizerMethod::Ml,
        pseudo_inverse_fallback: false,
    })
}

/// Fails when `Q^K` exceeds [`ML_CANDIDATE_LIMIT`].
pub fn ml_guard(order: usize, symbols: usize) -> Result<()> {
    let candidates = (order as f64).powi(symbols as i32);
    if candidates > ML_CANDIDATE_LIMIT as f64 {
        return Err(Error::Capacity {
            candidates,
            limit: ML_CANDIDATE_LIMIT,
        });
    }
    Ok(())
}

/// Per-symbol LMMSE output powers for unit-energy symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputSnrReport {
    pub per_symbol_signal: Vec<f64>,
    pub per_symbol_noise: Vec<f64>,
    pub per_symbol_snr_db: Vec<f64>,
    /// `10·log10(Σ signal / Σ noise)`; `−∞` when no signal gets through.
    pub aggregate_snr_db: f64,
}

impl OutputSnrReport {
    /// `w` is `(HᴴH + σ²I)⁻¹` and `p = w·HᴴH` the signal transfer.
    fn from_transfer(w: &ComplexMatrix, p: &ComplexMatrix, sigma2: f64) -> Self {
        let k = w.rows();
        let per_symbol_signal: Vec<f64> = (0..k).map(|m| p.row(m).iter().map(|v| v.norm_sqr()).sum()).collect();
        // σ²·(G·Gᴴ)_mm with G·Gᴴ = W·HᴴH·W = P·W
        let per_symbol_noise: Vec<f64> = (0..k)
            .map(|m| {
                let pw: Complex64 = p.row(m).iter().enumerate().map(|(j, v)| v * w[(j, m)]).sum();
                (sigma2 * pw.re).max(0.0)
            })
            .collect();
        let per_symbol_snr_db = per_symbol_signal
            .iter()
            .zip(&per_symbol_noise)
            .map(|(&s, &n)| snr_db(s, n))
            .collect();
        let aggregate_snr_db = snr_db(per_symbol_signal.iter().sum(), per_symbol_noise.iter().sum());
        Self {
            per_symbol_signal,
            per_symbol_noise,
            per_symbol_snr_db,
            aggregate_snr_db,
        }
    }
}

/// `10·log10(signal/noise)`, with `−∞` for a zero signal.
pub fn snr_db(signal: f64, noise: f64) -> f64 {
    if signal <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

pub fn output_snr(h: &EffectiveChannel) -> Result<OutputSnrReport> {
    let sigma2 = h.noise_variance;
    check_noise(sigma2, true)?;
    let a = h.matrix.gram();
    let mut shifted = a.clone();
    shifted.add_diagonal(sigma2);
    let w = Cholesky::factor(&shifted)?.inverse();
    let p = w.matmul(&a)?;
    Ok(OutputSnrReport::from_transfer(&w, &p, sigma2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverRoute {
    /// Factor the `K×K` symbol-domain Gram matrix.
    Symbol,
    /// Factor the banded time-domain `H_tᴴ·H_t`; needs a square modem.
    Time,
}

/// LMMSE for one channel realization, built from fast modem transforms.
///
/// Both routes give the same estimate as [`lmmse_equalize`] on the dense
/// effective channel.
pub struct LmmseSolver<'a> {
    modem: &'a Modem,
    channel: &'a TimeVaryingChannel,
    route: SolverRoute,
    normal: ProfileMatrix,
}

impl<'a> LmmseSolver<'a> {
    /// Time route for square modems, symbol route otherwise.
    pub fn new(modem: &'a Modem, channel: &'a TimeVaryingChannel) -> Result<Self> {
        let route = if modem.is_square() {
            SolverRoute::Time
        } else {
            SolverRoute::Symbol
        };
        Self::with_route(modem, channel, route)
    }

    pub fn with_route(modem: &'a Modem, channel: &'a TimeVaryingChannel, route: SolverRoute) -> Result<Self> {
        if channel.size() != modem.samples() {
            return Err(Error::dim(format!(
                "channel of size {} for a {}-sample modem",
                channel.size(),
                modem.samples()
            )));
        }
        let normal = match route {
            SolverRoute::Time => {
                if !modem.is_square() {
                    return Err(Error::InvalidInput(format!(
                        "time-domain LMMSE needs a square modem, {} carries {} of {} samples",
                        modem.waveform(),
                        modem.symbols(),
                        modem.samples()
                    )));
                }
                channel.normal_matrix()
            }
            SolverRoute::Symbol => {
                let k = modem.symbols();
                let columns: Vec<Vec<Complex64>> = (0..k)
                    .map(|j| {
                        let mut e = vec![Complex64::new(0.0, 0.0); k];
                        e[j] = Complex64::new(1.0, 0.0);
                        let s = modem.transmit(&e);
                        modem.transmit_adjoint(&channel.apply_adjoint(&channel.apply(&s)))
                    })
                    .collect();
                ComplexMatrix::from_columns(k, &columns)?
            }
        };
        Ok(Self {
            modem,
            channel,
            route,
            normal: ProfileMatrix::from_dense(&normal)?,
        })
    }

    pub fn route(&self) -> SolverRoute {
        self.route
    }

    /// Symbol estimates from receiver-domain observations `y`. With `sigma2 = 0`
    /// this is zero forcing and fails on a singular channel.
    pub fn equalize(&self, y: &[Complex64], sigma2: f64) -> Result<Vec<Complex64>> {
        check_noise(sigma2, false)?;
        if y.len() != self.modem.samples() {
            return Err(Error::dim(format!(
                "{} observations for a {}-sample modem",
                y.len(),
                self.modem.samples()
            )));
        }
        let chol = self.normal.cholesky_shifted(sigma2)?;
        let matched = self.channel.apply_adjoint(&self.modem.receive_adjoint(y));
        Ok(match self.route {
            SolverRoute::Symbol => chol.solve(&self.modem.transmit_adjoint(&matched))?,
            SolverRoute::Time => self.modem.transmit_adjoint(&chol.solve(&matched)?),
        })
    }

    pub fn output_snr(&self, sigma2: f64) -> Result<OutputSnrReport> {
        check_noise(sigma2, true)?;
        let chol = self.normal.cholesky_shifted(sigma2)?;
        let w = match self.route {
            SolverRoute::Symbol => chol.inverse(),
            SolverRoute::Time => self.symbol_domain(&chol.inverse()),
        };
        let k = w.rows();
        let p = ComplexMatrix::from_fn(k, k, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex64::new(id, 0.0) - sigma2 * w[(i, j)]
        });
        Ok(OutputSnrReport::from_transfer(&w, &p, sigma2))
    }

    /// `Tᴴ·X·T` for an `N×N` matrix `X`.
    fn symbol_domain(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = x.rows();
        let k = self.modem.symbols();
        // left factor, one column at a time: Y = Tᴴ·X (K×N)
        let mut y = ComplexMatrix::zeros(k, n);
        for j in 0..n {
            for (i, v) in self.modem.transmit_adjoint(&x.column(j)).into_iter().enumerate() {
                y[(i, j)] = v;
            }
        }
        // right factor by rows: (Y·T)[m,:] = conj(Tᴴ·conj(Y[m,:]))
        let mut out = ComplexMatrix::zeros(k, k);
        for m in 0..k {
            let conj_row: Vec<Complex64> = y.row(m).iter().map(|v| v.conj()).collect();
            for (dst, v) in out.row_mut(m).iter_mut().zip(self.modem.transmit_adjoint(&conj_row)) {
                *dst = v.conj();
            }
        }
        out
    }
}
