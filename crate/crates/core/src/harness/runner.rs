//! Experiment drivers.
//!
//! Trial `t` always draws from random stream `t` of the configured seed, in
//! the order channel, bits, noise. Trials run in fixed-size batches and
//! their results are folded in trial order, and the early-stop rule is only
//! consulted between batches, so output never depends on the worker count.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::analysis::{ccdf, codeword_spectra, papr_db, union_bound_from_spectra, CcdfCurve, CurvePoint, PepForm};
use crate::channel::{apply_channel, assemble_effective, sample_channel, TimeVaryingChannel};
use crate::equalizers::{lmmse_equalize, ml_equalize, ml_guard, EqualizerMethod, LmmseSolver, OutputSnrReport};
use crate::error::{Error, Result};
use crate::modem::{Modem, Waveform};
use crate::numerics::{complex_gaussian, SimRng};
use crate::waveform::{demap_symbols, map_bits};

/// Trials per scheduling unit.
pub const BATCH: u64 = 64;

/// Noise variance per complex observation for unit-energy symbols.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn batches(total: u64) -> impl Iterator<Item = (u64, u64)> {
    (0..total.div_ceil(BATCH)).map(move |b| (b * BATCH, ((b + 1) * BATCH).min(total)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits_per_trial: u64,
    /// Sum over trials of squared per-trial error counts.
    pub sum_sq_errors: u128,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        let bits = self.trials * self.bits_per_trial;
        if bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / bits as f64
        }
    }

    /// Normal-approximation 95% interval treating each frame as one sample,
    /// so error bursts within a frame widen the interval.
    pub fn confidence_95(&self) -> (f64, f64) {
        let t = self.trials as f64;
        let b = self.bits_per_trial as f64;
        let p = self.ber();
        if self.trials < 2 {
            return (0.0, 1.0);
        }
        let mean_sq = self.sum_sq_errors as f64 / (b * b);
        let var = ((mean_sq - t * p * p) / (t - 1.0)).max(0.0);
        let half = 1.96 * (var / t).sqrt();
        ((p - half).max(0.0), (p + half).min(1.0))
    }

    pub fn curve_point(&self) -> CurvePoint {
        CurvePoint {
            abscissa: self.snr_db,
            ordinate: self.ber(),
            trials_used: self.trials,
            errors_counted: self.bit_errors,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerCurve {
    pub waveform: Waveform,
    pub points: Vec<BerPoint>,
}

enum Detector<'a> {
    Lmmse(LmmseSolver<'a>),
    Ml(crate::channel::EffectiveChannel),
}

/// Bit errors of one frame at each SNR index in `active`.
fn ber_trial(cfg: &ExperimentConfig, modem: &Modem, t: u64, active: &[usize], sigmas: &[f64]) -> Result<Vec<u64>> {
    let alphabet = cfg.frame.alphabet;
    let mut rng = SimRng::new(cfg.seed, t);
    let real = sample_channel(&cfg.channel, &mut rng);
    let bits = rng.bits(modem.symbols() * alphabet.bits_per_symbol());
    let unit_noise = complex_gaussian(modem.samples(), 1.0, &mut rng);

    let x = map_bits(&bits, alphabet)?;
    let frame = modem.modulate(&x.symbols, cfg.frame.cp_len)?;
    // noise is added per SNR point below so every point sees the same draw
    let rx = apply_channel(&frame, &real, 0.0, &mut rng)?;
    let y_clean = modem.demodulate(&rx)?;
    let w = modem.receive(&unit_noise);

    let tv = TimeVaryingChannel::new(&real, modem.samples())?;
    let detector = match cfg.equalizer {
        EqualizerMethod::Lmmse => Detector::Lmmse(LmmseSolver::new(modem, &tv)?),
        EqualizerMethod::Ml => Detector::Ml(assemble_effective(modem, &real, 0.0)?),
    };
    let mut y = vec![Complex64::new(0.0, 0.0); y_clean.len()];
    active
        .iter()
        .map(|&i| {
            let sigma = sigmas[i];
            for ((dst, c), n) in y.iter_mut().zip(&y_clean).zip(&w) {
                *dst = c + sigma * n;
            }
            let decided = match &detector {
                Detector::Lmmse(solver) => demap_symbols(&solver.equalize(&y, sigma * sigma)?, alphabet),
                Detector::Ml(eff) => ml_equalize(&y, eff, alphabet)?.hard.bits,
            };
            Ok(decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64)
        })
        .collect()
}

fn ber_curve(cfg: &ExperimentConfig, modem: &Modem) -> Result<BerCurve> {
    let sigmas: Vec<f64> = cfg.snr_grid_db.iter().map(|&s| noise_variance(s).sqrt()).collect();
    let bits_per_trial = (modem.symbols() * cfg.frame.alphabet.bits_per_symbol()) as u64;
    let mut points: Vec<BerPoint> = cfg
        .snr_grid_db
        .iter()
        .map(|&snr_db| BerPoint {
            snr_db,
            trials: 0,
            bit_errors: 0,
            bits_per_trial,
            sum_sq_errors: 0,
        })
        .collect();
    for (start, end) in batches(cfg.trials) {
        let active: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].bit_errors < cfg.max_bit_errors)
            .collect();
        if active.is_empty() {
            break;
        }
        let counts: Vec<Vec<u64>> = (start..end)
            .into_par_iter()
            .map(|t| ber_trial(cfg, modem, t, &active, &sigmas))
            .collect::<Result<_>>()?;
        for trial in counts {
            for (&i, &e) in active.iter().zip(&trial) {
                let p = &mut points[i];
                p.trials += 1;
                p.bit_errors += e;
                p.sum_sq_errors += (e as u128) * (e as u128);
            }
        }
    }
    Ok(BerCurve {
        waveform: modem.waveform(),
        points,
    })
}

fn modems(cfg: &ExperimentConfig) -> Result<Vec<Modem>> {
    cfg.waveforms.iter().map(|&w| cfg.modem(w)).collect()
}

/// BER against SNR for every configured waveform.
pub fn run_ber(cfg: &ExperimentConfig) -> Result<Vec<BerCurve>> {
    cfg.validate()?;
    let modems = modems(cfg)?;
    if cfg.equalizer == EqualizerMethod::Ml {
        for m in &modems {
            ml_guard(cfg.frame.alphabet.order(), m.symbols())?;
        }
    }
    with_pool(cfg.workers, || modems.iter().map(|m| ber_curve(cfg, m)).collect())?
}

/// Dense-matrix LMMSE detection of a single frame, for cross-checking the
/// structured solver used by [`run_ber`].
pub fn dense_lmmse_bits(cfg: &ExperimentConfig, modem: &Modem, t: u64, snr_db: f64) -> Result<(Vec<u8>, Vec<u8>)> {
    let alphabet = cfg.frame.alphabet;
    let mut rng = SimRng::new(cfg.seed, t);
    let real = sample_channel(&cfg.channel, &mut rng);
    let bits = rng.bits(modem.symbols() * alphabet.bits_per_symbol());
    let unit_noise = complex_gaussian(modem.samples(), 1.0, &mut rng);
    let x = map_bits(&bits, alphabet)?;
    let sigma2 = noise_variance(snr_db);
    let rx = apply_channel(&modem.modulate(&x.symbols, cfg.frame.cp_len)?, &real, 0.0, &mut rng)?;
    let noisy: Vec<Complex64> = rx
        .samples
        .iter()
        .zip(&unit_noise)
        .map(|(r, n)| r + sigma2.sqrt() * n)
        .collect();
    let y = modem.receive(&noisy);
    let eff = assemble_effective(modem, &real, sigma2)?;
    Ok((bits, lmmse_equalize(&y, &eff, alphabet)?.hard.bits))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaprSeries {
    pub waveform: Waveform,
    /// One value per frame, in trial order.
    pub papr_db: Vec<f64>,
    pub curve: CcdfCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaprResult {
    pub grid_db: Vec<f64>,
    pub series: Vec<PaprSeries>,
}

fn papr_values(cfg: &ExperimentConfig, modem: &Modem) -> Result<Vec<f64>> {
    let alphabet = cfg.frame.alphabet;
    let mut out = Vec::with_capacity(cfg.trials as usize);
    for (start, end) in batches(cfg.trials) {
        let chunk: Vec<f64> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = SimRng::new(cfg.seed, t);
                let bits = rng.bits(modem.symbols() * alphabet.bits_per_symbol());
                let x = map_bits(&bits, alphabet)?;
                papr_db(&modem.modulate(&x.symbols, 0)?, cfg.oversample)
            })
            .collect::<Result<_>>()?;
        out.extend(chunk);
    }
    Ok(out)
}

/// Per-frame PAPR and its CCDF on a 0.1 dB grid. Frame `t` of every
/// waveform carries the same bits.
pub fn run_papr(cfg: &ExperimentConfig) -> Result<PaprResult> {
    cfg.validate()?;
    let modems = modems(cfg)?;
    let values: Vec<Vec<f64>> = with_pool(cfg.workers, || {
        modems.iter().map(|m| papr_values(cfg, m)).collect::<Result<_>>()
    })??;
    let top = values.iter().flatten().copied().fold(0.0f64, f64::max);
    let steps = (top * 10.0).ceil().max(0.0) as usize + 1;
    let grid_db: Vec<f64> = (0..=steps).map(|i| i as f64 / 10.0).collect();
    let series = modems
        .iter()
        .zip(values)
        .map(|(m, papr_db)| {
            Ok(PaprSeries {
                waveform: m.waveform(),
                curve: ccdf(&papr_db, &grid_db)?,
                papr_db,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PaprResult { grid_db, series })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutSnrSummary {
    pub waveform: Waveform,
    pub draws: u64,
    /// Mean over draws, per symbol.
    pub per_symbol_signal: Vec<f64>,
    pub per_symbol_noise: Vec<f64>,
    /// `10·log10(E[Σ signal] / E[Σ noise])`.
    pub aggregate_snr_db: f64,
    /// `10·log10(E[Σ signal / Σ noise])`, the other expectation placement.
    pub mean_ratio_snr_db: f64,
    /// Mean over draws of the per-draw min/median per-symbol SNR.
    pub min_over_median: f64,
    /// Mean over draws of the per-draw max/min per-symbol SNR.
    pub max_over_min: f64,
}

impl OutSnrSummary {
    pub fn per_symbol_snr_db(&self) -> Vec<f64> {
        self.per_symbol_signal
            .iter()
            .zip(&self.per_symbol_noise)
            .map(|(&s, &n)| crate::equalizers::snr_db(s, n))
            .collect()
    }

    pub fn aggregate_linear(&self) -> f64 {
        10f64.powf(self.aggregate_snr_db / 10.0)
    }
}

struct DrawSpread {
    ratio: f64,
    min_over_median: f64,
    max_over_min: f64,
}

fn spread(report: &OutputSnrReport) -> DrawSpread {
    let mut snr: Vec<f64> = report
        .per_symbol_signal
        .iter()
        .zip(&report.per_symbol_noise)
        .map(|(&s, &n)| if n > 0.0 { s / n } else { 0.0 })
        .collect();
    snr.sort_by(f64::total_cmp);
    let (min, max) = (snr[0], snr[snr.len() - 1]);
    let median = snr[snr.len() / 2];
    let noise: f64 = report.per_symbol_noise.iter().sum();
    let signal: f64 = report.per_symbol_signal.iter().sum();
    DrawSpread {
        ratio: if noise > 0.0 { signal / noise } else { 0.0 },
        min_over_median: if median > 0.0 { min / median } else { 0.0 },
        max_over_min: if min > 0.0 { max / min } else { f64::INFINITY },
    }
}

fn outsnr_summary(cfg: &ExperimentConfig, modem: &Modem) -> Result<OutSnrSummary> {
    let sigma2 = noise_variance(cfg.input_snr_db);
    let k = modem.symbols();
    let mut signal = vec![0.0; k];
    let mut noise = vec![0.0; k];
    let (mut ratio, mut min_med, mut max_min) = (0.0, 0.0, 0.0);
    for (start, end) in batches(cfg.trials) {
        let reports: Vec<OutputSnrReport> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = SimRng::new(cfg.seed, t);
                let real = sample_channel(&cfg.channel, &mut rng);
                let tv = TimeVaryingChannel::new(&real, modem.samples())?;
                LmmseSolver::new(modem, &tv)?.output_snr(sigma2)
            })
            .collect::<Result<_>>()?;
        for r in &reports {
            for (acc, v) in signal.iter_mut().zip(&r.per_symbol_signal) {
                *acc += v;
            }
            for (acc, v) in noise.iter_mut().zip(&r.per_symbol_noise) {
                *acc += v;
            }
            let s = spread(r);
            ratio += s.ratio;
            min_med += s.min_over_median;
            max_min += s.max_over_min;
        }
    }
    let draws = cfg.trials as f64;
    signal.iter_mut().for_each(|v| *v /= draws);
    noise.iter_mut().for_each(|v| *v /= draws);
    let aggregate_snr_db = crate::equalizers::snr_db(signal.iter().sum(), noise.iter().sum());
    Ok(OutSnrSummary {
        waveform: modem.waveform(),
        draws: cfg.trials,
        per_symbol_signal: signal,
        per_symbol_noise: noise,
        aggregate_snr_db,
        mean_ratio_snr_db: 10.0 * (ratio / draws).log10(),
        min_over_median: min_med / draws,
        max_over_min: max_min / draws,
    })
}

/// LMMSE output SNR at `input_snr_db`, averaged over `trials` channel draws.
pub fn run_outsnr(cfg: &ExperimentConfig) -> Result<Vec<OutSnrSummary>> {
    cfg.validate()?;
    let modems = modems(cfg)?;
    with_pool(cfg.workers, || modems.iter().map(|m| outsnr_summary(cfg, m)).collect())?
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub waveform: Waveform,
    pub points: Vec<CurvePoint>,
    pub diversity_order: usize,
    /// Per-path Doppler the pairwise matrices were built with.
    pub dopplers: Vec<f64>,
}

/// ML union bound and diversity order for the first configured waveform.
pub fn run_bound(cfg: &ExperimentConfig) -> Result<BoundResult> {
    cfg.validate()?;
    let modem = cfg.modem(cfg.waveforms[0])?;
    let alphabet = cfg.frame.alphabet;
    ml_guard(alphabet.order(), modem.symbols())?;
    let dopplers = cfg.bound_dopplers();
    let spectra = with_pool(cfg.workers, || codeword_spectra(&modem, alphabet, &dopplers))??;
    let points = union_bound_from_spectra(
        &spectra,
        modem.symbols(),
        alphabet,
        &cfg.snr_grid_db,
        dopplers.len(),
        PepForm::Exact,
    )?;
    let diversity_order = spectra.iter().map(|s| s.rank).min().unwrap_or(0);
    Ok(BoundResult {
        waveform: modem.waveform(),
        points,
        diversity_order,
        dopplers,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiversityResult {
    pub waveform: Waveform,
    pub diversity_order: usize,
    pub dopplers: Vec<f64>,
}

pub fn run_diversity(cfg: &ExperimentConfig) -> Result<DiversityResult> {
    let bound = run_bound(&ExperimentConfig {
        snr_grid_db: vec![0.0],
        ..cfg.clone()
    })?;
    Ok(DiversityResult {
        waveform: bound.waveform,
        diversity_order: bound.diversity_order,
        dopplers: bound.dopplers,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentResult {
    Ber(Vec<BerCurve>),
    Papr(PaprResult),
    OutSnr(Vec<OutSnrSummary>),
    Bound(BoundResult),
    Diversity(DiversityResult),
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    use super::config::Experiment;
    Ok(match cfg.experiment {
        Experiment::Ber => ExperimentResult::Ber(run_ber(cfg)?),
        Experiment::Papr => ExperimentResult::Papr(run_papr(cfg)?),
        Experiment::OutSnr => ExperimentResult::OutSnr(run_outsnr(cfg)?),
        Experiment::Bound => ExperimentResult::Bound(run_bound(cfg)?),
        Experiment::Diversity => ExperimentResult::Diversity(run_diversity(cfg)?),
    })
}
