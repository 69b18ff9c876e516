use std::f64::consts::PI;

use chirpofdm::analysis::{
    ccdf, codeword_spectra, pair_spectrum, papr_db, pep, union_bound_from_spectra, PairSpectrum, PepForm,
};
use chirpofdm::channel::{apply_channel, assemble_effective, build_time_channel, sample_channel};
use chirpofdm::equalizers::{hard_decisions, lmmse_equalize};
use chirpofdm::harness::{run_ber, run_outsnr};
use chirpofdm::numerics::{complex_gaussian, hermitian_eigen, max_abs_diff, unitary_dft, Cholesky};
use chirpofdm::waveform::{gen_chirp, interleaved_map, map_bits};
use chirpofdm::{
    Alphabet, ChannelRealization, ChannelSpec, Complex64, ComplexMatrix, DopplerModel, EffectiveChannel,
    ExperimentConfig, FrameConfig, Modem, SimRng, TimeFrame, Waveform,
};
use proptest::prelude::*;

fn small_config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("n_fft = 16\nm_dft = 4\notfs_delay_bins = 4\n{extra}")).unwrap()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn waveform() -> impl Strategy<Value = Waveform> {
    prop::sample::select(Waveform::ALL.to_vec())
}

fn doppler_model() -> impl Strategy<Value = DopplerModel> {
    prop::sample::select(vec![
        DopplerModel::UniformPerPath,
        DopplerModel::FixedExtremes,
        DopplerModel::Static,
    ])
}

fn random_symbols(modem: &Modem, alphabet: Alphabet, rng: &mut SimRng) -> Vec<Complex64> {
    map_bits(&rng.bits(modem.symbols() * alphabet.bits_per_symbol()), alphabet)
        .unwrap()
        .symbols
}

fn residual(y: &[Complex64], h: &ComplexMatrix, x: &[Complex64]) -> f64 {
    let hx = h.mul_vec(x).unwrap();
    y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum()
}

fn random_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> ComplexMatrix {
    ComplexMatrix::from_row_major(rows, cols, complex_gaussian(rows * cols, 1.0, rng)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn modulation_preserves_energy_and_round_trips(w in waveform(), seed in any::<u64>()) {
        let cfg = small_config("");
        let modem = cfg.modem(w).unwrap();
        let x = random_symbols(&modem, Alphabet::Qpsk, &mut SimRng::new(seed, 0));
        let frame = modem.modulate(&x, 2).unwrap();
        let e_x: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let e_s: f64 = frame.body().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((e_x - e_s).abs() < 1e-10);
        let rx = apply_channel(&frame, &ChannelRealization::identity(), 0.0, &mut SimRng::new(seed, 1)).unwrap();
        let back = modem.transmit_adjoint(&modem.receive_adjoint(&modem.demodulate(&rx).unwrap()));
        prop_assert!(max_abs_diff(&back, &x) < 1e-10);
    }

    #[test]
    fn chirping_never_changes_papr(seed in any::<u64>(), sf in prop::sample::select(vec![2usize, 4, 8])) {
        let frame = FrameConfig { n_fft: 32, m_dft: 32 / sf, ..FrameConfig::default() };
        let chirped = Modem::dfts_family(Waveform::ChirpedDftsOfdm, &frame).unwrap();
        let plain = Modem::dfts_family(Waveform::DftsOfdm, &frame).unwrap();
        let x = random_symbols(&chirped, Alphabet::Qpsk, &mut SimRng::new(seed, 0));
        let a = papr_db(&chirped.modulate(&x, 0).unwrap(), 1).unwrap();
        let b = papr_db(&plain.modulate(&x, 0).unwrap(), 1).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn papr_ignores_phase_and_scale(seed in any::<u64>(), phase in 0.0..(2.0 * PI), scale in 1e-3..1e3f64, os in 1usize..5) {
        let samples = complex_gaussian(32, 1.0, &mut SimRng::new(seed, 0));
        let k = Complex64::from_polar(scale, phase);
        let scaled: Vec<Complex64> = samples.iter().map(|s| s * k).collect();
        let a = papr_db(&TimeFrame::without_cp(samples), os).unwrap();
        let b = papr_db(&TimeFrame::without_cp(scaled), os).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ccdf_is_non_increasing_and_bounded(values in prop::collection::vec(-20.0..20.0f64, 1..200)) {
        let grid: Vec<f64> = (-25..=25).map(f64::from).collect();
        let curve = ccdf(&values, &grid).unwrap();
        for pair in curve.points.windows(2) {
            prop_assert!(pair[1].1 <= pair[0].1);
        }
        prop_assert!(curve.points.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
    }

    // Only rates with a coprime to SF reach every bin; otherwise N/gcd(a, SF).
    #[test]
    fn chirp_rate_band_occupancy(sf_pow in 1u32..4, a_pick in any::<prop::sample::Index>(), b in 0usize..3) {
        let n = 16;
        let sf = 1usize << sf_pow;
        let a = 1 + a_pick.index(sf - 1);
        let m = n / sf;
        let f = unitary_dft(n);
        let p = interleaved_map(n, m).unwrap();
        let c = ComplexMatrix::diag(&gen_chirp(n, (a + b * sf) as f64 / n as f64));
        let spread = f.matmul(&c).unwrap().matmul(&f.adjoint()).unwrap().matmul(&p).unwrap();
        let occupied = |mat: &ComplexMatrix| (0..n).filter(|&r| mat.row(r).iter().any(|v| v.norm() > 1e-6)).count();
        prop_assert_eq!(occupied(&spread), n / gcd(a, sf));
        let flat = f.matmul(&f.adjoint()).unwrap().matmul(&p).unwrap();
        prop_assert_eq!(occupied(&flat), m);
    }

    #[test]
    fn matrix_channel_matches_sample_convolution(seed in any::<u64>(), order in 0usize..3, model in doppler_model()) {
        let spec = ChannelSpec { n_paths: order + 1, doppler_model: model, ..ChannelSpec::default() };
        let mut rng = SimRng::new(seed, 0);
        let real = sample_channel(&spec, &mut rng);
        let n = 32;
        let s = complex_gaussian(n, 1.0, &mut rng);
        let want: Vec<Complex64> = (0..n)
            .map(|k| {
                real.paths
                    .iter()
                    .map(|p| p.gain * Complex64::from_polar(1.0, 2.0 * PI * p.doppler_norm * k as f64 / n as f64) * s[(k + n - p.delay_samples) % n])
                    .sum()
            })
            .collect();
        let got = build_time_channel(&real, n).unwrap().mul_vec(&s).unwrap();
        prop_assert!(max_abs_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn static_channel_leaves_ofdm_diagonal(seed in any::<u64>(), paths in 1usize..4) {
        let spec = ChannelSpec { n_paths: paths, doppler_model: DopplerModel::Static, ..ChannelSpec::default() };
        let real = sample_channel(&spec, &mut SimRng::new(seed, 0));
        let modem = small_config("waveforms = ofdm").modem(Waveform::Ofdm).unwrap();
        let h = assemble_effective(&modem, &real, 0.1).unwrap().matrix;
        for r in 0..h.rows() {
            for c in 0..h.cols() {
                if r != c {
                    prop_assert!(h.row(r)[c].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_lmmse_recovers_every_modem(w in waveform(), seed in any::<u64>()) {
        let cfg = small_config("");
        let modem = cfg.modem(w).unwrap();
        let mut rng = SimRng::new(seed, 0);
        let real = sample_channel(&cfg.channel, &mut rng);
        let x = random_symbols(&modem, Alphabet::Qpsk, &mut rng);
        let eff = assemble_effective(&modem, &real, 0.0).unwrap();
        let y = eff.matrix.mul_vec(&x).unwrap();
        let out = lmmse_equalize(&y, &eff, Alphabet::Qpsk).unwrap();
        prop_assert!(max_abs_diff(&out.estimates, &x) < 1e-8);
    }

    #[test]
    fn lmmse_minimizes_regularized_cost(seed in any::<u64>(), sigma2 in 1e-3..2.0f64, alpha in 0.0..2.0f64) {
        let mut rng = SimRng::new(seed, 0);
        let h = random_matrix(8, 4, &mut rng);
        let y = complex_gaussian(8, 1.0, &mut rng);
        let eff = EffectiveChannel::new(h.clone(), sigma2);
        let lmmse = lmmse_equalize(&y, &eff, Alphabet::Qpsk).unwrap().estimates;
        let matched: Vec<Complex64> = h.adjoint_mul_vec(&y).unwrap().iter().map(|v| v * alpha).collect();
        let cost = |x: &[Complex64]| residual(&y, &h, x) + sigma2 * x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        prop_assert!(cost(&lmmse) <= cost(&matched) + 1e-12);
    }

    #[test]
    fn lmmse_approaches_least_squares(seed in any::<u64>()) {
        let mut rng = SimRng::new(seed, 0);
        let h = random_matrix(8, 4, &mut rng);
        let y = complex_gaussian(8, 1.0, &mut rng);
        let ls = Cholesky::factor(&h.gram()).unwrap().solve(&h.adjoint_mul_vec(&y).unwrap()).unwrap();
        let est = lmmse_equalize(&y, &EffectiveChannel::new(h, 1e-8), Alphabet::Qpsk).unwrap().estimates;
        prop_assert!(max_abs_diff(&est, &ls) < 1e-6);
    }

    #[test]
    fn hard_decisions_stay_in_alphabet(seed in any::<u64>(), bpsk in any::<bool>()) {
        let alphabet = if bpsk { Alphabet::Bpsk } else { Alphabet::Qpsk };
        let z = complex_gaussian(16, 1.0, &mut SimRng::new(seed, 0));
        let points = alphabet.points();
        let hard = hard_decisions(&z, alphabet);
        prop_assert_eq!(hard.bits.len(), 16 * alphabet.bits_per_symbol());
        prop_assert!(hard.symbols.iter().all(|s| points.iter().any(|p| (p - s).norm() < 1e-15)));
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), n in 1usize..12) {
        let b = random_matrix(n, n, &mut SimRng::new(seed, 0));
        let a = b.gram();
        let eig = hermitian_eigen(&a).unwrap();
        let trace = a.trace().re;
        prop_assert!((eig.values.iter().sum::<f64>() - trace).abs() <= 1e-9 * trace.abs().max(1.0));
    }

    #[test]
    fn pep_decreases_in_snr_and_eigenvalues(
        eigs in prop::collection::vec(1e-3..10.0f64, 1..4),
        gamma in 1e-2..1e4f64,
        bump in 1.0001..4.0f64,
        pick in any::<prop::sample::Index>(),
    ) {
        let spec = PairSpectrum { rank: eigs.len(), eigenvalues: eigs.clone(), hamming_bits: 1 };
        let base = pep(&spec, gamma, 3);
        prop_assert!(pep(&spec, gamma * bump, 3) < base);
        let mut larger = eigs;
        let i = pick.index(larger.len());
        larger[i] *= bump;
        let grown = PairSpectrum { eigenvalues: larger, ..spec };
        prop_assert!(pep(&grown, gamma, 3) < base);
    }

    #[test]
    fn pair_spectrum_is_symmetric(seed in any::<u64>(), dopplers in prop::collection::vec(-0.2..0.2f64, 1..4)) {
        let frame = FrameConfig { n_fft: 8, m_dft: 2, ..FrameConfig::default() };
        let modem = Modem::dfts_family(Waveform::ChirpedDftsOfdm, &frame).unwrap();
        let mut rng = SimRng::new(seed, 0);
        let a = map_bits(&rng.bits(4), Alphabet::Qpsk).unwrap();
        let mut flip = a.bits.clone();
        flip[0] ^= 1;
        let b = map_bits(&flip, Alphabet::Qpsk).unwrap();
        let ab = pair_spectrum(&modem, &a, &b, &dopplers).unwrap();
        let ba = pair_spectrum(&modem, &b, &a, &dopplers).unwrap();
        prop_assert_eq!(ab.rank, ba.rank);
        prop_assert!(ab.eigenvalues.iter().zip(&ba.eigenvalues).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn ber_points_are_probabilities(seed in any::<u64>()) {
        let mut cfg = small_config("waveforms = chirped-dfts-ofdm,ofdm");
        cfg.seed = seed;
        cfg.trials = 70;
        cfg.max_bit_errors = 50;
        cfg.snr_grid_db = vec![0.0, 10.0];
        for curve in run_ber(&cfg).unwrap() {
            for p in &curve.points {
                prop_assert!((0.0..=1.0).contains(&p.ber()));
                prop_assert!(p.trials <= cfg.trials && p.trials > 0);
            }
        }
    }
}

#[test]
fn average_channel_energy_is_unity() {
    let spec = ChannelSpec::default();
    let n = 16;
    let draws = 10_000;
    let total: f64 = (0..draws)
        .map(|t| {
            let real = sample_channel(&spec, &mut SimRng::new(3, t));
            build_time_channel(&real, n).unwrap().frobenius_norm_sqr() / n as f64
        })
        .sum();
    let mean = total / draws as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean energy {mean}");
}

#[test]
fn high_snr_bound_slope_matches_diversity() {
    let frame = FrameConfig {
        n_fft: 8,
        m_dft: 2,
        ..FrameConfig::default()
    };
    let modem = Modem::dfts_family(Waveform::ChirpedDftsOfdm, &frame).unwrap();
    for paths in 1..=3usize {
        let dopplers = vec![0.0; paths];
        let spectra = codeword_spectra(&modem, Alphabet::Bpsk, &dopplers).unwrap();
        let gd = spectra.iter().map(|s| s.rank).min().unwrap();
        let pts =
            union_bound_from_spectra(&spectra, 2, Alphabet::Bpsk, &[30.0, 40.0], paths, PepForm::HighSnr).unwrap();
        let slope = pts[1].ordinate.log10() - pts[0].ordinate.log10();
        assert!(
            (slope + gd as f64).abs() <= 0.15,
            "paths {paths}: slope {slope}, G_D {gd}"
        );
    }
}

#[test]
fn chirped_output_snr_is_flat_across_symbols() {
    let cfg = ExperimentConfig::parse("experiment = outsnr\ntrials = 16\nwaveforms = chirped-dfts-ofdm,ofdm").unwrap();
    let res = run_outsnr(&cfg).unwrap();
    assert!(res[0].max_over_min < 1.5, "chirped spread {}", res[0].max_over_min);
    assert!(res[1].max_over_min > 10.0, "ofdm spread {}", res[1].max_over_min);
}
