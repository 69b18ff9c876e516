//! One interface over all five waveforms.
//!
//! Every modem is a pair of linear maps around the time-domain channel: a
//! transmitter `T` (symbols → N samples, orthonormal columns) and a unitary
//! receiver `R` (N samples → N observations). The fast paths below use FFTs;
//! [`Modem::transmit_matrix`] and [`Modem::receive_matrix`] build the same
//! maps densely from [`unitary_dft`] for cross-checking.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::baselines::{afdm_receive, afdm_transmit, otfs_receive, otfs_transmit, AfdmConfig, OtfsConfig};
use crate::error::{Error, Result};
use crate::numerics::{fft_unitary, ifft_unitary, unitary_dft, ComplexMatrix};
use crate::waveform::{
    dechirp_fft, dfts_transmit, dfts_transmit_adjoint, gen_chirp, ifft_chirp, interleaved_map, FrameConfig, TimeFrame,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Waveform {
    ChirpedDftsOfdm,
    DftsOfdm,
    Ofdm,
    Afdm,
    Otfs,
}

impl Waveform {
    pub const ALL: [Waveform; 5] = [
        Waveform::ChirpedDftsOfdm,
        Waveform::DftsOfdm,
        Waveform::Afdm,
        Waveform::Otfs,
        Waveform::Ofdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Waveform::ChirpedDftsOfdm => "chirped-dfts-ofdm",
            Waveform::DftsOfdm => "dfts-ofdm",
            Waveform::Ofdm => "ofdm",
            Waveform::Afdm => "afdm",
            Waveform::Otfs => "otfs",
        }
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Waveform::ALL
            .into_iter()
            .find(|w| w.name() == key)
            .ok_or_else(|| Error::config(format!("unknown waveform '{s}'")))
    }
}

#[derive(Clone, Debug)]
enum Chain {
    Dfts {
        m_dft: usize,
        chirp: Option<Vec<Complex64>>,
    },
    Ofdm,
    Afdm {
        l1: Vec<Complex64>,
        l2: Vec<Complex64>,
    },
    Otfs(OtfsConfig),
}

#[derive(Clone, Debug)]
pub struct Modem {
    waveform: Waveform,
    n_fft: usize,
    chain: Chain,
}

impl Modem {
    pub fn new(waveform: Waveform, frame: &FrameConfig, afdm: &AfdmConfig, otfs: &OtfsConfig) -> Result<Self> {
        frame.validate()?;
        let n = frame.n_fft;
        let chain = match waveform {
            Waveform::ChirpedDftsOfdm => Chain::Dfts {
                m_dft: frame.m_dft,
                chirp: Some(gen_chirp(n, frame.chirp_rate()?)),
            },
            Waveform::DftsOfdm => Chain::Dfts {
                m_dft: frame.m_dft,
                chirp: None,
            },
            Waveform::Ofdm => Chain::Ofdm,
            Waveform::Afdm => {
                afdm.validate()?;
                if afdm.n_fft != n {
                    return Err(Error::config(format!("AFDM length {} != n_fft {n}", afdm.n_fft)));
                }
                Chain::Afdm {
                    l1: AfdmConfig::lambda(n, afdm.c1),
                    l2: AfdmConfig::lambda(n, afdm.c2),
                }
            }
            Waveform::Otfs => {
                otfs.validate(n)?;
                Chain::Otfs(otfs.clone())
            }
        };
        Ok(Self {
            waveform,
            n_fft: n,
            chain,
        })
    }

    /// Modem for the DFT-spread family with baseline parameters left unused.
    pub fn dfts_family(waveform: Waveform, frame: &FrameConfig) -> Result<Self> {
        let afdm = AfdmConfig::for_doppler(frame.n_fft, 0.0);
        let otfs = OtfsConfig {
            delay_bins: frame.n_fft,
            doppler_bins: 1,
        };
        Self::new(waveform, frame, &afdm, &otfs)
    }

    pub fn waveform(&self) -> Waveform {
        self.waveform
    }

    /// Frame length `N` (without CP).
    pub fn samples(&self) -> usize {
        self.n_fft
    }

    /// Data symbols carried per frame.
    pub fn symbols(&self) -> usize {
        match &self.chain {
            Chain::Dfts { m_dft, .. } => *m_dft,
            _ => self.n_fft,
        }
    }

    /// True when `T` is square (and therefore unitary).
    pub fn is_square(&self) -> bool {
        self.symbols() == self.n_fft
    }

    fn check(&self, v: &[Complex64], expected: usize, what: &str) {
        assert_eq!(
            v.len(),
            expected,
            "{} {what}: length {} != {expected}",
            self.waveform,
            v.len()
        );
    }

    /// `T·x`.
    ///
    /// # Panics
    ///
    /// Panics if `x.len() != self.symbols()`.
    pub fn transmit(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.check(x, self.symbols(), "transmit");
        match &self.chain {
            Chain::Dfts { chirp, .. } => dfts_transmit(x, self.n_fft, chirp.as_deref()),
            Chain::Ofdm => {
                let mut s = x.to_vec();
                ifft_unitary(&mut s);
                s
            }
            Chain::Afdm { l1, l2 } => afdm_transmit(x, l1, l2),
            Chain::Otfs(cfg) => otfs_transmit(x, cfg),
        }
    }

    /// `Tᴴ·s`.
    pub fn transmit_adjoint(&self, s: &[Complex64]) -> Vec<Complex64> {
        self.check(s, self.n_fft, "transmit adjoint");
        match &self.chain {
            Chain::Dfts { m_dft, chirp } => dfts_transmit_adjoint(s, *m_dft, chirp.as_deref()),
            Chain::Ofdm => {
                let mut x = s.to_vec();
                fft_unitary(&mut x);
                x
            }
            // square unitary chains: Tᴴ = T⁻¹ = R
            Chain::Afdm { l1, l2 } => afdm_receive(s, l1, l2),
            Chain::Otfs(cfg) => otfs_receive(s, cfg),
        }
    }

    /// `R·r`.
    pub fn receive(&self, r: &[Complex64]) -> Vec<Complex64> {
        self.check(r, self.n_fft, "receive");
        match &self.chain {
            Chain::Dfts { chirp, .. } => dechirp_fft(r, chirp.as_deref()),
            Chain::Ofdm => dechirp_fft(r, None),
            Chain::Afdm { l1, l2 } => afdm_receive(r, l1, l2),
            Chain::Otfs(cfg) => otfs_receive(r, cfg),
        }
    }

    /// `Rᴴ·y`.
    pub fn receive_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.check(y, self.n_fft, "receive adjoint");
        match &self.chain {
            Chain::Dfts { chirp, .. } => ifft_chirp(y, chirp.as_deref()),
            Chain::Ofdm => ifft_chirp(y, None),
            Chain::Afdm { l1, l2 } => afdm_transmit(y, l1, l2),
            Chain::Otfs(cfg) => otfs_transmit(y, cfg),
        }
    }

    /// Time-domain frame with a `cp_len`-sample cyclic prefix.
    pub fn modulate(&self, x: &[Complex64], cp_len: usize) -> Result<TimeFrame> {
        if x.len() != self.symbols() {
            return Err(Error::dim(format!(
                "{} symbols for a {} frame of {}",
                x.len(),
                self.waveform,
                self.symbols()
            )));
        }
        TimeFrame::with_cp(self.transmit(x), cp_len)
    }

    /// Receiver-domain observations from a frame (CP stripped if present).
    pub fn demodulate(&self, frame: &TimeFrame) -> Result<Vec<Complex64>> {
        let body = frame.body();
        if body.len() != self.n_fft {
            return Err(Error::dim(format!(
                "frame body of {} samples, expected {}",
                body.len(),
                self.n_fft
            )));
        }
        Ok(self.receive(body))
    }

    /// Dense `T` assembled from the defining matrix products.
    pub fn transmit_matrix(&self) -> ComplexMatrix {
        let n = self.n_fft;
        let product = |a: ComplexMatrix, b: &ComplexMatrix| a.matmul(b).expect("conformant modem factors");
        match &self.chain {
            Chain::Dfts { m_dft, chirp } => {
                let p = interleaved_map(n, *m_dft).expect("validated dimensions");
                let core = product(product(unitary_dft(n).adjoint(), &p), &unitary_dft(*m_dft));
                match chirp {
                    Some(c) => product(ComplexMatrix::diag(c), &core),
                    None => core,
                }
            }
            Chain::Ofdm => unitary_dft(n).adjoint(),
            Chain::Afdm { l1, l2 } => product(
                product(ComplexMatrix::diag(l1).adjoint(), &unitary_dft(n).adjoint()),
                &ComplexMatrix::diag(l2).adjoint(),
            ),
            Chain::Otfs(cfg) => {
                let (m_bins, n_bins) = (cfg.delay_bins, cfg.doppler_bins);
                let f = unitary_dft(n_bins);
                ComplexMatrix::from_fn(n, n, |row, col| {
                    let (slot, delay) = (row / m_bins, row % m_bins);
                    let (m, k) = (col / n_bins, col % n_bins);
                    if m == delay {
                        f[(k, slot)].conj()
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
        }
    }

    /// Dense `R`.
    pub fn receive_matrix(&self) -> ComplexMatrix {
        let n = self.n_fft;
        match &self.chain {
            Chain::Dfts { chirp: Some(c), .. } => unitary_dft(n)
                .matmul(&ComplexMatrix::diag(c).adjoint())
                .expect("square factors"),
            Chain::Dfts { chirp: None, .. } | Chain::Ofdm => unitary_dft(n),
            Chain::Afdm { .. } | Chain::Otfs(_) => self.transmit_matrix().adjoint(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_gaussian, max_abs_diff, SimRng};
    use crate::waveform::Alphabet;

    fn frame(n: usize, m: usize) -> FrameConfig {
        FrameConfig {
            n_fft: n,
            m_dft: m,
            chirp_a: 1,
            chirp_b: 0,
            cp_len: 2,
            alphabet: Alphabet::Qpsk,
        }
    }

    fn all_modems(n: usize, m: usize) -> Vec<Modem> {
        let f = frame(n, m);
        let afdm = AfdmConfig::for_doppler(n, 0.13);
        let otfs = OtfsConfig {
            delay_bins: 4,
            doppler_bins: n / 4,
        };
        Waveform::ALL
            .iter()
            .map(|&w| Modem::new(w, &f, &afdm, &otfs).unwrap())
            .collect()
    }

    #[test]
    fn names_round_trip() {
        for w in Waveform::ALL {
            assert_eq!(w.name().parse::<Waveform>().unwrap(), w);
        }
        assert_eq!(
            "CHIRPED_DFTS_OFDM".parse::<Waveform>().unwrap(),
            Waveform::ChirpedDftsOfdm
        );
        assert!("ofdma".parse::<Waveform>().is_err());
    }

    #[test]
    fn fast_paths_match_dense_matrices() {
        let mut rng = SimRng::new(17, 0);
        for modem in all_modems(32, 8) {
            let t = modem.transmit_matrix();
            let r = modem.receive_matrix();
            let x = complex_gaussian(modem.symbols(), 1.0, &mut rng);
            let s = complex_gaussian(32, 1.0, &mut rng);
            let w = modem.waveform();
            assert!(
                max_abs_diff(&modem.transmit(&x), &t.mul_vec(&x).unwrap()) < 1e-10,
                "{w} T"
            );
            assert!(
                max_abs_diff(&modem.transmit_adjoint(&s), &t.adjoint_mul_vec(&s).unwrap()) < 1e-10,
                "{w} Tᴴ"
            );
            assert!(
                max_abs_diff(&modem.receive(&s), &r.mul_vec(&s).unwrap()) < 1e-10,
                "{w} R"
            );
            assert!(
                max_abs_diff(&modem.receive_adjoint(&s), &r.adjoint_mul_vec(&s).unwrap()) < 1e-10,
                "{w} Rᴴ"
            );
        }
    }

    #[test]
    fn transmitters_have_orthonormal_columns_and_unitary_receivers() {
        for modem in all_modems(64, 16) {
            let k = modem.symbols();
            let g = modem.transmit_matrix().gram();
            assert!(
                g.max_abs_diff(&ComplexMatrix::identity(k)) < 1e-12,
                "{}",
                modem.waveform()
            );
            let r = modem.receive_matrix();
            assert!(r.gram().max_abs_diff(&ComplexMatrix::identity(64)) < 1e-12);
        }
    }

    #[test]
    fn loopback_through_identity_channel() {
        let mut rng = SimRng::new(9, 0);
        for modem in all_modems(64, 16) {
            let x = complex_gaussian(modem.symbols(), 1.0, &mut rng);
            let frame = modem.modulate(&x, 3).unwrap();
            let y = modem.demodulate(&frame).unwrap();
            let back = modem.transmit_adjoint(&modem.receive_adjoint(&y));
            assert!(max_abs_diff(&back, &x) < 1e-10, "{}", modem.waveform());
        }
    }

    #[test]
    fn dimension_errors() {
        let modem = &all_modems(16, 4)[0];
        assert!(modem.modulate(&[Complex64::new(1.0, 0.0); 5], 0).is_err());
        assert!(modem
            .demodulate(&TimeFrame::without_cp(vec![Complex64::new(0.0, 0.0); 15]))
            .is_err());
    }
}
