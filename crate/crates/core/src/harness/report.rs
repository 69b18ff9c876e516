//! CSV output with a leading `# key=value` metadata block.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::runner::ExperimentResult;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn metadata(cfg: &ExperimentConfig) -> String {
    let mut out = format!("# library=chirpofdm\n# version={VERSION}\n");
    for (k, v) in cfg.entries() {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Renders a result as CSV text. Identical inputs give identical bytes.
pub fn render_csv(cfg: &ExperimentConfig, result: &ExperimentResult) -> String {
    let mut out = metadata(cfg);
    match result {
        ExperimentResult::Ber(curves) => {
            out.push_str("waveform,snr_db,trials,bit_errors,ber\n");
            for c in curves {
                for p in &c.points {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        c.waveform,
                        p.snr_db,
                        p.trials,
                        p.bit_errors,
                        p.ber()
                    );
                }
            }
        }
        ExperimentResult::Papr(res) => {
            out.push_str("waveform,papr_db,ccdf\n");
            for s in &res.series {
                for &(t, p) in &s.curve.points {
                    let _ = writeln!(out, "{},{t:.1},{p}", s.waveform);
                }
            }
        }
        ExperimentResult::OutSnr(summaries) => {
            for s in summaries {
                let w = s.waveform;
                let _ = writeln!(out, "# draws.{w}={}", s.draws);
                let _ = writeln!(out, "# aggregate_snr_db.{w}={}", s.aggregate_snr_db);
                let _ = writeln!(out, "# mean_ratio_snr_db.{w}={}", s.mean_ratio_snr_db);
                let _ = writeln!(out, "# min_over_median.{w}={}", s.min_over_median);
                let _ = writeln!(out, "# max_over_min.{w}={}", s.max_over_min);
            }
            out.push_str("waveform,symbol_index,signal_power,noise_power,snr_db\n");
            for s in summaries {
                for (i, ((sig, noise), snr)) in s
                    .per_symbol_signal
                    .iter()
                    .zip(&s.per_symbol_noise)
                    .zip(s.per_symbol_snr_db())
                    .enumerate()
                {
                    let _ = writeln!(out, "{},{i},{sig},{noise},{snr}", s.waveform);
                }
            }
        }
        ExperimentResult::Bound(b) => {
            let _ = writeln!(out, "# analysis_waveform={}", b.waveform);
            let _ = writeln!(out, "# analysis_dopplers={}", join(&b.dopplers));
            let _ = writeln!(out, "# diversity_order={}", b.diversity_order);
            out.push_str("snr_db,ber_bound\n");
            for p in &b.points {
                let _ = writeln!(out, "{},{}", p.abscissa, p.ordinate);
            }
        }
        ExperimentResult::Diversity(d) => {
            let _ = writeln!(out, "# analysis_waveform={}", d.waveform);
            let _ = writeln!(out, "# analysis_dopplers={}", join(&d.dopplers));
            out.push_str("diversity_order\n");
            let _ = writeln!(out, "{}", d.diversity_order);
        }
    }
    out
}

pub fn emit_csv(cfg: &ExperimentConfig, result: &ExperimentResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(cfg, result)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runner::run;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!("n_fft = 16\nm_dft = 4\notfs_delay_bins = 4\n{text}")).unwrap()
    }

    fn header_and_rows(csv: &str) -> (String, Vec<String>) {
        let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap().to_string();
        (header, lines.map(str::to_string).collect())
    }

    #[test]
    fn ber_schema_and_determinism() {
        let c = cfg("trials = 64\nsnr_grid_db = 0:10:5");
        let a = render_csv(&c, &run(&c).unwrap());
        let b = render_csv(&c, &run(&c).unwrap());
        assert_eq!(a, b);
        let (header, rows) = header_and_rows(&a);
        assert_eq!(header, "waveform,snr_db,trials,bit_errors,ber");
        assert_eq!(rows.len(), 15);
        assert!(a.contains("# seed=1\n"));
        assert!(a.contains(&format!("# version={VERSION}\n")));
    }

    #[test]
    fn papr_rows_are_monotone() {
        let c = cfg("experiment = papr\ntrials = 200");
        let csv = render_csv(&c, &run(&c).unwrap());
        let (header, rows) = header_and_rows(&csv);
        assert_eq!(header, "waveform,papr_db,ccdf");
        let mut last: Option<(String, f64)> = None;
        for row in rows {
            let f: Vec<&str> = row.split(',').collect();
            let p: f64 = f[2].parse().unwrap();
            if let Some((w, q)) = &last {
                if w == f[0] {
                    assert!(p <= *q);
                }
            }
            last = Some((f[0].to_string(), p));
        }
    }

    #[test]
    fn bound_and_diversity_schemas() {
        let base = "n_fft = 8\nm_dft = 2\nalphabet = bpsk\nwaveforms = chirped-dfts-ofdm";
        let c = ExperimentConfig::parse(&format!("{base}\nexperiment = bound\nsnr_grid_db = 0:4:2")).unwrap();
        let csv = render_csv(&c, &run(&c).unwrap());
        assert!(csv.contains("# diversity_order=3\n"));
        assert_eq!(header_and_rows(&csv).0, "snr_db,ber_bound");
        let c = ExperimentConfig::parse(&format!("{base}\nexperiment = diversity")).unwrap();
        let csv = render_csv(&c, &run(&c).unwrap());
        let (header, rows) = header_and_rows(&csv);
        assert_eq!(header, "diversity_order");
        assert_eq!(rows, vec!["3".to_string()]);
    }

    #[test]
    fn outsnr_schema() {
        let c = cfg("experiment = outsnr\ntrials = 4\nwaveforms = ofdm");
        let csv = render_csv(&c, &run(&c).unwrap());
        let (header, rows) = header_and_rows(&csv);
        assert_eq!(header, "waveform,symbol_index,signal_power,noise_power,snr_db");
        assert_eq!(rows.len(), 16);
        assert!(csv.contains("# aggregate_snr_db.ofdm="));
    }

    #[test]
    fn write_failure_names_path() {
        let c = cfg("experiment = diversity\nn_fft = 8\nm_dft = 2\nalphabet = bpsk");
        let res = run(&c).unwrap();
        let err = emit_csv(&c, &res, Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
