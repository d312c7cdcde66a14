//! SNR of a sampled sinusoid of known frequency.
//!
//! The record is truncated to a whole number of periods and fitted with
//! `a sin(ωn) + b cos(ωn) + c` by least squares. Signal power is
//! `(a² + b²)/2`, noise power the mean squared residual.

use crate::error::{ensure_pos, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

/// Bound on reported SNR magnitude; an exact fit or an empty signal hits it.
pub const SNR_CAP_DB: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransientMode {
    /// Skip the filter start-up until the slowest pole has decayed to 1e-6.
    Discard,
    /// Measure the filtered record from its first sample.
    Include,
}

impl TransientMode {
    pub fn name(self) -> &'static str {
        match self {
            TransientMode::Discard => "discard",
            TransientMode::Include => "include",
        }
    }
}

impl fmt::Display for TransientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" => Ok(TransientMode::Discard),
            "include" => Ok(TransientMode::Include),
            other => Err(crate::error::domain(
                "transient",
                format!("expected discard|include, got '{other}'"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrMeasurementPolicy {
    pub transient_mode: TransientMode,
    pub min_periods: usize,
}

impl SnrMeasurementPolicy {
    pub const DEFAULT_MIN_PERIODS: usize = 40;

    pub fn validate(&self) -> Result<()> {
        if self.min_periods == 0 {
            return Err(crate::error::domain("min_periods", "must be >= 1"));
        }
        Ok(())
    }

    /// Samples to skip at the start of a filtered record.
    pub fn skip(&self, transient_samples: usize) -> usize {
        match self.transient_mode {
            TransientMode::Discard => transient_samples,
            TransientMode::Include => 0,
        }
    }
}

impl Default for SnrMeasurementPolicy {
    fn default() -> Self {
        Self {
            transient_mode: TransientMode::Discard,
            min_periods: Self::DEFAULT_MIN_PERIODS,
        }
    }
}

/// Monte-Carlo SNR summary; `improvement_db = snr_after_db - snr_before_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub snr_before_db: f64,
    pub snr_after_db: f64,
    pub improvement_db: f64,
    pub trials: usize,
    pub ci_halfwidth_db: f64,
}

/// Least-squares sinusoid fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub sin_coef: f64,
    pub cos_coef: f64,
    pub dc: f64,
    pub signal_power: f64,
    pub noise_power: f64,
    pub samples_used: usize,
    pub periods: usize,
}

impl SineFit {
    pub fn snr_db(&self) -> f64 {
        if self.signal_power <= 0.0 {
            -SNR_CAP_DB
        } else if self.noise_power <= 0.0 {
            SNR_CAP_DB
        } else {
            (10.0 * (self.signal_power / self.noise_power).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB)
        }
    }
}

/// Fits the whole periods at the start of `samples`.
pub fn fit_sinusoid(
    samples: &[f64],
    signal_freq_hz: f64,
    sample_rate_hz: f64,
    min_periods: usize,
) -> Result<SineFit> {
    ensure_pos("signal_freq_hz", signal_freq_hz)?;
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    if sample_rate_hz <= 2.0 * signal_freq_hz {
        return Err(Error::Nyquist {
            what: "signal frequency",
            freq_hz: signal_freq_hz,
            sample_rate_hz,
        });
    }
    let period = sample_rate_hz / signal_freq_hz;
    let periods = (samples.len() as f64 / period).floor() as usize;
    if periods < min_periods.max(1) {
        return Err(Error::RecordTooShort {
            periods,
            required: min_periods.max(1),
        });
    }
    let m = ((periods as f64 * period).round() as usize).min(samples.len());
    let x = &samples[..m];
    let w = TAU * signal_freq_hz / sample_rate_hz;

    // normal equations for columns [sin, cos, 1]
    let mut g = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (i, &v) in x.iter().enumerate() {
        let (s, c) = (w * i as f64).sin_cos();
        let col = [s, c, 1.0];
        for p in 0..3 {
            r[p] += col[p] * v;
            for q in 0..3 {
                g[p][q] += col[p] * col[q];
            }
        }
    }
    let [a, b, dc] = solve3(g, r).ok_or(Error::Convergence("sinusoid least squares"))?;

    let noise_power = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (s, c) = (w * i as f64).sin_cos();
            let e = v - (a * s + b * c + dc);
            e * e
        })
        .sum::<f64>()
        / m as f64;
    Ok(SineFit {
        sin_coef: a,
        cos_coef: b,
        dc,
        signal_power: (a * a + b * b) / 2.0,
        noise_power,
        samples_used: m,
        periods,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut g: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| g[i][col].abs().partial_cmp(&g[j][col].abs()).unwrap())?;
        if g[piv][col].abs() < 1e-300 {
            return None;
        }
        g.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = g[row][col] / g[col][col];
            let pivot_row = g[col];
            for (x, p) in g[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            r[row] -= f * r[col];
        }
    }
    let mut out = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| g[row][k] * out[k]).sum();
        out[row] = (r[row] - tail) / g[row][row];
    }
    Some(out)
}

/// SNR in dB of `samples`, capped at ±[`SNR_CAP_DB`].
pub fn estimate_snr(
    samples: &[f64],
    signal_freq_hz: f64,
    sample_rate_hz: f64,
    policy: &SnrMeasurementPolicy,
) -> Result<f64> {
    policy.validate()?;
    Ok(fit_sinusoid(samples, signal_freq_hz, sample_rate_hz, policy.min_periods)?.snr_db())
}

/// SNR of a filtered record, skipping `transient_samples` first when the policy discards transients.
pub fn estimate_filtered_snr(
    samples: &[f64],
    signal_freq_hz: f64,
    sample_rate_hz: f64,
    policy: &SnrMeasurementPolicy,
    transient_samples: usize,
) -> Result<f64> {
    let skip = policy.skip(transient_samples).min(samples.len());
    estimate_snr(&samples[skip..], signal_freq_hz, sample_rate_hz, policy)
}

pub fn improvement(before_db: f64, after_db: f64) -> f64 {
    after_db - before_db
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;

    fn policy() -> SnrMeasurementPolicy {
        SnrMeasurementPolicy {
            transient_mode: TransientMode::Discard,
            min_periods: 50,
        }
    }

    fn tone(a: f64, f: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|i| a * (TAU * f * i as f64 / fs + phase).sin())
            .collect()
    }

    #[test]
    fn noiseless_is_capped() {
        let x = tone(1.0, 50.0, 100e3, 100_000, 0.2);
        assert_eq!(
            estimate_snr(&x, 50.0, 100e3, &policy()).unwrap(),
            SNR_CAP_DB
        );
        assert_eq!(
            estimate_snr(&vec![0.0; 100_000], 50.0, 100e3, &policy()).unwrap(),
            -SNR_CAP_DB
        );
    }

    #[test]
    fn zero_db_case() {
        let n = 100_000;
        let mut x = tone(1.0, 50.0, 100e3, n, 0.0);
        let mut g = GaussianStream::new(11);
        for v in x.iter_mut() {
            *v += std::f64::consts::FRAC_1_SQRT_2 * g.next_standard();
        }
        let snr = estimate_snr(&x, 50.0, 100e3, &policy()).unwrap();
        assert!(snr.abs() < 0.3, "{snr}");
    }

    #[test]
    fn noise_only_signal_power_near_zero() {
        let n = 100_000;
        let sigma = 1.0;
        let x = GaussianStream::new(5).samples(sigma, n);
        let fit = fit_sinusoid(&x, 50.0, 100e3, 50).unwrap();
        assert!(fit.signal_power < 3.0 * sigma * sigma * 2.0 / n as f64);
        assert!(fit.snr_db() < -30.0);
    }

    #[test]
    fn dc_offset_is_not_signal_or_noise() {
        let x: Vec<f64> = tone(1.0, 50.0, 100e3, 100_000, 0.0)
            .iter()
            .map(|v| v + 3.0)
            .collect();
        let fit = fit_sinusoid(&x, 50.0, 100e3, 50).unwrap();
        assert!((fit.dc - 3.0).abs() < 1e-9);
        assert_eq!(fit.snr_db(), SNR_CAP_DB);
    }

    #[test]
    fn short_record_and_nyquist() {
        let x = tone(1.0, 50.0, 100e3, 10_000, 0.0);
        assert_eq!(
            estimate_snr(&x, 50.0, 100e3, &policy()),
            Err(Error::RecordTooShort {
                periods: 5,
                required: 50
            })
        );
        assert!(matches!(
            estimate_snr(&x, 60e3, 100e3, &policy()),
            Err(Error::Nyquist { .. })
        ));
    }

    #[test]
    fn phase_invariance() {
        let n = 100_000;
        let noise = GaussianStream::new(21).samples(0.1, n);
        let snrs: Vec<f64> = (0..16)
            .map(|k| {
                let phase = TAU * k as f64 / 16.0;
                let x: Vec<f64> = tone(1.0, 50.0, 100e3, n, phase)
                    .iter()
                    .zip(&noise)
                    .map(|(s, e)| s + e)
                    .collect();
                estimate_snr(&x, 50.0, 100e3, &policy()).unwrap()
            })
            .collect();
        let spread = snrs.iter().cloned().fold(f64::MIN, f64::max)
            - snrs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.01, "{spread}");
    }

    #[test]
    fn one_sample_length_change_is_benign() {
        let n = 100_000;
        let f = 73.3;
        let noise = GaussianStream::new(2).samples(0.3, n + 1);
        let x: Vec<f64> = tone(1.0, f, 100e3, n + 1, 0.4)
            .iter()
            .zip(&noise)
            .map(|(s, e)| s + e)
            .collect();
        for len in [n - 1, n] {
            let a = estimate_snr(&x[..len], f, 100e3, &policy()).unwrap();
            let b = estimate_snr(&x[..len + 1], f, 100e3, &policy()).unwrap();
            assert!((a - b).abs() < 0.05);
        }
    }

    #[test]
    fn transient_skip() {
        let p = policy();
        assert_eq!(p.skip(300), 300);
        let inc = SnrMeasurementPolicy {
            transient_mode: TransientMode::Include,
            ..p
        };
        assert_eq!(inc.skip(300), 0);
        assert!(SnrMeasurementPolicy {
            min_periods: 0,
            ..p
        }
        .validate()
        .is_err());
    }

    #[test]
    fn improvement_bookkeeping() {
        assert_eq!(improvement(10.0, 25.0), 15.0);
        assert_eq!(improvement(7.5, 7.5), 0.0);
        assert_eq!(improvement(3.0, -2.0), -improvement(-2.0, 3.0));
    }
}
