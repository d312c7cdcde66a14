//! Common-emitter signal chain modelled as an ideal voltage gain.
//!
//! Noise is injected at the base, before the gain, so the output noise is the
//! base noise scaled by the gain along with the signal.

use crate::error::{ensure_nonneg, ensure_pos, Error, Result};
use crate::noise::{gen_shot_noise, gen_thermal_noise, ThermalNoiseSpec};
use crate::rng::substream_seed;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Sinusoidal source at the amplifier input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub frequency_hz: f64,
    /// Peak amplitude in volts.
    pub amplitude_volt: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_pos("source.frequency_hz", self.frequency_hz)?;
        ensure_pos("source.amplitude_volt", self.amplitude_volt)?;
        if !self.phase_rad.is_finite() {
            return Err(crate::error::domain("source.phase_rad", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierSpec {
    pub voltage_gain: f64,
}

impl AmplifierSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_pos("amplifier.voltage_gain", self.voltage_gain)
    }
}

/// Optional shot-noise contribution: the base-current shot noise is turned
/// into a base voltage through `transresistance_ohm`. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotInjection {
    pub base_current_amp: f64,
    pub transresistance_ohm: f64,
}

/// Clean and noisy amplifier output waveforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
}

pub fn gen_source(src: &SourceSpec, sample_rate_hz: f64, n_samples: usize) -> Result<Vec<f64>> {
    src.validate()?;
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    if sample_rate_hz <= 2.0 * src.frequency_hz {
        return Err(Error::Nyquist {
            what: "source frequency",
            freq_hz: src.frequency_hz,
            sample_rate_hz,
        });
    }
    let w = TAU * src.frequency_hz / sample_rate_hz;
    Ok((0..n_samples)
        .map(|i| src.amplitude_volt * (w * i as f64 + src.phase_rad).sin())
        .collect())
}

/// Output-referred RMS: `gain * base_rms`. Applies to voltages and currents alike.
pub fn output_noise_rms(base_noise_rms: f64, amp: &AmplifierSpec) -> Result<f64> {
    ensure_nonneg("base_noise_rms", base_noise_rms)?;
    amp.validate()?;
    Ok(amp.voltage_gain * base_noise_rms)
}

/// Synthesises `gain * source` and `gain * (source + base noise)`.
///
/// Thermal noise uses `noise.resistance_ohm` and `noise.temperature_kelvin`;
/// its bandwidth is implied by the sample rate (`fs/2`), so `noise.bandwidth_hz`
/// is not consulted.
pub fn synthesize_chain(
    src: &SourceSpec,
    amp: &AmplifierSpec,
    noise: &ThermalNoiseSpec,
    sample_rate_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ChainOutput> {
    synthesize_chain_with_shot(src, amp, noise, None, sample_rate_hz, n_samples, seed)
}

pub fn synthesize_chain_with_shot(
    src: &SourceSpec,
    amp: &AmplifierSpec,
    noise: &ThermalNoiseSpec,
    shot: Option<&ShotInjection>,
    sample_rate_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ChainOutput> {
    amp.validate()?;
    let source = gen_source(src, sample_rate_hz, n_samples)?;
    let mut base_noise = gen_thermal_noise(
        noise.resistance_ohm,
        noise.temperature_kelvin,
        sample_rate_hz,
        n_samples,
        seed,
    )?;
    if let Some(shot) = shot {
        ensure_nonneg("shot.transresistance_ohm", shot.transresistance_ohm)?;
        let current = gen_shot_noise(
            shot.base_current_amp,
            sample_rate_hz,
            n_samples,
            substream_seed(seed, 1),
        )?;
        for (v, i) in base_noise.iter_mut().zip(current) {
            *v += i * shot.transresistance_ohm;
        }
    }
    let g = amp.voltage_gain;
    let clean: Vec<f64> = source.iter().map(|s| g * s).collect();
    let noisy = source
        .iter()
        .zip(&base_noise)
        .map(|(s, n)| g * (s + n))
        .collect();
    Ok(ChainOutput { clean, noisy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn src(f: f64, a: f64, phase: f64) -> SourceSpec {
        SourceSpec {
            frequency_hz: f,
            amplitude_volt: a,
            phase_rad: phase,
        }
    }

    #[test]
    fn source_quarter_period_peak() {
        let s = gen_source(&src(50.0, 1.0, 0.0), 100e3, 2000).unwrap();
        assert_eq!(s.len(), 2000);
        assert_eq!(s[0], 0.0);
        assert!((s[500] - 1.0).abs() < 1e-12);
        let c = gen_source(&src(50.0, 1.0, FRAC_PI_2), 100e3, 10).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn source_rms_over_whole_periods() {
        let s = gen_source(&src(50.0, 1.0, 0.3), 100e3, 20_000).unwrap();
        let rms = (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        assert!((rms - std::f64::consts::FRAC_1_SQRT_2).abs() / rms < 1e-9);
    }

    #[test]
    fn source_nyquist_violation() {
        assert!(matches!(
            gen_source(&src(50e3, 1.0, 0.0), 100e3, 10),
            Err(Error::Nyquist { .. })
        ));
        assert!(gen_source(&src(0.0, 1.0, 0.0), 100e3, 10).is_err());
    }

    #[test]
    fn output_referred_noise() {
        let amp = AmplifierSpec {
            voltage_gain: 100.0,
        };
        let v = output_noise_rms(1.287e-6, &amp).unwrap();
        assert!((v - 128.7e-6).abs() / 128.7e-6 < 5e-3);
        let i = output_noise_rms(5.7e-10, &amp).unwrap();
        assert!((i - 5.7e-8).abs() / 5.7e-8 < 1e-12);
        let unity = AmplifierSpec { voltage_gain: 1.0 };
        assert_eq!(output_noise_rms(3.5e-6, &unity).unwrap(), 3.5e-6);
        assert!(output_noise_rms(-1.0, &amp).is_err());
    }

    fn thermal(r: f64) -> ThermalNoiseSpec {
        ThermalNoiseSpec {
            resistance_ohm: r,
            temperature_kelvin: 300.0,
            bandwidth_hz: 50e3,
        }
    }

    #[test]
    fn noiseless_chain_is_clean() {
        let out = synthesize_chain(
            &src(50.0, 1e-3, 0.0),
            &AmplifierSpec {
                voltage_gain: 100.0,
            },
            &thermal(0.0),
            100e3,
            4000,
            1,
        )
        .unwrap();
        assert_eq!(out.clean, out.noisy);
        let peak = out.clean.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 0.1).abs() < 1e-12);
    }

    #[test]
    fn gain_scales_both_outputs() {
        let a = synthesize_chain(
            &src(50.0, 1e-3, 0.0),
            &AmplifierSpec { voltage_gain: 10.0 },
            &thermal(10e3),
            100e3,
            1000,
            5,
        )
        .unwrap();
        let b = synthesize_chain(
            &src(50.0, 1e-3, 0.0),
            &AmplifierSpec { voltage_gain: 40.0 },
            &thermal(10e3),
            100e3,
            1000,
            5,
        )
        .unwrap();
        for (x, y) in a.noisy.iter().zip(&b.noisy) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn shot_injection_adds_noise() {
        let shot = ShotInjection {
            base_current_amp: 10e-6,
            transresistance_ohm: 10e3,
        };
        let base = synthesize_chain(
            &src(50.0, 1e-3, 0.0),
            &AmplifierSpec { voltage_gain: 1.0 },
            &thermal(0.0),
            100e3,
            100_000,
            3,
        )
        .unwrap();
        let with_shot = synthesize_chain_with_shot(
            &src(50.0, 1e-3, 0.0),
            &AmplifierSpec { voltage_gain: 1.0 },
            &thermal(0.0),
            Some(&shot),
            100e3,
            100_000,
            3,
        )
        .unwrap();
        let resid: f64 = with_shot
            .noisy
            .iter()
            .zip(&base.noisy)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 100_000.0;
        let expected = 2.0 * crate::noise::ELECTRON_CHARGE_Q * 10e-6 * 50e3 * 1e8;
        assert!((resid - expected).abs() / expected < 0.02);
    }
}
