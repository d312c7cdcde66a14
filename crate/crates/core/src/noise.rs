//! Physical noise sources at the transistor base.
//!
//! Thermal (Johnson–Nyquist) noise of the base resistor, shot noise of the DC
//! base current, a fixed-bias model relating the two, and seeded white
//! Gaussian realisations whose one-sided PSD matches the closed forms.

use crate::error::{domain, ensure_nonneg, ensure_pos, Result};
use crate::rng::GaussianStream;
use serde::{Deserialize, Serialize};

/// Physical constants (exact SI values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J/K
    pub boltzmann_k: f64,
    /// C
    pub electron_charge_q: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    boltzmann_k: BOLTZMANN_K,
    electron_charge_q: ELECTRON_CHARGE_Q,
};

pub const BOLTZMANN_K: f64 = 1.380649e-23;
pub const ELECTRON_CHARGE_Q: f64 = 1.602176634e-19;

/// Johnson–Nyquist noise of a resistor observed over a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalNoiseSpec {
    pub resistance_ohm: f64,
    pub temperature_kelvin: f64,
    pub bandwidth_hz: f64,
}

impl ThermalNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("resistance_ohm", self.resistance_ohm)?;
        ensure_pos("temperature_kelvin", self.temperature_kelvin)?;
        ensure_nonneg("bandwidth_hz", self.bandwidth_hz)
    }
}

/// Shot noise of a DC current observed over a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseSpec {
    pub base_current_amp: f64,
    pub bandwidth_hz: f64,
}

impl ShotNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("base_current_amp", self.base_current_amp)?;
        ensure_nonneg("bandwidth_hz", self.bandwidth_hz)
    }
}

/// Fixed-bias common-emitter stage: `I_B = (V_CC - V_BE) / R_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub vcc_volt: f64,
    pub vbe_volt: f64,
    pub base_resistor_ohm: f64,
}

impl BiasModel {
    pub const DEFAULT_VCC: f64 = 12.0;
    pub const DEFAULT_VBE: f64 = 0.7;

    /// 12 V supply, 0.7 V base-emitter drop.
    pub fn with_resistor(base_resistor_ohm: f64) -> Self {
        Self {
            vcc_volt: Self::DEFAULT_VCC,
            vbe_volt: Self::DEFAULT_VBE,
            base_resistor_ohm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_pos("base_resistor_ohm", self.base_resistor_ohm)?;
        if !(self.vcc_volt.is_finite() && self.vbe_volt.is_finite())
            || self.vcc_volt <= self.vbe_volt
        {
            return Err(domain(
                "vcc_volt",
                format!(
                    "must exceed vbe_volt ({} <= {})",
                    self.vcc_volt, self.vbe_volt
                ),
            ));
        }
        Ok(())
    }
}

/// RMS thermal noise voltage `sqrt(4 k T R B)`.
pub fn thermal_noise_rms(spec: &ThermalNoiseSpec) -> Result<f64> {
    spec.validate()?;
    Ok(
        (4.0 * BOLTZMANN_K * spec.temperature_kelvin * spec.resistance_ohm * spec.bandwidth_hz)
            .sqrt(),
    )
}

/// RMS shot noise current `sqrt(2 q I_B W)`.
pub fn shot_noise_rms(spec: &ShotNoiseSpec) -> Result<f64> {
    spec.validate()?;
    Ok((2.0 * ELECTRON_CHARGE_Q * spec.base_current_amp * spec.bandwidth_hz).sqrt())
}

/// One-sided thermal noise PSD `4 k T R` in V²/Hz. Noise power over a band `B` is `psd * B`.
pub fn thermal_psd_onesided(resistance_ohm: f64, temperature_kelvin: f64) -> Result<f64> {
    ensure_nonneg("resistance_ohm", resistance_ohm)?;
    ensure_pos("temperature_kelvin", temperature_kelvin)?;
    Ok(4.0 * BOLTZMANN_K * temperature_kelvin * resistance_ohm)
}

/// One-sided shot noise PSD `2 q I_B` in A²/Hz.
pub fn shot_psd_onesided(base_current_amp: f64) -> Result<f64> {
    ensure_nonneg("base_current_amp", base_current_amp)?;
    Ok(2.0 * ELECTRON_CHARGE_Q * base_current_amp)
}

pub fn base_current_from_bias(bias: &BiasModel) -> Result<f64> {
    bias.validate()?;
    Ok((bias.vcc_volt - bias.vbe_volt) / bias.base_resistor_ohm)
}

/// White Gaussian thermal noise sampled at `sample_rate_hz`.
///
/// Per-sample variance is `4kTR * fs/2`: the one-sided PSD `4kTR` spread
/// over `[0, fs/2]`, so any ideal band-limit `B <= fs/2` leaves `sqrt(4kTRB)`.
pub fn gen_thermal_noise(
    resistance_ohm: f64,
    temperature_kelvin: f64,
    sample_rate_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    let psd = thermal_psd_onesided(resistance_ohm, temperature_kelvin)?;
    let sigma = (psd * sample_rate_hz / 2.0).sqrt();
    Ok(GaussianStream::new(seed).samples(sigma, n_samples))
}

/// White Gaussian shot-noise current (A) with one-sided PSD `2 q I_B` over `[0, fs/2]`.
pub fn gen_shot_noise(
    base_current_amp: f64,
    sample_rate_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    let psd = shot_psd_onesided(base_current_amp)?;
    let sigma = (psd * sample_rate_hz / 2.0).sqrt();
    Ok(GaussianStream::new(seed).samples(sigma, n_samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn thermal(r: f64, t: f64, b: f64) -> f64 {
        thermal_noise_rms(&ThermalNoiseSpec {
            resistance_ohm: r,
            temperature_kelvin: t,
            bandwidth_hz: b,
        })
        .unwrap()
    }

    fn shot(i: f64, w: f64) -> f64 {
        shot_noise_rms(&ShotNoiseSpec {
            base_current_amp: i,
            bandwidth_hz: w,
        })
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn thermal_worked_values() {
        assert!(rel(thermal(10e3, 300.0, 10e3), 1.287e-6) < 5e-3);
        assert!(rel(thermal(100e3, 300.0, 10e3), 4.070e-6) < 5e-3);
        assert_eq!(thermal(123.0, 300.0, 0.0), 0.0);
        assert_eq!(thermal(0.0, 300.0, 1e4), 0.0);
    }

    #[test]
    fn shot_worked_values() {
        assert!(rel(shot(10e-6, 1e5), 5.66e-10) < 5e-3);
        assert!(rel(shot(10e-6, 1e4), 1.789e-10) < 5e-3);
        assert_eq!(shot(0.0, 1e4), 0.0);
    }

    #[test]
    fn psd_values() {
        let p = thermal_psd_onesided(10e3, 300.0).unwrap();
        assert!(rel(p, 1.657e-16) < 1e-3);
        assert_eq!(thermal_psd_onesided(0.0, 300.0).unwrap(), 0.0);
        assert!(rel(p * 1e4, 1.287e-6f64.powi(2)) < 1e-2);
    }

    #[test]
    fn domain_errors() {
        let bad = |r, t, b| {
            thermal_noise_rms(&ThermalNoiseSpec {
                resistance_ohm: r,
                temperature_kelvin: t,
                bandwidth_hz: b,
            })
            .is_err()
        };
        assert!(bad(-1.0, 300.0, 1.0));
        assert!(bad(1.0, 0.0, 1.0));
        assert!(bad(1.0, -5.0, 1.0));
        assert!(bad(1.0, 300.0, -1.0));
        assert!(bad(f64::NAN, 300.0, 1.0));
        assert!(shot_noise_rms(&ShotNoiseSpec {
            base_current_amp: -1e-6,
            bandwidth_hz: 1.0
        })
        .is_err());
        assert!(thermal_psd_onesided(1.0, 0.0).is_err());
        assert!(gen_thermal_noise(1.0, 300.0, 0.0, 10, 1).is_err());
    }

    #[test]
    fn bias_model() {
        let ib = base_current_from_bias(&BiasModel::with_resistor(1.13e6)).unwrap();
        assert!(rel(ib, 10e-6) < 1e-9);
        let ib = base_current_from_bias(&BiasModel::with_resistor(1.13e3)).unwrap();
        assert!(rel(ib, 10e-3) < 1e-9);
        let near = BiasModel {
            vcc_volt: 0.7 + 1e-9,
            vbe_volt: 0.7,
            base_resistor_ohm: 1e3,
        };
        assert!(base_current_from_bias(&near).unwrap() < 1e-11);
        assert!(base_current_from_bias(&BiasModel::with_resistor(0.0)).is_err());
        let inverted = BiasModel {
            vcc_volt: 0.5,
            vbe_volt: 0.7,
            base_resistor_ohm: 1e3,
        };
        assert!(base_current_from_bias(&inverted).is_err());
    }

    #[test]
    fn generated_noise_statistics() {
        let n = 1_000_000;
        let x = gen_thermal_noise(10e3, 300.0, 100e3, n, 1).unwrap();
        let sigma2 = 4.0 * BOLTZMANN_K * 300.0 * 10e3 * 50e3;
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(rel(var.sqrt(), 2.878e-6) < 1e-2);
        assert!(rel(var, sigma2) < 1e-2);
        assert!(mean.abs() < 4.0 * sigma2.sqrt() / (n as f64).sqrt());

        let y = gen_thermal_noise(10e3, 300.0, 100e3, n, 2).unwrap();
        let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * sigma2);
        assert!(rho.abs() < 0.01);
    }

    #[test]
    fn generated_noise_edge_cases() {
        assert!(gen_thermal_noise(10e3, 300.0, 100e3, 0, 1)
            .unwrap()
            .is_empty());
        let a = gen_thermal_noise(10e3, 300.0, 100e3, 4096, 9).unwrap();
        let b = gen_thermal_noise(10e3, 300.0, 100e3, 4096, 9).unwrap();
        assert_eq!(a, b);
        assert!(gen_thermal_noise(0.0, 300.0, 100e3, 16, 9)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn thermal_scales_with_sqrt_r(r in 1e-3f64..1e9, c in 1e-3f64..1e3, t in 1.0f64..1e3, b in 1.0f64..1e7) {
            let lhs = thermal(c * r, t, b);
            let rhs = c.sqrt() * thermal(r, t, b);
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        }

        #[test]
        fn power_identity(r in 0.0f64..1e9, t in 1.0f64..1e3, b in 0.0f64..1e7) {
            let v = thermal(r, t, b);
            let p = thermal_psd_onesided(r, t).unwrap() * b;
            prop_assert!((v * v - p).abs() <= 1e-12 * p.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn monotone_in_every_field(r in 0.0f64..1e6, t in 1.0f64..1e3, b in 0.0f64..1e6, d in 0.0f64..1e3) {
            prop_assert!(thermal(r + d, t, b) >= thermal(r, t, b));
            prop_assert!(thermal(r, t + d, b) >= thermal(r, t, b));
            prop_assert!(thermal(r, t, b + d) >= thermal(r, t, b));
            prop_assert!(shot(r * 1e-9 + d * 1e-9, b) >= shot(r * 1e-9, b));
            prop_assert!(shot(r * 1e-9, b + d) >= shot(r * 1e-9, b));
        }
    }
}
