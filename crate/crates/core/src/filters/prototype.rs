//! Normalised analog low-pass prototypes (passband edge or -3 dB point at 1 rad/s).

use super::elliptic::{asne, cde, ellipdeg, sne, Modulus};
use crate::error::{domain, ensure_pos, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Zeros, poles and gain of `H(s) = gain * Π(s - z) / Π(s - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogPrototype {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
}

impl AnalogPrototype {
    pub fn response(&self, s: Complex64) -> Complex64 {
        let num: Complex64 = self.zeros.iter().map(|z| s - z).product();
        let den: Complex64 = self.poles.iter().map(|p| s - p).product();
        self.gain * num / den
    }

    /// `|H(jω)|`.
    pub fn magnitude(&self, omega: f64) -> f64 {
        self.response(Complex64::new(0.0, omega)).norm()
    }

    pub fn dc_gain(&self) -> f64 {
        self.response(Complex64::new(0.0, 0.0)).re
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.re < 0.0)
    }

    /// Gain that makes `H(0) = dc`.
    fn normalise_dc(mut self, dc: f64) -> Self {
        self.gain = 1.0;
        self.gain = dc / self.dc_gain();
        self
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(domain("order", "must be >= 1"));
    }
    Ok(())
}

/// Expands upper-half-plane roots into conjugate pairs, followed by the real root if any.
fn conjugate_closed(upper: &[Complex64], real: Option<f64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * upper.len() + 1);
    for r in upper {
        out.push(*r);
        out.push(r.conj());
    }
    if let Some(x) = real {
        out.push(Complex64::new(x, 0.0));
    }
    out
}

fn ripple_epsilon(db: f64) -> f64 {
    (10f64.powf(db / 10.0) - 1.0).sqrt()
}

/// Chebyshev-style pole ellipse: `-sinh(μ) sin θ_k + j cosh(μ) cos θ_k`, `θ_k = π(2k-1)/(2N)`.
/// Returns the upper-half-plane poles and, for odd N, the real pole.
fn chebyshev_poles(order: usize, mu: f64) -> (Vec<Complex64>, Option<f64>) {
    let n = order as f64;
    let upper = (1..=order / 2)
        .map(|k| {
            let theta = PI * (2 * k - 1) as f64 / (2.0 * n);
            Complex64::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos())
        })
        .collect();
    let real = (order % 2 == 1).then(|| -mu.sinh());
    (upper, real)
}

/// Butterworth: N poles on the unit circle, no finite zeros, `|H(0)| = 1`.
pub fn butterworth_prototype(order: usize) -> Result<AnalogPrototype> {
    check_order(order)?;
    let n = order as f64;
    let upper: Vec<Complex64> = (1..=order / 2)
        .map(|k| Complex64::from_polar(1.0, PI * (2 * k + order - 1) as f64 / (2.0 * n)))
        .collect();
    let real = (order % 2 == 1).then_some(-1.0);
    Ok(AnalogPrototype {
        zeros: Vec::new(),
        poles: conjugate_closed(&upper, real),
        gain: 1.0,
    }
    .normalise_dc(1.0))
}

/// Chebyshev type I with `ripple_db` of equiripple passband on `[0, 1]` rad/s.
///
/// DC gain is 1 for odd orders and `10^(-Rp/20)` for even orders.
pub fn chebyshev1_prototype(order: usize, ripple_db: f64) -> Result<AnalogPrototype> {
    check_order(order)?;
    ensure_pos("passband_ripple_db", ripple_db)?;
    let eps = ripple_epsilon(ripple_db);
    let mu = (1.0 / eps).asinh() / order as f64;
    let (upper, real) = chebyshev_poles(order, mu);
    let dc = if order.is_multiple_of(2) {
        10f64.powf(-ripple_db / 20.0)
    } else {
        1.0
    };
    Ok(AnalogPrototype {
        zeros: Vec::new(),
        poles: conjugate_closed(&upper, real),
        gain: 1.0,
    }
    .normalise_dc(dc))
}

/// Chebyshev type II with stopband edge at 1 rad/s and `atten_db` of stopband attenuation.
pub fn chebyshev2_prototype(order: usize, atten_db: f64) -> Result<AnalogPrototype> {
    check_order(order)?;
    ensure_pos("stopband_atten_db", atten_db)?;
    let eps = 1.0 / ripple_epsilon(atten_db);
    let mu = (1.0 / eps).asinh() / order as f64;
    let (upper, real) = chebyshev_poles(order, mu);
    let upper_poles: Vec<Complex64> = upper.iter().map(|p| (1.0 / p).conj()).collect();
    let n = order as f64;
    let upper_zeros: Vec<Complex64> = (1..=order / 2)
        .map(|k| {
            let theta = PI * (2 * k - 1) as f64 / (2.0 * n);
            Complex64::new(0.0, 1.0 / theta.cos())
        })
        .collect();
    Ok(AnalogPrototype {
        zeros: conjugate_closed(&upper_zeros, None),
        poles: conjugate_closed(&upper_poles, real.map(|r| 1.0 / r)),
        gain: 1.0,
    }
    .normalise_dc(1.0))
}

/// Selectivity of the elliptic design: the stopband edge of the normalised
/// prototype sits at `1 / k` rad/s.
pub fn elliptic_selectivity(order: usize, ripple_db: f64, atten_db: f64) -> Result<Modulus> {
    check_elliptic(order, ripple_db, atten_db)?;
    let k1 = Modulus::new(ripple_epsilon(ripple_db) / ripple_epsilon(atten_db));
    ellipdeg(order, k1)
}

fn check_elliptic(order: usize, ripple_db: f64, atten_db: f64) -> Result<()> {
    check_order(order)?;
    ensure_pos("passband_ripple_db", ripple_db)?;
    ensure_pos("stopband_atten_db", atten_db)?;
    if atten_db <= ripple_db {
        return Err(domain(
            "stopband_atten_db",
            format!("must exceed passband_ripple_db ({atten_db} <= {ripple_db})"),
        ));
    }
    Ok(())
}

/// Elliptic (Cauer) low-pass: equiripple passband of `ripple_db` on `[0, 1]`,
/// equiripple stopband of at least `atten_db` beyond `1/k`.
///
/// Zeros are `j / (k cd(u_i K, k))`, poles `j cd((u_i - j v0) K, k)` with
/// `u_i = (2i - 1)/N` and `v0 = -j asn(j/ε_p, k1) / N`; odd orders add the
/// real pole `j sn(j v0 K, k)`.
pub fn elliptic_prototype(order: usize, ripple_db: f64, atten_db: f64) -> Result<AnalogPrototype> {
    check_elliptic(order, ripple_db, atten_db)?;
    let eps_p = ripple_epsilon(ripple_db);
    let k1 = Modulus::new(eps_p / ripple_epsilon(atten_db));
    let k = ellipdeg(order, k1)?;
    let n = order as f64;
    let j = Complex64::new(0.0, 1.0);

    let v0 = (-j * asne(j / eps_p, k1)? / n).re;

    let mut upper_zeros = Vec::with_capacity(order / 2);
    let mut upper_poles = Vec::with_capacity(order / 2);
    for i in 1..=order / 2 {
        let u = Complex64::new((2 * i - 1) as f64 / n, 0.0);
        let zeta = cde(u, k)?;
        upper_zeros.push(Complex64::new(0.0, (1.0 / (k.k * zeta)).re.abs()));
        let p = j * cde(u - j * v0, k)?;
        upper_poles.push(Complex64::new(p.re, p.im.abs()));
    }
    let real = if order % 2 == 1 {
        Some((j * sne(j * v0, k)?).re)
    } else {
        None
    };
    let dc = if order.is_multiple_of(2) {
        10f64.powf(-ripple_db / 20.0)
    } else {
        1.0
    };
    Ok(AnalogPrototype {
        zeros: conjugate_closed(&upper_zeros, None),
        poles: conjugate_closed(&upper_poles, real),
        gain: 1.0,
    }
    .normalise_dc(dc))
}

/// Frequency scaling `s -> s / ω_c`. The whole response, DC gain included, is preserved.
pub fn lowpass_scale(proto: &AnalogPrototype, cutoff_rad_s: f64) -> Result<AnalogPrototype> {
    ensure_pos("cutoff_rad_s", cutoff_rad_s)?;
    let excess = proto.poles.len() as i32 - proto.zeros.len() as i32;
    Ok(AnalogPrototype {
        zeros: proto.zeros.iter().map(|z| z * cutoff_rad_s).collect(),
        poles: proto.poles.iter().map(|p| p * cutoff_rad_s).collect(),
        gain: proto.gain * cutoff_rad_s.powi(excess),
    })
}
