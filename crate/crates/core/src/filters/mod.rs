//! Classical IIR low-pass design.
//!
//! Analog prototypes (Butterworth, Chebyshev I/II, elliptic) are frequency
//! scaled and discretised with a bilinear transform prewarped at the cutoff,
//! then realised as a cascade of biquads.
//!
//! Cutoff conventions after discretisation: Butterworth is -3 dB at the
//! cutoff, Chebyshev I and elliptic reach the passband ripple edge there,
//! Chebyshev II reaches its stopband attenuation there.

mod digital;
pub mod elliptic;
mod prototype;

pub use digital::{apply, bilinear, frequency_response, Biquad, DigitalFilter};
pub use prototype::{
    butterworth_prototype, chebyshev1_prototype, chebyshev2_prototype, elliptic_prototype,
    elliptic_selectivity, lowpass_scale, AnalogPrototype,
};

use crate::error::{domain, ensure_pos, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterFamily {
    Butterworth,
    #[serde(alias = "chebyshev_i", alias = "cheby1")]
    Chebyshev1,
    #[serde(alias = "chebyshev_ii", alias = "cheby2")]
    Chebyshev2,
    Elliptic,
}

impl FilterFamily {
    pub const ALL: [FilterFamily; 4] = [
        FilterFamily::Butterworth,
        FilterFamily::Chebyshev1,
        FilterFamily::Chebyshev2,
        FilterFamily::Elliptic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterFamily::Butterworth => "butterworth",
            FilterFamily::Chebyshev1 => "chebyshev1",
            FilterFamily::Chebyshev2 => "chebyshev2",
            FilterFamily::Elliptic => "elliptic",
        }
    }

    pub fn needs_ripple(self) -> bool {
        matches!(self, FilterFamily::Chebyshev1 | FilterFamily::Elliptic)
    }

    pub fn needs_attenuation(self) -> bool {
        matches!(self, FilterFamily::Chebyshev2 | FilterFamily::Elliptic)
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "butterworth" | "butter" => Ok(FilterFamily::Butterworth),
            "chebyshev1" | "chebyshev_i" | "cheby1" => Ok(FilterFamily::Chebyshev1),
            "chebyshev2" | "chebyshev_ii" | "cheby2" => Ok(FilterFamily::Chebyshev2),
            "elliptic" | "ellip" | "cauer" => Ok(FilterFamily::Elliptic),
            other => Err(domain("family", format!("unknown filter family '{other}'"))),
        }
    }
}

/// Full description of a digital low-pass design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub family: FilterFamily,
    pub order: usize,
    pub cutoff_hz: f64,
    /// Rp, required by Chebyshev I and elliptic designs.
    #[serde(default)]
    pub passband_ripple_db: Option<f64>,
    /// Rs, required by Chebyshev II and elliptic designs.
    #[serde(default)]
    pub stopband_atten_db: Option<f64>,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(domain("filter.order", "must be >= 1"));
        }
        ensure_pos("filter.sample_rate_hz", self.sample_rate_hz)?;
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < self.sample_rate_hz / 2.0) {
            return Err(Error::Nyquist {
                what: "filter.cutoff_hz",
                freq_hz: self.cutoff_hz,
                sample_rate_hz: self.sample_rate_hz,
            });
        }
        let rp = self.passband_ripple_db;
        let rs = self.stopband_atten_db;
        if self.family.needs_ripple() {
            match rp {
                Some(v) => ensure_pos("filter.passband_ripple_db", v)?,
                None => {
                    return Err(domain(
                        "filter.passband_ripple_db",
                        format!("required for {}", self.family),
                    ))
                }
            }
        }
        if self.family.needs_attenuation() {
            match rs {
                Some(v) => ensure_pos("filter.stopband_atten_db", v)?,
                None => {
                    return Err(domain(
                        "filter.stopband_atten_db",
                        format!("required for {}", self.family),
                    ))
                }
            }
        }
        if let (FilterFamily::Elliptic, Some(p), Some(s)) = (self.family, rp, rs) {
            if s <= p {
                return Err(domain(
                    "filter.stopband_atten_db",
                    "must exceed passband_ripple_db",
                ));
            }
        }
        Ok(())
    }

    /// Normalised analog prototype for this family.
    pub fn prototype(&self) -> Result<AnalogPrototype> {
        self.validate()?;
        let rp = self.passband_ripple_db.unwrap_or(0.0);
        let rs = self.stopband_atten_db.unwrap_or(0.0);
        match self.family {
            FilterFamily::Butterworth => butterworth_prototype(self.order),
            FilterFamily::Chebyshev1 => chebyshev1_prototype(self.order, rp),
            FilterFamily::Chebyshev2 => chebyshev2_prototype(self.order, rs),
            FilterFamily::Elliptic => elliptic_prototype(self.order, rp, rs),
        }
    }
}

/// Prototype, frequency scaling to the cutoff, prewarped bilinear transform.
pub fn design(spec: &FilterSpec) -> Result<DigitalFilter> {
    let proto = spec.prototype()?;
    let scaled = lowpass_scale(&proto, TAU * spec.cutoff_hz)?;
    bilinear(&scaled, spec.sample_rate_hz, spec.cutoff_hz)
}

/// Peak of `|H(f)|` on `[0, fs/2]`: dense grid then golden-section refinement.
pub fn peak_magnitude(filter: &DigitalFilter) -> f64 {
    const GRID: usize = 8192;
    let mag = |w: f64| filter.response_at(w).norm();
    let step = PI / GRID as f64;
    let (best_i, mut best) = (0..=GRID)
        .map(|i| (i, mag(i as f64 * step)))
        .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut lo = (best_i as f64 - 1.0).max(0.0) * step;
    let mut hi = (best_i as f64 + 1.0).min(GRID as f64) * step;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if mag(x1) > mag(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best = best.max(mag(0.5 * (lo + hi)));
    best
}

/// Equivalent noise bandwidth in Hz:
/// `(1 / |H_peak|²) ∫₀^{fs/2} |H(f)|² df`, integrated adaptively to 1e-6 relative.
pub fn equivalent_noise_bandwidth(filter: &DigitalFilter, sample_rate_hz: f64) -> Result<f64> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    if !filter.is_stable() {
        return Err(domain(
            "filter",
            "equivalent noise bandwidth requires a stable filter",
        ));
    }
    let peak = peak_magnitude(filter);
    if peak <= 0.0 {
        return Err(domain("filter", "identically zero response"));
    }
    let power = crate::quad::integrate(
        |f| filter.response_at(TAU * f / sample_rate_hz).norm_sqr(),
        0.0,
        sample_rate_hz / 2.0,
        1e-6,
        256,
    )?;
    Ok(power / (peak * peak))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: FilterFamily, order: usize, fc: f64) -> FilterSpec {
        FilterSpec {
            family,
            order,
            cutoff_hz: fc,
            passband_ripple_db: Some(0.5),
            stopband_atten_db: Some(30.0),
            sample_rate_hz: 100e3,
        }
    }

    #[test]
    fn family_parsing() {
        for f in FilterFamily::ALL {
            assert_eq!(f.name().parse::<FilterFamily>().unwrap(), f);
        }
        assert!("bessel".parse::<FilterFamily>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(FilterFamily::Butterworth, 1, 60e3);
        assert!(matches!(design(&s), Err(Error::Nyquist { .. })));
        s.cutoff_hz = 600.0;
        s.order = 0;
        assert!(design(&s).is_err());
        let mut c2 = spec(FilterFamily::Chebyshev2, 4, 1e3);
        c2.stopband_atten_db = None;
        assert!(design(&c2).is_err());
        let mut c1 = spec(FilterFamily::Chebyshev1, 4, 1e3);
        c1.passband_ripple_db = None;
        assert!(design(&c1).is_err());
        let mut e = spec(FilterFamily::Elliptic, 4, 1e3);
        e.stopband_atten_db = Some(0.4);
        assert!(design(&e).is_err());
    }

    #[test]
    fn fig2_first_order_filter() {
        let f = design(&spec(FilterFamily::Butterworth, 1, 600.0)).unwrap();
        let h = frequency_response(&f, 600.0, 100e3).unwrap();
        assert!((20.0 * h.norm().log10() + 3.0103).abs() < 0.01);
    }

    #[test]
    fn chebyshev1_digital_ripple() {
        let f = design(&spec(FilterFamily::Chebyshev1, 4, 1e3)).unwrap();
        let db: Vec<f64> = (0..=10_000)
            .map(|i| {
                20.0 * frequency_response(&f, i as f64 * 0.1, 100e3)
                    .unwrap()
                    .norm()
                    .log10()
            })
            .collect();
        let max = db.iter().cloned().fold(f64::MIN, f64::max);
        let min = db.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max < 0.01 && max > -0.01, "{max}");
        assert!((min + 0.5).abs() < 0.01, "{min}");
    }

    #[test]
    fn dc_conventions() {
        for family in FilterFamily::ALL {
            for order in 1..=6 {
                let f = design(&spec(family, order, 2e3)).unwrap();
                let dc = frequency_response(&f, 0.0, 100e3).unwrap().norm();
                let expected = if family.needs_ripple() && order % 2 == 0 {
                    10f64.powf(-0.5 / 20.0)
                } else {
                    1.0
                };
                assert!((dc - expected).abs() < 1e-9, "{family} {order}: {dc}");
            }
        }
    }

    #[test]
    fn butterworth_nyquist_zero() {
        for order in 1..=5 {
            let f = design(&spec(FilterFamily::Butterworth, order, 3e3)).unwrap();
            assert!(frequency_response(&f, 50e3, 100e3).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn enb_identity_and_first_order() {
        let id = equivalent_noise_bandwidth(&DigitalFilter::identity(), 100e3).unwrap();
        assert!((id - 50e3).abs() < 1e-6);
        // bilinear first order: |H|² = 1/(1 + tan²(πf/fs)/t²), t = tan(π fc/fs)
        // => ENB = fs t / (2 (1 + t))
        for fc in [100.0, 600.0, 3000.0] {
            let f = design(&spec(FilterFamily::Butterworth, 1, fc)).unwrap();
            let t = (PI * fc / 100e3).tan();
            let exact = 100e3 * t / (2.0 * (1.0 + t));
            let enb = equivalent_noise_bandwidth(&f, 100e3).unwrap();
            assert!((enb - exact).abs() / exact < 1e-5, "{fc}: {enb} vs {exact}");
            if fc <= 600.0 {
                assert!((enb - PI / 2.0 * fc).abs() / (PI / 2.0 * fc) < 0.02);
            }
        }
    }

    #[test]
    fn enb_butterworth_fourth_order() {
        let f = design(&spec(FilterFamily::Butterworth, 4, 600.0)).unwrap();
        let enb = equivalent_noise_bandwidth(&f, 100e3).unwrap();
        let x = PI / 8.0;
        let analytic = 600.0 * x / x.sin();
        assert!(
            (enb - analytic).abs() / analytic < 0.02,
            "{enb} vs {analytic}"
        );
        assert!((enb - 616.0).abs() / 616.0 < 0.02);
    }

    #[test]
    fn enb_decreases_with_butterworth_order() {
        let enbs: Vec<f64> = (1..=8)
            .map(|n| {
                equivalent_noise_bandwidth(
                    &design(&spec(FilterFamily::Butterworth, n, 600.0)).unwrap(),
                    100e3,
                )
                .unwrap()
            })
            .collect();
        assert!(enbs.windows(2).all(|w| w[1] < w[0]), "{enbs:?}");
    }
}
