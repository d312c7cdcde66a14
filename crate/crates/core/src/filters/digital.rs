//! Bilinear discretisation, second-order-section realisation and evaluation.

use super::prototype::AnalogPrototype;
use crate::error::{ensure_pos, Error, Result};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Inside the stability triangle: `|a2| < 1` and `|a1| < 1 + a2`.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Response at `z⁻¹ = e^{-jω}`.
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }
}

/// A cascade of biquads followed by a scalar gain.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalFilter {
    pub sections: Vec<Biquad>,
    pub overall_gain: f64,
}

impl DigitalFilter {
    pub fn identity() -> Self {
        Self {
            sections: vec![Biquad::IDENTITY],
            overall_gain: 1.0,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }

    /// Response at normalised angular frequency `ω` (rad/sample), no range check.
    pub fn response_at(&self, omega: f64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(self.overall_gain, 0.0), |acc, s| {
                acc * s.response(omega)
            })
    }

    /// Samples to discard so that the slowest pole mode has decayed to 1e-6:
    /// `ceil(-ln(1e-6) / (1 - r_max))`.
    pub fn transient_samples(&self) -> usize {
        let r = self.max_pole_radius();
        if r <= 0.0 {
            return 0;
        }
        (-(1e-6f64).ln() / (1.0 - r)).ceil() as usize
    }
}

/// Bilinear transform with prewarping at `prewarp_hz`:
/// `s = c (z - 1)/(z + 1)`, `c = 2π f_p / tan(π f_p / fs)`, so the digital
/// response at `f_p` equals the analog response at `2π f_p` rad/s.
pub fn bilinear(
    analog: &AnalogPrototype,
    sample_rate_hz: f64,
    prewarp_hz: f64,
) -> Result<DigitalFilter> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    if !(prewarp_hz > 0.0 && prewarp_hz < sample_rate_hz / 2.0) {
        return Err(Error::Nyquist {
            what: "prewarp frequency",
            freq_hz: prewarp_hz,
            sample_rate_hz,
        });
    }
    if analog.zeros.len() > analog.poles.len() {
        return Err(crate::error::domain(
            "analog prototype",
            "more zeros than poles",
        ));
    }
    let c = TAU * prewarp_hz / (PI * prewarp_hz / sample_rate_hz).tan();
    let map = |s: &Complex64| (c + s) / (c - s);

    let mut zeros: Vec<Complex64> = analog.zeros.iter().map(map).collect();
    zeros.resize(analog.poles.len(), Complex64::new(-1.0, 0.0));
    let poles: Vec<Complex64> = analog.poles.iter().map(map).collect();

    let num: Complex64 = analog.zeros.iter().map(|z| c - z).product();
    let den: Complex64 = analog.poles.iter().map(|p| c - p).product();
    let k = analog.gain * (num / den).re;

    Ok(pack_sections(&zeros, &poles, k))
}

fn is_real(x: &Complex64) -> bool {
    x.im.abs() <= 1e-12 * x.norm().max(1.0)
}

/// Splits a conjugate-closed root set into upper-half-plane roots and real roots.
fn split_roots(roots: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let mut complex = Vec::new();
    let mut real = Vec::new();
    for r in roots {
        if is_real(r) {
            real.push(r.re);
        } else if r.im > 0.0 {
            complex.push(*r);
        }
    }
    (complex, real)
}

/// One section's poles or zeros: a conjugate pair, two reals, or a single real.
#[derive(Debug, Clone, Copy)]
enum Group {
    Pair(Complex64),
    Reals(f64, f64),
    Single(f64),
}

impl Group {
    fn radius(&self) -> f64 {
        match *self {
            Group::Pair(p) => p.norm(),
            Group::Reals(a, b) => a.abs().max(b.abs()),
            Group::Single(a) => a.abs(),
        }
    }

    fn anchor(&self) -> Complex64 {
        match *self {
            Group::Pair(p) => p,
            Group::Reals(a, b) => Complex64::new(if a.abs() >= b.abs() { a } else { b }, 0.0),
            Group::Single(a) => Complex64::new(a, 0.0),
        }
    }

    /// Monic polynomial `1 + c1 z⁻¹ + c2 z⁻²`.
    fn coefficients(&self) -> (f64, f64) {
        match *self {
            Group::Pair(p) => (-2.0 * p.re, p.norm_sqr()),
            Group::Reals(a, b) => (-(a + b), a * b),
            Group::Single(a) => (-a, 0.0),
        }
    }
}

fn take_nearest(values: &mut Vec<f64>, target: Complex64) -> f64 {
    let idx = values
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (target - a.1).norm();
            let db = (target - b.1).norm();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .expect("zero set exhausted");
    values.swap_remove(idx)
}

/// Packs digital zeros and poles (equal counts) into biquads.
///
/// Pole groups are taken from the largest radius down and each grabs the
/// nearest remaining zeros; the cascade is then ordered by ascending pole
/// radius. Sections are scaled to unit DC gain when that is finite, the
/// remainder goes into `overall_gain`.
fn pack_sections(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> DigitalFilter {
    let (pc, mut pr) = split_roots(poles);
    let (mut zc, mut zr) = split_roots(zeros);

    pr.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    let mut pole_groups: Vec<Group> = pc.into_iter().map(Group::Pair).collect();
    let mut single = None;
    let mut it = pr.chunks(2);
    for chunk in &mut it {
        match *chunk {
            [a, b] => pole_groups.push(Group::Reals(a, b)),
            [a] => single = Some(a),
            _ => unreachable!(),
        }
    }

    let mut pairs: Vec<(Group, Group)> = Vec::new();
    if let Some(p) = single {
        let z = take_nearest(&mut zr, Complex64::new(p, 0.0));
        pairs.push((Group::Single(p), Group::Single(z)));
    }
    pole_groups.sort_by(|a, b| b.radius().partial_cmp(&a.radius()).unwrap());
    for pg in pole_groups {
        let target = pg.anchor();
        let best_complex = zc
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (target - z).norm().min((target - z.conj()).norm())))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best_real = zr
            .iter()
            .map(|z| (target - z).norm())
            .fold(f64::INFINITY, f64::min);
        let zg = match best_complex {
            Some((i, d)) if zr.len() < 2 || d <= best_real => Group::Pair(zc.swap_remove(i)),
            _ => {
                let a = take_nearest(&mut zr, target);
                let b = take_nearest(&mut zr, target);
                Group::Reals(a, b)
            }
        };
        pairs.push((pg, zg));
    }
    pairs.sort_by(|a, b| a.0.radius().partial_cmp(&b.0.radius()).unwrap());

    let mut overall = gain;
    let sections = pairs
        .iter()
        .map(|(pg, zg)| {
            let (a1, a2) = pg.coefficients();
            let (c1, c2) = zg.coefficients();
            let num_dc = 1.0 + c1 + c2;
            let scale = if num_dc.abs() > 1e-12 {
                (1.0 + a1 + a2) / num_dc
            } else {
                1.0
            };
            overall /= scale;
            Biquad {
                b0: scale,
                b1: scale * c1,
                b2: scale * c2,
                a1,
                a2,
            }
        })
        .collect();
    DigitalFilter {
        sections,
        overall_gain: overall,
    }
}

/// Complex gain of the cascade at `freq_hz`.
pub fn frequency_response(
    filter: &DigitalFilter,
    freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<Complex64> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    if !(0.0..=sample_rate_hz / 2.0).contains(&freq_hz) {
        return Err(Error::Nyquist {
            what: "evaluation frequency",
            freq_hz,
            sample_rate_hz,
        });
    }
    Ok(filter.response_at(TAU * freq_hz / sample_rate_hz))
}

/// Runs `samples` through the cascade (transposed direct form II, zero initial state).
pub fn apply(filter: &DigitalFilter, samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut out: Vec<f64> = samples.iter().map(|x| x * filter.overall_gain).collect();
    for s in &filter.sections {
        let (mut w1, mut w2) = (0.0, 0.0);
        for x in out.iter_mut() {
            let y = s.b0 * *x + w1;
            w1 = s.b1 * *x - s.a1 * y + w2;
            w2 = s.b2 * *x - s.a2 * y;
            *x = y;
        }
    }
    Ok(out)
}
