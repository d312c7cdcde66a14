//! Jacobi elliptic functions by descending Landen transformations.
//!
//! Arguments are normalised to quarter periods: `sn(u K, k)` is written
//! `sne(u, k)` and has period 4 in `u`. A modulus is carried together with
//! its complement so that moduli near 1 keep full relative precision.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Landen iteration stops once the modulus drops below this value.
pub const LANDEN_TOL: f64 = 1e-14;
const LANDEN_MAX_ITER: usize = 64;

/// An elliptic modulus `k` and its complement `k' = sqrt(1 - k²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub k: f64,
    pub kp: f64,
}

impl Modulus {
    pub fn new(k: f64) -> Self {
        Self {
            k,
            kp: ((1.0 - k) * (1.0 + k)).sqrt(),
        }
    }

    pub fn complement(self) -> Self {
        Self {
            k: self.kp,
            kp: self.k,
        }
    }
}

/// Descending Landen moduli `k_{n+1} = (k_n / (1 + k'_n))²`, stopping once
/// the modulus falls below [`LANDEN_TOL`].
pub fn landen(m: Modulus) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let (mut k, mut kp) = (m.k, m.kp);
    if !(0.0..1.0).contains(&k) {
        return Err(crate::error::domain(
            "modulus",
            format!("must lie in [0, 1), got {k}"),
        ));
    }
    for _ in 0..LANDEN_MAX_ITER {
        if k < LANDEN_TOL {
            return Ok(out);
        }
        let next = (k / (1.0 + kp)).powi(2);
        k = next;
        kp = ((1.0 - k) * (1.0 + k)).sqrt();
        out.push(k);
    }
    Err(Error::Convergence("Landen transformation"))
}

/// Complete elliptic integral of the first kind `K(k) = (π/2) Π (1 + k_n)`.
pub fn ellipk(m: Modulus) -> Result<f64> {
    Ok(landen(m)?.iter().fold(FRAC_PI_2, |acc, v| acc * (1.0 + v)))
}

fn ascend(mut w: Complex64, v: &[f64]) -> Complex64 {
    for &vi in v.iter().rev() {
        w = (1.0 + vi) * w / (1.0 + vi * w * w);
    }
    w
}

/// `sn(u K, k)` for complex `u`.
pub fn sne(u: Complex64, m: Modulus) -> Result<Complex64> {
    let v = landen(m)?;
    Ok(ascend((u * FRAC_PI_2).sin(), &v))
}

/// `cd(u K, k)` for complex `u`.
pub fn cde(u: Complex64, m: Modulus) -> Result<Complex64> {
    let v = landen(m)?;
    Ok(ascend((u * FRAC_PI_2).cos(), &v))
}

/// Inverse of [`cde`]: returns `u` with `cd(u K, k) = w`.
pub fn acde(w: Complex64, m: Modulus) -> Result<Complex64> {
    let v = landen(m)?;
    let mut w = w;
    let mut prev = m.k;
    for &vn in &v {
        w = w / (1.0 + (1.0 - w * w * prev * prev).sqrt()) * 2.0 / (1.0 + vn);
        prev = vn;
    }
    Ok(w.acos() / FRAC_PI_2)
}

/// Inverse of [`sne`].
pub fn asne(w: Complex64, m: Modulus) -> Result<Complex64> {
    Ok(Complex64::new(1.0, 0.0) - acde(w, m)?)
}

/// Solves the degree equation `N K'/K = K1'/K1` for the selectivity
/// modulus `k`, given the order and the discrimination modulus `k1`.
///
/// Uses the exact product form `k' = k1'^N Π sn⁴(u_i K1', k1')` with
/// `u_i = (2i - 1)/N`, `i = 1..floor(N/2)`.
pub fn ellipdeg(order: usize, k1: Modulus) -> Result<Modulus> {
    if order == 1 {
        return Ok(k1);
    }
    let n = order as f64;
    let k1c = k1.complement();
    let mut kp = k1.kp.powi(order as i32);
    for i in 1..=order / 2 {
        let u = (2 * i - 1) as f64 / n;
        kp *= sne(Complex64::new(u, 0.0), k1c)?.re.powi(4);
    }
    Ok(Modulus {
        k: ((1.0 - kp) * (1.0 + kp)).sqrt(),
        kp,
    })
}
