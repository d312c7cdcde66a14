//! Adaptive Gauss–Kronrod (7/15) quadrature with a global error budget.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, starting from `initial_splits` equal
/// panels and bisecting the worst panel until the summed error estimate
/// falls below `rel_tol * |integral|`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    initial_splits: usize,
) -> Result<f64> {
    let splits = initial_splits.max(1);
    let h = (b - a) / splits as f64;
    let mut segs: Vec<Segment> = (0..splits)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == splits { b } else { lo + h };
            gk15(&f, lo, hi)
        })
        .collect();
    const MAX_SEGMENTS: usize = 200_000;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Convergence(
                "adaptive quadrature (non-finite integrand)",
            ));
        }
        if err <= rel_tol * total.abs() || err == 0.0 {
            return Ok(total);
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::Convergence("adaptive quadrature"));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .unwrap();
        let worst = segs.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        segs.push(gk15(&f, worst.a, mid));
        segs.push(gk15(&f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-12, 1).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_peak() {
        let w = 1e-3;
        let v = integrate(|x| w / (x * x + w * w), 0.0, 1.0, 1e-9, 4).unwrap();
        let exact = (1.0 / w).atan();
        assert!((v - exact).abs() / exact < 1e-8);
    }
}
