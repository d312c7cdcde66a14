//! Rule-of-thumb Butterworth cutoff for a post-amplifier filter.
//!
//! Below 1 kHz the recommended cutoff is `2^(N+1) f`; from 1 kHz upward it is
//! `2^(N-2) f`. Exactly 1 kHz uses the upper branch. For `N <= 2` the upper
//! branch gives a cutoff at or below the signal frequency; the formula is
//! reported as is and [`CutoffRecommendation::below_signal`] flags it.

use crate::error::{domain, ensure_pos, Result};
use serde::Serialize;
use std::fmt;

pub const BRANCH_BOUNDARY_HZ: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Below1khz,
    AtOrAbove1khz,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Below1khz => "below_1khz",
            Branch::AtOrAbove1khz => "at_or_above_1khz",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffRecommendation {
    pub cutoff_hz: f64,
    pub branch: Branch,
    /// `cutoff < fs/2`; `true` until checked against a sample rate.
    pub valid: bool,
    pub signal_freq_hz: f64,
}

impl CutoffRecommendation {
    /// The cutoff does not exceed the signal frequency, so the filter would attenuate the signal.
    pub fn below_signal(&self) -> bool {
        self.cutoff_hz <= self.signal_freq_hz
    }
}

pub fn recommended_cutoff(
    filter_order: usize,
    signal_freq_hz: f64,
) -> Result<CutoffRecommendation> {
    if filter_order == 0 {
        return Err(domain("order", "must be >= 1"));
    }
    ensure_pos("signal_freq_hz", signal_freq_hz)?;
    let n = filter_order as i32;
    let (exp, branch) = if signal_freq_hz < BRANCH_BOUNDARY_HZ {
        (n + 1, Branch::Below1khz)
    } else {
        (n - 2, Branch::AtOrAbove1khz)
    };
    Ok(CutoffRecommendation {
        cutoff_hz: 2f64.powi(exp) * signal_freq_hz,
        branch,
        valid: true,
        signal_freq_hz,
    })
}

/// Marks the recommendation valid iff `cutoff < fs/2`. The cutoff itself is never changed.
pub fn validate_recommendation(
    rec: CutoffRecommendation,
    sample_rate_hz: f64,
) -> Result<CutoffRecommendation> {
    ensure_pos("sample_rate_hz", sample_rate_hz)?;
    Ok(CutoffRecommendation {
        valid: rec.cutoff_hz < sample_rate_hz / 2.0,
        ..rec
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pinned_values() {
        assert_eq!(recommended_cutoff(1, 50.0).unwrap().cutoff_hz, 200.0);
        assert_eq!(recommended_cutoff(4, 50.0).unwrap().cutoff_hz, 1600.0);
        let r = recommended_cutoff(4, 2000.0).unwrap();
        assert_eq!(r.cutoff_hz, 8000.0);
        assert_eq!(r.branch, Branch::AtOrAbove1khz);
        let b = recommended_cutoff(2, 1000.0).unwrap();
        assert_eq!(b.cutoff_hz, 1000.0);
        assert_eq!(b.branch, Branch::AtOrAbove1khz);
        assert!(b.below_signal());
        let low = recommended_cutoff(1, 2000.0).unwrap();
        assert_eq!(low.cutoff_hz, 1000.0);
        assert!(low.below_signal());
    }

    #[test]
    fn invalid_inputs() {
        assert!(recommended_cutoff(0, 50.0).is_err());
        assert!(recommended_cutoff(1, 0.0).is_err());
        assert!(recommended_cutoff(1, -5.0).is_err());
    }

    #[test]
    fn nyquist_validation() {
        let r = recommended_cutoff(1, 50.0).unwrap();
        assert!(validate_recommendation(r, 100e3).unwrap().valid);
        let r = recommended_cutoff(4, 50.0).unwrap();
        let v = validate_recommendation(r, 2000.0).unwrap();
        assert!(!v.valid);
        assert_eq!(v.cutoff_hz, 1600.0);
        let r = recommended_cutoff(4, 2000.0).unwrap();
        assert!(validate_recommendation(r, 16_001.0).unwrap().valid);
        assert!(!validate_recommendation(r, 16_000.0).unwrap().valid);
    }

    proptest! {
        #[test]
        fn monotone_in_order(n in 1usize..20, f in 1.0f64..5000.0) {
            let a = recommended_cutoff(n, f).unwrap().cutoff_hz;
            let b = recommended_cutoff(n + 1, f).unwrap().cutoff_hz;
            prop_assert!(a < b);
        }

        #[test]
        fn linear_within_branch(n in 1usize..12, f in 1.0f64..999.0, c in 0.01f64..1.0) {
            let a = recommended_cutoff(n, c * f).unwrap().cutoff_hz;
            let b = recommended_cutoff(n, f).unwrap().cutoff_hz;
            prop_assert!((a - c * b).abs() <= 1e-12 * a);
        }

        #[test]
        fn boundary_drops_ratio_by_eight(n in 1usize..12) {
            let below = recommended_cutoff(n, 999.999).unwrap();
            let above = recommended_cutoff(n, 1000.0).unwrap();
            let ratio = (below.cutoff_hz / below.signal_freq_hz) / (above.cutoff_hz / above.signal_freq_hz);
            prop_assert!((ratio - 8.0).abs() < 1e-12);
        }
    }
}
