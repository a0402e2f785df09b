//! Normal-distribution helpers and empirical quantiles.

use statrs::function::erf::{erfc, erfc_inv};

/// Standard normal quantile at probability `p`, 0 < p < 1.
///
/// Computed from the inverse complementary error function; accurate well
/// beyond 1e-9 over the open unit interval.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// z such that P(|Z| <= z) = 1 - alpha for standard normal Z.
pub fn z_two_sided(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// z such that P(Z <= z) = 1 - alpha.
pub fn z_one_sided(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha)
}

/// Two-sided normal p-value for a z statistic: 2(1 - Phi(|z|)) = erfc(|z|/sqrt(2)).
pub fn p_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Empirical quantile of a sorted slice with linear interpolation.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}
