//! Inclusion-exclusion evaluation of click statistics from the photon-number
//! generating function.
//!
//! The probability that a fixed set of `s` detectors stays dark is
//! `g_s = e^{-nu s} G(1 - eta s / N)`. Inclusion-exclusion over the detectors
//! that click gives
//!
//! `c_k = C(N,k) sum_{j=0..k} C(k,j) (-1)^j g_{N-k+j}`.
//!
//! The alternating sum cancels badly for large `N`, so besides the value we
//! return an a-priori bound on its rounding error.

use crate::numeric::{binomial, ln_binomial, NeumaierSum, DIRECT_BINOMIAL_MAX};

/// Relative rounding error assumed per term (coefficient, `g_s` and product).
const TERM_ROUNDING: f64 = 4.0 * f64::EPSILON;

pub(crate) struct InclusionExclusion {
    pub probs: Vec<f64>,
    /// Bound on the absolute rounding error summed over all entries.
    pub error_bound: f64,
}

/// `silent(s)` returns `g_s`, the weighted probability that `s` given
/// detectors all stay dark.
pub(crate) fn click_probs(bins: usize, silent: impl Fn(usize) -> f64) -> InclusionExclusion {
    let g: Vec<f64> = (0..=bins).map(silent).collect();
    let mut probs = Vec::with_capacity(bins + 1);
    let mut error_bound = 0.0;
    for k in 0..=bins {
        let mut acc = NeumaierSum::new();
        for j in 0..=k {
            let coeff = multinomial(bins, k, j);
            let term = coeff * g[bins - k + j];
            acc.add(if j % 2 == 0 { term } else { -term });
        }
        probs.push(acc.value());
        error_bound += TERM_ROUNDING * acc.abs_sum();
    }
    InclusionExclusion { probs, error_bound }
}

/// `C(N,k) C(k,j)`, in log space once `N` is past the direct range.
fn multinomial(n: usize, k: usize, j: usize) -> f64 {
    if n <= DIRECT_BINOMIAL_MAX {
        binomial(n, k) * binomial(k, j)
    } else {
        (ln_binomial(n, k) + ln_binomial(k, j)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_two_detectors_by_hand() {
        // G(x) = 1/(2 - x), N = 2, eta = 1: g_0 = 1, g_1 = 2/3, g_2 = 1/2.
        let r = click_probs(2, |s| 1.0 / (2.0 - (1.0 - s as f64 / 2.0)));
        let expected = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in r.probs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(r.error_bound < 1e-14);
    }

    #[test]
    fn error_bound_grows_with_detector_count() {
        let flat = |s: usize| (-0.001 * s as f64).exp();
        let small = click_probs(4, flat).error_bound;
        let large = click_probs(64, flat).error_bound;
        assert!(small < 1e-13);
        assert!(large > 1e-6);
    }
}
