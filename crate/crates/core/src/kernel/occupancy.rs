//! All-nonnegative evaluation of click statistics.
//!
//! Photons are thinned by the efficiency, thrown into `N` bins uniformly, and
//! the bins left empty may still dark-click. Every step only adds and scales
//! nonnegative numbers, so this path is accurate for any `N` and `eta`.

use crate::numeric::binomial_pmf;
use crate::states::MAX_PHOTON_NUMBER;

/// Distribution of the number of distinct bins occupied when `balls` balls
/// land independently and uniformly in `bins` bins, over `k = 0..=min(balls, bins)`.
///
/// # Panics
///
/// If `bins == 0` or `balls` exceeds the photon-number cap of 4096.
pub fn occupancy_distribution(balls: usize, bins: usize) -> Vec<f64> {
    assert!(bins >= 1, "need at least one bin");
    assert!(balls <= MAX_PHOTON_NUMBER, "at most {MAX_PHOTON_NUMBER} balls");
    let mut occ = Occupancy::new(bins);
    for _ in 0..balls {
        occ.add_ball();
    }
    occ.probs[..=balls.min(bins)].to_vec()
}

/// Occupancy law `O_m(k)` advanced one ball at a time.
struct Occupancy {
    bins: usize,
    balls: usize,
    probs: Vec<f64>,
}

impl Occupancy {
    fn new(bins: usize) -> Self {
        let mut probs = vec![0.0; bins + 1];
        probs[0] = 1.0;
        Self { bins, balls: 0, probs }
    }

    /// `O_{m+1}(k) = O_m(k) k/N + O_m(k-1) (N-k+1)/N`
    fn add_ball(&mut self) {
        let n = self.bins as f64;
        let top = (self.balls + 1).min(self.bins);
        for k in (1..=top).rev() {
            let stay = self.probs[k] * (k as f64 / n);
            let fresh = self.probs[k - 1] * ((self.bins - k + 1) as f64 / n);
            self.probs[k] = stay + fresh;
        }
        self.probs[0] = 0.0;
        self.balls += 1;
    }
}

/// Law of the surviving photon number when each of `n` photons survives with
/// probability `eta`, i.e. the coefficients of `P(1 - eta + eta x)`.
///
/// Evaluated by Horner's scheme on polynomials, which only ever forms
/// nonnegative combinations.
pub(crate) fn thin(photons: &[f64], eta: f64) -> Vec<f64> {
    if eta >= 1.0 {
        return photons.to_vec();
    }
    let loss = 1.0 - eta;
    let mut q: Vec<f64> = Vec::with_capacity(photons.len());
    for &p in photons.iter().rev() {
        q.push(0.0);
        for i in (1..q.len()).rev() {
            q[i] = loss * q[i] + eta * q[i - 1];
        }
        q[0] = loss * q[0] + p;
    }
    q
}

/// Click-count distribution over `0..=bins` for the photon-number law
/// `photons` (which may carry total mass below one, for partial mixtures).
pub(crate) fn click_probs(photons: &[f64], bins: usize, eta: f64, nu: f64) -> Vec<f64> {
    let surviving = thin(photons, eta);
    let last = surviving.iter().rposition(|&q| q > 0.0).unwrap_or(0);

    let mut occupied = vec![0.0; bins + 1];
    let mut occ = Occupancy::new(bins);
    for (m, &q) in surviving[..=last].iter().enumerate() {
        if m > 0 {
            occ.add_ball();
        }
        if q > 0.0 {
            for (slot, o) in occupied.iter_mut().zip(&occ.probs) {
                *slot += q * o;
            }
        }
    }

    let dark = -(-nu).exp_m1();
    if dark <= 0.0 {
        return occupied;
    }
    // Each of the bins - k empty detectors dark-clicks independently.
    let mut clicks = vec![0.0; bins + 1];
    for (k, &o) in occupied.iter().enumerate() {
        if o == 0.0 {
            continue;
        }
        for (d, b) in binomial_pmf(bins - k, dark).into_iter().enumerate() {
            clicks[k + d] += o * b;
        }
    }
    clicks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{binomial, stable_sum};

    /// Stirling numbers of the second kind by their own recurrence.
    fn stirling2(m: usize, k: usize) -> f64 {
        let mut table = vec![vec![0.0; k + 1]; m + 1];
        table[0][0] = 1.0;
        for i in 1..=m {
            for j in 1..=k.min(i) {
                table[i][j] = j as f64 * table[i - 1][j] + table[i - 1][j - 1];
            }
        }
        table[m][k]
    }

    /// Enumerates all `bins^balls` assignments.
    fn brute_force(balls: usize, bins: usize) -> Vec<f64> {
        let total = bins.pow(balls as u32);
        let mut counts = vec![0usize; balls.min(bins) + 1];
        for code in 0..total {
            let mut used = vec![false; bins];
            let mut c = code;
            for _ in 0..balls {
                used[c % bins] = true;
                c /= bins;
            }
            counts[used.iter().filter(|&&u| u).count()] += 1;
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    #[test]
    fn occupancy_examples() {
        assert_eq!(occupancy_distribution(0, 5), vec![1.0]);
        assert_eq!(occupancy_distribution(2, 2), vec![0.0, 0.5, 0.5]);
        let expected = [0.0, 4.0 / 256.0, 84.0 / 256.0, 144.0 / 256.0, 24.0 / 256.0];
        for (a, b) in occupancy_distribution(4, 4).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn occupancy_matches_enumeration() {
        for bins in 1..=4 {
            for balls in 0..=6 {
                let dp = occupancy_distribution(balls, bins);
                let bf = brute_force(balls, bins);
                assert_eq!(dp.len(), bf.len());
                for (a, b) in dp.iter().zip(&bf) {
                    assert!((a - b).abs() < 1e-14, "balls={balls} bins={bins}");
                }
            }
        }
    }

    #[test]
    fn occupancy_matches_stirling_formula() {
        for (balls, bins) in [(7, 3), (10, 6), (12, 12), (15, 20)] {
            let dp = occupancy_distribution(balls, bins);
            for (k, &p) in dp.iter().enumerate() {
                let factorial: f64 = (1..=k).map(|i| i as f64).product();
                let exact = binomial(bins, k) * factorial * stirling2(balls, k) / (bins as f64).powi(balls as i32);
                assert!((p - exact).abs() < 1e-13, "balls={balls} bins={bins} k={k}");
            }
        }
    }

    #[test]
    fn occupancy_is_normalized_for_large_inputs() {
        let d = occupancy_distribution(4096, 1024);
        assert!(d.iter().all(|&p| p >= 0.0));
        assert!((stable_sum(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thinning_a_fock_state_is_binomial() {
        let q = thin(&[0.0, 0.0, 0.0, 1.0], 0.25);
        let b = binomial_pmf(3, 0.25);
        for (a, b) in q.iter().zip(&b) {
            assert!((a - b).abs() < 1e-16);
        }
        assert_eq!(thin(&[0.2, 0.8], 1.0), vec![0.2, 0.8]);
        assert_eq!(thin(&[0.2, 0.8], 0.0), vec![1.0, 0.0]);
    }

    #[test]
    fn dark_counts_on_vacuum_are_binomial() {
        let c = click_probs(&[1.0], 4, 0.5, 0.3);
        let b = binomial_pmf(4, 1.0 - (-0.3f64).exp());
        for (a, b) in c.iter().zip(&b) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
