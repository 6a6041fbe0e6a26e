//! Small numerical helpers shared by the state catalog and the click kernel.

use std::sync::OnceLock;

/// Largest `n` for which binomial coefficients are built directly in `f64`.
/// Above this they are evaluated through the log-factorial table.
pub const DIRECT_BINOMIAL_MAX: usize = 60;

const LN_FACTORIAL_LEN: usize = 8193;

/// Neumaier's variant of Kahan summation.
///
/// Tracks the running compensation and the sum of absolute values, the latter
/// being what callers use to bound the rounding error of an alternating sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
    abs_sum: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sum of `|x|` over every added term.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn stable_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_LEN);
        let mut acc = NeumaierSum::new();
        table.push(0.0);
        for i in 1..LN_FACTORIAL_LEN {
            acc.add((i as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

/// `ln(n!)`, tabulated for `n` up to 8192.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    assert!(n < table.len(), "ln_factorial({n}) beyond table");
    table[n]
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial coefficient `C(n, k)` as a float.
///
/// Uses the multiplicative formula up to [`DIRECT_BINOMIAL_MAX`] and the
/// log-factorial table beyond it.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= DIRECT_BINOMIAL_MAX {
        let k = k.min(n - k);
        // c holds C(n, i) after step i; exact in u128.
        let mut c: u128 = 1;
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c as f64
    } else {
        ln_binomial(n, k).exp()
    }
}

/// Probability mass function of `Binomial(n, p)` over `k = 0..=n`.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    if n <= DIRECT_BINOMIAL_MAX {
        let q = 1.0 - p;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = binomial(n, k) * p.powi(k as i32) * q.powi((n - k) as i32);
        }
    } else {
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = (ln_binomial(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q).exp();
        }
    }
    out
}

/// Mean and variance of a distribution over `0, 1, 2, ...`.
///
/// Variances in `[-1e-12, 0)` are rounding noise and are returned as 0.
pub fn moments(probs: &[f64]) -> (f64, f64) {
    let mut first = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    for (k, &p) in probs.iter().enumerate() {
        let k = k as f64;
        first.add(k * p);
        second.add(k * k * p);
    }
    let mean = first.value();
    let mut variance = second.value() - mean * mean;
    if (-1e-12..0.0).contains(&variance) {
        variance = 0.0;
    }
    (mean, variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.abs_sum(), 2.0 + 2e100);
    }

    #[test]
    fn direct_and_log_binomials_agree() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(60, 30), 118264581564861424.0);
        assert_eq!(binomial(3, 5), 0.0);
        for n in [61, 100, 500] {
            for k in [0, 1, n / 3, n / 2, n] {
                let direct: f64 = (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product();
                let rel = (binomial(n, k) - direct).abs() / direct;
                assert!(rel < 1e-11, "n={n} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn binomial_pmf_edges() {
        assert_eq!(binomial_pmf(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(binomial_pmf(2, 0.5), vec![0.25, 0.5, 0.25]);
        for n in [10, 61, 1024] {
            let total = stable_sum(&binomial_pmf(n, 0.37));
            assert!((total - 1.0).abs() < 1e-11, "n={n} total={total}");
        }
    }

    #[test]
    fn moments_of_point_mass() {
        assert_eq!(moments(&[0.0, 0.0, 0.0, 1.0]), (3.0, 0.0));
    }
}
