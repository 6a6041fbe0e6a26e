//! Plug-in estimates of Q_B and Q_M from recorded counts, with percentile
//! bootstrap intervals.
//!
//! Point estimates are formed from the integer sums `S1 = sum x` and
//! `S2 = sum x^2`, so for moderate sample sizes the ratio is computed exactly
//! and rounded once.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{ClickDistribution, DEGENERATE_MEAN};
use crate::simulator::ClickSampleSet;

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const MIN_REPLICATES: usize = 100;
pub const MIN_BOOTSTRAP_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "q_b")]
    QB,
    #[serde(rename = "q_m")]
    QM,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::QB => "q_b",
            Statistic::QM => "q_m",
        }
    }
}

/// Denominator of the sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    /// `n - 1`
    Unbiased,
    /// `n`
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            level: DEFAULT_LEVEL,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub low: f64,
    pub high: f64,
    /// Replicates that produced a usable statistic.
    pub used: usize,
    /// Replicates dropped because their resample had a degenerate mean.
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub statistic: Statistic,
    pub point_estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub confidence_level: f64,
    pub sample_size: usize,
    pub bootstrap_replicates: usize,
    pub discarded_replicates: usize,
}

/// Sufficient statistics of a sample of counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Sums {
    n: u128,
    s1: u128,
    s2: u128,
}

impl Sums {
    fn add(&mut self, value: u64, multiplicity: u64) {
        let v = value as u128;
        let m = multiplicity as u128;
        self.n += m;
        self.s1 += m * v;
        self.s2 += m * v * v;
    }

    fn mean(&self) -> f64 {
        self.s1 as f64 / self.n as f64
    }

    fn variance_denominator(&self, variance: Variance) -> u128 {
        match variance {
            Variance::Unbiased => self.n - 1,
            Variance::Population => self.n,
        }
    }

    /// `Q_M = var / mean - 1 = (n S2 - S1^2 - d S1) / (d S1)`
    fn mandel(&self, variance: Variance) -> Result<f64> {
        let mean = self.mean();
        if mean < DEGENERATE_MEAN {
            return Err(Error::DegenerateMean {
                mean,
                low: DEGENERATE_MEAN,
                high: f64::INFINITY,
            });
        }
        let d = self.variance_denominator(variance);
        let exact = (|| {
            let spread = i128::try_from(
                self.n
                    .checked_mul(self.s2)?
                    .checked_sub(self.s1.checked_mul(self.s1)?)?,
            )
            .ok()?;
            let den = i128::try_from(d.checked_mul(self.s1)?).ok()?;
            Some(ratio(spread.checked_sub(den)?, den))
        })();
        Ok(exact.unwrap_or_else(|| {
            let var = self.float_spread() / (self.n as f64 * d as f64);
            var / mean - 1.0
        }))
    }

    /// `Q_B = N var / (mean (N - mean)) - 1`
    /// `    = (N n (n S2 - S1^2) - d S1 (N n - S1)) / (d S1 (N n - S1))`
    fn qb(&self, detectors: usize, variance: Variance) -> Result<f64> {
        let mean = self.mean();
        let n_det = detectors as f64;
        if mean < DEGENERATE_MEAN || mean > n_det - DEGENERATE_MEAN {
            return Err(Error::DegenerateMean {
                mean,
                low: DEGENERATE_MEAN,
                high: n_det - DEGENERATE_MEAN,
            });
        }
        let d = self.variance_denominator(variance);
        let big_n = detectors as u128;
        let exact = (|| {
            let spread = self
                .n
                .checked_mul(self.s2)?
                .checked_sub(self.s1.checked_mul(self.s1)?)?;
            let num = big_n.checked_mul(self.n)?.checked_mul(spread)?;
            let headroom = big_n.checked_mul(self.n)?.checked_sub(self.s1)?;
            let den = d.checked_mul(self.s1)?.checked_mul(headroom)?;
            let num = i128::try_from(num).ok()?;
            let den = i128::try_from(den).ok()?;
            Some(ratio(num.checked_sub(den)?, den))
        })();
        Ok(exact.unwrap_or_else(|| {
            let var = self.float_spread() / (self.n as f64 * d as f64);
            n_det * var / (mean * (n_det - mean)) - 1.0
        }))
    }

    fn float_spread(&self) -> f64 {
        let n = self.n as f64;
        let mean = self.mean();
        (self.s2 as f64 - n * mean * mean).max(0.0) * n
    }

    fn statistic(&self, statistic: Statistic, detectors: usize) -> Result<f64> {
        match statistic {
            Statistic::QB => self.qb(detectors, Variance::Unbiased),
            Statistic::QM => self.mandel(Variance::Unbiased),
        }
    }
}

fn ratio(num: i128, den: i128) -> f64 {
    num as f64 / den as f64
}

fn sums_of(counts: impl IntoIterator<Item = u64>) -> Sums {
    let mut s = Sums::default();
    for c in counts {
        s.add(c, 1);
    }
    s
}

/// Relative frequency of each click count `0..=N`.
pub fn empirical_frequencies(samples: &ClickSampleSet) -> Result<ClickDistribution> {
    samples.validate()?;
    if samples.trials() == 0 {
        return Err(Error::InsufficientData("no records".into()));
    }
    let mut counts = vec![0u64; samples.detectors + 1];
    for &c in &samples.clicks {
        counts[c as usize] += 1;
    }
    let total = samples.trials() as f64;
    ClickDistribution::new(counts.into_iter().map(|c| c as f64 / total).collect())
}

fn require_two(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 records, got {len}")));
    }
    Ok(())
}

/// Plug-in `Q_B` with the unbiased sample variance, optionally with a
/// percentile bootstrap interval.
pub fn qb_estimate(samples: &ClickSampleSet, bootstrap: Option<&BootstrapOptions>) -> Result<EstimateReport> {
    samples.validate()?;
    require_two(samples.trials())?;
    let point = sums_of(samples.clicks.iter().map(|&c| c as u64)).qb(samples.detectors, Variance::Unbiased)?;
    let counts: Vec<u64> = samples.clicks.iter().map(|&c| c as u64).collect();
    report(Statistic::QB, point, &counts, samples.detectors, bootstrap)
}

/// `Q_B` with either variance denominator.
pub fn qb_estimate_with_variance(samples: &ClickSampleSet, variance: Variance) -> Result<f64> {
    samples.validate()?;
    require_two(samples.trials())?;
    sums_of(samples.clicks.iter().map(|&c| c as u64)).qb(samples.detectors, variance)
}

/// Plug-in Mandel `Q_M = s^2 / mean - 1` with the unbiased sample variance.
/// Applies to photon counts and click counts alike.
pub fn mandel_q_estimate(counts: &[u64], bootstrap: Option<&BootstrapOptions>) -> Result<EstimateReport> {
    require_two(counts.len())?;
    let point = sums_of(counts.iter().copied()).mandel(Variance::Unbiased)?;
    report(Statistic::QM, point, counts, 0, bootstrap)
}

/// Mandel `Q_M` with either variance denominator. The population variant
/// equals [`mandel_q`](crate::kernel::mandel_q) of the empirical frequencies.
pub fn mandel_q_with_variance(counts: &[u64], variance: Variance) -> Result<f64> {
    require_two(counts.len())?;
    sums_of(counts.iter().copied()).mandel(variance)
}

fn report(
    statistic: Statistic,
    point: f64,
    counts: &[u64],
    detectors: usize,
    bootstrap: Option<&BootstrapOptions>,
) -> Result<EstimateReport> {
    let mut report = EstimateReport {
        statistic,
        point_estimate: point,
        ci_low: None,
        ci_high: None,
        confidence_level: bootstrap.map_or(DEFAULT_LEVEL, |b| b.level),
        sample_size: counts.len(),
        bootstrap_replicates: 0,
        discarded_replicates: 0,
    };
    if let Some(opts) = bootstrap {
        let ci = bootstrap_counts(counts, detectors, statistic, opts.replicates, opts.level, opts.seed)?;
        // Percentile intervals need not cover the plug-in value; widen so they do.
        report.ci_low = Some(ci.low.min(point));
        report.ci_high = Some(ci.high.max(point));
        report.bootstrap_replicates = opts.replicates;
        report.discarded_replicates = ci.discarded;
    }
    Ok(report)
}

/// Percentile bootstrap interval for `statistic` over the click records.
pub fn bootstrap_ci(
    samples: &ClickSampleSet,
    statistic: Statistic,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    samples.validate()?;
    let counts: Vec<u64> = samples.clicks.iter().map(|&c| c as u64).collect();
    bootstrap_counts(&counts, samples.detectors, statistic, replicates, level, seed)
}

/// Percentile bootstrap over arbitrary counts. `detectors` is only read for
/// [`Statistic::QB`].
///
/// Resampling `n` records with replacement only matters through how often
/// each distinct value is drawn, so each replicate draws those multiplicities
/// from the equivalent multinomial law instead of drawing `n` indices.
/// Replicate `i` uses ChaCha8 stream `i` of the seed.
pub fn bootstrap_counts(
    counts: &[u64],
    detectors: usize,
    statistic: Statistic,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_REPLICATES} bootstrap replicates, got {replicates}"
        )));
    }
    if counts.len() < MIN_BOOTSTRAP_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_BOOTSTRAP_SAMPLE} records to bootstrap, got {}",
            counts.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }

    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in counts {
        *histogram.entry(c).or_default() += 1;
    }
    let values: Vec<(u64, u64)> = histogram.into_iter().collect();
    let n = counts.len() as u64;

    let stats: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            resample(&values, n, &mut rng).statistic(statistic, detectors).ok()
        })
        .collect();

    let mut kept: Vec<f64> = stats.into_iter().flatten().collect();
    let discarded = replicates - kept.len();
    if kept.is_empty() {
        return Err(Error::AllResamplesDegenerate { replicates });
    }
    kept.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapInterval {
        low: quantile(&kept, tail),
        high: quantile(&kept, 1.0 - tail),
        used: kept.len(),
        discarded,
    })
}

fn resample(values: &[(u64, u64)], n: u64, rng: &mut ChaCha8Rng) -> Sums {
    let mut sums = Sums::default();
    let mut remaining_draws = n;
    let mut remaining_weight = n;
    for (i, &(value, count)) in values.iter().enumerate() {
        let drawn = if i + 1 == values.len() || remaining_draws == 0 {
            remaining_draws
        } else {
            let p = (count as f64 / remaining_weight as f64).min(1.0);
            Binomial::new(remaining_draws, p)
                .expect("probability in [0, 1]")
                .sample(rng)
        };
        sums.add(value, drawn);
        remaining_draws -= drawn;
        remaining_weight -= count;
    }
    sums
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
