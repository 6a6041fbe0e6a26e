//! Seeded Monte Carlo model of the detector array.
//!
//! Every trial draws a photon number, lets each photon survive with
//! probability `eta` and land on a uniformly chosen detector, then lets every
//! detector that received nothing dark-click with probability `1 - e^{-nu}`.
//! The exact law of the resulting click count is
//! [`click_distribution`](crate::kernel::click_distribution), but nothing here
//! uses it.
//!
//! Trials are cut into chunks of [`CHUNK_SIZE`]. Chunk `i` draws from the
//! ChaCha8 stream `i` keyed by the seed, so the output depends on
//! `(spec, config, trials, seed)` only and not on how many workers ran it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DetectorConfig;
use crate::numeric::NeumaierSum;
use crate::states::{make_distribution, StateSpec, DEFAULT_TAIL_TOLERANCE};

pub const CHUNK_SIZE: usize = 4096;
pub const MAX_TRIALS: usize = 100_000_000;

/// Where a simulated record came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: DetectorConfig,
    pub state: StateSpec,
}

/// Click counts of repeated measurements with `detectors` on-off detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickSampleSet {
    pub detectors: usize,
    pub clicks: Vec<u32>,
    /// Present for simulated records; absent for data read without it.
    pub provenance: Option<Provenance>,
}

impl ClickSampleSet {
    /// Wraps recorded click counts. Ranges are checked by the estimators.
    pub fn from_records(detectors: usize, clicks: Vec<u32>) -> Self {
        Self {
            detectors,
            clicks,
            provenance: None,
        }
    }

    pub fn trials(&self) -> usize {
        self.clicks.len()
    }

    /// Fails with `InvalidSample` on the first record outside `[0, N]`.
    pub fn validate(&self) -> Result<()> {
        match self.clicks.iter().position(|&c| c as usize > self.detectors) {
            Some(index) => Err(Error::InvalidSample {
                index,
                value: self.clicks[index] as u64,
                max: self.detectors as u64,
            }),
            None => Ok(()),
        }
    }
}

/// Inverse-CDF sampler over a truncated photon-number distribution.
#[derive(Debug, Clone)]
pub struct PhotonSampler {
    cdf: Vec<f64>,
}

impl PhotonSampler {
    pub fn new(spec: &StateSpec, tail_tolerance: f64) -> Result<Self> {
        let dist = make_distribution(spec, tail_tolerance)?;
        let mut acc = NeumaierSum::new();
        let cdf = dist
            .probs()
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        Ok(Self { cdf })
    }

    pub fn n_max(&self) -> usize {
        self.cdf.len() - 1
    }

    /// Smallest `n` with `CDF(n) > u`; draws at or past the truncated total
    /// map to `n_max`.
    pub fn sample(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.n_max())
    }
}

/// One inverse-CDF draw from the photon-number law of `spec`.
pub fn sample_photon_number(spec: &StateSpec, random_draw: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&random_draw) {
        return Err(Error::InvalidArgument(format!(
            "random draw must lie in [0, 1), got {random_draw}"
        )));
    }
    Ok(PhotonSampler::new(spec, DEFAULT_TAIL_TOLERANCE)?.sample(random_draw))
}

/// Runs `trials` simulated measurements on `workers` threads.
pub fn simulate(
    spec: &StateSpec,
    config: &DetectorConfig,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<ClickSampleSet> {
    config.validate()?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "trials must lie in [1, {MAX_TRIALS}], got {trials}"
        )));
    }
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be positive".into()));
    }
    let sampler = PhotonSampler::new(spec, DEFAULT_TAIL_TOLERANCE)?;
    let chunks = trials.div_ceil(CHUNK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;

    let per_chunk: Vec<Vec<u32>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let len = CHUNK_SIZE.min(trials - chunk * CHUNK_SIZE);
                simulate_chunk(&sampler, config, seed, chunk as u64, len)
            })
            .collect()
    });

    Ok(ClickSampleSet {
        detectors: config.detectors,
        clicks: per_chunk.concat(),
        provenance: Some(Provenance {
            seed,
            config: *config,
            state: spec.clone(),
        }),
    })
}

fn simulate_chunk(sampler: &PhotonSampler, config: &DetectorConfig, seed: u64, chunk: u64, len: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);

    let detectors = config.detectors;
    let eta = config.eta;
    let dark = config.dark_click_probability();
    // hit[d] == t marks detector d as illuminated in trial t.
    let mut hit = vec![usize::MAX; detectors];
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let photons = sampler.sample(rng.random::<f64>());
        let mut clicks = 0u32;
        if eta > 0.0 {
            for _ in 0..photons {
                if eta < 1.0 && rng.random::<f64>() >= eta {
                    continue;
                }
                let d = rng.random_range(0..detectors);
                if hit[d] != t {
                    hit[d] = t;
                    clicks += 1;
                }
            }
        }
        if dark > 0.0 {
            for &h in &hit {
                if h != t && rng.random::<f64>() < dark {
                    clicks += 1;
                }
            }
        }
        out.push(clicks);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, eta: f64, nu: f64) -> DetectorConfig {
        DetectorConfig::new(n, eta, nu).unwrap()
    }

    #[test]
    fn single_photon_at_unit_efficiency_always_clicks_once() {
        for n in [1, 2, 7, 64] {
            let s = simulate(&StateSpec::fock(1), &cfg(n, 1.0, 0.0), 5000, 3, 2).unwrap();
            assert!(s.clicks.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn identical_inputs_identical_output() {
        let spec = StateSpec::thermal(2.0);
        let a = simulate(&spec, &cfg(8, 0.6, 0.05), 10_000, 99, 3).unwrap();
        let b = simulate(&spec, &cfg(8, 0.6, 0.05), 10_000, 99, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, &cfg(8, 0.6, 0.05), 10_000, 99, 1).unwrap();
        assert_eq!(a.clicks, c.clicks);
        let d = simulate(&spec, &cfg(8, 0.6, 0.05), 10_000, 100, 3).unwrap();
        assert_ne!(a.clicks, d.clicks);
    }

    #[test]
    fn prefix_is_stable_across_trial_counts() {
        let spec = StateSpec::coherent(2.0);
        let short = simulate(&spec, &cfg(4, 0.5, 0.0), 5000, 1, 1).unwrap();
        let long = simulate(&spec, &cfg(4, 0.5, 0.0), 9000, 1, 4).unwrap();
        assert_eq!(short.clicks[..], long.clicks[..5000]);
    }

    #[test]
    fn records_stay_in_range() {
        let s = simulate(&StateSpec::thermal(20.0), &cfg(3, 1.0, 2.0), 4000, 5, 2).unwrap();
        assert!(s.validate().is_ok());
        assert!(s.clicks.iter().all(|&c| c <= 3));
        assert_eq!(s.trials(), 4000);
    }

    #[test]
    fn coherent_mean_matches_exact_value() {
        let trials = 100_000;
        let s = simulate(&StateSpec::coherent(4.0), &cfg(8, 0.5, 0.0), trials, 2024, 4).unwrap();
        let p = 1.0 - (-0.25f64).exp();
        let exact_mean = 8.0 * p;
        let se = (8.0 * p * (1.0 - p) / trials as f64).sqrt();
        let mean = s.clicks.iter().map(|&c| c as f64).sum::<f64>() / trials as f64;
        assert!((mean - exact_mean).abs() < 5.0 * se, "{mean} vs {exact_mean}");
        assert!((exact_mean - 1.7695937).abs() < 1e-7);
    }

    #[test]
    fn argument_checks() {
        let spec = StateSpec::fock(1);
        assert!(simulate(&spec, &cfg(2, 1.0, 0.0), 0, 1, 1).is_err());
        assert!(simulate(&spec, &cfg(2, 1.0, 0.0), 10, 1, 0).is_err());
        assert!(simulate(&spec, &cfg(2, 1.0, 0.0), MAX_TRIALS + 1, 1, 1).is_err());
    }

    #[test]
    fn photon_sampler_examples() {
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(sample_photon_number(&StateSpec::fock(7), u).unwrap(), 7);
        }
        let mix = StateSpec::mixture([(1.0, StateSpec::thermal(1.0)), (0.0, StateSpec::fock(5))]);
        let thermal = PhotonSampler::new(&StateSpec::thermal(1.0), 1e-12).unwrap();
        let mixed = PhotonSampler::new(&mix, 1e-12).unwrap();
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            assert_eq!(thermal.sample(u), mixed.sample(u));
        }
        // thermal mu = 1: CDF(0) = 1/2, CDF(1) = 3/4
        assert_eq!(thermal.sample(0.49), 0);
        assert_eq!(thermal.sample(0.5), 1);
        assert_eq!(thermal.sample(0.74), 1);
        assert!(sample_photon_number(&StateSpec::fock(1), 1.0).is_err());
    }

    #[test]
    fn draws_past_truncated_mass_map_to_n_max() {
        let s = PhotonSampler::new(&StateSpec::coherent(1.0), 1e-12).unwrap();
        assert_eq!(s.sample(1.0 - 1e-17), s.n_max());
        assert_eq!(s.sample(1.0), s.n_max());
    }

    #[test]
    fn coherent_photon_draws_have_poisson_mean() {
        let sampler = PhotonSampler::new(&StateSpec::coherent(1.0), 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let total: usize = (0..draws).map(|_| sampler.sample(rng.random::<f64>())).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 1.0).abs() < 5.0 * (1.0f64 / draws as f64).sqrt());
    }

    #[test]
    fn out_of_range_records_are_flagged() {
        let s = ClickSampleSet::from_records(2, vec![0, 1, 3]);
        assert_eq!(
            s.validate().unwrap_err(),
            Error::InvalidSample {
                index: 2,
                value: 3,
                max: 2
            }
        );
    }
}
