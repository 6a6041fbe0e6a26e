//! Exact click-count statistics of `N` on-off detectors and the Q_B / Q_M
//! parameters computed from them.
//!
//! Two evaluation routes are kept side by side: inclusion-exclusion over the
//! photon-number generating function ([`Method::GeneratingFunction`]) and a
//! nonnegative occupancy recursion ([`Method::OccupancyDp`]). They agree
//! algebraically; the second one doubles as the reference when the first
//! loses precision.

mod generating;
mod occupancy;

pub use occupancy::occupancy_distribution;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf, moments, stable_sum};
use crate::states::{
    leaf_distribution, leaf_generating, make_distribution, PhotonNumberDistribution, StateSpec, DEFAULT_TAIL_TOLERANCE,
};

pub const MAX_DETECTORS: usize = 1024;
pub const MAX_DARK_COUNT: f64 = 10.0;

/// Entries in `[-CLAMP_TOLERANCE, 0)` are rounding noise and clamp to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Distance from 0 and from `N` below which a mean is degenerate.
pub const DEGENERATE_MEAN: f64 = 1e-12;

/// `auto` accepts the inclusion-exclusion result only if its rounding error
/// bound stays under this.
const AUTO_ERROR_BUDGET: f64 = 1e-13;

/// Photon-number truncation used inside the kernel. Tighter than the public
/// default so that truncated mass stays below double-precision round-off.
const KERNEL_TAIL_TOLERANCE: f64 = 1e-16;

/// Array of `N` identical on-off detectors sharing the light uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(rename = "N")]
    pub detectors: usize,
    /// Quantum efficiency.
    pub eta: f64,
    /// Dark-count parameter; each detector stays dark with probability `e^{-nu}`.
    pub nu: f64,
}

impl DetectorConfig {
    pub fn new(detectors: usize, eta: f64, nu: f64) -> Result<Self> {
        let config = Self { detectors, eta, nu };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DETECTORS).contains(&self.detectors) {
            return Err(Error::InvalidConfig(format!(
                "N must lie in [1, {MAX_DETECTORS}], got {}",
                self.detectors
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if !(0.0..=MAX_DARK_COUNT).contains(&self.nu) {
            return Err(Error::InvalidConfig(format!(
                "nu must lie in [0, {MAX_DARK_COUNT}], got {}",
                self.nu
            )));
        }
        Ok(())
    }

    /// Probability that a single detector dark-clicks, `1 - e^{-nu}`.
    pub fn dark_click_probability(&self) -> f64 {
        -(-self.nu).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Inclusion-exclusion over the generating function.
    GeneratingFunction,
    /// Thinning plus occupancy recursion.
    OccupancyDp,
    /// Closed forms where they exist, inclusion-exclusion when it is provably
    /// accurate, the occupancy recursion otherwise.
    #[default]
    Auto,
}

/// Probabilities `c_0 ..= c_N` of observing `k` clicks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickDistribution {
    probs: Vec<f64>,
}

impl ClickDistribution {
    /// Validates a raw probability vector of length `N + 1`. Entries slightly
    /// below zero are clamped; anything else out of range is an error.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "click distribution needs N + 1 >= 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -CLAMP_TOLERANCE)
        {
            return Err(Error::NumericalInstability(format!("c_{k} = {p:e} is negative")));
        }
        for p in probs.iter_mut().filter(|p| **p < 0.0) {
            *p = 0.0;
        }
        let total = stable_sum(&probs);
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NumericalInstability(format!(
                "click probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    /// Number of detectors `N`.
    pub fn detectors(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// Q_B, Q_M and click moments of one state/configuration pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonclassicalityReport {
    pub q_b: f64,
    pub q_m_clicks: f64,
    /// Mandel Q of the photon-number distribution itself, when its mean is
    /// nonzero.
    pub q_m_photons: Option<f64>,
    pub click_mean: f64,
    pub click_variance: f64,
}

/// Exact click-count distribution of `spec` measured by `config`.
pub fn click_distribution(spec: &StateSpec, config: &DetectorConfig, method: Method) -> Result<ClickDistribution> {
    config.validate()?;
    spec.validate_structure()?;
    let leaves = spec.flatten();
    let probs = match method {
        Method::GeneratingFunction => {
            let r = via_generating_function(&leaves, config)?;
            check_entries(&r.probs, weight_of(&leaves)).map_err(Error::NumericalInstability)?;
            r.probs
        }
        Method::OccupancyDp => {
            let probs = via_occupancy(&leaves, config)?;
            check_entries(&probs, weight_of(&leaves)).map_err(Error::NumericalInstability)?;
            probs
        }
        Method::Auto => auto(&leaves, config)?,
    };
    ClickDistribution::new(probs)
}

/// Unvalidated inclusion-exclusion output, entries may be slightly negative.
/// Meant for comparing the two routes; use [`click_distribution`] otherwise.
pub fn inclusion_exclusion_probs(spec: &StateSpec, config: &DetectorConfig) -> Result<Vec<f64>> {
    config.validate()?;
    spec.validate_structure()?;
    Ok(via_generating_function(&spec.flatten(), config)?.probs)
}

/// Unvalidated occupancy-recursion output.
pub fn occupancy_probs(spec: &StateSpec, config: &DetectorConfig) -> Result<Vec<f64>> {
    config.validate()?;
    spec.validate_structure()?;
    via_occupancy(&spec.flatten(), config)
}

type Leaves<'a> = [(f64, &'a StateSpec)];

fn weight_of(leaves: &Leaves) -> f64 {
    leaves.iter().map(|(w, _)| w).sum()
}

fn via_generating_function(leaves: &Leaves, config: &DetectorConfig) -> Result<generating::InclusionExclusion> {
    let n = config.detectors as f64;
    // Evaluate every leaf's G on the N + 1 grid points up front.
    let mut silent = vec![0.0; config.detectors + 1];
    for (w, leaf) in leaves {
        for (s, slot) in silent.iter_mut().enumerate() {
            let x = (1.0 - config.eta * s as f64 / n).clamp(0.0, 1.0);
            *slot += w * leaf_generating(leaf, x)?;
        }
    }
    for (s, slot) in silent.iter_mut().enumerate() {
        *slot *= (-config.nu * s as f64).exp();
    }
    Ok(generating::click_probs(config.detectors, |s| silent[s]))
}

fn via_occupancy(leaves: &Leaves, config: &DetectorConfig) -> Result<Vec<f64>> {
    let mut photons: Vec<f64> = Vec::new();
    for (w, leaf) in leaves {
        let d = fine_distribution(leaf, leaf_distribution)?;
        if photons.len() < d.probs().len() {
            photons.resize(d.probs().len(), 0.0);
        }
        for (slot, p) in photons.iter_mut().zip(d.probs()) {
            *slot += w * p;
        }
    }
    if photons.is_empty() {
        return Ok(vec![0.0; config.detectors + 1]);
    }
    Ok(occupancy::click_probs(
        &photons,
        config.detectors,
        config.eta,
        config.nu,
    ))
}

/// Builds with [`KERNEL_TAIL_TOLERANCE`], falling back to the default
/// tolerance when the tighter cut would exceed the photon-number cap.
fn fine_distribution(
    spec: &StateSpec,
    build: fn(&StateSpec, f64) -> Result<PhotonNumberDistribution>,
) -> Result<PhotonNumberDistribution> {
    match build(spec, KERNEL_TAIL_TOLERANCE) {
        Err(Error::TruncationOverflow { .. }) => build(spec, DEFAULT_TAIL_TOLERANCE),
        other => other,
    }
}

fn auto(leaves: &Leaves, config: &DetectorConfig) -> Result<Vec<f64>> {
    let mut coherent = Vec::new();
    let mut closed = Vec::new();
    let mut explicit = Vec::new();
    for &(w, leaf) in leaves {
        match leaf {
            StateSpec::Coherent { .. } => coherent.push((w, leaf)),
            StateSpec::Explicit { .. } => explicit.push((w, leaf)),
            _ => closed.push((w, leaf)),
        }
    }

    let mut probs = vec![0.0; config.detectors + 1];
    let mut add = |part: &[f64]| {
        for (slot, p) in probs.iter_mut().zip(part) {
            *slot += p;
        }
    };

    // With G(x) = e^{-mu(1-x)} the alternating sum collapses to
    // Binomial(N, 1 - e^{-nu - eta mu / N}).
    for (w, leaf) in &coherent {
        if let StateSpec::Coherent { mean_photons } = leaf {
            let part: Vec<f64> = binomial_pmf(config.detectors, coherent_click_probability(*mean_photons, config))
                .into_iter()
                .map(|p| w * p)
                .collect();
            add(&part);
        }
    }

    if !closed.is_empty() {
        let weight = weight_of(&closed);
        let r = via_generating_function(&closed, config)?;
        let accurate = r.error_bound <= AUTO_ERROR_BUDGET && check_entries(&r.probs, weight).is_ok();
        if accurate {
            add(&r.probs);
        } else {
            let fallback = via_occupancy(&closed, config)?;
            check_entries(&fallback, weight).map_err(|e| {
                Error::NumericalInstability(format!(
                    "inclusion-exclusion error bound {:e}, occupancy fallback: {e}",
                    r.error_bound
                ))
            })?;
            add(&fallback);
        }
    }

    if !explicit.is_empty() {
        let part = via_occupancy(&explicit, config)?;
        check_entries(&part, weight_of(&explicit)).map_err(Error::NumericalInstability)?;
        add(&part);
    }
    Ok(probs)
}

/// Per-detector click probability of a coherent state, `1 - e^{-nu - eta mu / N}`.
pub fn coherent_click_probability(mean_photons: f64, config: &DetectorConfig) -> f64 {
    -(-config.nu - config.eta * mean_photons / config.detectors as f64).exp_m1()
}

fn check_entries(probs: &[f64], expected_total: f64) -> std::result::Result<(), String> {
    if let Some((k, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < -CLAMP_TOLERANCE)
    {
        return Err(format!("c_{k} = {p:e} below -{CLAMP_TOLERANCE:e}"));
    }
    let total = stable_sum(probs);
    if (total - expected_total).abs() > NORMALIZATION_TOLERANCE {
        return Err(format!("normalization {total} differs from {expected_total}"));
    }
    Ok(())
}

/// `Binomial(N, p)` as a click distribution, the reference law against which
/// Q_B measures sub- or super-binomial statistics.
pub fn binomial_reference(detectors: usize, p: f64) -> Result<ClickDistribution> {
    if detectors == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    ClickDistribution::new(binomial_pmf(detectors, p))
}

/// Mean and variance of the click count.
pub fn click_moments(dist: &ClickDistribution) -> (f64, f64) {
    let (mean, variance) = moments(&dist.probs);
    (mean.clamp(0.0, dist.detectors() as f64), variance.max(0.0))
}

/// `Q_B = N Var(c) / (<c> (N - <c>)) - 1`.
///
/// Zero for binomial click statistics; negative values certify
/// sub-binomial, hence nonclassical, light.
pub fn qb_parameter(dist: &ClickDistribution) -> Result<f64> {
    let n = dist.detectors() as f64;
    let (mean, variance) = click_moments(dist);
    if mean < DEGENERATE_MEAN || mean > n - DEGENERATE_MEAN {
        return Err(Error::DegenerateMean {
            mean,
            low: DEGENERATE_MEAN,
            high: n - DEGENERATE_MEAN,
        });
    }
    Ok(n * variance / (mean * (n - mean)) - 1.0)
}

/// Mandel's `Q_M = Var(n) / <n> - 1` of a distribution over `0, 1, 2, ...`.
///
/// Works on photon numbers and click counts alike; on click counts it is
/// negative even for coherent light.
pub fn mandel_q(probs: &[f64]) -> Result<f64> {
    let (mean, variance) = moments(probs);
    if mean < DEGENERATE_MEAN {
        return Err(Error::DegenerateMean {
            mean,
            low: DEGENERATE_MEAN,
            high: f64::INFINITY,
        });
    }
    Ok(variance.max(0.0) / mean - 1.0)
}

/// Click distribution plus the Q_B / Q_M summary in one go.
pub fn nonclassicality(
    spec: &StateSpec,
    config: &DetectorConfig,
    method: Method,
) -> Result<(ClickDistribution, NonclassicalityReport)> {
    let dist = click_distribution(spec, config, method)?;
    let q_b = qb_parameter(&dist)?;
    let q_m_clicks = mandel_q(dist.probs())?;
    let (click_mean, click_variance) = click_moments(&dist);
    let photons = fine_distribution(spec, make_distribution)?;
    let q_m_photons = mandel_q(photons.probs()).ok();
    let report = NonclassicalityReport {
        q_b,
        q_m_clicks,
        q_m_photons,
        click_mean,
        click_variance,
    };
    Ok((dist, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, eta: f64, nu: f64) -> DetectorConfig {
        DetectorConfig::new(n, eta, nu).unwrap()
    }

    fn assert_probs(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (k, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!((a - e).abs() <= tol, "c_{k}: {a} vs {e}");
        }
    }

    const ALL_METHODS: [Method; 3] = [Method::GeneratingFunction, Method::OccupancyDp, Method::Auto];

    #[test]
    fn config_ranges() {
        assert!(DetectorConfig::new(0, 0.5, 0.0).is_err());
        assert!(DetectorConfig::new(1025, 0.5, 0.0).is_err());
        assert!(DetectorConfig::new(4, 1.5, 0.0).is_err());
        assert!(DetectorConfig::new(4, 0.5, 10.5).is_err());
        assert!(DetectorConfig::new(1024, 0.0, 10.0).is_ok());
    }

    #[test]
    fn coherent_is_binomial() {
        let p = 1.0 - (-0.25f64).exp();
        assert!((p - 0.2211992169).abs() < 1e-10);
        let reference = binomial_pmf(8, p);
        for method in ALL_METHODS {
            let d = click_distribution(&StateSpec::coherent(4.0), &cfg(8, 0.5, 0.0), method).unwrap();
            assert_probs(d.probs(), &reference, 1e-12);
        }
    }

    #[test]
    fn fock_two_on_two_detectors() {
        for method in ALL_METHODS {
            let d = click_distribution(&StateSpec::fock(2), &cfg(2, 1.0, 0.0), method).unwrap();
            assert_probs(d.probs(), &[0.0, 0.5, 0.5], 1e-15);
        }
    }

    #[test]
    fn thermal_on_two_detectors() {
        for method in ALL_METHODS {
            let d = click_distribution(&StateSpec::thermal(1.0), &cfg(2, 1.0, 0.0), method).unwrap();
            assert_probs(d.probs(), &[0.5, 1.0 / 3.0, 1.0 / 6.0], 1e-12);
            assert!((qb_parameter(&d).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_never_clicks() {
        for n in [1, 3, 64] {
            for method in [Method::OccupancyDp, Method::Auto] {
                let d = click_distribution(&StateSpec::fock(0), &cfg(n, 0.7, 0.0), method).unwrap();
                assert_eq!(d.probs()[0], 1.0);
            }
        }
        let d = click_distribution(&StateSpec::fock(0), &cfg(3, 0.7, 0.0), Method::GeneratingFunction).unwrap();
        assert_eq!(d.probs()[0], 1.0);
    }

    #[test]
    fn single_photon_two_point_law() {
        // mean eta, variance eta (1 - eta): Q_B = -eta (N - 1) / (N - eta)
        let d = click_distribution(&StateSpec::fock(1), &cfg(8, 0.5, 0.0), Method::Auto).unwrap();
        let qb = qb_parameter(&d).unwrap();
        assert!((qb + 7.0 / 15.0).abs() < 1e-12, "{qb}");
        assert!((qb + 0.4666667).abs() < 1e-7);
    }

    #[test]
    fn binomial_reference_examples() {
        assert_eq!(
            binomial_reference(5, 0.0).unwrap().probs(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(binomial_reference(2, 0.5).unwrap().probs(), &[0.25, 0.5, 0.25]);
        let qb = qb_parameter(&binomial_reference(8, 0.3).unwrap()).unwrap();
        assert!(qb.abs() < 1e-14);
        assert!(binomial_reference(0, 0.3).is_err());
        assert!(binomial_reference(3, 1.3).is_err());
    }

    #[test]
    fn click_moment_examples() {
        let point = ClickDistribution::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(click_moments(&point), (3.0, 0.0));
        let d = ClickDistribution::new(vec![0.5, 1.0 / 3.0, 1.0 / 6.0]).unwrap();
        let (m, v) = click_moments(&d);
        assert!((m - 2.0 / 3.0).abs() < 1e-15 && (v - 5.0 / 9.0).abs() < 1e-15);
        let b = binomial_reference(8, 0.2211992169).unwrap();
        let (m, v) = click_moments(&b);
        assert!((m - 1.7695937352).abs() < 1e-9);
        assert!((v - 8.0 * 0.2211992169 * (1.0 - 0.2211992169)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_means() {
        let zero = ClickDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(qb_parameter(&zero), Err(Error::DegenerateMean { .. })));
        let full = ClickDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(qb_parameter(&full), Err(Error::DegenerateMean { .. })));
        assert!(matches!(mandel_q(&[1.0]), Err(Error::DegenerateMean { .. })));
    }

    #[test]
    fn click_distribution_validation() {
        assert!(ClickDistribution::new(vec![1.0]).is_err());
        assert!(ClickDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ClickDistribution::new(vec![1.0 + 1e-13, -1e-13]).unwrap().probs()[1] == 0.0);
        assert!(ClickDistribution::new(vec![1.0 + 1e-11, -1e-11]).is_err());
    }

    #[test]
    fn mandel_examples() {
        let photons = make_distribution(&StateSpec::coherent(4.0), 1e-12).unwrap();
        assert!(mandel_q(photons.probs()).unwrap().abs() < 1e-10);
        let photons = make_distribution(&StateSpec::thermal(1.0), 1e-12).unwrap();
        assert!((mandel_q(photons.probs()).unwrap() - 1.0).abs() < 1e-8);
        let clicks = click_distribution(&StateSpec::coherent(4.0), &cfg(8, 0.5, 0.0), Method::Auto).unwrap();
        assert!((mandel_q(clicks.probs()).unwrap() + 0.2211992169).abs() < 1e-9);
    }

    #[test]
    fn explicit_states_go_through_occupancy() {
        let spec = StateSpec::explicit(vec![0.0, 0.0, 1.0]);
        let d = click_distribution(&spec, &cfg(2, 1.0, 0.0), Method::Auto).unwrap();
        assert_probs(d.probs(), &[0.0, 0.5, 0.5], 1e-15);
        let gf = click_distribution(&spec, &cfg(2, 1.0, 0.0), Method::GeneratingFunction).unwrap();
        assert_probs(gf.probs(), &[0.0, 0.5, 0.5], 1e-15);
    }

    #[test]
    fn forced_inclusion_exclusion_fails_loudly_at_large_n() {
        let spec = StateSpec::thermal(2.0);
        let err = click_distribution(&spec, &cfg(128, 0.05, 0.0), Method::GeneratingFunction).unwrap_err();
        assert!(matches!(err, Error::NumericalInstability(_)));
        // auto falls back to the occupancy recursion.
        let d = click_distribution(&spec, &cfg(128, 0.05, 0.0), Method::Auto).unwrap();
        assert!(d.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn report_bundles_both_parameters() {
        let (_, r) = nonclassicality(&StateSpec::coherent(4.0), &cfg(8, 0.5, 0.0), Method::Auto).unwrap();
        assert!(r.q_b.abs() < 1e-10);
        assert!((r.q_m_clicks + 0.2211992169).abs() < 1e-9);
        assert!(r.q_m_photons.unwrap().abs() < 1e-10);
        let (_, r) = nonclassicality(&StateSpec::fock(1), &cfg(8, 0.5, 0.0), Method::Auto).unwrap();
        assert_eq!(r.q_m_photons, Some(-1.0));
    }
}
