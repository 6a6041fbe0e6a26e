//! Catalog of input light states and their photon-number statistics.
//!
//! States only enter the click statistics through their photon-number
//! distribution `p_n`, or equivalently through the generating function
//! `G(x) = sum_n p_n x^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, moments, stable_sum, NeumaierSum};

/// Default truncation tolerance for the photon-number tail.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Largest photon number a truncated distribution may carry.
pub const MAX_PHOTON_NUMBER: usize = 4096;

/// Mixtures may nest at most this deep.
pub const MAX_MIXTURE_DEPTH: usize = 8;

const MIXTURE_WEIGHT_TOLERANCE: f64 = 1e-9;
const EXPLICIT_SUM_TOLERANCE: f64 = 1e-6;
// Beyond the cap we keep searching this far to report how large n_max would be.
const TRUNCATION_SEARCH_LIMIT: usize = 8191;

/// Description of a phase-insensitive light state.
///
/// Serialized with an internal `kind` tag, e.g. `{"kind":"coherent","mean_photons":4.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Coherent state with `mean_photons = |alpha|^2`.
    Coherent { mean_photons: f64 },
    /// Thermal state with mean occupation `mean_photons`.
    Thermal { mean_photons: f64 },
    /// Photon-number eigenstate.
    Fock { n: u32 },
    /// Single-mode squeezed vacuum with squeeze parameter `r`.
    SqueezedVacuum { r: f64 },
    /// Convex combination of other states.
    Mixture { components: Vec<MixtureComponent> },
    /// Photon-number distribution given directly, `probs[n] = p_n`.
    Explicit { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: StateSpec,
}

impl MixtureComponent {
    pub fn new(weight: f64, state: StateSpec) -> Self {
        Self { weight, state }
    }
}

impl StateSpec {
    pub fn coherent(mean_photons: f64) -> Self {
        StateSpec::Coherent { mean_photons }
    }

    pub fn thermal(mean_photons: f64) -> Self {
        StateSpec::Thermal { mean_photons }
    }

    pub fn fock(n: u32) -> Self {
        StateSpec::Fock { n }
    }

    pub fn squeezed_vacuum(r: f64) -> Self {
        StateSpec::SqueezedVacuum { r }
    }

    pub fn mixture<I: IntoIterator<Item = (f64, StateSpec)>>(components: I) -> Self {
        StateSpec::Mixture {
            components: components
                .into_iter()
                .map(|(weight, state)| MixtureComponent { weight, state })
                .collect(),
        }
    }

    pub fn explicit(probs: Vec<f64>) -> Self {
        StateSpec::Explicit { probs }
    }

    /// Checks every invariant of the description, including the unit sum of
    /// explicit distributions. Errors carry the path of the offending field.
    pub fn validate(&self) -> Result<()> {
        self.validate_at("", 0, true)
    }

    /// Like [`StateSpec::validate`] but leaves the unit-sum check of explicit
    /// distributions to [`make_distribution`], which reports it as
    /// `UnnormalizedExplicit`.
    pub(crate) fn validate_structure(&self) -> Result<()> {
        self.validate_at("", 0, false)
    }

    fn validate_at(&self, path: &str, depth: usize, check_explicit_sum: bool) -> Result<()> {
        let invalid = |field: &str, reason: String| Error::InvalidState {
            path: join_path(path, field),
            reason,
        };
        match self {
            StateSpec::Coherent { mean_photons } | StateSpec::Thermal { mean_photons } => {
                if !mean_photons.is_finite() || *mean_photons < 0.0 {
                    return Err(invalid(
                        "mean_photons",
                        format!("must be a nonnegative finite number, got {mean_photons}"),
                    ));
                }
            }
            StateSpec::Fock { .. } => {}
            StateSpec::SqueezedVacuum { r } => {
                if !r.is_finite() || *r < 0.0 {
                    return Err(invalid("r", format!("must be a nonnegative finite number, got {r}")));
                }
            }
            StateSpec::Mixture { components } => {
                if depth >= MAX_MIXTURE_DEPTH {
                    return Err(invalid(
                        "components",
                        format!("mixture nesting deeper than {MAX_MIXTURE_DEPTH}"),
                    ));
                }
                if components.is_empty() {
                    return Err(invalid("components", "mixture has no components".into()));
                }
                let mut total = NeumaierSum::new();
                for (i, c) in components.iter().enumerate() {
                    let here = join_path(path, &format!("components[{i}]"));
                    if !c.weight.is_finite() || c.weight < 0.0 || c.weight > 1.0 {
                        return Err(Error::InvalidState {
                            path: join_path(&here, "weight"),
                            reason: format!("must lie in [0, 1], got {}", c.weight),
                        });
                    }
                    total.add(c.weight);
                    c.state
                        .validate_at(&join_path(&here, "state"), depth + 1, check_explicit_sum)?;
                }
                let total = total.value();
                if (total - 1.0).abs() > MIXTURE_WEIGHT_TOLERANCE {
                    return Err(invalid("components", format!("weights sum {total}, expected 1")));
                }
            }
            StateSpec::Explicit { probs } => {
                if probs.is_empty() {
                    return Err(invalid("probs", "empty distribution".into()));
                }
                if probs.len() > MAX_PHOTON_NUMBER + 1 {
                    return Err(invalid(
                        "probs",
                        format!("{} entries exceed the cap of {}", probs.len(), MAX_PHOTON_NUMBER + 1),
                    ));
                }
                if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
                    return Err(invalid(&format!("probs[{i}]"), format!("must be nonnegative, got {p}")));
                }
                if check_explicit_sum {
                    let total = stable_sum(probs);
                    if (total - 1.0).abs() > EXPLICIT_SUM_TOLERANCE {
                        return Err(invalid("probs", format!("probabilities sum to {total}, expected 1")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Flattens nested mixtures into `(weight, leaf)` pairs. Zero-weight
    /// leaves are dropped.
    pub fn flatten(&self) -> Vec<(f64, &StateSpec)> {
        let mut out = Vec::new();
        self.flatten_into(1.0, &mut out);
        out
    }

    fn flatten_into<'a>(&'a self, weight: f64, out: &mut Vec<(f64, &'a StateSpec)>) {
        match self {
            StateSpec::Mixture { components } => {
                for c in components {
                    if c.weight > 0.0 {
                        c.state.flatten_into(weight * c.weight, out);
                    }
                }
            }
            leaf => {
                if weight > 0.0 {
                    out.push((weight, leaf));
                }
            }
        }
    }

    /// Whether `G(x)` has a closed form for this leaf (everything but explicit
    /// distributions).
    pub fn has_closed_form(&self) -> bool {
        match self {
            StateSpec::Mixture { components } => components.iter().all(|c| c.state.has_closed_form()),
            StateSpec::Explicit { .. } => false,
            _ => true,
        }
    }
}

fn join_path(base: &str, field: &str) -> String {
    if base.is_empty() {
        field.to_string()
    } else {
        format!("{base}.{field}")
    }
}

/// Truncated photon-number distribution `p_0 ..= p_nmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
}

impl PhotonNumberDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Upper bound on the probability mass beyond `n_max`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        stable_sum(&self.probs)
    }

    /// `sum_n p_n x^n` over the truncated support.
    pub fn generating(&self, x: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * x + p)
    }

    pub fn moments(&self) -> (f64, f64) {
        photon_moments(self)
    }
}

/// Builds the truncated photon-number distribution of `spec`, cutting the
/// support at the smallest `n_max` whose analytic tail bound is at most
/// `tail_tolerance`.
pub fn make_distribution(spec: &StateSpec, tail_tolerance: f64) -> Result<PhotonNumberDistribution> {
    if !(tail_tolerance > 0.0 && tail_tolerance <= 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "tail_tolerance must lie in (0, 1e-6], got {tail_tolerance}"
        )));
    }
    spec.validate_at("", 0, false)?;

    let leaves = spec.flatten();
    if let [(_, leaf)] = leaves.as_slice() {
        return leaf_distribution(leaf, tail_tolerance);
    }
    let parts = leaves
        .iter()
        .map(|(w, leaf)| leaf_distribution(leaf, tail_tolerance).map(|d| (*w, d)))
        .collect::<Result<Vec<_>>>()?;
    let len = parts.iter().map(|(_, d)| d.probs.len()).max().unwrap_or(1);
    let mut probs = vec![0.0; len];
    let mut tail_bound = 0.0;
    for (w, d) in &parts {
        for (slot, p) in probs.iter_mut().zip(&d.probs) {
            *slot += w * p;
        }
        tail_bound += w * d.tail_bound;
    }
    Ok(PhotonNumberDistribution { probs, tail_bound })
}

pub(crate) fn leaf_distribution(leaf: &StateSpec, tol: f64) -> Result<PhotonNumberDistribution> {
    match leaf {
        StateSpec::Coherent { mean_photons } => poisson(*mean_photons, tol),
        StateSpec::Thermal { mean_photons } => thermal(*mean_photons, tol),
        StateSpec::Fock { n } => {
            let n = *n as usize;
            if n > MAX_PHOTON_NUMBER {
                return Err(Error::TruncationOverflow {
                    required: n,
                    cap: MAX_PHOTON_NUMBER,
                });
            }
            let mut probs = vec![0.0; n + 1];
            probs[n] = 1.0;
            Ok(PhotonNumberDistribution { probs, tail_bound: 0.0 })
        }
        StateSpec::SqueezedVacuum { r } => squeezed_vacuum(*r, tol),
        StateSpec::Explicit { probs } => {
            let total = stable_sum(probs);
            if (total - 1.0).abs() > EXPLICIT_SUM_TOLERANCE {
                return Err(Error::UnnormalizedExplicit { sum: total });
            }
            let mut probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
            while probs.len() > 1 && probs.last() == Some(&0.0) {
                probs.pop();
            }
            Ok(PhotonNumberDistribution { probs, tail_bound: 0.0 })
        }
        StateSpec::Mixture { .. } => unreachable!("mixtures are flattened before evaluation"),
    }
}

/// Generates `p_0, p_1, ...` lazily and stops at the first `n_max` where
/// `tail_after(n_max, p_{n_max + 1})` drops to `tol`.
fn truncate(
    mut next: impl FnMut(usize) -> f64,
    tail_after: impl Fn(usize, f64) -> f64,
    tol: f64,
) -> Result<PhotonNumberDistribution> {
    let mut probs = vec![next(0)];
    for n_max in 0..=TRUNCATION_SEARCH_LIMIT {
        let following = next(n_max + 1);
        let tail = tail_after(n_max, following);
        if tail <= tol {
            if n_max > MAX_PHOTON_NUMBER {
                return Err(Error::TruncationOverflow {
                    required: n_max,
                    cap: MAX_PHOTON_NUMBER,
                });
            }
            return Ok(PhotonNumberDistribution {
                probs,
                tail_bound: tail,
            });
        }
        probs.push(following);
    }
    Err(Error::TruncationOverflow {
        required: TRUNCATION_SEARCH_LIMIT + 1,
        cap: MAX_PHOTON_NUMBER,
    })
}

fn poisson(mu: f64, tol: f64) -> Result<PhotonNumberDistribution> {
    if mu == 0.0 {
        return Ok(PhotonNumberDistribution {
            probs: vec![1.0],
            tail_bound: 0.0,
        });
    }
    // The product recurrence underflows at e^{-mu} for large means.
    let use_logs = mu > 600.0;
    let ln_mu = mu.ln();
    let mut prev = (-mu).exp();
    let pmf = move |n: usize| {
        if use_logs {
            (-mu + n as f64 * ln_mu - ln_factorial(n)).exp()
        } else {
            if n > 0 {
                prev *= mu / n as f64;
            }
            prev
        }
    };
    // For n_max + 2 > mu the ratios p_{n+1}/p_n stay below mu/(n_max + 2).
    let tail = move |n_max: usize, following: f64| {
        let ratio = mu / (n_max + 2) as f64;
        if ratio < 1.0 {
            following / (1.0 - ratio)
        } else {
            f64::INFINITY
        }
    };
    truncate(pmf, tail, tol)
}

fn thermal(mu: f64, tol: f64) -> Result<PhotonNumberDistribution> {
    if mu == 0.0 {
        return Ok(PhotonNumberDistribution {
            probs: vec![1.0],
            tail_bound: 0.0,
        });
    }
    let ratio = mu / (1.0 + mu);
    let head = 1.0 / (1.0 + mu);
    let pmf = move |n: usize| head * ratio.powi(n as i32);
    // Geometric tail: sum_{n > n_max} p_n = ratio^{n_max + 1}.
    let tail = move |n_max: usize, _: f64| ratio.powi(n_max as i32 + 1);
    truncate(pmf, tail, tol)
}

fn squeezed_vacuum(r: f64, tol: f64) -> Result<PhotonNumberDistribution> {
    if r == 0.0 {
        return Ok(PhotonNumberDistribution {
            probs: vec![1.0],
            tail_bound: 0.0,
        });
    }
    let t2 = r.tanh().powi(2);
    let mut even = 1.0 / r.cosh();
    let pmf = move |n: usize| {
        if n % 2 == 1 {
            0.0
        } else {
            if n > 0 {
                let m = (n / 2 - 1) as f64;
                // p_{2m+2} = p_{2m} (2m+1)/(2m+2) tanh^2 r
                even *= (2.0 * m + 1.0) / (2.0 * m + 2.0) * t2;
            }
            even
        }
    };
    // Even ratios stay below tanh^2 r, so the tail past 2M is at most p_{2M+2}/(1 - tanh^2 r).
    // Only odd n_max see the next even term.
    let tail = move |n_max: usize, following: f64| {
        if n_max % 2 == 1 {
            following / (1.0 - t2)
        } else {
            f64::INFINITY
        }
    };
    truncate(pmf, tail, tol).map(|mut d| {
        // n_max is odd with p_{n_max} = 0; drop that trailing zero.
        if d.probs.len() % 2 == 0 {
            d.probs.pop();
        }
        d
    })
}

/// `G(x) = sum_n p_n x^n` for `x` in `[0, 1]`.
///
/// Coherent, thermal, Fock and squeezed-vacuum leaves use closed forms; explicit
/// leaves sum their (renormalized) probabilities; mixtures are weight sums.
pub fn generating_function(spec: &StateSpec, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("x must lie in [0, 1], got {x}")));
    }
    spec.validate_at("", 0, false)?;
    let mut acc = NeumaierSum::new();
    for (w, leaf) in spec.flatten() {
        acc.add(w * leaf_generating(leaf, x)?);
    }
    Ok(acc.value())
}

/// Closed-form or summed `G(x)` of a single non-mixture state.
pub(crate) fn leaf_generating(leaf: &StateSpec, x: f64) -> Result<f64> {
    Ok(match leaf {
        StateSpec::Coherent { mean_photons } => (-mean_photons * (1.0 - x)).exp(),
        StateSpec::Thermal { mean_photons } => 1.0 / (1.0 + mean_photons * (1.0 - x)),
        StateSpec::Fock { n } => x.powi(*n as i32),
        StateSpec::SqueezedVacuum { r } => {
            let t = r.tanh();
            1.0 / (r.cosh() * (1.0 - x * x * t * t).sqrt())
        }
        StateSpec::Explicit { .. } => leaf_distribution(leaf, DEFAULT_TAIL_TOLERANCE)?.generating(x),
        StateSpec::Mixture { components } => {
            let mut acc = NeumaierSum::new();
            for c in components {
                acc.add(c.weight * leaf_generating(&c.state, x)?);
            }
            acc.value()
        }
    })
}

/// Mean and variance of the photon number. Variances within 1e-12 below zero
/// are clamped to zero.
pub fn photon_moments(pnd: &PhotonNumberDistribution) -> (f64, f64) {
    moments(&pnd.probs)
}
