//! One-dimensional parameter scans of Q_B and Q_M.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{click_distribution, click_moments, mandel_q, nonclassicality, DetectorConfig, Method};
use crate::states::{make_distribution, MixtureComponent, StateSpec, DEFAULT_TAIL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "nu")]
    Nu,
    #[serde(rename = "N")]
    Detectors,
    #[serde(rename = "mean_photons")]
    MeanPhotons,
    #[serde(rename = "r")]
    R,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::Nu => "nu",
            SweepAxis::Detectors => "N",
            SweepAxis::MeanPhotons => "mean_photons",
            SweepAxis::R => "r",
        }
    }

    fn is_integer(self) -> bool {
        self == SweepAxis::Detectors
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eta" => SweepAxis::Eta,
            "nu" => SweepAxis::Nu,
            "N" | "n" | "detectors" => SweepAxis::Detectors,
            "mean_photons" => SweepAxis::MeanPhotons,
            "r" => SweepAxis::R,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep axis `{other}` (expected eta, nu, N, mean_photons or r)"
                )))
            }
        })
    }
}

/// `steps` evenly spaced values from `from` to `to`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(from: f64, to: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("sweep needs at least one step".into()));
        }
        if !from.is_finite() || !to.is_finite() {
            return Err(Error::InvalidArgument("sweep bounds must be finite".into()));
        }
        Ok(Self { from, to, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

/// One grid point of a sweep. Undefined parameters (degenerate click mean)
/// are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub q_b: f64,
    pub q_m_clicks: f64,
    pub click_mean: f64,
    pub click_variance: f64,
    /// Mandel Q of the photon numbers; NaN for vacuum.
    pub q_m_photons: f64,
}

/// Evaluates Q_B and Q_M along one axis. Rows come back in grid order.
pub fn sweep(
    spec: &StateSpec,
    config: &DetectorConfig,
    axis: SweepAxis,
    grid: &Grid,
    method: Method,
) -> Result<Vec<SweepRow>> {
    let mut values = grid.values();
    if axis.is_integer() {
        for v in &mut values {
            *v = v.round();
        }
    }
    // Build and check every point before computing any.
    let points = values
        .iter()
        .map(|&v| {
            let (s, c) = apply(spec, config, axis, v)?;
            s.validate()?;
            c.validate()?;
            Ok((v, s, c))
        })
        .collect::<Result<Vec<_>>>()?;

    points
        .par_iter()
        .map(|(v, s, c)| match nonclassicality(s, c, method) {
            Ok((_, r)) => Ok(SweepRow {
                value: *v,
                q_b: r.q_b,
                q_m_clicks: r.q_m_clicks,
                click_mean: r.click_mean,
                click_variance: r.click_variance,
                q_m_photons: r.q_m_photons.unwrap_or(f64::NAN),
            }),
            Err(Error::DegenerateMean { .. }) => degenerate_row(*v, s, c, method),
            Err(e) => Err(e),
        })
        .collect()
}

fn degenerate_row(value: f64, spec: &StateSpec, config: &DetectorConfig, method: Method) -> Result<SweepRow> {
    let dist = click_distribution(spec, config, method)?;
    let (click_mean, click_variance) = click_moments(&dist);
    let photons = make_distribution(spec, DEFAULT_TAIL_TOLERANCE)?;
    Ok(SweepRow {
        value,
        q_b: f64::NAN,
        q_m_clicks: mandel_q(dist.probs()).unwrap_or(f64::NAN),
        click_mean,
        click_variance,
        q_m_photons: mandel_q(photons.probs()).unwrap_or(f64::NAN),
    })
}

/// Returns `(spec, config)` with the swept parameter set to `value`.
pub fn apply(
    spec: &StateSpec,
    config: &DetectorConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<(StateSpec, DetectorConfig)> {
    let mut config = *config;
    let mut spec = spec.clone();
    match axis {
        SweepAxis::Eta => config.eta = value,
        SweepAxis::Nu => config.nu = value,
        SweepAxis::Detectors => {
            if value < 1.0 {
                return Err(Error::InvalidConfig(format!("N must be positive, got {value}")));
            }
            config.detectors = value as usize;
        }
        SweepAxis::MeanPhotons | SweepAxis::R => {
            if set_parameter(&mut spec, axis, value) == 0 {
                return Err(Error::InvalidArgument(format!(
                    "state has no `{axis}` parameter to sweep"
                )));
            }
        }
    }
    Ok((spec, config))
}

/// Sets `axis` on every leaf that carries it; returns how many were changed.
fn set_parameter(spec: &mut StateSpec, axis: SweepAxis, value: f64) -> usize {
    match (spec, axis) {
        (StateSpec::Coherent { mean_photons } | StateSpec::Thermal { mean_photons }, SweepAxis::MeanPhotons) => {
            *mean_photons = value;
            1
        }
        (StateSpec::SqueezedVacuum { r }, SweepAxis::R) => {
            *r = value;
            1
        }
        (StateSpec::Mixture { components }, _) => components
            .iter_mut()
            .map(|MixtureComponent { state, .. }| set_parameter(state, axis, value))
            .sum(),
        _ => 0,
    }
}
