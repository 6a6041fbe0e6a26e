//! Text formats read and written by the command-line tool.
//!
//! Sample records are plain text: a `#`-prefixed `key=value` preamble, a
//! `clicks` header line and one count per line. Reports and distributions are
//! either comma-separated tables or JSON objects. Every float is written with
//! 12 significant digits.

use std::fmt::Write as _;

use qbstat_core::estimators::EstimateReport;
use qbstat_core::simulator::Provenance;
use qbstat_core::{
    ClickDistribution, ClickSampleSet, DetectorConfig, NonclassicalityReport, StateSpec, SweepAxis, SweepRow,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SIGNIFICANT_DIGITS: usize = 12;
pub const CLICKS_HEADER: &str = "clicks";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// `%.12g`-style rendering: fixed notation for moderate exponents, scientific
/// otherwise, trailing zeros removed. NaN renders as `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exponent) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds to the precision the writers emit.
pub fn round_sig(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_num)
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite()).map(round_sig)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Sample records

/// Contents of a sample-record file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub detectors: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub state: Option<StateSpec>,
    pub config: Option<DetectorConfig>,
    pub clicks: Vec<u32>,
}

impl SampleRecord {
    pub fn into_sample_set(self, detectors: usize) -> ClickSampleSet {
        let provenance = match (self.seed, self.config, self.state) {
            (Some(seed), Some(config), Some(state)) => Some(Provenance { seed, config, state }),
            _ => None,
        };
        ClickSampleSet {
            detectors,
            clicks: self.clicks,
            provenance,
        }
    }
}

pub fn write_samples(samples: &ClickSampleSet) -> String {
    let mut out = String::with_capacity(samples.clicks.len() * 2 + 256);
    writeln!(out, "# N={}", samples.detectors).unwrap();
    if let Some(p) = &samples.provenance {
        writeln!(out, "# seed={}", p.seed).unwrap();
        writeln!(out, "# trials={}", samples.trials()).unwrap();
        writeln!(out, "# state={}", serde_json::to_string(&p.state).unwrap()).unwrap();
        writeln!(out, "# config={}", serde_json::to_string(&p.config).unwrap()).unwrap();
    } else {
        writeln!(out, "# trials={}", samples.trials()).unwrap();
    }
    out.push_str(CLICKS_HEADER);
    out.push('\n');
    for c in &samples.clicks {
        writeln!(out, "{c}").unwrap();
    }
    out
}

pub fn read_samples(text: &str) -> Result<SampleRecord, FormatError> {
    let mut record = SampleRecord {
        detectors: None,
        seed: None,
        trials: None,
        state: None,
        config: None,
        clicks: Vec::new(),
    };
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if seen_header {
                continue;
            }
            let Some((key, value)) = meta.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let bad = |what: &str| malformed(line_no, format!("bad {what} value `{value}`"));
            match key.trim() {
                "N" => record.detectors = Some(value.parse().map_err(|_| bad("N"))?),
                "seed" => record.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                "trials" => record.trials = Some(value.parse().map_err(|_| bad("trials"))?),
                "state" => record.state = Some(serde_json::from_str(value).map_err(|_| bad("state"))?),
                "config" => record.config = Some(serde_json::from_str(value).map_err(|_| bad("config"))?),
                _ => {}
            }
            continue;
        }
        if !seen_header {
            if line != CLICKS_HEADER {
                return Err(malformed(
                    line_no,
                    format!("expected header `{CLICKS_HEADER}`, found `{line}`"),
                ));
            }
            seen_header = true;
            continue;
        }
        let count: u32 = line
            .parse()
            .map_err(|_| malformed(line_no, format!("`{line}` is not a nonnegative integer")))?;
        record.clicks.push(count);
    }
    if let Some(trials) = record.trials {
        if trials != record.clicks.len() {
            return Err(malformed(
                0,
                format!(
                    "preamble announces {trials} trials but {} records follow",
                    record.clicks.len()
                ),
            ));
        }
    }
    Ok(record)
}

// ---------------------------------------------------------------------------
// Click distributions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionDoc {
    #[serde(rename = "N")]
    pub detectors: usize,
    pub probs: Vec<f64>,
}

pub fn write_distribution(dist: &ClickDistribution, format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = String::from("k,c_k\n");
            for (k, p) in dist.probs().iter().enumerate() {
                writeln!(out, "{k},{}", fmt_num(*p)).unwrap();
            }
            out
        }
        Format::Structured => to_json(&DistributionDoc {
            detectors: dist.detectors(),
            probs: dist.probs().iter().map(|&p| round_sig(p)).collect(),
        }),
    }
}

pub fn read_distribution(text: &str, format: Format) -> Result<DistributionDoc, FormatError> {
    match format {
        Format::Table => {
            let table = read_table(text)?;
            if table.header != ["k", "c_k"] {
                return Err(malformed(1, "expected header `k,c_k`"));
            }
            let probs: Vec<f64> = table.rows.iter().map(|r| r[1]).collect();
            if probs.len() < 2 {
                return Err(malformed(1, "distribution needs at least two rows"));
            }
            Ok(DistributionDoc {
                detectors: probs.len() - 1,
                probs,
            })
        }
        Format::Structured => serde_json::from_str(text).map_err(|e| malformed(e.line(), e.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Nonclassicality reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QbDoc {
    pub q_b: f64,
    pub q_m_clicks: f64,
    pub q_m_photons: Option<f64>,
    pub click_mean: f64,
    pub click_variance: f64,
}

const QB_HEADER: [&str; 5] = ["q_b", "q_m_clicks", "q_m_photons", "click_mean", "click_variance"];

pub fn write_qb_report(report: &NonclassicalityReport, format: Format) -> String {
    match format {
        Format::Table => format!(
            "{}\n{},{},{},{},{}\n",
            QB_HEADER.join(","),
            fmt_num(report.q_b),
            fmt_num(report.q_m_clicks),
            fmt_opt(report.q_m_photons),
            fmt_num(report.click_mean),
            fmt_num(report.click_variance)
        ),
        Format::Structured => to_json(&QbDoc {
            q_b: round_sig(report.q_b),
            q_m_clicks: round_sig(report.q_m_clicks),
            q_m_photons: round_opt(report.q_m_photons),
            click_mean: round_sig(report.click_mean),
            click_variance: round_sig(report.click_variance),
        }),
    }
}

pub fn read_qb_report(text: &str, format: Format) -> Result<QbDoc, FormatError> {
    match format {
        Format::Table => {
            let table = read_table(text)?;
            if table.header != QB_HEADER {
                return Err(malformed(1, format!("expected header `{}`", QB_HEADER.join(","))));
            }
            let [row] = table.rows.as_slice() else {
                return Err(malformed(2, "expected exactly one row"));
            };
            Ok(QbDoc {
                q_b: row[0],
                q_m_clicks: row[1],
                q_m_photons: Some(row[2]).filter(|v| !v.is_nan()),
                click_mean: row[3],
                click_variance: row[4],
            })
        }
        Format::Structured => serde_json::from_str(text).map_err(|e| malformed(e.line(), e.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Estimate reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub statistic: String,
    pub point_estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub confidence_level: f64,
    pub sample_size: usize,
    pub bootstrap_replicates: usize,
    pub discarded_replicates: usize,
}

impl From<&EstimateReport> for EstimateDoc {
    fn from(r: &EstimateReport) -> Self {
        Self {
            statistic: r.statistic.name().to_string(),
            point_estimate: round_sig(r.point_estimate),
            ci_low: round_opt(r.ci_low),
            ci_high: round_opt(r.ci_high),
            confidence_level: round_sig(r.confidence_level),
            sample_size: r.sample_size,
            bootstrap_replicates: r.bootstrap_replicates,
            discarded_replicates: r.discarded_replicates,
        }
    }
}

const ESTIMATE_HEADER: [&str; 8] = [
    "statistic",
    "point_estimate",
    "ci_low",
    "ci_high",
    "confidence_level",
    "sample_size",
    "bootstrap_replicates",
    "discarded_replicates",
];

pub fn write_estimates(reports: &[EstimateReport], format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = ESTIMATE_HEADER.join(",");
            out.push('\n');
            for r in reports {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.statistic.name(),
                    fmt_num(r.point_estimate),
                    fmt_opt(r.ci_low),
                    fmt_opt(r.ci_high),
                    fmt_num(r.confidence_level),
                    r.sample_size,
                    r.bootstrap_replicates,
                    r.discarded_replicates
                )
                .unwrap();
            }
            out
        }
        Format::Structured => to_json(&reports.iter().map(EstimateDoc::from).collect::<Vec<_>>()),
    }
}

pub fn read_estimates(text: &str, format: Format) -> Result<Vec<EstimateDoc>, FormatError> {
    match format {
        Format::Table => {
            let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
            let Some((_, header)) = lines.next() else {
                return Err(malformed(1, "empty report"));
            };
            if header.split(',').collect::<Vec<_>>() != ESTIMATE_HEADER {
                return Err(malformed(1, "unexpected estimate header"));
            }
            lines
                .map(|(i, line)| {
                    let cells: Vec<&str> = line.split(',').collect();
                    if cells.len() != ESTIMATE_HEADER.len() {
                        return Err(malformed(i + 1, "wrong number of columns"));
                    }
                    let num = |j: usize| parse_cell(cells[j], i + 1);
                    let int = |j: usize| {
                        cells[j]
                            .parse::<usize>()
                            .map_err(|_| malformed(i + 1, format!("`{}` is not an integer", cells[j])))
                    };
                    Ok(EstimateDoc {
                        statistic: cells[0].to_string(),
                        point_estimate: num(1)?,
                        ci_low: Some(num(2)?).filter(|v| !v.is_nan()),
                        ci_high: Some(num(3)?).filter(|v| !v.is_nan()),
                        confidence_level: num(4)?,
                        sample_size: int(5)?,
                        bootstrap_replicates: int(6)?,
                        discarded_replicates: int(7)?,
                    })
                })
                .collect()
        }
        Format::Structured => serde_json::from_str(text).map_err(|e| malformed(e.line(), e.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub axis: String,
    pub rows: Vec<SweepDocRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocRow {
    pub value: f64,
    pub q_b: Option<f64>,
    pub q_m_clicks: Option<f64>,
    pub click_mean: f64,
    pub click_variance: f64,
}

fn finite(x: f64) -> Option<f64> {
    Some(x).filter(|v| v.is_finite()).map(round_sig)
}

pub fn write_sweep(axis: SweepAxis, rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Table => {
            let mut out = format!("{},q_b,q_m_clicks,click_mean,click_variance\n", axis.name());
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_num(r.value),
                    fmt_num(r.q_b),
                    fmt_num(r.q_m_clicks),
                    fmt_num(r.click_mean),
                    fmt_num(r.click_variance)
                )
                .unwrap();
            }
            out
        }
        Format::Structured => to_json(&SweepDoc {
            axis: axis.name().to_string(),
            rows: rows
                .iter()
                .map(|r| SweepDocRow {
                    value: round_sig(r.value),
                    q_b: finite(r.q_b),
                    q_m_clicks: finite(r.q_m_clicks),
                    click_mean: round_sig(r.click_mean),
                    click_variance: round_sig(r.click_variance),
                })
                .collect(),
        }),
    }
}

pub fn read_sweep(text: &str, format: Format) -> Result<SweepDoc, FormatError> {
    match format {
        Format::Table => {
            let table = read_table(text)?;
            if table.header.len() != 5 || table.header[1..] != ["q_b", "q_m_clicks", "click_mean", "click_variance"] {
                return Err(malformed(1, "unexpected sweep header"));
            }
            Ok(SweepDoc {
                axis: table.header[0].clone(),
                rows: table
                    .rows
                    .iter()
                    .map(|r| SweepDocRow {
                        value: r[0],
                        q_b: Some(r[1]).filter(|v| !v.is_nan()),
                        q_m_clicks: Some(r[2]).filter(|v| !v.is_nan()),
                        click_mean: r[3],
                        click_variance: r[4],
                    })
                    .collect(),
            })
        }
        Format::Structured => serde_json::from_str(text).map_err(|e| malformed(e.line(), e.to_string())),
    }
}

// ---------------------------------------------------------------------------

/// Numeric comma-separated table with one header line.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(text: &str) -> Result<Table, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty table"))?;
    let header: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();
    let rows = lines
        .map(|(i, line)| {
            let cells = line
                .split(',')
                .map(|c| parse_cell(c, i + 1))
                .collect::<Result<Vec<f64>, _>>()?;
            if cells.len() != header.len() {
                return Err(malformed(i + 1, "wrong number of columns"));
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table { header, rows })
}

fn parse_cell(cell: &str, line: usize) -> Result<f64, FormatError> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| malformed(line, format!("`{cell}` is not a number")))
}
