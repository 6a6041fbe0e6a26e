//! Argument parsing, validation and execution of the five verbs.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use qbstat_core::estimators::{BootstrapOptions, DEFAULT_LEVEL};
use qbstat_core::{
    click_distribution, mandel_q_estimate, nonclassicality, qb_estimate, simulate, sweep, DetectorConfig,
    Error as CoreError, Grid, Method, StateSpec, SweepAxis,
};
use thiserror::Error;

use crate::formats::{self, Format, FormatError};
use crate::spec_parse::{parse_state_spec, SpecError};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for errors raised by the computation itself.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit status for malformed invocations and unparsable inputs.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    Dist,
    Qb,
    Simulate,
    Analyze,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gf,
    Dp,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gf => Method::GeneratingFunction,
            MethodArg::Dp => Method::OccupancyDp,
            MethodArg::Auto => Method::Auto,
        }
    }
}

/// Click statistics of on-off detector arrays.
#[derive(Debug, Parser)]
#[command(name = "qbstat", version)]
pub struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    pub verb: Verb,
    /// State spec, inline JSON (starting with `{`) or a path to a JSON file.
    #[arg(long)]
    pub state: Option<String>,
    /// Number of on-off detectors.
    #[arg(long)]
    pub detectors: Option<usize>,
    /// Quantum efficiency in [0, 1].
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eta: f64,
    /// Dark-count parameter; each detector stays dark with probability exp(-nu).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub nu: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Number of simulated trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this value.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Bootstrap replicates for `analyze`; the bare flag means 1000.
    #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
    pub bootstrap: Option<usize>,
    /// Confidence level of bootstrap intervals.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_parser = parse_axis)]
    pub sweep_axis: Option<SweepAxis>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Input sample-record file for `analyze`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Dist {
        state: StateSpec,
        config: DetectorConfig,
        method: Method,
        format: Format,
    },
    Qb {
        state: StateSpec,
        config: DetectorConfig,
        method: Method,
        format: Format,
    },
    Simulate {
        state: StateSpec,
        config: DetectorConfig,
        trials: usize,
        seed: u64,
        workers: usize,
    },
    Analyze {
        input: PathBuf,
        detectors: Option<usize>,
        bootstrap: Option<BootstrapOptions>,
        format: Format,
    },
    Sweep {
        state: StateSpec,
        config: DetectorConfig,
        axis: SweepAxis,
        grid: Grid,
        method: Method,
        format: Format,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{kind}: {source}", kind = .source.kind())]
    Domain {
        #[from]
        source: CoreError,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Spec(_) | CliError::Format { .. } => EXIT_USAGE,
            CliError::Domain { source } => match source {
                CoreError::InvalidState { .. } | CoreError::InvalidConfig(_) | CoreError::InvalidArgument(_) => {
                    EXIT_USAGE
                }
                _ => EXIT_DOMAIN,
            },
            CliError::Io { .. } => EXIT_DOMAIN,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn require<T>(value: Option<T>, flag: &str, verb: Verb) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("`{}` requires --{flag}", verb_name(verb))))
}

fn verb_name(verb: Verb) -> &'static str {
    match verb {
        Verb::Dist => "dist",
        Verb::Qb => "qb",
        Verb::Simulate => "simulate",
        Verb::Analyze => "analyze",
        Verb::Sweep => "sweep",
    }
}

/// Reads `--state` as inline JSON when it starts with `{`, else as a file path.
pub fn load_state(arg: &str) -> Result<StateSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let path = std::path::Path::new(arg);
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read state file {}: {e}", path.display())))?
    };
    Ok(parse_state_spec(&text)?)
}

impl Command {
    pub fn from_cli(cli: Cli) -> Result<Command, CliError> {
        let verb = cli.verb;
        let config = |cli: &Cli| -> Result<DetectorConfig, CliError> {
            let n = require(cli.detectors, "detectors", verb)?;
            Ok(DetectorConfig::new(n, cli.eta, cli.nu)?)
        };
        let state = |cli: &Cli| load_state(&require(cli.state.clone(), "state", verb)?);
        if cli.bootstrap.is_some() && verb != Verb::Analyze {
            return Err(usage("--bootstrap only applies to `analyze`"));
        }
        Ok(match verb {
            Verb::Dist => Command::Dist {
                state: state(&cli)?,
                config: config(&cli)?,
                method: cli.method.into(),
                format: cli.format,
            },
            Verb::Qb => Command::Qb {
                state: state(&cli)?,
                config: config(&cli)?,
                method: cli.method.into(),
                format: cli.format,
            },
            Verb::Simulate => {
                let trials = require(cli.trials, "trials", verb)?;
                if trials == 0 {
                    return Err(usage("--trials must be positive"));
                }
                if cli.workers == 0 {
                    return Err(usage("--workers must be positive"));
                }
                Command::Simulate {
                    state: state(&cli)?,
                    config: config(&cli)?,
                    trials,
                    seed: require(cli.seed, "seed", verb)?,
                    workers: cli.workers,
                }
            }
            Verb::Analyze => {
                let bootstrap = match cli.bootstrap {
                    Some(replicates) => {
                        let seed = cli
                            .seed
                            .ok_or_else(|| usage("--bootstrap is randomized and requires --seed"))?;
                        let level = cli.level.unwrap_or(DEFAULT_LEVEL);
                        if !(level > 0.0 && level < 1.0) {
                            return Err(usage(format!("--level must lie in (0, 1), got {level}")));
                        }
                        Some(BootstrapOptions {
                            replicates,
                            level,
                            seed,
                        })
                    }
                    None if cli.level.is_some() => return Err(usage("--level requires --bootstrap")),
                    None => None,
                };
                Command::Analyze {
                    input: require(cli.input, "in", verb)?,
                    detectors: cli.detectors,
                    bootstrap,
                    format: cli.format,
                }
            }
            Verb::Sweep => {
                let axis = require(cli.sweep_axis, "sweep-axis", verb)?;
                let grid = Grid::new(
                    require(cli.from, "from", verb)?,
                    require(cli.to, "to", verb)?,
                    require(cli.steps, "steps", verb)?,
                )?;
                Command::Sweep {
                    state: state(&cli)?,
                    config: config(&cli)?,
                    axis,
                    grid,
                    method: cli.method.into(),
                    format: cli.format,
                }
            }
        })
    }
}

/// Executes a validated command and returns the text it emits.
pub fn run_command(cmd: &Command) -> Result<String, CliError> {
    match cmd {
        Command::Dist {
            state,
            config,
            method,
            format,
        } => Ok(formats::write_distribution(
            &click_distribution(state, config, *method)?,
            *format,
        )),
        Command::Qb {
            state,
            config,
            method,
            format,
        } => {
            let (_, report) = nonclassicality(state, config, *method)?;
            Ok(formats::write_qb_report(&report, *format))
        }
        Command::Simulate {
            state,
            config,
            trials,
            seed,
            workers,
        } => Ok(formats::write_samples(&simulate(
            state, config, *trials, *seed, *workers,
        )?)),
        Command::Analyze {
            input,
            detectors,
            bootstrap,
            format,
        } => {
            let text = fs::read_to_string(input).map_err(io_error(input))?;
            let record = formats::read_samples(&text).map_err(|source| CliError::Format {
                path: input.display().to_string(),
                source,
            })?;
            if record.clicks.is_empty() {
                return Err(CoreError::InsufficientData(format!("{} holds no click records", input.display())).into());
            }
            let n = match (record.detectors, *detectors) {
                (Some(a), Some(b)) if a != b => {
                    return Err(usage(format!(
                        "--detectors {b} contradicts N={a} in {}",
                        input.display()
                    )))
                }
                (Some(n), _) | (None, Some(n)) => n,
                (None, None) => {
                    return Err(usage(format!(
                        "{} has no `# N=` line; pass --detectors",
                        input.display()
                    )))
                }
            };
            let samples = record.into_sample_set(n);
            let counts: Vec<u64> = samples.clicks.iter().map(|&c| u64::from(c)).collect();
            let q_b = qb_estimate(&samples, bootstrap.as_ref())?;
            let q_m = mandel_q_estimate(&counts, bootstrap.as_ref())?;
            Ok(formats::write_estimates(&[q_b, q_m], *format))
        }
        Command::Sweep {
            state,
            config,
            axis,
            grid,
            method,
            format,
        } => Ok(formats::write_sweep(
            *axis,
            &sweep(state, config, *axis, grid, *method)?,
            *format,
        )),
    }
}

/// Parses `args`, runs the command and writes its output to `--out` or
/// `stdout`. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return e.exit_code();
        }
    };
    let out = cli.out.clone();
    let result = Command::from_cli(cli).and_then(|cmd| {
        let text = run_command(&cmd)?;
        match &out {
            Some(path) => fs::write(path, text).map_err(io_error(path)),
            None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
