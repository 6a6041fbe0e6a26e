//! Command-line front end for the `qbstat_core` click-statistics toolkit.
//!
//! The binary is a thin wrapper around [`run`]; everything it can do is also
//! reachable from here, which keeps the verbs testable in-process.

pub mod command;
pub mod formats;
pub mod spec_parse;

pub use command::{run, run_command, Cli, CliError, Command, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
pub use formats::Format;
pub use spec_parse::{parse_state_spec, SpecError};
