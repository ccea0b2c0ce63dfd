//! Command-line front end: configuration loading and the subcommands.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_adapt, cmd_joint, cmd_landscape, cmd_steady, cmd_sweep, fmt_float, read_schedule,
};
pub use config::{Grid, JointSettings, RunConfig};
