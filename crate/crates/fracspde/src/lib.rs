//! File formats, ensembles and the command-line front end over
//! [`fracspde_core`].

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod fbm2;
pub mod output;
pub mod study;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{Result, RunError};
