//! Library surface of the pipeline driver: run configuration and the
//! command implementations. The `attrflow` binary is a thin argument
//! parser over these, and the fuzz harness reaches the configuration
//! parser through here.

pub mod commands;
pub mod config;
