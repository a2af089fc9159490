//! Command-line front end and annotation server for the workbench.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod server;
pub mod cli;
