//! Scenario runner library behind the `sigmax` binary: configuration,
//! run manifests, figure-preset scenarios, subcommands, and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod scenarios;
