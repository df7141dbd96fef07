//! Config-driven experiment runner: parses a TOML experiment description,
//! dispatches to the matching pipeline and writes tables plus a manifest.

pub mod config;
pub mod output;
pub mod run;
