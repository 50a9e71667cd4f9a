//! Command-line experiments for heat-source reconstruction: data generation,
//! inversion, figure reports and manifest replay.

pub mod commands;
pub mod io;
pub mod manifest;
pub mod plot;
pub mod settings;
