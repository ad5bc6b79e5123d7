//! Command-line front end: configuration, dispatch and plot output.

pub mod config;
pub mod dispatch;
pub mod svg;

pub use config::{parse_config, CliError, Command, GridSize, InitialPreset, RunConfig};
pub use dispatch::{dispatch, dispatch_to};
pub use svg::{emit_svg, render_svg, Plot};
