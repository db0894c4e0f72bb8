//! File formats, scenario presets and the command-line front end for
//! `kplateau-core`.
//!
//! * [`config`]: TOML scenario files, validation with line numbers.
//! * [`presets`]: the shipped scenarios `ring`, `hopf`, `clamped-plus-free`.
//! * [`export`]: OBJ meshes (writer and reader) and CSV solve traces.
//! * [`app`]: the `kplateau` subcommands.

pub mod app;
pub mod config;
pub mod export;
pub mod presets;

pub use app::run_cli;
pub use config::{parse_config, ConfigError, Scenario, ScenarioConfig};
pub use presets::Preset;
