//! Config files, CSV/JSON artifacts and the workflows behind the
//! `glide-evade` command line, on top of [`glide_evade_core`].
//!
//! The bundled missions live in `missions/*.toml` next to this crate's
//! manifest; [`bundled_mission`] locates them.

pub mod commands;
pub mod config;
pub mod formats;

use std::path::PathBuf;

pub use commands::{CliError, MissionReport};
pub use config::{load_config, FileConfig, LoadedConfig, Overrides, TrustModeName};

/// Environment variable holding the log filter, e.g. `info` or
/// `glide_evade_core=debug`.
pub const LOG_ENV: &str = "GLIDE_EVADE_LOG";

/// Path of a bundled mission config such as `mission1`.
pub fn bundled_mission(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("missions")
        .join(format!("{name}.toml"))
}
