//! Experiment orchestration: declarative TOML configs in, deterministic
//! CSV/JSON artifacts out.
//!
//! Everything numeric is a pure function of the config (including the
//! master seed); wall-clock time appears only as a timing field in the run
//! manifest. Worker threads change nothing but elapsed time.

pub mod config;
pub mod drivers;
pub mod manifest;

pub use config::{parse_config, ExperimentConfig};
pub use drivers::{run_to_dir, RunError};
pub use manifest::RunManifest;
