//! Locations of the bundled verification configs, for the acceptance run.

use std::path::PathBuf;

/// The `configs/` directory at the workspace root.
pub fn bundled_config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}
