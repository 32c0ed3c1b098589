//! File formats: NIfTI-1 volumes, TOML configuration and CSV manifests.

pub mod config;
pub mod manifest;
pub mod nifti;

pub use config::{load_config, parse_config, Config};
pub use manifest::{load_manifest, Manifest, ManifestEntry};
pub use nifti::{read_labels, read_mask, read_scalar, write_labels, write_mask, write_scalar};
