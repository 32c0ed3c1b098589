//! TOML configuration.
//!
//! Every key is optional and falls back to [`ResectionParams::default`].
//! Unknown keys are rejected. Errors name the offending key, with nested keys
//! written as `table.key`.
//!
//! ```toml
//! shape = "noisy"            # noisy | ellipsoid | cuboid
//! volume_range = [500, 50000]
//! lambda_range = [1, 2]
//! rotation_range = [0, 6.283185307179586]
//! sigma_range = [0.5, 2.0]
//! icosphere_frequency = 3
//! amplitude = 0.5
//! radius_formula = "verbatim" # or "exact-volume"
//! max_attempts = 10
//!
//! [noise]
//! octaves = 4
//! persistence = 0.5
//! scale_range = [0.2, 1.0]
//! shift_range = [0, 1000]
//!
//! [[smoothing]]
//! op = "close"
//! radius = 3
//!
//! [[smoothing]]
//! op = "open"
//! radius = 2
//! ```
//!
//! `scheme` optionally replaces the label scheme, either by name
//! (`scheme = "builtin:gif"`), by path relative to the configuration file, or
//! inline as a `[scheme]` table with the same keys as a scheme file.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::parcellation::{ParcellationScheme, SchemeDoc};
use crate::simulate::ResectionParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ResectionParams,
    /// Label scheme override, if the file names one.
    pub scheme: Option<ParcellationScheme>,
}

fn field<T: DeserializeOwned>(key: &str, value: toml::Value) -> Result<T> {
    value.try_into().map_err(|e: toml::de::Error| Error::config(key, e.message().trim().to_string()))
}

fn table(key: &str, value: toml::Value) -> Result<toml::Table> {
    match value {
        toml::Value::Table(t) => Ok(t),
        other => Err(Error::config(key, format!("expected a table, found {}", other.type_str()))),
    }
}

/// Parses configuration text. Relative scheme paths resolve against
/// `base_dir` (the working directory when `None`).
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<Config> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string().trim().to_string()))?;
    let mut p = ResectionParams::default();
    let mut scheme = None;
    for (key, value) in doc {
        let k = key.as_str();
        match k {
            "shape" => p.shape = field(k, value)?,
            "volume_range" => p.volume_range = field(k, value)?,
            "lambda_range" => p.lambda_range = field(k, value)?,
            "rotation_range" => p.rotation_range = field(k, value)?,
            "sigma_range" => p.sigma_range = field(k, value)?,
            "icosphere_frequency" => p.icosphere_frequency = field(k, value)?,
            "amplitude" => p.amplitude = field(k, value)?,
            "radius_formula" => p.radius_formula = field(k, value)?,
            "smoothing" => p.smoothing = field(k, value)?,
            "max_attempts" => p.max_attempts = field(k, value)?,
            "noise" => {
                for (sub, v) in table(k, value)? {
                    let full = format!("noise.{sub}");
                    match sub.as_str() {
                        "octaves" => p.noise.octaves = field(&full, v)?,
                        "persistence" => p.noise.persistence = field(&full, v)?,
                        "scale_range" => p.noise.scale_range = field(&full, v)?,
                        "shift_range" => p.noise.shift_range = field(&full, v)?,
                        _ => return Err(Error::config(full, "unknown key")),
                    }
                }
            }
            "scheme" => {
                scheme = Some(match value {
                    toml::Value::String(s) => {
                        if s.starts_with("builtin:") {
                            ParcellationScheme::load(&s)?
                        } else {
                            let path = match base_dir {
                                Some(dir) => dir.join(&s),
                                None => s.into(),
                            };
                            ParcellationScheme::load(&path.to_string_lossy())?
                        }
                    }
                    v @ toml::Value::Table(_) => field::<SchemeDoc>("scheme", v)?.into_scheme("scheme.")?,
                    other => {
                        return Err(Error::config(
                            "scheme",
                            format!("expected a name, a path or a table, found {}", other.type_str()),
                        ))
                    }
                })
            }
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    p.validate()?;
    Ok(Config { params: p, scheme })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path.parent())
}
