//! Batch manifests: CSV with a header row and the columns
//! `subject_id,image,parcellation[,seed]`.
//!
//! Relative paths resolve against the manifest's directory. Row numbers in
//! errors count data rows from 1, not including the header.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub image: PathBuf,
    pub parcellation: PathBuf,
    /// Replaces the batch base seed for this subject.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

const REQUIRED: [&str; 3] = ["subject_id", "image", "parcellation"];

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let err = |row: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        row,
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| err(0, e.to_string()))?.clone();

    let mut column = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !REQUIRED.contains(&name) && name != "seed" {
            return Err(err(0, format!("unknown column {name:?}")));
        }
        if column.insert(name.to_string(), i).is_some() {
            return Err(err(0, format!("duplicate column {name:?}")));
        }
    }
    for name in REQUIRED {
        if !column.contains_key(name) {
            return Err(err(0, format!("missing column {name:?}")));
        }
    }
    let seed_col = column.get("seed").copied();

    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut seen = HashMap::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 1;
        let record = record.map_err(|e| err(row, e.to_string()))?;
        let get = |name: &str| record.get(column[name]).unwrap_or("");

        let subject_id = get("subject_id").to_string();
        if subject_id.is_empty() {
            return Err(err(row, "empty subject_id".into()));
        }
        if subject_id.contains(['/', '\\']) || subject_id == "." || subject_id == ".." {
            return Err(err(row, format!("subject_id {subject_id:?} cannot be used in file names")));
        }
        if let Some(first) = seen.insert(subject_id.clone(), row) {
            return Err(err(row, format!("duplicate subject_id {subject_id:?} (first seen in row {first})")));
        }

        let resolve = |name: &str| -> Result<PathBuf> {
            let raw = get(name);
            if raw.is_empty() {
                return Err(err(row, format!("empty {name} path")));
            }
            let p = base.join(raw);
            if !p.is_file() {
                return Err(err(row, format!("{name} file {} does not exist", p.display())));
            }
            Ok(p)
        };
        let image = resolve("image")?;
        let parcellation = resolve("parcellation")?;

        let seed = match seed_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => Some(
                s.parse::<u64>()
                    .map_err(|_| err(row, format!("seed {s:?} is not a non-negative integer")))?,
            ),
        };
        entries.push(ManifestEntry {
            subject_id,
            image,
            parcellation,
            seed,
        });
    }
    Ok(Manifest {
        path: path.to_path_buf(),
        entries,
    })
}
