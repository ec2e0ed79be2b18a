//! Atomic file output, the manifest, and the field cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use summlab::spectral::{decode, encode, Container, SpectralField};

use crate::CliError;

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends a `config_hash` column to every row of a CSV payload.
pub fn with_hash_column(csv: &str, hash: &str) -> String {
    let mut out = String::with_capacity(csv.len() + 80 * csv.lines().count());
    for (i, line) in csv.lines().enumerate() {
        out.push_str(line);
        if i == 0 {
            out.push_str(",config_hash\n");
        } else {
            out.push(',');
            out.push_str(hash);
            out.push('\n');
        }
    }
    out
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join("cache").join(format!("{key}.slab"))
}

/// Stores a field under `dir/cache/<key>.slab`.
pub fn cache_field(dir: &Path, key: &str, field: &SpectralField) -> Result<(), CliError> {
    write_atomic(&cache_path(dir, key), &encode(&Container::Field(field.clone())))
}

/// Loads a cached field; `Ok(None)` when nothing is stored under `key`.
pub fn load_field(dir: &Path, key: &str) -> Result<Option<SpectralField>, CliError> {
    let path = cache_path(dir, key);
    if !path.exists() {
        return Ok(None);
    }
    match decode(&fs::read(path)?)? {
        Container::Field(f) => Ok(Some(f)),
        Container::Grid(_) => Err(CliError::Io(format!("cache entry {key} holds a grid, not a field"))),
    }
}
