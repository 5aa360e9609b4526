//! On-disk field snapshots.
//!
//! A snapshot is a raw little-endian `f64` array in grid order (x-fastest
//! row-major) stored as `NAME.f64`, with a JSON sidecar `NAME.json` that
//! records the grid:
//!
//! ```json
//!   {"n": 16, "L": 1.0, "conformal": false, "order": "x-fastest"}
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::manifold::Manifold;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub conformal: bool,
    pub order: String,
}

impl Sidecar {
    pub fn for_manifold(m: &Manifold) -> Sidecar {
        Sidecar {
            n: m.n_per_axis(),
            l: m.side_length(),
            conformal: !m.is_flat(),
            order: "x-fastest".to_string(),
        }
    }
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.f64")),
        dir.join(format!("{name}.json")),
    )
}

/// Writes `NAME.f64` + `NAME.json` under `dir` (created if missing).
pub fn save_field(dir: &Path, name: &str, m: &Manifold, field: &ScalarField) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (bin_path, json_path) = paths(dir, name);
    let mut bytes = Vec::with_capacity(field.len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(bin_path)?;
    f.write_all(&bytes)?;
    let sidecar = Sidecar::for_manifold(m);
    fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a snapshot back; `m` must describe the same grid as the sidecar.
pub fn load_field(dir: &Path, name: &str, m: &Manifold) -> Result<ScalarField> {
    let (bin_path, json_path) = paths(dir, name);
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    if sidecar.n != m.n_per_axis() {
        return Err(CoreError::SnapshotMismatch(format!(
            "snapshot n = {}, manifold n = {}",
            sidecar.n,
            m.n_per_axis()
        )));
    }
    if sidecar.l != m.side_length() {
        return Err(CoreError::SnapshotMismatch(format!(
            "snapshot L = {}, manifold L = {}",
            sidecar.l,
            m.side_length()
        )));
    }
    if sidecar.order != "x-fastest" {
        return Err(CoreError::SnapshotMismatch(format!(
            "unsupported node order '{}'",
            sidecar.order
        )));
    }
    let mut bytes = Vec::new();
    fs::File::open(bin_path)?.read_to_end(&mut bytes)?;
    if bytes.len() != m.node_count() * 8 {
        return Err(CoreError::SnapshotMismatch(format!(
            "snapshot holds {} bytes, expected {}",
            bytes.len(),
            m.node_count() * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ScalarField::from_values(m.id(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bitwise() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = Manifold::build_torus(8, 2.0, None).unwrap();
        let u = m.random_field(3.0, &mut rng);
        let dir = std::env::temp_dir().join(format!("smvar-snap-{}", std::process::id()));
        save_field(&dir, "u", &m, &u).unwrap();
        let back = load_field(&dir, "u", &m).unwrap();
        assert_eq!(u.values(), back.values());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_wrong_grid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let m8 = Manifold::build_torus(8, 1.0, None).unwrap();
        let m16 = Manifold::build_torus(16, 1.0, None).unwrap();
        let u = m8.random_field(1.0, &mut rng);
        let dir = std::env::temp_dir().join(format!("smvar-snap-miss-{}", std::process::id()));
        save_field(&dir, "u", &m8, &u).unwrap();
        assert!(load_field(&dir, "u", &m16).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}
