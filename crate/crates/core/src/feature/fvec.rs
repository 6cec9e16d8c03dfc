//! FVEC feature files.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! b"FVEC1\0" | count: u32 | dim: u32 | count * dim f32, row-major
//! ```
//!
//! Rows are keyed by a sidecar text file at `<path>.idx` holding one
//! `person_id,camera_id,frame_index` line per row, in row order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{FeatureError, FeatureVector};

pub const MAGIC: &[u8; 6] = b"FVEC1\0";
const HEADER_LEN: usize = 6 + 4 + 4;

/// `(person_id, camera_id, frame_index)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureKey {
    pub person: String,
    pub camera: String,
    pub index: u64,
}

impl FeatureKey {
    pub fn new(person: impl Into<String>, camera: impl Into<String>, index: u64) -> Self {
        Self {
            person: person.into(),
            camera: camera.into(),
            index,
        }
    }
}

pub fn index_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".idx");
    PathBuf::from(s)
}

pub fn encode_fvec(dim: usize, rows: &[&[f32]]) -> Result<Vec<u8>, FeatureError> {
    let count = u32::try_from(rows.len()).map_err(|_| FeatureError::FormatError("too many rows".into()))?;
    let dim32 = u32::try_from(dim).map_err(|_| FeatureError::FormatError("dimension too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim32.to_le_bytes());
    for row in rows {
        if row.len() != dim {
            return Err(FeatureError::DimMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        for v in *row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Returns `(dim, rows)`.
pub fn decode_fvec(bytes: &[u8]) -> Result<(usize, Vec<Vec<f32>>), FeatureError> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != MAGIC {
        return Err(FeatureError::FormatError("missing FVEC1 magic".into()));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FeatureError::FormatError("header overflows".into()))?;
    if payload.len() != expected {
        return Err(FeatureError::FormatError(format!(
            "payload holds {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    let floats: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let rows = if dim == 0 {
        vec![Vec::new(); count]
    } else {
        floats.chunks_exact(dim).map(<[f32]>::to_vec).collect()
    };
    Ok((dim, rows))
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FeatureError + '_ {
    move |e| FeatureError::Io(format!("{}: {e}", path.display()))
}

/// Writes `<path>` and `<path>.idx`.
pub fn write_fvec(path: &Path, dim: usize, rows: &[(FeatureKey, &[f32])]) -> Result<(), FeatureError> {
    let vectors: Vec<&[f32]> = rows.iter().map(|(_, v)| *v).collect();
    fs::write(path, encode_fvec(dim, &vectors)?).map_err(io(path))?;
    let mut idx = String::new();
    for (k, _) in rows {
        idx.push_str(&format!("{},{},{}\n", k.person, k.camera, k.index));
    }
    let ip = index_path(path);
    fs::write(&ip, idx).map_err(io(&ip))
}

/// Reads `<path>` and its sidecar index into ordered `(key, row)` pairs.
pub fn read_fvec(path: &Path) -> Result<(usize, Vec<(FeatureKey, Vec<f32>)>), FeatureError> {
    let bytes = fs::read(path).map_err(io(path))?;
    let (dim, rows) = decode_fvec(&bytes)?;
    let ip = index_path(path);
    let text = fs::read_to_string(&ip).map_err(io(&ip))?;
    let keys = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            match parts[..] {
                [p, c, f] => f
                    .parse()
                    .map(|f| FeatureKey::new(p, c, f))
                    .map_err(|_| FeatureError::FormatError(format!("index line {}: bad frame index {f:?}", i + 1))),
                _ => Err(FeatureError::FormatError(format!("index line {}: expected 3 fields", i + 1))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if keys.len() != rows.len() {
        return Err(FeatureError::FormatError(format!(
            "index lists {} rows, file holds {}",
            keys.len(),
            rows.len()
        )));
    }
    Ok((dim, keys.into_iter().zip(rows).collect()))
}

/// Per-frame features imported from an FVEC file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalFeatures {
    dim: usize,
    map: BTreeMap<FeatureKey, FeatureVector>,
}

impl ExternalFeatures {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &FeatureKey) -> Option<&FeatureVector> {
        self.map.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FeatureKey, &FeatureVector)> {
        self.map.iter()
    }

    /// Fails with `DimMismatch` unless the file's dimension is `expected`.
    pub fn expect_dim(self, expected: usize) -> Result<Self, FeatureError> {
        if self.dim != expected {
            return Err(FeatureError::DimMismatch {
                expected,
                actual: self.dim,
            });
        }
        Ok(self)
    }
}

pub fn load_external_features(path: impl AsRef<Path>) -> Result<ExternalFeatures, FeatureError> {
    let (dim, rows) = read_fvec(path.as_ref())?;
    let mut map = BTreeMap::new();
    for (key, row) in rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::FormatError(format!("non-finite value in row {key:?}")));
        }
        if map.insert(key.clone(), FeatureVector::new(row)).is_some() {
            return Err(FeatureError::FormatError(format!("duplicate key {key:?}")));
        }
    }
    Ok(ExternalFeatures { dim, map })
}
