//! Trained model files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! b"RDM1" | p: u32 | d: u32 | mean: d f64 | components: p*d f64
//!         | M: p*p f64 | crc32 of all preceding bytes: u32
//! ```

use std::fs;
use std::path::Path;

use super::{MahalanobisModel, MetricError, PcaModel};

pub const MAGIC: &[u8; 4] = b"RDM1";
const HEADER_LEN: usize = 4 + 4 + 4;

/// Projection plus metric in the projected space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReidModel {
    pub pca: PcaModel,
    pub metric: MahalanobisModel,
}

impl ReidModel {
    pub fn new(pca: PcaModel, metric: MahalanobisModel) -> Result<Self, MetricError> {
        if metric.dim() != pca.output_dim() {
            return Err(MetricError::DimMismatch {
                expected: pca.output_dim(),
                actual: metric.dim(),
            });
        }
        Ok(Self { pca, metric })
    }
}

pub fn encode_model(model: &ReidModel) -> Vec<u8> {
    let p = model.pca.output_dim();
    let d = model.pca.input_dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (d + p * d + p * p) + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(p as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    let values = model
        .pca
        .mean()
        .iter()
        .chain(model.pca.components())
        .chain(model.metric.matrix());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<ReidModel, MetricError> {
    if bytes.len() < HEADER_LEN + 4 || &bytes[..4] != MAGIC {
        return Err(MetricError::FormatError("missing RDM1 magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(MetricError::ChecksumMismatch { stored, computed });
    }
    let p = u32::from_le_bytes(body[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let count = d + p * d + p * p;
    let payload = &body[HEADER_LEN..];
    if payload.len() != count * 8 {
        return Err(MetricError::FormatError(format!(
            "payload holds {} bytes, header declares {}",
            payload.len(),
            count * 8
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mean: Vec<f64> = values.by_ref().take(d).collect();
    let components: Vec<f64> = values.by_ref().take(p * d).collect();
    let m: Vec<f64> = values.collect();
    ReidModel::new(
        PcaModel::from_parts(mean, components, p)?,
        MahalanobisModel::from_row_major(p, m)?,
    )
}

pub fn write_model(path: impl AsRef<Path>, model: &ReidModel) -> Result<(), MetricError> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ReidModel, MetricError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))?;
    decode_model(&bytes)
}
