//! Binary checkpoint format for exchanged model parameters.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FPCP"
//! 4       4     format version (u32, currently 1)
//! 8       4     layer count (u32)
//! ```
//!
//! then per layer:
//!
//! ```text
//! 4             name length n (u32)
//! n             layer name, UTF-8
//! 4             rows (u32)
//! 4             cols (u32)
//! rows·cols·8   weight matrix, row-major f64 LE
//! 4             bias length (u32, equals rows)
//! rows·8        bias vector, f64 LE
//! ```
//!
//! Round trips are bit-exact; trailing bytes and truncation are rejected.

use thiserror::Error;

use crate::model::{LayerParams, ModelParams};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FPCP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Errors from checkpoint decoding.
#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("bad magic: expected \"FPCP\", got {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint: needed {needed} more bytes for {context}")]
    Truncated { context: &'static str, needed: usize },
    #[error("layer name is not valid UTF-8")]
    BadLayerName,
    #[error("bias length {got} does not match rows {rows}")]
    BiasLengthMismatch { got: usize, rows: usize },
    #[error("{0} trailing bytes after the last layer")]
    TrailingBytes(usize),
}

/// Encode parameters into the checkpoint byte format.
pub fn serialize_checkpoint(params: &ModelParams<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for layer in &params.layers {
        out.extend_from_slice(&(layer.name.len() as u32).to_le_bytes());
        out.extend_from_slice(layer.name.as_bytes());
        out.extend_from_slice(&(layer.rows as u32).to_le_bytes());
        out.extend_from_slice(&(layer.cols as u32).to_le_bytes());
        for w in &layer.weight {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&(layer.bias.len() as u32).to_le_bytes());
        for b in &layer.bias {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                context,
                needed: self.pos + n - self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, context: &'static str) -> Result<u32, CheckpointError> {
        let b = self.take(4, context)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64_vec(&mut self, count: usize, context: &'static str) -> Result<Vec<f64>, CheckpointError> {
        let b = self.take(count * 8, context)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect())
    }
}

/// Decode a checkpoint produced by [`serialize_checkpoint`]; no partial
/// parameters are ever returned.
pub fn deserialize_checkpoint(bytes: &[u8]) -> Result<ModelParams<f64>, CheckpointError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic([
            magic[0], magic[1], magic[2], magic[3],
        ]));
    }
    let version = cur.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let layer_count = cur.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "layer name")?)
            .map_err(|_| CheckpointError::BadLayerName)?
            .to_string();
        let rows = cur.u32("rows")? as usize;
        let cols = cur.u32("cols")? as usize;
        let weight = cur.f64_vec(rows * cols, "weight payload")?;
        let bias_len = cur.u32("bias length")? as usize;
        if bias_len != rows {
            return Err(CheckpointError::BiasLengthMismatch { got: bias_len, rows });
        }
        let bias = cur.f64_vec(bias_len, "bias payload")?;
        layers.push(LayerParams {
            name,
            rows,
            cols,
            weight,
            bias,
        });
    }
    if cur.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - cur.pos));
    }
    Ok(ModelParams { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn random_params(seed: u64) -> ModelParams<f64> {
        let mut p = ModelParams::<f64>::init_two_layer(9, 5, seed);
        let mut rng = DetRng::new(seed);
        for l in &mut p.layers {
            for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *v = rng.normal() * 3.0;
            }
        }
        p
    }

    #[test]
    fn round_trip_bit_exact() {
        let p = random_params(71);
        let bytes = serialize_checkpoint(&p);
        let back = deserialize_checkpoint(&bytes).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn empty_layer_list_is_valid() {
        let p = ModelParams::<f64> { layers: vec![] };
        let bytes = serialize_checkpoint(&p);
        assert_eq!(deserialize_checkpoint(&bytes).unwrap(), p);
    }

    #[test]
    fn truncation_detected_without_partial_result() {
        let p = random_params(5);
        let bytes = serialize_checkpoint(&p);
        for cut in [bytes.len() - 1, bytes.len() / 2, 9, 3] {
            let err = deserialize_checkpoint(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, CheckpointError::Truncated { .. }),
                "cut {cut}: {err:?}"
            );
        }
    }

    #[test]
    fn bad_magic_detected() {
        let p = random_params(5);
        let mut bytes = serialize_checkpoint(&p);
        bytes[0] = b'X';
        assert!(matches!(
            deserialize_checkpoint(&bytes).unwrap_err(),
            CheckpointError::BadMagic(_)
        ));
    }

    #[test]
    fn version_mismatch_detected() {
        let p = random_params(5);
        let mut bytes = serialize_checkpoint(&p);
        bytes[4] = 9;
        assert_eq!(
            deserialize_checkpoint(&bytes).unwrap_err(),
            CheckpointError::UnsupportedVersion(9)
        );
    }

    #[test]
    fn trailing_bytes_detected() {
        let p = random_params(5);
        let mut bytes = serialize_checkpoint(&p);
        bytes.push(0);
        assert_eq!(
            deserialize_checkpoint(&bytes).unwrap_err(),
            CheckpointError::TrailingBytes(1)
        );
    }
}
