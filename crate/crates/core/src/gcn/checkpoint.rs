//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `GCNM`, version byte, `u32` length + JSON
//! model config, `u32` input width, `u32` conv layer count, `u32` dense layer
//! count, then per layer `u32` rows, `u32` cols, row-major `f64` weights and
//! `cols` `f64` biases.

use super::{DenseMatrix, GcnError, GcnModel, Layer, ModelConfig};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GCNM";
pub const CHECKPOINT_VERSION: u8 = 1;

pub fn write_checkpoint(model: &GcnModel) -> Vec<u8> {
    let config = serde_json::to_vec(&model.config).expect("config serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    put_u32(&mut out, config.len());
    out.extend_from_slice(&config);
    put_u32(&mut out, model.input_width);
    put_u32(&mut out, model.conv.len());
    put_u32(&mut out, model.dense.len());
    for layer in model.conv.iter().chain(&model.dense) {
        put_u32(&mut out, layer.weights.rows);
        put_u32(&mut out, layer.weights.cols);
        for v in layer.weights.data.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<GcnModel, GcnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(GcnError::Checkpoint("missing magic tag".into()));
    }
    let version = r.take(1)?[0];
    if version != CHECKPOINT_VERSION {
        return Err(GcnError::Checkpoint(format!("unsupported version {version}")));
    }
    let config_len = r.u32()?;
    let config: ModelConfig =
        serde_json::from_slice(r.take(config_len)?).map_err(|e| GcnError::Checkpoint(format!("config: {e}")))?;
    let input_width = r.u32()?;
    let n_conv = r.u32()?;
    let n_dense = r.u32()?;
    let mut layers = Vec::with_capacity(n_conv + n_dense);
    for _ in 0..n_conv + n_dense {
        let rows = r.u32()?;
        let cols = r.u32()?;
        let weights = r.f64s(rows.checked_mul(cols).ok_or_else(|| GcnError::Checkpoint("layer too large".into()))?)?;
        let bias = r.f64s(cols)?;
        layers.push(Layer {
            weights: DenseMatrix::from_vec(rows, cols, weights),
            bias,
        });
    }
    if r.pos != bytes.len() {
        return Err(GcnError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let dense = layers.split_off(n_conv);
    let model = GcnModel {
        config,
        input_width,
        conv: layers,
        dense,
    };
    model.validate_shapes()?;
    Ok(model)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("fits in u32").to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GcnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            GcnError::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, GcnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, GcnError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| GcnError::Checkpoint("length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}
