//! Binary graph cache.
//!
//! Layout (little-endian): magic `BGRC`, version byte, `u32` record count,
//! then per record: subject id (`u32` length + UTF-8), `u64` window index,
//! `u8` class index, `u32` node count `n`, `n` labels (length-prefixed),
//! `u32` feature width `f`, `n × n` connectivity and `n × f` features as
//! row-major `f64`.

use super::{BrainGraph, GraphError};
use crate::gcn::DenseMatrix;
use crate::{ClassLabel, SubjectId};

pub const GRAPH_CACHE_MAGIC: &[u8; 4] = b"BGRC";
pub const GRAPH_CACHE_VERSION: u8 = 1;

pub fn write_graph_cache(graphs: &[BrainGraph]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(GRAPH_CACHE_MAGIC);
    out.push(GRAPH_CACHE_VERSION);
    put_u32(&mut out, graphs.len());
    for g in graphs {
        put_str(&mut out, g.subject_id.as_str());
        out.extend_from_slice(&(g.window_index as u64).to_le_bytes());
        out.push(g.class_label.index() as u8);
        put_u32(&mut out, g.channel_labels.len());
        for l in &g.channel_labels {
            put_str(&mut out, l);
        }
        put_u32(&mut out, g.node_features.cols);
        for v in g.connectivity.data.iter().chain(&g.node_features.data) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_graph_cache(bytes: &[u8]) -> Result<Vec<BrainGraph>, GraphError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != GRAPH_CACHE_MAGIC {
        return Err(GraphError::Cache("missing magic tag".into()));
    }
    let version = r.take(1)?[0];
    if version != GRAPH_CACHE_VERSION {
        return Err(GraphError::Cache(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut graphs = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let subject_id = SubjectId::new(r.string()?);
        let window_index = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")) as usize;
        let class_index = r.take(1)?[0];
        let class_label = ClassLabel::from_index(class_index as usize)
            .ok_or_else(|| GraphError::Cache(format!("class index {class_index}")))?;
        let n = r.u32()?;
        let channel_labels = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
        let f = r.u32()?;
        let connectivity = DenseMatrix::from_vec(n, n, r.f64s(n * n)?);
        let node_features = DenseMatrix::from_vec(n, f, r.f64s(n * f)?);
        graphs.push(BrainGraph {
            subject_id,
            class_label,
            window_index,
            channel_labels,
            connectivity,
            node_features,
        });
    }
    if r.pos != bytes.len() {
        return Err(GraphError::Cache(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(graphs)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("fits in u32").to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GraphError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| GraphError::Cache(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn string(&mut self) -> Result<String, GraphError> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| GraphError::Cache(e.to_string()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, GraphError> {
        let bytes = n.checked_mul(8).ok_or_else(|| GraphError::Cache("length overflow".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}
