//! Binary parameter snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     4 bytes  "DNET"
//! version   u32      1
//! output    u8       0 = logistic, 1 = linear, 2 = softplus
//! n_dims    u32      number of layer widths (>= 2)
//! dims      n_dims x u64
//! params    f64 x param_count(dims)
//! ```

use super::{param_count_for, DenseNet, OutputActivation};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DNET";
const VERSION: u32 = 1;
/// Upper bound on any single layer width accepted from a file.
const MAX_WIDTH: u64 = 1 << 16;
const MAX_LAYERS: u32 = 64;

pub fn write_snapshot(net: &DenseNet) -> Vec<u8> {
    let dims = net.layer_dims();
    let mut out = Vec::with_capacity(13 + 8 * dims.len() + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(net.output_activation().code());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Snapshot("truncated".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_snapshot(bytes: &[u8]) -> Result<DenseNet> {
    let mut r = Reader { bytes };
    if r.take(4)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let code = r.take(1)?[0];
    let output = OutputActivation::from_code(code)
        .ok_or_else(|| Error::Snapshot(format!("unknown output activation {code}")))?;
    let n_dims = r.u32()?;
    if !(2..=MAX_LAYERS).contains(&n_dims) {
        return Err(Error::Snapshot(format!("layer count {n_dims} out of range")));
    }
    let mut dims = Vec::with_capacity(n_dims as usize);
    for _ in 0..n_dims {
        let d = r.u64()?;
        if d == 0 || d > MAX_WIDTH {
            return Err(Error::Snapshot(format!("layer width {d} out of range")));
        }
        dims.push(d as usize);
    }
    let count = param_count_for(&dims);
    if r.bytes.len() != count * 8 {
        return Err(Error::Snapshot(format!(
            "expected {} parameter bytes, found {}",
            count * 8,
            r.bytes.len()
        )));
    }
    let params = r
        .bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseNet::from_parts(dims, output, params)
}
