//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes  "MMCVAECK"
//! version   u32
//! meta_len  u64, followed by meta_len bytes of JSON (architecture + s′)
//! count     u32, number of parameters
//! repeated: name_len u32, name bytes, rows u64, cols u64, rows·cols f64
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a save/load round trip is exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, MmcVae};
use crate::tensor::{Matrix, ParamSet, Rng};

const MAGIC: &[u8; 8] = b"MMCVAECK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    architecture: Architecture,
    s_prime: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(model: &MmcVae, mut out: W) -> Result<()> {
    let meta = serde_json::to_vec(&Meta {
        architecture: model.arch.clone(),
        s_prime: model.s_prime.clone(),
    })
    .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    buf.extend_from_slice(&meta);
    let params = model.params();
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.extend_from_slice(&(p.value.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(p.value.cols() as u64).to_le_bytes());
        for v in p.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)
        .map_err(|e| Error::Checkpoint(format!("write failed: {e}")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<MmcVae> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(format!("read failed: {e}")))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not an mmcvae checkpoint".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let meta_len = cur.u64()? as usize;
    let meta: Meta = serde_json::from_slice(cur.take(meta_len)?)
        .map_err(|e| Error::Checkpoint(format!("bad metadata: {e}")))?;
    let mut model =
        MmcVae::new(meta.architecture, &mut Rng::seed_from_u64(0))?.with_s_prime(meta.s_prime)?;

    let count = cur.u32()? as usize;
    let expected = model.params().len();
    if count != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} parameters, found {count}"
        )));
    }
    for p in model.params_mut() {
        let name_len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
        if name != p.name {
            return Err(Error::Checkpoint(format!(
                "expected parameter {}, found {name}",
                p.name
            )));
        }
        let rows = cur.u64()? as usize;
        let cols = cur.u64()? as usize;
        if (rows, cols) != p.value.shape() {
            return Err(Error::Checkpoint(format!(
                "{name}: stored shape {rows}x{cols} does not match architecture {:?}",
                p.value.shape()
            )));
        }
        let raw = cur.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        p.value = Matrix::from_vec(rows, cols, data)?;
    }
    if cur.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &MmcVae, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(model, std::io::BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MmcVae> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}
