//! Binary checkpoint container.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u32` header count
//! then `key=value` strings, `u32` layer count then spec strings, `u32`
//! tensor count then for each tensor its name, `u32` rank, `u64` dims and
//! raw `f32` values. Strings are `u32`-length-prefixed UTF-8.

use std::fs;
use std::path::Path;

use crate::error::{NnError, Result};
use crate::layers::{Layer, LayerSpec};

pub const MAGIC: &[u8; 8] = b"GSTGCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub header: Vec<(String, String)>,
    pub specs: Vec<LayerSpec>,
    pub tensors: Vec<StoredTensor>,
}

impl Checkpoint {
    /// Snapshot of `layers`; tensors are named `<layer>.<slot>`.
    pub fn capture(header: Vec<(String, String)>, layers: &[&Layer<f32>]) -> Self {
        let mut tensors = Vec::new();
        for (li, layer) in layers.iter().enumerate() {
            for (si, t) in layer.state().enumerate() {
                tensors.push(StoredTensor {
                    name: format!("{li}.{si}"),
                    shape: t.shape().to_vec(),
                    data: t.to_vec(),
                });
            }
        }
        Checkpoint {
            header,
            specs: layers.iter().map(|l| l.spec().clone()).collect(),
            tensors,
        }
    }

    /// Copies stored values into `layers`, which must have the same specs.
    /// Returns the tensors stored after the layer state, for callers that
    /// append their own.
    pub fn restore(&self, layers: &[&Layer<f32>]) -> Result<&[StoredTensor]> {
        if layers.len() != self.specs.len() {
            return Err(NnError::Checkpoint(format!(
                "checkpoint has {} layers, model has {}",
                self.specs.len(),
                layers.len()
            )));
        }
        let mut used = 0;
        for (li, (layer, spec)) in layers.iter().zip(&self.specs).enumerate() {
            if layer.spec() != spec {
                return Err(NnError::Checkpoint(format!(
                    "layer {li}: checkpoint `{spec}` vs model `{}`",
                    layer.spec()
                )));
            }
            for t in layer.state() {
                let s = self
                    .tensors
                    .get(used)
                    .ok_or_else(|| NnError::Checkpoint("checkpoint is missing tensors".into()))?;
                used += 1;
                if s.shape != t.shape() {
                    return Err(NnError::Checkpoint(format!(
                        "tensor {}: stored shape {:?}, model {:?}",
                        s.name,
                        s.shape,
                        t.shape()
                    )));
                }
                t.set_data(s.data.clone())?;
            }
        }
        Ok(&self.tensors[used..])
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, self.header.len() as u32);
        for (k, v) in &self.header {
            put_str(&mut out, &format!("{k}={v}"));
        }
        put_u32(&mut out, self.specs.len() as u32);
        for s in &self.specs {
            put_str(&mut out, &s.to_string());
        }
        put_u32(&mut out, self.tensors.len() as u32);
        for t in &self.tensors {
            put_str(&mut out, &t.name);
            put_u32(&mut out, t.shape.len() as u32);
            for d in &t.shape {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(NnError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let mut ck = Checkpoint::default();
        for _ in 0..r.u32()? {
            let kv = r.string()?;
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| NnError::Checkpoint(format!("header entry {kv:?} lacks '='")))?;
            ck.header.push((k.to_string(), v.to_string()));
        }
        for _ in 0..r.u32()? {
            ck.specs.push(r.string()?.parse()?);
        }
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                let d = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                shape.push(usize::try_from(d).map_err(|_| NnError::Checkpoint("dimension overflow".into()))?);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |a, d| a.checked_mul(*d))
                .filter(|n| n.checked_mul(4).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| NnError::Checkpoint(format!("tensor {name}: shape {shape:?} exceeds file")))?;
            let data = r
                .take(n * 4)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            ck.tensors.push(StoredTensor { name, shape, data });
        }
        if r.remaining() != 0 {
            return Err(NnError::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| NnError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        // Write-then-rename so a crash never leaves a torn checkpoint.
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| NnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(NnError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| NnError::Checkpoint("non-UTF-8 string".into()))
    }
}
