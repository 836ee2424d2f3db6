//! QUSD sample container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "QUSD"                     4 ASCII bytes
//! version                    u32 (= 1)
//! metadata length            u32
//! metadata                   UTF-8 JSON object
//! tensor count               u32
//! per tensor:
//!   name length              u16
//!   name                     UTF-8
//!   dtype                    u8 (0 = f32 LE, 1 = u8)
//!   ndim                     u8
//!   dims                     ndim x u32
//!   payload                  row-major elements
//! ```
//!
//! Writers add a `content_sha256` key to the metadata: the SHA-256 of the
//! whole file computed with that value set to 64 ASCII zeros. Readers
//! require and verify it, then strip it from the returned metadata, so a
//! flipped byte anywhere in the file is caught.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: [u8; 4] = *b"QUSD";
pub const FORMAT_VERSION: u32 = 1;
pub const DIGEST_KEY: &str = "content_sha256";
const DIGEST_HEX_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 0,
    U8 = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::U8(_) => DType::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn f32_from<T: Real>(name: &str, array: ArrayView2<T>) -> Self {
        Tensor {
            name: name.to_owned(),
            dims: vec![array.nrows(), array.ncols()],
            data: TensorData::F32(array.iter().map(|v| v.as_f64() as f32).collect()),
        }
    }

    pub fn u8_from(name: &str, array: ArrayView2<u8>) -> Self {
        Tensor {
            name: name.to_owned(),
            dims: vec![array.nrows(), array.ncols()],
            data: TensorData::U8(array.iter().copied().collect()),
        }
    }

    fn dim2(&self) -> Result<(usize, usize)> {
        match self.dims[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Format(format!("tensor {} has {} dims, expected 2", self.name, self.dims.len()))),
        }
    }

    /// 2-D view of an f32 tensor, converted to `T`.
    pub fn to_array<T: Real>(&self) -> Result<Array2<T>> {
        let dim = self.dim2()?;
        match &self.data {
            TensorData::F32(v) => Ok(Array2::from_shape_vec(dim, v.iter().map(|&x| T::lit(x as f64)).collect())
                .expect("payload length checked on decode")),
            TensorData::U8(_) => Err(Error::Format(format!("tensor {} is u8, expected f32", self.name))),
        }
    }

    pub fn to_u8_array(&self) -> Result<Array2<u8>> {
        let dim = self.dim2()?;
        match &self.data {
            TensorData::U8(v) => Ok(Array2::from_shape_vec(dim, v.clone()).expect("payload length checked on decode")),
            TensorData::F32(_) => Err(Error::Format(format!("tensor {} is f32, expected u8", self.name))),
        }
    }
}

/// Metadata document plus named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub meta: Map<String, Value>,
    pub tensors: Vec<Tensor>,
}

impl SampleRecord {
    pub fn new(meta: Map<String, Value>) -> Self {
        SampleRecord { meta, tensors: Vec::new() }
    }

    pub fn push(&mut self, tensor: Tensor) {
        self.tensors.push(tensor);
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.tensor(name).ok_or_else(|| Error::Format(format!("missing tensor {name:?}")))
    }
}

fn encode_tensors(tensors: &[Tensor]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(
        &u32::try_from(tensors.len()).map_err(|_| Error::Format("too many tensors".into()))?.to_le_bytes(),
    );
    for t in tensors {
        let expected: usize = t.dims.iter().product();
        if expected != t.data.len() {
            return Err(Error::Format(format!(
                "tensor {} has {} elements but dims {:?}",
                t.name,
                t.data.len(),
                t.dims
            )));
        }
        let name = t.name.as_bytes();
        let name_len = u16::try_from(name.len()).map_err(|_| Error::Format("tensor name too long".into()))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name);
        out.push(t.data.dtype() as u8);
        out.push(u8::try_from(t.dims.len()).map_err(|_| Error::Format("too many dims".into()))?);
        for &d in &t.dims {
            out.extend_from_slice(
                &u32::try_from(d).map_err(|_| Error::Format("dimension too large".into()))?.to_le_bytes(),
            );
        }
        match &t.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
        }
    }
    Ok(out)
}

fn digest_field(value: &str) -> Vec<u8> {
    format!("\"{DIGEST_KEY}\":\"{value}\"").into_bytes()
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

pub fn encode(record: &SampleRecord) -> Result<Vec<u8>> {
    let payload = encode_tensors(&record.tensors)?;
    let zeros = "0".repeat(DIGEST_HEX_LEN);
    let mut meta = record.meta.clone();
    meta.insert(DIGEST_KEY.into(), Value::String(zeros.clone()));
    let meta_bytes = serde_json::to_vec(&Value::Object(meta))?;
    let mut out = Vec::with_capacity(12 + meta_bytes.len() + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(
        &u32::try_from(meta_bytes.len()).map_err(|_| Error::Format("metadata too large".into()))?.to_le_bytes(),
    );
    out.extend_from_slice(&meta_bytes);
    out.extend_from_slice(&payload);

    // quotes inside JSON strings are escaped, so an unescaped key can only come from a nested object
    let key = format!("\"{DIGEST_KEY}\":");
    if meta_bytes.windows(key.len()).filter(|w| *w == key.as_bytes()).count() > 1 {
        return Err(Error::Format(format!("nested metadata may not use the reserved key {DIGEST_KEY}")));
    }
    let field = digest_field(&zeros);
    let at = 12 + find(&meta_bytes, &field).expect("digest field was just serialized");
    let value_at = at + field.len() - 1 - DIGEST_HEX_LEN;
    let digest = sha256_hex(&out);
    out[value_at..value_at + DIGEST_HEX_LEN].copy_from_slice(digest.as_bytes());
    Ok(out)
}

fn verify_digest(bytes: &[u8], meta_start: usize, meta_len: usize, stored: &str) -> Result<()> {
    let mismatch = || Error::DigestMismatch { what: "file content".into() };
    if stored.len() != DIGEST_HEX_LEN || !stored.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(mismatch());
    }
    let field = digest_field(stored);
    let at = meta_start
        + find(&bytes[meta_start..meta_start + meta_len], &field)
            .ok_or_else(|| Error::Format(format!("{DIGEST_KEY} is not in canonical form")))?;
    let value_at = at + field.len() - 1 - DIGEST_HEX_LEN;
    let mut copy = bytes.to_vec();
    copy[value_at..value_at + DIGEST_HEX_LEN].fill(b'0');
    if sha256_hex(&copy) != stored {
        return Err(mismatch());
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Truncated(format!("{what}: need {n} bytes at offset {}, file has {}", self.pos, self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<SampleRecord> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let meta_len = r.u32("metadata length")? as usize;
    let meta_bytes = r.take(meta_len, "metadata")?;
    let meta_text =
        std::str::from_utf8(meta_bytes).map_err(|e| Error::Format(format!("metadata is not UTF-8: {e}")))?;
    let mut meta =
        match serde_json::from_str::<Value>(meta_text).map_err(|e| Error::Format(format!("metadata: {e}")))? {
            Value::Object(m) => m,
            _ => return Err(Error::Format("metadata is not a JSON object".into())),
        };

    let stored = match meta.remove(DIGEST_KEY) {
        Some(Value::String(s)) => s,
        Some(_) => return Err(Error::Format(format!("{DIGEST_KEY} is not a string"))),
        None => return Err(Error::Format(format!("metadata lacks {DIGEST_KEY}"))),
    };
    if let Err(e) = verify_digest(bytes, 12, meta_len, &stored) {
        // a short file is reported as truncation rather than as a digest error
        if let Err(t @ Error::Truncated(_)) = decode_tensors(&mut Reader { buf: bytes, pos: r.pos }) {
            return Err(t);
        }
        return Err(e);
    }
    let tensors = decode_tensors(&mut r)?;
    Ok(SampleRecord { meta, tensors })
}

fn decode_tensors(r: &mut Reader<'_>) -> Result<Vec<Tensor>> {
    let count = r.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count.min(64));
    for i in 0..count {
        let name_len = r.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|e| Error::Format(format!("tensor {i} name: {e}")))?
            .to_owned();
        let dtype = r.u8("dtype")?;
        let ndim = r.u8("ndim")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32("dims")? as usize);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("tensor {name} dims {dims:?} overflow")))?;
        let data = match dtype {
            0 => {
                let raw =
                    r.take(count.checked_mul(4).ok_or_else(|| Error::Format("payload overflow".into()))?, &name)?;
                TensorData::F32(
                    raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect(),
                )
            }
            1 => TensorData::U8(r.take(count, &name)?.to_vec()),
            other => return Err(Error::Format(format!("tensor {name} has unknown dtype code {other}"))),
        };
        tensors.push(Tensor { name, dims, data });
    }
    if r.pos != r.buf.len() {
        return Err(Error::Format(format!("{} trailing bytes after last tensor", r.buf.len() - r.pos)));
    }
    Ok(tensors)
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_sample(record: &SampleRecord, path: &Path) -> Result<()> {
    write_atomic(path, &encode(record)?)
}

pub fn read_sample(path: &Path) -> Result<SampleRecord> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Hex SHA-256 of a whole file's bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
