//! Binary snapshots of fields and measures.
//!
//! Layout (little-endian): magic `LQGF`, format version `u32`, kind byte
//! (1 field, 2 measure), geometry as length-prefixed JSON, cell count `u64`, a
//! kind-specific header, the cell values as raw `f64` bits, and a SHA-256 of
//! everything before it. Values are stored bit-for-bit, so a snapshot re-loads
//! to an identical object.

use sha2::{Digest, Sha256};
use std::path::Path;

use crate::chaos::Measure;
use crate::error::{Error, Result};
use crate::field_core::{Field, Geometry, Pinning};

const MAGIC: &[u8; 4] = b"LQGF";
const VERSION: u32 = 1;
const KIND_FIELD: u8 = 1;
const KIND_MEASURE: u8 = 2;

fn header(kind: u8, geometry: &Geometry) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    let g = serde_json::to_vec(geometry)?;
    out.extend_from_slice(&(g.len() as u32).to_le_bytes());
    out.extend_from_slice(&g);
    out.extend_from_slice(&(geometry.len() as u64).to_le_bytes());
    Ok(out)
}

fn finish(mut out: Vec<u8>, values: &[f64]) -> Vec<u8> {
    out.reserve(values.len() * 8 + 32);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn encode_field(field: &Field) -> Result<Vec<u8>> {
    let mut out = header(KIND_FIELD, field.geometry())?;
    out.extend_from_slice(&field.constant().to_le_bytes());
    out.extend_from_slice(&field.pinning().code().to_le_bytes());
    Ok(finish(out, field.values()))
}

pub fn encode_measure(measure: &Measure) -> Result<Vec<u8>> {
    let mut out = header(KIND_MEASURE, measure.geometry())?;
    out.extend_from_slice(&measure.log_scale().to_le_bytes());
    out.push(u8::from(measure.is_normalized()));
    Ok(finish(out, measure.relative_masses()))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("snapshot truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Checks magic, version, checksum and kind; returns the reader past the header.
fn open(buf: &[u8], kind: u8) -> Result<(Reader<'_>, Geometry, usize)> {
    if buf.len() < 4 + 4 + 1 + 32 || &buf[..4] != MAGIC {
        return Err(Error::Format("not an LQGF snapshot".into()));
    }
    let (body, digest) = buf.split_at(buf.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Format("snapshot checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let k = r.u8()?;
    if k != kind {
        return Err(Error::Format(format!("snapshot holds kind {k}, expected {kind}")));
    }
    let glen = r.u32()? as usize;
    let mut geometry: Geometry = serde_json::from_slice(r.take(glen)?)?;
    geometry.restore();
    let n = r.u64()? as usize;
    if n != geometry.len() {
        return Err(Error::Format(format!("{n} cells for a grid of {}", geometry.len())));
    }
    Ok((r, geometry, n))
}

fn values(r: &mut Reader<'_>, n: usize) -> Result<Vec<f64>> {
    let v = (0..n).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
    if r.pos != r.buf.len() {
        return Err(Error::Format("trailing bytes in snapshot".into()));
    }
    Ok(v)
}

pub fn decode_field(buf: &[u8]) -> Result<Field> {
    let (mut r, geometry, n) = open(buf, KIND_FIELD)?;
    let constant = r.f64()?;
    let pinning = Pinning::from_code(r.u32()?)?;
    let v = values(&mut r, n)?;
    Ok(Field::from_parts(geometry, v, constant, pinning))
}

pub fn decode_measure(buf: &[u8]) -> Result<Measure> {
    let (mut r, geometry, n) = open(buf, KIND_MEASURE)?;
    let log_scale = r.f64()?;
    let normalized = r.u8()? != 0;
    let v = values(&mut r, n)?;
    Measure::from_parts(geometry, v, log_scale, normalized)
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    Ok(std::fs::write(path, encode_field(field)?)?)
}

pub fn read_field(path: &Path) -> Result<Field> {
    decode_field(&std::fs::read(path)?)
}

pub fn write_measure(path: &Path, measure: &Measure) -> Result<()> {
    Ok(std::fs::write(path, encode_measure(measure)?)?)
}

pub fn read_measure(path: &Path) -> Result<Measure> {
    decode_measure(&std::fs::read(path)?)
}
