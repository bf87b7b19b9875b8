//! Little-endian binary files for codebooks and cost tables.
//!
//! Every file starts with a 4-byte magic (`BVWC`, `BVWA`, `BVWP`) and a
//! `u32` format version, followed by `u32` dimensions and the payload.
//!
//! | file      | dimensions               | payload                                                  |
//! |-----------|--------------------------|----------------------------------------------------------|
//! | codebook  | k, dim, patch_size       | centroids `f32[k*dim]`, patches `f32[k*p*p]`, counts `u32[k]` |
//! | adjacency | k, m                     | offsets `(i32 dx, i32 dy)[m]`, costs `f32[k*k*m]`         |
//! | position  | k, places                | costs `f32[k*places]`                                    |

use std::path::Path;

use crate::costs::{AdjacencyCost, OffsetSet, PositionCost};
use crate::pipeline::Codebook;
use crate::{Error, Result};

const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut w = Writer(magic.to_vec());
        w.u32(VERSION);
        w
    }

    fn u32(&mut self, v: u32) {
        self.0.extend(v.to_le_bytes());
    }

    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("table dimensions fit in u32"));
    }

    fn f32s(&mut self, v: &[f32]) {
        v.iter().for_each(|x| self.0.extend(x.to_le_bytes()));
    }
}

struct Reader<'a> {
    kind: &'static str,
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(kind: &'static str, magic: &[u8; 4], bytes: &'a [u8]) -> Result<Self> {
        let mut r = Reader { kind, bytes };
        if r.take(4)? != magic {
            return Err(Error::format(
                kind,
                format!("missing {} magic", String::from_utf8_lossy(magic)),
            ));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(
                kind,
                format!("unsupported version {}", version),
            ));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::format(self.kind, "truncated file"));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn words(&mut self, n: usize) -> Result<impl Iterator<Item = [u8; 4]> + 'a> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.kind, "dimensions overflow"))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(4)
            .map(|c| c.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self.words(n)?.map(f32::from_le_bytes).collect())
    }

    fn finish(self) -> Result<()> {
        if !self.bytes.is_empty() {
            return Err(Error::format(self.kind, "trailing bytes"));
        }
        Ok(())
    }
}

fn product(kind: &'static str, dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format(kind, "dimensions overflow"))
}

/// Maps validation failures of decoded content to format errors.
fn as_format<T>(kind: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(reason) => Error::format(kind, reason),
        other => other,
    })
}

pub fn encode_codebook(cb: &Codebook) -> Vec<u8> {
    let mut w = Writer::new(b"BVWC");
    w.len(cb.k());
    w.len(cb.dim());
    w.len(cb.patch_size());
    w.f32s(cb.centroids());
    w.f32s(cb.mean_patches());
    cb.train_counts().iter().for_each(|&c| w.u32(c));
    w.0
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    const KIND: &str = "codebook";
    let mut r = Reader::new(KIND, b"BVWC", bytes)?;
    let (k, dim, p) = (r.len()?, r.len()?, r.len()?);
    let centroids = r.f32s(product(KIND, &[k, dim])?)?;
    let patches = r.f32s(product(KIND, &[k, p, p])?)?;
    let counts = r.words(k)?.map(u32::from_le_bytes).collect();
    r.finish()?;
    as_format(KIND, Codebook::new(dim, p, centroids, patches, counts))
}

pub fn encode_adjacency(ca: &AdjacencyCost) -> Vec<u8> {
    let mut w = Writer::new(b"BVWA");
    w.len(ca.k());
    w.len(ca.offsets().m());
    for &(dx, dy) in ca.offsets().offsets() {
        w.0.extend(dx.to_le_bytes());
        w.0.extend(dy.to_le_bytes());
    }
    w.f32s(ca.table());
    w.0
}

pub fn decode_adjacency(bytes: &[u8]) -> Result<AdjacencyCost> {
    const KIND: &str = "adjacency cost";
    let mut r = Reader::new(KIND, b"BVWA", bytes)?;
    let (k, m) = (r.len()?, r.len()?);
    let raw: Vec<i32> = r
        .words(product(KIND, &[m, 2])?)?
        .map(i32::from_le_bytes)
        .collect();
    let offsets = as_format(
        KIND,
        OffsetSet::from_offsets(raw.chunks_exact(2).map(|c| (c[0], c[1])).collect()),
    )?;
    let table = r.f32s(product(KIND, &[k, k, m])?)?;
    r.finish()?;
    as_format(KIND, AdjacencyCost::from_table(k, offsets, table))
}

pub fn encode_position(cp: &PositionCost) -> Vec<u8> {
    let mut w = Writer::new(b"BVWP");
    w.len(cp.k());
    w.len(cp.places());
    w.f32s(cp.table());
    w.0
}

pub fn decode_position(bytes: &[u8]) -> Result<PositionCost> {
    const KIND: &str = "position cost";
    let mut r = Reader::new(KIND, b"BVWP", bytes)?;
    let (k, places) = (r.len()?, r.len()?);
    let table = r.f32s(product(KIND, &[k, places])?)?;
    r.finish()?;
    as_format(KIND, PositionCost::from_table(k, places, table))
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&std::fs::read(path)?)
}

pub fn write_codebook(cb: &Codebook, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, encode_codebook(cb))?)
}

pub fn read_adjacency(path: &Path) -> Result<AdjacencyCost> {
    decode_adjacency(&std::fs::read(path)?)
}

pub fn write_adjacency(ca: &AdjacencyCost, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, encode_adjacency(ca))?)
}

pub fn read_position(path: &Path) -> Result<PositionCost> {
    decode_position(&std::fs::read(path)?)
}

pub fn write_position(cp: &PositionCost, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, encode_position(cp))?)
}
