//! Binary weight files.
//!
//! Little-endian layout: magic `AFUW`, `u32` version, `u32` entry count,
//! then per entry a `u16` path length, the UTF-8 path, a `u8` rank,
//! `rank` `u64` dims and the raw `f64` values. Entries are written in
//! sorted path order, so equal stores give identical files.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use unet_af_core::model::{Param, WeightStore};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"AFUW";
pub const VERSION: u32 = 1;

/// Ranks above this are rejected as corrupt.
const MAX_RANK: u8 = 8;

pub fn encode_weights(store: &WeightStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * store.parameter_count());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (path, param) in store.iter() {
        out.extend_from_slice(&(path.len() as u16).to_le_bytes());
        out.extend_from_slice(path.as_bytes());
        out.push(param.dims.len() as u8);
        for &d in &param.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &param.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_weights(store: &WeightStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_weights(store)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!("truncated file while reading {what} at byte {}", self.pos)),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8, String> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses a weight file image. Errors are plain messages; callers attach
/// the file name.
pub fn decode_weights(bytes: &[u8]) -> Result<WeightStore, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err("bad magic (expected AFUW)".into());
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(format!("unsupported version {version} (expected {VERSION})"));
    }
    let count = c.u32("entry count")?;
    let mut store = WeightStore::new();
    let mut previous: Option<String> = None;
    for index in 0..count {
        let len = c.u16("path length")? as usize;
        let path = std::str::from_utf8(c.take(len, "path")?)
            .map_err(|_| format!("entry {index}: path is not UTF-8"))?
            .to_string();
        if previous.as_ref().is_some_and(|p| *p >= path) {
            return Err(format!("entry `{path}` is out of order or duplicated"));
        }
        let rank = c.u8("rank")?;
        if rank > MAX_RANK {
            return Err(format!("entry `{path}`: rank {rank} exceeds {MAX_RANK}"));
        }
        let dims = (0..rank)
            .map(|_| c.u64("dims").map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| format!("entry `{path}`: dims {dims:?} exceed the file size"))?;
        let raw = c.take(8 * count, "values")?;
        let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let param = Param::new(dims, data).map_err(|e| e.to_string())?;
        store.insert(path.clone(), param);
        previous = Some(path);
    }
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes after the last entry", bytes.len() - c.pos));
    }
    Ok(store)
}

pub fn read_weights(mut reader: impl Read, name: impl AsRef<Path>) -> Result<WeightStore> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(&name, e))?;
    decode_weights(&bytes).map_err(|m| Error::format(name, m))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights(io::BufReader::new(file), path)
}
