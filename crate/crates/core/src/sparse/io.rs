use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dictionary, SparseError, TrainingMeta};
use crate::scalar::Real;

pub const DICT_MAGIC: &[u8; 4] = b"SJDC";
pub const DICT_VERSION: u32 = 1;

/// Writes `SJDC`, version, `n`, `M`, the atoms as column-major `f64`, then `K` and
/// the iteration count. Integers and floats are little-endian.
pub fn save_dict<T: Real, W: Write>(dict: &Dictionary<T>, mut w: W) -> Result<(), SparseError> {
    let u32_of = |v: usize| {
        u32::try_from(v).map_err(|_| SparseError::DimensionMismatch(format!("{v} does not fit in u32")))
    };
    w.write_all(DICT_MAGIC)?;
    w.write_all(&DICT_VERSION.to_le_bytes())?;
    w.write_all(&u32_of(dict.n())?.to_le_bytes())?;
    w.write_all(&u32_of(dict.m())?.to_le_bytes())?;
    for v in dict.atoms() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    w.write_all(&dict.meta().sparsity.to_le_bytes())?;
    w.write_all(&dict.meta().iterations.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn load_dict<T: Real, R: Read>(mut r: R) -> Result<Dictionary<T>, SparseError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || &bytes[..4] != DICT_MAGIC {
        return Err(SparseError::BadMagic);
    }
    let mut cursor = Cursor { bytes: &bytes, pos: 4 };
    let version = cursor.u32()?;
    if version != DICT_VERSION {
        return Err(SparseError::VersionMismatch(version));
    }
    let n = cursor.u32()? as usize;
    let m = cursor.u32()? as usize;
    let count = n.checked_mul(m).filter(|&c| c > 0).ok_or_else(|| corrupt("empty or oversized dictionary"))?;
    if count.checked_mul(8).is_none_or(|b| b > bytes.len()) {
        return Err(corrupt("truncated atom data"));
    }
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let v = cursor.f64()?;
        atoms.push(T::from_f64(v).ok_or_else(|| corrupt("value out of range"))?);
    }
    let sparsity = cursor.u32()?;
    let iterations = cursor.u32()?;
    if cursor.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    let meta = TrainingMeta { sparsity, iterations, source: String::new() };
    Dictionary::new_undercomplete(n, atoms, meta).map_err(|e| corrupt(&e.to_string()))
}

pub fn save_dict_file<T: Real>(dict: &Dictionary<T>, path: impl AsRef<Path>) -> Result<(), SparseError> {
    save_dict(dict, BufWriter::new(File::create(path)?))
}

pub fn load_dict_file<T: Real>(path: impl AsRef<Path>) -> Result<Dictionary<T>, SparseError> {
    let path = path.as_ref();
    let mut dict = load_dict(BufReader::new(File::open(path)?))?;
    dict.set_source(path.display().to_string());
    Ok(dict)
}

fn corrupt(msg: &str) -> SparseError {
    SparseError::CorruptPayload(msg.to_string())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SparseError> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| corrupt("unexpected end of file"))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }

    fn u32(&mut self) -> Result<u32, SparseError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, SparseError> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}
