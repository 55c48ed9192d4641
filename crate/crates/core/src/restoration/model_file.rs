//! `VQPM` predictor files. The layout is versioned but not promised stable
//! across versions.
//!
//! ```text
//! "VQPM" | version u8 | K u32 | C u32 | level count u8 | levels u8...
//! | trained tokens u64 | training NLL f64 | context count u32
//! | per context, ascending key: key u64 | entries u32 | (symbol u32, count u32)...
//! | CRC32 of everything before it
//! ```
//!
//! All integers and floats are little-endian.

use thiserror::Error;

use super::{causal_offsets, ContextCounts, ContextModel, PredictorParams, RestorationError};

pub const MAGIC: &[u8; 4] = b"VQPM";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelFileError {
    #[error("not a predictor file (bad magic)")]
    BadMagic,
    #[error("unsupported predictor file version {0}")]
    UnsupportedVersion(u8),
    #[error("predictor file truncated or has trailing data")]
    BadLength,
    #[error("predictor file CRC mismatch")]
    CrcMismatch,
    #[error("predictor file content is inconsistent: {0}")]
    Inconsistent(&'static str),
    #[error(transparent)]
    Config(#[from] RestorationError),
}

pub fn write_model(model: &ContextModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(model.k as u32).to_le_bytes());
    out.extend_from_slice(&(model.params.context_size as u32).to_le_bytes());
    out.push(model.params.levels.len() as u8);
    out.extend(model.params.levels.iter().map(|&l| l as u8));
    out.extend_from_slice(&model.trained_tokens.to_le_bytes());
    out.extend_from_slice(&model.training_nll.to_le_bytes());
    let mut keys: Vec<&u64> = model.table.keys().collect();
    keys.sort_unstable();
    out.extend_from_slice(&(keys.len() as u32).to_le_bytes());
    for key in keys {
        let cc = &model.table[key];
        out.extend_from_slice(&key.to_le_bytes());
        out.extend_from_slice(&(cc.symbols.len() as u32).to_le_bytes());
        for &(s, c) in &cc.symbols {
            out.extend_from_slice(&s.to_le_bytes());
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ModelFileError> {
        let slice = self.bytes.get(self.pos..self.pos + N).ok_or(ModelFileError::BadLength)?;
        self.pos += N;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, ModelFileError> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64, ModelFileError> {
        Ok(u64::from_le_bytes(self.take()?))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<ContextModel, ModelFileError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    if bytes.len() < 9 {
        return Err(ModelFileError::BadLength);
    }
    if bytes[4] != VERSION {
        return Err(ModelFileError::UnsupportedVersion(bytes[4]));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(ModelFileError::CrcMismatch);
    }
    let mut r = Reader { bytes: body, pos: 5 };
    let k = r.u32()? as usize;
    let context_size = r.u32()? as usize;
    let n_levels = r.u8()?;
    let levels = (0..n_levels).map(|_| r.u8().map(usize::from)).collect::<Result<Vec<_>, _>>()?;
    let params = PredictorParams { context_size, levels };
    let mut model = ContextModel::empty(k, params)?;
    model.trained_tokens = r.u64()?;
    model.training_nll = f64::from_le_bytes(r.take()?);
    let n_contexts = r.u32()?;
    for _ in 0..n_contexts {
        let key = r.u64()?;
        let n = r.u32()?;
        let mut cc = ContextCounts::default();
        for _ in 0..n {
            let s = r.u32()?;
            let c = r.u32()?;
            if s as usize >= k || c == 0 || cc.symbols.last().is_some_and(|&(prev, _)| prev >= s) {
                return Err(ModelFileError::Inconsistent("context entries"));
            }
            cc.total += c;
            cc.symbols.push((s, c));
        }
        if model.table.insert(key, cc).is_some() {
            return Err(ModelFileError::Inconsistent("duplicate context"));
        }
    }
    if r.pos != body.len() {
        return Err(ModelFileError::BadLength);
    }
    debug_assert_eq!(model.offsets, causal_offsets(context_size));
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::IndexMap;
    use crate::restoration::train_predictor;

    fn model() -> ContextModel {
        let cells: Vec<u32> = (0..100).map(|i| ((i / 10 + i % 10 / 3) % 8) as u32).collect();
        train_predictor(&[IndexMap::new(10, 10, 8, 1, cells).unwrap()], 8).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = write_model(&m);
        let back = read_model(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_model(&back), bytes);
    }

    #[test]
    fn errors() {
        let bytes = write_model(&model());
        assert_eq!(read_model(b"VQCB\x01").unwrap_err(), ModelFileError::BadMagic);
        let mut v = bytes.clone();
        v[4] = 2;
        assert_eq!(read_model(&v).unwrap_err(), ModelFileError::UnsupportedVersion(2));
        let mut v = bytes.clone();
        v[20] ^= 4;
        assert_eq!(read_model(&v).unwrap_err(), ModelFileError::CrcMismatch);
        assert!(read_model(&bytes[..bytes.len() - 3]).is_err());
    }
}
