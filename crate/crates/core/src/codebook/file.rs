//! `VQCB` codebook files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VQCB"
//! 4       1     version (0x01)
//! 5       4     K, u32 LE
//! 9       4     n_z, u32 LE
//! 13      8     parent id, u64 LE (0 = none)
//! 21      4     refine iterations, u32 LE
//! 25      4·K·n_z  codewords, f32 LE, row-major
//! end-4   4     CRC32 (IEEE) of all preceding bytes, LE
//! ```

use thiserror::Error;

use super::{Codebook, CodebookError};

pub const MAGIC: &[u8; 4] = b"VQCB";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodebookFileError {
    #[error("not a codebook file (bad magic)")]
    BadMagic,
    #[error("unsupported codebook file version {0}")]
    UnsupportedVersion(u8),
    #[error("codebook file length {found} does not match the {expected} bytes its header implies")]
    LengthMismatch { expected: usize, found: usize },
    #[error("codebook file CRC mismatch")]
    CrcMismatch,
    #[error(transparent)]
    Invalid(#[from] CodebookError),
}

pub fn write_codebook(cb: &Codebook) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cb.codewords().len() * 4 + 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(cb.size() as u32).to_le_bytes());
    out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
    out.extend_from_slice(&cb.parent_id().unwrap_or(0).to_le_bytes());
    out.extend_from_slice(&cb.refine_iters().to_le_bytes());
    for c in cb.codewords() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_codebook(bytes: &[u8]) -> Result<Codebook, CodebookFileError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CodebookFileError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(CodebookFileError::LengthMismatch {
            expected: HEADER_LEN + 4,
            found: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(CodebookFileError::UnsupportedVersion(bytes[4]));
    }
    let k = u32_at(bytes, 5) as usize;
    let dim = u32_at(bytes, 9) as usize;
    let parent = u64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
    let refine_iters = u32_at(bytes, 21);
    let expected = k
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN + 4))
        .unwrap_or(usize::MAX);
    if bytes.len() != expected {
        return Err(CodebookFileError::LengthMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let body = &bytes[..bytes.len() - 4];
    if crc32fast::hash(body) != u32_at(bytes, bytes.len() - 4) {
        return Err(CodebookFileError::CrcMismatch);
    }
    let codewords = body[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Codebook::new(dim, codewords)?.with_lineage((parent != 0).then_some(parent), refine_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(k in 1usize..20, dim in 1usize..10, parent in any::<u64>(), iters in any::<u32>(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let words = (0..k * dim).map(|_| rng.random_range(-5.0f32..5.0)).collect();
            let cb = Codebook::new(dim, words).unwrap().with_lineage((parent != 0).then_some(parent), iters);
            let bytes = write_codebook(&cb);
            prop_assert_eq!(bytes.len(), 25 + 4 * k * dim + 4);
            let back = read_codebook(&bytes).unwrap();
            prop_assert_eq!(&back, &cb);
            prop_assert_eq!(back.id(), cb.id());
        }
    }

    #[test]
    fn errors() {
        let cb = Codebook::new(2, vec![0.5, 1.5, -1.0, 2.0]).unwrap();
        let bytes = write_codebook(&cb);
        assert_eq!(read_codebook(b"VQIS").unwrap_err(), CodebookFileError::BadMagic);
        let mut v = bytes.clone();
        v[4] = 9;
        assert_eq!(read_codebook(&v).unwrap_err(), CodebookFileError::UnsupportedVersion(9));
        assert!(matches!(
            read_codebook(&bytes[..bytes.len() - 1]).unwrap_err(),
            CodebookFileError::LengthMismatch { .. }
        ));
        let mut v = bytes.clone();
        v[30] ^= 0x10;
        assert_eq!(read_codebook(&v).unwrap_err(), CodebookFileError::CrcMismatch);
    }
}
