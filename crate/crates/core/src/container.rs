//! `VQIS` stream container: image geometry, codebook binding and the coded
//! index payload.
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VQIS"
//! 4       1     version (0x01)
//! 5       4     true height, u32
//! 9       4     true width, u32
//! 13      1     patch size (16)
//! 14      2     n_z, u16
//! 16      8     codebook id, u64
//! 24      2     K, u16
//! 26      4     payload length, u32
//! 30      ...   range-coder payload
//! end-4   4     CRC32 (IEEE) over header and payload
//! ```
//!
//! The number of coded symbols is implied by the geometry:
//! `ceil(H/16) * ceil(W/16)`.

use thiserror::Error;

use crate::entropy::CodedPayload;
use crate::transform::{grid_extent, PATCH_SIZE};

pub const MAGIC: &[u8; 4] = b"VQIS";
pub const VERSION: u8 = 1;
/// Bytes before the payload.
pub const HEADER_LEN: usize = 30;
/// Bytes after the payload.
pub const TRAILER_LEN: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContainerError {
    #[error("not a VQIS stream (bad magic)")]
    BadMagic,
    #[error("unsupported stream version {0}")]
    UnsupportedVersion(u8),
    #[error("stream length {found} does not match the {expected} bytes its header implies")]
    LengthMismatch { expected: usize, found: usize },
    #[error("stream CRC mismatch")]
    CrcMismatch,
    #[error("header field {field} cannot hold {value}")]
    FieldOverflow { field: &'static str, value: u64 },
    #[error("invalid stream geometry: {0}")]
    InvalidGeometry(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
    pub version: u8,
    pub true_height: u32,
    pub true_width: u32,
    pub patch_size: u8,
    pub n_z: u16,
    pub codebook_id: u64,
    pub k: u16,
    pub payload_len: u32,
}

impl StreamHeader {
    /// Header for an image of `height`x`width`, checking every field fits.
    pub fn new(height: usize, width: usize, n_z: usize, codebook_id: u64, k: usize, payload_len: usize) -> Result<Self, ContainerError> {
        fn fit<T: TryFrom<usize>>(field: &'static str, v: usize) -> Result<T, ContainerError> {
            T::try_from(v).map_err(|_| ContainerError::FieldOverflow { field, value: v as u64 })
        }
        if height == 0 || width == 0 {
            return Err(ContainerError::InvalidGeometry("zero dimension"));
        }
        Ok(Self {
            version: VERSION,
            true_height: fit("true_height", height)?,
            true_width: fit("true_width", width)?,
            patch_size: PATCH_SIZE as u8,
            n_z: fit("n_z", n_z)?,
            codebook_id,
            k: fit("K", k)?,
            payload_len: fit("payload_len", payload_len)?,
        })
    }

    pub fn grid_h(&self) -> usize {
        grid_extent(self.true_height as usize)
    }

    pub fn grid_w(&self) -> usize {
        grid_extent(self.true_width as usize)
    }

    pub fn symbol_count(&self) -> usize {
        self.grid_h() * self.grid_w()
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(self.version);
        out.extend_from_slice(&self.true_height.to_le_bytes());
        out.extend_from_slice(&self.true_width.to_le_bytes());
        out.push(self.patch_size);
        out.extend_from_slice(&self.n_z.to_le_bytes());
        out.extend_from_slice(&self.codebook_id.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.payload_len.to_le_bytes());
    }
}

/// Serializes `header` and `payload`; `header.payload_len` must match.
pub fn pack(header: &StreamHeader, payload: &CodedPayload) -> Result<Vec<u8>, ContainerError> {
    if header.payload_len as usize != payload.bytes.len() {
        return Err(ContainerError::LengthMismatch {
            expected: header.payload_len as usize,
            found: payload.bytes.len(),
        });
    }
    if header.symbol_count() != payload.symbol_count || usize::from(header.k) != payload.alphabet_size {
        return Err(ContainerError::InvalidGeometry("payload does not match header geometry"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.bytes.len() + TRAILER_LEN);
    header.write(&mut out);
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.extend_from_slice(&payload.bytes);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn le<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N].try_into().expect("bounds checked")
}

/// Parses and validates a stream: magic, version, lengths, then CRC.
pub fn unpack(bytes: &[u8]) -> Result<(StreamHeader, CodedPayload), ContainerError> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    if bytes.len() < 5 {
        return Err(ContainerError::LengthMismatch {
            expected: HEADER_LEN + TRAILER_LEN,
            found: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(ContainerError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN + TRAILER_LEN {
        return Err(ContainerError::LengthMismatch {
            expected: HEADER_LEN + TRAILER_LEN,
            found: bytes.len(),
        });
    }
    let header = StreamHeader {
        version: bytes[4],
        true_height: u32::from_le_bytes(le(bytes, 5)),
        true_width: u32::from_le_bytes(le(bytes, 9)),
        patch_size: bytes[13],
        n_z: u16::from_le_bytes(le(bytes, 14)),
        codebook_id: u64::from_le_bytes(le(bytes, 16)),
        k: u16::from_le_bytes(le(bytes, 24)),
        payload_len: u32::from_le_bytes(le(bytes, 26)),
    };
    let expected = HEADER_LEN + header.payload_len as usize + TRAILER_LEN;
    if bytes.len() != expected {
        return Err(ContainerError::LengthMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let body = &bytes[..expected - TRAILER_LEN];
    if crc32fast::hash(body) != u32::from_le_bytes(le(bytes, expected - TRAILER_LEN)) {
        return Err(ContainerError::CrcMismatch);
    }
    if usize::from(header.patch_size) != PATCH_SIZE {
        return Err(ContainerError::InvalidGeometry("patch size must be 16"));
    }
    if header.true_height == 0 || header.true_width == 0 || header.n_z == 0 || header.k < 2 {
        return Err(ContainerError::InvalidGeometry("zero-sized field"));
    }
    let payload = CodedPayload {
        bytes: body[HEADER_LEN..].to_vec(),
        symbol_count: header.symbol_count(),
        alphabet_size: usize::from(header.k),
    };
    Ok((header, payload))
}
