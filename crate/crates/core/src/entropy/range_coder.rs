//! 32-bit range coder with carry propagation.
//!
//! Encoder state is `low: u32` and `range: u32`, starting at `0` and
//! `0xFFFF_FFFF`. Coding a symbol with cumulative frequency `cum`, frequency
//! `freq` and model total `total` (at most 2^17) does:
//!
//! ```text
//! r      = range / total
//! low   += r * cum          (a carry out of bit 31 increments the bytes already emitted)
//! range  = r * freq
//! while range < 2^24: emit low >> 24; low <<= 8; range <<= 8
//! ```
//!
//! Finishing emits the four bytes of `low`, most significant first. The
//! decoder primes `code` with the first four bytes and mirrors the same
//! arithmetic, keeping `code` relative to `low`, so it consumes exactly the
//! bytes the encoder produced.

use super::EntropyError;

const TOP: u32 = 1 << 24;

#[derive(Debug)]
pub struct Encoder {
    low: u32,
    range: u32,
    out: Vec<u8>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            out: Vec::new(),
        }
    }

    fn propagate_carry(&mut self) {
        for byte in self.out.iter_mut().rev() {
            let (v, overflow) = byte.overflowing_add(1);
            *byte = v;
            if !overflow {
                return;
            }
        }
        unreachable!("carry past the first output byte");
    }

    pub fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total);
        let r = self.range / total;
        let (low, carry) = self.low.overflowing_add(r * cum);
        self.low = low;
        if carry {
            self.propagate_carry();
        }
        self.range = r * freq;
        while self.range < TOP {
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.out.extend_from_slice(&self.low.to_be_bytes());
        self.out
    }
}

#[derive(Debug)]
pub struct Decoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
    scale: u32,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self, EntropyError> {
        if input.len() < 4 {
            return Err(EntropyError::Truncated);
        }
        Ok(Self {
            code: u32::from_be_bytes([input[0], input[1], input[2], input[3]]),
            range: u32::MAX,
            input,
            pos: 4,
            scale: 0,
        })
    }

    /// Target cumulative frequency of the next symbol.
    pub fn target(&mut self, total: u32) -> Result<u32, EntropyError> {
        self.scale = self.range / total;
        let v = self.code / self.scale;
        if v >= total {
            return Err(EntropyError::Desync);
        }
        Ok(v)
    }

    /// Consumes the symbol located by the preceding [`Decoder::target`] call.
    pub fn consume(&mut self, cum: u32, freq: u32) -> Result<(), EntropyError> {
        self.code -= self.scale * cum;
        self.range = self.scale * freq;
        while self.range < TOP {
            let byte = *self.input.get(self.pos).ok_or(EntropyError::Truncated)?;
            self.pos += 1;
            self.code = (self.code << 8) | u32::from(byte);
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn bytes_consumed(&self) -> usize {
        self.pos
    }
}
