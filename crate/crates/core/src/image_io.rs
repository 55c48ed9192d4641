//! Binary PPM (P6, maxval 255) reading and writing.
//!
//! The writer always emits the canonical form `P6\n<w> <h>\n255\n` followed by
//! the raw interleaved RGB samples. The reader additionally accepts `#`
//! comments and arbitrary whitespace runs inside the header.

use thiserror::Error;

/// Number of interleaved samples per pixel.
pub const CHANNELS: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PpmError {
    #[error("not a binary PPM file (expected P6 magic)")]
    BadMagic,
    #[error("malformed PPM header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated PPM payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("image of {width}x{height} needs {expected} samples, got {found}")]
pub struct ImageSizeError {
    pub width: usize,
    pub height: usize,
    pub expected: usize,
    pub found: usize,
}

/// An 8-bit RGB raster stored row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageSizeError> {
        let expected = width * height * CHANNELS;
        if width == 0 || height == 0 || pixels.len() != expected {
            return Err(ImageSizeError {
                width,
                height,
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![value; width * height * CHANNELS],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * CHANNELS + c]
    }

    #[inline]
    pub fn set_sample(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.pixels[(y * self.width + x) * CHANNELS + c] = v;
    }

    /// Sample lookup with coordinates clamped to the image, i.e. edge replication.
    #[inline]
    pub fn sample_clamped(&self, x: usize, y: usize, c: usize) -> u8 {
        self.sample(x.min(self.width - 1), y.min(self.height - 1), c)
    }

    /// Top-left `width`x`height` region of this image.
    pub fn crop(&self, width: usize, height: usize) -> Image {
        assert!(width <= self.width && height <= self.height);
        let mut pixels = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            let start = y * self.width * CHANNELS;
            pixels.extend_from_slice(&self.pixels[start..start + width * CHANNELS]);
        }
        Image {
            width,
            height,
            pixels,
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, what: &'static str) -> Result<u32, PpmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PpmError::MalformedHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PpmError::MalformedHeader(what))
    }
}

pub fn read_ppm(bytes: &[u8]) -> Result<Image, PpmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(PpmError::BadMagic);
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur.bytes.get(cur.pos).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PpmError::MalformedHeader("missing separator after magic"));
    }
    let width = cur.read_number("width")? as usize;
    let height = cur.read_number("height")? as usize;
    let maxval = cur.read_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PpmError::MalformedHeader("zero dimension"));
    }
    if maxval != 255 {
        return Err(PpmError::UnsupportedMaxval(maxval));
    }
    // Exactly one whitespace byte separates maxval from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PpmError::MalformedHeader("missing separator before raster")),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or(PpmError::MalformedHeader("dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PpmError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    Ok(Image {
        width,
        height,
        pixels: payload[..expected].to_vec(),
    })
}

pub fn write_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}
