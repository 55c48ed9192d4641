//! Analysis/synthesis pair mapping images to a grid of per-patch latent vectors.
//!
//! Every 16x16 patch (edge-replicated at the borders) is normalized to
//! `[-1, 1]` via `s / 127.5 - 1` and projected onto the leading `n_z` rows of
//! an orthonormal basis built from separable 2D DCT-II functions. Rows are
//! ordered by zig-zag frequency; the three colour channels of one frequency
//! occupy consecutive rows (R, G, B), so any prefix of the basis keeps the
//! channels balanced.

use std::fmt;

use thiserror::Error;

use crate::image_io::{Image, CHANNELS};

/// Side length of a square patch; one latent vector per patch.
pub const PATCH_SIZE: usize = 16;
/// Samples per patch per channel.
pub const PATCH_AREA: usize = PATCH_SIZE * PATCH_SIZE;
/// Raw dimensionality of a patch.
pub const PATCH_DIM: usize = PATCH_AREA * CHANNELS;
/// Default latent dimensionality.
pub const DEFAULT_DIM: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("latent dimension {0} outside 1..={PATCH_DIM}")]
    InvalidDim(usize),
    #[error("latent dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("grid {grid_h}x{grid_w} does not cover a {height}x{width} image")]
    GeometryMismatch {
        grid_h: usize,
        grid_w: usize,
        height: usize,
        width: usize,
    },
    #[error("latent grid holds {found} values, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("latent grid contains a non-finite value")]
    NonFinite,
}

/// Number of patches needed to cover `len` pixels.
pub fn grid_extent(len: usize) -> usize {
    len.div_ceil(PATCH_SIZE)
}

/// Row-major grid of latent vectors, one per patch.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    vectors: Vec<f64>,
}

impl LatentGrid {
    pub fn new(grid_h: usize, grid_w: usize, dim: usize, vectors: Vec<f64>) -> Result<Self, TransformError> {
        let expected = grid_h * grid_w * dim;
        if vectors.len() != expected {
            return Err(TransformError::BadLength {
                expected,
                found: vectors.len(),
            });
        }
        if dim == 0 {
            return Err(TransformError::InvalidDim(dim));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(TransformError::NonFinite);
        }
        Ok(Self {
            grid_h,
            grid_w,
            dim,
            vectors,
        })
    }

    pub fn zeros(grid_h: usize, grid_w: usize, dim: usize) -> Self {
        Self {
            grid_h,
            grid_w,
            dim,
            vectors: vec![0.0; grid_h * grid_w * dim],
        }
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }

    /// Vector of the cell at flat raster position `idx`.
    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        self.vector(row * self.grid_w + col)
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.vectors.chunks_exact(self.dim)
    }

    /// Mean over cells of the squared Euclidean distance to `other`.
    pub fn mse(&self, other: &LatentGrid) -> Result<f64, TransformError> {
        if self.dim != other.dim || self.cells() != other.cells() {
            return Err(TransformError::DimMismatch {
                expected: self.vectors.len(),
                found: other.vectors.len(),
            });
        }
        let total: f64 = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(total / self.cells().max(1) as f64)
    }
}

/// Identifier of the orthonormal basis used by a [`TransformSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisId {
    /// Separable 2D DCT-II, zig-zag frequency order, channels interleaved per frequency.
    Dct2Zigzag,
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisId::Dct2Zigzag => f.write_str("dct2-zigzag"),
        }
    }
}

/// Zig-zag scan of an `n`x`n` block as `(vertical, horizontal)` frequency pairs.
pub fn zigzag_order(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for v in lo..=hi {
                order.push((v, s - v));
            }
        } else {
            for v in (lo..=hi).rev() {
                order.push((v, s - v));
            }
        }
    }
    order
}

fn dct_weight(freq: usize, pos: usize) -> f64 {
    let n = PATCH_SIZE as f64;
    let scale = if freq == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
    scale * (std::f64::consts::PI * (2 * pos + 1) as f64 * freq as f64 / (2.0 * n)).cos()
}

/// Fixed projection parameters: patch size 16, latent dimension, basis.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    dim: usize,
    basis_id: BasisId,
    /// `dim` rows of `PATCH_AREA` spatial weights; row `r` acts on channel `r % 3`.
    rows: Vec<f64>,
}

impl TransformSpec {
    pub fn new(dim: usize) -> Result<Self, TransformError> {
        if dim == 0 || dim > PATCH_DIM {
            return Err(TransformError::InvalidDim(dim));
        }
        let zz = zigzag_order(PATCH_SIZE);
        let mut rows = Vec::with_capacity(dim * PATCH_AREA);
        for r in 0..dim {
            let (fv, fh) = zz[r / CHANNELS];
            for y in 0..PATCH_SIZE {
                let wy = dct_weight(fv, y);
                for x in 0..PATCH_SIZE {
                    rows.push(wy * dct_weight(fh, x));
                }
            }
        }
        Ok(Self {
            dim,
            basis_id: BasisId::Dct2Zigzag,
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn patch_size(&self) -> usize {
        PATCH_SIZE
    }

    pub fn basis_id(&self) -> BasisId {
        self.basis_id
    }

    /// Row `r` of the basis expanded to the full channel-interleaved patch layout.
    pub fn basis_row(&self, r: usize) -> Vec<f64> {
        let ch = r % CHANNELS;
        let mut out = vec![0.0; PATCH_DIM];
        for (k, w) in self.spatial_row(r).iter().enumerate() {
            out[k * CHANNELS + ch] = *w;
        }
        out
    }

    fn spatial_row(&self, r: usize) -> &[f64] {
        &self.rows[r * PATCH_AREA..(r + 1) * PATCH_AREA]
    }

    /// Projects one normalized patch, stored as three channel planes, into `out`.
    fn project(&self, planes: &[[f64; PATCH_AREA]; CHANNELS], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let plane = &planes[r % CHANNELS];
            *o = self.spatial_row(r).iter().zip(plane).map(|(w, s)| w * s).sum();
        }
    }

    fn expand(&self, coeffs: &[f64], planes: &mut [[f64; PATCH_AREA]; CHANNELS]) {
        for plane in planes.iter_mut() {
            plane.fill(0.0);
        }
        for (r, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let plane = &mut planes[r % CHANNELS];
            for (p, w) in plane.iter_mut().zip(self.spatial_row(r)) {
                *p += c * w;
            }
        }
    }
}

/// Maps an image to its latent grid; borders are padded by edge replication.
pub fn analyze(img: &Image, spec: &TransformSpec) -> LatentGrid {
    let grid_h = grid_extent(img.height());
    let grid_w = grid_extent(img.width());
    let dim = spec.dim();
    let mut vectors = vec![0.0; grid_h * grid_w * dim];
    let mut planes = [[0.0; PATCH_AREA]; CHANNELS];
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            for y in 0..PATCH_SIZE {
                for x in 0..PATCH_SIZE {
                    for (c, plane) in planes.iter_mut().enumerate() {
                        let s = img.sample_clamped(gx * PATCH_SIZE + x, gy * PATCH_SIZE + y, c);
                        plane[y * PATCH_SIZE + x] = f64::from(s) / 127.5 - 1.0;
                    }
                }
            }
            let cell = gy * grid_w + gx;
            spec.project(&planes, &mut vectors[cell * dim..(cell + 1) * dim]);
        }
    }
    LatentGrid {
        grid_h,
        grid_w,
        dim,
        vectors,
    }
}

fn to_sample(v: f64) -> u8 {
    ((v + 1.0) * 127.5).clamp(0.0, 255.0).round_ties_even() as u8
}

/// Inverse of [`analyze`]: expands each vector through the basis transpose and
/// crops the padding to `(height, width)`.
pub fn synthesize(
    grid: &LatentGrid,
    spec: &TransformSpec,
    height: usize,
    width: usize,
) -> Result<Image, TransformError> {
    if grid.dim() != spec.dim() {
        return Err(TransformError::DimMismatch {
            expected: spec.dim(),
            found: grid.dim(),
        });
    }
    if height == 0 || width == 0 || grid.grid_h() != grid_extent(height) || grid.grid_w() != grid_extent(width) {
        return Err(TransformError::GeometryMismatch {
            grid_h: grid.grid_h(),
            grid_w: grid.grid_w(),
            height,
            width,
        });
    }
    let mut img = Image::filled(width, height, 0);
    let mut planes = [[0.0; PATCH_AREA]; CHANNELS];
    for gy in 0..grid.grid_h() {
        for gx in 0..grid.grid_w() {
            spec.expand(grid.cell(gy, gx), &mut planes);
            for y in 0..PATCH_SIZE {
                let py = gy * PATCH_SIZE + y;
                if py >= height {
                    break;
                }
                for x in 0..PATCH_SIZE {
                    let px = gx * PATCH_SIZE + x;
                    if px >= width {
                        break;
                    }
                    for (c, plane) in planes.iter().enumerate() {
                        img.set_sample(px, py, c, to_sample(plane[y * PATCH_SIZE + x]));
                    }
                }
            }
        }
    }
    Ok(img)
}
