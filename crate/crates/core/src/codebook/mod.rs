//! Codebooks, nearest-codeword quantization, and the clustered codebook ladder.

pub mod file;
pub mod kmeans;

use thiserror::Error;

use crate::hash::Fnv1a;
use crate::transform::LatentGrid;

pub use kmeans::{cluster_ladder, refine, train_root, train_root_with, LadderEntry, LloydParams, Trained};

/// Codebook sizes of the variable-rate ladder, largest first.
pub const LADDER: [usize; 9] = [2048, 1024, 512, 256, 128, 64, 32, 16, 8];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodebookError {
    #[error("dimension mismatch: codebook has {codebook}, latent grid has {grid}")]
    DimMismatch { codebook: usize, grid: usize },
    #[error("index map is bound to codebook {expected:016x}, got {found:016x}")]
    BindingMismatch { expected: u64, found: u64 },
    #[error("index {index} at cell {cell} outside codebook of size {k}")]
    IndexOutOfRange { index: u32, cell: usize, k: usize },
    #[error("need at least {needed} training vectors, have {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("ladder size {size} must be smaller than the root size {root}")]
    SizeNotBelowRoot { size: usize, root: usize },
    #[error("ladder sizes must be strictly decreasing")]
    SizesNotDecreasing,
    #[error("codebook must hold at least one codeword of positive dimension")]
    Empty,
    #[error("codeword values must be finite")]
    NonFinite,
    #[error("index map geometry {cells} cells does not match {grid_h}x{grid_w}")]
    BadGeometry { cells: usize, grid_h: usize, grid_w: usize },
}

/// Immutable table of `K` codewords of dimension `n_z`.
///
/// Codewords are stored in single precision (the on-disk precision) and
/// mirrored in double precision for distance computations.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    id: u64,
    dim: usize,
    codewords: Vec<f32>,
    wide: Vec<f64>,
    parent_id: Option<u64>,
    refine_iters: u32,
}

fn content_id(dim: usize, codewords: &[f32]) -> u64 {
    let mut h = Fnv1a::default();
    h.write_u32((codewords.len() / dim) as u32);
    h.write_u32(dim as u32);
    for c in codewords {
        h.write(&c.to_le_bytes());
    }
    h.finish()
}

impl Codebook {
    /// Builds a codebook from row-major codewords; the id is a hash of the content.
    pub fn new(dim: usize, codewords: Vec<f32>) -> Result<Self, CodebookError> {
        if dim == 0 || codewords.is_empty() || codewords.len() % dim != 0 {
            return Err(CodebookError::Empty);
        }
        if codewords.iter().any(|c| !c.is_finite()) {
            return Err(CodebookError::NonFinite);
        }
        Ok(Self {
            id: content_id(dim, &codewords),
            dim,
            wide: codewords.iter().map(|&c| f64::from(c)).collect(),
            codewords,
            parent_id: None,
            refine_iters: 0,
        })
    }

    /// Rounds `centroids` to storage precision and drops bit-identical repeats,
    /// keeping the first occurrence.
    pub(crate) fn from_centroids(dim: usize, centroids: &[f64]) -> Result<Self, CodebookError> {
        let mut seen = std::collections::HashSet::new();
        let mut codewords = Vec::with_capacity(centroids.len());
        for row in centroids.chunks_exact(dim) {
            let narrow: Vec<f32> = row.iter().map(|&v| v as f32).collect();
            let key: Vec<u32> = narrow.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                codewords.extend(narrow);
            }
        }
        Self::new(dim, codewords)
    }

    pub fn with_lineage(mut self, parent_id: Option<u64>, refine_iters: u32) -> Self {
        self.parent_id = parent_id;
        self.refine_iters = refine_iters;
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn size(&self) -> usize {
        self.codewords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parent_id(&self) -> Option<u64> {
        self.parent_id
    }

    pub fn refine_iters(&self) -> u32 {
        self.refine_iters
    }

    pub fn codewords(&self) -> &[f32] {
        &self.codewords
    }

    /// Codeword `k` widened to double precision.
    pub fn codeword(&self, k: usize) -> &[f64] {
        &self.wide[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn wide(&self) -> &[f64] {
        &self.wide
    }

    /// Index of the closest codeword to `v` and its squared distance.
    pub fn nearest(&self, v: &[f64]) -> (usize, f64) {
        kmeans::nearest(v, &self.wide, self.dim, 0)
    }
}

/// Grid of codeword indices bound to the codebook that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    grid_h: usize,
    grid_w: usize,
    k: usize,
    codebook_id: u64,
    indices: Vec<u32>,
}

impl IndexMap {
    pub fn new(grid_h: usize, grid_w: usize, k: usize, codebook_id: u64, indices: Vec<u32>) -> Result<Self, CodebookError> {
        if indices.len() != grid_h * grid_w {
            return Err(CodebookError::BadGeometry {
                cells: indices.len(),
                grid_h,
                grid_w,
            });
        }
        if let Some((cell, &index)) = indices.iter().enumerate().find(|(_, &i)| i as usize >= k) {
            return Err(CodebookError::IndexOutOfRange { index, cell, k });
        }
        Ok(Self {
            grid_h,
            grid_w,
            k,
            codebook_id,
            indices,
        })
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codebook_id(&self) -> u64 {
        self.codebook_id
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.indices[row * self.grid_w + col]
    }

    /// Fraction of cells where `self` and `other` agree.
    pub fn agreement(&self, other: &IndexMap) -> f64 {
        assert_eq!(self.len(), other.len());
        if self.is_empty() {
            return 1.0;
        }
        let same = self.indices.iter().zip(&other.indices).filter(|(a, b)| a == b).count();
        same as f64 / self.len() as f64
    }
}

/// Replaces every latent vector with the index of its closest codeword
/// (squared Euclidean distance, ties to the smallest index).
pub fn quantize(grid: &LatentGrid, cb: &Codebook) -> Result<IndexMap, CodebookError> {
    if grid.dim() != cb.dim() {
        return Err(CodebookError::DimMismatch {
            codebook: cb.dim(),
            grid: grid.dim(),
        });
    }
    let indices = grid.iter().map(|v| cb.nearest(v).0 as u32).collect();
    Ok(IndexMap {
        grid_h: grid.grid_h(),
        grid_w: grid.grid_w(),
        k: cb.size(),
        codebook_id: cb.id(),
        indices,
    })
}

/// Looks every index up in the codebook it is bound to.
pub fn dequantize(im: &IndexMap, cb: &Codebook) -> Result<LatentGrid, CodebookError> {
    if im.codebook_id != cb.id() {
        return Err(CodebookError::BindingMismatch {
            expected: im.codebook_id,
            found: cb.id(),
        });
    }
    let mut vectors = Vec::with_capacity(im.len() * cb.dim());
    for (cell, &index) in im.indices.iter().enumerate() {
        if index as usize >= cb.size() {
            return Err(CodebookError::IndexOutOfRange {
                index,
                cell,
                k: cb.size(),
            });
        }
        vectors.extend_from_slice(cb.codeword(index as usize));
    }
    Ok(LatentGrid::new(im.grid_h, im.grid_w, cb.dim(), vectors).expect("codewords are finite"))
}

/// Mean squared quantization error of `grids` against `cb`.
pub fn distortion(grids: &[LatentGrid], cb: &Codebook) -> Result<f64, CodebookError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for g in grids {
        if g.dim() != cb.dim() {
            return Err(CodebookError::DimMismatch {
                codebook: cb.dim(),
                grid: g.dim(),
            });
        }
        for v in g.iter() {
            total += cb.nearest(v).1;
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}
