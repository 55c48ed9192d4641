//! Lost-index restoration with a causal, sliding-window context model.
//!
//! The predictor estimates `p(I_i | I_<i)` from counts. For each cell the
//! context is the `C` nearest raster-causal positions inside the 16x16 window
//! centred on it (cells outside the map read as a border sentinel). Counts are
//! kept for the full signature and for each shorter prefix in the backoff
//! ladder (by default 12, 8, 4, 2, 1 and 0 positions). The empty context is the
//! symbol histogram smoothed with add-1/2 (Krichevsky–Trofimov) counts; each
//! longer context blends its own counts with the next shorter level,
//!
//! ```text
//! p_L(s) = (c_L(s) + λ_L · p_{L-1}(s)) / (n_L + λ_L),   λ_L = (d_L + 1) / 2
//! ```
//!
//! where `n_L` is the number of observations of that context and `d_L` the
//! number of distinct symbols seen in it. Unseen contexts fall straight back
//! to the shorter level.
//!
//! Restoration walks the map in raster order and replaces each lost cell with
//! the most probable symbol given its context, where earlier restored cells
//! count as known.

mod mask;
pub mod model_file;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codebook::IndexMap;
use crate::hash::Fnv1a;

pub use mask::{apply_loss, apply_mask, lost_count, LossPattern, MaskedIndexMap};

/// Side of the square window the context is drawn from.
pub const WINDOW: usize = 16;
/// Default number of causal neighbours in the full context.
pub const DEFAULT_CONTEXT: usize = 12;
/// Default backoff ladder, longest first.
pub const DEFAULT_LEVELS: [usize; 6] = [12, 8, 4, 2, 1, 0];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RestorationError {
    #[error("model alphabet {model} does not match index map alphabet {map}")]
    AlphabetMismatch { model: usize, map: usize },
    #[error("training maps disagree on alphabet size: {0} vs {1}")]
    MixedAlphabets(usize, usize),
    #[error("invalid predictor configuration: {0}")]
    BadConfig(&'static str),
    #[error("no training maps")]
    NoTrainingData,
}

/// Context size and backoff ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictorParams {
    pub context_size: usize,
    /// Strictly decreasing prefix lengths ending at 0; the first equals `context_size`.
    pub levels: Vec<usize>,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            context_size: DEFAULT_CONTEXT,
            levels: DEFAULT_LEVELS.to_vec(),
        }
    }
}

impl PredictorParams {
    pub fn validate(&self) -> Result<(), RestorationError> {
        let max = causal_offsets(usize::MAX).len();
        if self.context_size > max {
            return Err(RestorationError::BadConfig("context larger than the causal window"));
        }
        if self.levels.first() != Some(&self.context_size) || self.levels.last() != Some(&0) {
            return Err(RestorationError::BadConfig("levels must run from the context size down to 0"));
        }
        if self.levels.windows(2).any(|w| w[0] <= w[1]) {
            return Err(RestorationError::BadConfig("levels must be strictly decreasing"));
        }
        Ok(())
    }
}

/// Raster-causal offsets `(drow, dcol)` of the window, nearest first.
pub fn causal_offsets(limit: usize) -> Vec<(isize, isize)> {
    let half = (WINDOW / 2) as isize;
    let mut offsets: Vec<(isize, isize)> = (-half..half)
        .flat_map(|dr| (-half..half).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| dr < 0 || (dr == 0 && dc < 0))
        .collect();
    offsets.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr.abs(), dc));
    offsets.truncate(limit);
    offsets
}

fn level_key(prefix: &[u32]) -> u64 {
    let mut h = Fnv1a::default();
    h.write_u32(prefix.len() as u32);
    for &v in prefix {
        h.write_u32(v);
    }
    h.finish()
}

/// Observation counts for one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct ContextCounts {
    pub(crate) total: u32,
    /// `(symbol, count)` sorted by symbol.
    pub(crate) symbols: Vec<(u32, u32)>,
}

impl ContextCounts {
    fn add(&mut self, symbol: u32) {
        self.total += 1;
        match self.symbols.binary_search_by_key(&symbol, |&(s, _)| s) {
            Ok(i) => self.symbols[i].1 += 1,
            Err(i) => self.symbols.insert(i, (symbol, 1)),
        }
    }

    fn count(&self, symbol: u32) -> u32 {
        self.symbols
            .binary_search_by_key(&symbol, |&(s, _)| s)
            .map_or(0, |i| self.symbols[i].1)
    }

    fn escape_weight(&self) -> f64 {
        (self.symbols.len() as f64 + 1.0) / 2.0
    }
}

/// Count-based causal predictor of the next index.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    k: usize,
    params: PredictorParams,
    offsets: Vec<(isize, isize)>,
    /// Keyed by a hash of (level, signature prefix).
    table: HashMap<u64, ContextCounts>,
    trained_tokens: u64,
    training_nll: f64,
}

impl ContextModel {
    fn empty(k: usize, params: PredictorParams) -> Result<Self, RestorationError> {
        params.validate()?;
        if k < 2 {
            return Err(RestorationError::BadConfig("alphabet needs at least two symbols"));
        }
        Ok(Self {
            k,
            offsets: causal_offsets(params.context_size),
            params,
            table: HashMap::new(),
            trained_tokens: 0,
            training_nll: 0.0,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &PredictorParams {
        &self.params
    }

    pub fn trained_tokens(&self) -> u64 {
        self.trained_tokens
    }

    /// Mean `-log2 p(symbol | context)` over the training cells under the final model.
    pub fn training_nll(&self) -> f64 {
        self.training_nll
    }

    pub fn contexts(&self) -> usize {
        self.table.len()
    }

    fn border(&self) -> u32 {
        self.k as u32 + 1
    }

    /// Context values around `(row, col)` in `cells`, a `grid_h`x`grid_w` raster.
    fn signature(&self, cells: &[u32], grid_h: usize, grid_w: usize, row: usize, col: usize) -> Vec<u32> {
        self.offsets
            .iter()
            .map(|&(dr, dc)| {
                let (r, c) = (row as isize + dr, col as isize + dc);
                if r < 0 || c < 0 || r >= grid_h as isize || c >= grid_w as isize {
                    self.border()
                } else {
                    cells[r as usize * grid_w + c as usize]
                }
            })
            .collect()
    }

    fn keys(&self, signature: &[u32]) -> Vec<u64> {
        self.params
            .levels
            .iter()
            .map(|&level| level_key(&signature[..level]))
            .collect()
    }

    fn order0(&self) -> Option<&ContextCounts> {
        self.table.get(&level_key(&[]))
    }

    /// KT-smoothed probability of `symbol` in the empty context.
    pub fn order0_probability(&self, symbol: u32) -> f64 {
        let (c, n) = self.order0().map_or((0, 0), |cc| (cc.count(symbol), cc.total));
        (f64::from(c) + 0.5) / (f64::from(n) + self.k as f64 / 2.0)
    }

    /// Probability of `symbol` given the context signature.
    fn probability(&self, keys: &[u64], symbol: u32) -> f64 {
        let mut p = self.order0_probability(symbol);
        // keys are longest-first; the last one is the empty context.
        for key in keys.iter().rev().skip(1) {
            if let Some(cc) = self.table.get(key) {
                let lambda = cc.escape_weight();
                p = (f64::from(cc.count(symbol)) + lambda * p) / (f64::from(cc.total) + lambda);
            }
        }
        p
    }

    fn distribution_for_keys(&self, keys: &[u64]) -> Vec<f64> {
        let mut p: Vec<f64> = (0..self.k as u32).map(|s| self.order0_probability(s)).collect();
        for key in keys.iter().rev().skip(1) {
            if let Some(cc) = self.table.get(key) {
                let lambda = cc.escape_weight();
                let denom = f64::from(cc.total) + lambda;
                let scale = lambda / denom;
                p.iter_mut().for_each(|v| *v *= scale);
                for &(s, c) in &cc.symbols {
                    p[s as usize] += f64::from(c) / denom;
                }
            }
        }
        p
    }

    /// Full predictive distribution at `(row, col)` of a raster of known cells.
    pub fn distribution(&self, cells: &[u32], grid_h: usize, grid_w: usize, row: usize, col: usize) -> Vec<f64> {
        let sig = self.signature(cells, grid_h, grid_w, row, col);
        self.distribution_for_keys(&self.keys(&sig))
    }

    /// Mean code length in bits per symbol of `maps` under this model.
    pub fn nll_bits(&self, maps: &[IndexMap]) -> Result<f64, RestorationError> {
        let mut bits = 0.0;
        let mut count = 0usize;
        for m in maps {
            if m.k() != self.k {
                return Err(RestorationError::AlphabetMismatch { model: self.k, map: m.k() });
            }
            for row in 0..m.grid_h() {
                for col in 0..m.grid_w() {
                    let sig = self.signature(m.indices(), m.grid_h(), m.grid_w(), row, col);
                    bits -= self.probability(&self.keys(&sig), m.get(row, col)).log2();
                    count += 1;
                }
            }
        }
        Ok(if count == 0 { 0.0 } else { bits / count as f64 })
    }
}

/// Trains a predictor over `maps` with the default context configuration.
pub fn train_predictor(maps: &[IndexMap], k: usize) -> Result<ContextModel, RestorationError> {
    train_predictor_with(maps, k, PredictorParams::default())
}

pub fn train_predictor_with(maps: &[IndexMap], k: usize, params: PredictorParams) -> Result<ContextModel, RestorationError> {
    if maps.is_empty() {
        return Err(RestorationError::NoTrainingData);
    }
    if let Some(m) = maps.iter().find(|m| m.k() != k) {
        return Err(RestorationError::MixedAlphabets(k, m.k()));
    }
    let mut model = ContextModel::empty(k, params)?;
    for m in maps {
        for row in 0..m.grid_h() {
            for col in 0..m.grid_w() {
                let sig = model.signature(m.indices(), m.grid_h(), m.grid_w(), row, col);
                let symbol = m.get(row, col);
                for key in model.keys(&sig) {
                    model.table.entry(key).or_default().add(symbol);
                }
                model.trained_tokens += 1;
            }
        }
    }
    model.training_nll = model.nll_bits(maps)?;
    Ok(model)
}

/// Fills every lost cell with the model's most probable symbol, in raster order.
pub fn restore(masked: &MaskedIndexMap, model: &ContextModel) -> Result<IndexMap, RestorationError> {
    let base = masked.base();
    if base.k() != model.alphabet() {
        return Err(RestorationError::AlphabetMismatch {
            model: model.alphabet(),
            map: base.k(),
        });
    }
    let mut cells = masked.observed();
    let (h, w) = (base.grid_h(), base.grid_w());
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            if !masked.mask()[i] {
                continue;
            }
            let dist = model.distribution(&cells, h, w, row, col);
            let mut best = 0;
            for (s, &p) in dist.iter().enumerate() {
                if p > dist[best] {
                    best = s;
                }
            }
            cells[i] = best as u32;
        }
    }
    Ok(IndexMap::new(h, w, base.k(), base.codebook_id(), cells).expect("restored symbols are in range"))
}

/// Baseline: lost cells replaced by uniformly random symbols.
pub fn fill_uniform(masked: &MaskedIndexMap, seed: u64) -> IndexMap {
    let base = masked.base();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = masked
        .observed()
        .iter()
        .zip(masked.mask())
        .map(|(&v, &m)| if m { rng.random_range(0..base.k() as u32) } else { v })
        .collect();
    IndexMap::new(base.grid_h(), base.grid_w(), base.k(), base.codebook_id(), cells).expect("in range")
}

/// Baseline: lost cells replaced by the most frequent received symbol
/// (smallest on ties, 0 if nothing was received).
pub fn fill_most_frequent(masked: &MaskedIndexMap) -> IndexMap {
    let base = masked.base();
    let mut hist = vec![0usize; base.k()];
    for (&v, &m) in base.indices().iter().zip(masked.mask()) {
        if !m {
            hist[v as usize] += 1;
        }
    }
    let mode = hist
        .iter()
        .enumerate()
        .fold(0, |best, (s, &c)| if c > hist[best] { s } else { best }) as u32;
    let cells = masked
        .observed()
        .iter()
        .zip(masked.mask())
        .map(|(&v, &m)| if m { mode } else { v })
        .collect();
    IndexMap::new(base.grid_h(), base.grid_w(), base.k(), base.codebook_id(), cells).expect("in range")
}
