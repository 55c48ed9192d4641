//! Loss simulation: which index-map cells are treated as lost in transit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codebook::IndexMap;

/// How lost cells are distributed over the raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossPattern {
    /// Independent, uniformly chosen cells.
    #[default]
    Uniform,
    /// Contiguous raster-order runs of the given length (the last run may be shorter).
    Burst { run: usize },
}

/// An index map with a set of cells marked lost.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedIndexMap {
    base: IndexMap,
    mask: Vec<bool>,
    alpha: f64,
}

/// Number of lost cells for ratio `alpha` over `cells` cells (half-to-even).
pub fn lost_count(alpha: f64, cells: usize) -> usize {
    ((alpha * cells as f64).round_ties_even() as usize).min(cells)
}

impl MaskedIndexMap {
    /// Wraps `base` with an explicit mask, e.g. one derived from packet metadata.
    pub fn from_mask(base: IndexMap, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), base.len(), "mask must cover the index map");
        let alpha = if base.is_empty() {
            0.0
        } else {
            mask.iter().filter(|&&m| m).count() as f64 / base.len() as f64
        };
        Self { base, mask, alpha }
    }

    pub fn base(&self) -> &IndexMap {
        &self.base
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Sentinel marking a lost cell: the codebook size `K`, outside the alphabet.
    pub fn mask_token(&self) -> u32 {
        self.base.k() as u32
    }

    pub fn lost(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Received indices, with lost cells replaced by the mask token.
    pub fn observed(&self) -> Vec<u32> {
        let token = self.mask_token();
        self.base
            .indices()
            .iter()
            .zip(&self.mask)
            .map(|(&i, &m)| if m { token } else { i })
            .collect()
    }
}

/// Masks exactly `round(alpha * N)` uniformly chosen cells.
///
/// The chosen cells are a prefix of a seeded random permutation, so for a
/// fixed seed the masks are nested as `alpha` grows.
pub fn apply_mask(im: &IndexMap, alpha: f64, seed: u64) -> MaskedIndexMap {
    apply_loss(im, alpha, seed, LossPattern::Uniform)
}

pub fn apply_loss(im: &IndexMap, alpha: f64, seed: u64, pattern: LossPattern) -> MaskedIndexMap {
    assert!((0.0..=1.0).contains(&alpha), "mask ratio must lie in [0, 1]");
    let n = im.len();
    let lost = lost_count(alpha, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    match pattern {
        LossPattern::Uniform => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for &i in &order[..lost] {
                mask[i] = true;
            }
        }
        LossPattern::Burst { run } => {
            let run = run.max(1);
            let mut remaining = lost;
            while remaining > 0 {
                let start = rng.random_range(0..n);
                for i in (start..n).chain(0..start).take(run) {
                    if remaining == 0 {
                        break;
                    }
                    if !mask[i] {
                        mask[i] = true;
                        remaining -= 1;
                    }
                }
            }
        }
    }
    MaskedIndexMap {
        base: im.clone(),
        mask,
        alpha,
    }
}
