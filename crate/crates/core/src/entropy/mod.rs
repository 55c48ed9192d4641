//! Lossless coding of index sequences with an adaptive order-0 model driving a
//! 32-bit range coder.
//!
//! The model starts with every count at 1, adds [`INCREMENT`] to the count of
//! each coded symbol and, once the total reaches [`RESCALE_THRESHOLD`], halves
//! all counts rounding up. Encoder and decoder evolve the model identically,
//! so the payload carries no model parameters. See [`range_coder`] for the
//! exact byte layout.

pub mod range_coder;

use thiserror::Error;

use range_coder::{Decoder, Encoder};

/// Count added to a symbol after it is coded.
pub const INCREMENT: u32 = 32;
/// Total count at which all counts are halved.
pub const RESCALE_THRESHOLD: u32 = 1 << 16;
/// Largest alphabet the coder accepts.
pub const MAX_ALPHABET: usize = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntropyError {
    #[error("alphabet size {0} outside 2..={MAX_ALPHABET}")]
    BadAlphabet(usize),
    #[error("index {index} at position {position} outside alphabet of size {k}")]
    IndexOutOfRange { index: u32, position: usize, k: usize },
    #[error("payload ended before all symbols were decoded")]
    Truncated,
    #[error("range decoder lost synchronization")]
    Desync,
    #[error("payload has {0} trailing bytes after the last symbol")]
    TrailingBytes(usize),
}

/// Adaptive frequency table backed by a Fenwick tree for `O(log K)` lookups.
#[derive(Debug, Clone)]
pub struct FrequencyModel {
    counts: Vec<u32>,
    tree: Vec<u32>,
    total: u32,
}

impl FrequencyModel {
    pub fn new(k: usize) -> Result<Self, EntropyError> {
        if !(2..=MAX_ALPHABET).contains(&k) {
            return Err(EntropyError::BadAlphabet(k));
        }
        let mut model = Self {
            counts: vec![1; k],
            tree: vec![0; k + 1],
            total: 0,
        };
        model.rebuild();
        Ok(model)
    }

    fn rebuild(&mut self) {
        let n = self.counts.len();
        self.tree.iter_mut().for_each(|t| *t = 0);
        for i in 1..=n {
            self.tree[i] += self.counts[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
        self.total = self.counts.iter().sum();
    }

    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn count(&self, symbol: usize) -> u32 {
        self.counts[symbol]
    }

    /// Sum of counts of all symbols below `symbol`.
    pub fn cumulative(&self, symbol: usize) -> u32 {
        let mut i = symbol;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }

    /// Symbol whose cumulative interval contains `target`, with its lower bound.
    pub fn find(&self, target: u32) -> (usize, u32) {
        let n = self.counts.len();
        let mut pos = 0;
        let mut remaining = target;
        let mut step = 1usize << (usize::BITS - 1 - n.leading_zeros());
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        (pos, target - remaining)
    }

    pub fn update(&mut self, symbol: usize) {
        self.counts[symbol] += INCREMENT;
        self.total += INCREMENT;
        let n = self.counts.len();
        let mut i = symbol + 1;
        while i <= n {
            self.tree[i] += INCREMENT;
            i += i & i.wrapping_neg();
        }
        if self.total >= RESCALE_THRESHOLD {
            for c in &mut self.counts {
                *c = c.div_ceil(2);
            }
            self.rebuild();
        }
    }
}

/// Entropy-coded index sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPayload {
    pub bytes: Vec<u8>,
    pub symbol_count: usize,
    pub alphabet_size: usize,
}

pub fn encode_indices(indices: &[u32], k: usize) -> Result<CodedPayload, EntropyError> {
    let mut model = FrequencyModel::new(k)?;
    let mut enc = Encoder::new();
    for (position, &index) in indices.iter().enumerate() {
        let s = index as usize;
        if s >= k {
            return Err(EntropyError::IndexOutOfRange { index, position, k });
        }
        enc.encode(model.cumulative(s), model.count(s), model.total());
        model.update(s);
    }
    Ok(CodedPayload {
        bytes: enc.finish(),
        symbol_count: indices.len(),
        alphabet_size: k,
    })
}

pub fn decode_indices(payload: &CodedPayload) -> Result<Vec<u32>, EntropyError> {
    let mut model = FrequencyModel::new(payload.alphabet_size)?;
    let mut dec = Decoder::new(&payload.bytes)?;
    let mut out = Vec::with_capacity(payload.symbol_count);
    for _ in 0..payload.symbol_count {
        let target = dec.target(model.total())?;
        let (s, cum) = model.find(target);
        dec.consume(cum, model.count(s))?;
        model.update(s);
        out.push(s as u32);
    }
    let extra = payload.bytes.len() - dec.bytes_consumed();
    if extra > 0 {
        return Err(EntropyError::TrailingBytes(extra));
    }
    Ok(out)
}

/// Ideal adaptive code length in bits, i.e. what the coder spends before
/// integer-arithmetic and flush overhead.
pub fn adaptive_cost_bits(indices: &[u32], k: usize) -> Result<f64, EntropyError> {
    let mut model = FrequencyModel::new(k)?;
    let mut bits = 0.0;
    for (position, &index) in indices.iter().enumerate() {
        let s = index as usize;
        if s >= k {
            return Err(EntropyError::IndexOutOfRange { index, position, k });
        }
        bits -= (f64::from(model.count(s)) / f64::from(model.total())).log2();
        model.update(s);
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, k: usize, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..k as u32)).collect()
    }

    #[test]
    fn fenwick_agrees_with_prefix_sums() {
        let mut model = FrequencyModel::new(37).unwrap();
        let seq = uniform(5000, 37, 3);
        for &s in &seq {
            model.update(s as usize);
            let mut acc = 0;
            for sym in 0..37 {
                assert_eq!(model.cumulative(sym), acc);
                assert_eq!(model.find(acc), (sym, acc));
                assert_eq!(model.find(acc + model.count(sym) - 1), (sym, acc));
                acc += model.count(sym);
            }
            assert_eq!(acc, model.total());
        }
    }

    #[test]
    fn rescale_keeps_counts_positive_and_bounded() {
        let mut model = FrequencyModel::new(2048).unwrap();
        for _ in 0..10_000 {
            model.update(5);
            assert!(model.total() < RESCALE_THRESHOLD);
            assert!(model.total() < 1 << 24);
        }
        assert!((0..2048).all(|s| model.count(s) >= 1));
    }

    #[test]
    fn empty_sequence() {
        let p = encode_indices(&[], 8).unwrap();
        assert_eq!(p.bytes.len(), 4);
        assert_eq!(decode_indices(&p).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn single_symbol_large_alphabet() {
        let p = encode_indices(&[2047], 2048).unwrap();
        assert_eq!(decode_indices(&p).unwrap(), vec![2047]);
    }

    #[test]
    fn uniform_k8_fits_bound() {
        for seed in 0..20 {
            let p = encode_indices(&uniform(1536, 8, seed), 8).unwrap();
            assert!(p.bytes.len() <= 592, "seed {seed}: {} bytes", p.bytes.len());
        }
    }

    #[test]
    fn constant_sequence_compresses() {
        let p = encode_indices(&vec![1234; 1536], 2048).unwrap();
        assert!(p.bytes.len() < 120, "{} bytes", p.bytes.len());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(encode_indices(&[0], 1).unwrap_err(), EntropyError::BadAlphabet(1));
        assert_eq!(
            encode_indices(&[0, 8], 8).unwrap_err(),
            EntropyError::IndexOutOfRange { index: 8, position: 1, k: 8 }
        );
    }

    #[test]
    fn truncation_is_detected() {
        let p = encode_indices(&uniform(500, 64, 1), 64).unwrap();
        for cut in [0, 3, p.bytes.len() / 2, p.bytes.len() - 1] {
            let t = CodedPayload {
                bytes: p.bytes[..cut].to_vec(),
                ..p.clone()
            };
            assert!(decode_indices(&t).is_err(), "cut at {cut}");
        }
        let mut longer = p.clone();
        longer.bytes.push(0);
        assert_eq!(decode_indices(&longer), Err(EntropyError::TrailingBytes(1)));
    }

    #[test]
    fn golden_payload() {
        // Frozen bytes; any change here breaks stream compatibility.
        let p = encode_indices(&[0, 1, 2, 3, 3, 3, 7, 0], 8).unwrap();
        assert_eq!(p.bytes, GOLDEN);
    }

    const GOLDEN: [u8; 8] = [0x1b, 0x24, 0xdd, 0xf2, 0xd5, 0x9a, 0x94, 0x00];

    #[test]
    fn coded_length_tracks_ideal_cost() {
        for (k, seed) in [(8, 1), (256, 2), (2048, 3)] {
            let seq = uniform(3000, k, seed);
            let ideal = adaptive_cost_bits(&seq, k).unwrap() / 8.0;
            let actual = encode_indices(&seq, k).unwrap().bytes.len() as f64;
            assert!(actual <= ideal + 8.0 && actual >= ideal - 1.0, "k={k}: {actual} vs {ideal}");
        }
    }

    proptest! {
        #[test]
        fn lossless(k in 2usize..=2048, len in 0usize..3000, seed in any::<u64>()) {
            let seq = uniform(len, k, seed);
            let p = encode_indices(&seq, k).unwrap();
            prop_assert_eq!(decode_indices(&p).unwrap(), seq);
        }

        #[test]
        fn lossless_skewed(k in 2usize..64, len in 0usize..3000, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seq: Vec<u32> = (0..len).map(|_| {
                if rng.random_bool(0.9) { 0 } else { rng.random_range(0..k as u32) }
            }).collect();
            let p = encode_indices(&seq, k).unwrap();
            prop_assert_eq!(decode_indices(&p).unwrap(), seq);
        }
    }
}
