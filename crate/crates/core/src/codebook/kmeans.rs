//! K-means++ seeding and Lloyd iterations.
//!
//! Nearest-centroid search uses partial-distance elimination: the running sum
//! of squared differences is abandoned once it exceeds the best distance found
//! so far. Latent coordinates are ordered by decreasing typical energy, so
//! most candidates are rejected after a few terms. Sums are accumulated in
//! coordinate order, so a completed distance is bit-identical to a plain
//! exhaustive evaluation and the result equals the exhaustive argmin,
//! including the smallest-index tie-break.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Codebook, CodebookError};
use crate::transform::LatentGrid;

/// Stopping rule for Lloyd iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub max_iters: usize,
    /// Stop once `(previous - current) / previous` falls below this.
    pub rel_tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: 1e-6,
        }
    }
}

/// Result of a training or refinement run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub codebook: Codebook,
    /// Mean squared distortion after the initial assignment and after every
    /// Lloyd iteration.
    pub distortion_log: Vec<f64>,
}

impl Trained {
    pub fn iterations(&self) -> usize {
        self.distortion_log.len().saturating_sub(1)
    }

    pub fn final_distortion(&self) -> f64 {
        *self.distortion_log.last().unwrap_or(&0.0)
    }
}

/// Squared distance from `v` to `c`, or `None` once it exceeds `bound`.
#[inline]
fn bounded_distance(v: &[f64], c: &[f64], bound: f64) -> Option<f64> {
    let mut sum = 0.0;
    for (vs, cs) in v.chunks(8).zip(c.chunks(8)) {
        for (a, b) in vs.iter().zip(cs) {
            let d = a - b;
            sum += d * d;
        }
        if sum > bound {
            return None;
        }
    }
    Some(sum)
}

#[inline]
fn distance(v: &[f64], c: &[f64]) -> f64 {
    bounded_distance(v, c, f64::INFINITY).expect("unbounded")
}

/// Exact nearest centroid, probing `start` first to get a tight bound.
pub(crate) fn nearest(v: &[f64], centroids: &[f64], dim: usize, start: usize) -> (usize, f64) {
    let mut best = start;
    let mut best_d = distance(v, &centroids[start * dim..(start + 1) * dim]);
    for (k, c) in centroids.chunks_exact(dim).enumerate() {
        if k == start {
            continue;
        }
        if let Some(d) = bounded_distance(v, c, best_d) {
            if d < best_d || (d == best_d && k < best) {
                best = k;
                best_d = d;
            }
        }
    }
    (best, best_d)
}

fn gather(samples: &[LatentGrid]) -> Result<(usize, Vec<f64>), CodebookError> {
    let dim = samples.first().map(LatentGrid::dim).ok_or(CodebookError::InsufficientSamples {
        needed: 1,
        available: 0,
    })?;
    let mut points = Vec::new();
    for g in samples {
        if g.dim() != dim {
            return Err(CodebookError::DimMismatch {
                codebook: dim,
                grid: g.dim(),
            });
        }
        points.extend_from_slice(g.as_slice());
    }
    Ok((dim, points))
}

/// D²-weighted seeding. Returns the centers with each point's nearest center
/// and squared distance to it.
fn kmeans_pp(points: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let n = points.len() / dim;
    let point = |i: usize| &points[i * dim..(i + 1) * dim];
    let first = rng.random_range(0..n);
    let mut centers = point(first).to_vec();
    let mut assign = vec![0usize; n];
    let mut dist: Vec<f64> = (0..n).map(|i| distance(point(i), point(first))).collect();
    while centers.len() / dim < k {
        let total: f64 = dist.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = n - 1;
        for (i, &d) in dist.iter().enumerate() {
            if target < d {
                chosen = i;
                break;
            }
            target -= d;
        }
        // Guard against rounding landing on a zero-weight tail point.
        if dist[chosen] <= 0.0 {
            chosen = dist.iter().rposition(|&d| d > 0.0).expect("total is positive");
        }
        let c = centers.len() / dim;
        let center = point(chosen).to_vec();
        for i in 0..n {
            if let Some(d) = bounded_distance(point(i), &center, dist[i]) {
                if d < dist[i] {
                    dist[i] = d;
                    assign[i] = c;
                }
            }
        }
        centers.extend(center);
    }
    (centers, assign, dist)
}

/// Runs Lloyd iterations from `centroids`, whose current nearest assignment is
/// `assign`/`dist`. Returns the per-iteration mean distortion log.
fn lloyd(
    points: &[f64],
    dim: usize,
    centroids: &mut [f64],
    assign: &mut [usize],
    dist: &mut [f64],
    params: &LloydParams,
) -> Vec<f64> {
    let n = assign.len();
    let k = centroids.len() / dim;
    let mean = |dist: &[f64]| dist.iter().sum::<f64>() / n as f64;
    let mut log = vec![mean(dist)];
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for _ in 0..params.max_iters {
        let previous = *log.last().expect("log starts non-empty");
        if previous <= 0.0 {
            break;
        }
        sums.fill(0.0);
        counts.fill(0);
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            for (s, p) in sums[a * dim..(a + 1) * dim].iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
                *s += p;
            }
        }
        let mut empty = Vec::new();
        for c in 0..k {
            if counts[c] == 0 {
                empty.push(c);
                continue;
            }
            let inv = counts[c] as f64;
            for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *dst = s / inv;
            }
        }
        if !empty.is_empty() {
            // Re-seed empty clusters at the points worst served by their centroid.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            for (&c, &i) in empty.iter().zip(order.iter().filter(|&&i| dist[i] > 0.0)) {
                centroids[c * dim..(c + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
            }
        }
        for i in 0..n {
            let (a, d) = nearest(&points[i * dim..(i + 1) * dim], centroids, dim, assign[i]);
            assign[i] = a;
            dist[i] = d;
        }
        let current = mean(dist);
        log.push(current);
        if (previous - current) / previous < params.rel_tol {
            break;
        }
    }
    log
}

/// Trains a root codebook of size `k` with default stopping parameters.
pub fn train_root(samples: &[LatentGrid], k: usize, seed: u64) -> Result<Trained, CodebookError> {
    train_root_with(samples, k, seed, &LloydParams::default())
}

/// K-means++ seeding followed by Lloyd iterations over every sample vector.
pub fn train_root_with(samples: &[LatentGrid], k: usize, seed: u64, params: &LloydParams) -> Result<Trained, CodebookError> {
    let (dim, points) = gather(samples)?;
    let n = points.len() / dim;
    if k == 0 || n < k {
        return Err(CodebookError::InsufficientSamples { needed: k.max(1), available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut centroids, mut assign, mut dist) = kmeans_pp(&points, dim, k, &mut rng);
    let log = lloyd(&points, dim, &mut centroids, &mut assign, &mut dist, params);
    let iters = log.len() - 1;
    Ok(Trained {
        codebook: Codebook::from_centroids(dim, &centroids)?.with_lineage(None, iters as u32),
        distortion_log: log,
    })
}

/// Lloyd refinement of `cb` over the sample vectors, starting from its codewords.
pub fn refine(cb: &Codebook, samples: &[LatentGrid], params: &LloydParams) -> Result<Trained, CodebookError> {
    let (dim, points) = gather(samples)?;
    if dim != cb.dim() {
        return Err(CodebookError::DimMismatch {
            codebook: cb.dim(),
            grid: dim,
        });
    }
    let n = points.len() / dim;
    let mut centroids = cb.wide().to_vec();
    let mut assign = vec![0usize; n];
    let mut dist = vec![0.0; n];
    for i in 0..n {
        let (a, d) = nearest(&points[i * dim..(i + 1) * dim], &centroids, dim, 0);
        assign[i] = a;
        dist[i] = d;
    }
    let log = lloyd(&points, dim, &mut centroids, &mut assign, &mut dist, params);
    let iters = (log.len() - 1) as u32;
    Ok(Trained {
        codebook: Codebook::from_centroids(dim, &centroids)?
            .with_lineage(cb.parent_id(), cb.refine_iters() + iters),
        distortion_log: log,
    })
}

/// One ladder member: the clustered codebook and, if refined, its refinement log.
#[derive(Debug, Clone)]
pub struct LadderEntry {
    pub clustered: Trained,
    pub refined: Option<Trained>,
}

impl LadderEntry {
    /// The codebook to use: refined if available.
    pub fn codebook(&self) -> &Codebook {
        self.refined.as_ref().map_or(&self.clustered.codebook, |r| &r.codebook)
    }
}

/// Clusters the root's codewords into each of `sizes` codewords, then
/// optionally refines each child with Lloyd iterations over `samples`.
pub fn cluster_ladder(
    root: &Codebook,
    sizes: &[usize],
    samples: Option<&[LatentGrid]>,
    seed: u64,
    params: &LloydParams,
) -> Result<Vec<LadderEntry>, CodebookError> {
    if sizes.windows(2).any(|w| w[0] <= w[1]) {
        return Err(CodebookError::SizesNotDecreasing);
    }
    if let Some(&size) = sizes.iter().find(|&&s| s >= root.size() || s == 0) {
        return Err(CodebookError::SizeNotBelowRoot { size, root: root.size() });
    }
    let dim = root.dim();
    let points = root.wide();
    sizes
        .iter()
        .map(|&size| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (mut centroids, mut assign, mut dist) = kmeans_pp(points, dim, size, &mut rng);
            let log = lloyd(points, dim, &mut centroids, &mut assign, &mut dist, params);
            let clustered = Trained {
                codebook: Codebook::from_centroids(dim, &centroids)?.with_lineage(Some(root.id()), 0),
                distortion_log: log,
            };
            let refined = samples.map(|s| refine(&clustered.codebook, s, params)).transpose()?;
            Ok(LadderEntry { clustered, refined })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(points: &[Vec<f64>]) -> LatentGrid {
        let dim = points[0].len();
        LatentGrid::new(1, points.len(), dim, points.concat()).unwrap()
    }

    fn non_increasing(log: &[f64]) -> bool {
        log.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    }

    #[test]
    fn nearest_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let centroids: Vec<f64> = (0..40 * 17).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..200 {
            let v: Vec<f64> = (0..17).map(|_| rng.random_range(-1.0..1.0)).collect();
            let start = rng.random_range(0..40);
            let (k, d) = nearest(&v, &centroids, 17, start);
            let all: Vec<f64> = centroids
                .chunks_exact(17)
                .map(|c| v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            let best = all.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(d, best);
            assert_eq!(k, all.iter().position(|&x| x == best).unwrap());
        }
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_distortion() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64 * 0.5]).collect();
        let mut all = pts.clone();
        all.extend(pts.iter().take(5).cloned());
        let t = train_root(&[grid_from(&all)], 12, 3).unwrap();
        assert_eq!(t.final_distortion(), 0.0);
        assert_eq!(t.codebook.size(), 12);
    }

    #[test]
    fn two_separated_clusters_recover_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts = Vec::new();
        let (mut sum_a, mut sum_b) = ([0.0; 2], [0.0; 2]);
        for i in 0..400 {
            let base = if i % 2 == 0 { [-10.0, 0.0] } else { [10.0, 5.0] };
            let p = [base[0] + rng.random_range(-1.0..1.0), base[1] + rng.random_range(-1.0..1.0)];
            let sum = if i % 2 == 0 { &mut sum_a } else { &mut sum_b };
            sum[0] += p[0];
            sum[1] += p[1];
            pts.push(p.to_vec());
        }
        let means = [[sum_a[0] / 200.0, sum_a[1] / 200.0], [sum_b[0] / 200.0, sum_b[1] / 200.0]];
        let t = train_root(&[grid_from(&pts)], 2, 1).unwrap();
        for k in 0..2 {
            let c = t.codebook.codeword(k);
            let close = means.iter().any(|m| (m[0] - c[0]).abs() < 1e-5 && (m[1] - c[1]).abs() < 1e-5);
            assert!(close, "codeword {c:?} vs means {means:?}");
        }
    }

    #[test]
    fn distortion_log_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..600).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let grids = [grid_from(&pts)];
        let t = train_root(&grids, 32, 5).unwrap();
        assert!(t.iterations() > 1);
        assert!(non_increasing(&t.distortion_log), "{:?}", t.distortion_log);
        let r = refine(&t.codebook, &grids, &LloydParams::default()).unwrap();
        assert!(non_increasing(&r.distortion_log));
    }

    #[test]
    fn insufficient_samples() {
        let g = grid_from(&[vec![0.0], vec![1.0]]);
        assert_eq!(
            train_root(&[g], 3, 0).unwrap_err(),
            CodebookError::InsufficientSamples { needed: 3, available: 2 }
        );
        assert!(train_root(&[], 3, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pts: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let a = train_root(&[grid_from(&pts)], 16, 77).unwrap();
        let b = train_root(&[grid_from(&pts)], 16, 77).unwrap();
        assert_eq!(a.codebook, b.codebook);
        assert_eq!(a.distortion_log, b.distortion_log);
    }

    #[test]
    fn ladder_preconditions() {
        let root = Codebook::new(1, (0..16).map(|i| i as f32).collect()).unwrap();
        let p = LloydParams::default();
        assert_eq!(
            cluster_ladder(&root, &[16], None, 0, &p).unwrap_err(),
            CodebookError::SizeNotBelowRoot { size: 16, root: 16 }
        );
        assert_eq!(cluster_ladder(&root, &[4, 8], None, 0, &p).unwrap_err(), CodebookError::SizesNotDecreasing);
        let ladder = cluster_ladder(&root, &[8, 4, 2], None, 0, &p).unwrap();
        let sizes: Vec<usize> = ladder.iter().map(|e| e.codebook().size()).collect();
        assert_eq!(sizes, vec![8, 4, 2]);
        assert!(ladder.iter().all(|e| e.codebook().parent_id() == Some(root.id())));
    }

    #[test]
    fn refinement_does_not_hurt_held_out_distortion_much_and_helps_training() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gen = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| {
                    let c = rng.random_range(0..5) as f64;
                    vec![c + rng.random_range(-0.3..0.3), c * c * 0.2 + rng.random_range(-0.3..0.3)]
                })
                .collect()
        };
        let train = [grid_from(&gen(2000))];
        let held_out = [grid_from(&gen(2000))];
        let root = train_root(&train, 64, 1).unwrap().codebook;
        let ladder = cluster_ladder(&root, &[8, 4], Some(&train), 2, &LloydParams::default()).unwrap();
        for e in &ladder {
            let refined = e.refined.as_ref().unwrap();
            assert!(non_increasing(&refined.distortion_log));
            let before = super::super::distortion(&held_out, &e.clustered.codebook).unwrap();
            let after = super::super::distortion(&held_out, &refined.codebook).unwrap();
            assert!(after <= before, "{after} > {before}");
            assert_eq!(refined.codebook.parent_id(), Some(root.id()));
            assert_eq!(refined.codebook.refine_iters() as usize, refined.iterations());
        }
    }
}
