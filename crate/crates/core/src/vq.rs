//! k-means codebooks and discrete token sequences.
//!
//! Fitting uses greedy k-means++ seeding followed by Lloyd iterations,
//! repeated from several seedings with the lowest-inertia run kept.
//! Every reduction over frames is computed per fixed-size chunk and then
//! combined by a pairwise tree, so the fitted codebook is bit-identical
//! whether the assignment step runs on one thread or many.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSource};

/// Default codebook size.
pub const DEFAULT_K: usize = 200;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
/// Independent seedings per fit. A single k-means++ start lands in a poor
/// local optimum often enough to matter even on small 2-D problems.
pub const DEFAULT_N_INIT: usize = 10;

/// Rows per reduction chunk. Changing it changes the floating-point
/// summation order and therefore the exact output of a fit.
const CHUNK_ROWS: usize = 256;

/// Frame shift attached to matrices rebuilt from tokens.
const TOKEN_FRAME_SHIFT_S: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    dim: usize,
    centroids: Vec<f32>,
    language: String,
    inertia: f64,
    seed: u64,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, centroids: Vec<f32>, language: String, inertia: f64, seed: u64) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "codebook needs K >= 1 and D >= 1, got K={k}, D={dim}"
            )));
        }
        if k.checked_mul(dim) != Some(centroids.len()) {
            return Err(Error::ShapeMismatch { rows: k, cols: dim, len: centroids.len() });
        }
        if let Some(i) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i / dim, col: i % dim });
        }
        if !(inertia >= 0.0 && inertia.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("inertia must be finite and >= 0, got {inertia}")));
        }
        Ok(Self { k, dim, centroids, language, inertia, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn centroid(&self, index: usize) -> &[f32] {
        &self.centroids[index * self.dim..(index + 1) * self.dim]
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, frame: &[f32]) -> (u32, f64) {
        let mut best = (0u32, f64::INFINITY);
        for (i, c) in self.centroids.chunks_exact(self.dim).enumerate() {
            let d: f64 = frame
                .iter()
                .zip(c)
                .map(|(&x, &y)| {
                    let diff = x as f64 - y as f64;
                    diff * diff
                })
                .sum();
            if d < best.1 {
                best = (i as u32, d);
            }
        }
        best
    }

    pub fn encode(&self, m: &FeatureMatrix, utt_id: &str) -> Result<TokenSequence> {
        if m.cols() != self.dim {
            return Err(Error::DimensionMismatch(m.cols(), self.dim));
        }
        let tokens = m.iter_rows().map(|row| self.nearest(row).0).collect();
        Ok(TokenSequence { tokens, k: self.k, utt_id: String::from(utt_id) })
    }

    /// Replace each token by its centroid.
    pub fn decode(&self, seq: &TokenSequence) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(seq.len() * self.dim);
        for &t in &seq.tokens {
            if t as usize >= self.k {
                return Err(Error::TokenOutOfRange { token: t, k: self.k });
            }
            values.extend_from_slice(self.centroid(t as usize));
        }
        FeatureMatrix::with_rows_allowed_empty(seq.len(), self.dim, values, FeatureSource::SslLayer9, TOKEN_FRAME_SHIFT_S)
    }
}

/// Discrete prosody tokens for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<u32>,
    k: usize,
    utt_id: String,
}

impl TokenSequence {
    pub fn new(tokens: Vec<u32>, k: usize, utt_id: String) -> Result<Self> {
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= k) {
            return Err(Error::TokenOutOfRange { token: t, k });
        }
        Ok(Self { tokens, k, utt_id })
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Number of seeded runs; the one with the lowest final inertia wins.
    pub n_init: usize,
    pub language: String,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            n_init: DEFAULT_N_INIT,
            language: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Which of the `n_init` runs was kept.
    pub run: usize,
    /// Lloyd update steps performed in the kept run.
    pub iterations: usize,
    /// Inertia after the initial assignment and after every update step.
    pub inertia_trace: Vec<f64>,
    pub converged: bool,
}

pub fn kmeans_fit(data: &[&FeatureMatrix], cfg: &KMeansConfig) -> Result<KMeansFit> {
    kmeans_fit_observed(data, cfg, |_, _, _| {})
}

/// [`kmeans_fit`] with a hook called with `(run, step, inertia)` after every
/// assignment pass; step 0 is the assignment to the seeded centroids.
pub fn kmeans_fit_observed<F>(data: &[&FeatureMatrix], cfg: &KMeansConfig, mut observer: F) -> Result<KMeansFit>
where
    F: FnMut(usize, usize, f64),
{
    let k = cfg.k;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !(cfg.rel_tol >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("rel_tol must be >= 0, got {}", cfg.rel_tol)));
    }
    let points = Points::stack(data)?;
    if points.n < k {
        return Err(Error::InsufficientData { n: points.n, k });
    }
    if cfg.n_init == 0 {
        return Err(Error::InvalidParameter("n_init must be at least 1".into()));
    }

    // One generator drives every run in sequence, so the result depends
    // only on the seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Run, usize)> = None;
    for r in 0..cfg.n_init {
        let run = lloyd(&points, k, cfg, &mut rng, |step, v| observer(r, step, v));
        if best.as_ref().is_none_or(|(b, _)| run.inertia < b.inertia) {
            best = Some((run, r));
        }
    }
    let (run, index) = best.expect("n_init >= 1");

    let codebook = Codebook::new(
        k,
        points.dim,
        run.centroids.iter().map(|&c| c as f32).collect(),
        cfg.language.clone(),
        run.inertia,
        cfg.seed,
    )?;
    Ok(KMeansFit {
        codebook,
        run: index,
        iterations: run.iterations,
        inertia_trace: run.trace,
        converged: run.converged,
    })
}

struct Run {
    centroids: Vec<f64>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
    converged: bool,
}

fn lloyd(points: &Points, k: usize, cfg: &KMeansConfig, rng: &mut ChaCha8Rng, mut observer: impl FnMut(usize, f64)) -> Run {
    let mut centroids = kmeans_plus_plus(points, k, rng);
    let mut assign = points.assign(&centroids, k);
    observer(0, assign.inertia);
    let mut trace = vec![assign.inertia];
    let mut iterations = 0;
    let mut converged = assign.inertia == 0.0;

    while !converged && iterations < cfg.max_iters {
        let next = points.update(&assign, &centroids, k);
        let next_assign = points.assign(&next, k);
        iterations += 1;
        observer(iterations, next_assign.inertia);
        trace.push(next_assign.inertia);
        let prev = assign.inertia;
        centroids = next;
        assign = next_assign;
        converged = assign.inertia == 0.0 || prev - assign.inertia <= cfg.rel_tol * prev;
    }
    Run { centroids, inertia: assign.inertia, iterations, trace, converged }
}

struct Points {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

struct Assignment {
    labels: Vec<u32>,
    dists: Vec<f64>,
    inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Combine partial results pairwise, left to right, until one remains.
fn tree_reduce<T>(mut items: Vec<T>, mut combine: impl FnMut(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut iter = items.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

#[cfg(feature = "parallel")]
fn map_chunks<R: Send>(values: &[f64], chunk: usize, f: impl Fn(usize, &[f64]) -> R + Sync) -> Vec<R> {
    use rayon::prelude::*;
    values.par_chunks(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<R>(values: &[f64], chunk: usize, f: impl Fn(usize, &[f64]) -> R) -> Vec<R> {
    values.chunks(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
}

impl Points {
    fn stack(data: &[&FeatureMatrix]) -> Result<Self> {
        let dim = match data.first() {
            Some(m) => m.cols(),
            None => return Err(Error::InsufficientData { n: 0, k: 1 }),
        };
        let mut values = Vec::with_capacity(data.iter().map(|m| m.values().len()).sum());
        for m in data {
            if m.cols() != dim {
                return Err(Error::DimensionMismatch(m.cols(), dim));
            }
            values.extend(m.values().iter().map(|&v| v as f64));
        }
        Ok(Self { n: values.len() / dim, dim, values })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn chunk_len(&self) -> usize {
        CHUNK_ROWS * self.dim
    }

    fn nearest(&self, point: &[f64], centroids: &[f64]) -> (u32, f64) {
        let mut best = (0u32, f64::INFINITY);
        for (c, centroid) in centroids.chunks_exact(self.dim).enumerate() {
            let d = sq_dist(point, centroid);
            if d < best.1 {
                best = (c as u32, d);
            }
        }
        best
    }

    fn assign(&self, centroids: &[f64], _k: usize) -> Assignment {
        let parts = map_chunks(&self.values, self.chunk_len(), |_, chunk| {
            let mut labels = Vec::with_capacity(chunk.len() / self.dim);
            let mut dists = Vec::with_capacity(chunk.len() / self.dim);
            for p in chunk.chunks_exact(self.dim) {
                let (l, d) = self.nearest(p, centroids);
                labels.push(l);
                dists.push(d);
            }
            let sum: f64 = dists.iter().sum();
            (labels, dists, sum)
        });
        let mut labels = Vec::with_capacity(self.n);
        let mut dists = Vec::with_capacity(self.n);
        let mut sums = Vec::with_capacity(parts.len());
        for (l, d, s) in parts {
            labels.extend(l);
            dists.extend(d);
            sums.push(s);
        }
        let inertia = tree_reduce(sums, |a, b| a + b).unwrap_or(0.0);
        Assignment { labels, dists, inertia }
    }

    /// Cluster means for the current assignment. Empty clusters take the
    /// points farthest from their assigned centroids, farthest first.
    fn update(&self, assign: &Assignment, old: &[f64], k: usize) -> Vec<f64> {
        let dim = self.dim;
        let parts = map_chunks(&self.values, self.chunk_len(), |ci, chunk| {
            let mut sums = vec![0.0; k * dim];
            let mut counts = vec![0usize; k];
            for (j, p) in chunk.chunks_exact(dim).enumerate() {
                let label = assign.labels[ci * CHUNK_ROWS + j] as usize;
                counts[label] += 1;
                sums[label * dim..(label + 1) * dim].iter_mut().zip(p).for_each(|(s, x)| *s += x);
            }
            (sums, counts)
        });
        let (sums, counts) = tree_reduce(parts, |(mut sa, mut ca), (sb, cb)| {
            sa.iter_mut().zip(sb).for_each(|(a, b)| *a += b);
            ca.iter_mut().zip(cb).for_each(|(a, b)| *a += b);
            (sa, ca)
        })
        .expect("at least one chunk");

        let mut centroids = old.to_vec();
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
            let mut order: Vec<usize> = (0..self.n).collect();
            // farthest first, lower index on equal distance
            order.sort_by(|&a, &b| assign.dists[b].total_cmp(&assign.dists[a]).then(a.cmp(&b)));
            for (c, &p) in empty.iter().zip(&order) {
                centroids[c * dim..(c + 1) * dim].copy_from_slice(self.row(p));
            }
        }
        centroids
    }
}

fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

fn uniform_unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Greedy k-means++ seeding: each new center is the best of
/// `2 + floor(ln k)` candidates drawn with probability proportional to the
/// squared distance to the closest existing center.
fn kmeans_plus_plus(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = points.dim;
    let trials = 2 + libm::log(k as f64) as usize;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = uniform_index(rng, points.n);
    centroids.extend_from_slice(points.row(first));
    let mut closest: Vec<f64> = (0..points.n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    let mut potential = chunked_sum(&closest);

    for _ in 1..k {
        if potential <= 0.0 {
            // every point already coincides with a center
            let idx = uniform_index(rng, points.n);
            centroids.extend_from_slice(points.row(idx));
            continue;
        }
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..trials {
            let target = uniform_unit(rng) * potential;
            let mut acc = 0.0;
            let mut candidate = points.n - 1;
            for (i, d) in closest.iter().enumerate() {
                acc += d;
                if acc > target {
                    candidate = i;
                    break;
                }
            }
            let row = points.row(candidate);
            let updated: Vec<f64> =
                closest.iter().enumerate().map(|(i, &d)| d.min(sq_dist(points.row(i), row))).collect();
            let pot = chunked_sum(&updated);
            if best.as_ref().is_none_or(|b| pot < b.1) {
                best = Some((candidate, pot, updated));
            }
        }
        let (idx, pot, updated) = best.expect("at least one trial");
        centroids.extend_from_slice(points.row(idx));
        closest = updated;
        potential = pot;
    }
    centroids
}

fn chunked_sum(values: &[f64]) -> f64 {
    let sums: Vec<f64> = values.chunks(CHUNK_ROWS).map(|c| c.iter().sum()).collect();
    tree_reduce(sums, |a, b| a + b).unwrap_or(0.0)
}
