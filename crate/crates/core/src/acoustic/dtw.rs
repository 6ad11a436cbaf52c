//! Dynamic time warping with the symmetric three-step pattern.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDistance {
    Euclidean,
    SquaredEuclidean,
}

impl FrameDistance {
    pub fn between(self, a: &[f32], b: &[f32]) -> f64 {
        let sq: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum();
        match self {
            FrameDistance::Euclidean => libm::sqrt(sq),
            FrameDistance::SquaredEuclidean => sq,
        }
    }
}

/// A monotone path from `(0, 0)` to `(n - 1, m - 1)` and its summed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub path: Vec<(usize, usize)>,
    pub cost: f64,
}

#[derive(Clone, Copy)]
enum Step {
    Start,
    Diagonal,
    Down,
    Right,
}

/// DTW over an `n x m` grid with local cost `cost(i, j)`. Steps are
/// `(1,1)`, `(1,0)` and `(0,1)`; equal predecessors resolve in that order.
pub fn dtw_align_by(n: usize, m: usize, mut cost: impl FnMut(usize, usize) -> f64) -> Result<Alignment> {
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix { rows: n.min(m), cols: n.max(m) });
    }
    let mut acc = vec![0.0f64; n * m];
    let mut back = vec![Step::Start; n * m];
    for i in 0..n {
        for j in 0..m {
            let local = cost(i, j);
            let (prev, step) = if i == 0 && j == 0 {
                (0.0, Step::Start)
            } else {
                let mut best = (f64::INFINITY, Step::Start);
                if i > 0 && j > 0 {
                    best = (acc[(i - 1) * m + j - 1], Step::Diagonal);
                }
                if i > 0 && acc[(i - 1) * m + j] < best.0 {
                    best = (acc[(i - 1) * m + j], Step::Down);
                }
                if j > 0 && acc[i * m + j - 1] < best.0 {
                    best = (acc[i * m + j - 1], Step::Right);
                }
                best
            };
            acc[i * m + j] = prev + local;
            back[i * m + j] = step;
        }
    }

    let mut path = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (n - 1, m - 1);
    loop {
        path.push((i, j));
        match back[i * m + j] {
            Step::Start => break,
            Step::Diagonal => {
                i -= 1;
                j -= 1;
            }
            Step::Down => i -= 1,
            Step::Right => j -= 1,
        }
    }
    path.reverse();
    Ok(Alignment { path, cost: acc[n * m - 1] })
}

pub fn dtw_align(a: &FeatureMatrix, b: &FeatureMatrix, dist: FrameDistance) -> Result<Alignment> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(a.cols(), b.cols()));
    }
    dtw_align_by(a.rows(), b.rows(), |i, j| dist.between(a.row(i), b.row(j)))
}
