use rayon::prelude::*;
use serde::Serialize;

use super::{squared_distance, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Hyperparameters of [`kmeans_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift, relative
    /// to the mean per-dimension variance of the data.
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest final inertia wins.
    pub n_init: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-4,
            n_init: 10,
        }
    }
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self::new(32, 0)
    }
}

/// Fitted centroids plus the hyperparameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub params: KMeansParams,
    pub dim: usize,
    /// `k * dim`, row-major.
    pub centroids: Vec<T>,
    /// Sum of squared distances to the assigned centroid at convergence.
    pub inertia: T,
    /// Lloyd iterations of the selected run.
    pub iterations: usize,
    /// Inertia after each assignment step of the selected run.
    pub inertia_history: Vec<T>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn centroid(&self, j: usize) -> &[T] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the nearest centroid and its squared distance. Ties go to
    /// the lowest index.
    pub fn nearest(&self, point: &[T]) -> (usize, T) {
        nearest(&self.centroids, self.dim, point)
    }
}

fn nearest<T: Scalar>(centroids: &[T], dim: usize, point: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all<T: Scalar>(emb: &EmbeddingMatrix<T>, centroids: &[T]) -> Vec<(usize, T)> {
    let dim = emb.dim();
    (0..emb.len())
        .into_par_iter()
        .map(|i| nearest(centroids, dim, emb.row(i)))
        .collect()
}

fn total<T: Scalar>(assignment: &[(usize, T)]) -> T {
    assignment.iter().fold(T::zero(), |acc, &(_, d)| acc + d)
}

/// k-means++ seeding: the first centroid is a uniform point, each further
/// one is drawn with probability proportional to its squared distance from
/// the nearest chosen centroid.
fn kmeans_plus_plus<T: Scalar>(emb: &EmbeddingMatrix<T>, k: usize, rng: &mut SplitMix64) -> Vec<T> {
    let n = emb.len();
    let mut centroids = Vec::with_capacity(k * emb.dim());
    centroids.extend_from_slice(emb.row(rng.index(n)));
    let mut d2: Vec<f64> = emb
        .rows()
        .map(|r| squared_distance(r, &centroids[..]).to_f64().unwrap_or(0.0))
        .collect();
    for _ in 1..k {
        let sum: f64 = d2.iter().sum();
        let pick = if sum > 0.0 {
            let target = rng.next_f64() * sum;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1))
        } else {
            rng.index(n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(emb.row(pick));
        let added = &centroids[start..];
        for (d, r) in d2.iter_mut().zip(emb.rows()) {
            let nd = squared_distance(r, added).to_f64().unwrap_or(0.0);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Mean per-dimension variance, the scale of the relative tolerance.
fn mean_variance<T: Scalar>(emb: &EmbeddingMatrix<T>) -> f64 {
    let n = emb.len() as f64;
    let dim = emb.dim();
    let mut total = 0.0;
    for j in 0..dim {
        let mean = emb.rows().map(|r| r[j].to_f64().unwrap_or(0.0)).sum::<f64>() / n;
        total += emb
            .rows()
            .map(|r| {
                let d = r[j].to_f64().unwrap_or(0.0) - mean;
                d * d
            })
            .sum::<f64>()
            / n;
    }
    total / dim as f64
}

struct Run<T> {
    centroids: Vec<T>,
    inertia: T,
    iterations: usize,
    history: Vec<T>,
}

fn lloyd<T: Scalar>(emb: &EmbeddingMatrix<T>, params: &KMeansParams, tol_abs: f64, rng: &mut SplitMix64) -> Run<T> {
    let (k, dim) = (params.k, emb.dim());
    let mut centroids = kmeans_plus_plus(emb, k, rng);
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let mut assignment = assign_all(emb, &centroids);
        history.push(total(&assignment));

        // Per-cluster sums accumulated in point order.
        let mut sums = vec![T::zero(); k * dim];
        let mut counts = vec![0usize; k];
        for (row, &(j, _)) in emb.rows().zip(&assignment) {
            counts[j] += 1;
            for (s, &x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(row) {
                *s = *s + x;
            }
        }

        let mut next = vec![T::zero(); k * dim];
        for j in 0..k {
            let target = &mut next[j * dim..(j + 1) * dim];
            if counts[j] > 0 {
                let c = T::from_usize(counts[j]).expect("count fits scalar");
                for (t, &s) in target.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *t = s / c;
                }
            } else {
                // Empty cluster: move it onto the point farthest from its
                // own centroid. That point is then excluded from later repairs.
                let mut far = 0;
                for (i, &(_, d)) in assignment.iter().enumerate() {
                    if d > assignment[far].1 {
                        far = i;
                    }
                }
                assignment[far].1 = T::neg_infinity();
                target.copy_from_slice(emb.row(far));
            }
        }

        let shift = centroids
            .chunks_exact(dim)
            .zip(next.chunks_exact(dim))
            .map(|(a, b)| squared_distance(a, b).to_f64().unwrap_or(f64::INFINITY))
            .sum::<f64>();
        centroids = next;
        if shift <= tol_abs {
            break;
        }
    }

    let inertia = total(&assign_all(emb, &centroids));
    if history.last() != Some(&inertia) {
        history.push(inertia);
    }
    Run {
        centroids,
        inertia,
        iterations,
        history,
    }
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Runs `params.n_init` restarts from one seeded generator and keeps the
/// run with the lowest final inertia (earliest on ties). Each run stops when
/// the summed squared centroid shift falls to `tol` times the mean
/// per-dimension data variance, or after `max_iter` iterations.
pub fn kmeans_fit<T: Scalar>(emb: &EmbeddingMatrix<T>, params: KMeansParams) -> Result<ClusterModel<T>> {
    if params.k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if emb.len() < params.k {
        return Err(Error::Argument(format!(
            "k = {} exceeds the number of points ({})",
            params.k,
            emb.len()
        )));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::Argument(format!("tol must be positive, got {}", params.tol)));
    }
    if params.max_iter == 0 || params.n_init == 0 {
        return Err(Error::Argument("max_iter and n_init must be positive".into()));
    }

    let tol_abs = params.tol * mean_variance(emb);
    let mut rng = SplitMix64::new(params.seed);
    let mut best: Option<Run<T>> = None;
    for _ in 0..params.n_init {
        let run = lloyd(emb, &params, tol_abs, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("n_init >= 1");
    Ok(ClusterModel {
        params,
        dim: emb.dim(),
        centroids: best.centroids,
        inertia: best.inertia,
        iterations: best.iterations,
        inertia_history: best.history,
    })
}

/// Nearest-centroid assignment of every document, in input order.
pub fn assign<T: Scalar>(emb: &EmbeddingMatrix<T>, model: &ClusterModel<T>) -> Result<Vec<(u64, usize)>> {
    if emb.dim() != model.dim {
        return Err(Error::Argument(format!(
            "embedding dimension {} does not match model dimension {}",
            emb.dim(),
            model.dim
        )));
    }
    Ok(emb
        .ids()
        .iter()
        .zip(assign_all(emb, &model.centroids))
        .map(|(&id, (j, _))| (id, j))
        .collect())
}
