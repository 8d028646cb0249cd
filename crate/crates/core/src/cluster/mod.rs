//! Domain identification by k-means over precomputed document embeddings.

mod format;
mod kmeans;
mod report;

use std::collections::HashSet;

pub use format::{read_embeddings, read_ids, read_model, write_embeddings, write_model};
pub use kmeans::{assign, kmeans_fit, ClusterModel, KMeansParams};
pub use report::{cluster_histogram, domain_cluster, ClusterHistogram, DomainCluster};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One `dim`-dimensional vector per document, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    ids: Vec<u64>,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(ids: Vec<u64>, dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("embedding dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Validation(format!(
                "{} ids with dimension {dim} need {} values, got {}",
                ids.len(),
                ids.len() * dim,
                data.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Validation(format!("duplicate embedding id {dup}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value in embedding row {} (id {})",
                pos / dim,
                ids[pos / dim]
            )));
        }
        Ok(Self { ids, dim, data })
    }

    /// Builds a matrix from rows, numbering documents `0..rows.len()`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("rows have different dimensions".into()));
        }
        Self::new(
            (0..rows.len() as u64).collect(),
            dim,
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

#[inline]
pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}
