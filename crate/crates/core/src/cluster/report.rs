use serde::Serialize;

use crate::error::{Error, Result};

/// Plurality cluster of a benchmark set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainCluster {
    pub cluster: usize,
    /// Share of benchmark documents in `cluster`, rounded to 4 decimals.
    pub share: f64,
    pub count: usize,
    pub total: usize,
}

/// The cluster receiving the most benchmark assignments (lowest index on ties).
pub fn domain_cluster(assignments: &[usize], k: usize) -> Result<DomainCluster> {
    if assignments.is_empty() {
        return Err(Error::Argument("no benchmark assignments".into()));
    }
    let counts = count(assignments, k)?;
    let (cluster, &best) = counts
        .iter()
        .enumerate()
        .fold((0, &0), |acc, (j, c)| if *c > *acc.1 { (j, c) } else { acc });
    let share = best as f64 / assignments.len() as f64;
    Ok(DomainCluster {
        cluster,
        share: (share * 1e4).round() / 1e4,
        count: best,
        total: assignments.len(),
    })
}

fn count(assignments: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for &a in assignments {
        *counts
            .get_mut(a)
            .ok_or_else(|| Error::Argument(format!("cluster index {a} out of range for k = {k}")))? += 1;
    }
    Ok(counts)
}

/// Per-cluster document counts and token totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterHistogram {
    pub counts: Vec<u64>,
    pub count_shares: Vec<f64>,
    /// Present when weights were supplied.
    pub tokens: Option<Vec<f64>>,
    pub token_shares: Option<Vec<f64>>,
}

fn shares(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    values.iter().map(|v| v / total).collect()
}

pub fn cluster_histogram(assignments: &[usize], k: usize, weights: Option<&[f64]>) -> Result<ClusterHistogram> {
    if assignments.is_empty() {
        return Err(Error::Argument("no assignments".into()));
    }
    let counts: Vec<u64> = count(assignments, k)?.into_iter().map(|c| c as u64).collect();
    let count_shares = shares(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());

    let (tokens, token_shares) = match weights {
        None => (None, None),
        Some(w) => {
            if w.len() != assignments.len() {
                return Err(Error::Validation(format!(
                    "{} weights for {} assignments",
                    w.len(),
                    assignments.len()
                )));
            }
            if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::Validation(format!("invalid weight {bad}")));
            }
            let mut tokens = vec![0.0; k];
            for (&a, &x) in assignments.iter().zip(w) {
                tokens[a] += x;
            }
            if tokens.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Validation("weights sum to zero".into()));
            }
            let s = shares(&tokens);
            (Some(tokens), Some(s))
        }
    };
    Ok(ClusterHistogram {
        counts,
        count_shares,
        tokens,
        token_shares,
    })
}
