//! Summaries of a finished chain: density estimates, cluster counts,
//! co-clustering, Binder point estimate and MCMC diagnostics.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::AlgorithmState;
use crate::numeric::{cast, log_mean_exp, Real};

/// Distinct allocation labels per record.
pub fn num_clusters_chain(states: &[AlgorithmState]) -> Vec<usize> {
    states.iter().map(|s| num_distinct(&s.cluster_allocs)).collect()
}

fn num_distinct(allocs: &[usize]) -> usize {
    let mut seen: Vec<usize> = allocs.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Relabels a partition by order of first appearance.
pub fn canonical_labels(allocs: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    allocs
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Posterior similarity matrix: fraction of records in which i and j share
/// a cluster.
pub fn similarity_matrix(states: &[AlgorithmState]) -> Result<DMatrix<f64>> {
    let first = states.first().ok_or(Error::EmptyChain)?;
    let n = first.num_data();
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for s in states {
        if s.num_data() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.num_data(),
            });
        }
        for (_, members) in groups(&s.cluster_allocs) {
            for &i in &members {
                for &j in &members {
                    counts[(i, j)] += 1.0;
                }
            }
        }
    }
    Ok(counts / states.len() as f64)
}

fn groups(allocs: &[usize]) -> HashMap<usize, Vec<usize>> {
    let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &c) in allocs.iter().enumerate() {
        out.entry(c).or_default().push(i);
    }
    out
}

/// Expected Binder loss with unit costs:
/// Σ_{i<j} 1{c_i = c_j}(1 − π_ij) + 1{c_i ≠ c_j} π_ij.
pub fn binder_loss(allocs: &[usize], psm: &DMatrix<f64>) -> f64 {
    let n = allocs.len();
    let mut apart = 0.0;
    for j in 0..n {
        for i in 0..j {
            apart += psm[(i, j)];
        }
    }
    // Pairs placed together swap π for 1 − π.
    let mut together = 0.0;
    for (_, members) in groups(allocs) {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[..a] {
                together += 1.0 - 2.0 * psm[(i, j)];
            }
        }
    }
    apart + together
}

/// Visited partition with the smallest expected Binder loss; ties go to the
/// earliest record. Returns the allocations of that record (canonically
/// relabeled) and its loss.
pub fn binder_best_clustering(states: &[AlgorithmState]) -> Result<(Vec<usize>, f64)> {
    let psm = similarity_matrix(states)?;
    let mut seen = std::collections::HashSet::new();
    let mut candidates = Vec::new();
    for s in states {
        let labels = canonical_labels(&s.cluster_allocs);
        if !seen.contains(&labels) {
            seen.insert(labels.clone());
            candidates.push(labels);
        }
    }
    let losses: Vec<f64> = candidates.par_iter().map(|c| binder_loss(c, &psm)).collect();
    let mut best = 0;
    for (r, &loss) in losses.iter().enumerate() {
        if loss < losses[best] {
            best = r;
        }
    }
    Ok((candidates.swap_remove(best), losses[best]))
}

fn autocovariance<T: Real>(x: &[T], mean: T, lag: usize) -> T {
    let t = x.len();
    let mut acc = T::zero();
    for s in 0..t - lag {
        acc = acc + (x[s] - mean) * (x[s + lag] - mean);
    }
    acc / cast::<T>(t as f64)
}

fn mean<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a + b) / cast::<T>(x.len() as f64)
}

/// Biased sample autocorrelation for lags 0..=max_lag (capped at T − 1).
/// A constant series has ρ(0) = 1 and ρ(ℓ) = 0 beyond.
pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    if x.is_empty() {
        return Vec::new();
    }
    let max_lag = max_lag.min(x.len() - 1);
    let m = mean(x);
    let g0 = autocovariance(x, m, 0);
    if g0 <= T::zero() {
        let mut out = vec![T::zero(); max_lag + 1];
        out[0] = T::one();
        return out;
    }
    (0..=max_lag).map(|l| autocovariance(x, m, l) / g0).collect()
}

/// Effective sample size T / (1 + 2 Σ ρ(ℓ)) with the sum truncated by
/// Geyer's initial monotone positive sequence, clamped to (0, T]. A
/// constant series has ESS T.
pub fn ess<T: Real>(x: &[T]) -> T {
    let t = x.len();
    let tt = cast::<T>(t as f64);
    if t < 2 {
        return tt;
    }
    let m = mean(x);
    let g0 = autocovariance(x, m, 0);
    if g0 <= T::zero() {
        return tt;
    }
    let rho = |l: usize| if l < t { autocovariance(x, m, l) / g0 } else { T::zero() };
    let mut sum = T::zero();
    let mut prev = T::infinity();
    let mut k = 0;
    while 2 * k < t {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= T::zero() {
            break;
        }
        let pair = pair.min(prev);
        sum = sum + pair;
        prev = pair;
        k += 1;
    }
    let tau = cast::<T>(2.0) * sum - T::one();
    let out = tt / tau;
    if !(out > T::zero()) {
        return T::min_positive_value();
    }
    out.min(tt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityEstimator {
    /// log of the mean of the per-record densities.
    #[default]
    MeanDensity,
    /// mean of the per-record log densities.
    ExpMeanLog,
}

/// Pointwise log of the posterior mean density from per-record log
/// densities (records × grid).
pub fn mean_log_density(lpdf: &[Vec<f64>]) -> Result<Vec<f64>> {
    summarize_log_density(lpdf, DensityEstimator::MeanDensity)
}

pub fn summarize_log_density(lpdf: &[Vec<f64>], estimator: DensityEstimator) -> Result<Vec<f64>> {
    let first = lpdf.first().ok_or(Error::EmptyChain)?;
    let g = first.len();
    if let Some(bad) = lpdf.iter().find(|r| r.len() != g) {
        return Err(Error::DimensionMismatch {
            expected: g,
            found: bad.len(),
        });
    }
    let mut column = vec![0.0; lpdf.len()];
    Ok((0..g)
        .map(|j| {
            for (c, row) in column.iter_mut().zip(lpdf) {
                *c = row[j];
            }
            match estimator {
                DensityEstimator::MeanDensity => log_mean_exp(&column),
                DensityEstimator::ExpMeanLog => column.iter().sum::<f64>() / column.len() as f64,
            }
        })
        .collect())
}

/// Adjusted Rand index between two partitions of the same data.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sa: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sb: f64 = cols.values().map(|&v| choose2(v)).sum();
    let total = choose2(a.len() as f64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
