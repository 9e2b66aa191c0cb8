//! MCMC drivers: Neal's algorithms 2, 3 and 8 for marginal mixings and the
//! blocked Gibbs sampler for truncated stick-breaking.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::config::{AlgoParams, AlgorithmId};
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::io::{AlgorithmState, ClusterState, Collector, DataMatrix};
use crate::mixing::Mixing;
use crate::numeric::log_sum_exp;
use crate::McmcRng;

/// Draws an index from unnormalized log weights. The weights are
/// overwritten with the normalized probabilities.
pub fn sample_log_weights<R: Rng + ?Sized>(log_weights: &mut [f64], rng: &mut R) -> Result<usize> {
    let total = log_sum_exp(log_weights);
    if !total.is_finite() {
        return Err(Error::Numerical(format!("allocation weights do not normalize (log total {total})")));
    }
    for w in log_weights.iter_mut() {
        *w = (*w - total).exp();
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in log_weights.iter().enumerate() {
        if p > 0.0 {
            last = j;
        }
        acc += p;
        if u < acc {
            return Ok(j);
        }
    }
    Ok(last)
}

/// Runs `sample_full_cond` on every hierarchy in parallel. Hierarchy `h`
/// draws from stream `h` of a generator seeded by one draw from `rng`, so
/// the result does not depend on the thread schedule.
pub fn refresh_parallel(clusters: &mut [Box<dyn Hierarchy>], rng: &mut McmcRng) -> Result<()> {
    let seed: u64 = rng.random();
    clusters.par_iter_mut().enumerate().try_for_each(|(h, cluster)| {
        let mut sub = McmcRng::seed_from_u64(seed);
        sub.set_stream(h as u64);
        cluster.sample_full_cond(&mut sub)
    })
}

pub struct Sampler {
    algo: AlgorithmId,
    template: Box<dyn Hierarchy>,
    mixing: Box<dyn Mixing>,
    clusters: Vec<Box<dyn Hierarchy>>,
    aux: Vec<Box<dyn Hierarchy>>,
    allocs: Vec<usize>,
    data: DataMatrix,
    iteration: u64,
}

impl std::fmt::Debug for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sampler")
            .field("algo", &self.algo)
            .field("mixing", &self.mixing)
            .field("num_clusters", &self.clusters.len())
            .field("iteration", &self.iteration)
            .finish()
    }
}

impl Sampler {
    /// Validates the combination, then initializes `init_num_clusters`
    /// clusters with parameters drawn from the prior and data assigned in
    /// stripes (datum i goes to cluster i mod k).
    pub fn new(
        algo: AlgorithmId,
        template: Box<dyn Hierarchy>,
        mixing: Box<dyn Mixing>,
        data: DataMatrix,
        init_num_clusters: usize,
        n_aux: usize,
        rng: &mut McmcRng,
    ) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::InvalidParameter("data set is empty".into()));
        }
        if data.cols() != template.dim() {
            return Err(Error::DimensionMismatch {
                expected: template.dim(),
                found: data.cols(),
            });
        }
        if init_num_clusters == 0 {
            return Err(Error::InvalidParameter("init_num_clusters must be at least 1".into()));
        }
        match algo {
            AlgorithmId::Neal2 | AlgorithmId::Neal3 => {
                if !template.is_conjugate() {
                    return Err(Error::Config(format!("{algo} requires a conjugate hierarchy")));
                }
            }
            AlgorithmId::Neal8 => {
                if n_aux == 0 {
                    return Err(Error::Config("Neal8 needs at least one auxiliary block".into()));
                }
            }
            AlgorithmId::BlockedGibbs => {}
        }
        let num_components = if algo == AlgorithmId::BlockedGibbs {
            mixing
                .num_components()
                .filter(|_| mixing.is_conditional())
                .ok_or_else(|| Error::Config("BlockedGibbs requires a conditional mixing".into()))?
        } else {
            if mixing.is_conditional() {
                return Err(Error::Config(format!("{algo} requires a marginal mixing (DP or PY)")));
            }
            0
        };

        let n = data.rows();
        let k0 = if algo == AlgorithmId::BlockedGibbs {
            init_num_clusters.min(num_components)
        } else {
            init_num_clusters.min(n)
        };
        let total = if algo == AlgorithmId::BlockedGibbs { num_components } else { k0 };
        let mut clusters = Vec::with_capacity(total);
        for _ in 0..total {
            let mut h = template.clone_box();
            h.clear_data();
            h.sample_prior(rng)?;
            clusters.push(h);
        }
        let mut allocs = Vec::with_capacity(n);
        for (i, y) in data.iter_rows().enumerate() {
            let c = i % k0;
            clusters[c].add_datum(i, y)?;
            allocs.push(c);
        }
        let aux = if algo == AlgorithmId::Neal8 {
            (0..n_aux).map(|_| template.clone_box()).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            algo,
            template,
            mixing,
            clusters,
            aux,
            allocs,
            data,
            iteration: 0,
        })
    }

    pub fn from_params(
        params: &AlgoParams,
        template: Box<dyn Hierarchy>,
        mixing: Box<dyn Mixing>,
        data: DataMatrix,
        rng: &mut McmcRng,
    ) -> Result<Self> {
        Self::new(
            params.algo_id,
            template,
            mixing,
            data,
            params.init_num_clusters,
            params.neal8_n_aux,
            rng,
        )
    }

    pub fn algo(&self) -> AlgorithmId {
        self.algo
    }

    pub fn clusters(&self) -> &[Box<dyn Hierarchy>] {
        &self.clusters
    }

    pub fn allocs(&self) -> &[usize] {
        &self.allocs
    }

    pub fn mixing(&self) -> &dyn Mixing {
        self.mixing.as_ref()
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Clusters holding data.
    pub fn num_clusters(&self) -> usize {
        self.clusters.iter().filter(|c| c.card() > 0).count()
    }

    pub fn step(&mut self, rng: &mut McmcRng) -> Result<()> {
        match self.algo {
            AlgorithmId::Neal2 => self.marginal_sweep(false, rng)?,
            AlgorithmId::Neal3 => self.marginal_sweep(true, rng)?,
            AlgorithmId::Neal8 => self.neal8_sweep(rng)?,
            AlgorithmId::BlockedGibbs => return self.blocked_gibbs_step(rng).map(|_| self.iteration += 1),
        }
        refresh_parallel(&mut self.clusters, rng)?;
        let sizes = self.sizes();
        self.mixing.update_state(&sizes, self.data.rows(), rng)?;
        self.iteration += 1;
        Ok(())
    }

    fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.card()).collect()
    }

    /// Deletes an empty cluster by moving the last cluster into its slot.
    fn delete_cluster(&mut self, h: usize) -> Box<dyn Hierarchy> {
        let last = self.clusters.len() - 1;
        let removed = self.clusters.swap_remove(h);
        if h != last {
            for c in self.allocs.iter_mut() {
                if *c == last {
                    *c = h;
                }
            }
        }
        removed
    }

    /// Removes datum `i` from its cluster; returns the cluster if it became
    /// empty and was deleted.
    fn detach(&mut self, i: usize) -> Result<Option<Box<dyn Hierarchy>>> {
        let h = self.allocs[i];
        self.clusters[h].remove_datum(i, self.data.row(i))?;
        if self.clusters[h].card() == 0 {
            Ok(Some(self.delete_cluster(h)))
        } else {
            Ok(None)
        }
    }

    fn marginal_sweep(&mut self, collapsed: bool, rng: &mut McmcRng) -> Result<()> {
        let n = self.data.rows();
        let mut logw = Vec::new();
        for i in 0..n {
            self.detach(i)?;
            let y = self.data.row(i);
            let k = self.clusters.len();
            logw.clear();
            for cluster in &self.clusters {
                let fit = if collapsed {
                    cluster.conditional_pred_lpdf(y)?
                } else {
                    cluster.like_lpdf(y)?
                };
                logw.push(self.mixing.log_mass_existing_cluster(n - 1, cluster.card(), k)? + fit);
            }
            logw.push(self.mixing.log_mass_new_cluster(n - 1, k)? + self.template.prior_pred_lpdf(y)?);
            let choice = sample_log_weights(&mut logw, rng)?;
            if choice == k {
                let mut fresh = self.template.clone_box();
                fresh.clear_data();
                fresh.add_datum(i, y)?;
                if !collapsed {
                    fresh.sample_full_cond(rng)?;
                }
                self.clusters.push(fresh);
            } else {
                self.clusters[choice].add_datum(i, y)?;
            }
            self.allocs[i] = choice;
        }
        Ok(())
    }

    fn neal8_sweep(&mut self, rng: &mut McmcRng) -> Result<()> {
        let n = self.data.rows();
        let n_aux = self.aux.len();
        let log_aux = (n_aux as f64).ln();
        let mut logw = Vec::new();
        for i in 0..n {
            let emptied = self.detach(i)?;
            let reuse = emptied.is_some();
            if let Some(old) = emptied {
                self.aux[0] = old;
            }
            for (j, a) in self.aux.iter_mut().enumerate() {
                if !(j == 0 && reuse) {
                    a.sample_prior(rng)?;
                }
            }
            let y = self.data.row(i);
            let k = self.clusters.len();
            logw.clear();
            for cluster in &self.clusters {
                logw.push(self.mixing.log_mass_existing_cluster(n - 1, cluster.card(), k)? + cluster.like_lpdf(y)?);
            }
            let log_new = self.mixing.log_mass_new_cluster(n - 1, k)? - log_aux;
            for a in &self.aux {
                logw.push(log_new + a.like_lpdf(y)?);
            }
            let choice = sample_log_weights(&mut logw, rng)?;
            if choice >= k {
                let mut promoted = std::mem::replace(&mut self.aux[choice - k], self.template.clone_box());
                promoted.add_datum(i, y)?;
                self.clusters.push(promoted);
                self.allocs[i] = k;
            } else {
                self.clusters[choice].add_datum(i, y)?;
                self.allocs[i] = choice;
            }
        }
        Ok(())
    }

    fn blocked_gibbs_step(&mut self, rng: &mut McmcRng) -> Result<()> {
        let log_weights: Vec<f64> = self.mixing.weights()?.iter().map(|w| w.ln()).collect();
        let mut logw = vec![0.0; log_weights.len()];
        for i in 0..self.data.rows() {
            let y = self.data.row(i);
            for (h, cluster) in self.clusters.iter().enumerate() {
                logw[h] = if log_weights[h] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    log_weights[h] + cluster.like_lpdf(y)?
                };
            }
            let choice = sample_log_weights(&mut logw, rng)?;
            let old = self.allocs[i];
            if choice != old {
                self.clusters[old].remove_datum(i, y)?;
                self.clusters[choice].add_datum(i, y)?;
                self.allocs[i] = choice;
            }
        }
        let sizes = self.sizes();
        self.mixing.update_state(&sizes, self.data.rows(), rng)?;
        refresh_parallel(&mut self.clusters, rng)
    }

    /// Current state as a chain record.
    pub fn snapshot(&self, iteration_num: u64) -> AlgorithmState {
        AlgorithmState {
            iteration_num,
            cluster_states: self
                .clusters
                .iter()
                .map(|c| ClusterState {
                    cardinality: c.card(),
                    params: c.state_params(),
                })
                .collect(),
            cluster_allocs: self.allocs.clone(),
            mixing_state: self.mixing.state_params(),
        }
    }

    /// Performs `iterations` steps and collects the states of iterations
    /// `burnin..iterations`.
    pub fn run(&mut self, iterations: u64, burnin: u64, collector: &mut dyn Collector, rng: &mut McmcRng) -> Result<()> {
        if burnin >= iterations {
            return Err(Error::InvalidParameter(format!(
                "burnin ({burnin}) must be smaller than iterations ({iterations})"
            )));
        }
        collector.start()?;
        for it in 0..iterations {
            self.step(rng)?;
            if it >= burnin {
                collector.collect(&self.snapshot(it))?;
            }
        }
        collector.finish()
    }
}

/// Log density of the mixture described by one chain record at every grid
/// point.
///
/// Marginal mixings weight each cluster by its predictive mass and add a
/// new-cluster term (prior predictive when conjugate, otherwise a single
/// prior draw plugged in). Conditional mixings use the explicit weights.
pub fn state_lpdf_grid(
    template: &dyn Hierarchy,
    mixing: &dyn Mixing,
    state: &AlgorithmState,
    grid: &DataMatrix,
    rng: &mut McmcRng,
) -> Result<Vec<f64>> {
    if grid.cols() != template.dim() {
        return Err(Error::DimensionMismatch {
            expected: template.dim(),
            found: grid.cols(),
        });
    }
    let mut mix = mixing.clone_box();
    mix.set_state_params(&state.mixing_state)?;
    let mut terms: Vec<Vec<f64>> = Vec::new();
    let mut h = template.clone_box();
    h.clear_data();

    if mix.is_conditional() {
        let weights = mix.weights()?;
        if weights.len() != state.cluster_states.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: state.cluster_states.len(),
            });
        }
        for (w, cluster) in weights.iter().zip(&state.cluster_states) {
            if *w <= 0.0 {
                continue;
            }
            h.set_state_params(&cluster.params)?;
            let lw = w.ln();
            terms.push(h.like_lpdf_grid(grid)?.into_iter().map(|l| l + lw).collect());
        }
    } else {
        let n = state.num_data();
        let k = state.num_clusters();
        let mut log_masses = Vec::with_capacity(k + 1);
        for cluster in state.cluster_states.iter().filter(|c| c.cardinality > 0) {
            log_masses.push(mix.log_mass_existing_cluster(n, cluster.cardinality, k)?);
        }
        log_masses.push(mix.log_mass_new_cluster(n, k)?);
        let log_total = log_sum_exp(&log_masses);
        for (cluster, lm) in state.cluster_states.iter().filter(|c| c.cardinality > 0).zip(&log_masses) {
            h.set_state_params(&cluster.params)?;
            let lw = lm - log_total;
            terms.push(h.like_lpdf_grid(grid)?.into_iter().map(|l| l + lw).collect());
        }
        let lw = log_masses[k] - log_total;
        let new_term = if template.is_conjugate() {
            grid.iter_rows().map(|y| template.prior_pred_lpdf(y)).collect::<Result<Vec<_>>>()?
        } else {
            h.sample_prior(rng)?;
            h.like_lpdf_grid(grid)?
        };
        terms.push(new_term.into_iter().map(|l| l + lw).collect());
    }

    let mut column = vec![0.0; terms.len()];
    Ok((0..grid.rows())
        .map(|g| {
            for (c, t) in column.iter_mut().zip(&terms) {
                *c = t[g];
            }
            log_sum_exp(&column)
        })
        .collect())
}

/// Evaluates [`state_lpdf_grid`] for every record; rows follow the record
/// order. Record `r` uses stream `r` of a generator seeded from `rng`.
pub fn eval_lpdf_grid(
    template: &dyn Hierarchy,
    mixing: &dyn Mixing,
    states: &[AlgorithmState],
    grid: &DataMatrix,
    rng: &mut McmcRng,
) -> Result<Vec<Vec<f64>>> {
    if states.is_empty() {
        return Err(Error::EmptyChain);
    }
    let seed: u64 = rng.random();
    states
        .par_iter()
        .enumerate()
        .map(|(r, state)| {
            let mut sub = McmcRng::seed_from_u64(seed);
            sub.set_stream(r as u64);
            state_lpdf_grid(template, mixing, state, grid, &mut sub)
        })
        .collect()
}

/// Reads the chain from a collector and evaluates it on the grid.
pub fn eval_lpdf_grid_collector(
    template: &dyn Hierarchy,
    mixing: &dyn Mixing,
    collector: &mut dyn Collector,
    grid: &DataMatrix,
    rng: &mut McmcRng,
) -> Result<Vec<Vec<f64>>> {
    let states = collector.states()?;
    eval_lpdf_grid(template, mixing, &states, grid, rng)
}
