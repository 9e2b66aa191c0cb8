//! `run-mcmc`: fit a mixture model and write the requested summaries.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;

use mixmc::algorithm::{eval_lpdf_grid, Sampler};
use mixmc::config::{parse_algo_params, read_config_file};
use mixmc::hierarchy::{build_hierarchy, HierarchyKind};
use mixmc::io::{read_csv_matrix, AlgorithmState, Collector, FileCollector, MemoryCollector};
use mixmc::mixing::{build_mixing, MixingKind};
use mixmc::postprocess::{binder_best_clustering, num_clusters_chain, summarize_log_density, DensityEstimator};
use mixmc::McmcRng;

use crate::write_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Estimator {
    /// Log of the mean density over iterations.
    #[default]
    Mean,
    /// Mean of the log densities over iterations.
    ExpMeanLog,
}

impl From<Estimator> for DensityEstimator {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Mean => DensityEstimator::MeanDensity,
            Estimator::ExpMeanLog => DensityEstimator::ExpMeanLog,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub algo_params_file: PathBuf,
    #[arg(long)]
    pub hier_type: String,
    #[arg(long)]
    pub hier_args: PathBuf,
    #[arg(long)]
    pub mix_type: String,
    #[arg(long)]
    pub mix_args: PathBuf,
    /// Chain file, or `memory` to keep the chain in memory.
    #[arg(long, default_value = "memory")]
    pub coll_name: String,
    #[arg(long)]
    pub data_file: PathBuf,
    #[arg(long, default_value = "")]
    pub grid_file: String,
    /// Per-iteration log densities; the summary curve goes to `<stem>.mean.csv`.
    #[arg(long, default_value = "")]
    pub dens_file: String,
    #[arg(long, default_value = "")]
    pub n_cl_file: String,
    #[arg(long, default_value = "")]
    pub clus_file: String,
    #[arg(long, default_value = "")]
    pub best_clus_file: String,
    #[arg(long, value_enum, default_value_t = Estimator::Mean)]
    pub density_estimator: Estimator,
}

fn non_empty(s: &str) -> Option<&Path> {
    if s.is_empty() {
        None
    } else {
        Some(Path::new(s))
    }
}

/// `eval_dens.csv` becomes `eval_dens.mean.csv`.
pub fn mean_density_path(dens: &Path) -> PathBuf {
    let stem = dens.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dens.with_file_name(format!("{stem}.mean.csv"))
}

pub fn run_mcmc(args: &RunArgs) -> Result<()> {
    let algo_tree = read_config_file(&args.algo_params_file)
        .with_context(|| format!("reading {}", args.algo_params_file.display()))?;
    let params = parse_algo_params(&algo_tree).context("algorithm parameters")?;
    let hier_kind: HierarchyKind = args.hier_type.parse()?;
    let hier_tree =
        read_config_file(&args.hier_args).with_context(|| format!("reading {}", args.hier_args.display()))?;
    let template = build_hierarchy(hier_kind, &hier_tree).context("hierarchy parameters")?;
    let mix_kind: MixingKind = args.mix_type.parse()?;
    let mix_tree =
        read_config_file(&args.mix_args).with_context(|| format!("reading {}", args.mix_args.display()))?;
    let mixing = build_mixing(mix_kind, &mix_tree).context("mixing parameters")?;
    let data = read_csv_matrix(&args.data_file).with_context(|| format!("reading {}", args.data_file.display()))?;

    let grid_path = non_empty(&args.grid_file);
    let dens_path = non_empty(&args.dens_file);
    let grid = match (grid_path, dens_path) {
        (Some(g), Some(_)) => Some(read_csv_matrix(g).with_context(|| format!("reading {}", g.display()))?),
        _ => None,
    };

    let mut rng = McmcRng::seed_from_u64(params.rng_seed);
    let mut sampler = Sampler::from_params(&params, template.clone(), mixing.clone(), data, &mut rng)?;

    let mut collector: Box<dyn Collector> = if args.coll_name == "memory" {
        Box::new(MemoryCollector::new())
    } else if args.coll_name.is_empty() {
        bail!("--coll-name must not be empty");
    } else {
        Box::new(FileCollector::create(&args.coll_name))
    };
    sampler.run(params.iterations as u64, params.burnin as u64, collector.as_mut(), &mut rng)?;
    let states: Vec<AlgorithmState> = collector.states().context("reading back the chain")?;

    if let (Some(grid), Some(dens)) = (grid, dens_path) {
        let lpdf = eval_lpdf_grid(template.as_ref(), mixing.as_ref(), &states, &grid, &mut rng)?;
        let summary = summarize_log_density(&lpdf, args.density_estimator.into())?;
        write_rows(dens, lpdf)?;
        write_rows(&mean_density_path(dens), [summary])?;
    }
    if let Some(path) = non_empty(&args.n_cl_file) {
        write_rows(path, num_clusters_chain(&states).into_iter().map(|k| vec![k as f64]))?;
    }
    if let Some(path) = non_empty(&args.clus_file) {
        write_rows(
            path,
            states.iter().map(|s| s.cluster_allocs.iter().map(|&c| c as f64).collect()),
        )?;
    }
    if let Some(path) = non_empty(&args.best_clus_file) {
        let (best, _) = binder_best_clustering(&states)?;
        write_rows(path, best.into_iter().map(|c| vec![c as f64]))?;
    }
    Ok(())
}
