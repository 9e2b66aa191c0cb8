//! Synthetic benchmark datasets.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use mixmc::io::DataMatrix;
use mixmc::McmcRng;

use crate::write_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    /// Half N(-3, 1), half N(3, 1).
    #[value(name = "two-normals-1d")]
    TwoNormals1d,
    /// Half N(2·1, I), half N(-2·1, I) in `dim` dimensions.
    Highdim,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub kind: BenchKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the generating component of every point.
    #[arg(long)]
    pub truth_file: Option<PathBuf>,
}

/// Points and their true component labels. The first `n / 2` points come
/// from component 0.
pub fn generate(kind: BenchKind, n: usize, dim: usize, seed: u64) -> Result<(DataMatrix, Vec<usize>)> {
    if n < 2 {
        bail!("n must be at least 2, got {n}");
    }
    let (dim, offset) = match kind {
        BenchKind::TwoNormals1d => (1, 3.0),
        BenchKind::Highdim => {
            if dim < 1 {
                bail!("dim must be at least 1");
            }
            (dim, 2.0)
        }
    };
    let mut rng = McmcRng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let mut values = Vec::with_capacity(n * dim);
    for &label in &labels {
        let center = match (kind, label) {
            (BenchKind::TwoNormals1d, 0) | (BenchKind::Highdim, 1) => -offset,
            _ => offset,
        };
        for _ in 0..dim {
            let e: f64 = StandardNormal.sample(&mut rng);
            values.push(center + e);
        }
    }
    Ok((DataMatrix::new(n, dim, values)?, labels))
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let (data, labels) = generate(args.kind, args.n, args.dim, args.seed)?;
    write_rows(&args.out, data.iter_rows().map(<[f64]>::to_vec))?;
    if let Some(path) = &args.truth_file {
        write_rows(path, labels.into_iter().map(|l| vec![l as f64]))?;
    }
    Ok(())
}
