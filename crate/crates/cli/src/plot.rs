//! `plot`: SVG figures of a finished run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use mixmc::io::read_csv_matrix;
use mixmc::postprocess::summarize_log_density;

use crate::run::Estimator;

pub const DENSITY_SVG: &str = "density.svg";
pub const HISTOGRAM_SVG: &str = "num_clusters_hist.svg";
pub const TRACE_SVG: &str = "num_clusters_trace.svg";

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub grid_file: PathBuf,
    /// Per-iteration log densities written by `run-mcmc`.
    #[arg(long)]
    pub dens_file: PathBuf,
    #[arg(long)]
    pub n_cl_file: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Estimator::Mean)]
    pub density_estimator: Estimator,
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn polyline(&mut self, xs: &[f64], ys: &[f64], color: &str) {
        let points: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }

    fn bar(&mut self, center: f64, half_width: f64, height: f64, color: &str) {
        let x0 = self.px(center - half_width);
        let x1 = self.px(center + half_width);
        let top = self.py(height);
        let base = self.py(self.y.0);
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            x1 - x0,
            base - top
        );
    }

    fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
            WIDTH / 2.0
        );
        let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="black"/>"#
        );
        let label = |out: &mut String, x: f64, y: f64, anchor: &str, text: String| {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{text}</text>"#
            );
        };
        label(&mut out, left, bottom + 14.0, "start", format_tick(self.x.0));
        label(&mut out, right, bottom + 14.0, "end", format_tick(self.x.1));
        label(&mut out, left - 4.0, bottom, "end", format_tick(self.y.0));
        label(&mut out, left - 4.0, top + 4.0, "end", format_tick(self.y.1));
        label(&mut out, WIDTH / 2.0, HEIGHT - 10.0, "middle", xlabel.to_string());
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10" transform="rotate(-90 14 {:.2})">{ylabel}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn density_svg(grid: &[f64], log_density: &[f64]) -> String {
    let dens: Vec<f64> = log_density.iter().map(|l| l.exp()).collect();
    let mut frame = Frame::new(range(grid), (0.0, range(&dens).1));
    frame.polyline(grid, &dens, "steelblue");
    frame.finish("Posterior predictive density", "y", "density")
}

pub fn histogram_svg(counts: &[usize]) -> String {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in counts {
        *freq.entry(k).or_default() += 1;
    }
    let total = counts.len().max(1) as f64;
    let lo = freq.keys().next().copied().unwrap_or(0) as f64;
    let hi = freq.keys().next_back().copied().unwrap_or(0) as f64;
    let top = freq.values().copied().max().unwrap_or(0) as f64 / total;
    let mut frame = Frame::new((lo - 0.5, hi + 0.5), (0.0, top));
    for (&k, &c) in &freq {
        frame.bar(k as f64, 0.4, c as f64 / total, "steelblue");
    }
    frame.finish("Number of clusters", "clusters", "frequency")
}

pub fn trace_svg(counts: &[usize]) -> String {
    let xs: Vec<f64> = (0..counts.len()).map(|t| t as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let mut frame = Frame::new(range(&xs), range(&ys));
    frame.polyline(&xs, &ys, "darkred");
    frame.finish("Traceplot of the number of clusters", "iteration", "clusters")
}

pub fn plot(args: &PlotArgs) -> Result<Vec<PathBuf>> {
    let grid = read_csv_matrix(&args.grid_file).with_context(|| format!("reading {}", args.grid_file.display()))?;
    if grid.cols() != 1 {
        bail!("density plots need a one-dimensional grid, got {} columns", grid.cols());
    }
    let dens = read_csv_matrix(&args.dens_file).with_context(|| format!("reading {}", args.dens_file.display()))?;
    if dens.cols() != grid.rows() {
        bail!("density file has {} columns but the grid has {} points", dens.cols(), grid.rows());
    }
    let rows: Vec<Vec<f64>> = dens.iter_rows().map(<[f64]>::to_vec).collect();
    let summary = summarize_log_density(&rows, args.density_estimator.into())?;
    let ncl = read_csv_matrix(&args.n_cl_file).with_context(|| format!("reading {}", args.n_cl_file.display()))?;
    if ncl.cols() != 1 {
        bail!("cluster-count file must have one column");
    }
    let counts: Vec<usize> = ncl
        .values()
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("cluster counts must be non-negative integers, found {v}")
            }
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let outputs = [
        (DENSITY_SVG, density_svg(grid.values(), &summary)),
        (HISTOGRAM_SVG, histogram_svg(&counts)),
        (TRACE_SVG, trace_svg(&counts)),
    ];
    let mut written = Vec::new();
    for (name, svg) in outputs {
        let path = args.out_dir.join(name);
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

pub fn svg_paths(dir: &Path) -> [PathBuf; 3] {
    [dir.join(DENSITY_SVG), dir.join(HISTOGRAM_SVG), dir.join(TRACE_SVG)]
}
