//! Command implementations behind the `mixmc` binary.

pub mod bench;
pub mod plot;
pub mod run;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};

pub(crate) fn write_rows(path: &Path, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    mixmc::io::write_csv_matrix(BufWriter::new(file), rows).with_context(|| format!("writing {}", path.display()))
}
