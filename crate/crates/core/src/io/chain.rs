//! Chain records and their line-delimited encoding.
//!
//! Every record is a single JSON object on its own line:
//!
//! ```text
//! {"iteration_num":3,"cluster_states":[{"cardinality":2,"params":{"mean":{"shape":[],"data":[0.5]}}}],"cluster_allocs":[0,0],"mixing_state":{}}
//! ```
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric array with a row-major layout. An empty shape denotes a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamArray {
    pub fn scalar(x: f64) -> Self {
        Self { shape: vec![], data: vec![x] }
    }

    pub fn vector(v: Vec<f64>) -> Self {
        Self { shape: vec![v.len()], data: v }
    }

    pub fn matrix(rows: usize, cols: usize, row_major: Vec<f64>) -> Self {
        Self {
            shape: vec![rows, cols],
            data: row_major,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    fn is_consistent(&self) -> bool {
        self.shape.iter().product::<usize>() == self.data.len()
    }
}

pub type ParamMap = BTreeMap<String, ParamArray>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub cardinality: usize,
    pub params: ParamMap,
}

/// Snapshot of one MCMC iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmState {
    pub iteration_num: u64,
    pub cluster_states: Vec<ClusterState>,
    pub cluster_allocs: Vec<usize>,
    pub mixing_state: ParamMap,
}

impl AlgorithmState {
    pub fn num_data(&self) -> usize {
        self.cluster_allocs.len()
    }

    /// Number of clusters holding at least one datum.
    pub fn num_clusters(&self) -> usize {
        self.cluster_states.iter().filter(|c| c.cardinality > 0).count()
    }

    /// Checks the allocation/cardinality bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let k = self.cluster_states.len();
        let mut counts = vec![0usize; k];
        for (i, &c) in self.cluster_allocs.iter().enumerate() {
            if c >= k {
                return Err(Error::InvalidParameter(format!(
                    "datum {i} allocated to cluster {c} but only {k} clusters exist"
                )));
            }
            counts[c] += 1;
        }
        for (h, (cluster, count)) in self.cluster_states.iter().zip(&counts).enumerate() {
            if cluster.cardinality != *count {
                return Err(Error::InvalidParameter(format!(
                    "cluster {h} has cardinality {} but {count} allocations",
                    cluster.cardinality
                )));
            }
            if let Some((name, _)) = cluster.params.iter().find(|(_, p)| !p.is_consistent()) {
                return Err(Error::InvalidParameter(format!("cluster {h}: parameter `{name}` shape mismatch")));
            }
        }
        Ok(())
    }
}

/// Encodes a record as one line (without the trailing newline).
pub fn encode_record(state: &AlgorithmState) -> Result<String> {
    serde_json::to_string(state).map_err(|e| Error::InvalidParameter(format!("cannot encode record: {e}")))
}

/// Decodes one line; `record` is the 1-based record number used in errors.
pub fn decode_record(line: &str, record: usize) -> Result<AlgorithmState> {
    let state: AlgorithmState = serde_json::from_str(line).map_err(|e| Error::Decode {
        record,
        message: e.to_string(),
    })?;
    state.validate().map_err(|e| Error::Decode {
        record,
        message: e.to_string(),
    })?;
    Ok(state)
}
