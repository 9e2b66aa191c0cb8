//! Data ingestion and chain storage.

mod chain;
mod collector;
mod csv;

pub use self::chain::{decode_record, encode_record, AlgorithmState, ClusterState, ParamArray, ParamMap};
pub use self::collector::{Collector, FileCollector, MemoryCollector};
pub use self::csv::{read_csv_matrix, write_csv_matrix, DataMatrix};
