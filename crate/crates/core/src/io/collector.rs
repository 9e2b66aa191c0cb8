//! Chain stores. A collector is written once, then replayed through a read
//! cursor.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::chain::{decode_record, encode_record, AlgorithmState};
use crate::error::Result;

pub trait Collector {
    /// Prepares the collector for writing.
    fn start(&mut self) -> Result<()>;

    /// Ends the writing phase.
    fn finish(&mut self) -> Result<()>;

    fn collect(&mut self, state: &AlgorithmState) -> Result<()>;

    /// Next state in collection order, or `None` after the last one.
    fn get_next_state(&mut self) -> Result<Option<AlgorithmState>>;

    /// Rewinds the read cursor to the first state.
    fn reset(&mut self) -> Result<()>;

    fn size(&self) -> usize;

    /// Replays the whole chain from the beginning and rewinds again.
    fn states(&mut self) -> Result<Vec<AlgorithmState>> {
        self.reset()?;
        let mut out = Vec::with_capacity(self.size());
        while let Some(s) = self.get_next_state()? {
            out.push(s);
        }
        self.reset()?;
        Ok(out)
    }
}

#[derive(Debug, Default, Clone)]
pub struct MemoryCollector {
    states: Vec<AlgorithmState>,
    cursor: usize,
}

impl MemoryCollector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every stored state.
    pub fn clear(&mut self) {
        self.states.clear();
        self.cursor = 0;
    }

    pub fn as_slice(&self) -> &[AlgorithmState] {
        &self.states
    }
}

impl Collector for MemoryCollector {
    fn start(&mut self) -> Result<()> {
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }

    fn collect(&mut self, state: &AlgorithmState) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }

    fn get_next_state(&mut self) -> Result<Option<AlgorithmState>> {
        let next = self.states.get(self.cursor).cloned();
        if next.is_some() {
            self.cursor += 1;
        }
        Ok(next)
    }

    fn reset(&mut self) -> Result<()> {
        self.cursor = 0;
        Ok(())
    }

    fn size(&self) -> usize {
        self.states.len()
    }

    fn states(&mut self) -> Result<Vec<AlgorithmState>> {
        self.cursor = 0;
        Ok(self.states.clone())
    }
}

/// Stores one encoded record per line in a `.chain` file.
#[derive(Debug)]
pub struct FileCollector {
    path: PathBuf,
    writer: Option<BufWriter<File>>,
    reader: Option<BufReader<File>>,
    read_index: usize,
    size: usize,
}

impl FileCollector {
    /// Collector that will (re)create `path` on `start`.
    pub fn create(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            writer: None,
            reader: None,
            read_index: 0,
            size: 0,
        }
    }

    /// Opens an existing chain file for replay.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = BufReader::new(File::open(&path)?);
        let mut size = 0;
        for line in file.lines() {
            if !line?.trim().is_empty() {
                size += 1;
            }
        }
        Ok(Self {
            path,
            writer: None,
            reader: None,
            read_index: 0,
            size,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Collector for FileCollector {
    fn start(&mut self) -> Result<()> {
        self.reader = None;
        self.read_index = 0;
        self.size = 0;
        self.writer = Some(BufWriter::new(File::create(&self.path)?));
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(mut w) = self.writer.take() {
            w.flush()?;
        }
        Ok(())
    }

    fn collect(&mut self, state: &AlgorithmState) -> Result<()> {
        if self.writer.is_none() {
            self.start()?;
        }
        let line = encode_record(state)?;
        let w = self.writer.as_mut().expect("writer started");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        self.size += 1;
        Ok(())
    }

    fn get_next_state(&mut self) -> Result<Option<AlgorithmState>> {
        self.finish()?;
        if self.reader.is_none() {
            self.reader = Some(BufReader::new(File::open(&self.path)?));
            self.read_index = 0;
        }
        let reader = self.reader.as_mut().expect("reader opened");
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !line.trim().is_empty() {
                break;
            }
        }
        self.read_index += 1;
        decode_record(line.trim_end(), self.read_index).map(Some)
    }

    fn reset(&mut self) -> Result<()> {
        self.finish()?;
        self.reader = None;
        self.read_index = 0;
        Ok(())
    }

    fn size(&self) -> usize {
        self.size
    }
}
