//! External merge sort over newline-free text lines.
//!
//! Lines are buffered up to a byte budget, spilled as sorted runs to
//! temporary files, and merged back with a k-way heap merge.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use tempfile::{NamedTempFile, TempDir};

/// Runs merged at once; more runs are first collapsed in groups of this size.
const MAX_FAN_IN: usize = 128;
const LINE_OVERHEAD: usize = std::mem::size_of::<String>();

pub const DEFAULT_SORT_BUDGET: usize = 64 << 20;

pub struct ExternalSorter {
    dir: TempDir,
    budget: usize,
    buffer: Vec<String>,
    buffered: usize,
    runs: Vec<NamedTempFile>,
}

impl ExternalSorter {
    pub fn new(tmp_parent: &Path, budget: usize) -> io::Result<Self> {
        std::fs::create_dir_all(tmp_parent)?;
        Ok(ExternalSorter {
            dir: tempfile::Builder::new().prefix(".sort-").tempdir_in(tmp_parent)?,
            budget: budget.max(1024),
            buffer: Vec::new(),
            buffered: 0,
            runs: Vec::new(),
        })
    }

    pub fn push(&mut self, line: String) -> io::Result<()> {
        debug_assert!(!line.contains('\n'));
        self.buffered += line.len() + LINE_OVERHEAD;
        self.buffer.push(line);
        if self.buffered >= self.budget {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> io::Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.buffer.sort_unstable();
        let mut run = NamedTempFile::new_in(self.dir.path())?;
        {
            let mut w = BufWriter::new(run.as_file_mut());
            for line in self.buffer.drain(..) {
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        self.buffered = 0;
        self.runs.push(run);
        Ok(())
    }

    /// Number of runs spilled to disk so far.
    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn finish(mut self) -> io::Result<SortedLines> {
        if self.runs.is_empty() {
            self.buffer.sort_unstable();
            return Ok(SortedLines {
                inner: Source::Memory(std::mem::take(&mut self.buffer).into_iter()),
                _dir: self.dir,
            });
        }
        self.spill()?;
        while self.runs.len() > MAX_FAN_IN {
            let group: Vec<_> = self.runs.drain(..MAX_FAN_IN).collect();
            let mut merged = NamedTempFile::new_in(self.dir.path())?;
            {
                let mut w = BufWriter::new(merged.as_file_mut());
                for line in Merge::open(&group)? {
                    w.write_all(line?.as_bytes())?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
            self.runs.push(merged);
        }
        let merge = Merge::open(&self.runs)?;
        Ok(SortedLines {
            inner: Source::Merge { merge, _runs: std::mem::take(&mut self.runs) },
            _dir: self.dir,
        })
    }
}

struct Merge {
    readers: Vec<BufReader<File>>,
    heap: BinaryHeap<Reverse<(String, usize)>>,
}

impl Merge {
    fn open(runs: &[NamedTempFile]) -> io::Result<Merge> {
        let mut merge = Merge {
            readers: Vec::with_capacity(runs.len()),
            heap: BinaryHeap::with_capacity(runs.len()),
        };
        for (i, run) in runs.iter().enumerate() {
            merge.readers.push(BufReader::new(run.reopen()?));
            merge.refill(i)?;
        }
        Ok(merge)
    }

    fn refill(&mut self, i: usize) -> io::Result<()> {
        let mut line = String::new();
        if self.readers[i].read_line(&mut line)? > 0 {
            if line.ends_with('\n') {
                line.pop();
            }
            self.heap.push(Reverse((line, i)));
        }
        Ok(())
    }
}

impl Iterator for Merge {
    type Item = io::Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        let Reverse((line, i)) = self.heap.pop()?;
        if let Err(e) = self.refill(i) {
            return Some(Err(e));
        }
        Some(Ok(line))
    }
}

enum Source {
    Memory(std::vec::IntoIter<String>),
    Merge { merge: Merge, _runs: Vec<NamedTempFile> },
}

/// Sorted output; temporary files live as long as this iterator.
pub struct SortedLines {
    inner: Source,
    _dir: TempDir,
}

impl Iterator for SortedLines {
    type Item = io::Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            Source::Memory(it) => it.next().map(Ok),
            Source::Merge { merge, .. } => merge.next(),
        }
    }
}
