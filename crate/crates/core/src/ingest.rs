//! Single-pass log ingest: parse, drop robots, accumulate. Input is cut into
//! line-aligned batches whose shards are accumulated independently and
//! merged, so peak memory is bounded by the batch size plus the aggregate.

use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::clickstream::{is_robot, is_skippable, parse_log_line, ParseError, RobotPolicy};
use crate::cohort::{Accumulator, AttributionContext};

const BATCH_BYTES: usize = 4 << 20;
const SHARD_LINES: usize = 16_384;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub lines: u64,
    /// Comment and blank lines.
    pub skipped: u64,
    pub robot_records: u64,
    /// Records that reached the accumulator.
    pub accepted: u64,
}

impl IngestStats {
    fn merge(&mut self, other: &IngestStats) {
        self.lines += other.lines;
        self.skipped += other.skipped;
        self.robot_records += other.robot_records;
        self.accepted += other.accepted;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("log line {line}: not valid UTF-8")]
    Utf8 { line: usize },
}

/// Streaming ingest. Feed bytes through [`Write`] or [`Ingestor::read_from`],
/// then call [`Ingestor::finish`].
pub struct Ingestor<'a> {
    policy: &'a RobotPolicy,
    ctx: AttributionContext<'a>,
    parallel: bool,
    pending: Vec<u8>,
    next_line: usize,
    acc: Accumulator,
    stats: IngestStats,
    error: Option<IngestError>,
}

impl<'a> Ingestor<'a> {
    pub fn new(policy: &'a RobotPolicy, ctx: AttributionContext<'a>) -> Self {
        Self {
            policy,
            ctx,
            parallel: true,
            pending: Vec::new(),
            next_line: 1,
            acc: Accumulator::new(),
            stats: IngestStats::default(),
            error: None,
        }
    }

    /// Processes shards on the calling thread only.
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    /// Reads one whole log source; line numbers restart at 1.
    pub fn read_from<R: Read>(&mut self, mut reader: R) -> Result<(), IngestError> {
        self.end_source()?;
        self.next_line = 1;
        let mut buf = vec![0u8; 1 << 20];
        loop {
            let n = match reader.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            };
            self.push(&buf[..n])?;
        }
        self.end_source()
    }

    /// Processes whatever is buffered, including an unterminated last line.
    fn end_source(&mut self) -> Result<(), IngestError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if !self.pending.is_empty() {
            let batch = std::mem::take(&mut self.pending);
            self.process(&batch)?;
        }
        Ok(())
    }

    fn push(&mut self, bytes: &[u8]) -> Result<(), IngestError> {
        self.pending.extend_from_slice(bytes);
        if self.pending.len() >= BATCH_BYTES {
            if let Some(cut) = self.pending.iter().rposition(|&b| b == b'\n') {
                let rest = self.pending.split_off(cut + 1);
                let batch = std::mem::replace(&mut self.pending, rest);
                self.process(&batch)?;
            }
        }
        Ok(())
    }

    fn process(&mut self, batch: &[u8]) -> Result<(), IngestError> {
        let lines: Vec<&[u8]> = batch.split_inclusive(|&b| b == b'\n').collect();
        let first = self.next_line;
        self.next_line += lines.len();
        let shard = |(k, chunk): (usize, &[&[u8]])| shard_ingest(chunk, first + k * SHARD_LINES, self.policy, &self.ctx);
        let results: Vec<Result<(Accumulator, IngestStats), IngestError>> = if self.parallel {
            lines.par_chunks(SHARD_LINES).enumerate().map(shard).collect()
        } else {
            lines.chunks(SHARD_LINES).enumerate().map(shard).collect()
        };
        for r in results {
            let (acc, stats) = r?;
            self.acc.merge(acc);
            self.stats.merge(&stats);
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(Accumulator, IngestStats), IngestError> {
        self.end_source()?;
        Ok((self.acc, self.stats))
    }
}

impl Write for Ingestor<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.error.is_some() {
            return Err(io::Error::other("ingest already failed"));
        }
        match self.push(buf) {
            Ok(()) => Ok(buf.len()),
            Err(e) => {
                let msg = e.to_string();
                self.error = Some(e);
                Err(io::Error::other(msg))
            }
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn shard_ingest(
    lines: &[&[u8]],
    first_line: usize,
    policy: &RobotPolicy,
    ctx: &AttributionContext<'_>,
) -> Result<(Accumulator, IngestStats), IngestError> {
    let mut acc = Accumulator::new();
    let mut stats = IngestStats::default();
    for (i, raw) in lines.iter().enumerate() {
        let line_no = first_line + i;
        stats.lines += 1;
        let line = std::str::from_utf8(raw).map_err(|_| IngestError::Utf8 { line: line_no })?;
        if is_skippable(line) {
            stats.skipped += 1;
            continue;
        }
        let record = parse_log_line(line, line_no).map_err(|source| IngestError::Parse { line: line_no, source })?;
        if is_robot(&record, policy) {
            stats.robot_records += 1;
            continue;
        }
        stats.accepted += 1;
        acc.add(&record, ctx);
    }
    Ok((acc, stats))
}

/// Ingests one log source.
pub fn ingest<R: Read>(
    reader: R,
    policy: &RobotPolicy,
    ctx: AttributionContext<'_>,
    parallel: bool,
) -> Result<(Accumulator, IngestStats), IngestError> {
    let mut ingestor = Ingestor::new(policy, ctx);
    if !parallel {
        ingestor = ingestor.sequential();
    }
    ingestor.read_from(reader)?;
    ingestor.finish()
}
