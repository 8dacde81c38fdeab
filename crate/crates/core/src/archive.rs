//! Append-only telemetry archive with tags, window queries, quality checks
//! and per-replica segment statistics.
//!
//! Raw entries are stored in arrival order and never modified; queries sort
//! by `(ts, seq)`. Every query runs under one read lock and every append
//! (including [`Archive::append_batch`]) under one write lock, so a reader
//! sees a batch either entirely or not at all.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::SegmentStats;
use crate::physical::{
    decode_sample, encode_sample, Channel, PhysicalError, Quality, TelemetrySample,
};
use crate::Nanos;

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub seq: u64,
    pub sample: TelemetrySample,
    pub tags: Tags,
}

/// Selection over one asset's entries. `channels` and `quality` empty means
/// "any".
#[derive(Debug, Clone, PartialEq)]
pub struct WindowQuery {
    pub asset_id: String,
    pub channels: BTreeSet<Channel>,
    pub start: Nanos,
    pub end: Nanos,
    pub tags: Tags,
    pub quality: BTreeSet<Quality>,
}

impl WindowQuery {
    /// All channels of `asset_id` in `[start, end)`.
    pub fn new(asset_id: impl Into<String>, start: Nanos, end: Nanos) -> Self {
        Self {
            asset_id: asset_id.into(),
            channels: BTreeSet::new(),
            start,
            end,
            tags: Tags::new(),
            quality: BTreeSet::new(),
        }
    }

    pub fn channels(mut self, channels: impl IntoIterator<Item = Channel>) -> Self {
        self.channels = channels.into_iter().collect();
        self
    }

    pub fn tag(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.tags.insert(key.into(), value.into());
        self
    }

    pub fn quality(mut self, quality: impl IntoIterator<Item = Quality>) -> Self {
        self.quality = quality.into_iter().collect();
        self
    }

    fn matches(&self, e: &ArchiveEntry) -> bool {
        let s = &e.sample;
        (self.start..self.end).contains(&s.ts)
            && (self.channels.is_empty() || self.channels.contains(&s.channel))
            && (self.quality.is_empty() || self.quality.contains(&s.quality))
            && self
                .tags
                .iter()
                .all(|(k, v)| e.tags.get(k).is_some_and(|x| x == v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub freshness_ok: bool,
    pub missing_count: usize,
    pub missing_fraction: f64,
    pub range_violations: usize,
    /// Spans between consecutive samples further apart than 3× the nominal
    /// period.
    pub gaps: Vec<(Nanos, Nanos)>,
}

/// Spacing above `GAP_FACTOR × nominal period` counts as a gap.
pub const GAP_FACTOR: i64 = 3;

/// Quality summary of one time-ordered channel slice.
pub fn validate_quality(
    samples: &[TelemetrySample],
    nominal_period: Duration,
    now: Nanos,
    freshness_timeout: Duration,
) -> QualityReport {
    let as_nanos = |d: Duration| i64::try_from(d.as_nanos()).unwrap_or(i64::MAX);
    let Some(last) = samples.last() else {
        return QualityReport {
            freshness_ok: false,
            missing_count: 0,
            missing_fraction: 0.0,
            range_violations: 0,
            gaps: Vec::new(),
        };
    };
    let missing_count = samples
        .iter()
        .filter(|s| s.quality == Quality::Missing)
        .count();
    let range_violations = samples
        .iter()
        .filter(|s| {
            s.channel == Channel::PlcState
                && s.quality != Quality::Missing
                && !crate::physical::is_plc_code(s.value)
        })
        .count();
    let limit = as_nanos(nominal_period).saturating_mul(GAP_FACTOR);
    let gaps = samples
        .windows(2)
        .filter(|w| w[1].ts - w[0].ts > limit)
        .map(|w| (w[0].ts, w[1].ts))
        .collect();
    QualityReport {
        freshness_ok: now.saturating_sub(last.ts) <= as_nanos(freshness_timeout),
        missing_count,
        missing_fraction: missing_count as f64 / samples.len() as f64,
        range_violations,
        gaps,
    }
}

/// Statistics of one segment produced by one replica version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub asset_id: String,
    pub replica_version: String,
    pub segment_index: usize,
    /// Half-open block range `[start, end)`.
    pub block_range: (usize, usize),
    pub cluster_label: usize,
    pub stats: SegmentStats,
    /// Source timestamp of the segment's first sample.
    pub created_ts: Nanos,
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("unknown asset {0:?}")]
    UnknownAsset(String),
    #[error("unknown replica version {0:?}")]
    UnknownReplicaVersion(String),
    #[error("segment {new:?} overlaps existing segment {existing:?} of {version}")]
    OverlappingSegment {
        version: String,
        existing: (usize, usize),
        new: (usize, usize),
    },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Physical(#[from] PhysicalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad archive sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
}

#[derive(Debug, Default)]
struct Log {
    entries: HashMap<String, Vec<ArchiveEntry>>,
}

#[derive(Debug, Default)]
pub struct Archive {
    log: RwLock<Log>,
    segments: RwLock<BTreeMap<String, Vec<SegmentRecord>>>,
}

const TRACE_FILE: &str = "archive.jsonl";
const SIDECAR_FILE: &str = "archive.segments.json";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    /// Tags of each trace line, in file order.
    tags: Vec<Tags>,
    segments: BTreeMap<String, Vec<SegmentRecord>>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    fn log(&self) -> RwLockReadGuard<'_, Log> {
        self.log.read().unwrap_or_else(|e| e.into_inner())
    }

    fn log_mut(&self) -> RwLockWriteGuard<'_, Log> {
        self.log.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Appends a sample and returns its per-asset sequence number (from 1).
    pub fn append_sample(&self, sample: TelemetrySample, tags: Tags) -> u64 {
        let mut log = self.log_mut();
        push(&mut log, sample, tags)
    }

    /// Appends several samples atomically with respect to readers.
    pub fn append_batch(
        &self,
        batch: impl IntoIterator<Item = (TelemetrySample, Tags)>,
    ) -> Vec<u64> {
        let mut log = self.log_mut();
        batch
            .into_iter()
            .map(|(s, t)| push(&mut log, s, t))
            .collect()
    }

    pub fn assets(&self) -> Vec<String> {
        let mut v: Vec<_> = self.log().entries.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn len(&self) -> usize {
        self.log().entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every entry of an asset in append order.
    pub fn scan(&self, asset_id: &str) -> Vec<ArchiveEntry> {
        self.log()
            .entries
            .get(asset_id)
            .cloned()
            .unwrap_or_default()
    }

    /// Entries matching `q`, ordered by `(ts, seq)`.
    pub fn query_window(&self, q: &WindowQuery) -> Result<Vec<ArchiveEntry>, ArchiveError> {
        if q.start >= q.end {
            return Err(ArchiveError::InvalidQuery(format!(
                "empty time range [{}, {})",
                q.start, q.end
            )));
        }
        let log = self.log();
        let entries = log
            .entries
            .get(&q.asset_id)
            .ok_or_else(|| ArchiveError::UnknownAsset(q.asset_id.clone()))?;
        let mut out: Vec<ArchiveEntry> = entries.iter().filter(|e| q.matches(e)).cloned().collect();
        drop(log);
        out.sort_by_key(|e| (e.sample.ts, e.seq));
        Ok(out)
    }

    /// Timestamp span `[first, last]` of an asset's samples.
    pub fn time_bounds(&self, asset_id: &str) -> Option<(Nanos, Nanos)> {
        let log = self.log();
        let entries = log.entries.get(asset_id)?;
        let min = entries.iter().map(|e| e.sample.ts).min()?;
        let max = entries.iter().map(|e| e.sample.ts).max()?;
        Some((min, max))
    }

    /// Persists a segment record. Records of the same replica version and
    /// asset must not overlap in block range.
    pub fn record_segment_stats(&self, record: SegmentRecord) -> Result<(), ArchiveError> {
        if record.block_range.0 >= record.block_range.1 {
            return Err(ArchiveError::InvalidQuery(format!(
                "empty block range {:?}",
                record.block_range
            )));
        }
        let mut segs = self.segments.write().unwrap_or_else(|e| e.into_inner());
        let list = segs.entry(record.replica_version.clone()).or_default();
        let (a, b) = record.block_range;
        if let Some(existing) = list
            .iter()
            .find(|r| r.asset_id == record.asset_id && r.block_range.0 < b && a < r.block_range.1)
        {
            return Err(ArchiveError::OverlappingSegment {
                version: record.replica_version.clone(),
                existing: existing.block_range,
                new: record.block_range,
            });
        }
        list.push(record);
        Ok(())
    }

    pub fn segments(&self, replica_version: &str) -> Result<Vec<SegmentRecord>, ArchiveError> {
        self.segments
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(replica_version)
            .cloned()
            .ok_or_else(|| ArchiveError::UnknownReplicaVersion(replica_version.to_owned()))
    }

    pub fn replica_versions(&self) -> Vec<String> {
        self.segments
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect()
    }

    /// Segment count per cluster label for records whose `created_ts` lies
    /// in `[start, end)`.
    pub fn cluster_frequency_histogram(
        &self,
        replica_version: &str,
        start: Nanos,
        end: Nanos,
    ) -> Result<BTreeMap<usize, usize>, ArchiveError> {
        if start >= end {
            return Err(ArchiveError::InvalidQuery(format!(
                "empty time range [{start}, {end})"
            )));
        }
        let segs = self.segments.read().unwrap_or_else(|e| e.into_inner());
        let list = segs
            .get(replica_version)
            .ok_or_else(|| ArchiveError::UnknownReplicaVersion(replica_version.to_owned()))?;
        let mut hist = BTreeMap::new();
        for r in list.iter().filter(|r| (start..end).contains(&r.created_ts)) {
            *hist.entry(r.cluster_label).or_insert(0) += 1;
        }
        Ok(hist)
    }

    /// Writes the raw log as a trace file plus a JSON sidecar holding tags
    /// and segment records.
    pub fn dump(&self, dir: &Path) -> Result<(), ArchiveError> {
        fs::create_dir_all(dir)?;
        let mut trace = BufWriter::new(fs::File::create(dir.join(TRACE_FILE))?);
        let mut tags = Vec::new();
        {
            let log = self.log();
            let mut assets: Vec<_> = log.entries.keys().collect();
            assets.sort();
            for a in assets {
                for e in &log.entries[a] {
                    writeln!(trace, "{}", encode_sample(&e.sample))?;
                    tags.push(e.tags.clone());
                }
            }
        }
        trace.flush()?;
        let sidecar = Sidecar {
            tags,
            segments: self
                .segments
                .read()
                .unwrap_or_else(|e| e.into_inner())
                .clone(),
        };
        fs::write(dir.join(SIDECAR_FILE), serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ArchiveError> {
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(dir.join(SIDECAR_FILE))?)?;
        let archive = Archive::new();
        let file = BufReader::new(fs::File::open(dir.join(TRACE_FILE))?);
        let mut tags = sidecar.tags.into_iter();
        for (i, line) in file.lines().enumerate() {
            let sample = decode_sample(&line?).map_err(|e| match e {
                PhysicalError::MalformedLine { reason, .. } => PhysicalError::MalformedLine {
                    line: Some(i + 1),
                    reason,
                },
                other => other,
            })?;
            archive.append_sample(sample, tags.next().unwrap_or_default());
        }
        *archive.segments.write().unwrap_or_else(|e| e.into_inner()) = sidecar.segments;
        Ok(archive)
    }
}

fn push(log: &mut Log, sample: TelemetrySample, tags: Tags) -> u64 {
    let list = log.entries.entry(sample.asset_id.clone()).or_default();
    let seq = list.last().map_or(1, |e| e.seq + 1);
    list.push(ArchiveEntry { seq, sample, tags });
    seq
}
