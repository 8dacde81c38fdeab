//! Data readiness: turn raw accelerometer streams into clean block features.
//!
//! Per axis the stages run in a fixed order: outlier detection, gap filling,
//! smoothing, optional z-score normalisation and rolling-maximum extraction.
//! Missing readings are carried as NaN until gap filling replaces them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::ArchiveEntry;
use crate::physical::{Channel, Quality};
use crate::Nanos;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReadinessError {
    #[error("empty series")]
    EmptySeries,
    #[error("every value is missing")]
    AllMissing,
    #[error("smoothing window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("axis lengths differ: x={x} y={y} z={z}")]
    AxisLengthMismatch { x: usize, y: usize, z: usize },
    #[error("invalid readiness config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFill {
    /// Linear interpolation inside the series, nearest value at the edges.
    Linear,
    /// Carry the previous valid value forward (next valid one at the start).
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadinessConfig {
    pub sigma_threshold: f64,
    pub smooth_window: usize,
    pub block_size: usize,
    pub gap_fill: GapFill,
    pub normalize: bool,
}

impl Default for ReadinessConfig {
    fn default() -> Self {
        Self {
            sigma_threshold: 7.0,
            smooth_window: 5,
            block_size: 50,
            gap_fill: GapFill::Linear,
            normalize: true,
        }
    }
}

impl ReadinessConfig {
    pub fn validate(&self) -> Result<(), ReadinessError> {
        if !(self.sigma_threshold.is_finite() && self.sigma_threshold > 0.0) {
            return Err(ReadinessError::InvalidConfig(format!(
                "sigma_threshold {} must be > 0",
                self.sigma_threshold
            )));
        }
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return Err(ReadinessError::InvalidConfig(format!(
                "smooth_window {} must be odd and >= 1",
                self.smooth_window
            )));
        }
        if self.block_size == 0 {
            return Err(ReadinessError::InvalidConfig(
                "block_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Time-aligned raw accelerometer axes. NaN marks a missing reading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawAxes {
    pub timestamps: Vec<Nanos>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl RawAxes {
    /// Axes without source timestamps; sample indices stand in for time.
    pub fn from_values(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        let timestamps = (0..x.len() as i64).collect();
        Self {
            timestamps,
            x,
            y,
            z,
        }
    }

    /// Splits queried archive entries into axes. Entries must be ordered by
    /// time; PLC readings are ignored and missing readings become NaN.
    pub fn from_entries(entries: &[ArchiveEntry]) -> Result<Self, ReadinessError> {
        let mut axes: [Vec<f64>; 3] = Default::default();
        let mut timestamps = Vec::new();
        for e in entries {
            let Some(axis) = e.sample.channel.axis() else {
                continue;
            };
            let v = if e.sample.quality == Quality::Missing {
                f64::NAN
            } else {
                e.sample.value
            };
            axes[axis].push(v);
            if e.sample.channel == Channel::AccelX {
                timestamps.push(e.sample.ts);
            }
        }
        let [x, y, z] = axes;
        let raw = Self {
            timestamps,
            x,
            y,
            z,
        };
        raw.check_lengths()?;
        Ok(raw)
    }

    fn check_lengths(&self) -> Result<(), ReadinessError> {
        let (x, y, z) = (self.x.len(), self.y.len(), self.z.len());
        if x != y || y != z || self.timestamps.len() != x {
            return Err(ReadinessError::AxisLengthMismatch { x, y, z });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub index: usize,
    /// Peak of each axis within the block: `[x, y, z]`.
    pub peaks: [f64; 3],
    /// Timestamps of the first and last sample in the block.
    pub time_range: (Nanos, Nanos),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub blocks: Vec<FeatureBlock>,
    pub config_used: ReadinessConfig,
}

impl FeatureSeries {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn vectors(&self) -> Vec<[f64; 3]> {
        self.blocks.iter().map(|b| b.peaks).collect()
    }
}

/// Mean and population standard deviation over the finite values.
fn moments(series: &[f64]) -> Option<(f64, f64)> {
    let (mut n, mut sum) = (0usize, 0.0);
    for &v in series.iter().filter(|v| v.is_finite()) {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return None;
    }
    let mean = sum / n as f64;
    let var = series
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    Some((mean, var.sqrt()))
}

/// Flags values further than `sigma_threshold` standard deviations from the
/// mean. Mean and deviation are taken over the whole input, outliers
/// included; a flat series flags nothing.
pub fn detect_outliers(series: &[f64], sigma_threshold: f64) -> Result<Vec<bool>, ReadinessError> {
    if series.is_empty() {
        return Err(ReadinessError::EmptySeries);
    }
    let Some((mean, sd)) = moments(series) else {
        return Ok(vec![false; series.len()]);
    };
    if sd == 0.0 {
        return Ok(vec![false; series.len()]);
    }
    let limit = sigma_threshold * sd;
    Ok(series.iter().map(|v| (v - mean).abs() > limit).collect())
}

/// Replaces flagged or non-finite positions using linear interpolation.
pub fn fill_gaps(series: &[f64], mask: &[bool]) -> Result<Vec<f64>, ReadinessError> {
    fill_gaps_with(series, mask, GapFill::Linear)
}

pub fn fill_gaps_with(
    series: &[f64],
    mask: &[bool],
    mode: GapFill,
) -> Result<Vec<f64>, ReadinessError> {
    if series.is_empty() {
        return Err(ReadinessError::EmptySeries);
    }
    let invalid = |i: usize| mask.get(i).copied().unwrap_or(false) || !series[i].is_finite();
    let valid: Vec<usize> = (0..series.len()).filter(|&i| !invalid(i)).collect();
    let (Some(&first), Some(&last)) = (valid.first(), valid.last()) else {
        return Err(ReadinessError::AllMissing);
    };
    let mut out = series.to_vec();
    out[..first].fill(series[first]);
    out[last + 1..].fill(series[last]);
    for w in valid.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a + 1 {
            continue;
        }
        let (va, vb) = (series[a], series[b]);
        for (i, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            *slot = match mode {
                GapFill::Linear => va + (vb - va) * ((i - a) as f64 / (b - a) as f64),
                GapFill::Hold => va,
            };
        }
    }
    Ok(out)
}

/// Centered moving average; near the edges the window is truncated.
pub fn smooth(series: &[f64], window: usize) -> Result<Vec<f64>, ReadinessError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(ReadinessError::InvalidConfig(format!(
            "smoothing window {window} must be odd and >= 1"
        )));
    }
    if window > series.len() {
        return Err(ReadinessError::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    if window == 1 {
        return Ok(series.to_vec());
    }
    let half = window / 2;
    let n = series.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}

/// `(x - mean) / sd`; a flat series maps to zeros.
pub fn zscore_normalize(series: &[f64]) -> Result<Vec<f64>, ReadinessError> {
    let (mean, sd) = moments(series).ok_or(ReadinessError::EmptySeries)?;
    if sd == 0.0 {
        return Ok(vec![0.0; series.len()]);
    }
    Ok(series.iter().map(|v| (v - mean) / sd).collect())
}

/// Peak of each consecutive block; a trailing partial block is kept.
pub fn rolling_max(series: &[f64], block_size: usize) -> Result<Vec<f64>, ReadinessError> {
    if block_size == 0 {
        return Err(ReadinessError::InvalidConfig(
            "block_size must be >= 1".into(),
        ));
    }
    if series.is_empty() {
        return Err(ReadinessError::EmptySeries);
    }
    Ok(series
        .chunks(block_size)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Runs the full stage chain on one axis.
pub fn prepare_axis(series: &[f64], config: &ReadinessConfig) -> Result<Vec<f64>, ReadinessError> {
    let mask = detect_outliers(series, config.sigma_threshold)?;
    let filled = fill_gaps_with(series, &mask, config.gap_fill)?;
    let smoothed = smooth(&filled, config.smooth_window.min(odd_floor(filled.len())))?;
    let cleaned = if config.normalize {
        zscore_normalize(&smoothed)?
    } else {
        smoothed
    };
    rolling_max(&cleaned, config.block_size)
}

fn odd_floor(n: usize) -> usize {
    if n % 2 == 1 {
        n
    } else {
        n.saturating_sub(1).max(1)
    }
}

/// Turns three aligned axes into block-level peak vectors.
pub fn run_readiness(
    raw: &RawAxes,
    config: &ReadinessConfig,
) -> Result<FeatureSeries, ReadinessError> {
    config.validate()?;
    raw.check_lengths()?;
    if raw.is_empty() {
        return Err(ReadinessError::EmptySeries);
    }
    let px = prepare_axis(&raw.x, config)?;
    let py = prepare_axis(&raw.y, config)?;
    let pz = prepare_axis(&raw.z, config)?;
    let bs = config.block_size;
    let blocks = (0..px.len())
        .map(|i| {
            let first = i * bs;
            let last = ((i + 1) * bs).min(raw.len()) - 1;
            FeatureBlock {
                index: i,
                peaks: [px[i], py[i], pz[i]],
                time_range: (raw.timestamps[first], raw.timestamps[last]),
            }
        })
        .collect();
    Ok(FeatureSeries {
        blocks,
        config_used: config.clone(),
    })
}
