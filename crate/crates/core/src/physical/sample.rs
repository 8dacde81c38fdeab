use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PhysicalError;
use crate::Nanos;

/// Telemetry channel of a machine-level asset.
///
/// The three accelerometer axes arrive over MQTT; `PlcState` is the PLC
/// machine-state code read over OPC-UA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AccelX,
    AccelY,
    AccelZ,
    PlcState,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::AccelX,
        Channel::AccelY,
        Channel::AccelZ,
        Channel::PlcState,
    ];
    pub const ACCEL: [Channel; 3] = [Channel::AccelX, Channel::AccelY, Channel::AccelZ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::AccelX => "accel_x",
            Channel::AccelY => "accel_y",
            Channel::AccelZ => "accel_z",
            Channel::PlcState => "plc_state",
        }
    }

    pub fn is_accel(self) -> bool {
        !matches!(self, Channel::PlcState)
    }

    /// Axis index (0, 1, 2) for accelerometer channels.
    pub fn axis(self) -> Option<usize> {
        match self {
            Channel::AccelX => Some(0),
            Channel::AccelY => Some(1),
            Channel::AccelZ => Some(2),
            Channel::PlcState => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = PhysicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| PhysicalError::malformed(format!("unknown channel {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Good,
    Suspect,
    Missing,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Good => "good",
            Quality::Suspect => "suspect",
            Quality::Missing => "missing",
        }
    }
}

/// One timestamped reading from one asset channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub asset_id: String,
    pub channel: Channel,
    pub ts: Nanos,
    pub value: f64,
    pub quality: Quality,
}

impl TelemetrySample {
    pub fn new(asset_id: impl Into<String>, channel: Channel, ts: Nanos, value: f64) -> Self {
        Self {
            asset_id: asset_id.into(),
            channel,
            ts,
            value,
            quality: Quality::Good,
        }
    }

    pub fn with_quality(mut self, quality: Quality) -> Self {
        self.quality = quality;
        self
    }

    /// Checks the sample invariants: valid asset id, `ts >= 0`, finite
    /// value, and a PLC code in `0..=3` when the reading is good.
    pub fn validate(&self) -> Result<(), PhysicalError> {
        if !is_valid_asset_id(&self.asset_id) {
            return Err(PhysicalError::InvalidAssetId(self.asset_id.clone()));
        }
        if self.ts < 0 {
            return Err(PhysicalError::malformed(format!(
                "negative timestamp {}",
                self.ts
            )));
        }
        if !self.value.is_finite() {
            return Err(PhysicalError::malformed("non-finite value"));
        }
        if self.channel == Channel::PlcState
            && self.quality == Quality::Good
            && !is_plc_code(self.value)
        {
            return Err(PhysicalError::malformed(format!(
                "plc_state value {} outside 0..=3",
                self.value
            )));
        }
        Ok(())
    }
}

pub(crate) fn is_plc_code(value: f64) -> bool {
    value.fract() == 0.0 && (0.0..=3.0).contains(&value)
}

/// Asset ids are non-empty and may not contain the topic separator.
pub fn is_valid_asset_id(asset_id: &str) -> bool {
    !asset_id.is_empty() && !asset_id.contains('/')
}

/// Topic under which a channel of an asset is published: `mf/<asset>/<channel>`.
pub fn topic_for(asset_id: &str, channel: Channel) -> Result<String, PhysicalError> {
    if !is_valid_asset_id(asset_id) {
        return Err(PhysicalError::InvalidAssetId(asset_id.to_owned()));
    }
    Ok(format!("mf/{asset_id}/{channel}"))
}
