//! Physical interface: what arrives from the shop floor and how it is framed.

mod replay;
mod sample;
mod sim;
mod wire;

pub use replay::{replay_trace, ReplaySpeed, TraceReader};
pub(crate) use sample::is_plc_code;
pub use sample::{is_valid_asset_id, topic_for, Channel, Quality, TelemetrySample};
pub use sim::{
    simulate_scenario, FailureWindow, GroundTruth, MachineTruth, PhaseInterval, PhaseSignal,
    SampleStream, ScenarioSpec, SignalModel, DEFAULT_BLOCK_SIZE, DEFAULT_MACHINES,
    DEFAULT_SAMPLE_RATE,
};
pub use wire::{decode_sample, encode_sample};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhysicalError {
    #[error("invalid asset id {0:?}")]
    InvalidAssetId(String),
    #[error("malformed line{}: {reason}", .line.map(|l| format!(" {l}")).unwrap_or_default())]
    MalformedLine { line: Option<usize>, reason: String },
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("trace file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PhysicalError {
    pub(crate) fn malformed(reason: impl Into<String>) -> Self {
        PhysicalError::MalformedLine {
            line: None,
            reason: reason.into(),
        }
    }
}
