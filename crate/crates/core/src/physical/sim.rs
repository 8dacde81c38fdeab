//! Deterministic stand-in for the production line.
//!
//! Every random draw comes from a ChaCha8 stream keyed on the scenario seed,
//! with the stream id derived from (machine, axis) and the word position from
//! the sample index. A sample's value therefore depends only on its
//! coordinates, not on how many samples were generated before it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{is_valid_asset_id, Channel, PhysicalError, Quality, TelemetrySample};
use crate::twin::MachineState;
use crate::{Nanos, NANOS_PER_SECOND};

pub const DEFAULT_MACHINES: [&str; 4] = ["drill-1", "oven-1", "press-1", "sorter-1"];
pub const DEFAULT_SAMPLE_RATE: u32 = 100;
/// Block size used when projecting the schedule onto feature blocks.
pub const DEFAULT_BLOCK_SIZE: usize = 50;

/// u64 draws reserved per sample: two for Box-Muller, spike trigger, spike
/// sign, dropout.
const DRAWS_PER_SAMPLE: u128 = 5;

/// Vibration signature of one machine state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSignal {
    pub noise_sigma: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
}

impl PhaseSignal {
    pub const fn new(noise_sigma: f64, amplitude: f64, frequency_hz: f64) -> Self {
        Self {
            noise_sigma,
            amplitude,
            frequency_hz,
        }
    }
}

/// Per-state accelerometer model.
///
/// Failure intervals use `failure` and additionally replace a sample with a
/// `±spike_magnitude` reading with probability `spike_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalModel {
    pub idle: PhaseSignal,
    pub active: PhaseSignal,
    pub waiting: PhaseSignal,
    pub failure: PhaseSignal,
    pub spike_rate: f64,
    pub spike_magnitude: f64,
    /// Probability that an accelerometer reading is reported as missing.
    pub dropout_rate: f64,
}

impl Default for SignalModel {
    fn default() -> Self {
        Self {
            idle: PhaseSignal::new(0.05, 0.0, 0.0),
            waiting: PhaseSignal::new(0.1, 0.5, 2.0),
            active: PhaseSignal::new(0.2, 1.0, 5.0),
            failure: PhaseSignal::new(0.3, 2.5, 5.0),
            spike_rate: 0.05,
            spike_magnitude: 10.0,
            dropout_rate: 0.0,
        }
    }
}

impl SignalModel {
    pub fn for_state(&self, state: MachineState) -> &PhaseSignal {
        match state {
            MachineState::Idle => &self.idle,
            MachineState::Active => &self.active,
            MachineState::Waiting => &self.waiting,
            MachineState::Failure => &self.failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseInterval {
    pub machine: String,
    pub start_s: f64,
    pub end_s: f64,
    pub state: MachineState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureWindow {
    pub machine: String,
    pub start_s: f64,
    pub end_s: f64,
}

fn default_machines() -> Vec<String> {
    DEFAULT_MACHINES.iter().map(|m| m.to_string()).collect()
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

/// Scenario description. Serialized form is the `simulate --spec` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(default = "default_machines")]
    pub machines: Vec<String>,
    /// Seconds.
    pub duration: f64,
    /// Hz; must divide 10^9 so timestamps are exact.
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    pub phase_schedule: Vec<PhaseInterval>,
    #[serde(default)]
    pub failure_windows: Vec<FailureWindow>,
    #[serde(default)]
    pub signal: SignalModel,
}

fn snap(t: f64) -> f64 {
    (t * 2.0).round() / 2.0
}

impl ScenarioSpec {
    /// Default production-line scenario: each machine runs Idle, Active and
    /// Waiting with boundaries staggered per machine; the first machine has
    /// a failure window in the middle of its Active phase.
    pub fn microfactory(seed: u64, duration: f64) -> Self {
        Self::microfactory_with_failure(seed, duration, duration / 2.0, duration / 30.0)
    }

    /// Like [`microfactory`](Self::microfactory) with the failure window of
    /// the first machine at `[failure_start, failure_start + failure_len)`
    /// seconds (snapped to half seconds). The window is dropped when it does
    /// not fit inside the Active phase.
    pub fn microfactory_with_failure(
        seed: u64,
        duration: f64,
        failure_start: f64,
        failure_len: f64,
    ) -> Self {
        let machines = default_machines();
        let mut phase_schedule = Vec::new();
        let mut failure_windows = Vec::new();
        for (m, machine) in machines.iter().enumerate() {
            let stagger = m as f64 * 0.02 * duration;
            let a = snap(duration / 3.0 + stagger);
            let b = snap(2.0 * duration / 3.0 + stagger);
            let mut cuts = vec![(0.0, MachineState::Idle), (a, MachineState::Active)];
            if m == 0 {
                let f0 = snap(failure_start);
                let f1 = snap(failure_start + failure_len);
                if f0 > a && f1 > f0 && f1 < b {
                    cuts.push((f0, MachineState::Failure));
                    cuts.push((f1, MachineState::Active));
                    failure_windows.push(FailureWindow {
                        machine: machine.clone(),
                        start_s: f0,
                        end_s: f1,
                    });
                }
            }
            cuts.push((b, MachineState::Waiting));
            cuts.push((duration, MachineState::Idle));
            for w in cuts.windows(2) {
                let (start, state) = w[0];
                let end = w[1].0.min(duration);
                if end > start {
                    phase_schedule.push(PhaseInterval {
                        machine: machine.clone(),
                        start_s: start,
                        end_s: end,
                        state,
                    });
                }
            }
        }
        Self {
            seed,
            machines,
            duration,
            sample_rate: DEFAULT_SAMPLE_RATE,
            phase_schedule,
            failure_windows,
            signal: SignalModel::default(),
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * f64::from(self.sample_rate)).round() as usize
    }

    fn sample_at(&self, seconds: f64) -> usize {
        (seconds * f64::from(self.sample_rate)).round() as usize
    }

    pub fn ts_of(&self, index: usize) -> Nanos {
        (index as i64) * (NANOS_PER_SECOND / i64::from(self.sample_rate))
    }

    /// Per machine, the schedule as sample-index spans sorted by start.
    fn spans(&self) -> Result<Vec<Vec<Span>>, PhysicalError> {
        let bad = |msg: String| Err(PhysicalError::InvalidSpec(msg));
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return bad(format!(
                "duration {} must be finite and >= 0",
                self.duration
            ));
        }
        if self.sample_rate == 0 || NANOS_PER_SECOND % i64::from(self.sample_rate) != 0 {
            return bad(format!(
                "sample_rate {} must be positive and divide 1e9",
                self.sample_rate
            ));
        }
        let mut seen = BTreeSet::new();
        for m in &self.machines {
            if !is_valid_asset_id(m) {
                return bad(format!("invalid machine id {m:?}"));
            }
            if !seen.insert(m.as_str()) {
                return bad(format!("duplicate machine {m:?}"));
            }
        }
        let n = self.n_samples();
        let mut spans: Vec<Vec<Span>> = vec![Vec::new(); self.machines.len()];
        for p in &self.phase_schedule {
            let Some(m) = self.machines.iter().position(|x| *x == p.machine) else {
                return bad(format!("schedule names unknown machine {:?}", p.machine));
            };
            if !(p.start_s.is_finite() && p.end_s.is_finite()) || p.start_s >= p.end_s {
                return bad(format!("empty or invalid interval for {:?}", p.machine));
            }
            spans[m].push(Span {
                start: self.sample_at(p.start_s),
                end: self.sample_at(p.end_s),
                state: p.state,
            });
        }
        for (m, list) in spans.iter_mut().enumerate() {
            list.sort_by_key(|s| s.start);
            if n == 0 {
                list.clear();
                continue;
            }
            let mut cursor = 0;
            for s in list.iter() {
                if s.start != cursor || s.end <= s.start {
                    return bad(format!(
                        "schedule of {:?} does not tile [0, duration) at sample {cursor}",
                        self.machines[m]
                    ));
                }
                cursor = s.end;
            }
            if cursor != n {
                return bad(format!(
                    "schedule of {:?} ends at sample {cursor}, expected {n}",
                    self.machines[m]
                ));
            }
        }
        for w in &self.failure_windows {
            let Some(m) = self.machines.iter().position(|x| *x == w.machine) else {
                return bad(format!(
                    "failure window names unknown machine {:?}",
                    w.machine
                ));
            };
            let (a, b) = (self.sample_at(w.start_s), self.sample_at(w.end_s));
            if a >= b {
                return bad(format!("empty failure window for {:?}", w.machine));
            }
            let inside = spans[m]
                .iter()
                .any(|s| s.state == MachineState::Failure && s.start <= a && b <= s.end);
            if !inside {
                return bad(format!(
                    "failure window [{}, {}) of {:?} is not inside a Failure interval",
                    w.start_s, w.end_s, w.machine
                ));
            }
        }
        Ok(spans)
    }

    pub fn validate(&self) -> Result<(), PhysicalError> {
        self.spans().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Span {
    start: usize,
    end: usize,
    state: MachineState,
}

/// Schedule of one machine projected onto feature blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineTruth {
    pub asset_id: String,
    pub n_samples: usize,
    pub n_blocks: usize,
    /// Block indices where a new schedule interval begins, strictly increasing.
    pub change_points: Vec<usize>,
    /// State at the first sample of each block.
    pub block_phases: Vec<MachineState>,
    /// Blocks that overlap a failure window.
    pub anomaly_blocks: Vec<usize>,
    /// Interval boundaries in sample indices (interior only).
    pub boundary_samples: Vec<usize>,
    /// Failure windows in sample indices, half-open.
    pub failure_samples: Vec<(usize, usize)>,
    spans: Vec<(usize, usize, MachineState)>,
}

impl MachineTruth {
    fn build(
        asset_id: &str,
        n_samples: usize,
        spans: &[Span],
        failures: Vec<(usize, usize)>,
        block_size: usize,
    ) -> Self {
        let boundary_samples: Vec<usize> = spans.iter().skip(1).map(|s| s.start).collect();
        let spans: Vec<_> = spans.iter().map(|s| (s.start, s.end, s.state)).collect();
        let mut t = Self {
            asset_id: asset_id.to_owned(),
            n_samples,
            n_blocks: 0,
            change_points: Vec::new(),
            block_phases: Vec::new(),
            anomaly_blocks: Vec::new(),
            boundary_samples,
            failure_samples: failures,
            spans,
        };
        t.project_onto(block_size);
        t
    }

    fn project_onto(&mut self, block_size: usize) {
        let bs = block_size.max(1);
        let n_blocks = self.n_samples.div_ceil(bs);
        let mut cps: Vec<usize> = self
            .boundary_samples
            .iter()
            .map(|&b| (b + bs / 2) / bs)
            .filter(|&c| c > 0 && c < n_blocks)
            .collect();
        cps.dedup();
        let block_phases = (0..n_blocks)
            .map(|blk| {
                let s = blk * bs;
                self.spans
                    .iter()
                    .find(|(a, b, _)| *a <= s && s < *b)
                    .map(|x| x.2)
                    .unwrap_or(MachineState::Idle)
            })
            .collect();
        let anomalies: BTreeSet<usize> = self
            .failure_samples
            .iter()
            .flat_map(|&(a, b)| (a / bs)..b.div_ceil(bs))
            .collect();
        self.n_blocks = n_blocks;
        self.change_points = cps;
        self.block_phases = block_phases;
        self.anomaly_blocks = anomalies.into_iter().collect();
    }

    /// Number of schedule intervals, i.e. the true segment count.
    pub fn segment_count(&self) -> usize {
        self.spans.len()
    }
}

/// What the simulator knows about the scenario, for scoring pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub block_size: usize,
    pub sample_rate: u32,
    pub machines: Vec<MachineTruth>,
}

impl GroundTruth {
    fn from_spec(spec: &ScenarioSpec, spans: &[Vec<Span>], block_size: usize) -> Self {
        let machines = spec
            .machines
            .iter()
            .zip(spans)
            .filter(|(_, s)| !s.is_empty())
            .map(|(m, s)| {
                let failures = spec
                    .failure_windows
                    .iter()
                    .filter(|w| w.machine == *m)
                    .map(|w| (spec.sample_at(w.start_s), spec.sample_at(w.end_s)))
                    .collect();
                MachineTruth::build(m, spec.n_samples(), s, failures, block_size)
            })
            .collect();
        Self {
            block_size,
            sample_rate: spec.sample_rate,
            machines,
        }
    }

    /// Re-projects block-level fields onto a different block size.
    pub fn project(&self, block_size: usize) -> GroundTruth {
        let mut out = self.clone();
        out.block_size = block_size;
        for m in &mut out.machines {
            m.project_onto(block_size);
        }
        out
    }

    pub fn machine(&self, asset_id: &str) -> Option<&MachineTruth> {
        self.machines.iter().find(|m| m.asset_id == asset_id)
    }
}

/// Pull-based, time-ordered sample stream of a scenario.
///
/// Order: by sample index, then machine (spec order), then channel with the
/// `plc_state` reading first whenever a new interval begins.
pub struct SampleStream {
    spec: Arc<ScenarioSpec>,
    spans: Vec<Vec<Span>>,
    n_samples: usize,
    index: usize,
    machine: usize,
    slot: usize,
    rng: ChaCha8Rng,
}

impl SampleStream {
    fn new(spec: ScenarioSpec, spans: Vec<Vec<Span>>) -> Self {
        let n_samples = if spans.iter().all(Vec::is_empty) {
            0
        } else {
            spec.n_samples()
        };
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Self {
            spec: Arc::new(spec),
            spans,
            n_samples,
            index: 0,
            machine: 0,
            slot: 0,
            rng,
        }
    }

    fn span_at(&self, machine: usize, index: usize) -> Span {
        let list = &self.spans[machine];
        let pos = list.partition_point(|s| s.end <= index);
        list[pos]
    }

    fn accel_value(
        &mut self,
        machine: usize,
        axis: usize,
        index: usize,
        state: MachineState,
    ) -> (f64, Quality) {
        self.rng.set_stream(((machine as u64) << 2) | axis as u64);
        self.rng.set_word_pos(index as u128 * DRAWS_PER_SAMPLE * 2);
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random();
        let spike_u: f64 = self.rng.random();
        let sign_u: f64 = self.rng.random();
        let drop_u: f64 = self.rng.random();

        let model = &self.spec.signal;
        let sig = model.for_state(state);
        let t = index as f64 / f64::from(self.spec.sample_rate);
        let gauss = (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos();
        let phase = axis as f64 * TAU / 3.0;
        let mut v =
            sig.noise_sigma * gauss + sig.amplitude * (TAU * sig.frequency_hz * t + phase).sin();
        if state == MachineState::Failure && spike_u < model.spike_rate {
            v = if sign_u < 0.5 {
                -model.spike_magnitude
            } else {
                model.spike_magnitude
            };
        }
        if drop_u < model.dropout_rate {
            (0.0, Quality::Missing)
        } else {
            (v, Quality::Good)
        }
    }
}

impl Iterator for SampleStream {
    type Item = TelemetrySample;

    fn next(&mut self) -> Option<TelemetrySample> {
        loop {
            if self.index >= self.n_samples {
                return None;
            }
            let (m, slot, i) = (self.machine, self.slot, self.index);
            self.slot += 1;
            if self.slot == 4 {
                self.slot = 0;
                self.machine += 1;
                if self.machine == self.spans.len() {
                    self.machine = 0;
                    self.index += 1;
                }
            }
            if self.spans[m].is_empty() {
                continue;
            }
            let span = self.span_at(m, i);
            let ts = self.spec.ts_of(i);
            let asset = &self.spec.machines[m];
            if slot == 0 {
                if span.start == i {
                    return Some(TelemetrySample::new(
                        asset.clone(),
                        Channel::PlcState,
                        ts,
                        f64::from(span.state.code()),
                    ));
                }
                continue;
            }
            let axis = slot - 1;
            let asset = asset.clone();
            let (value, quality) = self.accel_value(m, axis, i, span.state);
            return Some(TelemetrySample {
                asset_id: asset,
                channel: Channel::ACCEL[axis],
                ts,
                value,
                quality,
            });
        }
    }
}

/// Builds the sample stream and ground truth (projected onto
/// [`DEFAULT_BLOCK_SIZE`]) for a scenario.
pub fn simulate_scenario(
    spec: &ScenarioSpec,
) -> Result<(SampleStream, GroundTruth), PhysicalError> {
    let spans = spec.spans()?;
    let truth = GroundTruth::from_spec(spec, &spans, DEFAULT_BLOCK_SIZE);
    Ok((SampleStream::new(spec.clone(), spans), truth))
}
