//! Machine-level digital twins: lifecycle, shadowed state and OEE.
//!
//! A [`Twin`] guards its state with a lock so mutations are serialized per
//! twin, while [`Twin::snapshot`] hands out owned copies that can be moved
//! across threads freely.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orchestrator::AnomalyEvent;
use crate::physical::{is_valid_asset_id, Channel, Quality, TelemetrySample};
use crate::Nanos;

/// Default freshness timeout on the simulated clock.
pub const DEFAULT_FRESHNESS_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecyclePhase {
    Unbound,
    Bound,
    Synchronized,
    OutOfSync,
    Done,
    Stopped,
}

impl LifecyclePhase {
    pub const ALL: [LifecyclePhase; 6] = [
        LifecyclePhase::Unbound,
        LifecyclePhase::Bound,
        LifecyclePhase::Synchronized,
        LifecyclePhase::OutOfSync,
        LifecyclePhase::Done,
        LifecyclePhase::Stopped,
    ];

    /// Phases in which telemetry is accepted.
    pub fn is_bound(self) -> bool {
        matches!(
            self,
            LifecyclePhase::Bound | LifecyclePhase::Synchronized | LifecyclePhase::OutOfSync
        )
    }
}

impl fmt::Display for LifecyclePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecycleEvent {
    Bind,
    SyncEstablished,
    SyncLost,
    SyncRecovered,
    WorkComplete,
    Stop,
    Fault,
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 7] = [
        LifecycleEvent::Bind,
        LifecycleEvent::SyncEstablished,
        LifecycleEvent::SyncLost,
        LifecycleEvent::SyncRecovered,
        LifecycleEvent::WorkComplete,
        LifecycleEvent::Stop,
        LifecycleEvent::Fault,
    ];
}

/// The lifecycle transition table. `None` means the pair is rejected.
pub fn next_phase(phase: LifecyclePhase, event: LifecycleEvent) -> Option<LifecyclePhase> {
    use LifecycleEvent as E;
    use LifecyclePhase as P;
    match (phase, event) {
        (_, E::Fault) => Some(P::Unbound),
        (P::Unbound, E::Bind) => Some(P::Bound),
        (P::Bound, E::SyncEstablished) => Some(P::Synchronized),
        (P::Synchronized, E::SyncLost) => Some(P::OutOfSync),
        (P::OutOfSync, E::SyncRecovered) => Some(P::Synchronized),
        (P::Synchronized, E::WorkComplete) => Some(P::Done),
        (P::Done, E::Stop) => Some(P::Stopped),
        _ => None,
    }
}

/// Machine state as reported on the PLC channel (codes 0..=3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MachineState {
    Idle,
    Active,
    Waiting,
    Failure,
}

impl MachineState {
    pub const ALL: [MachineState; 4] = [
        MachineState::Idle,
        MachineState::Active,
        MachineState::Waiting,
        MachineState::Failure,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    /// Decodes a PLC reading; the value must be an exact integer code.
    pub fn from_value(value: f64) -> Option<Self> {
        if value.fract() == 0.0 && (0.0..=3.0).contains(&value) {
            Self::from_code(value as u8)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Number(f64),
    State(MachineState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub value: PropertyValue,
    pub ts: Nanos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    StateChanged {
        from: Option<MachineState>,
        to: MachineState,
    },
    AnomalyDetected(AnomalyEvent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalEvent {
    pub ts: Nanos,
    /// Lifecycle phase the twin was in when the event was emitted.
    pub phase: LifecyclePhase,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub description: String,
    pub parameters: Vec<String>,
}

/// Properties, events, relationships and actions of one twin.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TwinState {
    pub properties: BTreeMap<String, Property>,
    pub events: Vec<DigitalEvent>,
    pub relationships: BTreeMap<String, String>,
    pub actions: BTreeMap<String, ActionDescriptor>,
}

impl TwinState {
    pub fn latest_ts(&self) -> Option<Nanos> {
        self.properties.values().map(|p| p.ts).max()
    }
}

/// Owned, immutable copy of a twin at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSnapshot {
    pub asset_id: String,
    pub phase: LifecyclePhase,
    pub state: TwinState,
}

/// Effect of shadowing one sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateDelta {
    pub changed: Vec<String>,
    pub events: Vec<DigitalEvent>,
    /// The sample was older than the stored property and was dropped.
    pub stale: bool,
    /// The sample carried no usable value (e.g. non-good PLC reading).
    pub rejected: bool,
    /// Receipt of the sample moved the twin from OutOfSync back to Synchronized.
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwinError {
    #[error("invalid asset id {0:?}")]
    InvalidId(String),
    #[error("asset id {0:?} already has a twin")]
    DuplicateAssetId(String),
    #[error("event {event:?} is not valid in phase {phase}")]
    InvalidTransition {
        phase: LifecyclePhase,
        event: LifecycleEvent,
    },
    #[error("twin is not bound (phase {0})")]
    TwinNotBound(LifecyclePhase),
    #[error("invalid OEE inputs: {0}")]
    InvalidOee(String),
}

#[derive(Debug)]
struct Inner {
    phase: LifecyclePhase,
    state: TwinState,
}

#[derive(Debug)]
pub struct Twin {
    asset_id: String,
    inner: RwLock<Inner>,
}

pub(crate) const MACHINE_STATE_PROPERTY: &str = "machine_state";

impl Twin {
    fn new(asset_id: String, relationships: BTreeMap<String, String>) -> Self {
        let mut actions = BTreeMap::new();
        actions.insert(
            "run_zeroconf".to_owned(),
            ActionDescriptor {
                description: "benchmark pipeline replicas on an archived window".to_owned(),
                parameters: vec!["time_range".to_owned()],
            },
        );
        Self {
            asset_id,
            inner: RwLock::new(Inner {
                phase: LifecyclePhase::Unbound,
                state: TwinState {
                    relationships,
                    actions,
                    ..TwinState::default()
                },
            }),
        }
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    fn read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn phase(&self) -> LifecyclePhase {
        self.read().phase
    }

    pub fn apply_lifecycle_event(
        &self,
        event: LifecycleEvent,
    ) -> Result<LifecyclePhase, TwinError> {
        let mut inner = self.write();
        let next = next_phase(inner.phase, event).ok_or(TwinError::InvalidTransition {
            phase: inner.phase,
            event,
        })?;
        inner.phase = next;
        Ok(next)
    }

    /// Mirrors one telemetry sample into the twin state.
    pub fn shadow_sample(&self, sample: &TelemetrySample) -> Result<StateDelta, TwinError> {
        let mut inner = self.write();
        if !inner.phase.is_bound() {
            return Err(TwinError::TwinNotBound(inner.phase));
        }
        let mut delta = StateDelta::default();
        if inner.phase == LifecyclePhase::OutOfSync {
            inner.phase = next_phase(inner.phase, LifecycleEvent::SyncRecovered)
                .expect("OutOfSync accepts SyncRecovered");
            delta.recovered = true;
        }

        let (name, value) = match sample.channel {
            Channel::PlcState => {
                let decoded = (sample.quality == Quality::Good)
                    .then(|| MachineState::from_value(sample.value))
                    .flatten();
                match decoded {
                    Some(s) => (MACHINE_STATE_PROPERTY, PropertyValue::State(s)),
                    None => {
                        delta.rejected = true;
                        return Ok(delta);
                    }
                }
            }
            ch => {
                if sample.quality == Quality::Missing {
                    delta.rejected = true;
                    return Ok(delta);
                }
                (ch.as_str(), PropertyValue::Number(sample.value))
            }
        };

        let previous = inner.state.properties.get(name);
        if previous.is_some_and(|p| sample.ts < p.ts) {
            delta.stale = true;
            return Ok(delta);
        }
        let prev_state = match previous {
            Some(Property {
                value: PropertyValue::State(s),
                ..
            }) => Some(*s),
            _ => None,
        };
        if let PropertyValue::State(to) = value {
            if prev_state != Some(to) {
                let event = DigitalEvent {
                    ts: sample.ts,
                    phase: inner.phase,
                    kind: EventKind::StateChanged {
                        from: prev_state,
                        to,
                    },
                };
                inner.state.events.push(event.clone());
                delta.events.push(event);
            }
        }
        inner.state.properties.insert(
            name.to_owned(),
            Property {
                value,
                ts: sample.ts,
            },
        );
        delta.changed.push(name.to_owned());
        Ok(delta)
    }

    /// Returns `SyncLost` when a synchronized twin has not heard from its
    /// physical counterpart for longer than `timeout`.
    pub fn check_freshness(&self, now: Nanos, timeout: Duration) -> Option<LifecycleEvent> {
        let inner = self.read();
        if inner.phase != LifecyclePhase::Synchronized {
            return None;
        }
        let timeout = i64::try_from(timeout.as_nanos()).unwrap_or(i64::MAX);
        match inner.state.latest_ts() {
            Some(last) if now.saturating_sub(last) <= timeout => None,
            _ => Some(LifecycleEvent::SyncLost),
        }
    }

    pub fn snapshot(&self) -> TwinSnapshot {
        let inner = self.read();
        TwinSnapshot {
            asset_id: self.asset_id.clone(),
            phase: inner.phase,
            state: inner.state.clone(),
        }
    }

    pub fn expose_action(&self, name: impl Into<String>, action: ActionDescriptor) {
        self.write().state.actions.insert(name.into(), action);
    }

    /// Appends `kind` if the twin is in `required` phase; returns the event
    /// when it was appended.
    pub(crate) fn emit_if(
        &self,
        required: LifecyclePhase,
        ts: Nanos,
        kind: EventKind,
    ) -> Result<DigitalEvent, LifecyclePhase> {
        let mut inner = self.write();
        if inner.phase != required {
            return Err(inner.phase);
        }
        let event = DigitalEvent {
            ts,
            phase: inner.phase,
            kind,
        };
        inner.state.events.push(event.clone());
        Ok(event)
    }
}

/// Owner of all twins in a runtime; enforces asset-id uniqueness.
#[derive(Debug, Default)]
pub struct TwinRegistry {
    twins: RwLock<BTreeMap<String, Arc<Twin>>>,
}

impl TwinRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates an Unbound twin with the given relationships
    /// (e.g. `downstream -> oven-1`).
    pub fn create_twin(
        &self,
        asset_id: &str,
        relationships: BTreeMap<String, String>,
    ) -> Result<Arc<Twin>, TwinError> {
        if !is_valid_asset_id(asset_id) {
            return Err(TwinError::InvalidId(asset_id.to_owned()));
        }
        let mut twins = self.twins.write().unwrap_or_else(|e| e.into_inner());
        if twins.contains_key(asset_id) {
            return Err(TwinError::DuplicateAssetId(asset_id.to_owned()));
        }
        let twin = Arc::new(Twin::new(asset_id.to_owned(), relationships));
        twins.insert(asset_id.to_owned(), Arc::clone(&twin));
        Ok(twin)
    }

    pub fn get(&self, asset_id: &str) -> Option<Arc<Twin>> {
        self.twins
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(asset_id)
            .cloned()
    }

    pub fn asset_ids(&self) -> Vec<String> {
        self.twins
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect()
    }
}

/// Inputs of the OEE computation. Construct with [`OeeInputs::new`], which
/// enforces the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OeeInputs {
    uptime: f64,
    downtime: f64,
    actual_rate: f64,
    ideal_rate: f64,
    quality_factor: f64,
}

impl OeeInputs {
    /// Times in seconds, rates in units/hour, quality as a fraction.
    pub fn new(
        uptime: f64,
        downtime: f64,
        actual_rate: f64,
        ideal_rate: f64,
        quality_factor: f64,
    ) -> Result<Self, TwinError> {
        let finite_non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if ![uptime, downtime, actual_rate]
            .into_iter()
            .all(finite_non_negative)
        {
            return Err(TwinError::InvalidOee(
                "uptime, downtime and actual rate must be finite and >= 0".into(),
            ));
        }
        if !(ideal_rate.is_finite() && ideal_rate > 0.0) {
            return Err(TwinError::InvalidOee("ideal rate must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&quality_factor) {
            return Err(TwinError::InvalidOee(
                "quality factor must be in [0, 1]".into(),
            ));
        }
        Ok(Self {
            uptime,
            downtime,
            actual_rate,
            ideal_rate,
            quality_factor,
        })
    }

    /// Same as [`OeeInputs::new`] with the quality factor at 1.0.
    pub fn without_quality(
        uptime: f64,
        downtime: f64,
        actual_rate: f64,
        ideal_rate: f64,
    ) -> Result<Self, TwinError> {
        Self::new(uptime, downtime, actual_rate, ideal_rate, 1.0)
    }
}

/// Overall Equipment Effectiveness as availability × performance × quality.
///
/// Performance is capped at 1 so bursts above the ideal rate cannot inflate
/// the result; availability is 0 when there is neither uptime nor downtime.
pub fn compute_oee(inputs: &OeeInputs) -> f64 {
    let total = inputs.uptime + inputs.downtime;
    let availability = if total > 0.0 {
        inputs.uptime / total
    } else {
        0.0
    };
    let performance = (inputs.actual_rate / inputs.ideal_rate).min(1.0);
    availability * performance * inputs.quality_factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bound_twin(registry: &TwinRegistry, id: &str) -> Arc<Twin> {
        let t = registry.create_twin(id, BTreeMap::new()).unwrap();
        t.apply_lifecycle_event(LifecycleEvent::Bind).unwrap();
        t.apply_lifecycle_event(LifecycleEvent::SyncEstablished)
            .unwrap();
        t
    }

    #[test]
    fn create_twin_starts_unbound() {
        let reg = TwinRegistry::new();
        let rel = BTreeMap::from([("downstream".to_string(), "oven-1".to_string())]);
        let t = reg.create_twin("drill-1", rel).unwrap();
        assert_eq!(t.phase(), LifecyclePhase::Unbound);
        let snap = t.snapshot();
        assert!(snap.state.properties.is_empty());
        assert!(snap.state.events.is_empty());
        assert_eq!(snap.state.relationships["downstream"], "oven-1");
    }

    #[test]
    fn create_twin_rejects_empty_and_duplicate() {
        let reg = TwinRegistry::new();
        assert!(matches!(
            reg.create_twin("", BTreeMap::new()),
            Err(TwinError::InvalidId(_))
        ));
        reg.create_twin("drill-1", BTreeMap::new()).unwrap();
        assert!(matches!(
            reg.create_twin("drill-1", BTreeMap::new()),
            Err(TwinError::DuplicateAssetId(_))
        ));
    }

    #[test]
    fn transition_examples() {
        use LifecycleEvent as E;
        use LifecyclePhase as P;
        assert_eq!(next_phase(P::Unbound, E::Bind), Some(P::Bound));
        assert_eq!(next_phase(P::Synchronized, E::SyncLost), Some(P::OutOfSync));
        assert_eq!(next_phase(P::Done, E::Bind), None);
        assert_eq!(next_phase(P::Stopped, E::Fault), Some(P::Unbound));
        assert_eq!(next_phase(P::OutOfSync, E::WorkComplete), None);
    }

    #[test]
    fn rejected_transition_leaves_phase() {
        let reg = TwinRegistry::new();
        let t = reg.create_twin("a", BTreeMap::new()).unwrap();
        let err = t.apply_lifecycle_event(LifecycleEvent::Stop).unwrap_err();
        assert_eq!(
            err,
            TwinError::InvalidTransition {
                phase: LifecyclePhase::Unbound,
                event: LifecycleEvent::Stop
            }
        );
        assert_eq!(t.phase(), LifecyclePhase::Unbound);
    }

    #[test]
    fn plc_change_emits_event() {
        let reg = TwinRegistry::new();
        let t = bound_twin(&reg, "drill-1");
        t.shadow_sample(&TelemetrySample::new("drill-1", Channel::PlcState, 1, 0.0))
            .unwrap();
        let d = t
            .shadow_sample(&TelemetrySample::new("drill-1", Channel::PlcState, 2, 1.0))
            .unwrap();
        assert_eq!(d.changed, vec!["machine_state"]);
        assert_eq!(
            d.events[0].kind,
            EventKind::StateChanged {
                from: Some(MachineState::Idle),
                to: MachineState::Active
            }
        );
        let snap = t.snapshot();
        assert_eq!(
            snap.state.properties["machine_state"].value,
            PropertyValue::State(MachineState::Active)
        );
        // Same state again: property refresh only.
        let d = t
            .shadow_sample(&TelemetrySample::new("drill-1", Channel::PlcState, 3, 1.0))
            .unwrap();
        assert!(d.events.is_empty());
    }

    #[test]
    fn accel_refresh_has_no_event() {
        let reg = TwinRegistry::new();
        let t = bound_twin(&reg, "m");
        let d = t
            .shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 5, 0.3))
            .unwrap();
        assert_eq!(d.changed, vec!["accel_x"]);
        assert!(d.events.is_empty());
    }

    #[test]
    fn stale_sample_flagged_and_ignored() {
        let reg = TwinRegistry::new();
        let t = bound_twin(&reg, "m");
        t.shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 10, 1.0))
            .unwrap();
        let before = t.snapshot();
        let d = t
            .shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 9, 2.0))
            .unwrap();
        assert!(d.stale);
        assert_eq!(t.snapshot(), before);
    }

    #[test]
    fn unbound_twin_rejects_samples() {
        let reg = TwinRegistry::new();
        let t = reg.create_twin("m", BTreeMap::new()).unwrap();
        assert_eq!(
            t.shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 1, 0.0)),
            Err(TwinError::TwinNotBound(LifecyclePhase::Unbound))
        );
    }

    #[test]
    fn sample_recovers_out_of_sync() {
        let reg = TwinRegistry::new();
        let t = bound_twin(&reg, "m");
        t.apply_lifecycle_event(LifecycleEvent::SyncLost).unwrap();
        let d = t
            .shadow_sample(&TelemetrySample::new("m", Channel::AccelY, 1, 0.0))
            .unwrap();
        assert!(d.recovered);
        assert_eq!(t.phase(), LifecyclePhase::Synchronized);
    }

    #[test]
    fn freshness() {
        let reg = TwinRegistry::new();
        let t = reg.create_twin("m", BTreeMap::new()).unwrap();
        t.apply_lifecycle_event(LifecycleEvent::Bind).unwrap();
        t.shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 0, 0.0))
            .unwrap();
        let s = 1_000_000_000;
        // Bound twins never degrade.
        assert_eq!(t.check_freshness(100 * s, DEFAULT_FRESHNESS_TIMEOUT), None);
        t.apply_lifecycle_event(LifecycleEvent::SyncEstablished)
            .unwrap();
        assert_eq!(
            t.check_freshness(6 * s, DEFAULT_FRESHNESS_TIMEOUT),
            Some(LifecycleEvent::SyncLost)
        );
        t.shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 4 * s, 0.0))
            .unwrap();
        assert_eq!(t.check_freshness(6 * s, DEFAULT_FRESHNESS_TIMEOUT), None);
    }

    #[test]
    fn snapshot_is_a_value() {
        let reg = TwinRegistry::new();
        let t = bound_twin(&reg, "m");
        assert!(t.snapshot().state.properties.is_empty());
        for (i, ch) in Channel::ACCEL.into_iter().enumerate() {
            t.shadow_sample(&TelemetrySample::new("m", ch, i as i64, 0.1))
                .unwrap();
        }
        let snap = t.snapshot();
        assert_eq!(snap.state.properties.len(), 3);
        t.shadow_sample(&TelemetrySample::new("m", Channel::AccelX, 100, 9.0))
            .unwrap();
        assert_eq!(snap.state.properties["accel_x"].ts, 0);
    }

    #[test]
    fn oee_examples() {
        let oee = |u, d, a, i| compute_oee(&OeeInputs::without_quality(u, d, a, i).unwrap());
        assert!((oee(90.0, 10.0, 45.0, 50.0) - 0.81).abs() < 1e-12);
        assert_eq!(oee(0.0, 10.0, 45.0, 50.0), 0.0);
        assert_eq!(oee(100.0, 0.0, 50.0, 50.0), 1.0);
        assert_eq!(oee(0.0, 0.0, 50.0, 50.0), 0.0);
        assert_eq!(oee(100.0, 0.0, 500.0, 50.0), 1.0);
    }

    #[test]
    fn oee_domain() {
        assert!(OeeInputs::new(-1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(OeeInputs::new(1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(OeeInputs::new(1.0, 0.0, 0.0, 1.0, 1.5).is_err());
    }

    fn arb_samples() -> impl Strategy<Value = Vec<TelemetrySample>> {
        prop::collection::vec((0usize..4, 0i64..50, -5.0f64..5.0, 0u8..4), 0..60).prop_map(|v| {
            v.into_iter()
                .map(|(c, ts, x, code)| {
                    let ch = Channel::ALL[c];
                    let value = if ch == Channel::PlcState {
                        f64::from(code)
                    } else {
                        x
                    };
                    TelemetrySample::new("m", ch, ts, value)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn property_timestamps_monotone_and_deterministic(samples in arb_samples()) {
            let run = || {
                let reg = TwinRegistry::new();
                let t = bound_twin(&reg, "m");
                let mut seen: BTreeMap<String, i64> = BTreeMap::new();
                for s in &samples {
                    t.shadow_sample(s).unwrap();
                    for (name, p) in t.snapshot().state.properties {
                        if let Some(prev) = seen.insert(name, p.ts) {
                            assert!(p.ts >= prev);
                        }
                    }
                }
                t.snapshot()
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn oee_bounded_and_monotone(
            up in 0.0f64..1e4, down in 0.0f64..1e4, actual in 0.0f64..200.0,
            ideal in 0.1f64..200.0, q in 0.0f64..=1.0, d_up in 0.0f64..1e3, d_rate in 0.0f64..50.0,
        ) {
            let base = compute_oee(&OeeInputs::new(up, down, actual, ideal, q).unwrap());
            prop_assert!((0.0..=1.0).contains(&base));
            let more_up = compute_oee(&OeeInputs::new(up + d_up, down, actual, ideal, q).unwrap());
            let more_rate = compute_oee(&OeeInputs::new(up, down, actual + d_rate, ideal, q).unwrap());
            prop_assert!(more_up >= base - 1e-15);
            prop_assert!(more_rate >= base - 1e-15);
        }
    }
}
