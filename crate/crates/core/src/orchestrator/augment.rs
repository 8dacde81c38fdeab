use serde::{Deserialize, Serialize};

use super::AnomalyEvent;
use crate::twin::{DigitalEvent, EventKind, LifecyclePhase, Twin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AugmentationOutcome {
    Emitted {
        event: DigitalEvent,
    },
    /// The twin was not synchronized; nothing was appended.
    Suppressed {
        phase: LifecyclePhase,
    },
}

/// Appends an anomaly event to the twin when it is synchronized.
pub fn emit_augmentation_event(twin: &Twin, anomaly: &AnomalyEvent) -> AugmentationOutcome {
    match twin.emit_if(
        LifecyclePhase::Synchronized,
        anomaly.ts,
        EventKind::AnomalyDetected(anomaly.clone()),
    ) {
        Ok(event) => AugmentationOutcome::Emitted { event },
        Err(phase) => AugmentationOutcome::Suppressed { phase },
    }
}
