use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::OrchestratorError;
use crate::readiness::{GapFill, ReadinessConfig};

/// Parameter name → candidate values. Names are kept sorted.
pub type ParamGrid = BTreeMap<String, Vec<Value>>;

/// Readiness settings a replica may override; unset fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadinessOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_fill: Option<GapFill>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub block_size: usize,
    pub penalty: f64,
    pub k: usize,
    #[serde(default)]
    pub readiness: ReadinessOverrides,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            block_size: ReadinessConfig::default().block_size,
            penalty: 40.0,
            k: 3,
            readiness: ReadinessOverrides::default(),
        }
    }
}

impl HyperParams {
    pub fn readiness_config(&self) -> ReadinessConfig {
        let d = ReadinessConfig::default();
        let o = &self.readiness;
        ReadinessConfig {
            sigma_threshold: o.sigma_threshold.unwrap_or(d.sigma_threshold),
            smooth_window: o.smooth_window.unwrap_or(d.smooth_window),
            block_size: self.block_size,
            gap_fill: o.gap_fill.unwrap_or(d.gap_fill),
            normalize: o.normalize.unwrap_or(d.normalize),
        }
    }
}

/// Sweep used when the caller configures nothing: the penalties 10, 40 and
/// 160 crossed with k in 2..=5 and block sizes 25 and 50.
pub fn default_grid() -> ParamGrid {
    let nums = |v: &[f64]| v.iter().map(|&x| Value::from(x)).collect::<Vec<_>>();
    let ints = |v: &[u64]| v.iter().map(|&x| Value::from(x)).collect::<Vec<_>>();
    BTreeMap::from([
        ("penalty".to_owned(), nums(&[10.0, 40.0, 160.0])),
        ("k".to_owned(), ints(&[2, 3, 4, 5])),
        ("block_size".to_owned(), ints(&[25, 50])),
    ])
}

/// Parses a JSON object of parameter lists, e.g. `{"penalty":[10,40]}`.
pub fn parse_grid(json: &str) -> Result<ParamGrid, OrchestratorError> {
    serde_json::from_str(json).map_err(|e| OrchestratorError::InvalidValue {
        param: "grid".to_owned(),
        value: e.to_string(),
    })
}

fn invalid(param: &str, value: &Value) -> OrchestratorError {
    OrchestratorError::InvalidValue {
        param: param.to_owned(),
        value: value.to_string(),
    }
}

fn as_positive_int(param: &str, v: &Value) -> Result<usize, OrchestratorError> {
    v.as_u64()
        .filter(|&x| x >= 1)
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| invalid(param, v))
}

fn apply(hp: &mut HyperParams, param: &str, v: &Value) -> Result<(), OrchestratorError> {
    match param {
        "block_size" => hp.block_size = as_positive_int(param, v)?,
        "k" => hp.k = as_positive_int(param, v)?,
        "penalty" => {
            hp.penalty = v
                .as_f64()
                .filter(|p| p.is_finite() && *p >= 0.0)
                .ok_or_else(|| invalid(param, v))?
        }
        "sigma_threshold" => {
            hp.readiness.sigma_threshold = Some(
                v.as_f64()
                    .filter(|s| s.is_finite() && *s > 0.0)
                    .ok_or_else(|| invalid(param, v))?,
            )
        }
        "smooth_window" => {
            let w = as_positive_int(param, v)?;
            if w.is_multiple_of(2) {
                return Err(invalid(param, v));
            }
            hp.readiness.smooth_window = Some(w);
        }
        "normalize" => hp.readiness.normalize = Some(v.as_bool().ok_or_else(|| invalid(param, v))?),
        "gap_fill" => {
            hp.readiness.gap_fill =
                Some(serde_json::from_value(v.clone()).map_err(|_| invalid(param, v))?)
        }
        other => return Err(OrchestratorError::UnknownParameter(other.to_owned())),
    }
    Ok(())
}

/// Cartesian product of the grid. The first parameter by name varies
/// slowest; values keep their given order. Unlisted parameters take the
/// [`HyperParams`] defaults.
pub fn spawn_replica_grid(grid: &ParamGrid) -> Result<Vec<HyperParams>, OrchestratorError> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(OrchestratorError::EmptyGrid);
    }
    let mut configs = vec![HyperParams::default()];
    for (param, values) in grid {
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for base in &configs {
            for v in values {
                let mut hp = base.clone();
                apply(&mut hp, param, v)?;
                next.push(hp);
            }
        }
        configs = next;
    }
    Ok(configs)
}
