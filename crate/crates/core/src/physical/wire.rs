//! Line-delimited JSON framing of [`TelemetrySample`].
//!
//! One object per line with exactly the keys `asset`, `ch`, `ts`, `v`, `q`
//! in that order. `v` is printed with the shortest digit string that parses
//! back to the same `f64`, so `2.0` is written as `2`.

use std::fmt::Write;

use serde::Deserialize;

use super::{Channel, PhysicalError, Quality, TelemetrySample};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSample {
    asset: String,
    ch: Channel,
    ts: i64,
    v: f64,
    q: Quality,
}

/// Encodes one sample as a single JSON line (without the trailing newline).
pub fn encode_sample(sample: &TelemetrySample) -> String {
    let mut out = String::with_capacity(64 + sample.asset_id.len());
    out.push_str("{\"asset\":");
    // Serializing a &str cannot fail.
    out.push_str(&serde_json::to_string(&sample.asset_id).expect("string serialization"));
    let _ = write!(
        out,
        ",\"ch\":\"{}\",\"ts\":{},\"v\":",
        sample.channel.as_str(),
        sample.ts
    );
    push_shortest(&mut out, sample.value);
    let _ = write!(out, ",\"q\":\"{}\"}}", sample.quality.as_str());
    out
}

fn push_shortest(out: &mut String, v: f64) {
    let abs = v.abs();
    // Display never switches to exponent form, which turns very large or very
    // small magnitudes into hundreds of digits.
    if v != 0.0 && !(1e-5..1e16).contains(&abs) {
        let _ = write!(out, "{v:e}");
    } else {
        let _ = write!(out, "{v}");
    }
}

/// Parses one line produced by [`encode_sample`].
pub fn decode_sample(line: &str) -> Result<TelemetrySample, PhysicalError> {
    let wire: WireSample =
        serde_json::from_str(line).map_err(|e| PhysicalError::malformed(e.to_string()))?;
    let sample = TelemetrySample {
        asset_id: wire.asset,
        channel: wire.ch,
        ts: wire.ts,
        value: wire.v,
        quality: wire.q,
    };
    sample.validate().map_err(|e| match e {
        PhysicalError::InvalidAssetId(id) => {
            PhysicalError::malformed(format!("invalid asset id {id:?}"))
        }
        other => other,
    })?;
    Ok(sample)
}
