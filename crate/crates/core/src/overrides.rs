//! Manual timing edits layered over compiler output.
//!
//! Nudges are stored per variant in a file next to the compiled timeline, so
//! recompiling does not discard them. Each accepted nudge shifts one event
//! and is recorded on the event itself (`nudge_ms`), which keeps the
//! validator's compile-time laws checkable after editing.

use crate::timeline::{validate_timeline, Timeline, ValidationReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const OVERRIDES_FILE: &str = "overrides.json";
pub const OVERRIDES_SCHEMA_VERSION: &str = "1.0";
/// Largest shift a single nudge may apply, in either direction.
pub const MAX_NUDGE_MS: i64 = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nudge {
    pub event_id: String,
    pub delta_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_variant: Option<String>,
    /// Accepted nudges per variant label, in the order they were applied.
    #[serde(default)]
    pub nudges: BTreeMap<String, Vec<Nudge>>,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            schema_version: OVERRIDES_SCHEMA_VERSION.to_string(),
            selected_variant: None,
            nudges: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OverridesError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed overrides file: {0}")]
    Malformed(String),
}

impl Overrides {
    /// Reads `path`; a missing file means no overrides.
    pub fn load(path: &Path) -> Result<Self, OverridesError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| OverridesError::Malformed(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes atomically: a reader never sees a half-written file.
    pub fn save(&self, path: &Path) -> Result<(), OverridesError> {
        let mut body = serde_json::to_string_pretty(self).expect("overrides serialize");
        body.push('\n');
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn nudges_for(&self, variant: &str) -> &[Nudge] {
        self.nudges.get(variant).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NudgeError {
    #[error("nudge of {0} ms exceeds the {MAX_NUDGE_MS} ms limit")]
    OutOfBounds(i64),
    #[error("no event `{0}`")]
    UnknownEvent(String),
    #[error("nudge would move `{0}` before the start of the tour")]
    BeforeOrigin(String),
    #[error("nudge rejected: {}", .0.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Rejected(ValidationReport),
}

/// Returns `timeline` with one event shifted by `nudge.delta_ms`, or the
/// reason it cannot be. The input is never modified.
pub fn apply_nudge(timeline: &Timeline, nudge: &Nudge) -> Result<Timeline, NudgeError> {
    if nudge.delta_ms.abs() > MAX_NUDGE_MS {
        return Err(NudgeError::OutOfBounds(nudge.delta_ms));
    }
    let mut next = timeline.clone();
    let t = next
        .timing_mut(&nudge.event_id)
        .ok_or_else(|| NudgeError::UnknownEvent(nudge.event_id.clone()))?;
    let start = *t.start_ms as i64 + nudge.delta_ms;
    if start < 0 {
        return Err(NudgeError::BeforeOrigin(nudge.event_id.clone()));
    }
    *t.start_ms = start as u64;
    *t.end_ms = (*t.end_ms as i64 + nudge.delta_ms) as u64;
    *t.nudge_ms += nudge.delta_ms;
    let report = validate_timeline(&next);
    if !report.is_clean() {
        return Err(NudgeError::Rejected(report));
    }
    Ok(next)
}

/// Replays stored nudges in order.
pub fn apply_all(timeline: &Timeline, nudges: &[Nudge]) -> Result<Timeline, NudgeError> {
    nudges.iter().try_fold(timeline.clone(), |t, n| apply_nudge(&t, n))
}
