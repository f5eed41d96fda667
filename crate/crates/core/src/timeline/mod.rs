//! The compiled three-channel timeline and everything that produces,
//! stores or checks it.

mod align;
mod files;
mod validate;

pub use align::{align, image_boundaries, AlignConfig, AlignError, AlignWarning, Aligned};
pub use files::{emit, parse, TimelineFileError, GESTURES_FILE, NARRATION_FILE, VISUALS_FILE};
pub use validate::{validate_timeline, CoverageWarning, ValidationReport, Violation};

use crate::asset::GestureKind;
use crate::geometry::Pose2;
use crate::placement::PlacementResult;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Speech,
    Visual,
    Gesture,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Speech, Channel::Visual, Channel::Gesture];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Speech => "speech",
            Channel::Visual => "visual",
            Channel::Gesture => "gesture",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shared by all three timeline files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineHeader {
    pub schema_version: String,
    pub tour_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub clock_origin_ms: u64,
    pub base_pause_ms: u64,
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeechEvent {
    pub id: String,
    pub segment_id: String,
    pub device_id: String,
    pub order_index: u32,
    pub text: String,
    pub audio_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_point_id: Option<String>,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Silence after this segment before the next one starts.
    pub pause_after_ms: u64,
    /// Library assets linked to the learning point at compile time.
    #[serde(default)]
    pub library_matches: usize,
    /// Manual offset already applied to start and end.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub nudge_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualEvent {
    pub id: String,
    pub asset_id: String,
    pub image_ref: String,
    pub segment_id: String,
    pub learning_point_id: String,
    /// Position among the images shown during the segment.
    pub sequence_index: usize,
    pub sequence_len: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementResult>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub nudge_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureEvent {
    pub id: String,
    pub unit_id: String,
    pub kind: GestureKind,
    pub motion_ref: String,
    pub segment_id: String,
    pub learning_point_id: String,
    pub robot_pose: Pose2,
    pub start_ms: u64,
    pub end_ms: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub nudge_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timeline {
    pub header: TimelineHeader,
    pub speech: Vec<SpeechEvent>,
    pub visuals: Vec<VisualEvent>,
    pub gestures: Vec<GestureEvent>,
}

/// Channel-agnostic view of one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventView<'a> {
    pub channel: Channel,
    pub id: &'a str,
    pub segment_id: &'a str,
    pub start_ms: u64,
    pub end_ms: u64,
    pub nudge_ms: i64,
}

impl EventView<'_> {
    pub fn duration_ms(&self) -> u64 {
        self.end_ms.saturating_sub(self.start_ms)
    }

    /// Where the compiler placed the event, before any manual nudge.
    pub fn compiled_span(&self) -> (i64, i64) {
        (
            self.start_ms as i64 - self.nudge_ms,
            self.end_ms as i64 - self.nudge_ms,
        )
    }
}

/// Mutable timing fields of one event.
pub struct TimingMut<'a> {
    pub start_ms: &'a mut u64,
    pub end_ms: &'a mut u64,
    pub nudge_ms: &'a mut i64,
}

impl Timeline {
    pub fn events(&self) -> impl Iterator<Item = EventView<'_>> {
        let speech = self.speech.iter().map(|e| EventView {
            channel: Channel::Speech,
            id: &e.id,
            segment_id: &e.segment_id,
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            nudge_ms: e.nudge_ms,
        });
        let visuals = self.visuals.iter().map(|e| EventView {
            channel: Channel::Visual,
            id: &e.id,
            segment_id: &e.segment_id,
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            nudge_ms: e.nudge_ms,
        });
        let gestures = self.gestures.iter().map(|e| EventView {
            channel: Channel::Gesture,
            id: &e.id,
            segment_id: &e.segment_id,
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            nudge_ms: e.nudge_ms,
        });
        speech.chain(visuals).chain(gestures)
    }

    pub fn event_count(&self) -> usize {
        self.speech.len() + self.visuals.len() + self.gestures.len()
    }

    pub fn event(&self, id: &str) -> Option<EventView<'_>> {
        self.events().find(|e| e.id == id)
    }

    pub fn timing_mut(&mut self, id: &str) -> Option<TimingMut<'_>> {
        if let Some(e) = self.speech.iter_mut().find(|e| e.id == id) {
            return Some(TimingMut {
                start_ms: &mut e.start_ms,
                end_ms: &mut e.end_ms,
                nudge_ms: &mut e.nudge_ms,
            });
        }
        if let Some(e) = self.visuals.iter_mut().find(|e| e.id == id) {
            return Some(TimingMut {
                start_ms: &mut e.start_ms,
                end_ms: &mut e.end_ms,
                nudge_ms: &mut e.nudge_ms,
            });
        }
        self.gestures.iter_mut().find(|e| e.id == id).map(|e| TimingMut {
            start_ms: &mut e.start_ms,
            end_ms: &mut e.end_ms,
            nudge_ms: &mut e.nudge_ms,
        })
    }

    /// Sum of compiled segment durations and pauses.
    pub fn end_ms(&self) -> u64 {
        self.speech
            .iter()
            .map(|s| (s.end_ms - s.start_ms) + s.pause_after_ms)
            .sum()
    }

    /// Per-device narration time including pauses, in tour order.
    pub fn device_durations(&self) -> Vec<(String, u64)> {
        let mut out: Vec<(String, u64)> = Vec::new();
        for s in &self.speech {
            let d = (s.end_ms - s.start_ms) + s.pause_after_ms;
            match out.last_mut() {
                Some((dev, total)) if *dev == s.device_id => *total += d,
                _ => out.push((s.device_id.clone(), d)),
            }
        }
        out
    }
}
