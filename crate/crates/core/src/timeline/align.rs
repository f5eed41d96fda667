//! Rule-based temporal alignment of speech, visuals and gestures.
//!
//! Speech segments run back to back, separated by a pause. A segment with
//! one image shows it for the whole segment. With several images, image `i`
//! starts at the character offset of sentence `i` in the segment text,
//! scaled to the segment duration, and the last image runs to the segment
//! end. Gestures start with the segment and play back to back; when they
//! outlast the segment, the pause after it grows by the overrun.

use super::{GestureEvent, SpeechEvent, Timeline, TimelineHeader, VisualEvent, SCHEMA_VERSION};
use crate::compose::Selection;
use crate::script::{normalize_whitespace, SentenceSplitter, SpeechSegment};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignConfig {
    pub base_pause_ms: u64,
    /// Largest allowed pause extension; `None` only warns.
    pub max_pause_extension_ms: Option<u64>,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            base_pause_ms: 500,
            max_pause_extension_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlignWarning {
    PauseExtended { segment_id: String, extension_ms: u64 },
}

impl std::fmt::Display for AlignWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PauseExtended { segment_id, extension_ms } => write!(
                f,
                "gestures outlast segment `{segment_id}`; pause extended by {extension_ms} ms"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("no speech segments to align")]
    Empty,
    #[error("segment `{0}` has no synthesized audio")]
    MissingAudio(String),
    #[error("segment `{0}` has zero duration")]
    ZeroDuration(String),
    #[error("selection for `{found}` does not match segment `{expected}`")]
    SelectionMismatch { expected: String, found: String },
    #[error("{segments} segments but {selections} selections")]
    SelectionCount { segments: usize, selections: usize },
    #[error(
        "gestures outlast segment `{segment_id}` by {overrun_ms} ms, more than the allowed {limit_ms} ms"
    )]
    GestureOverrun {
        segment_id: String,
        overrun_ms: u64,
        limit_ms: u64,
    },
    #[error("segment `{segment_id}` ({duration_ms} ms) is too short for {images} images")]
    TooShortForImages {
        segment_id: String,
        images: usize,
        duration_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub timeline: Timeline,
    pub warnings: Vec<AlignWarning>,
}

/// Start times of `images` images over `[start, start + duration)`.
///
/// When the segment has at least as many sentences as images, image `i`
/// starts at `floor(offset_i * duration / chars)` where `offset_i` is the
/// char offset of sentence `i` in the normalized text. Otherwise the window
/// is split evenly. Boundaries are then forced strictly increasing so every
/// image gets at least one millisecond.
pub fn image_boundaries(
    text: &str,
    splitter: &SentenceSplitter,
    images: usize,
    start: u64,
    duration: u64,
) -> Option<Vec<u64>> {
    if images == 0 {
        return Some(Vec::new());
    }
    if duration < images as u64 {
        return None;
    }
    let norm = normalize_whitespace(text);
    let total = norm.chars().count() as u128;
    let spans = splitter.sentence_spans(&norm);
    let mut out: Vec<u64> = (0..images)
        .map(|i| {
            let offset = if spans.len() >= images && total > 0 {
                (spans[i].start as u128 * duration as u128) / total
            } else {
                (i as u128 * duration as u128) / images as u128
            };
            start + offset as u64
        })
        .collect();
    out[0] = start;
    for i in 1..images {
        let latest = start + duration - (images - i) as u64;
        out[i] = out[i].max(out[i - 1] + 1).min(latest);
    }
    Some(out)
}

/// Places every segment and its selection on one tour clock.
pub fn align(
    tour_id: &str,
    variant: Option<&str>,
    segments: &[SpeechSegment],
    selections: &[Selection],
    splitter: &SentenceSplitter,
    cfg: &AlignConfig,
) -> Result<Aligned, AlignError> {
    if segments.is_empty() {
        return Err(AlignError::Empty);
    }
    if segments.len() != selections.len() {
        return Err(AlignError::SelectionCount {
            segments: segments.len(),
            selections: selections.len(),
        });
    }
    let mut speech = Vec::with_capacity(segments.len());
    let mut visuals = Vec::new();
    let mut gestures = Vec::new();
    let mut warnings = Vec::new();
    let mut clock = 0u64;

    for (seg, sel) in segments.iter().zip(selections) {
        if sel.segment_id != seg.id {
            return Err(AlignError::SelectionMismatch {
                expected: seg.id.clone(),
                found: sel.segment_id.clone(),
            });
        }
        let audio = seg
            .audio
            .as_ref()
            .ok_or_else(|| AlignError::MissingAudio(seg.id.clone()))?;
        let duration = audio.duration_ms;
        if duration == 0 {
            return Err(AlignError::ZeroDuration(seg.id.clone()));
        }
        let start = clock;
        let end = start + duration;
        let lp = sel.learning_point_id.clone().unwrap_or_default();

        if !sel.visuals.is_empty() {
            let n = sel.visuals.len();
            let bounds = image_boundaries(&seg.text, splitter, n, start, duration).ok_or_else(|| {
                AlignError::TooShortForImages {
                    segment_id: seg.id.clone(),
                    images: n,
                    duration_ms: duration,
                }
            })?;
            for (i, v) in sel.visuals.iter().enumerate() {
                let v_end = bounds.get(i + 1).copied().unwrap_or(end);
                visuals.push(VisualEvent {
                    id: format!("vi:{}:{}", seg.id, v.id),
                    asset_id: v.id.clone(),
                    image_ref: v.image_ref.clone(),
                    segment_id: seg.id.clone(),
                    learning_point_id: lp.clone(),
                    sequence_index: i,
                    sequence_len: n,
                    start_ms: bounds[i],
                    end_ms: v_end,
                    placement: None,
                    nudge_ms: 0,
                });
            }
        }

        let mut g_clock = start;
        for g in &sel.gestures {
            gestures.push(GestureEvent {
                id: format!("ge:{}:{}", seg.id, g.id),
                unit_id: g.id.clone(),
                kind: g.kind,
                motion_ref: g.motion_ref.clone(),
                segment_id: seg.id.clone(),
                learning_point_id: lp.clone(),
                robot_pose: g.robot_pose,
                start_ms: g_clock,
                end_ms: g_clock + g.duration_ms,
                nudge_ms: 0,
            });
            g_clock += g.duration_ms;
        }
        let overrun = g_clock.saturating_sub(end);
        if overrun > 0 {
            if let Some(limit) = cfg.max_pause_extension_ms {
                if overrun > limit {
                    return Err(AlignError::GestureOverrun {
                        segment_id: seg.id.clone(),
                        overrun_ms: overrun,
                        limit_ms: limit,
                    });
                }
            }
            warnings.push(AlignWarning::PauseExtended {
                segment_id: seg.id.clone(),
                extension_ms: overrun,
            });
        }
        let pause = cfg.base_pause_ms + overrun;

        speech.push(SpeechEvent {
            id: format!("sp:{}", seg.id),
            segment_id: seg.id.clone(),
            device_id: seg.device_id.clone(),
            order_index: seg.order_index,
            text: seg.text.clone(),
            audio_ref: audio.audio_ref.clone(),
            learning_point_id: seg.learning_point_id.clone(),
            start_ms: start,
            end_ms: end,
            pause_after_ms: pause,
            library_matches: sel.library_matches,
            nudge_ms: 0,
        });
        clock = end + pause;
    }

    Ok(Aligned {
        timeline: Timeline {
            header: TimelineHeader {
                schema_version: SCHEMA_VERSION.to_string(),
                tour_id: tour_id.to_string(),
                variant: variant.map(str::to_string),
                clock_origin_ms: 0,
                base_pause_ms: cfg.base_pause_ms,
            },
            speech,
            visuals,
            gestures,
        },
        warnings,
    })
}
