//! Independent checks over a finished timeline.
//!
//! Exclusivity, anchor containment and speech order are checked on the
//! events as they stand. The compile-time laws (spans, partitions, pauses,
//! clock continuity) are checked on compiled positions, i.e. with any manual
//! nudge subtracted, so an accepted nudge does not read as a broken law.

use super::{Channel, EventView, Timeline};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidSpan {
        event_id: String,
        start_ms: u64,
        end_ms: u64,
    },
    DuplicateId {
        event_id: String,
    },
    SpeechOrder {
        previous: String,
        event_id: String,
    },
    Overlap {
        channel: Channel,
        first: String,
        second: String,
    },
    UnknownAnchor {
        event_id: String,
        segment_id: String,
    },
    AnchorContainment {
        event_id: String,
        segment_id: String,
        window: (u64, u64),
    },
    VisualSpan {
        event_id: String,
        segment_id: String,
    },
    Partition {
        segment_id: String,
        detail: String,
    },
    PauseLaw {
        segment_id: String,
        expected_ms: u64,
        found_ms: u64,
    },
    ClockGap {
        segment_id: String,
        expected_ms: i64,
        found_ms: i64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSpan { event_id, start_ms, end_ms } => {
                write!(f, "`{event_id}` has an empty or inverted span [{start_ms}, {end_ms})")
            }
            Self::DuplicateId { event_id } => write!(f, "event id `{event_id}` is used more than once"),
            Self::SpeechOrder { previous, event_id } => {
                write!(f, "speech `{event_id}` starts before `{previous}` ends or is out of order")
            }
            Self::Overlap { channel, first, second } => {
                write!(f, "{channel} events `{first}` and `{second}` overlap")
            }
            Self::UnknownAnchor { event_id, segment_id } => {
                write!(f, "`{event_id}` cites unknown segment `{segment_id}`")
            }
            Self::AnchorContainment { event_id, segment_id, window } => write!(
                f,
                "`{event_id}` leaves the window of segment `{segment_id}` [{}, {})",
                window.0, window.1
            ),
            Self::VisualSpan { event_id, segment_id } => {
                write!(f, "single visual `{event_id}` does not span segment `{segment_id}`")
            }
            Self::Partition { segment_id, detail } => {
                write!(f, "images of segment `{segment_id}` do not partition it: {detail}")
            }
            Self::PauseLaw { segment_id, expected_ms, found_ms } => write!(
                f,
                "pause after `{segment_id}` is {found_ms} ms, expected {expected_ms} ms"
            ),
            Self::ClockGap { segment_id, expected_ms, found_ms } => write!(
                f,
                "segment `{segment_id}` was compiled at {found_ms} ms, expected {expected_ms} ms"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverageWarning {
    /// The learning point has library assets but nothing was scheduled.
    NoSelection {
        learning_point_id: String,
        segment_id: String,
    },
    /// A narrated learning point has no visual in the library.
    NoVisual { learning_point_id: String },
    /// The learning point's visual ranks do not run 1, 2, ... without gaps.
    RankGap {
        learning_point_id: String,
        ranks: Vec<u32>,
    },
    /// An asset shown by the previous compile is no longer in the library.
    AssetRemoved {
        learning_point_id: String,
        asset_id: String,
    },
}

impl CoverageWarning {
    pub fn learning_point_id(&self) -> &str {
        match self {
            Self::NoSelection { learning_point_id, .. }
            | Self::NoVisual { learning_point_id }
            | Self::RankGap { learning_point_id, .. }
            | Self::AssetRemoved { learning_point_id, .. } => learning_point_id,
        }
    }
}

impl fmt::Display for CoverageWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSelection { learning_point_id, segment_id } => write!(
                f,
                "learning point `{learning_point_id}` has library assets but segment `{segment_id}` shows none"
            ),
            Self::NoVisual { learning_point_id } => {
                write!(f, "learning point `{learning_point_id}` is narrated without any visual")
            }
            Self::RankGap { learning_point_id, ranks } => {
                write!(f, "learning point `{learning_point_id}` has visual ranks {ranks:?}, expected 1..")
            }
            Self::AssetRemoved { learning_point_id, asset_id } => write!(
                f,
                "visual `{asset_id}` for learning point `{learning_point_id}` was shown before but is gone from the library"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<CoverageWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_timeline(t: &Timeline) -> ValidationReport {
    let mut v = Vec::new();
    let events: Vec<EventView<'_>> = t.events().collect();

    let mut ids = BTreeSet::new();
    for e in &events {
        if e.end_ms <= e.start_ms {
            v.push(Violation::InvalidSpan {
                event_id: e.id.to_string(),
                start_ms: e.start_ms,
                end_ms: e.end_ms,
            });
        }
        if !ids.insert(e.id) {
            v.push(Violation::DuplicateId {
                event_id: e.id.to_string(),
            });
        }
    }

    for w in t.speech.windows(2) {
        let same_device_backwards = w[0].device_id == w[1].device_id && w[1].order_index <= w[0].order_index;
        if w[1].start_ms < w[0].end_ms || same_device_backwards {
            v.push(Violation::SpeechOrder {
                previous: w[0].id.clone(),
                event_id: w[1].id.clone(),
            });
        }
    }

    for ch in [Channel::Visual, Channel::Gesture] {
        let mut lane: Vec<&EventView<'_>> = events
            .iter()
            .filter(|e| e.channel == ch && e.end_ms > e.start_ms)
            .collect();
        lane.sort_by_key(|e| (e.start_ms, e.end_ms));
        let mut reach: Option<(u64, &str)> = None;
        for e in lane {
            if let Some((end, holder)) = reach {
                if e.start_ms < end {
                    v.push(Violation::Overlap {
                        channel: ch,
                        first: holder.to_string(),
                        second: e.id.to_string(),
                    });
                }
            }
            if reach.is_none_or(|(end, _)| e.end_ms > end) {
                reach = Some((e.end_ms, e.id));
            }
        }
    }

    // Segment windows, as they stand and as compiled.
    let index: BTreeMap<&str, usize> = t
        .speech
        .iter()
        .enumerate()
        .map(|(i, s)| (s.segment_id.as_str(), i))
        .collect();
    let window = |i: usize| {
        let s = &t.speech[i];
        let end = match t.speech.get(i + 1) {
            Some(next) => next.start_ms,
            None => s.end_ms + s.pause_after_ms,
        };
        (s.start_ms, end)
    };
    let compiled = |i: usize| {
        let s = &t.speech[i];
        (s.start_ms as i64 - s.nudge_ms, s.end_ms as i64 - s.nudge_ms)
    };

    let mut per_segment_visuals: BTreeMap<usize, Vec<&super::VisualEvent>> = BTreeMap::new();
    let mut gesture_total: BTreeMap<usize, u64> = BTreeMap::new();
    let mut anchored: BTreeSet<usize> = BTreeSet::new();
    for e in events.iter().filter(|e| e.channel != Channel::Speech) {
        let Some(&i) = index.get(e.segment_id) else {
            v.push(Violation::UnknownAnchor {
                event_id: e.id.to_string(),
                segment_id: e.segment_id.to_string(),
            });
            continue;
        };
        anchored.insert(i);
        let (lo, hi) = window(i);
        if e.start_ms < lo || e.end_ms > hi {
            v.push(Violation::AnchorContainment {
                event_id: e.id.to_string(),
                segment_id: e.segment_id.to_string(),
                window: (lo, hi),
            });
        }
        if e.channel == Channel::Gesture {
            *gesture_total.entry(i).or_default() += e.duration_ms();
        }
    }
    for ve in &t.visuals {
        if let Some(&i) = index.get(ve.segment_id.as_str()) {
            per_segment_visuals.entry(i).or_default().push(ve);
        }
    }

    for (&i, group) in &per_segment_visuals {
        let seg = compiled(i);
        let sid = &t.speech[i].segment_id;
        let span = |ve: &super::VisualEvent| (ve.start_ms as i64 - ve.nudge_ms, ve.end_ms as i64 - ve.nudge_ms);
        if group.len() == 1 && group[0].sequence_len <= 1 {
            if span(group[0]) != seg {
                v.push(Violation::VisualSpan {
                    event_id: group[0].id.clone(),
                    segment_id: sid.clone(),
                });
            }
            continue;
        }
        let mut sorted = group.clone();
        sorted.sort_by_key(|ve| ve.sequence_index);
        let detail = if sorted.iter().enumerate().any(|(k, ve)| ve.sequence_index != k || ve.sequence_len != sorted.len()) {
            Some("sequence indices are not 0..n".to_string())
        } else if span(sorted[0]).0 != seg.0 {
            Some("first image does not start with the segment".to_string())
        } else if span(sorted[sorted.len() - 1]).1 != seg.1 {
            Some("last image does not end with the segment".to_string())
        } else {
            sorted
                .windows(2)
                .find(|w| span(w[0]).1 != span(w[1]).0)
                .map(|w| format!("gap or overlap between `{}` and `{}`", w[0].id, w[1].id))
        };
        if let Some(detail) = detail {
            v.push(Violation::Partition {
                segment_id: sid.clone(),
                detail,
            });
        }
    }

    let mut expected_start = t.header.clock_origin_ms as i64;
    for (i, s) in t.speech.iter().enumerate() {
        let duration = s.end_ms.saturating_sub(s.start_ms);
        let overrun = gesture_total.get(&i).copied().unwrap_or(0).saturating_sub(duration);
        let expected = t.header.base_pause_ms + overrun;
        if s.pause_after_ms != expected {
            v.push(Violation::PauseLaw {
                segment_id: s.segment_id.clone(),
                expected_ms: expected,
                found_ms: s.pause_after_ms,
            });
        }
        let (c_start, c_end) = compiled(i);
        if c_start != expected_start {
            v.push(Violation::ClockGap {
                segment_id: s.segment_id.clone(),
                expected_ms: expected_start,
                found_ms: c_start,
            });
        }
        expected_start = c_end + s.pause_after_ms as i64;
    }

    let warnings = t
        .speech
        .iter()
        .enumerate()
        .filter(|(i, s)| s.library_matches > 0 && !anchored.contains(i))
        .filter_map(|(_, s)| {
            s.learning_point_id.as_ref().map(|lp| CoverageWarning::NoSelection {
                learning_point_id: lp.clone(),
                segment_id: s.segment_id.clone(),
            })
        })
        .collect();

    ValidationReport { violations: v, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::GestureKind;
    use crate::geometry::{Point2, Pose2};
    use crate::timeline::{GestureEvent, SpeechEvent, TimelineHeader, VisualEvent};

    fn speech(seg: &str, order: u32, start: u64, end: u64, pause: u64) -> SpeechEvent {
        SpeechEvent {
            id: format!("sp:{seg}"),
            segment_id: seg.into(),
            device_id: "d".into(),
            order_index: order,
            text: "x".into(),
            audio_ref: "a".into(),
            learning_point_id: Some("lp".into()),
            start_ms: start,
            end_ms: end,
            pause_after_ms: pause,
            library_matches: 2,
            nudge_ms: 0,
        }
    }

    fn gesture(seg: &str, unit: &str, start: u64, end: u64) -> GestureEvent {
        GestureEvent {
            id: format!("ge:{seg}:{unit}"),
            unit_id: unit.into(),
            kind: GestureKind::Deictic,
            motion_ref: "m".into(),
            segment_id: seg.into(),
            learning_point_id: "lp".into(),
            robot_pose: Pose2 {
                position: Point2::new(0.0, 0.0),
                heading: 0.0,
            },
            start_ms: start,
            end_ms: end,
            nudge_ms: 0,
        }
    }

    fn visual(seg: &str, asset: &str, idx: usize, len: usize, start: u64, end: u64) -> VisualEvent {
        VisualEvent {
            id: format!("vi:{seg}:{asset}"),
            asset_id: asset.into(),
            image_ref: "i".into(),
            segment_id: seg.into(),
            learning_point_id: "lp".into(),
            sequence_index: idx,
            sequence_len: len,
            start_ms: start,
            end_ms: end,
            placement: None,
            nudge_ms: 0,
        }
    }

    // s1 [0,4000) with two gestures totalling 3000 and two images;
    // s2 [4500,7500) with one image.
    fn good() -> Timeline {
        Timeline {
            header: TimelineHeader {
                schema_version: "1.0".into(),
                tour_id: "t".into(),
                variant: None,
                clock_origin_ms: 0,
                base_pause_ms: 500,
            },
            speech: vec![speech("s1", 0, 0, 4000, 500), speech("s2", 1, 4500, 7500, 500)],
            visuals: vec![
                visual("s1", "a", 0, 2, 0, 2400),
                visual("s1", "b", 1, 2, 2400, 4000),
                visual("s2", "c", 0, 1, 4500, 7500),
            ],
            gestures: vec![gesture("s1", "g1", 0, 1000), gesture("s1", "g2", 1000, 3000)],
        }
    }

    #[test]
    fn well_formed_timeline_is_clean() {
        let r = validate_timeline(&good());
        assert_eq!(r.violations, vec![]);
        assert_eq!(r.warnings, vec![]);
    }

    #[test]
    fn overlapping_gestures_give_exactly_one_violation() {
        let mut t = good();
        t.gestures[1].start_ms = 500;
        t.gestures[1].end_ms = 2500;
        let r = validate_timeline(&t);
        assert_eq!(
            r.violations,
            vec![Violation::Overlap {
                channel: Channel::Gesture,
                first: "ge:s1:g1".into(),
                second: "ge:s1:g2".into(),
            }]
        );
    }

    #[test]
    fn wrong_pause_is_reported() {
        let mut t = good();
        t.gestures[1].end_ms = 5000; // now outlasts s1 by 1000 and leaves its window
        let r = validate_timeline(&t);
        assert!(r.violations.contains(&Violation::PauseLaw {
            segment_id: "s1".into(),
            expected_ms: 1500,
            found_ms: 500
        }));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::AnchorContainment { .. })));
    }

    #[test]
    fn partition_gap_is_reported() {
        let mut t = good();
        t.visuals[1].start_ms = 2500;
        let r = validate_timeline(&t);
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(r.violations[0], Violation::Partition { .. }));
    }

    #[test]
    fn nudged_event_keeps_compile_laws() {
        let mut t = good();
        t.visuals[2].start_ms += 750;
        t.visuals[2].end_ms += 750;
        t.visuals[2].nudge_ms = 750;
        let r = validate_timeline(&t);
        // The nudged image now runs past the end of the tour.
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(r.violations[0], Violation::AnchorContainment { .. }));

        let mut t = good();
        t.visuals[2].end_ms -= 250;
        let r = validate_timeline(&t);
        assert!(matches!(r.violations[..], [Violation::VisualSpan { .. }]));
    }

    #[test]
    fn missing_selection_is_a_warning() {
        let mut t = good();
        t.visuals.pop();
        let r = validate_timeline(&t);
        assert!(r.is_clean());
        assert_eq!(
            r.warnings,
            vec![CoverageWarning::NoSelection {
                learning_point_id: "lp".into(),
                segment_id: "s2".into()
            }]
        );
    }

    #[test]
    fn speech_order_and_clock_gap() {
        let mut t = good();
        t.speech[1].start_ms = 3900;
        let r = validate_timeline(&t);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::SpeechOrder { .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::ClockGap { .. })));
    }

    #[test]
    fn unknown_anchor_and_duplicates() {
        let mut t = good();
        t.gestures[0].segment_id = "zz".into();
        t.gestures.push(t.gestures[1].clone());
        let r = validate_timeline(&t);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::UnknownAnchor { .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::DuplicateId { .. })));
    }
}
