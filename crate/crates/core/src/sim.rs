//! Discrete-event replay of a timeline against a virtual robot.
//!
//! Each channel is one exclusive resource (speaker, projector, arm). An event
//! becomes ready at its scheduled start plus a seeded dispatch jitter and
//! starts once it is ready and its predecessor on the channel has finished.
//! Late events are delayed, never dropped or reordered, and keep their
//! scheduled duration.

use crate::timeline::{validate_timeline, Channel, EventView, Timeline, ValidationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelJitter {
    pub speech: u64,
    pub visual: u64,
    pub gesture: u64,
}

impl ChannelJitter {
    pub fn uniform(ms: u64) -> Self {
        Self {
            speech: ms,
            visual: ms,
            gesture: ms,
        }
    }

    pub fn get(&self, ch: Channel) -> u64 {
        match ch {
            Channel::Speech => self.speech,
            Channel::Visual => self.visual,
            Channel::Gesture => self.gesture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    /// Dispatch jitter is drawn uniformly from `[-j, j]` ms per channel.
    pub jitter_ms: ChannelJitter,
    pub epsilon_ms: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jitter_ms: ChannelJitter::default(),
            epsilon_ms: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub event_id: String,
    pub channel: Channel,
    pub segment_id: String,
    pub scheduled_start_ms: u64,
    pub scheduled_end_ms: u64,
    pub actual_start_ms: u64,
    pub actual_end_ms: u64,
}

impl TraceRecord {
    pub fn deviation_ms(&self) -> i64 {
        self.actual_start_ms as i64 - self.scheduled_start_ms as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionTrace {
    pub tour_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub seed: u64,
    pub jitter_ms: ChannelJitter,
    /// Sorted by actual start, then channel, then scheduled start.
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("timeline is invalid ({} violation(s))", .0.violations.len())]
    InvalidTimeline(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    // Finishing first frees the channel for an event ready at the same instant.
    Finish(Channel),
    Ready(Channel, usize),
}

struct Lane {
    /// Indices into the flat event list, in scheduled order.
    order: Vec<usize>,
    ready: Vec<bool>,
    next: usize,
    busy: bool,
}

/// Runs the event loop. Returns the actual span of each event.
fn dispatch(events: &[EventView<'_>], ready_at: &[u64]) -> Vec<(u64, u64)> {
    let mut lanes: BTreeMap<Channel, Lane> = BTreeMap::new();
    for ch in Channel::ALL {
        let mut order: Vec<usize> = (0..events.len()).filter(|&i| events[i].channel == ch).collect();
        order.sort_by_key(|&i| (events[i].start_ms, events[i].end_ms));
        let n = order.len();
        lanes.insert(
            ch,
            Lane {
                order,
                ready: vec![false; n],
                next: 0,
                busy: false,
            },
        );
    }

    let mut actual: Vec<Option<(u64, u64)>> = vec![None; events.len()];
    let mut queue: BinaryHeap<Reverse<(u64, Step)>> = BinaryHeap::new();
    for lane in lanes.values() {
        for (pos, &i) in lane.order.iter().enumerate() {
            queue.push(Reverse((ready_at[i], Step::Ready(events[i].channel, pos))));
        }
    }

    while let Some(Reverse((now, step))) = queue.pop() {
        let ch = match step {
            Step::Finish(ch) => {
                lanes.get_mut(&ch).expect("lane").busy = false;
                ch
            }
            Step::Ready(ch, pos) => {
                lanes.get_mut(&ch).expect("lane").ready[pos] = true;
                ch
            }
        };
        let lane = lanes.get_mut(&ch).expect("lane");
        if !lane.busy && lane.next < lane.order.len() && lane.ready[lane.next] {
            let i = lane.order[lane.next];
            let end = now + events[i].duration_ms();
            actual[i] = Some((now, end));
            lane.busy = true;
            lane.next += 1;
            queue.push(Reverse((end, Step::Finish(ch))));
        }
    }

    actual.into_iter().map(|a| a.expect("every event is dispatched")).collect()
}

/// Replays `timeline` on a virtual clock starting at 0.
pub fn simulate(timeline: &Timeline, cfg: &SimConfig) -> Result<ExecutionTrace, SimError> {
    let report = validate_timeline(timeline);
    if !report.is_clean() {
        return Err(SimError::InvalidTimeline(report));
    }
    let events: Vec<_> = timeline.events().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ready_at: Vec<u64> = events
        .iter()
        .map(|e| {
            let j = cfg.jitter_ms.get(e.channel) as i64;
            let jitter = if j == 0 { 0 } else { rng.random_range(-j..=j) };
            (e.start_ms as i64 + jitter).max(0) as u64
        })
        .collect();

    let actual = dispatch(&events, &ready_at);

    let mut records: Vec<TraceRecord> = events
        .iter()
        .zip(actual)
        .map(|(e, (s, f))| {
            TraceRecord {
                event_id: e.id.to_string(),
                channel: e.channel,
                segment_id: e.segment_id.to_string(),
                scheduled_start_ms: e.start_ms,
                scheduled_end_ms: e.end_ms,
                actual_start_ms: s,
                actual_end_ms: f,
            }
        })
        .collect();
    records.sort_by(|a, b| {
        (a.actual_start_ms, a.channel, a.scheduled_start_ms).cmp(&(b.actual_start_ms, b.channel, b.scheduled_start_ms))
    });
    Ok(ExecutionTrace {
        tour_id: timeline.header.tour_id.clone(),
        variant: timeline.header.variant.clone(),
        seed: cfg.seed,
        jitter_ms: cfg.jitter_ms,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlaggedRecord {
    pub event_id: String,
    pub channel: Channel,
    pub deviation_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceOverlap {
    pub channel: Channel,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    pub epsilon_ms: u64,
    pub flagged: Vec<FlaggedRecord>,
    pub overlaps: Vec<TraceOverlap>,
}

impl TraceReport {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty() && self.overlaps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceMismatch {
    #[error("trace is for tour `{trace}`, timeline is `{timeline}`")]
    Tour { trace: String, timeline: String },
    #[error("trace has {trace} records, timeline has {timeline} events")]
    Count { trace: usize, timeline: usize },
    #[error("trace record `{0}` has no matching timeline event")]
    UnknownEvent(String),
    #[error("trace records `{0}` more than once")]
    Duplicate(String),
    #[error("trace schedule for `{0}` differs from the timeline")]
    Schedule(String),
}

/// Flags every record whose start or end deviates from the schedule by more
/// than `epsilon_ms` (`u64::MAX` disables this), and every pair of records
/// that overlap on one channel.
pub fn verify_trace(trace: &ExecutionTrace, timeline: &Timeline, epsilon_ms: u64) -> Result<TraceReport, TraceMismatch> {
    if trace.tour_id != timeline.header.tour_id {
        return Err(TraceMismatch::Tour {
            trace: trace.tour_id.clone(),
            timeline: timeline.header.tour_id.clone(),
        });
    }
    if trace.records.len() != timeline.event_count() {
        return Err(TraceMismatch::Count {
            trace: trace.records.len(),
            timeline: timeline.event_count(),
        });
    }
    let scheduled: BTreeMap<&str, (Channel, u64, u64)> =
        timeline.events().map(|e| (e.id, (e.channel, e.start_ms, e.end_ms))).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut report = TraceReport {
        epsilon_ms,
        ..TraceReport::default()
    };
    for r in &trace.records {
        let Some(&(ch, s, e)) = scheduled.get(r.event_id.as_str()) else {
            return Err(TraceMismatch::UnknownEvent(r.event_id.clone()));
        };
        if !seen.insert(r.event_id.as_str()) {
            return Err(TraceMismatch::Duplicate(r.event_id.clone()));
        }
        if (ch, s, e) != (r.channel, r.scheduled_start_ms, r.scheduled_end_ms) {
            return Err(TraceMismatch::Schedule(r.event_id.clone()));
        }
        let start_dev = r.actual_start_ms.abs_diff(r.scheduled_start_ms);
        let end_dev = r.actual_end_ms.abs_diff(r.scheduled_end_ms);
        if start_dev.max(end_dev) > epsilon_ms {
            report.flagged.push(FlaggedRecord {
                event_id: r.event_id.clone(),
                channel: r.channel,
                deviation_ms: r.deviation_ms(),
            });
        }
    }
    for ch in Channel::ALL {
        let mut lane: Vec<&TraceRecord> = trace.records.iter().filter(|r| r.channel == ch).collect();
        lane.sort_by_key(|r| (r.actual_start_ms, r.actual_end_ms));
        let mut reach: Option<(u64, &str)> = None;
        for r in lane {
            if let Some((end, holder)) = reach {
                if r.actual_start_ms < end {
                    report.overlaps.push(TraceOverlap {
                        channel: ch,
                        first: holder.to_string(),
                        second: r.event_id.clone(),
                    });
                }
            }
            if reach.is_none_or(|(end, _)| r.actual_end_ms > end) {
                reach = Some((r.actual_end_ms, &r.event_id));
            }
        }
    }
    Ok(report)
}

pub fn write_trace(trace: &ExecutionTrace, path: &Path) -> std::io::Result<()> {
    let mut body = serde_json::to_string_pretty(trace).map_err(std::io::Error::other)?;
    body.push('\n');
    std::fs::write(path, body)
}

pub fn read_trace(path: &Path) -> std::io::Result<ExecutionTrace> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Replays a trace against the wall clock, calling `on_start` as each record
/// begins. `speed` scales time (2.0 plays twice as fast).
pub fn play_wall_clock(trace: &ExecutionTrace, speed: f64, mut on_start: impl FnMut(&TraceRecord)) {
    let speed = if speed > 0.0 && speed.is_finite() { speed } else { 1.0 };
    let origin = std::time::Instant::now();
    for r in &trace.records {
        let due = std::time::Duration::from_secs_f64(r.actual_start_ms as f64 / 1000.0 / speed);
        if let Some(wait) = due.checked_sub(origin.elapsed()) {
            std::thread::sleep(wait);
        }
        on_start(r);
    }
}
