//! Independent re-derivations of the laws, schedules and geometry the
//! library implements.

use choreo_core::geometry::{Point2, Point3, Polygon};
use choreo_core::placement::{PlacementConfig, PlacementResult, Scene, Surface};
use choreo_core::sim::{ChannelJitter, ExecutionTrace};
use choreo_core::timeline::{Channel, Timeline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------- timeline

fn compiled(start: u64, end: u64, nudge: i64) -> (i64, i64) {
    (start as i64 - nudge, end as i64 - nudge)
}

/// Every alignment law, checked on compiled positions (nudges removed).
/// Returns one message per broken law instance.
pub fn timeline_laws(t: &Timeline) -> Vec<String> {
    let mut bad = Vec::new();
    let base = t.header.base_pause_ms as i64;

    // Segments run back to back from the clock origin, separated by pauses.
    let mut cursor = t.header.clock_origin_ms as i64;
    let mut segs: BTreeMap<&str, (i64, i64, i64)> = BTreeMap::new();
    let mut total = 0i64;
    for s in &t.speech {
        let (a, b) = compiled(s.start_ms, s.end_ms, s.nudge_ms);
        if a != cursor {
            bad.push(format!("{}: starts at {a}, expected {cursor}", s.id));
        }
        if b <= a {
            bad.push(format!("{}: empty span", s.id));
        }
        cursor = b + s.pause_after_ms as i64;
        total += (b - a) + s.pause_after_ms as i64;
        segs.insert(&s.segment_id, (a, b, s.pause_after_ms as i64));
    }
    if t.end_ms() as i64 != total {
        bad.push(format!("end {} != sum of durations and pauses {total}", t.end_ms()));
    }
    if cursor - t.header.clock_origin_ms as i64 != total {
        bad.push("hidden gap between segments".into());
    }

    // Gestures start with their segment and play back to back; the pause
    // grows by however much they outlast it.
    let mut by_seg: BTreeMap<&str, Vec<(i64, i64)>> = BTreeMap::new();
    for g in &t.gestures {
        by_seg.entry(&g.segment_id).or_default().push(compiled(g.start_ms, g.end_ms, g.nudge_ms));
    }
    for (seg, (a, b, pause)) in &segs {
        let mut gs = by_seg.remove(seg).unwrap_or_default();
        gs.sort();
        let mut at = *a;
        let mut sum = 0;
        for (ga, gb) in &gs {
            if *ga != at {
                bad.push(format!("{seg}: gesture at {ga}, expected {at}"));
            }
            at = *gb;
            sum += gb - ga;
        }
        let expected = base + (sum - (b - a)).max(0);
        if *pause != expected {
            bad.push(format!("{seg}: pause {pause}, law gives {expected}"));
        }
    }
    for seg in by_seg.keys() {
        bad.push(format!("gesture in unknown segment {seg}"));
    }

    // One image spans its segment; several partition it in order.
    let mut vis: BTreeMap<&str, Vec<(usize, usize, i64, i64)>> = BTreeMap::new();
    for v in &t.visuals {
        let (a, b) = compiled(v.start_ms, v.end_ms, v.nudge_ms);
        vis.entry(&v.segment_id).or_default().push((v.sequence_index, v.sequence_len, a, b));
    }
    for (seg, mut vs) in vis {
        let Some((a, b, _)) = segs.get(seg) else {
            bad.push(format!("visual in unknown segment {seg}"));
            continue;
        };
        vs.sort();
        let n = vs.len();
        let mut at = *a;
        for (k, (idx, len, va, vb)) in vs.iter().enumerate() {
            if *idx != k || *len != n {
                bad.push(format!("{seg}: image {k} has index {idx}/{len}"));
            }
            if *va != at || vb <= va {
                bad.push(format!("{seg}: image {k} spans [{va}, {vb}), expected start {at}"));
            }
            at = *vb;
        }
        if at != *b {
            bad.push(format!("{seg}: images end at {at}, segment at {b}"));
        }
    }

    // No two events of one channel overlap.
    let lanes: [(Channel, Vec<(i64, i64)>); 3] = [
        (Channel::Speech, t.speech.iter().map(|e| (e.start_ms as i64, e.end_ms as i64)).collect()),
        (Channel::Visual, t.visuals.iter().map(|e| (e.start_ms as i64, e.end_ms as i64)).collect()),
        (Channel::Gesture, t.gestures.iter().map(|e| (e.start_ms as i64, e.end_ms as i64)).collect()),
    ];
    for (ch, mut spans) in lanes {
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                bad.push(format!("{ch}: [{}, {}) overlaps [{}, {})", w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
    }
    bad
}

/// Image start offsets for a segment: image `i` starts at the share of the
/// text that precedes sentence `i`, counted in characters of the
/// whitespace-normalized text, rounded down. `sentence_starts` are the
/// character offsets where sentences begin.
pub fn fraction_boundaries(start: u64, duration: u64, total_chars: usize, sentence_starts: &[usize]) -> Vec<u64> {
    sentence_starts
        .iter()
        .map(|&c| start + (c as u128 * duration as u128 / total_chars as u128) as u64)
        .collect()
}

// --------------------------------------------------------------- simulator

/// Actual spans from a sequential fold over each channel in scheduled
/// order: an event starts at the later of its ready time and the end of its
/// predecessor, and keeps its duration. Jitter draws follow the simulator's
/// published contract: one uniform draw from `[-j, j]` per event with a
/// non-zero bound, speech then visuals then gestures, in file order, from
/// ChaCha8 seeded with `seed`.
pub fn replay(t: &Timeline, seed: u64, jitter: ChannelJitter) -> BTreeMap<String, (u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |start: u64, j: u64| -> u64 {
        let off = if j == 0 {
            0
        } else {
            rng.random_range(-(j as i64)..=j as i64)
        };
        (start as i64 + off).max(0) as u64
    };
    let mut lanes: [Vec<(u64, u64, u64, String)>; 3] = Default::default();
    for e in &t.speech {
        lanes[0].push((e.start_ms, e.end_ms, draw(e.start_ms, jitter.speech), e.id.clone()));
    }
    for e in &t.visuals {
        lanes[1].push((e.start_ms, e.end_ms, draw(e.start_ms, jitter.visual), e.id.clone()));
    }
    for e in &t.gestures {
        lanes[2].push((e.start_ms, e.end_ms, draw(e.start_ms, jitter.gesture), e.id.clone()));
    }
    let mut out = BTreeMap::new();
    for mut lane in lanes {
        lane.sort_by_key(|(s, e, _, _)| (*s, *e));
        let mut free = 0u64;
        for (s, e, ready, id) in lane {
            let begin = ready.max(free);
            free = begin + (e - s);
            out.insert(id, (begin, free));
        }
    }
    out
}

/// Records whose start or end is more than `epsilon` from the schedule.
pub fn deviating(trace: &ExecutionTrace, epsilon: u64) -> BTreeSet<String> {
    trace
        .records
        .iter()
        .filter(|r| {
            r.actual_start_ms.abs_diff(r.scheduled_start_ms) > epsilon
                || r.actual_end_ms.abs_diff(r.scheduled_end_ms) > epsilon
        })
        .map(|r| r.event_id.clone())
        .collect()
}

// ---------------------------------------------------------------- geometry

/// Closed point-in-polygon test by winding number, with points within
/// `1e-12` of an edge counted as inside.
pub fn in_polygon(p: Point2, poly: &Polygon) -> bool {
    let v = &poly.0;
    let n = v.len();
    let mut winding = 0i32;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (ex, ey) = (b.x - a.x, b.y - a.y);
        let (px, py) = (p.x - a.x, p.y - a.y);
        let len2 = ex * ex + ey * ey;
        let t = ((px * ex + py * ey) / len2).clamp(0.0, 1.0);
        let (cx, cy) = (a.x + t * ex - p.x, a.y + t * ey - p.y);
        if (cx * cx + cy * cy).sqrt() <= 1e-12 {
            return true;
        }
        let side = ex * py - ey * px;
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Samples the open segment `pq` every `step` meters and reports whether
/// any sample falls in an obstacle.
pub fn occluded_by_sampling(p: Point2, q: Point2, obstacles: &[Polygon], step: f64) -> bool {
    let len = ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
    let n = (len / step).ceil() as usize;
    (1..n).any(|k| {
        let t = k as f64 / n as f64;
        let s = Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
        obstacles.iter().any(|o| in_polygon(s, o))
    })
}

/// Exact occlusion for convex obstacles by parametric clipping of the
/// segment against each edge's half-plane. Contact at `p` or `q` alone does
/// not count.
pub fn occluded_convex(p: Point2, q: Point2, obstacles: &[Polygon]) -> bool {
    const TOL: f64 = 1e-12;
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    'next: for poly in obstacles {
        let v = &poly.0;
        let n = v.len();
        let area2: f64 = (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum();
        let ccw = if area2 > 0.0 { 1.0 } else { -1.0 };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            // Inward normal.
            let (nx, ny) = (-(b.y - a.y) * ccw, (b.x - a.x) * ccw);
            let num = nx * (p.x - a.x) + ny * (p.y - a.y);
            let den = nx * dx + ny * dy;
            if den.abs() < TOL {
                if num < -TOL {
                    continue 'next;
                }
            } else if den > 0.0 {
                lo = lo.max(-num / den);
            } else {
                hi = hi.min(-num / den);
            }
        }
        if lo <= hi + TOL && hi > TOL && lo < 1.0 - TOL {
            return true;
        }
    }
    false
}

/// Pan and tilt from the heading and target by inverse trigonometry.
pub fn gimbal_trig(projector: Point3, heading: f64, target: Point3) -> (f64, f64) {
    let (dx, dy, dz) = (target.x - projector.x, target.y - projector.y, target.z - projector.z);
    let h = (dx * dx + dy * dy).sqrt();
    let r = (h * h + dz * dz).sqrt();
    let tilt = (dz / r).asin();
    if h == 0.0 {
        return (0.0, tilt);
    }
    let (ux, uy) = (dx / h, dy / h);
    let (hx, hy) = (heading.cos(), heading.sin());
    let cos = (hx * ux + hy * uy).clamp(-1.0, 1.0);
    let cross = hx * uy - hy * ux;
    let pan = if cross < 0.0 { -cos.acos() } else { cos.acos() };
    (pan, tilt)
}

/// Smallest absolute difference between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// One candidate point judged from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct Judged {
    pub feasible: Result<(), &'static str>,
    pub score: f64,
}

fn unit_normal(s: &Surface) -> (f64, f64) {
    let (ex, ey) = (s.end.x - s.start.x, s.end.y - s.start.y);
    let len = (ex * ex + ey * ey).sqrt();
    let (nx, ny) = (ey / len, -ex / len);
    if nx * s.normal.x + ny * s.normal.y >= 0.0 {
        (nx, ny)
    } else {
        (-nx, -ny)
    }
}

/// Cosine of the angle between the surface normal and the ray from the
/// point on the surface to `eye`.
fn facing(eye: Point3, point: Point3, n: (f64, f64)) -> f64 {
    let v = (eye.x - point.x, eye.y - point.y, eye.z - point.z);
    let dot = v.0 * n.0 + v.1 * n.1;
    // |v x n| with n = (n.0, n.1, 0).
    let cross = ((v.2 * n.1).powi(2) + (v.2 * n.0).powi(2) + (v.0 * n.1 - v.1 * n.0).powi(2)).sqrt();
    cross.atan2(dot).cos()
}

/// Feasibility and score of the point `along` meters down `surface` at
/// `height`. Obstacles must be convex.
pub fn judge(scene: &Scene, cfg: &PlacementConfig, surface: &Surface, along: f64, height: f64) -> Judged {
    let (ex, ey) = (surface.end.x - surface.start.x, surface.end.y - surface.start.y);
    let len = (ex * ex + ey * ey).sqrt();
    let plan = Point2::new(surface.start.x + ex * along / len, surface.start.y + ey * along / len);
    let point = Point3::new(plan.x, plan.y, height);
    let n = unit_normal(surface);
    let fail = |why| Judged {
        feasible: Err(why),
        score: f64::NEG_INFINITY,
    };
    if along < -1e-9 || along > len + 1e-9 || height < surface.height_min - 1e-9 || height > surface.height_max + 1e-9 {
        return fail("outside surface");
    }
    if occluded_convex(scene.robot.position, plan, &scene.obstacles) {
        return fail("projector occluded");
    }
    let mut views = Vec::new();
    for l in &scene.learners {
        let c = facing(Point3::new(l.x, l.y, scene.eye_height), point, n);
        if c <= 0.0 || occluded_convex(*l, plan, &scene.obstacles) {
            return fail("learner occluded");
        }
        views.push(c);
    }
    let p = scene.robot.position;
    let projector = Point3::new(p.x, p.y, scene.projector_height);
    let cos_inc = facing(projector, point, n);
    if cos_inc <= 0.0 || cos_inc.acos() > cfg.max_incidence_deg.to_radians() + 1e-9 {
        return fail("incidence");
    }
    let (pan, tilt) = gimbal_trig(projector, scene.robot.heading, point);
    let [pl, ph] = cfg.pan_limits_deg.map(f64::to_radians);
    let [tl, th] = cfg.tilt_limits_deg.map(f64::to_radians);
    if pan < pl - 1e-9 || pan > ph + 1e-9 || tilt < tl - 1e-9 || tilt > th + 1e-9 {
        return fail("gimbal limits");
    }
    let r = Point3::new(scene.target.position.x, scene.target.position.y, scene.target.height);
    let dist = ((point.x - r.x).powi(2) + (point.y - r.y).powi(2) + (point.z - r.z).powi(2)).sqrt();
    let w = cfg.weights;
    let score = w.referent * (-dist).exp() + w.incidence * cos_inc + w.visibility * views.iter().sum::<f64>() / views.len() as f64;
    Judged { feasible: Ok(()), score }
}

/// Best point of a dense grid over every surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Pick {
    pub surface_id: String,
    pub along: f64,
    pub height: f64,
    pub score: f64,
}

pub fn brute_force_placement(scene: &Scene, cfg: &PlacementConfig, step: f64) -> Option<Pick> {
    let mut best: Option<Pick> = None;
    for s in &scene.surfaces {
        let len = ((s.end.x - s.start.x).powi(2) + (s.end.y - s.start.y).powi(2)).sqrt();
        let na = (len / step + 1e-9).floor() as usize;
        let nh = ((s.height_max - s.height_min) / step + 1e-9).floor() as usize;
        for i in 0..=na {
            for k in 0..=nh {
                let (along, height) = (i as f64 * step, s.height_min + k as f64 * step);
                let j = judge(scene, cfg, s, along, height);
                if j.feasible.is_ok() && best.as_ref().is_none_or(|b| j.score > b.score) {
                    best = Some(Pick {
                        surface_id: s.id.clone(),
                        along,
                        height,
                        score: j.score,
                    });
                }
            }
        }
    }
    best
}

/// Re-checks a solver result: target on its surface, world point and
/// angles consistent, and every feasibility filter passed.
pub fn recheck(scene: &Scene, cfg: &PlacementConfig, r: &PlacementResult) -> Result<(), String> {
    let s = scene
        .surfaces
        .iter()
        .find(|s| s.id == r.surface_id)
        .ok_or_else(|| format!("unknown surface {}", r.surface_id))?;
    let j = judge(scene, cfg, s, r.target.along_m, r.target.height_m);
    j.feasible.map_err(|why| why.to_string())?;
    let (ex, ey) = (s.end.x - s.start.x, s.end.y - s.start.y);
    let len = (ex * ex + ey * ey).sqrt();
    let wx = s.start.x + ex * r.target.along_m / len;
    let wy = s.start.y + ey * r.target.along_m / len;
    if (wx - r.world.x).abs() > 1e-9 || (wy - r.world.y).abs() > 1e-9 || (r.target.height_m - r.world.z).abs() > 1e-9 {
        return Err("world point does not match the surface point".into());
    }
    let p = scene.robot.position;
    let (pan, tilt) = gimbal_trig(Point3::new(p.x, p.y, scene.projector_height), scene.robot.heading, r.world);
    if angle_diff(pan, r.pan) > 1e-6 || (tilt - r.tilt).abs() > 1e-6 {
        return Err(format!("angles ({}, {}) recompute to ({pan}, {tilt})", r.pan, r.tilt));
    }
    if r.incidence > cfg.max_incidence_deg.to_radians() + 1e-9 {
        return Err("incidence above the limit".into());
    }
    if (j.score - r.score.total).abs() > 1e-9 {
        return Err(format!("score {} recomputes to {}", r.score.total, j.score));
    }
    Ok(())
}

/// How a solver result relates to the dense oracle's pick.
#[derive(Debug, Clone, PartialEq)]
pub enum Agreement {
    /// Same surface, within one grid cell in both coordinates.
    Agree,
    /// The solver's point is feasible and scores above the oracle's pick,
    /// and every oracle lattice point around it is infeasible: the opening
    /// it sits in is narrower than the oracle's pitch.
    FinerThanOracle,
    Disagree,
}

pub fn compare_placement(
    scene: &Scene,
    cfg: &PlacementConfig,
    r: &PlacementResult,
    pick: &Pick,
    oracle_step: f64,
) -> Agreement {
    let cell = cfg.grid_step_m + 1e-9;
    if r.surface_id == pick.surface_id
        && (r.target.along_m - pick.along).abs() <= cell
        && (r.target.height_m - pick.height).abs() <= cell
    {
        return Agreement::Agree;
    }
    if recheck(scene, cfg, r).is_err() || r.score.total <= pick.score {
        return Agreement::Disagree;
    }
    let s = scene.surfaces.iter().find(|s| s.id == r.surface_id).expect("rechecked");
    let ua = (r.target.along_m / oracle_step).floor() * oracle_step;
    let ha = s.height_min + ((r.target.height_m - s.height_min) / oracle_step).floor() * oracle_step;
    let hidden = [ua, ua + oracle_step]
        .iter()
        .flat_map(|&u| [ha, ha + oracle_step].map(|h| (u, h)))
        .all(|(u, h)| judge(scene, cfg, s, u, h).feasible.is_err());
    if hidden {
        Agreement::FinerThanOracle
    } else {
        Agreement::Disagree
    }
}
