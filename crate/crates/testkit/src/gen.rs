//! Random inputs.

use choreo_core::asset::{
    Category, DeviceInfo, GestureContext, GestureKind, GestureUnit, LearningPoint, LibraryParts, PlacementSpec,
    VisualAsset,
};
use choreo_core::compose::Selection;
use choreo_core::geometry::{Point2, Polygon, Pose2};
use choreo_core::placement::{Referent, Scene, Surface};
use choreo_core::script::{SpeechAudio, SpeechSegment};
use rand::seq::IndexedRandom;
use rand::Rng;
use std::f64::consts::PI;

const WORDS: &[&str] = &[
    "the", "nozzle", "heats", "filament", "until", "it", "flows", "resin", "cures", "under", "light", "laser",
    "beam", "cuts", "along", "path", "keep", "hands", "clear", "of", "hot", "parts", "layer", "by", "bed",
    "level", "scanner", "captures", "points", "solder", "joins", "wires", "iron", "tip", "safety", "glasses",
];

/// `n` sentences of 2 to 14 words, each ending in `.`, `!` or `?`.
pub fn text(rng: &mut impl Rng, n: usize) -> String {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let words = rng.random_range(2..=14);
        let mut s: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect();
        let first = s[0].to_string();
        let mut cap = first[..1].to_uppercase();
        cap.push_str(&first[1..]);
        let end = *[".", ".", ".", "!", "?"].choose(rng).unwrap();
        let mut sentence = String::new();
        sentence.push_str(&cap);
        s.remove(0);
        for w in s {
            sentence.push(' ');
            sentence.push_str(w);
        }
        sentence.push_str(end);
        out.push(sentence);
    }
    out.join(" ")
}

fn pose(x: f64, y: f64) -> Pose2 {
    Pose2 {
        position: Point2::new(x, y),
        heading: PI / 2.0,
    }
}

fn square(cx: f64, cy: f64, h: f64) -> Polygon {
    Polygon(vec![
        Point2::new(cx - h, cy - h),
        Point2::new(cx + h, cy - h),
        Point2::new(cx + h, cy + h),
        Point2::new(cx - h, cy + h),
    ])
}

fn gesture_kind(rng: &mut impl Rng) -> GestureKind {
    *GestureKind::ALL.choose(rng).unwrap()
}

/// A referentially intact library with `devices` devices.
///
/// Every device has 1 to 4 learning points; each learning point gets 0 to 3
/// ranked visuals and 0 to 3 gestures of up to `max_gesture_ms`.
pub fn library(rng: &mut impl Rng, devices: usize, max_gesture_ms: u64) -> LibraryParts {
    let mut parts = LibraryParts::default();
    for d in 0..devices {
        let did = format!("dev{d}");
        let x = d as f64 * 4.0;
        parts.devices.push(DeviceInfo {
            id: did.clone(),
            name: format!("Device {d}"),
            description: String::new(),
            pose: pose(x, 0.0),
            footprint: square(x, 0.0, 0.5),
        });
        parts.surfaces.push(Surface {
            id: format!("wall-{did}"),
            start: Point2::new(x - 1.5, 1.5),
            end: Point2::new(x + 1.5, 1.5),
            height_min: 0.5,
            height_max: 2.0,
            normal: Point2::new(0.0, -1.0),
            device_id: None,
        });
        for l in 0..rng.random_range(1..=4) {
            let lid = format!("{did}-lp{l}");
            let category = *[Category::HowItWorks, Category::Operation, Category::Safety]
                .choose(rng)
                .unwrap();
            let n = rng.random_range(1..=4);
            parts.learning_points.push(LearningPoint {
                id: lid.clone(),
                device_id: did.clone(),
                category,
                text: text(rng, n),
            });
            for k in 0..rng.random_range(0..=3u32) {
                let placement = if rng.random_bool(0.5) {
                    PlacementSpec::NearbySurface {
                        surface_id: format!("wall-{did}"),
                    }
                } else {
                    PlacementSpec::OnEquipment {
                        device_id: did.clone(),
                        region: "front".into(),
                    }
                };
                parts.visuals.push(VisualAsset {
                    id: format!("img-{lid}-{k}"),
                    image_ref: format!("images/{lid}-{k}.png"),
                    description: String::new(),
                    learning_point_id: lid.clone(),
                    placement,
                    sequence_rank: k + 1,
                });
            }
            for g in 0..rng.random_range(0..=3) {
                parts.gestures.push(GestureUnit {
                    id: format!("gu-{lid}-{g}"),
                    kind: gesture_kind(rng),
                    motion_ref: format!("motions/{lid}-{g}.json"),
                    duration_ms: rng.random_range(200..=max_gesture_ms),
                    robot_pose: pose(x, -1.5),
                    description: String::new(),
                    context: GestureContext {
                        device_id: did.clone(),
                        learning_point_id: lid.clone(),
                        narration: String::new(),
                    },
                });
            }
        }
    }
    parts
}

fn visual(id: String, lp: &str, rank: u32) -> VisualAsset {
    VisualAsset {
        image_ref: format!("images/{id}.png"),
        id,
        description: String::new(),
        learning_point_id: lp.to_string(),
        placement: PlacementSpec::NearbySurface {
            surface_id: "wall".into(),
        },
        sequence_rank: rank,
    }
}

fn gesture(id: String, lp: &str, device: &str, kind: GestureKind, duration_ms: u64) -> GestureUnit {
    GestureUnit {
        motion_ref: format!("motions/{id}.json"),
        id,
        kind,
        duration_ms,
        robot_pose: pose(0.0, 0.0),
        description: String::new(),
        context: GestureContext {
            device_id: device.to_string(),
            learning_point_id: lp.to_string(),
            narration: String::new(),
        },
    }
}

/// Synthesized segments and their selections, ready for `align`.
///
/// 1 to 3 devices with 1 to 8 segments each. Durations range from 1 ms to
/// a minute, sentences from 1 to 6 per segment, images from 0 to 4 and
/// gestures from 0 to 3, some of them far longer than their segment.
pub fn align_case(rng: &mut impl Rng) -> (Vec<SpeechSegment>, Vec<Selection>) {
    let mut segments = Vec::new();
    let mut selections = Vec::new();
    for d in 0..rng.random_range(1..=3) {
        let device = format!("dev{d}");
        for order in 0..rng.random_range(1..=8u32) {
            let id = format!("{device}-{order:03}");
            let sentences = rng.random_range(1..=6);
            let marked = rng.random_bool(0.8);
            let lp = marked.then(|| format!("{device}-lp{order}"));
            let images = if marked { rng.random_range(0..=4usize) } else { 0 };
            let short = rng.random_bool(0.1);
            let duration_ms = if short {
                rng.random_range(images.max(1) as u64..=400)
            } else {
                rng.random_range(1_000..=60_000)
            };
            segments.push(SpeechSegment {
                id: id.clone(),
                device_id: device.clone(),
                order_index: order,
                text: text(rng, sentences),
                learning_point_id: lp.clone(),
                audio: Some(SpeechAudio {
                    audio_ref: format!("audio/{id}"),
                    duration_ms,
                }),
            });
            let mut sel = Selection::empty(&id);
            if let Some(lp) = &lp {
                sel.learning_point_id = Some(lp.clone());
                sel.visuals = (0..images)
                    .map(|k| visual(format!("img-{id}-{k}"), lp, k as u32 + 1))
                    .collect();
                let gestures = rng.random_range(0..=3);
                sel.gestures = (0..gestures)
                    .map(|k| {
                        let dur = rng.random_range(100..=(duration_ms / 2 + 15_000));
                        gesture(format!("gu-{id}-{k}"), lp, &device, gesture_kind(rng), dur)
                    })
                    .collect();
                sel.library_matches = sel.visuals.len() + sel.gestures.len();
                sel.rationale = "fuzz".into();
            }
            selections.push(sel);
        }
    }
    (segments, selections)
}

fn rect(cx: f64, cy: f64, hx: f64, hy: f64) -> Polygon {
    Polygon(vec![
        Point2::new(cx - hx, cy - hy),
        Point2::new(cx + hx, cy - hy),
        Point2::new(cx + hx, cy + hy),
        Point2::new(cx - hx, cy + hy),
    ])
}

/// A teaching scene around one device, under a random rigid motion.
///
/// The device sits at the origin with a wall behind it; the robot and 1 to
/// 4 learners stand in front. Side walls, an equipment face and an extra
/// obstacle appear at random, so some scenes have no feasible placement.
pub fn scene(rng: &mut impl Rng) -> Scene {
    let hx = rng.random_range(0.2..0.6);
    let hy = rng.random_range(0.2..0.5);
    let mut obstacles = vec![rect(0.0, 0.0, hx, hy)];
    if rng.random_bool(0.5) {
        let h = rng.random_range(0.1..0.25);
        obstacles.push(rect(rng.random_range(-1.5..1.5), rng.random_range(-0.9..-0.6), h, h));
    }

    let back = rng.random_range(0.8..2.0);
    let mut surfaces = vec![Surface {
        id: "wall-back".into(),
        start: Point2::new(-rng.random_range(1.0..3.0), back),
        end: Point2::new(rng.random_range(1.0..3.0), back),
        height_min: rng.random_range(0.3..1.0),
        height_max: rng.random_range(1.8..2.6),
        normal: Point2::new(0.0, -1.0),
        device_id: None,
    }];
    if rng.random_bool(0.5) {
        let x = rng.random_range(1.5..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        surfaces.push(Surface {
            id: "wall-side".into(),
            start: Point2::new(x, -0.5),
            end: Point2::new(x, back),
            height_min: 0.5,
            height_max: rng.random_range(1.5..2.5),
            normal: Point2::new(-x.signum(), 0.0),
            device_id: None,
        });
    }
    if rng.random_bool(0.5) {
        surfaces.push(Surface {
            id: "front".into(),
            start: Point2::new(-hx, -hy - 0.01),
            end: Point2::new(hx, -hy - 0.01),
            height_min: 0.3,
            height_max: rng.random_range(0.6..1.2),
            normal: Point2::new(0.0, -1.0),
            device_id: Some("dev".into()),
        });
    }

    let robot = Point2::new(rng.random_range(-1.5..1.5), rng.random_range(-2.5..-1.2));
    let heading = (-robot.y).atan2(-robot.x) + rng.random_range(-0.5..0.5);
    let learners = (0..rng.random_range(1..=4))
        .map(|_| Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-3.0..-1.5)))
        .collect();

    let scene = Scene {
        robot: Pose2 {
            position: robot,
            heading,
        },
        projector_height: rng.random_range(0.8..1.6),
        learners,
        eye_height: rng.random_range(1.2..1.8),
        target: Referent {
            device_id: "dev".into(),
            position: Point2::new(0.0, 0.0),
            height: rng.random_range(0.5..1.5),
        },
        obstacles,
        surfaces,
    };
    let angle = rng.random_range(-PI..PI);
    let shift = Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
    transform(&scene, angle, shift)
}

/// Rotates `scene` by `angle` about the origin, then translates it.
pub fn transform(scene: &Scene, angle: f64, shift: Point2) -> Scene {
    let o = Point2::new(0.0, 0.0);
    let m = |p: Point2| p.rotate_about(o, angle).add(shift);
    Scene {
        robot: Pose2 {
            position: m(scene.robot.position),
            heading: scene.robot.heading + angle,
        },
        learners: scene.learners.iter().map(|&p| m(p)).collect(),
        target: Referent {
            position: m(scene.target.position),
            ..scene.target.clone()
        },
        obstacles: scene
            .obstacles
            .iter()
            .map(|poly| Polygon(poly.0.iter().map(|&p| m(p)).collect()))
            .collect(),
        surfaces: scene
            .surfaces
            .iter()
            .map(|s| Surface {
                start: m(s.start),
                end: m(s.end),
                normal: s.normal.rotate_about(o, angle),
                ..s.clone()
            })
            .collect(),
        ..scene.clone()
    }
}
