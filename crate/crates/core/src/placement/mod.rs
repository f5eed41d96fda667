//! Projection placement in a 2.5D scene model.
//!
//! The robot and learners stand around the referent; the projection should
//! land in the shared focus area between them, on a wall or equipment
//! surface the projector can reach and every learner can see. Surfaces are
//! sampled on a regular grid, infeasible samples are filtered out, and the
//! remaining samples are scored by proximity to the referent, projector
//! incidence and learner viewing angles.

mod gimbal;

pub use gimbal::{gimbal_angles, CoincidentTarget};

use crate::geometry::{occluded, Point2, Point3, Polygon, Pose2};
use serde::{Deserialize, Serialize};

/// A planar projection surface: a vertical wall strip above a 2D base
/// segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Surface {
    pub id: String,
    pub start: Point2,
    pub end: Point2,
    pub height_min: f64,
    pub height_max: f64,
    /// Which side of the segment faces the room. Only its side matters; the
    /// effective normal is perpendicular to the segment.
    pub normal: Point2,
    /// Set when the surface is part of a piece of equipment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_id: Option<String>,
}

impl Surface {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn point_at(&self, along: f64) -> Point2 {
        let len = self.length();
        self.start.lerp(self.end, along / len)
    }

    /// Unit normal perpendicular to the base segment, on the side of `normal`.
    pub fn unit_normal(&self) -> Point2 {
        let d = self.end.sub(self.start);
        let len = d.norm();
        let perp = Point2::new(-d.y / len, d.x / len);
        if perp.dot(self.normal) >= 0.0 {
            perp
        } else {
            perp.scale(-1.0)
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let finite = self.start.is_finite()
            && self.end.is_finite()
            && self.normal.is_finite()
            && self.height_min.is_finite()
            && self.height_max.is_finite();
        if !finite {
            return Err(format!("surface `{}` has non-finite geometry", self.id));
        }
        let len = self.length();
        if len <= 0.0 {
            return Err(format!("surface `{}` has zero length", self.id));
        }
        if self.height_min < 0.0 || self.height_max <= self.height_min {
            return Err(format!(
                "surface `{}` needs 0 <= height_min < height_max",
                self.id
            ));
        }
        let n = self.normal.norm();
        if n == 0.0 {
            return Err(format!("surface `{}` has a zero normal", self.id));
        }
        let along = self.end.sub(self.start).dot(self.normal) / (len * n);
        if along.abs() > 0.99 {
            return Err(format!(
                "surface `{}` normal is parallel to its base segment",
                self.id
            ));
        }
        Ok(())
    }

    pub fn rotated_about(&self, center: Point2, angle: f64) -> Surface {
        Surface {
            start: self.start.rotate_about(center, angle),
            end: self.end.rotate_about(center, angle),
            normal: self.normal.rotate_about(Point2::new(0.0, 0.0), angle),
            ..self.clone()
        }
    }
}

/// The object being explained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Referent {
    pub device_id: String,
    pub position: Point2,
    /// Height of the point of interest on the device.
    #[serde(default = "default_referent_height")]
    pub height: f64,
}

fn default_referent_height() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub robot: Pose2,
    pub projector_height: f64,
    pub learners: Vec<Point2>,
    pub eye_height: f64,
    pub target: Referent,
    #[serde(default)]
    pub obstacles: Vec<Polygon>,
    #[serde(default)]
    pub surfaces: Vec<Surface>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SceneError {
    #[error("scene has no learners")]
    NoLearners,
    #[error("scene has no candidate surfaces")]
    NoSurfaces,
    #[error("{0} must be positive")]
    NonPositiveHeight(&'static str),
    #[error("scene has non-finite coordinates")]
    NonFinite,
    #[error("obstacle {index}: {message}")]
    BadObstacle { index: usize, message: String },
    #[error("{0}")]
    BadSurface(String),
    #[error("duplicate surface id `{0}`")]
    DuplicateSurface(String),
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.learners.is_empty() {
            return Err(SceneError::NoLearners);
        }
        if self.surfaces.is_empty() {
            return Err(SceneError::NoSurfaces);
        }
        if !(self.projector_height > 0.0) {
            return Err(SceneError::NonPositiveHeight("projector_height"));
        }
        if !(self.eye_height > 0.0) {
            return Err(SceneError::NonPositiveHeight("eye_height"));
        }
        if !(self.target.height > 0.0) {
            return Err(SceneError::NonPositiveHeight("target.height"));
        }
        let finite = self.robot.is_finite()
            && self.projector_height.is_finite()
            && self.eye_height.is_finite()
            && self.target.position.is_finite()
            && self.target.height.is_finite()
            && self.learners.iter().all(|p| p.is_finite());
        if !finite {
            return Err(SceneError::NonFinite);
        }
        for (index, o) in self.obstacles.iter().enumerate() {
            o.validate_simple().map_err(|e| SceneError::BadObstacle {
                index,
                message: e.to_string(),
            })?;
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.surfaces {
            s.check().map_err(SceneError::BadSurface)?;
            if !ids.insert(s.id.as_str()) {
                return Err(SceneError::DuplicateSurface(s.id.clone()));
            }
        }
        Ok(())
    }

    pub fn projector(&self) -> Point3 {
        Point3::from_plan(self.robot.position, self.projector_height)
    }

    pub fn referent(&self) -> Point3 {
        Point3::from_plan(self.target.position, self.target.height)
    }

    /// The same scene with its surfaces restricted to those `keep` accepts.
    pub fn with_surfaces(&self, keep: impl Fn(&Surface) -> bool) -> Scene {
        Scene {
            surfaces: self.surfaces.iter().filter(|s| keep(s)).cloned().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreWeights {
    pub referent: f64,
    pub incidence: f64,
    pub visibility: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            referent: 0.5,
            incidence: 0.3,
            visibility: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementConfig {
    pub grid_step_m: f64,
    pub max_incidence_deg: f64,
    pub weights: ScoreWeights,
    /// Inclusive pan range, degrees relative to the robot heading.
    pub pan_limits_deg: [f64; 2],
    /// Inclusive tilt range, degrees from horizontal.
    pub tilt_limits_deg: [f64; 2],
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            grid_step_m: 0.1,
            max_incidence_deg: 60.0,
            weights: ScoreWeights::default(),
            pan_limits_deg: [-180.0, 180.0],
            tilt_limits_deg: [-90.0, 90.0],
        }
    }
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.grid_step_m > 0.0 && self.grid_step_m.is_finite()) {
            return Err("placement.grid_step_m must be positive".into());
        }
        if !(0.0..=90.0).contains(&self.max_incidence_deg) {
            return Err("placement.max_incidence_deg must be within [0, 90]".into());
        }
        let w = self.weights;
        if [w.referent, w.incidence, w.visibility].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err("placement.weights must be finite and non-negative".into());
        }
        if self.pan_limits_deg[0] > self.pan_limits_deg[1] || self.tilt_limits_deg[0] > self.tilt_limits_deg[1] {
            return Err("placement gimbal limits must be [min, max]".into());
        }
        Ok(())
    }
}

/// A target point on a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePoint {
    /// Meters from the surface's start vertex along its base segment.
    pub along_m: f64,
    pub height_m: f64,
}

/// Unweighted score terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreBreakdown {
    pub referent_proximity: f64,
    pub incidence: f64,
    pub learner_visibility: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementResult {
    pub surface_id: String,
    pub target: SurfacePoint,
    pub world: Point3,
    pub pan: f64,
    pub tilt: f64,
    pub incidence: f64,
    pub score: ScoreBreakdown,
}

/// Samples discarded by each feasibility filter. A sample is charged to the
/// first filter it fails.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejections {
    pub projector_occluded: usize,
    pub learner_occluded: usize,
    pub incidence: usize,
    pub gimbal_limits: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("invalid scene: {0}")]
    Scene(#[from] SceneError),
    #[error("invalid placement config: {0}")]
    Config(String),
    #[error(
        "no feasible placement among {samples} samples \
         (projector occluded {}, learner occluded {}, incidence {}, gimbal limits {})",
        .rejections.projector_occluded, .rejections.learner_occluded,
        .rejections.incidence, .rejections.gimbal_limits
    )]
    NoFeasiblePlacement { samples: usize, rejections: Rejections },
}

/// Grid coordinates `0, step, 2*step, ...` up to `extent`, always ending
/// with `extent` itself so the far edge of a surface is sampled.
pub fn grid_offsets(extent: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (extent / step + 1e-9).floor() as usize;
    let tail = (extent - n as f64 * step > 1e-9).then_some(extent);
    (0..=n).map(move |k| k as f64 * step).chain(tail)
}

const TIE_EPS: f64 = 1e-9;

/// Why a candidate point was discarded.
enum Reject {
    ProjectorOccluded,
    LearnerOccluded,
    Incidence,
    Gimbal,
}

struct Evaluator<'a> {
    scene: &'a Scene,
    cfg: &'a PlacementConfig,
    projector: Point3,
    referent: Point3,
    max_incidence: f64,
    pan_limits: [f64; 2],
    tilt_limits: [f64; 2],
}

impl<'a> Evaluator<'a> {
    fn new(scene: &'a Scene, cfg: &'a PlacementConfig) -> Self {
        Self {
            scene,
            cfg,
            projector: scene.projector(),
            referent: scene.referent(),
            max_incidence: cfg.max_incidence_deg.to_radians(),
            pan_limits: cfg.pan_limits_deg.map(f64::to_radians),
            tilt_limits: cfg.tilt_limits_deg.map(f64::to_radians),
        }
    }

    fn evaluate(&self, normal: Point2, plan: Point2, height: f64, along: f64) -> Result<Candidate, Reject> {
        let scene = self.scene;
        if occluded(scene.robot.position, plan, &scene.obstacles) {
            return Err(Reject::ProjectorOccluded);
        }
        let target = Point3::from_plan(plan, height);
        let mut view_sum = 0.0;
        for learner in &scene.learners {
            let cos_view = facing_cosine(Point3::from_plan(*learner, scene.eye_height), target, normal);
            if cos_view <= 0.0 || occluded(*learner, plan, &scene.obstacles) {
                return Err(Reject::LearnerOccluded);
            }
            view_sum += cos_view;
        }
        let cos_inc = facing_cosine(self.projector, target, normal);
        let incidence = cos_inc.clamp(-1.0, 1.0).acos();
        if cos_inc <= 0.0 || incidence > self.max_incidence + 1e-12 {
            return Err(Reject::Incidence);
        }
        let Ok((pan, tilt)) = gimbal_angles(self.projector, scene.robot.heading, target) else {
            return Err(Reject::Gimbal);
        };
        if pan < self.pan_limits[0] || pan > self.pan_limits[1] || tilt < self.tilt_limits[0] || tilt > self.tilt_limits[1] {
            return Err(Reject::Gimbal);
        }
        let w = self.cfg.weights;
        let referent_proximity = (-target.distance(self.referent)).exp();
        let learner_visibility = view_sum / scene.learners.len() as f64;
        let total = w.referent * referent_proximity + w.incidence * cos_inc + w.visibility * learner_visibility;
        Ok(Candidate {
            along,
            height,
            pan,
            tilt,
            incidence,
            score: ScoreBreakdown {
                referent_proximity,
                incidence: cos_inc,
                learner_visibility,
                total,
            },
        })
    }
}

/// Cosine between the surface normal and the direction from `target` to `eye`.
fn facing_cosine(eye: Point3, target: Point3, normal: Point2) -> f64 {
    let (dx, dy, dz) = (eye.x - target.x, eye.y - target.y, eye.z - target.z);
    let len = (dx * dx + dy * dy + dz * dz).sqrt();
    if len == 0.0 {
        return 0.0;
    }
    (dx * normal.x + dy * normal.y) / len
}

/// Along-surface coordinates where the occlusion status of some sight line
/// can change: where a ray from a viewpoint through an obstacle vertex, or
/// an obstacle edge, crosses the surface's base line. Between consecutive
/// breakpoints every viewpoint's line of sight is either clear throughout
/// or blocked throughout. Includes both ends of the surface, sorted.
fn occlusion_breakpoints(surface: &Surface, viewpoints: &[Point2], obstacles: &[Polygon]) -> Vec<f64> {
    let len = surface.length();
    let a = surface.start;
    let d = surface.end.sub(a).scale(1.0 / len);
    let mut cuts = vec![0.0, len];
    let mut push = |u: f64| {
        if u.is_finite() && u > 0.0 && u < len {
            cuts.push(u);
        }
    };
    for poly in obstacles {
        for &p in poly.vertices() {
            for &v in viewpoints {
                let w = p.sub(v);
                let den = d.cross(w);
                if den.abs() > 1e-12 {
                    push(v.sub(a).cross(w) / den);
                }
            }
        }
        for (p, q) in poly.edges() {
            let e = q.sub(p);
            let den = d.cross(e);
            if den.abs() > 1e-12 {
                let u = p.sub(a).cross(e) / den;
                let t = p.sub(a).cross(d) / den;
                if (0.0..=1.0).contains(&t) {
                    push(u);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    cuts
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    along: f64,
    height: f64,
    pan: f64,
    tilt: f64,
    incidence: f64,
    score: ScoreBreakdown,
}

/// Finest step of the local search, m.
const REFINE_TOL: f64 = 1e-3;

impl Evaluator<'_> {
    fn candidate(&self, surface: &Surface, normal: Point2, along: f64, height: f64) -> Result<Candidate, Reject> {
        self.evaluate(normal, surface.point_at(along), height, along)
    }

    /// Pattern search from `start` over the surface, halving the step from
    /// half a grid cell down to `REFINE_TOL`. Moves only to feasible points
    /// that score strictly higher.
    fn refine(&self, surface: &Surface, normal: Point2, start: Candidate) -> Candidate {
        const DIRS: [(f64, f64); 8] = [
            (-1.0, 0.0),
            (1.0, 0.0),
            (0.0, -1.0),
            (0.0, 1.0),
            (-1.0, -1.0),
            (-1.0, 1.0),
            (1.0, -1.0),
            (1.0, 1.0),
        ];
        let len = surface.length();
        let mut best = start;
        let mut step = self.cfg.grid_step_m / 2.0;
        while step >= REFINE_TOL {
            let mut next: Option<Candidate> = None;
            for (du, dh) in DIRS {
                let u = (best.along + du * step).clamp(0.0, len);
                let h = (best.height + dh * step).clamp(surface.height_min, surface.height_max);
                if u == best.along && h == best.height {
                    continue;
                }
                if let Ok(c) = self.candidate(surface, normal, u, h) {
                    let bar = next.as_ref().map_or(best.score.total, |n| n.score.total);
                    if c.score.total > bar + TIE_EPS {
                        next = Some(c);
                    }
                }
            }
            match next {
                Some(c) => best = c,
                None => step /= 2.0,
            }
        }
        best
    }
}

/// Picks the best feasible projection point in `scene`.
///
/// Each surface is sampled on the configured grid. Lines of sight change
/// only at breakpoints along the surface, so the midpoint of every stretch
/// between breakpoints is sampled as well, which keeps openings narrower
/// than a grid cell from being missed. The best sample of each stretch is
/// then refined by a local search. Surfaces are visited in id order and
/// stretches in ascending along-segment order; a later candidate replaces
/// the incumbent only when it scores strictly higher, which realizes the
/// tie-break.
pub fn solve_placement(scene: &Scene, cfg: &PlacementConfig) -> Result<PlacementResult, PlacementError> {
    scene.validate()?;
    cfg.validate().map_err(PlacementError::Config)?;
    let eval = Evaluator::new(scene, cfg);
    let mut viewpoints = vec![scene.robot.position];
    viewpoints.extend(scene.learners.iter().copied());

    let mut surfaces: Vec<&Surface> = scene.surfaces.iter().collect();
    surfaces.sort_by(|a, b| a.id.cmp(&b.id));

    let mut best: Option<(&Surface, Candidate)> = None;
    let mut rejections = Rejections::default();
    let mut samples = 0usize;
    for surface in surfaces {
        let normal = surface.unit_normal();
        let cuts = occlusion_breakpoints(surface, &viewpoints, &scene.obstacles);
        let mut alongs: Vec<f64> = grid_offsets(surface.length(), cfg.grid_step_m).collect();
        alongs.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        alongs.sort_by(f64::total_cmp);
        alongs.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        let heights: Vec<f64> = grid_offsets(surface.height_max - surface.height_min, cfg.grid_step_m)
            .map(|dh| surface.height_min + dh)
            .collect();

        // Best sample per stretch between breakpoints.
        let mut seeds: Vec<Option<Candidate>> = vec![None; cuts.len()];
        for &along in &alongs {
            let stretch = cuts.partition_point(|&c| c <= along).saturating_sub(1);
            for &height in &heights {
                samples += 1;
                match eval.candidate(surface, normal, along, height) {
                    Err(Reject::ProjectorOccluded) => rejections.projector_occluded += 1,
                    Err(Reject::LearnerOccluded) => rejections.learner_occluded += 1,
                    Err(Reject::Incidence) => rejections.incidence += 1,
                    Err(Reject::Gimbal) => rejections.gimbal_limits += 1,
                    Ok(c) => {
                        let seed = &mut seeds[stretch];
                        if seed.as_ref().is_none_or(|s| c.score.total > s.score.total + TIE_EPS) {
                            *seed = Some(c);
                        }
                    }
                }
            }
        }
        for seed in seeds.into_iter().flatten() {
            let c = eval.refine(surface, normal, seed);
            if best.as_ref().is_none_or(|(_, b)| c.score.total > b.score.total + TIE_EPS) {
                best = Some((surface, c));
            }
        }
    }
    let (surface, c) = best.ok_or(PlacementError::NoFeasiblePlacement { samples, rejections })?;
    Ok(PlacementResult {
        surface_id: surface.id.clone(),
        target: SurfacePoint {
            along_m: c.along,
            height_m: c.height,
        },
        world: Point3::from_plan(surface.point_at(c.along), c.height),
        pan: c.pan,
        tilt: c.tilt,
        incidence: c.incidence,
        score: c.score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall(id: &str, x0: f64, x1: f64, y: f64) -> Surface {
        Surface {
            id: id.into(),
            start: Point2::new(x0, y),
            end: Point2::new(x1, y),
            height_min: 0.5,
            height_max: 2.0,
            normal: Point2::new(0.0, -1.0),
            device_id: None,
        }
    }

    fn scene() -> Scene {
        // Wall along y = 3, referent just in front of it at x = 1, robot and
        // learners standing further back.
        Scene {
            robot: Pose2 {
                position: Point2::new(1.0, 0.0),
                heading: std::f64::consts::FRAC_PI_2,
            },
            projector_height: 1.4,
            learners: vec![Point2::new(0.2, 0.3), Point2::new(1.8, 0.3)],
            eye_height: 1.6,
            target: Referent {
                device_id: "printer".into(),
                position: Point2::new(1.0, 2.5),
                height: 1.0,
            },
            obstacles: vec![],
            surfaces: vec![wall("w1", -1.0, 3.0, 3.0)],
        }
    }

    #[test]
    fn symmetric_scene_lands_on_referent_projection() {
        let r = solve_placement(&scene(), &PlacementConfig::default()).unwrap();
        assert_eq!(r.surface_id, "w1");
        // Referent projects to along = 2.0 on the wall.
        assert!((r.target.along_m - 2.0).abs() < 1e-9, "{r:?}");
        assert!(r.incidence <= 60f64.to_radians());
        assert!(r.pan.abs() < 1e-9);
    }

    #[test]
    fn fully_blocked_wall_is_infeasible() {
        let mut s = scene();
        s.obstacles.push(Polygon(vec![
            Point2::new(-5.0, 1.5),
            Point2::new(7.0, 1.5),
            Point2::new(7.0, 1.8),
            Point2::new(-5.0, 1.8),
        ]));
        match solve_placement(&s, &PlacementConfig::default()) {
            Err(PlacementError::NoFeasiblePlacement { samples, rejections }) => {
                assert_eq!(rejections.projector_occluded, samples);
                assert!(samples >= 41 * 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mirror_tie_prefers_lower_surface_id() {
        // Two walls mirrored about the robot's axis; referent and learners are
        // symmetric too, so the best points score identically.
        let mut s = scene();
        s.robot.position = Point2::new(0.0, 0.0);
        s.target.position = Point2::new(0.0, 0.0);
        s.learners = vec![Point2::new(0.0, 1.0), Point2::new(0.0, -1.0)];
        let left = Surface {
            id: "b-left".into(),
            start: Point2::new(-2.0, -1.0),
            end: Point2::new(-2.0, 1.0),
            height_min: 0.5,
            height_max: 2.0,
            normal: Point2::new(1.0, 0.0),
            device_id: None,
        };
        let right = Surface {
            id: "a-right".into(),
            start: Point2::new(2.0, 1.0),
            end: Point2::new(2.0, -1.0),
            normal: Point2::new(-1.0, 0.0),
            ..left.clone()
        };
        s.surfaces = vec![left, right];
        let r = solve_placement(&s, &PlacementConfig::default()).unwrap();
        assert_eq!(r.surface_id, "a-right");
        assert!((r.target.along_m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scene_validation() {
        let mut s = scene();
        s.learners.clear();
        assert_eq!(s.validate(), Err(SceneError::NoLearners));
        let mut s = scene();
        s.surfaces.clear();
        assert_eq!(s.validate(), Err(SceneError::NoSurfaces));
        let mut s = scene();
        s.eye_height = 0.0;
        assert_eq!(s.validate(), Err(SceneError::NonPositiveHeight("eye_height")));
    }

    #[test]
    fn learners_behind_the_wall_reject_everything() {
        let mut s = scene();
        s.learners = vec![Point2::new(1.0, 4.0)];
        match solve_placement(&s, &PlacementConfig::default()) {
            Err(PlacementError::NoFeasiblePlacement { samples, rejections }) => {
                assert_eq!(rejections.learner_occluded, samples);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tight_pan_limits_are_enforced() {
        let mut cfg = PlacementConfig::default();
        // Target is straight ahead (pan 0); forbid everything within 10 deg.
        cfg.pan_limits_deg = [20.0, 180.0];
        let r = solve_placement(&scene(), &cfg).unwrap();
        assert!(r.pan >= 20f64.to_radians() - 1e-12);
    }

    #[test]
    fn grid_includes_both_ends() {
        let g: Vec<f64> = grid_offsets(0.3, 0.1).collect();
        assert_eq!(g.len(), 4);
        let g: Vec<f64> = grid_offsets(0.25, 0.1).collect();
        assert_eq!(g, vec![0.0, 0.1, 0.2, 0.25]);
    }
}
