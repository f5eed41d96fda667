//! Picks the visuals and gestures that accompany each speech segment.

use crate::asset::{AssetLibrary, GestureUnit, LearningPoint, QueryError, VisualAsset};
use crate::script::{ClientError, SpeechSegment};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub segment_id: String,
    pub learning_point_id: Option<String>,
    /// In display order.
    pub visuals: Vec<VisualAsset>,
    /// Played back-to-back in this order.
    pub gestures: Vec<GestureUnit>,
    pub rationale: String,
    /// How many library assets were linked to the learning point, chosen or not.
    pub library_matches: usize,
}

impl Selection {
    pub fn empty(segment_id: &str) -> Self {
        Self {
            segment_id: segment_id.to_string(),
            learning_point_id: None,
            visuals: Vec::new(),
            gestures: Vec::new(),
            rationale: "no learning point".to_string(),
            library_matches: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.visuals.is_empty() && self.gestures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeConfig {
    pub max_gestures_per_segment: usize,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            max_gestures_per_segment: 1,
        }
    }
}

/// An external composer's answer, by asset id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposal {
    pub visual_ids: Vec<String>,
    pub gesture_ids: Vec<String>,
    #[serde(default)]
    pub rationale: String,
}

/// Chooses assets for a segment from the candidates linked to its learning
/// point. Its output is re-checked before use.
pub trait ComposerClient: Send + Sync {
    fn propose(
        &self,
        segment: &SpeechSegment,
        learning_point: &LearningPoint,
        visuals: &[&VisualAsset],
        gestures: &[&GestureUnit],
    ) -> Result<Proposal, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComposeError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("composer failed on segment `{segment}`: {source}")]
    Client {
        segment: String,
        #[source]
        source: ClientError,
    },
    #[error("segment `{segment}`: {kind} `{asset}` is not linked to learning point `{learning_point}`")]
    Unlinked {
        segment: String,
        kind: &'static str,
        asset: String,
        learning_point: String,
    },
    #[error("segment `{segment}`: {kind} `{asset}` selected twice")]
    Duplicate {
        segment: String,
        kind: &'static str,
        asset: String,
    },
}

/// Builds the selection for one segment.
///
/// Without a client, all linked visuals are shown in rank order and up to
/// `max_gestures_per_segment` gestures are picked by kind priority
/// (deictic, iconic, metaphoric, beat), then by id.
pub fn compose(
    segment: &SpeechSegment,
    library: &AssetLibrary,
    cfg: &ComposeConfig,
    client: Option<&dyn ComposerClient>,
) -> Result<Selection, ComposeError> {
    let Some(lp_id) = segment.learning_point_id.as_deref() else {
        return Ok(Selection::empty(&segment.id));
    };
    let lp = library
        .learning_point(lp_id)
        .ok_or_else(|| QueryError::UnknownLearningPoint(lp_id.to_string()))?;
    let visuals = library.query_visuals(lp_id)?;
    let gestures = library.query_gestures(lp_id, &segment.device_id)?;
    let library_matches = visuals.len() + gestures.len();

    let (chosen_visuals, chosen_gestures, rationale) = match client {
        None => {
            let mut ranked = gestures.clone();
            ranked.sort_by(|a, b| a.kind.priority().cmp(&b.kind.priority()).then_with(|| a.id.cmp(&b.id)));
            ranked.truncate(cfg.max_gestures_per_segment);
            let vis: Vec<VisualAsset> = visuals.iter().map(|v| (*v).clone()).collect();
            let ges: Vec<GestureUnit> = ranked.into_iter().cloned().collect();
            let rationale = rule_rationale(lp_id, &vis, &ges);
            (vis, ges, rationale)
        }
        Some(client) => {
            let p = client
                .propose(segment, lp, &visuals, &gestures)
                .map_err(|source| ComposeError::Client {
                    segment: segment.id.clone(),
                    source,
                })?;
            let vis = resolve(&segment.id, lp_id, "visual", &p.visual_ids, &visuals, |v| &v.id)?;
            let ges = resolve(&segment.id, lp_id, "gesture", &p.gesture_ids, &gestures, |g| &g.id)?;
            (vis, ges, p.rationale)
        }
    };

    Ok(Selection {
        segment_id: segment.id.clone(),
        learning_point_id: Some(lp_id.to_string()),
        visuals: chosen_visuals,
        gestures: chosen_gestures,
        rationale,
        library_matches,
    })
}

fn resolve<T: Clone>(
    segment: &str,
    lp: &str,
    kind: &'static str,
    ids: &[String],
    linked: &[&T],
    id_of: impl Fn(&T) -> &String,
) -> Result<Vec<T>, ComposeError> {
    let mut seen = BTreeSet::new();
    ids.iter()
        .map(|id| {
            if !seen.insert(id.as_str()) {
                return Err(ComposeError::Duplicate {
                    segment: segment.to_string(),
                    kind,
                    asset: id.clone(),
                });
            }
            linked
                .iter()
                .find(|a| id_of(a) == id)
                .map(|a| (*a).clone())
                .ok_or_else(|| ComposeError::Unlinked {
                    segment: segment.to_string(),
                    kind,
                    asset: id.clone(),
                    learning_point: lp.to_string(),
                })
        })
        .collect()
}

fn rule_rationale(lp: &str, visuals: &[VisualAsset], gestures: &[GestureUnit]) -> String {
    if visuals.is_empty() && gestures.is_empty() {
        return format!("{lp}: no linked assets; narration only");
    }
    let mut parts = Vec::new();
    if !visuals.is_empty() {
        parts.push(format!("{} visual(s) in rank order", visuals.len()));
    }
    for g in gestures {
        parts.push(format!("{:?} gesture {}", g.kind, g.id).to_lowercase());
    }
    format!("{lp}: {}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::*;
    use crate::geometry::{Point2, Polygon, Pose2};

    fn pose() -> Pose2 {
        Pose2 {
            position: Point2::new(0.0, 0.0),
            heading: 0.0,
        }
    }

    fn gesture(id: &str, kind: GestureKind, dev: &str) -> GestureUnit {
        GestureUnit {
            id: id.into(),
            kind,
            motion_ref: format!("{id}.bag"),
            duration_ms: 1500,
            robot_pose: pose(),
            description: String::new(),
            context: GestureContext {
                device_id: dev.into(),
                learning_point_id: "lp".into(),
                narration: String::new(),
            },
        }
    }

    fn visual(id: &str, lp: &str, rank: u32) -> VisualAsset {
        VisualAsset {
            id: id.into(),
            image_ref: format!("{id}.png"),
            description: String::new(),
            learning_point_id: lp.into(),
            placement: PlacementSpec::OnEquipment {
                device_id: "d".into(),
                region: "front".into(),
            },
            sequence_rank: rank,
        }
    }

    fn library() -> AssetLibrary {
        let device = |id: &str| DeviceInfo {
            id: id.into(),
            name: id.into(),
            description: String::new(),
            pose: pose(),
            footprint: Polygon(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]),
        };
        let lp = |id: &str| LearningPoint {
            id: id.into(),
            device_id: "d".into(),
            category: Category::Safety,
            text: "Careful.".into(),
        };
        AssetLibrary::build(LibraryParts {
            devices: vec![device("d")],
            learning_points: vec![lp("lp"), lp("other")],
            visuals: vec![visual("v2", "lp", 2), visual("v1", "lp", 1), visual("vo", "other", 1)],
            gestures: vec![gesture("g2", GestureKind::Iconic, "d"), gesture("g1", GestureKind::Deictic, "d")],
            surfaces: vec![],
        })
        .unwrap()
        .0
    }

    fn segment(lp: Option<&str>) -> SpeechSegment {
        SpeechSegment {
            id: "d-000".into(),
            device_id: "d".into(),
            order_index: 0,
            text: "Careful.".into(),
            learning_point_id: lp.map(str::to_string),
            audio: None,
        }
    }

    #[test]
    fn segment_without_learning_point_gets_nothing() {
        let s = compose(&segment(None), &library(), &ComposeConfig::default(), None).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.library_matches, 0);
    }

    #[test]
    fn rule_composer_priority() {
        // Visuals ranks {1,2}; gestures iconic g2 and deictic g1; max 1 gesture.
        let s = compose(&segment(Some("lp")), &library(), &ComposeConfig::default(), None).unwrap();
        let v: Vec<_> = s.visuals.iter().map(|v| v.id.as_str()).collect();
        let g: Vec<_> = s.gestures.iter().map(|g| g.id.as_str()).collect();
        assert_eq!(v, vec!["v1", "v2"]);
        assert_eq!(g, vec!["g1"]);
        assert_eq!(s.library_matches, 4);
    }

    #[test]
    fn more_gestures_when_allowed() {
        let cfg = ComposeConfig {
            max_gestures_per_segment: 5,
        };
        let s = compose(&segment(Some("lp")), &library(), &cfg, None).unwrap();
        let g: Vec<_> = s.gestures.iter().map(|g| g.id.as_str()).collect();
        assert_eq!(g, vec!["g1", "g2"]);
    }

    struct Fixed(Proposal);
    impl ComposerClient for Fixed {
        fn propose(
            &self,
            _: &SpeechSegment,
            _: &LearningPoint,
            _: &[&VisualAsset],
            _: &[&GestureUnit],
        ) -> Result<Proposal, ClientError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn client_proposing_unlinked_visual_is_rejected() {
        let client = Fixed(Proposal {
            visual_ids: vec!["vo".into()],
            gesture_ids: vec![],
            rationale: String::new(),
        });
        let err = compose(&segment(Some("lp")), &library(), &ComposeConfig::default(), Some(&client)).unwrap_err();
        assert!(matches!(err, ComposeError::Unlinked { ref asset, .. } if asset == "vo"));
    }

    #[test]
    fn client_selection_is_kept_in_its_order() {
        let client = Fixed(Proposal {
            visual_ids: vec!["v2".into()],
            gesture_ids: vec!["g2".into(), "g1".into()],
            rationale: "why not".into(),
        });
        let s = compose(&segment(Some("lp")), &library(), &ComposeConfig::default(), Some(&client)).unwrap();
        assert_eq!(s.visuals.len(), 1);
        assert_eq!(s.gestures[0].id, "g2");
        assert_eq!(s.rationale, "why not");
    }

    #[test]
    fn duplicate_pick_rejected() {
        let client = Fixed(Proposal {
            visual_ids: vec!["v1".into(), "v1".into()],
            gesture_ids: vec![],
            rationale: String::new(),
        });
        let err = compose(&segment(Some("lp")), &library(), &ComposeConfig::default(), Some(&client)).unwrap_err();
        assert!(matches!(err, ComposeError::Duplicate { .. }));
    }
}
