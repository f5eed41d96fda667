//! Domain types for the teaching-asset library: devices, learning points,
//! visual assets, gestural units and projection surfaces.

mod library;
mod query;

pub use library::{
    load_library, AssetLibrary, IssueKind, LibraryIssue, LibraryParts, LibraryWarning, LoadError,
    DEVICES_FILE, GESTURES_FILE, LEARNING_POINTS_FILE, MANIFEST_SCHEMA_VERSION, SURFACES_FILE,
    VISUALS_FILE,
};
pub use query::QueryError;

use crate::geometry::{Polygon, Pose2};
use serde::{Deserialize, Serialize};

/// The three kinds of teaching content a learning point can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    HowItWorks,
    Operation,
    Safety,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningPoint {
    pub id: String,
    pub device_id: String,
    pub category: Category,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceInfo {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub pose: Pose2,
    /// Convex footprint in the map frame.
    pub footprint: Polygon,
}

/// Where a visual asset is meant to be projected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementSpec {
    OnEquipment { device_id: String, region: String },
    NearbySurface { surface_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualAsset {
    pub id: String,
    pub image_ref: String,
    #[serde(default)]
    pub description: String,
    pub learning_point_id: String,
    pub placement: PlacementSpec,
    /// Display order among the images of one learning point, ascending.
    #[serde(default = "default_rank")]
    pub sequence_rank: u32,
}

fn default_rank() -> u32 {
    1
}

/// Gesture taxonomy. Variant order is the composer's selection priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    Deictic,
    Iconic,
    Metaphoric,
    Beat,
}

impl GestureKind {
    pub const ALL: [GestureKind; 4] = [
        GestureKind::Deictic,
        GestureKind::Iconic,
        GestureKind::Metaphoric,
        GestureKind::Beat,
    ];

    /// Lower is preferred.
    pub fn priority(self) -> u8 {
        self as u8
    }
}

/// Which device and learning point a gestural unit was recorded for, and
/// the narration it originally accompanied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureContext {
    pub device_id: String,
    pub learning_point_id: String,
    #[serde(default)]
    pub narration: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureUnit {
    pub id: String,
    pub kind: GestureKind,
    /// Opaque reference to the recorded actuation sequence.
    pub motion_ref: String,
    pub duration_ms: u64,
    /// Robot pose the recording assumes at playback.
    pub robot_pose: Pose2,
    #[serde(default)]
    pub description: String,
    pub context: GestureContext,
}

/// Ordered device list for one tour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourPlan {
    #[serde(default = "default_tour_id")]
    pub id: String,
    pub devices: Vec<String>,
    /// Preferred narration variant, if one has been picked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

fn default_tour_id() -> String {
    "tour".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TourError {
    #[error("tour has no devices")]
    Empty,
    #[error("tour lists unknown device `{0}`")]
    UnknownDevice(String),
    #[error("tour lists device `{0}` more than once")]
    Duplicate(String),
}

impl TourPlan {
    pub fn validate(&self, library: &AssetLibrary) -> Result<(), TourError> {
        if self.devices.is_empty() {
            return Err(TourError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.devices {
            if library.device(d).is_none() {
                return Err(TourError::UnknownDevice(d.clone()));
            }
            if !seen.insert(d.as_str()) {
                return Err(TourError::Duplicate(d.clone()));
            }
        }
        Ok(())
    }
}
