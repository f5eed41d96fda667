use super::{DeviceInfo, GestureUnit, LearningPoint, PlacementSpec, VisualAsset};
use crate::placement::Surface;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

pub const MANIFEST_SCHEMA_VERSION: &str = "1.0";

pub const DEVICES_FILE: &str = "devices.json";
pub const LEARNING_POINTS_FILE: &str = "learning_points.json";
pub const VISUALS_FILE: &str = "visuals.json";
pub const GESTURES_FILE: &str = "gestures.json";
pub const SURFACES_FILE: &str = "surfaces.json";

/// On-disk shape shared by every collection manifest.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest<T> {
    schema_version: String,
    entries: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MissingManifest,
    Malformed,
    DuplicateId,
    DanglingReference,
    InvalidField,
}

/// A library integrity error, located by manifest file and key path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LibraryIssue {
    pub file: String,
    pub path: String,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for LibraryIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}: {}: {}", self.file, self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LibraryWarning {
    pub file: String,
    pub path: String,
    pub message: String,
}

impl fmt::Display for LibraryWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}: {}: {}", self.file, self.path, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("library directory `{0}` does not exist")]
    NotFound(PathBuf),
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("library has {} integrity error(s)", .0.len())]
    Invalid(Vec<LibraryIssue>),
}

/// Raw collections, before integrity checking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LibraryParts {
    pub devices: Vec<DeviceInfo>,
    pub learning_points: Vec<LearningPoint>,
    pub visuals: Vec<VisualAsset>,
    pub gestures: Vec<GestureUnit>,
    pub surfaces: Vec<Surface>,
}

/// A referentially intact, immutable asset library.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssetLibrary {
    devices: BTreeMap<String, DeviceInfo>,
    learning_points: BTreeMap<String, LearningPoint>,
    visuals: BTreeMap<String, VisualAsset>,
    gestures: BTreeMap<String, GestureUnit>,
    surfaces: BTreeMap<String, Surface>,
}

/// Reads and checks the library manifests in `dir`.
///
/// `devices.json` and `learning_points.json` are required; the visual,
/// gesture and surface manifests may be absent, which is reported as a
/// warning.
pub fn load_library(dir: &Path) -> Result<(AssetLibrary, Vec<LibraryWarning>), LoadError> {
    if !dir.is_dir() {
        return Err(LoadError::NotFound(dir.to_path_buf()));
    }
    let mut issues = Vec::new();
    let mut warnings = Vec::new();

    let devices = read_manifest::<DeviceInfo>(dir, DEVICES_FILE, true, &mut issues, &mut warnings)?;
    let learning_points =
        read_manifest::<LearningPoint>(dir, LEARNING_POINTS_FILE, true, &mut issues, &mut warnings)?;
    let visuals = read_manifest::<VisualAsset>(dir, VISUALS_FILE, false, &mut issues, &mut warnings)?;
    let gestures = read_manifest::<GestureUnit>(dir, GESTURES_FILE, false, &mut issues, &mut warnings)?;
    let surfaces = read_manifest::<Surface>(dir, SURFACES_FILE, false, &mut issues, &mut warnings)?;

    if !issues.is_empty() {
        return Err(LoadError::Invalid(issues));
    }
    let parts = LibraryParts {
        devices: devices.unwrap_or_default(),
        learning_points: learning_points.unwrap_or_default(),
        visuals: visuals.unwrap_or_default(),
        gestures: gestures.unwrap_or_default(),
        surfaces: surfaces.unwrap_or_default(),
    };
    let (library, mut more) = AssetLibrary::build(parts).map_err(LoadError::Invalid)?;
    warnings.append(&mut more);
    Ok((library, warnings))
}

fn read_manifest<T: DeserializeOwned>(
    dir: &Path,
    file: &str,
    required: bool,
    issues: &mut Vec<LibraryIssue>,
    warnings: &mut Vec<LibraryWarning>,
) -> Result<Option<Vec<T>>, LoadError> {
    let path = dir.join(file);
    if !path.exists() {
        if required {
            issues.push(LibraryIssue {
                file: file.to_string(),
                path: String::new(),
                kind: IssueKind::MissingManifest,
                message: "missing manifest".to_string(),
            });
        } else {
            warnings.push(LibraryWarning {
                file: file.to_string(),
                path: String::new(),
                message: "manifest absent; collection is empty".to_string(),
            });
        }
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|source| LoadError::Io {
        path: path.clone(),
        source,
    })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    match serde_path_to_error::deserialize::<_, Manifest<T>>(&mut de) {
        Ok(m) => {
            if !schema_compatible(&m.schema_version) {
                issues.push(LibraryIssue {
                    file: file.to_string(),
                    path: "schema_version".to_string(),
                    kind: IssueKind::InvalidField,
                    message: format!(
                        "unsupported schema version `{}` (expected {})",
                        m.schema_version, MANIFEST_SCHEMA_VERSION
                    ),
                });
                return Ok(None);
            }
            Ok(Some(m.entries))
        }
        Err(e) => {
            issues.push(LibraryIssue {
                file: file.to_string(),
                path: e.path().to_string(),
                kind: IssueKind::Malformed,
                message: e.inner().to_string(),
            });
            Ok(None)
        }
    }
}

fn schema_compatible(v: &str) -> bool {
    v.split('.').next() == MANIFEST_SCHEMA_VERSION.split('.').next()
}

struct Checker {
    issues: Vec<LibraryIssue>,
}

impl Checker {
    fn push(&mut self, file: &str, path: String, kind: IssueKind, message: String) {
        self.issues.push(LibraryIssue {
            file: file.to_string(),
            path,
            kind,
            message,
        });
    }

    fn dangling(&mut self, file: &str, path: String, what: &str, id: &str) {
        self.push(
            file,
            path,
            IssueKind::DanglingReference,
            format!("unknown {what} `{id}`"),
        );
    }

    fn index<T: Clone>(
        &mut self,
        file: &str,
        items: &[T],
        id_of: impl Fn(&T) -> &str,
    ) -> BTreeMap<String, T> {
        let mut map = BTreeMap::new();
        for (i, item) in items.iter().enumerate() {
            let id = id_of(item);
            if id.trim().is_empty() {
                self.push(file, format!("entries[{i}].id"), IssueKind::InvalidField, "empty id".into());
                continue;
            }
            if map.insert(id.to_string(), item.clone()).is_some() {
                self.push(
                    file,
                    format!("entries[{i}].id"),
                    IssueKind::DuplicateId,
                    format!("duplicate id `{id}`"),
                );
            }
        }
        map
    }
}

impl AssetLibrary {
    /// Runs every integrity check over `parts`.
    pub fn build(parts: LibraryParts) -> Result<(Self, Vec<LibraryWarning>), Vec<LibraryIssue>> {
        let mut ck = Checker { issues: Vec::new() };
        let devices = ck.index(DEVICES_FILE, &parts.devices, |d| &d.id);
        let learning_points = ck.index(LEARNING_POINTS_FILE, &parts.learning_points, |l| &l.id);
        let visuals = ck.index(VISUALS_FILE, &parts.visuals, |v| &v.id);
        let gestures = ck.index(GESTURES_FILE, &parts.gestures, |g| &g.id);
        let surfaces = ck.index(SURFACES_FILE, &parts.surfaces, |s| &s.id);

        for (i, d) in parts.devices.iter().enumerate() {
            if !d.pose.is_finite() {
                ck.push(DEVICES_FILE, format!("entries[{i}].pose"), IssueKind::InvalidField, "pose is not finite".into());
            }
            if let Err(e) = d.footprint.validate_convex() {
                ck.push(DEVICES_FILE, format!("entries[{i}].footprint"), IssueKind::InvalidField, e.to_string());
            }
            if d.name.trim().is_empty() {
                ck.push(DEVICES_FILE, format!("entries[{i}].name"), IssueKind::InvalidField, "empty name".into());
            }
        }

        for (i, lp) in parts.learning_points.iter().enumerate() {
            if !devices.contains_key(&lp.device_id) {
                ck.dangling(LEARNING_POINTS_FILE, format!("entries[{i}].device_id"), "device", &lp.device_id);
            }
            if lp.text.trim().is_empty() {
                ck.push(LEARNING_POINTS_FILE, format!("entries[{i}].text"), IssueKind::InvalidField, "empty text".into());
            }
        }

        let mut ranks: BTreeSet<(&str, u32)> = BTreeSet::new();
        for (i, v) in parts.visuals.iter().enumerate() {
            if !learning_points.contains_key(&v.learning_point_id) {
                ck.dangling(VISUALS_FILE, format!("entries[{i}].learning_point_id"), "learning point", &v.learning_point_id);
            }
            match &v.placement {
                PlacementSpec::OnEquipment { device_id, .. } => {
                    if !devices.contains_key(device_id) {
                        ck.dangling(VISUALS_FILE, format!("entries[{i}].placement.device_id"), "device", device_id);
                    }
                }
                PlacementSpec::NearbySurface { surface_id } => {
                    if !surfaces.contains_key(surface_id) {
                        ck.dangling(VISUALS_FILE, format!("entries[{i}].placement.surface_id"), "surface", surface_id);
                    }
                }
            }
            if v.image_ref.trim().is_empty() {
                ck.push(VISUALS_FILE, format!("entries[{i}].image_ref"), IssueKind::InvalidField, "empty image_ref".into());
            }
            if !ranks.insert((v.learning_point_id.as_str(), v.sequence_rank)) {
                ck.push(
                    VISUALS_FILE,
                    format!("entries[{i}].sequence_rank"),
                    IssueKind::InvalidField,
                    format!(
                        "sequence_rank {} already used for learning point `{}`",
                        v.sequence_rank, v.learning_point_id
                    ),
                );
            }
        }

        for (i, g) in parts.gestures.iter().enumerate() {
            if g.duration_ms == 0 {
                ck.push(GESTURES_FILE, format!("entries[{i}].duration_ms"), IssueKind::InvalidField, "duration_ms must be positive".into());
            }
            if !g.robot_pose.is_finite() {
                ck.push(GESTURES_FILE, format!("entries[{i}].robot_pose"), IssueKind::InvalidField, "pose is not finite".into());
            }
            if g.motion_ref.trim().is_empty() {
                ck.push(GESTURES_FILE, format!("entries[{i}].motion_ref"), IssueKind::InvalidField, "empty motion_ref".into());
            }
            let ctx = &g.context;
            let device_ok = devices.contains_key(&ctx.device_id);
            if !device_ok {
                ck.dangling(GESTURES_FILE, format!("entries[{i}].context.device_id"), "device", &ctx.device_id);
            }
            match learning_points.get(&ctx.learning_point_id) {
                None => ck.dangling(
                    GESTURES_FILE,
                    format!("entries[{i}].context.learning_point_id"),
                    "learning point",
                    &ctx.learning_point_id,
                ),
                Some(lp) if device_ok && lp.device_id != ctx.device_id => ck.push(
                    GESTURES_FILE,
                    format!("entries[{i}].context.learning_point_id"),
                    IssueKind::InvalidField,
                    format!(
                        "learning point `{}` belongs to device `{}`, not `{}`",
                        lp.id, lp.device_id, ctx.device_id
                    ),
                ),
                Some(_) => {}
            }
        }

        for (i, s) in parts.surfaces.iter().enumerate() {
            if let Err(msg) = s.check() {
                ck.push(SURFACES_FILE, format!("entries[{i}]"), IssueKind::InvalidField, msg);
            }
            if let Some(d) = &s.device_id {
                if !devices.contains_key(d) {
                    ck.dangling(SURFACES_FILE, format!("entries[{i}].device_id"), "device", d);
                }
            }
        }

        if !ck.issues.is_empty() {
            return Err(ck.issues);
        }

        let lib = AssetLibrary {
            devices,
            learning_points,
            visuals,
            gestures,
            surfaces,
        };
        let warnings = lib.lint();
        Ok((lib, warnings))
    }

    fn lint(&self) -> Vec<LibraryWarning> {
        let mut w = Vec::new();
        let mut empty = |file: &str, n: usize, what: &str| {
            if n == 0 {
                w.push(LibraryWarning {
                    file: file.to_string(),
                    path: String::new(),
                    message: format!("no {what} in library"),
                });
            }
        };
        empty(VISUALS_FILE, self.visuals.len(), "visual assets");
        empty(GESTURES_FILE, self.gestures.len(), "gestural units");
        empty(SURFACES_FILE, self.surfaces.len(), "surfaces");
        for d in self.devices.values() {
            if !self.learning_points.values().any(|lp| lp.device_id == d.id) {
                w.push(LibraryWarning {
                    file: DEVICES_FILE.to_string(),
                    path: d.id.clone(),
                    message: "device has no learning points".to_string(),
                });
            }
        }
        w
    }

    pub fn to_parts(&self) -> LibraryParts {
        LibraryParts {
            devices: self.devices.values().cloned().collect(),
            learning_points: self.learning_points.values().cloned().collect(),
            visuals: self.visuals.values().cloned().collect(),
            gestures: self.gestures.values().cloned().collect(),
            surfaces: self.surfaces.values().cloned().collect(),
        }
    }

    /// Writes the library as manifest files into `dir`.
    pub fn write_manifests(&self, dir: &Path) -> std::io::Result<()> {
        fn put<T: Serialize>(dir: &Path, file: &str, entries: Vec<&T>) -> std::io::Result<()> {
            let m = Manifest {
                schema_version: MANIFEST_SCHEMA_VERSION.to_string(),
                entries,
            };
            let mut text = serde_json::to_string_pretty(&m)?;
            text.push('\n');
            std::fs::write(dir.join(file), text)
        }
        std::fs::create_dir_all(dir)?;
        put(dir, DEVICES_FILE, self.devices.values().collect())?;
        put(dir, LEARNING_POINTS_FILE, self.learning_points.values().collect())?;
        put(dir, VISUALS_FILE, self.visuals.values().collect())?;
        put(dir, GESTURES_FILE, self.gestures.values().collect())?;
        put(dir, SURFACES_FILE, self.surfaces.values().collect())
    }

    pub fn device(&self, id: &str) -> Option<&DeviceInfo> {
        self.devices.get(id)
    }

    pub fn learning_point(&self, id: &str) -> Option<&LearningPoint> {
        self.learning_points.get(id)
    }

    pub fn visual(&self, id: &str) -> Option<&VisualAsset> {
        self.visuals.get(id)
    }

    pub fn gesture(&self, id: &str) -> Option<&GestureUnit> {
        self.gestures.get(id)
    }

    pub fn surface(&self, id: &str) -> Option<&Surface> {
        self.surfaces.get(id)
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceInfo> {
        self.devices.values()
    }

    pub fn learning_points(&self) -> impl Iterator<Item = &LearningPoint> {
        self.learning_points.values()
    }

    pub fn visuals(&self) -> impl Iterator<Item = &VisualAsset> {
        self.visuals.values()
    }

    pub fn gestures(&self) -> impl Iterator<Item = &GestureUnit> {
        self.gestures.values()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &Surface> {
        self.surfaces.values()
    }

    /// Learning points of one device, ordered by category then id.
    pub fn learning_points_of(&self, device_id: &str) -> Vec<&LearningPoint> {
        let mut v: Vec<_> = self
            .learning_points
            .values()
            .filter(|lp| lp.device_id == device_id)
            .collect();
        v.sort_by(|a, b| a.category.cmp(&b.category).then_with(|| a.id.cmp(&b.id)));
        v
    }
}
