//! The full compile pipeline: generate, segment, synthesize, compose, align,
//! place and validate, for every narration variant.

use crate::asset::{AssetLibrary, PlacementSpec, TourPlan};
use crate::compose::{compose, ComposerClient};
use crate::config::Config;
use crate::placement::{solve_placement, PlacementError, Scene, Surface};
use crate::script::{
    generate_script, segment_script, synthesize, AnnotatedScript, GenerationRequest, RejectedVariant,
    SpeechClient, TextGenClient,
};
use crate::timeline::{align, validate_timeline, AlignWarning, CoverageWarning, Timeline, ValidationReport};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Tour,
    Generate,
    Variant,
    Segment,
    Synthesize,
    Compose,
    Align,
    Placement,
    Validate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Tour => "tour",
            Stage::Generate => "generate",
            Stage::Variant => "variant",
            Stage::Segment => "segment",
            Stage::Synthesize => "synthesize",
            Stage::Compose => "compose",
            Stage::Align => "align",
            Stage::Placement => "placement",
            Stage::Validate => "validate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct CompileError {
    pub stage: Stage,
    pub variant: Option<String>,
    pub message: String,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            Some(v) => write!(f, "[{}] variant {v}: {}", self.stage, self.message),
            None => write!(f, "[{}] {}", self.stage, self.message),
        }
    }
}

fn fail(stage: Stage, variant: Option<&str>, message: impl fmt::Display) -> CompileError {
    CompileError {
        stage,
        variant: variant.map(str::to_string),
        message: message.to_string(),
    }
}

pub struct Clients<'a> {
    pub text_gen: &'a dyn TextGenClient,
    pub speech: &'a dyn SpeechClient,
    pub composer: Option<&'a dyn ComposerClient>,
}

pub struct CompileInput<'a> {
    pub library: &'a AssetLibrary,
    pub tour: &'a TourPlan,
    pub config: &'a Config,
    /// Scenes keyed by device id; visuals of other devices are not placed.
    pub scenes: &'a BTreeMap<String, Scene>,
    /// Variant to select, overriding the tour's preference.
    pub variant: Option<&'a str>,
    /// Output of an earlier compile, used to notice removed assets.
    pub previous: Option<&'a Timeline>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementNote {
    pub event_id: String,
    pub asset_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationWarning {
    pub device_id: String,
    pub duration_ms: u64,
    pub target_ms: [u64; 2],
}

impl fmt::Display for DurationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "device `{}` runs {:.1} min, outside the {:.1}-{:.1} min target",
            self.device_id,
            self.duration_ms as f64 / 60_000.0,
            self.target_ms[0] as f64 / 60_000.0,
            self.target_ms[1] as f64 / 60_000.0
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledVariant {
    pub label: String,
    pub script: AnnotatedScript,
    pub timeline: Timeline,
    pub align_warnings: Vec<AlignWarning>,
    pub placement_notes: Vec<PlacementNote>,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compilation {
    pub variants: Vec<CompiledVariant>,
    /// Index into `variants`.
    pub selected: usize,
    pub rejected: Vec<RejectedVariant>,
    /// Coverage findings for the selected variant.
    pub coverage: Vec<CoverageWarning>,
    pub duration_warnings: Vec<DurationWarning>,
}

impl Compilation {
    pub fn selected(&self) -> &CompiledVariant {
        &self.variants[self.selected]
    }

    pub fn variant(&self, label: &str) -> Option<&CompiledVariant> {
        self.variants.iter().find(|v| v.label == label)
    }

    pub fn summary(&self) -> CompileSummary {
        let sel = self.selected();
        CompileSummary {
            tour_id: sel.timeline.header.tour_id.clone(),
            variant: sel.label.clone(),
            variants: self.variants.iter().map(|v| v.label.clone()).collect(),
            total_ms: sel.timeline.end_ms(),
            devices: sel
                .timeline
                .device_durations()
                .into_iter()
                .map(|(device_id, duration_ms)| DeviceDuration { device_id, duration_ms })
                .collect(),
            segments: sel.timeline.speech.len(),
            events: sel.timeline.event_count(),
            coverage: self.coverage.clone(),
            align_warnings: sel.align_warnings.iter().map(ToString::to_string).collect(),
            placement_notes: sel.placement_notes.clone(),
            duration_warnings: self.duration_warnings.iter().map(ToString::to_string).collect(),
            rejected_variants: self.rejected.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceDuration {
    pub device_id: String,
    pub duration_ms: u64,
}

/// Machine-readable account of one compile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompileSummary {
    pub tour_id: String,
    pub variant: String,
    pub variants: Vec<String>,
    pub total_ms: u64,
    pub devices: Vec<DeviceDuration>,
    pub segments: usize,
    pub events: usize,
    pub coverage: Vec<CoverageWarning>,
    pub align_warnings: Vec<String>,
    pub placement_notes: Vec<PlacementNote>,
    pub duration_warnings: Vec<String>,
    pub rejected_variants: Vec<RejectedVariant>,
}

pub fn compile(input: &CompileInput<'_>, clients: &Clients<'_>) -> Result<Compilation, CompileError> {
    let cfg = input.config;
    let lib = input.library;
    input.tour.validate(lib).map_err(|e| fail(Stage::Tour, None, e))?;
    let request = GenerationRequest::new(input.tour, lib, cfg.script.directives.clone());
    let generated = generate_script(&request, lib, clients.text_gen, cfg.script.variants, &cfg.script.splitter)
        .map_err(|e| fail(Stage::Generate, None, e))?;

    let mut variants = Vec::with_capacity(generated.scripts.len());
    for script in generated.scripts {
        variants.push(compile_variant(input, clients, script)?);
    }

    let wanted = input.variant.or(input.tour.variant.as_deref());
    let selected = match wanted {
        Some(label) => variants
            .iter()
            .position(|v| v.label == label)
            .ok_or_else(|| fail(Stage::Variant, None, format!("no valid variant labelled `{label}`")))?,
        None => 0,
    };

    let sel = &variants[selected];
    let coverage = coverage_warnings(lib, &sel.timeline, &sel.report, input.previous);
    let [lo, hi] = cfg.script.directives.target_minutes_per_device;
    let target_ms = [(lo * 60_000.0).round() as u64, (hi * 60_000.0).round() as u64];
    let duration_warnings = sel
        .timeline
        .device_durations()
        .into_iter()
        .filter(|(_, d)| *d < target_ms[0] || *d > target_ms[1])
        .map(|(device_id, duration_ms)| DurationWarning {
            device_id,
            duration_ms,
            target_ms,
        })
        .collect();

    Ok(Compilation {
        variants,
        selected,
        rejected: generated.rejected,
        coverage,
        duration_warnings,
    })
}

fn compile_variant(
    input: &CompileInput<'_>,
    clients: &Clients<'_>,
    script: AnnotatedScript,
) -> Result<CompiledVariant, CompileError> {
    let cfg = input.config;
    let label = script.label.clone();
    let v = Some(label.as_str());
    let segments = segment_script(&script, &cfg.script.splitter).map_err(|e| fail(Stage::Segment, v, e))?;
    let segments = synthesize(&segments, clients.speech).map_err(|e| fail(Stage::Synthesize, v, e))?;
    let selections = segments
        .iter()
        .map(|s| compose(s, input.library, &cfg.compose, clients.composer))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| fail(Stage::Compose, v, e))?;
    let aligned = align(
        &input.tour.id,
        v,
        &segments,
        &selections,
        &cfg.script.splitter,
        &cfg.align,
    )
    .map_err(|e| fail(Stage::Align, v, e))?;
    let mut timeline = aligned.timeline;
    let placement_notes = place_visuals(&mut timeline, input).map_err(|e| fail(Stage::Placement, v, e))?;
    let report = validate_timeline(&timeline);
    if !report.is_clean() {
        let msg = report.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(fail(Stage::Validate, v, msg));
    }
    Ok(CompiledVariant {
        label,
        script,
        timeline,
        align_warnings: aligned.warnings,
        placement_notes,
        report,
    })
}

fn surface_matches(spec: &PlacementSpec, s: &Surface) -> bool {
    match spec {
        PlacementSpec::NearbySurface { surface_id } => &s.id == surface_id,
        PlacementSpec::OnEquipment { device_id, .. } => s.device_id.as_deref() == Some(device_id.as_str()),
    }
}

/// Solves a projection target for every visual whose device has a scene.
/// Infeasible placements are left empty with a note; the caller decides on
/// a fallback such as the robot's own screen.
fn place_visuals(timeline: &mut Timeline, input: &CompileInput<'_>) -> Result<Vec<PlacementNote>, String> {
    let device_of: BTreeMap<String, String> = timeline
        .speech
        .iter()
        .map(|s| (s.segment_id.clone(), s.device_id.clone()))
        .collect();
    let mut cache: BTreeMap<(String, String), Result<crate::placement::PlacementResult, String>> = BTreeMap::new();
    let mut notes = Vec::new();
    for ev in &mut timeline.visuals {
        let Some(device) = device_of.get(&ev.segment_id) else { continue };
        let Some(scene) = input.scenes.get(device) else { continue };
        let Some(asset) = input.library.visual(&ev.asset_id) else { continue };
        let key = (device.clone(), ev.asset_id.clone());
        if !cache.contains_key(&key) {
            let mut scene = scene.clone();
            if scene.surfaces.is_empty() {
                scene.surfaces = input.library.surfaces().cloned().collect();
            }
            let scene = scene.with_surfaces(|s| surface_matches(&asset.placement, s));
            let outcome = if scene.surfaces.is_empty() {
                Err("no candidate surface matches the asset's placement".to_string())
            } else {
                match solve_placement(&scene, &input.config.placement) {
                    Ok(r) => Ok(r),
                    Err(e @ PlacementError::NoFeasiblePlacement { .. }) => Err(e.to_string()),
                    Err(e) => return Err(format!("scene for `{device}`: {e}")),
                }
            };
            cache.insert(key.clone(), outcome);
        }
        match &cache[&key] {
            Ok(r) => ev.placement = Some(r.clone()),
            Err(msg) => notes.push(PlacementNote {
                event_id: ev.id.clone(),
                asset_id: ev.asset_id.clone(),
                message: msg.clone(),
            }),
        }
    }
    Ok(notes)
}

/// Coverage findings: learning points whose assets were not scheduled, that
/// are narrated with no visual at all, whose visual ranks have a gap, or
/// that lost an asset since the previous compile.
pub fn coverage_warnings(
    library: &AssetLibrary,
    timeline: &Timeline,
    report: &ValidationReport,
    previous: Option<&Timeline>,
) -> Vec<CoverageWarning> {
    let mut out: BTreeSet<CoverageWarning> = report.warnings.iter().cloned().collect();
    let narrated: BTreeSet<&str> = timeline
        .speech
        .iter()
        .filter_map(|s| s.learning_point_id.as_deref())
        .collect();
    for lp in &narrated {
        let Ok(visuals) = library.query_visuals(lp) else { continue };
        if visuals.is_empty() {
            out.insert(CoverageWarning::NoVisual {
                learning_point_id: lp.to_string(),
            });
            continue;
        }
        let ranks: Vec<u32> = visuals.iter().map(|v| v.sequence_rank).collect();
        if ranks.iter().enumerate().any(|(i, &r)| r != i as u32 + 1) {
            out.insert(CoverageWarning::RankGap {
                learning_point_id: lp.to_string(),
                ranks,
            });
        }
    }
    if let Some(prev) = previous {
        for ev in &prev.visuals {
            if library.visual(&ev.asset_id).is_none() {
                out.insert(CoverageWarning::AssetRemoved {
                    learning_point_id: ev.learning_point_id.clone(),
                    asset_id: ev.asset_id.clone(),
                });
            }
        }
    }
    out.into_iter().collect()
}
