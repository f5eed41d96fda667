//! The work behind each subcommand, independent of argument parsing.

use crate::clients::build_clients;
use choreo_core::asset::{load_library, AssetLibrary, LibraryIssue, LibraryWarning, LoadError, TourPlan};
use choreo_core::compile::{compile, Clients, Compilation, CompileInput};
use choreo_core::config::Config;
use choreo_core::placement::{solve_placement, PlacementError, PlacementResult, Scene};
use choreo_core::sim::{simulate, verify_trace, write_trace, ExecutionTrace, SimConfig, SimError, TraceReport};
use choreo_core::timeline::{emit, parse, Timeline, ValidationReport};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// Exit status: the inputs were read but failed a check.
pub const EXIT_FAILED: i32 = 1;
/// Exit status: an input could not be found or read.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILED,
            message: message.into(),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{what} {}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p).map_err(|e| CliError::input(e.to_string())),
        None => Ok(Config::default()),
    }
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub ok: bool,
    pub library: String,
    pub errors: Vec<LibraryIssue>,
    pub warnings: Vec<LibraryWarning>,
}

/// Checks a library directory. Exit 0 when it has no errors (warnings are
/// allowed), 1 when it has errors, 2 when it does not exist.
pub fn cmd_validate(dir: &Path) -> (i32, ValidateReport) {
    let library = dir.display().to_string();
    match load_library(dir) {
        Ok((_, warnings)) => (
            EXIT_OK,
            ValidateReport {
                ok: true,
                library,
                errors: vec![],
                warnings,
            },
        ),
        Err(LoadError::Invalid(errors)) => (
            EXIT_FAILED,
            ValidateReport {
                ok: false,
                library,
                errors,
                warnings: vec![],
            },
        ),
        Err(e) => {
            let code = if matches!(e, LoadError::NotFound(_)) { EXIT_INPUT } else { EXIT_FAILED };
            (
                code,
                ValidateReport {
                    ok: false,
                    library,
                    errors: vec![LibraryIssue {
                        file: String::new(),
                        path: String::new(),
                        kind: choreo_core::asset::IssueKind::MissingManifest,
                        message: e.to_string(),
                    }],
                    warnings: vec![],
                },
            )
        }
    }
}

/// Everything the compiler reads from disk.
pub struct Inputs {
    pub library: AssetLibrary,
    pub library_warnings: Vec<LibraryWarning>,
    pub tour: TourPlan,
    pub config: Config,
    pub scenes: BTreeMap<String, Scene>,
}

pub struct InputPaths<'a> {
    pub library: &'a Path,
    pub tour: &'a Path,
    pub config: Option<&'a Path>,
    /// Directory of `<device_id>.json` scene files.
    pub scenes: Option<&'a Path>,
}

pub fn load_inputs(paths: &InputPaths<'_>) -> Result<Inputs, CliError> {
    let (library, library_warnings) = load_library(paths.library).map_err(|e| match e {
        LoadError::Invalid(issues) => CliError::failed(format!(
            "[library] {}",
            issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        )),
        other => CliError::input(format!("[library] {other}")),
    })?;
    let tour: TourPlan = read_json(paths.tour, "tour")?;
    let config = load_config(paths.config)?;
    let scenes = match paths.scenes {
        Some(dir) => load_scenes(dir)?,
        None => BTreeMap::new(),
    };
    Ok(Inputs {
        library,
        library_warnings,
        tour,
        config,
        scenes,
    })
}

fn load_scenes(dir: &Path) -> Result<BTreeMap<String, Scene>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::input(format!("scenes {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for p in paths {
        let scene: Scene = read_json(&p, "scene")?;
        let key = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.insert(key, scene);
    }
    Ok(out)
}

/// Runs the pipeline with the configured clients.
pub fn run_compile(inputs: &Inputs, variant: Option<&str>, previous: Option<&Timeline>) -> Result<Compilation, CliError> {
    let clients = build_clients(&inputs.config);
    let input = CompileInput {
        library: &inputs.library,
        tour: &inputs.tour,
        config: &inputs.config,
        scenes: &inputs.scenes,
        variant,
        previous,
    };
    compile(
        &input,
        &Clients {
            text_gen: clients.text_gen.as_ref(),
            speech: clients.speech.as_ref(),
            composer: None,
        },
    )
    .map_err(|e| CliError::failed(e.to_string()))
}

/// Compiles and writes the selected variant's three timeline files to
/// `out_dir`. A timeline already in `out_dir` is read first so assets that
/// have since left the library are reported.
pub fn cmd_compile(paths: &InputPaths<'_>, out_dir: &Path, variant: Option<&str>) -> Result<Compilation, CliError> {
    let inputs = load_inputs(paths)?;
    let previous = parse(out_dir).ok();
    let compilation = run_compile(&inputs, variant, previous.as_ref())?;
    emit(&compilation.selected().timeline, out_dir).map_err(|e| CliError::input(format!("[emit] {e}")))?;
    Ok(compilation)
}

#[derive(Debug, Serialize)]
pub struct SimulateOutcome {
    pub trace: ExecutionTrace,
    pub report: TraceReport,
}

#[derive(Debug, Serialize)]
pub struct InvalidTimeline<'a> {
    pub error: &'static str,
    pub report: &'a ValidationReport,
}

/// Replays a compiled timeline and verifies the trace against it.
pub fn cmd_simulate(timeline_dir: &Path, sim: &SimConfig, trace_out: Option<&Path>) -> Result<SimulateOutcome, CliError> {
    let timeline = parse(timeline_dir).map_err(|e| CliError::input(e.to_string()))?;
    let trace = simulate(&timeline, sim).map_err(|e| match e {
        SimError::InvalidTimeline(report) => CliError::failed(
            serde_json::to_string_pretty(&InvalidTimeline {
                error: "timeline failed validation",
                report: &report,
            })
            .expect("report serializes"),
        ),
    })?;
    let report = verify_trace(&trace, &timeline, sim.epsilon_ms).map_err(|e| CliError::failed(e.to_string()))?;
    if let Some(path) = trace_out {
        write_trace(&trace, path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    Ok(SimulateOutcome { trace, report })
}

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    read_json(path, "scene")
}

/// Solves a placement and writes it to `out` if given.
pub fn cmd_place(scene_path: &Path, config: &Config, out: Option<&Path>) -> Result<PlacementResult, CliError> {
    let scene = load_scene(scene_path)?;
    let result = solve_placement(&scene, &config.placement).map_err(|e| match e {
        PlacementError::NoFeasiblePlacement { .. } => CliError::failed(e.to_string()),
        other => CliError::input(other.to_string()),
    })?;
    if let Some(path) = out {
        let mut body = serde_json::to_string_pretty(&result).expect("placement serializes");
        body.push('\n');
        std::fs::write(path, body).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    Ok(result)
}
