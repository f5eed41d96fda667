//! The three per-channel timeline files.

use super::{GestureEvent, SpeechEvent, Timeline, TimelineHeader, VisualEvent, SCHEMA_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const NARRATION_FILE: &str = "narration.json";
pub const VISUALS_FILE: &str = "visuals.json";
pub const GESTURES_FILE: &str = "gestures.json";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile<T> {
    header: TimelineHeader,
    events: Vec<T>,
}

#[derive(Debug, thiserror::Error)]
pub enum TimelineFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{path}: unsupported schema version `{found}`")]
    SchemaVersion { path: PathBuf, found: String },
    #[error("{path}: header does not match {reference}")]
    HeaderMismatch { path: PathBuf, reference: String },
}

fn render<T: Serialize>(header: &TimelineHeader, events: &[T]) -> String {
    #[derive(Serialize)]
    struct Out<'a, T> {
        header: &'a TimelineHeader,
        events: &'a [T],
    }
    let mut s = serde_json::to_string_pretty(&Out { header, events }).expect("timeline serializes");
    s.push('\n');
    s
}

impl Timeline {
    /// File name and contents of each channel file.
    pub fn to_files(&self) -> [(&'static str, String); 3] {
        [
            (NARRATION_FILE, render(&self.header, &self.speech)),
            (VISUALS_FILE, render(&self.header, &self.visuals)),
            (GESTURES_FILE, render(&self.header, &self.gestures)),
        ]
    }
}

/// Writes the three channel files into `dir`, creating it if needed.
pub fn emit(timeline: &Timeline, dir: &Path) -> Result<(), TimelineFileError> {
    std::fs::create_dir_all(dir).map_err(|source| TimelineFileError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, body) in timeline.to_files() {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| TimelineFileError::Io { path, source })?;
    }
    Ok(())
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<ChannelFile<T>, TimelineFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TimelineFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: ChannelFile<T> =
        serde_path_to_error::deserialize(de).map_err(|e| TimelineFileError::Malformed {
            path: path.to_path_buf(),
            message: format!("{}: {}", e.path(), e.inner()),
        })?;
    let major = |v: &str| v.split('.').next().map(str::to_string);
    if major(&file.header.schema_version) != major(SCHEMA_VERSION) {
        return Err(TimelineFileError::SchemaVersion {
            path: path.to_path_buf(),
            found: file.header.schema_version,
        });
    }
    Ok(file)
}

/// Reads the three channel files from `dir`. Their headers must agree.
pub fn parse(dir: &Path) -> Result<Timeline, TimelineFileError> {
    let narration: ChannelFile<SpeechEvent> = read(&dir.join(NARRATION_FILE))?;
    let visuals: ChannelFile<VisualEvent> = read(&dir.join(VISUALS_FILE))?;
    let gestures: ChannelFile<GestureEvent> = read(&dir.join(GESTURES_FILE))?;
    for (name, h) in [(VISUALS_FILE, &visuals.header), (GESTURES_FILE, &gestures.header)] {
        if *h != narration.header {
            return Err(TimelineFileError::HeaderMismatch {
                path: dir.join(name),
                reference: NARRATION_FILE.to_string(),
            });
        }
    }
    Ok(Timeline {
        header: narration.header,
        speech: narration.events,
        visuals: visuals.events,
        gestures: gestures.events,
    })
}
