//! Narration scripts: generation through a pluggable text client, sentence
//! segmentation, and speech synthesis through a pluggable speech client.

mod segment;
mod stub;
mod synth;

pub use segment::{normalize_whitespace, segment_script, SegmentError, SentenceSplitter};
pub use stub::{StubSpeech, TemplateTextGen};
pub use synth::{synthesize, SynthesisError};

use crate::asset::{AssetLibrary, DeviceInfo, LearningPoint, TourPlan};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrationBlock {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_point_id: Option<String>,
    /// Narrows the marker to one sentence of the block (0-based). When
    /// absent the marker covers the whole block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked_sentence: Option<usize>,
}

impl NarrationBlock {
    pub fn prose(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            learning_point_id: None,
            marked_sentence: None,
        }
    }

    pub fn marked(text: impl Into<String>, learning_point_id: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            learning_point_id: Some(learning_point_id.into()),
            marked_sentence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceNarration {
    pub device_id: String,
    pub blocks: Vec<NarrationBlock>,
}

/// A narration variant with its learning points marked in place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedScript {
    pub label: String,
    pub devices: Vec<DeviceNarration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptProblem {
    DeviceOrder { expected: Vec<String>, found: Vec<String> },
    EmptyBlock { device_id: String, block: usize },
    UnknownLearningPoint { device_id: String, learning_point_id: String },
    ForeignLearningPoint { device_id: String, learning_point_id: String, owner: String },
    DuplicateMarker { device_id: String, learning_point_id: String },
    SentenceWithoutMarker { device_id: String, block: usize },
    SentenceOutOfRange { device_id: String, block: usize, sentence: usize, sentences: usize },
}

impl fmt::Display for ScriptProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DeviceOrder { expected, found } => {
                write!(f, "device order {found:?} does not match tour {expected:?}")
            }
            Self::EmptyBlock { device_id, block } => {
                write!(f, "{device_id} block {block}: empty text")
            }
            Self::UnknownLearningPoint { device_id, learning_point_id } => {
                write!(f, "{device_id}: unknown learning point `{learning_point_id}`")
            }
            Self::ForeignLearningPoint { device_id, learning_point_id, owner } => write!(
                f,
                "{device_id}: learning point `{learning_point_id}` belongs to `{owner}`"
            ),
            Self::DuplicateMarker { device_id, learning_point_id } => write!(
                f,
                "{device_id}: learning point `{learning_point_id}` marked more than once"
            ),
            Self::SentenceWithoutMarker { device_id, block } => {
                write!(f, "{device_id} block {block}: marked_sentence without a learning point")
            }
            Self::SentenceOutOfRange { device_id, block, sentence, sentences } => write!(
                f,
                "{device_id} block {block}: marked sentence {sentence} but block has {sentences}"
            ),
        }
    }
}

impl AnnotatedScript {
    /// All problems that make this script unusable for `plan`.
    pub fn problems(
        &self,
        plan: &TourPlan,
        library: &AssetLibrary,
        splitter: &SentenceSplitter,
    ) -> Vec<ScriptProblem> {
        let mut out = Vec::new();
        let found: Vec<String> = self.devices.iter().map(|d| d.device_id.clone()).collect();
        if found != plan.devices {
            out.push(ScriptProblem::DeviceOrder {
                expected: plan.devices.clone(),
                found,
            });
        }
        for dev in &self.devices {
            let mut marked = BTreeSet::new();
            for (i, block) in dev.blocks.iter().enumerate() {
                let sentences = splitter.split(&block.text);
                if sentences.is_empty() {
                    out.push(ScriptProblem::EmptyBlock {
                        device_id: dev.device_id.clone(),
                        block: i,
                    });
                }
                match (&block.learning_point_id, block.marked_sentence) {
                    (None, Some(_)) => out.push(ScriptProblem::SentenceWithoutMarker {
                        device_id: dev.device_id.clone(),
                        block: i,
                    }),
                    (Some(lp), sentence) => {
                        match library.learning_point(lp) {
                            None => out.push(ScriptProblem::UnknownLearningPoint {
                                device_id: dev.device_id.clone(),
                                learning_point_id: lp.clone(),
                            }),
                            Some(p) if p.device_id != dev.device_id => {
                                out.push(ScriptProblem::ForeignLearningPoint {
                                    device_id: dev.device_id.clone(),
                                    learning_point_id: lp.clone(),
                                    owner: p.device_id.clone(),
                                })
                            }
                            Some(_) => {}
                        }
                        if !marked.insert(lp.as_str()) {
                            out.push(ScriptProblem::DuplicateMarker {
                                device_id: dev.device_id.clone(),
                                learning_point_id: lp.clone(),
                            });
                        }
                        if let Some(k) = sentence {
                            if k >= sentences.len() && !sentences.is_empty() {
                                out.push(ScriptProblem::SentenceOutOfRange {
                                    device_id: dev.device_id.clone(),
                                    block: i,
                                    sentence: k,
                                    sentences: sentences.len(),
                                });
                            }
                        }
                    }
                    (None, None) => {}
                }
            }
        }
        out
    }

    /// All block texts in order, joined by single spaces.
    pub fn full_text(&self) -> String {
        self.devices
            .iter()
            .flat_map(|d| d.blocks.iter().map(|b| b.text.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Every learning-point marker in order of appearance.
    pub fn markers(&self) -> Vec<&str> {
        self.devices
            .iter()
            .flat_map(|d| d.blocks.iter().filter_map(|b| b.learning_point_id.as_deref()))
            .collect()
    }
}

/// Narration guidance handed to the text generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NarrationDirectives {
    /// Templates for moving between devices; `{current}` and `{next}` are
    /// replaced by device names.
    pub transition_phrases: Vec<String>,
    /// Template for the last device; `{current}` is replaced.
    pub closing_phrase: String,
    /// Everyday analogies keyed by learning point id.
    pub analogy_hints: BTreeMap<String, String>,
    /// Desired narration length per device, minutes `[low, high]`.
    pub target_minutes_per_device: [f64; 2],
}

impl Default for NarrationDirectives {
    fn default() -> Self {
        Self {
            transition_phrases: vec![
                "That covers the {current}. Please follow me to the {next}.".into(),
                "The {current} has now been introduced; next, we will look at the {next}, please follow me.".into(),
                "Now that we know the {current}, let us move on to the {next}.".into(),
            ],
            closing_phrase: "That concludes our look at the {current}. Thank you for following along.".into(),
            analogy_hints: BTreeMap::new(),
            target_minutes_per_device: [4.0, 5.0],
        }
    }
}

/// Everything a text generator needs to write a tour script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRequest {
    pub tour: TourPlan,
    /// Devices in tour order.
    pub devices: Vec<DeviceInfo>,
    /// Learning points of the toured devices, per device in category order.
    pub learning_points: Vec<LearningPoint>,
    pub directives: NarrationDirectives,
}

impl GenerationRequest {
    /// Assembles a request from a validated tour.
    pub fn new(tour: &TourPlan, library: &AssetLibrary, directives: NarrationDirectives) -> Self {
        let devices = tour
            .devices
            .iter()
            .filter_map(|d| library.device(d).cloned())
            .collect();
        let learning_points = tour
            .devices
            .iter()
            .flat_map(|d| library.learning_points_of(d).into_iter().cloned())
            .collect();
        Self {
            tour: tour.clone(),
            devices,
            learning_points,
            directives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ClientError(pub String);

/// Produces candidate scripts for a tour.
pub trait TextGenClient: Send + Sync {
    fn generate(
        &self,
        request: &GenerationRequest,
        n_variants: usize,
    ) -> Result<Vec<AnnotatedScript>, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeechAudio {
    pub audio_ref: String,
    pub duration_ms: u64,
}

/// Turns text into audio.
pub trait SpeechClient: Send + Sync {
    fn synthesize(&self, text: &str) -> Result<SpeechAudio, ClientError>;
}

/// One unit of narration: at most one learning point, scheduled as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechSegment {
    pub id: String,
    pub device_id: String,
    pub order_index: u32,
    pub text: String,
    pub learning_point_id: Option<String>,
    /// Filled in by synthesis.
    pub audio: Option<SpeechAudio>,
}

impl SpeechSegment {
    pub fn duration_ms(&self) -> Option<u64> {
        self.audio.as_ref().map(|a| a.duration_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedVariant {
    pub label: String,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub scripts: Vec<AnnotatedScript>,
    pub rejected: Vec<RejectedVariant>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("n_variants must be at least 1")]
    NoVariantsRequested,
    #[error("text generation failed: {0}")]
    Client(#[from] ClientError),
    #[error("no valid script variants ({} rejected)", .0.len())]
    NoValidVariants(Vec<RejectedVariant>),
}

/// Asks `client` for up to `n_variants` scripts and keeps the valid ones.
pub fn generate_script(
    request: &GenerationRequest,
    library: &AssetLibrary,
    client: &dyn TextGenClient,
    n_variants: usize,
    splitter: &SentenceSplitter,
) -> Result<Generated, GenerateError> {
    if n_variants == 0 {
        return Err(GenerateError::NoVariantsRequested);
    }
    let candidates = client.generate(request, n_variants)?;
    let mut scripts = Vec::new();
    let mut rejected = Vec::new();
    let mut labels = BTreeSet::new();
    for script in candidates {
        let mut problems: Vec<String> = script
            .problems(&request.tour, library, splitter)
            .iter()
            .map(ToString::to_string)
            .collect();
        if !labels.insert(script.label.clone()) {
            problems.push(format!("duplicate variant label `{}`", script.label));
        }
        if problems.is_empty() {
            scripts.push(script);
        } else {
            rejected.push(RejectedVariant {
                label: script.label,
                problems,
            });
        }
    }
    scripts.truncate(n_variants);
    if scripts.is_empty() {
        return Err(GenerateError::NoValidVariants(rejected));
    }
    Ok(Generated { scripts, rejected })
}
