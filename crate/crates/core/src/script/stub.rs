//! Deterministic stand-ins for the text and speech services.

use super::{
    AnnotatedScript, ClientError, DeviceNarration, GenerationRequest, NarrationBlock, SpeechAudio,
    SpeechClient, TextGenClient,
};
use sha2::{Digest, Sha256};

/// Template script writer.
///
/// Variant `k` (labels `v1`, `v2`, ...) narrates each device as one marked
/// block per learning point, in request order, with the learning point's
/// text followed by its analogy hint if one exists. Every device then gets
/// one unmarked block: transition phrase `(k + device index) mod n` towards
/// the next device, or the closing phrase for the last one.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateTextGen;

fn fill(template: &str, current: &str, next: &str) -> String {
    template.replace("{current}", current).replace("{next}", next)
}

impl TemplateTextGen {
    pub fn variant(&self, request: &GenerationRequest, k: usize) -> AnnotatedScript {
        let d = &request.directives;
        let mut devices = Vec::new();
        for (i, dev) in request.devices.iter().enumerate() {
            let mut blocks: Vec<NarrationBlock> = request
                .learning_points
                .iter()
                .filter(|lp| lp.device_id == dev.id)
                .map(|lp| {
                    let text = match d.analogy_hints.get(&lp.id) {
                        Some(hint) => format!("{} {}", lp.text.trim(), hint.trim()),
                        None => lp.text.trim().to_string(),
                    };
                    NarrationBlock::marked(text, lp.id.clone())
                })
                .collect();
            let closing = match request.devices.get(i + 1) {
                Some(next) if !d.transition_phrases.is_empty() => {
                    let phrase = &d.transition_phrases[(k + i) % d.transition_phrases.len()];
                    fill(phrase, &dev.name, &next.name)
                }
                Some(next) => format!("Next is the {}.", next.name),
                None => fill(&d.closing_phrase, &dev.name, ""),
            };
            if !closing.trim().is_empty() {
                blocks.push(NarrationBlock::prose(closing));
            }
            devices.push(DeviceNarration {
                device_id: dev.id.clone(),
                blocks,
            });
        }
        AnnotatedScript {
            label: format!("v{}", k + 1),
            devices,
        }
    }
}

impl TextGenClient for TemplateTextGen {
    fn generate(
        &self,
        request: &GenerationRequest,
        n_variants: usize,
    ) -> Result<Vec<AnnotatedScript>, ClientError> {
        Ok((0..n_variants).map(|k| self.variant(request, k)).collect())
    }
}

/// Speech stand-in: `duration_ms = ceil(chars / rate * 1000)`, where
/// `chars` counts Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StubSpeech {
    pub rate_chars_per_sec: f64,
}

impl StubSpeech {
    pub fn new(rate_chars_per_sec: f64) -> Self {
        assert!(
            rate_chars_per_sec > 0.0 && rate_chars_per_sec.is_finite(),
            "speech rate must be positive"
        );
        Self { rate_chars_per_sec }
    }

    pub fn duration_ms(&self, text: &str) -> u64 {
        let chars = text.chars().count() as f64;
        let exact = chars * 1000.0 / self.rate_chars_per_sec;
        // Absorb representation error so exact quotients are not bumped up.
        let nearest = exact.round();
        if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) {
            nearest as u64
        } else {
            exact.ceil() as u64
        }
    }
}

impl SpeechClient for StubSpeech {
    fn synthesize(&self, text: &str) -> Result<SpeechAudio, ClientError> {
        if text.is_empty() {
            return Err(ClientError("empty text".into()));
        }
        let digest = Sha256::digest(text.as_bytes());
        Ok(SpeechAudio {
            audio_ref: format!("stub-tts:{}", &hex::encode(digest)[..16]),
            duration_ms: self.duration_ms(text),
        })
    }
}
