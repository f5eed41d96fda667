use super::{AnnotatedScript, SpeechSegment};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Collapses every whitespace run to one space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits narration at sentence boundaries.
///
/// A sentence ends after a run of terminator characters, optionally followed
/// by closing quotes or brackets, when the next character is whitespace or
/// the end of the text. "210.5" or "e.g.x" therefore stay whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SentenceSplitter {
    pub terminators: String,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self {
            terminators: ".!?".to_string(),
        }
    }
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

impl SentenceSplitter {
    /// Char-offset ranges of the sentences of an already normalized text.
    pub fn sentence_spans(&self, normalized: &str) -> Vec<Range<usize>> {
        let chars: Vec<char> = normalized.chars().collect();
        let is_term = |c: char| self.terminators.contains(c);
        let mut spans = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if is_term(chars[i]) {
                let mut end = i + 1;
                while end < chars.len() && is_term(chars[end]) {
                    end += 1;
                }
                while end < chars.len() && CLOSERS.contains(&chars[end]) {
                    end += 1;
                }
                if end == chars.len() || chars[end] == ' ' {
                    spans.push(start..end);
                    start = end + 1;
                    i = start;
                    continue;
                }
                i = end;
                continue;
            }
            i += 1;
        }
        if start < chars.len() {
            spans.push(start..chars.len());
        }
        spans
    }

    /// Normalized sentences of `text`.
    pub fn split(&self, text: &str) -> Vec<String> {
        let norm = normalize_whitespace(text);
        let chars: Vec<char> = norm.chars().collect();
        self.sentence_spans(&norm)
            .into_iter()
            .map(|r| chars[r].iter().collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("script has no narration text")]
    EmptyScript,
    #[error("{device_id} block {block}: marked sentence {sentence} out of range")]
    SentenceOutOfRange {
        device_id: String,
        block: usize,
        sentence: usize,
    },
}

/// Cuts a script into speech segments carrying at most one learning point.
///
/// Each block is split into sentences. A block marked as a whole becomes one
/// segment. A block whose marker names a single sentence yields up to three
/// segments: the sentences before it, the marked sentence, and the sentences
/// after it. Unmarked blocks become one segment each.
pub fn segment_script(
    script: &AnnotatedScript,
    splitter: &SentenceSplitter,
) -> Result<Vec<SpeechSegment>, SegmentError> {
    let mut out = Vec::new();
    for dev in &script.devices {
        let mut order = 0u32;
        let mut push = |text: String, lp: Option<&String>| {
            out.push(SpeechSegment {
                id: format!("{}-{:03}", dev.device_id, order),
                device_id: dev.device_id.clone(),
                order_index: order,
                text,
                learning_point_id: lp.cloned(),
                audio: None,
            });
            order += 1;
        };
        for (b, block) in dev.blocks.iter().enumerate() {
            let sentences = splitter.split(&block.text);
            if sentences.is_empty() {
                continue;
            }
            match (&block.learning_point_id, block.marked_sentence) {
                (Some(lp), Some(k)) => {
                    if k >= sentences.len() {
                        return Err(SegmentError::SentenceOutOfRange {
                            device_id: dev.device_id.clone(),
                            block: b,
                            sentence: k,
                        });
                    }
                    if k > 0 {
                        push(sentences[..k].join(" "), None);
                    }
                    push(sentences[k].clone(), Some(lp));
                    if k + 1 < sentences.len() {
                        push(sentences[k + 1..].join(" "), None);
                    }
                }
                (lp, _) => push(sentences.join(" "), lp.as_ref()),
            }
        }
    }
    if out.is_empty() {
        return Err(SegmentError::EmptyScript);
    }
    Ok(out)
}
