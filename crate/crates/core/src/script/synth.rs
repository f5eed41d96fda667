use super::{ClientError, SpeechAudio, SpeechClient, SpeechSegment};
use rayon::prelude::*;
use std::fmt;

/// Synthesis stopped; `completed` segments succeeded before the failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SynthesisError {
    pub failures: Vec<(String, String)>,
    pub completed: usize,
    pub total: usize,
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "speech synthesis failed for {} of {} segment(s)",
            self.failures.len(),
            self.total
        )?;
        for (id, msg) in &self.failures {
            write!(f, "; {id}: {msg}")?;
        }
        Ok(())
    }
}

fn synthesize_one(seg: &SpeechSegment, client: &dyn SpeechClient) -> Result<SpeechAudio, ClientError> {
    if seg.text.trim().is_empty() {
        return Err(ClientError("empty text".into()));
    }
    let audio = client.synthesize(&seg.text)?;
    if audio.duration_ms == 0 {
        return Err(ClientError("client returned zero duration".into()));
    }
    Ok(audio)
}

/// Attaches audio to every segment. Requests run in parallel; results are
/// reassembled in input order.
pub fn synthesize(
    segments: &[SpeechSegment],
    client: &dyn SpeechClient,
) -> Result<Vec<SpeechSegment>, SynthesisError> {
    let results: Vec<Result<SpeechAudio, ClientError>> = segments
        .par_iter()
        .map(|s| synthesize_one(s, client))
        .collect();
    let mut failures = Vec::new();
    let mut out = Vec::with_capacity(segments.len());
    for (seg, r) in segments.iter().zip(results) {
        match r {
            Ok(audio) => out.push(SpeechSegment {
                audio: Some(audio),
                ..seg.clone()
            }),
            Err(e) => failures.push((seg.id.clone(), e.0)),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(SynthesisError {
            completed: out.len(),
            total: segments.len(),
            failures,
        })
    }
}
