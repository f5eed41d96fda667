//! HTTP-backed text generation and speech clients.
//!
//! Text generation: `POST {url}` with `{"request": GenerationRequest,
//! "n_variants": n}`, answered by `{"scripts": [AnnotatedScript, ...]}`.
//!
//! Speech: `POST {url}` with `{"text": "..."}`, answered by
//! `{"audio_ref": "...", "duration_ms": n}`.

use choreo_core::config::{ClientsConfig, Config};
use choreo_core::script::{
    AnnotatedScript, ClientError, GenerationRequest, SpeechAudio, SpeechClient, StubSpeech, TemplateTextGen,
    TextGenClient,
};
use serde::{Deserialize, Serialize};
use std::time::Duration;

fn agent(timeout_secs: u64) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(timeout_secs)))
        .build()
        .into()
}

pub struct HttpTextGen {
    url: String,
    agent: ureq::Agent,
}

impl HttpTextGen {
    pub fn new(url: &str, timeout_secs: u64) -> Self {
        Self {
            url: url.to_string(),
            agent: agent(timeout_secs),
        }
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    request: &'a GenerationRequest,
    n_variants: usize,
}

#[derive(Deserialize)]
struct GenerateReply {
    scripts: Vec<AnnotatedScript>,
}

impl TextGenClient for HttpTextGen {
    fn generate(&self, request: &GenerationRequest, n_variants: usize) -> Result<Vec<AnnotatedScript>, ClientError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(GenerateBody { request, n_variants })
            .map_err(|e| ClientError(format!("{}: {e}", self.url)))?;
        let reply: GenerateReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| ClientError(format!("{}: bad reply: {e}", self.url)))?;
        Ok(reply.scripts)
    }
}

pub struct HttpSpeech {
    url: String,
    agent: ureq::Agent,
}

impl HttpSpeech {
    pub fn new(url: &str, timeout_secs: u64) -> Self {
        Self {
            url: url.to_string(),
            agent: agent(timeout_secs),
        }
    }
}

#[derive(Serialize)]
struct SpeechBody<'a> {
    text: &'a str,
}

impl SpeechClient for HttpSpeech {
    fn synthesize(&self, text: &str) -> Result<SpeechAudio, ClientError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(SpeechBody { text })
            .map_err(|e| ClientError(format!("{}: {e}", self.url)))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| ClientError(format!("{}: bad reply: {e}", self.url)))
    }
}

/// Text and speech clients chosen by configuration.
pub struct ConfiguredClients {
    pub text_gen: Box<dyn TextGenClient>,
    pub speech: Box<dyn SpeechClient>,
}

fn is_stub(endpoint: &str) -> bool {
    endpoint.trim().eq_ignore_ascii_case("stub")
}

pub fn build_clients(cfg: &Config) -> ConfiguredClients {
    let ClientsConfig {
        text_gen,
        speech,
        timeout_secs,
    } = &cfg.clients;
    let text_gen: Box<dyn TextGenClient> = if is_stub(text_gen) {
        Box::new(TemplateTextGen)
    } else {
        Box::new(HttpTextGen::new(text_gen, *timeout_secs))
    };
    let speech: Box<dyn SpeechClient> = if is_stub(speech) {
        Box::new(StubSpeech::new(cfg.speech.rate_chars_per_sec))
    } else {
        Box::new(HttpSpeech::new(speech, *timeout_secs))
    };
    ConfiguredClients { text_gen, speech }
}
