//! Google Cloud Speech-to-Text over its REST `speech:recognize` method.
//!
//! The credential referenced by the config is an API key, passed as the
//! `key` query parameter.

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{
    http_agent, transport_error, AdapterError, AudioClip, SpeechClientConfig, SpeechToText, SttResult,
};

pub const DEFAULT_ENDPOINT: &str = "https://speech.googleapis.com";

#[derive(Clone, Debug)]
pub struct GoogleStt {
    pub language_code: String,
}

impl Default for GoogleStt {
    fn default() -> Self {
        Self {
            language_code: "en-US".into(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RecognitionConfig<'a> {
    encoding: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_rate_hertz: Option<u32>,
    language_code: &'a str,
}

#[derive(Serialize)]
struct RecognizeRequest<'a> {
    config: RecognitionConfig<'a>,
    audio: RecognitionAudio,
}

#[derive(Serialize)]
struct RecognitionAudio {
    content: String,
}

#[derive(Deserialize, Default)]
struct RecognizeResponse {
    #[serde(default)]
    results: Vec<RecognitionResult>,
}

#[derive(Deserialize)]
struct RecognitionResult {
    #[serde(default)]
    alternatives: Vec<Alternative>,
}

#[derive(Deserialize)]
struct Alternative {
    #[serde(default)]
    transcript: String,
    confidence: Option<f64>,
}

/// Maps a clip format label to the API's encoding and sample rate.
fn encoding_for(label: &str) -> Result<(&'static str, Option<u32>), AdapterError> {
    Ok(match label {
        "pcm16-16k" => ("LINEAR16", Some(16_000)),
        "pcm16-8k" => ("LINEAR16", Some(8_000)),
        "pcm16-48k" => ("LINEAR16", Some(48_000)),
        "flac" => ("FLAC", None),
        "ogg-opus" => ("OGG_OPUS", Some(48_000)),
        "mp3" => ("MP3", Some(16_000)),
        other => {
            return Err(AdapterError::InvalidConfig(format!(
                "unsupported audio format {other:?}"
            )))
        }
    })
}

impl GoogleStt {
    fn build_body(&self, audio: &AudioClip) -> Result<String, AdapterError> {
        let (encoding, rate) = encoding_for(&audio.format_label)?;
        let req = RecognizeRequest {
            config: RecognitionConfig {
                encoding,
                sample_rate_hertz: rate,
                language_code: &self.language_code,
            },
            audio: RecognitionAudio {
                content: base64::engine::general_purpose::STANDARD.encode(&audio.bytes),
            },
        };
        serde_json::to_string(&req).map_err(|e| AdapterError::InvalidConfig(e.to_string()))
    }
}

/// Joins the top alternative of each result segment.
fn parse_response(body: &str) -> Result<SttResult, AdapterError> {
    let resp: RecognizeResponse =
        serde_json::from_str(body).map_err(|e| AdapterError::BadResponse(e.to_string()))?;
    let mut text = Vec::new();
    let mut confidence = None;
    for alt in resp.results.iter().filter_map(|r| r.alternatives.first()) {
        text.push(alt.transcript.trim().to_string());
        if confidence.is_none() {
            confidence = alt.confidence;
        }
    }
    match confidence {
        Some(c) => SttResult::with_confidence(text.join(" "), c),
        None => Ok(SttResult::new(text.join(" "))),
    }
}

impl SpeechToText for GoogleStt {
    fn transcribe(&self, audio: &AudioClip, cfg: &SpeechClientConfig) -> Result<SttResult, AdapterError> {
        if audio.is_empty() {
            return Err(AdapterError::EmptyAudio);
        }
        cfg.check()?;
        let key = cfg.credential()?;
        let body = self.build_body(audio)?;
        let url = format!("{}/v1/speech:recognize", cfg.endpoint.trim_end_matches('/'));
        let mut resp = http_agent(cfg)
            .post(&url)
            .query("key", &key)
            .header("Content-Type", "application/json")
            .send(body.as_bytes())
            .map_err(transport_error)?;
        let status = resp.status();
        let text = resp.body_mut().read_to_string().map_err(transport_error)?;
        if status.is_server_error() {
            return Err(AdapterError::ServiceUnavailable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AdapterError::BadResponse(format!("HTTP {status}: {text}")));
        }
        parse_response(&text)
    }
}
