//! Client seams for the external speech services.
//!
//! [`SpeechToText`] and [`TextToSpeech`] are the boundaries the rest of the
//! pipeline sees. The mock implementations in [`mock`] are what tests and the
//! offline CLI use. [`google`] and [`polly`] are plain HTTPS clients for
//! Google Cloud Speech-to-Text and Amazon Polly.

pub mod google;
pub mod mock;
pub mod polly;
mod speaker;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mock::{MockStt, MockTts, OfflineService};
pub use speaker::{clip_extension, AudioSink, DirSink, MemorySink, SpeakLoop, SpeakReport};

use crate::messages::{Payload, TranscriptMsg, TOPIC_TRANSCRIPT};
use crate::msgbus::Bus;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdapterError {
    #[error("speech service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("audio clip is empty")]
    EmptyAudio,
    #[error("text to synthesize is empty")]
    EmptyText,
    #[error("credential error: {0}")]
    Credential(String),
    #[error("invalid client config: {0}")]
    InvalidConfig(String),
    #[error("unexpected service response: {0}")]
    BadResponse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SttResult {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl SttResult {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            confidence: None,
        }
    }

    pub fn with_confidence(text: impl Into<String>, confidence: f64) -> Result<Self, AdapterError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(AdapterError::BadResponse(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self {
            text: text.into(),
            confidence: Some(confidence),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AudioClip {
    pub bytes: Vec<u8>,
    /// e.g. `"pcm16-16k"`, `"mp3"`, `"mock"`.
    pub format_label: String,
}

impl AudioClip {
    pub fn new(bytes: Vec<u8>, format_label: impl Into<String>) -> Self {
        Self {
            bytes,
            format_label: format_label.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Where and how to reach a speech service. The credential itself lives in
/// the environment variable named by `credential_ref`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechClientConfig {
    pub endpoint: String,
    pub credential_ref: String,
    pub timeout_ms: u64,
}

impl SpeechClientConfig {
    pub fn new(
        endpoint: impl Into<String>,
        credential_ref: impl Into<String>,
        timeout_ms: u64,
    ) -> Result<Self, AdapterError> {
        let cfg = Self {
            endpoint: endpoint.into(),
            credential_ref: credential_ref.into(),
            timeout_ms,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), AdapterError> {
        if self.timeout_ms == 0 {
            return Err(AdapterError::InvalidConfig("timeout_ms must be > 0".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    /// Reads the referenced credential from the environment.
    pub fn credential(&self) -> Result<String, AdapterError> {
        std::env::var(&self.credential_ref).map_err(|_| {
            AdapterError::Credential(format!(
                "environment variable {} is not set",
                self.credential_ref
            ))
        })
    }

    /// Config for offline mocks; endpoint and credential are never read.
    pub fn offline() -> Self {
        Self {
            endpoint: "mock://local".into(),
            credential_ref: "GUIDEBOT_UNUSED".into(),
            timeout_ms: 1_000,
        }
    }
}

pub trait SpeechToText: Send + Sync {
    fn transcribe(&self, audio: &AudioClip, cfg: &SpeechClientConfig) -> Result<SttResult, AdapterError>;
}

pub trait TextToSpeech: Send + Sync {
    fn synthesize(&self, text: &str, cfg: &SpeechClientConfig) -> Result<AudioClip, AdapterError>;
}

impl<T: SpeechToText + ?Sized> SpeechToText for Box<T> {
    fn transcribe(&self, audio: &AudioClip, cfg: &SpeechClientConfig) -> Result<SttResult, AdapterError> {
        (**self).transcribe(audio, cfg)
    }
}

impl<T: TextToSpeech + ?Sized> TextToSpeech for Box<T> {
    fn synthesize(&self, text: &str, cfg: &SpeechClientConfig) -> Result<AudioClip, AdapterError> {
        (**self).synthesize(text, cfg)
    }
}

/// Sends a clip through speech recognition and publishes the transcript.
/// Nothing is published when recognition fails.
pub fn transcribe_and_publish<S: SpeechToText + ?Sized>(
    stt: &S,
    audio: &AudioClip,
    cfg: &SpeechClientConfig,
    bus: &Bus,
    timestamp_ms: u64,
) -> Result<u64, AdapterError> {
    let result = stt.transcribe(audio, cfg)?;
    bus.publish_to(
        TOPIC_TRANSCRIPT,
        Payload::Transcript(TranscriptMsg {
            text: result.text,
            timestamp_ms,
            confidence: result.confidence,
        }),
    )
    .map_err(|e| AdapterError::InvalidConfig(e.to_string()))
}

pub(crate) fn http_agent(cfg: &SpeechClientConfig) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout()))
        .http_status_as_error(false)
        .build()
        .into()
}

pub(crate) fn transport_error(err: ureq::Error) -> AdapterError {
    AdapterError::ServiceUnavailable(err.to_string())
}
