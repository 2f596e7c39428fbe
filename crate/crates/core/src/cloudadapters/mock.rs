//! Deterministic offline stand-ins for the speech services.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::{AdapterError, AudioClip, SpeechClientConfig, SpeechToText, SttResult, TextToSpeech};

/// Recognizer that replays scripted results.
///
/// Results scripted for a specific clip (keyed by its bytes) are consumed
/// first; otherwise the shared queue is used. When both are empty the mock
/// reports the service as unavailable.
#[derive(Debug, Default)]
pub struct MockStt {
    keyed: Mutex<HashMap<Vec<u8>, VecDeque<SttResult>>>,
    shared: Mutex<VecDeque<SttResult>>,
}

impl MockStt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Mock whose shared queue holds `lines` in order.
    pub fn scripted<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mock = Self::new();
        for line in lines {
            mock.push(SttResult::new(line));
        }
        mock
    }

    pub fn script(&self, clip: &AudioClip, result: SttResult) {
        self.keyed
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .entry(clip.bytes.clone())
            .or_default()
            .push_back(result);
    }

    pub fn push(&self, result: SttResult) {
        self.shared
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push_back(result);
    }
}

impl SpeechToText for MockStt {
    fn transcribe(&self, audio: &AudioClip, _cfg: &SpeechClientConfig) -> Result<SttResult, AdapterError> {
        if audio.is_empty() {
            return Err(AdapterError::EmptyAudio);
        }
        let keyed = self
            .keyed
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .get_mut(&audio.bytes)
            .and_then(VecDeque::pop_front);
        keyed
            .or_else(|| self.shared.lock().unwrap_or_else(|p| p.into_inner()).pop_front())
            .ok_or_else(|| AdapterError::ServiceUnavailable("mock script exhausted".into()))
    }
}

/// Synthesizer returning the UTF-8 bytes of its input, labelled `"mock"`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockTts;

impl TextToSpeech for MockTts {
    fn synthesize(&self, text: &str, _cfg: &SpeechClientConfig) -> Result<AudioClip, AdapterError> {
        if text.is_empty() {
            return Err(AdapterError::EmptyText);
        }
        Ok(AudioClip::new(text.as_bytes().to_vec(), "mock"))
    }
}

/// A service that is always down. Used to inject outages.
#[derive(Clone, Copy, Debug, Default)]
pub struct OfflineService;

impl SpeechToText for OfflineService {
    fn transcribe(&self, audio: &AudioClip, _cfg: &SpeechClientConfig) -> Result<SttResult, AdapterError> {
        if audio.is_empty() {
            return Err(AdapterError::EmptyAudio);
        }
        Err(AdapterError::ServiceUnavailable("injected outage".into()))
    }
}

impl TextToSpeech for OfflineService {
    fn synthesize(&self, text: &str, _cfg: &SpeechClientConfig) -> Result<AudioClip, AdapterError> {
        if text.is_empty() {
            return Err(AdapterError::EmptyText);
        }
        Err(AdapterError::ServiceUnavailable("injected outage".into()))
    }
}
