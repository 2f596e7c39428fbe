use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::{AudioClip, SpeechClientConfig, TextToSpeech};
use crate::messages::{Payload, TOPIC_SAY};
use crate::msgbus::{Bus, BusError, Subscription};

/// File extension for a clip format label.
pub fn clip_extension(format_label: &str) -> &'static str {
    match format_label {
        "mp3" => "mp3",
        "mock" => "mock",
        l if l.starts_with("ogg") => "ogg",
        l if l.starts_with("pcm") => "pcm",
        "flac" => "flac",
        _ => "bin",
    }
}

/// Destination for synthesized clips.
pub trait AudioSink: Send {
    /// Returns a description of where the clip went (a path for file sinks).
    fn play(&mut self, seq: u64, timestamp_ms: u64, clip: &AudioClip) -> io::Result<String>;
}

/// Writes each clip to `<dir>/<seq>-<timestamp>.<ext>`.
#[derive(Clone, Debug)]
pub struct DirSink {
    dir: PathBuf,
}

impl DirSink {
    pub fn new(dir: impl AsRef<Path>) -> io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl AudioSink for DirSink {
    fn play(&mut self, seq: u64, timestamp_ms: u64, clip: &AudioClip) -> io::Result<String> {
        let path = self.dir.join(format!(
            "{seq}-{timestamp_ms}.{}",
            clip_extension(&clip.format_label)
        ));
        fs::write(&path, &clip.bytes)?;
        Ok(path.display().to_string())
    }
}

/// Keeps clips in memory.
#[derive(Clone, Debug, Default)]
pub struct MemorySink {
    pub clips: Vec<(u64, u64, AudioClip)>,
}

impl AudioSink for MemorySink {
    fn play(&mut self, seq: u64, timestamp_ms: u64, clip: &AudioClip) -> io::Result<String> {
        self.clips.push((seq, timestamp_ms, clip.clone()));
        Ok(format!("memory[{}]", self.clips.len() - 1))
    }
}

/// Result of voicing one `speech.say` message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeakReport {
    pub seq: u64,
    pub text: String,
    pub outcome: Result<String, String>,
}

/// Consumer of `speech.say`: synthesizes each message and hands the clip to a
/// sink. Failures are logged and reported, never propagated.
pub struct SpeakLoop {
    sub: Subscription,
    client: Box<dyn TextToSpeech>,
    cfg: SpeechClientConfig,
    sink: Box<dyn AudioSink>,
}

impl SpeakLoop {
    pub fn new(
        bus: &Bus,
        client: Box<dyn TextToSpeech>,
        cfg: SpeechClientConfig,
        sink: Box<dyn AudioSink>,
    ) -> Result<Self, BusError> {
        Ok(Self {
            sub: bus.subscribe_to(TOPIC_SAY)?,
            client,
            cfg,
            sink,
        })
    }

    /// Voices every pending message, stamping clips with `now_ms`.
    pub fn poll(&mut self, now_ms: u64) -> Vec<SpeakReport> {
        std::iter::from_fn(|| self.sub.try_recv())
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|env| match env.payload {
                Payload::SpeechOut(msg) => Some(self.voice(env.seq, now_ms, msg.text)),
                _ => None,
            })
            .collect()
    }

    fn voice(&mut self, seq: u64, now_ms: u64, text: String) -> SpeakReport {
        let outcome = self
            .client
            .synthesize(&text, &self.cfg)
            .map_err(|e| e.to_string())
            .and_then(|clip| self.sink.play(seq, now_ms, &clip).map_err(|e| e.to_string()));
        match &outcome {
            Ok(dest) => log::debug!("spoke #{seq} {text:?} -> {dest}"),
            Err(e) => log::warn!("failed to speak #{seq} {text:?}: {e}"),
        }
        SpeakReport { seq, text, outcome }
    }

    /// Service loop: runs until `shutdown` is set, using wall-clock stamps.
    pub fn run(&mut self, shutdown: &AtomicBool) {
        while !shutdown.load(Ordering::Relaxed) {
            if let Some(env) = self.sub.recv_timeout(Duration::from_millis(50)) {
                if let Payload::SpeechOut(msg) = env.payload {
                    let now = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_millis() as u64)
                        .unwrap_or_default();
                    self.voice(env.seq, now, msg.text);
                }
            }
        }
    }
}
