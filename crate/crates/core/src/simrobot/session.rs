//! One robot session: speech pipeline, navigation and ticking on a single
//! logical event loop, plus the event log and scripted replay.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::{on_goal, on_stop, tick, RobotState, SimConfig};
use crate::cloudadapters::{SpeakLoop, SpeakReport};
use crate::messages::{
    Payload, StateMsg, TranscriptMsg, STANDARD_TOPICS, TOPIC_GOAL, TOPIC_STOP, TOPIC_TRANSCRIPT,
};
use crate::msgbus::{drain_merged, Bus, BusError, Envelope, Monitor, Subscription, TopicName};
use crate::speechflow::{handle_transcript, HandleOutcome, Lexicon, SpeechError, WakeConfig};
use crate::navcore::SiteMap;

/// Upper bound on ticks spent finishing a route after a script ends.
pub const DEFAULT_SETTLE_LIMIT: u64 = 100_000;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Lexicon(#[from] SpeechError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("script line {line}: {reason}")]
    Script { line: usize, reason: String },
}

/// One line of the event log. `t` is the logical tick slot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: u64,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub payload: Value,
}

impl EventRecord {
    fn from_envelope(t: u64, env: &Envelope) -> Self {
        let (kind, payload) = match serde_json::to_value(&env.payload) {
            Ok(Value::Object(mut m)) => (
                m.remove("kind")
                    .and_then(|k| k.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                m.remove("payload").unwrap_or(Value::Null),
            ),
            _ => (env.payload.kind().as_str().to_string(), Value::Null),
        };
        Self {
            t,
            kind,
            topic: Some(env.topic.to_string()),
            seq: Some(env.seq),
            payload,
        }
    }
}

type OutcomeHook = Box<dyn FnMut(u64, &Result<HandleOutcome, String>) + Send>;

pub struct Session {
    bus: Bus,
    site: Arc<SiteMap>,
    lexicon: Lexicon,
    wake: WakeConfig,
    sim: SimConfig,
    state: RobotState,
    transcripts: Subscription,
    goals: Subscription,
    stops: Subscription,
    monitor: Monitor,
    ticks: u64,
    log: Vec<EventRecord>,
    speaker: Option<SpeakLoop>,
    speak_reports: Vec<SpeakReport>,
    outcome_hook: Option<OutcomeHook>,
}

impl Session {
    /// Registers the pipeline topics on `bus` and places the robot at the
    /// configured start. The lexicon must only name locations of `site`.
    pub fn new(
        bus: Bus,
        site: Arc<SiteMap>,
        lexicon: Lexicon,
        wake: WakeConfig,
        sim: SimConfig,
    ) -> Result<Self, SessionError> {
        for (name, kind) in STANDARD_TOPICS {
            bus.register_topic(&TopicName::new(name)?, kind)?;
        }
        lexicon.validate_against(&site)?;
        sim.validate(&site).map_err(SessionError::Config)?;
        Ok(Self {
            transcripts: bus.subscribe_to(TOPIC_TRANSCRIPT)?,
            goals: bus.subscribe_to(TOPIC_GOAL)?,
            stops: bus.subscribe_to(TOPIC_STOP)?,
            monitor: bus.monitor(),
            state: RobotState::at(&sim.start),
            bus,
            site,
            lexicon,
            wake,
            sim,
            ticks: 0,
            log: Vec::new(),
            speaker: None,
            speak_reports: Vec::new(),
            outcome_hook: None,
        })
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn site(&self) -> &Arc<SiteMap> {
        &self.site
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn state_msg(&self) -> StateMsg {
        self.state.to_msg()
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim
    }

    pub fn set_speaker(&mut self, speaker: SpeakLoop) {
        self.speaker = Some(speaker);
    }

    pub fn speak_reports(&self) -> &[SpeakReport] {
        &self.speak_reports
    }

    /// Called with the transcript seq and outcome of every handled utterance.
    pub fn set_outcome_hook(&mut self, hook: impl FnMut(u64, &Result<HandleOutcome, String>) + Send + 'static) {
        self.outcome_hook = Some(Box::new(hook));
    }

    pub fn event_log(&self) -> &[EventRecord] {
        &self.log
    }

    /// Event log as newline-delimited JSON.
    pub fn event_log_ndjson(&self) -> String {
        let mut out = String::new();
        for rec in &self.log {
            out.push_str(&serde_json::to_string(rec).expect("event records serialize"));
            out.push('\n');
        }
        out
    }

    fn logical_ms(&self) -> u64 {
        self.ticks * self.sim.tick_ms
    }

    fn flush_log(&mut self) {
        let t = self.ticks;
        for env in self.monitor.drain() {
            self.log.push(EventRecord::from_envelope(t, &env));
        }
    }

    /// Publishes an utterance stamped with logical time and handles it at once.
    pub fn inject(&mut self, text: &str) -> Result<(u64, Result<HandleOutcome, String>), SessionError> {
        let seq = self.bus.publish_to(
            TOPIC_TRANSCRIPT,
            Payload::Transcript(TranscriptMsg {
                text: text.to_string(),
                timestamp_ms: self.logical_ms(),
                confidence: None,
            }),
        )?;
        let handled = self.process_transcripts();
        let outcome = handled
            .into_iter()
            .find(|(s, _)| *s == seq)
            .map(|(_, o)| o)
            .unwrap_or_else(|| Err("transcript was not delivered".into()));
        Ok((seq, outcome))
    }

    /// Runs every pending transcript through the speech pipeline, in order.
    pub fn process_transcripts(&mut self) -> Vec<(u64, Result<HandleOutcome, String>)> {
        let mut handled = Vec::new();
        while let Some(env) = self.transcripts.try_recv() {
            let Payload::Transcript(t) = &env.payload else {
                continue;
            };
            self.flush_log();
            let outcome = handle_transcript(t, &self.wake, &self.lexicon, &self.site, &self.bus)
                .map_err(|e| e.to_string());
            self.flush_log();
            let payload = match &outcome {
                Ok(o) => {
                    let mut v = serde_json::to_value(o).unwrap_or(Value::Null);
                    v["transcript_seq"] = json!(env.seq);
                    v
                }
                Err(msg) => {
                    log::warn!("transcript #{} failed: {msg}", env.seq);
                    json!({"transcript_seq": env.seq, "outcome": "error", "message": msg})
                }
            };
            self.log.push(EventRecord {
                t: self.ticks,
                kind: "outcome".into(),
                topic: None,
                seq: None,
                payload,
            });
            if let Some(hook) = self.outcome_hook.as_mut() {
                hook(env.seq, &outcome);
            }
            handled.push((env.seq, outcome));
        }
        handled
    }

    /// Applies pending goals and stops in publish order.
    fn apply_nav_commands(&mut self) {
        for env in drain_merged(&[&self.goals, &self.stops]) {
            let state = std::mem::replace(&mut self.state, RobotState::at(&self.sim.start));
            self.state = match &env.payload {
                Payload::Goal(goal) => on_goal(state, goal, &self.site, &self.bus),
                Payload::Stop(_) => on_stop(state),
                _ => state,
            };
        }
    }

    /// One logical step: handle utterances, apply commands, advance the robot.
    pub fn step(&mut self) {
        self.process_transcripts();
        self.apply_nav_commands();
        let state = std::mem::replace(&mut self.state, RobotState::at(&self.sim.start));
        self.state = tick(state, &self.sim, &self.bus);
        self.flush_log();
        if let Some(speaker) = self.speaker.as_mut() {
            let now = self.ticks * self.sim.tick_ms;
            self.speak_reports.extend(speaker.poll(now));
        }
        self.ticks += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptLine {
    Utterance(String),
    Tick(u64),
}

/// Parses a replay script: one utterance per line, `#tick N` advances logical
/// time by N ticks, other `#` lines and blank lines are ignored.
pub fn parse_script(text: &str) -> Result<Vec<ScriptLine>, SessionError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#tick") {
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                continue;
            }
            let n = rest.trim().parse::<u64>().map_err(|_| SessionError::Script {
                line: i + 1,
                reason: format!("expected `#tick N`, got {line:?}"),
            })?;
            lines.push(ScriptLine::Tick(n));
        } else if !line.starts_with('#') {
            lines.push(ScriptLine::Utterance(line.to_string()));
        }
    }
    Ok(lines)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub final_state: StateMsg,
    pub ticks: u64,
    pub outcomes: Vec<(u64, Result<HandleOutcome, String>)>,
}

/// Plays a script to completion: every line in order, then at least one more
/// tick and as many as needed for the robot to stop moving (bounded by
/// `settle_limit`).
pub fn replay(session: &mut Session, script: &[ScriptLine], settle_limit: u64) -> Result<ReplayReport, SessionError> {
    let mut outcomes = Vec::new();
    for line in script {
        match line {
            ScriptLine::Utterance(text) => outcomes.push(session.inject(text)?),
            ScriptLine::Tick(n) => {
                for _ in 0..*n {
                    session.step();
                }
            }
        }
    }
    let mut settled = 0;
    loop {
        session.step();
        settled += 1;
        if !session.state().is_navigating() || settled >= settle_limit {
            break;
        }
    }
    Ok(ReplayReport {
        final_state: session.state_msg(),
        ticks: session.ticks(),
        outcomes,
    })
}

/// Live loop: steps once per tick period until `shutdown` is set.
pub fn run_session(session: &mut Session, shutdown: &AtomicBool) {
    let period = Duration::from_millis(session.sim_config().tick_ms);
    let mut next = Instant::now();
    while !shutdown.load(Ordering::Relaxed) {
        session.step();
        next += period;
        let now = Instant::now();
        if next > now {
            std::thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}
