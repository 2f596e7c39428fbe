//! Payloads carried on the bus and the standard topic names.
//!
//! These structs are also the JSON wire schemas used by the gateway and the
//! event log, so field names here are part of the external contract.

use serde::{Deserialize, Serialize};

use crate::navcore::{Cell, GoalPose, Path};

pub const TOPIC_TRANSCRIPT: &str = "speech.transcript";
pub const TOPIC_GOAL: &str = "nav.goal";
pub const TOPIC_STOP: &str = "nav.stop";
pub const TOPIC_SAY: &str = "speech.say";
pub const TOPIC_STATE: &str = "robot.state";

/// One recognized utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMsg {
    pub text: String,
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Navigation goal for a named location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalMsg {
    pub location_id: String,
    pub pose: GoalPose,
}

/// Text for the robot to speak.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechOutMsg {
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopMsg {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusLabel {
    Idle,
    Navigating,
    Stopped,
}

/// Snapshot of the simulated robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub floor_id: String,
    pub cell: Cell,
    pub heading_rad: f64,
    pub status: StatusLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_location_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Path>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Transcript,
    Goal,
    SpeechOut,
    State,
    Stop,
}

impl PayloadKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PayloadKind::Transcript => "transcript",
            PayloadKind::Goal => "goal",
            PayloadKind::SpeechOut => "speech_out",
            PayloadKind::State => "state",
            PayloadKind::Stop => "stop",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    Transcript(TranscriptMsg),
    Goal(GoalMsg),
    SpeechOut(SpeechOutMsg),
    State(StateMsg),
    Stop(StopMsg),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Transcript(_) => PayloadKind::Transcript,
            Payload::Goal(_) => PayloadKind::Goal,
            Payload::SpeechOut(_) => PayloadKind::SpeechOut,
            Payload::State(_) => PayloadKind::State,
            Payload::Stop(_) => PayloadKind::Stop,
        }
    }
}

/// Topic/kind pairs every session registers at startup.
pub const STANDARD_TOPICS: [(&str, PayloadKind); 5] = [
    (TOPIC_TRANSCRIPT, PayloadKind::Transcript),
    (TOPIC_GOAL, PayloadKind::Goal),
    (TOPIC_STOP, PayloadKind::Stop),
    (TOPIC_SAY, PayloadKind::SpeechOut),
    (TOPIC_STATE, PayloadKind::State),
];
