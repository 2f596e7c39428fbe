//! Speech command pipeline: normalize a transcript, gate it on the wake
//! phrase, look up keywords in the word dictionary, then publish a goal or
//! stop plus a spoken reply.

mod lexicon;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{
    load_lexicon, EntryDocument, LexEntry, Lexicon, LexiconDocument, LexiconFile, WakeConfig,
    DEFAULT_WAKE_PHRASE,
};
pub use text::{normalize, TokenSeq};

pub use crate::messages::TranscriptMsg as Transcript;
use crate::messages::{GoalMsg, Payload, SpeechOutMsg, StopMsg, TOPIC_GOAL, TOPIC_SAY, TOPIC_STOP};
use crate::msgbus::{Bus, BusError};
use crate::navcore::{resolve_location, SiteMap};

#[derive(Debug, Error)]
pub enum SpeechError {
    #[error("lexicon schema error: {0}")]
    Schema(String),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("wake phrase must contain at least one word")]
    EmptyWakePhrase,
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error(transparent)]
    Bus(#[from] BusError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateResult {
    /// Tokens strictly after the first wake-phrase occurrence.
    Pass(TokenSeq),
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Intent {
    GoTo { location_id: String },
    Stop,
    Unknown { remainder: TokenSeq },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HandleOutcome {
    Ignored,
    Commanded { intent: Intent },
}

pub fn gate_wake_word(tokens: &TokenSeq, cfg: &WakeConfig) -> GateResult {
    match tokens.find(cfg.phrase()) {
        Some(i) => GateResult::Pass(tokens.slice_from(i + cfg.phrase().len())),
        None => GateResult::Ignore,
    }
}

/// Maps the post-wake tokens to an intent.
///
/// Any stop keyword wins. Otherwise the location keyword whose occurrence
/// starts earliest is chosen, preferring the longer keyword and then the
/// earlier lexicon entry on ties.
pub fn parse_intent(remainder: &TokenSeq, lex: &Lexicon) -> Intent {
    if lex.stop_keywords().iter().any(|kw| remainder.contains(kw)) {
        return Intent::Stop;
    }
    // (start, -len, entry order)
    let mut best: Option<(usize, std::cmp::Reverse<usize>, usize, &str)> = None;
    for (order, entry) in lex.entries().iter().enumerate() {
        for kw in &entry.keywords {
            if let Some(start) = remainder.find(kw) {
                let key = (start, std::cmp::Reverse(kw.len()), order, entry.location_id.as_str());
                if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                    best = Some(key);
                }
            }
        }
    }
    match best {
        Some((.., location_id)) => Intent::GoTo {
            location_id: location_id.to_string(),
        },
        None => Intent::Unknown {
            remainder: remainder.clone(),
        },
    }
}

pub fn compose_response(intent: &Intent, site: &SiteMap) -> Result<String, SpeechError> {
    Ok(match intent {
        Intent::GoTo { location_id } => {
            let name = site
                .display_name(location_id)
                .ok_or_else(|| SpeechError::UnknownLocation(location_id.clone()))?;
            format!("Okay, navigating to the {name}.")
        }
        Intent::Stop => "Okay, stopping.".to_string(),
        Intent::Unknown { .. } => "Sorry, I did not understand.".to_string(),
    })
}

/// Runs one transcript through the pipeline and publishes its effects.
///
/// Nothing is published for gated-out speech. Everything that can fail is
/// resolved before the first publish, so an error leaves the bus untouched.
pub fn handle_transcript(
    transcript: &Transcript,
    cfg: &WakeConfig,
    lex: &Lexicon,
    site: &SiteMap,
    bus: &Bus,
) -> Result<HandleOutcome, SpeechError> {
    let tokens = normalize(&transcript.text);
    let remainder = match gate_wake_word(&tokens, cfg) {
        GateResult::Ignore => return Ok(HandleOutcome::Ignored),
        GateResult::Pass(rest) => rest,
    };
    let intent = parse_intent(&remainder, lex);
    let reply = compose_response(&intent, site)?;

    match &intent {
        Intent::GoTo { location_id } => {
            let pose = resolve_location(site, location_id)
                .map_err(|_| SpeechError::UnknownLocation(location_id.clone()))?;
            bus.publish_to(
                TOPIC_GOAL,
                Payload::Goal(GoalMsg {
                    location_id: location_id.clone(),
                    pose,
                }),
            )?;
        }
        Intent::Stop => {
            bus.publish_to(TOPIC_STOP, Payload::Stop(StopMsg {}))?;
        }
        Intent::Unknown { .. } => {}
    }
    bus.publish_to(TOPIC_SAY, Payload::SpeechOut(SpeechOutMsg { text: reply }))?;
    Ok(HandleOutcome::Commanded { intent })
}
