use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::text::{normalize, TokenSeq};
use super::SpeechError;
use crate::navcore::SiteMap;

pub const DEFAULT_WAKE_PHRASE: &str = "hey a1";

/// Wake phrase that must appear in an utterance before it is acted on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WakeConfig {
    phrase: TokenSeq,
}

impl WakeConfig {
    /// Normalizes `phrase`; fails when nothing alphanumeric remains.
    pub fn new(phrase: &str) -> Result<Self, SpeechError> {
        let phrase = normalize(phrase);
        if phrase.is_empty() {
            return Err(SpeechError::EmptyWakePhrase);
        }
        Ok(Self { phrase })
    }

    pub fn from_tokens(phrase: TokenSeq) -> Result<Self, SpeechError> {
        if phrase.is_empty() {
            return Err(SpeechError::EmptyWakePhrase);
        }
        Ok(Self { phrase })
    }

    pub fn phrase(&self) -> &TokenSeq {
        &self.phrase
    }
}

impl Default for WakeConfig {
    fn default() -> Self {
        Self::new(DEFAULT_WAKE_PHRASE).expect("default phrase")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub location_id: String,
    pub keywords: Vec<TokenSeq>,
}

/// The word dictionary: keyword phrases (with aliases) for each location, plus
/// the phrases that mean "stop".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    stop_keywords: Vec<TokenSeq>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            stop_keywords: vec![normalize("stop")],
        }
    }
}

impl Lexicon {
    pub fn new(stop_keywords: &[&str]) -> Result<Self, SpeechError> {
        let mut lex = Self {
            entries: Vec::new(),
            stop_keywords: Vec::new(),
        };
        for kw in stop_keywords {
            lex.add_stop_keyword(kw)?;
        }
        Ok(lex)
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn stop_keywords(&self) -> &[TokenSeq] {
        &self.stop_keywords
    }

    pub fn add_stop_keyword(&mut self, keyword: &str) -> Result<(), SpeechError> {
        let kw = non_empty(keyword)?;
        if !self.stop_keywords.contains(&kw) {
            self.stop_keywords.push(kw);
        }
        Ok(())
    }

    /// Adds keywords for `location_id`, creating the entry if needed.
    /// Keywords already claimed by any entry are rejected.
    pub fn add_entry(&mut self, location_id: &str, keywords: &[&str]) -> Result<(), SpeechError> {
        if keywords.is_empty() {
            return Err(SpeechError::InvalidLexicon(format!(
                "entry {location_id:?} needs at least one keyword"
            )));
        }
        let mut fresh = Vec::with_capacity(keywords.len());
        for kw in keywords {
            let kw = non_empty(kw)?;
            if self.owner_of(&kw).is_some() || fresh.contains(&kw) {
                return Err(SpeechError::InvalidLexicon(format!(
                    "keyword {:?} is used more than once",
                    kw.join()
                )));
            }
            fresh.push(kw);
        }
        match self.entries.iter_mut().find(|e| e.location_id == location_id) {
            Some(entry) => entry.keywords.extend(fresh),
            None => self.entries.push(LexEntry {
                location_id: location_id.to_string(),
                keywords: fresh,
            }),
        }
        Ok(())
    }

    /// Location that owns an exact keyword phrase.
    pub fn owner_of(&self, keyword: &TokenSeq) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.keywords.contains(keyword))
            .map(|e| e.location_id.as_str())
    }

    pub fn contains_location(&self, location_id: &str) -> bool {
        self.entries.iter().any(|e| e.location_id == location_id)
    }

    /// Every referenced location must exist in `site`.
    pub fn validate_against(&self, site: &SiteMap) -> Result<(), SpeechError> {
        for entry in &self.entries {
            if site.location(&entry.location_id).is_none() {
                return Err(SpeechError::InvalidLexicon(format!(
                    "entries: location_id {:?} is not defined in the map",
                    entry.location_id
                )));
            }
        }
        Ok(())
    }
}

fn non_empty(keyword: &str) -> Result<TokenSeq, SpeechError> {
    let kw = normalize(keyword);
    if kw.is_empty() {
        return Err(SpeechError::InvalidLexicon(format!(
            "keyword {keyword:?} has no alphanumeric content"
        )));
    }
    Ok(kw)
}

/// Lexicon file schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconDocument {
    #[serde(default = "default_wake")]
    pub wake_phrase: String,
    #[serde(default = "default_stop")]
    pub stop_keywords: Vec<String>,
    pub entries: Vec<EntryDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDocument {
    pub location_id: String,
    pub keywords: Vec<String>,
}

fn default_wake() -> String {
    DEFAULT_WAKE_PHRASE.to_string()
}

fn default_stop() -> Vec<String> {
    vec!["stop".to_string()]
}

/// Everything a lexicon file configures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconFile {
    pub wake: WakeConfig,
    pub lexicon: Lexicon,
}

/// Parses a lexicon file. Keywords are normalized; cross-checking against a
/// map is left to [`Lexicon::validate_against`].
pub fn load_lexicon(document: &str) -> Result<LexiconFile, SpeechError> {
    let doc: LexiconDocument =
        serde_json::from_str(document).map_err(|e| SpeechError::Schema(e.to_string()))?;
    let wake = WakeConfig::new(&doc.wake_phrase)?;
    let stops: Vec<&str> = doc.stop_keywords.iter().map(String::as_str).collect();
    let mut lexicon = Lexicon::new(&stops)?;
    let mut seen = HashSet::new();
    for (i, entry) in doc.entries.iter().enumerate() {
        if !seen.insert(entry.location_id.as_str()) {
            return Err(SpeechError::InvalidLexicon(format!(
                "entries[{i}]: duplicate location_id {:?}",
                entry.location_id
            )));
        }
        let kws: Vec<&str> = entry.keywords.iter().map(String::as_str).collect();
        lexicon
            .add_entry(&entry.location_id, &kws)
            .map_err(|e| SpeechError::InvalidLexicon(format!("entries[{i}]: {e}")))?;
    }
    Ok(LexiconFile { wake, lexicon })
}
