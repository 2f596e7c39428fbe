use std::fmt;

use serde::{Deserialize, Serialize};

/// Canonical token form used for all matching: lowercase alphanumeric runs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    /// Start index of the first contiguous occurrence of `needle`.
    pub fn find(&self, needle: &TokenSeq) -> Option<usize> {
        self.find_from(needle, 0)
    }

    pub(crate) fn find_from(&self, needle: &TokenSeq, from: usize) -> Option<usize> {
        if needle.is_empty() || needle.len() > self.len() {
            return None;
        }
        (from..=self.len() - needle.len()).find(|&i| self.0[i..i + needle.len()] == needle.0[..])
    }

    pub fn contains(&self, needle: &TokenSeq) -> bool {
        self.find(needle).is_some()
    }

    pub fn slice_from(&self, start: usize) -> TokenSeq {
        TokenSeq(self.0.get(start..).unwrap_or_default().to_vec())
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Lowercases `text` and splits it on every run of non-alphanumeric characters.
pub fn normalize(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    TokenSeq(
        lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn utterance_tokenizes() {
        assert_eq!(
            normalize("Hey A1, take me to the lab.").tokens(),
            toks(&["hey", "a1", "take", "me", "to", "the", "lab"])
        );
        assert!(normalize("").is_empty());
        assert_eq!(normalize("STOP!!").tokens(), toks(&["stop"]));
        assert_eq!(normalize("  --hey__a1--  ").tokens(), toks(&["hey", "a1"]));
    }

    #[test]
    fn keeps_non_ascii_letters() {
        assert_eq!(normalize("Café, ÉTAGE 2").tokens(), toks(&["café", "étage", "2"]));
    }

    #[test]
    fn find_contiguous() {
        let hay = normalize("a b hey a1 c hey a1");
        let needle = normalize("hey a1");
        assert_eq!(hay.find(&needle), Some(2));
        assert_eq!(hay.find_from(&needle, 3), Some(5));
        assert_eq!(normalize("hey b a1").find(&needle), None);
        assert_eq!(hay.find(&TokenSeq::empty()), None);
    }
}
