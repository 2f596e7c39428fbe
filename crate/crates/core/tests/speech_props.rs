mod common;

use std::sync::LazyLock;

use common::{fixture_lexicon, fixture_site};
use guidebot::msgbus::Bus;
use guidebot::navcore::SiteMap;
use guidebot::speechflow::{
    gate_wake_word, handle_transcript, normalize, GateResult, LexiconFile, TokenSeq, Transcript, WakeConfig,
};
use proptest::prelude::*;

static SITE: LazyLock<SiteMap> = LazyLock::new(fixture_site);
static LEX: LazyLock<LexiconFile> = LazyLock::new(fixture_lexicon);

const WORDS: [&str; 12] = [
    "hey", "a1", "take", "me", "to", "the", "lab", "office", "stop", "rover", "okay", "please",
];

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()).prop_map(str::to_owned), 0..10)
}

fn contains(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn mangle(words: &[String], upper: &[bool], seps: &[&str]) -> String {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let w = if upper[i % upper.len()] { w.to_uppercase() } else { w.clone() };
            format!("{w}{}", seps[i % seps.len()])
        })
        .collect()
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in any::<String>()) {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once.join()), once.clone());
        for t in once.tokens() {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(char::is_alphanumeric));
        }
    }

    #[test]
    fn gate_ignores_case_and_punctuation(
        ws in words(),
        upper in prop::collection::vec(any::<bool>(), 1..4),
        seps in prop::collection::vec(prop::sample::select(vec![" ", ", ", "!! ", "...", " -- ", "?"]), 1..4),
    ) {
        let cfg = WakeConfig::default();
        let plain = ws.join(" ");
        let noisy = mangle(&ws, &upper, &seps);
        prop_assert_eq!(
            gate_wake_word(&normalize(&plain), &cfg),
            gate_wake_word(&normalize(&noisy), &cfg)
        );
    }

    #[test]
    fn custom_wake_phrase_passes_exactly_its_utterances(
        phrase in prop::collection::vec(prop::sample::select(WORDS.to_vec()).prop_map(str::to_owned), 1..3),
        ws in words(),
    ) {
        let cfg = WakeConfig::new(&phrase.join(" ")).unwrap();
        let tokens = normalize(&ws.join(" "));
        let passes = matches!(gate_wake_word(&tokens, &cfg), GateResult::Pass(_));
        prop_assert_eq!(passes, contains(&ws, &phrase));
        if let GateResult::Pass(rest) = gate_wake_word(&tokens, &cfg) {
            let start = ws.windows(phrase.len()).position(|w| w == &phrase[..]).unwrap();
            prop_assert_eq!(rest.tokens(), &ws[start + phrase.len()..]);
        }
    }

    #[test]
    fn unwaked_speech_publishes_nothing(ws in words()) {
        let wake = ["hey".to_string(), "a1".to_string()];
        prop_assume!(!contains(&ws, &wake));
        let bus = Bus::with_standard_topics();
        let mon = bus.monitor();
        let t = Transcript { text: ws.join(" "), timestamp_ms: 0, confidence: None };
        let out = handle_transcript(&t, &LEX.wake, &LEX.lexicon, &SITE, &bus).unwrap();
        prop_assert_eq!(out, guidebot::speechflow::HandleOutcome::Ignored);
        prop_assert!(mon.drain().is_empty());
    }

    #[test]
    fn handling_is_deterministic_with_single_command(ws in words()) {
        let t = Transcript { text: format!("hey a1 {}", ws.join(" ")), timestamp_ms: 0, confidence: None };
        let run = || {
            let bus = Bus::with_standard_topics();
            let mon = bus.monitor();
            let out = handle_transcript(&t, &LEX.wake, &LEX.lexicon, &SITE, &bus).unwrap();
            (out, mon.drain().into_iter().map(|e| e.payload).collect::<Vec<_>>())
        };
        let (a, pa) = run();
        let (b, pb) = run();
        prop_assert_eq!(a, b);
        prop_assert_eq!(&pa, &pb);
        let commands = pa.iter().filter(|p| matches!(p, guidebot::messages::Payload::Goal(_) | guidebot::messages::Payload::Stop(_))).count();
        prop_assert!(commands <= 1);
    }
}

#[test]
fn empty_phrase_rejected() {
    assert!(WakeConfig::new("").is_err());
    assert!(WakeConfig::from_tokens(TokenSeq::empty()).is_err());
}
