//! Utterance text to lowercase, punctuation-free, lemmatized tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Transcript;

pub const DEFAULT_LEMMA_RULES_JSON: &str = include_str!("../data/lemma_rules.json");

/// One word of a transcript.
///
/// A hyphenated word is kept joined (`highheels`) with its pieces in
/// `parts`; the pieces are alternates that share the word's `token_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub sentence_index: usize,
    pub token_index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<TokenPart>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPart {
    pub surface: String,
    pub lemma: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCondition {
    /// Stem of at least two letters (`ladies`, `dried`).
    PluralIes,
    /// Stem ends in x, z, ch or sh.
    Sibilant,
    /// Stem of at least three letters not ending in s, u or i.
    PluralS,
    /// Stem of at least three letters containing a vowel.
    Verb,
    /// As `Verb`, and the stem does not end in `e` (`need`, `speed`).
    Past,
}

/// Replacement marker requesting stem repair: consonant undoubling or
/// silent-e restoration.
pub const REPAIR_STEM: &str = "~";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub pattern: String,
    pub replacement: String,
    pub condition: Option<RuleCondition>,
}

impl Serialize for SuffixRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let len = if self.condition.is_some() { 3 } else { 2 };
        let mut seq = serializer.serialize_seq(Some(len))?;
        seq.serialize_element(&self.pattern)?;
        seq.serialize_element(&self.replacement)?;
        if let Some(cond) = &self.condition {
            seq.serialize_element(cond)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for SuffixRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RuleVisitor;

        impl<'de> Visitor<'de> for RuleVisitor {
            type Value = SuffixRule;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("[pattern, replacement] or [pattern, replacement, condition]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<SuffixRule, A::Error> {
                let pattern: String = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let replacement: String = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let condition: Option<RuleCondition> = seq.next_element()?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                if pattern.is_empty() {
                    return Err(de::Error::custom("empty suffix pattern"));
                }
                Ok(SuffixRule {
                    pattern,
                    replacement,
                    condition,
                })
            }
        }

        deserializer.deserialize_seq(RuleVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaRules {
    pub irregulars: BTreeMap<String, String>,
    pub suffix_rules: Vec<SuffixRule>,
    #[serde(default)]
    pub protected: BTreeSet<String>,
}

impl Default for LemmaRules {
    fn default() -> Self {
        LemmaRules::from_json(DEFAULT_LEMMA_RULES_JSON.as_bytes()).expect("bundled lemma rules are valid")
    }
}

impl LemmaRules {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let rules: LemmaRules = serde_json::from_slice(bytes)?;
        for (from, to) in &rules.irregulars {
            if to.is_empty() {
                return Err(Error::schema(format!("irregular {from:?} maps to an empty lemma")));
            }
        }
        Ok(rules)
    }

    /// One rewriting step, or `None` when `word` is already a lemma.
    fn step(&self, word: &str) -> Option<String> {
        if self.protected.contains(word) {
            return None;
        }
        if let Some(lemma) = self.irregulars.get(word) {
            return (lemma != word).then(|| lemma.clone());
        }
        for rule in &self.suffix_rules {
            let Some(stem) = word.strip_suffix(rule.pattern.as_str()) else {
                continue;
            };
            if stem.is_empty() || !rule.condition.is_none_or(|c| condition_holds(c, stem)) {
                continue;
            }
            let lemma = if rule.replacement == REPAIR_STEM {
                repair_stem(stem)
            } else {
                format!("{stem}{}", rule.replacement)
            };
            if lemma != word && !lemma.is_empty() {
                return Some(lemma);
            }
        }
        None
    }
}

/// Lemmatize a lowercase, punctuation-free word.
///
/// Steps (irregulars, then the first matching suffix rule) are applied until
/// none applies, so the result is always a fixed point.
pub fn lemmatize(surface: &str, rules: &LemmaRules) -> String {
    let mut current = surface.to_string();
    let mut seen = BTreeSet::new();
    while let Some(next) = rules.step(&current) {
        if !seen.insert(current.clone()) || seen.contains(&next) {
            break;
        }
        current = next;
    }
    current
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn is_consonant_at(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant_at(word, i - 1),
        _ => true,
    }
}

fn condition_holds(condition: RuleCondition, stem: &str) -> bool {
    let bytes = stem.as_bytes();
    let has_vowel = bytes.iter().any(|&c| is_vowel(c) || c == b'y');
    match condition {
        RuleCondition::PluralIes => stem.len() >= 2,
        RuleCondition::Sibilant => {
            stem.len() >= 2
                && (stem.ends_with('x') || stem.ends_with('z') || stem.ends_with("ch") || stem.ends_with("sh"))
        }
        RuleCondition::PluralS => {
            stem.len() >= 3 && !stem.ends_with('s') && !stem.ends_with('u') && !stem.ends_with('i')
        }
        RuleCondition::Verb => stem.len() >= 3 && has_vowel,
        RuleCondition::Past => stem.len() >= 3 && has_vowel && !stem.ends_with('e'),
    }
}

/// Number of vowel-consonant sequences in `word`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let consonant = is_consonant_at(word, i);
        if consonant && prev_vowel {
            m += 1;
        }
        prev_vowel = !consonant;
    }
    m
}

/// Repair a stem left by stripping `-ing` or `-ed`.
fn repair_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n < 2 || !b.is_ascii() {
        return stem.to_string();
    }
    let last = b[n - 1];
    let prev = b[n - 2];

    // getting -> get, running -> run; fall, dress, buzz, stuff keep theirs
    if last == prev && is_consonant_at(b, n - 1) && !matches!(last, b'l' | b's' | b'z' | b'f') {
        return stem[..n - 1].to_string();
    }
    // toppling -> topple, giggling -> giggle
    if last == b'l' && matches!(prev, b'b' | b'c' | b'd' | b'f' | b'g' | b'k' | b'p' | b't' | b'z') {
        return format!("{stem}e");
    }
    // noticing -> notice, waving -> wave, realizing -> realize
    if matches!(last, b'c' | b'v' | b'z') && is_consonant_at(b, n - 1) {
        return format!("{stem}e");
    }
    // taking -> take, wiping -> wipe: a single consonant-vowel-consonant syllable
    if n >= 3
        && measure(b) == 1
        && is_consonant_at(b, n - 1)
        && !is_consonant_at(b, n - 2)
        && is_consonant_at(b, n - 3)
        && !matches!(last, b'w' | b'x' | b'y')
    {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Expand a lowercase word with apostrophes into its component words.
fn expand_clitics(word: &str) -> Vec<String> {
    let word = word.trim_matches(|c| c == '\'' || c == '-');
    if word.is_empty() {
        return Vec::new();
    }
    if word == "gonna" {
        return vec!["going".into(), "to".into()];
    }
    if let Some(stem) = word.strip_suffix("n't") {
        let head = match word {
            "can't" => "can",
            "won't" => "will",
            "shan't" => "shall",
            "ain't" => "is",
            _ => stem,
        };
        return [head, "not"]
            .iter()
            .filter(|w| !w.is_empty())
            .map(|w| w.to_string())
            .collect();
    }
    for (clitic, expansion) in [
        ("'re", "are"),
        ("'ve", "have"),
        ("'ll", "will"),
        ("'m", "am"),
        ("'d", "would"),
    ] {
        if let Some(stem) = word.strip_suffix(clitic) {
            if !stem.is_empty() {
                return vec![stem.to_string(), expansion.to_string()];
            }
        }
    }
    // possessive and contracted 's both reduce to the head word
    let head = word.strip_suffix("'s").unwrap_or(word);
    vec![head.to_string()]
}

/// Split raw utterance text into lowercase words; hyphens are preserved.
fn split_words(text: &str) -> Vec<String> {
    let folded: String = text
        .chars()
        .map(|c| match c {
            '’' | '‘' | 'ʼ' | '`' => '\'',
            '‐' | '‑' | '–' => '-',
            c => c,
        })
        .flat_map(char::to_lowercase)
        .collect();
    folded
        .split(|c: char| !(c.is_alphabetic() || c == '\'' || c == '-'))
        .filter(|chunk| !chunk.is_empty())
        .flat_map(expand_clitics)
        .map(|w| w.replace('\'', ""))
        .filter(|w| w.chars().any(char::is_alphabetic))
        .collect()
}

/// Fold a single lexicon or transcript word into the token form used for
/// matching: lowercase, clitics expanded, apostrophes and hyphens removed.
pub fn fold_phrase(text: &str) -> Vec<String> {
    split_words(text)
        .into_iter()
        .map(|w| w.replace('-', ""))
        .filter(|w| !w.is_empty())
        .collect()
}

/// Tokenize and lemmatize every utterance of a transcript.
pub fn normalize(transcript: &Transcript, rules: &LemmaRules) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (sentence_index, utterance) in transcript.utterances.iter().enumerate() {
        for word in split_words(&utterance.raw_text) {
            let pieces: Vec<&str> = word.split('-').filter(|p| !p.is_empty()).collect();
            if pieces.is_empty() {
                continue;
            }
            let surface = pieces.concat();
            let parts = if pieces.len() > 1 {
                pieces
                    .iter()
                    .map(|p| TokenPart {
                        surface: p.to_string(),
                        lemma: lemmatize(p, rules),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            tokens.push(Token {
                lemma: lemmatize(&surface, rules),
                surface,
                sentence_index,
                token_index: tokens.len(),
                parts,
            });
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_plain;

    fn surfaces(text: &str) -> Vec<String> {
        let t = parse_plain("t", text.as_bytes()).unwrap();
        normalize(&t, &LemmaRules::default())
            .into_iter()
            .map(|t| t.surface)
            .collect()
    }

    #[test]
    fn possessive_dropped() {
        assert_eq!(
            surfaces("I see mom's doing the dishes."),
            ["i", "see", "mom", "doing", "the", "dishes"]
        );
    }

    #[test]
    fn quoted_speech_and_negation() {
        assert_eq!(
            surfaces("“Shh, don’t tell anybody.”"),
            ["shh", "do", "not", "tell", "anybody"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(surfaces("").is_empty());
    }

    #[test]
    fn gonna_and_numerals() {
        assert_eq!(
            surfaces("Kid's gonna fall 3 times!"),
            ["kid", "going", "to", "fall", "times"]
        );
    }

    #[test]
    fn hyphenated_words_keep_parts() {
        let t = parse_plain("t", b"She wears high-heels.").unwrap();
        let tokens = normalize(&t, &LemmaRules::default());
        assert_eq!(tokens[2].surface, "highheels");
        let parts: Vec<_> = tokens[2].parts.iter().map(|p| p.surface.as_str()).collect();
        assert_eq!(parts, ["high", "heels"]);
        assert_eq!(tokens[2].parts[1].lemma, "heel");
    }

    #[test]
    fn indices() {
        let t = parse_plain("t", b"A boy. A girl.").unwrap();
        let tokens = normalize(&t, &LemmaRules::default());
        let idx: Vec<_> = tokens.iter().map(|t| (t.sentence_index, t.token_index)).collect();
        assert_eq!(idx, [(0, 0), (0, 1), (1, 2), (1, 3)]);
    }

    #[test]
    fn lemma_examples() {
        let rules = LemmaRules::default();
        for (word, lemma) in [
            ("dishes", "dish"),
            ("noticing", "notice"),
            ("boy", "boy"),
            ("kids", "kid"),
            ("cookies", "cookie"),
            ("telling", "tell"),
            ("getting", "get"),
            ("children", "child"),
            ("fell", "fall"),
            ("taking", "take"),
            ("wiping", "wipe"),
            ("toppling", "topple"),
            ("dried", "dry"),
            ("ladies", "lady"),
            ("glasses", "glass"),
            ("plates", "plate"),
            ("falling", "fall"),
            ("dressed", "dress"),
            ("spilled", "spill"),
            ("overflowing", "overflow"),
            ("waving", "wave"),
            ("realized", "realize"),
            ("stepping", "step"),
            ("reaching", "reach"),
            ("ties", "tie"),
            ("has", "have"),
            ("his", "his"),
            ("need", "need"),
            ("string", "string"),
            ("seems", "seem"),
        ] {
            assert_eq!(lemmatize(word, &rules), lemma, "{word}");
        }
    }

    #[test]
    fn rules_round_trip_through_json() {
        let rules = LemmaRules::default();
        let json = serde_json::to_string(&rules).unwrap();
        assert_eq!(LemmaRules::from_json(json.as_bytes()).unwrap(), rules);
    }

    #[test]
    fn malformed_rules_rejected() {
        assert!(LemmaRules::from_json(br#"{"irregulars": {}, "suffix_rules": [["s"]]}"#).is_err());
        assert!(LemmaRules::from_json(br#"{"irregulars": {}, "suffix_rules": [["s", "", "nope"]]}"#).is_err());
    }

    #[test]
    fn cyclic_irregulars_terminate() {
        let rules = LemmaRules::from_json(br#"{"irregulars": {"a": "b", "b": "a"}, "suffix_rules": []}"#).unwrap();
        let out = lemmatize("a", &rules);
        assert!(out == "a" || out == "b");
    }

    #[test]
    fn fold_phrase_matches_normalizer() {
        assert_eq!(fold_phrase("doesn't see"), ["does", "not", "see"]);
        assert_eq!(fold_phrase("high-heels"), ["highheels"]);
    }
}
