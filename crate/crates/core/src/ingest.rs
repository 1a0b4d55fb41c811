//! Transcript ingestion.
//!
//! Two input formats are understood: CHAT (`.cha`) transcripts, of which only
//! a documented subset is interpreted, and plain text split into sentences.
//! Both produce a [`Transcript`] of participant utterances in file order.
//!
//! CHAT handling covers headers (`@`), main speaker tiers (`*XXX:`), dependent
//! tiers (`%xxx:`, ignored), tab-indented continuation lines, time-alignment
//! bullets, bracket codes, retracings, fillers and unintelligible markers.
//! Anything inside square brackets that is not a retracing marker is removed
//! together with its brackets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PARTICIPANT_TIER: &str = "PAR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Chat,
    PlainText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub index: usize,
    pub raw_text: String,
    pub speaker: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub source_format: SourceFormat,
}

impl Transcript {
    fn from_texts(id: &str, texts: Vec<String>, speaker: &str, source_format: SourceFormat) -> Self {
        let utterances = texts
            .into_iter()
            .filter(|t| !t.is_empty())
            .enumerate()
            .map(|(index, raw_text)| Utterance {
                index,
                raw_text,
                speaker: speaker.to_string(),
            })
            .collect();
        Transcript {
            id: id.to_string(),
            utterances,
            source_format,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatOptions {
    /// Speaker code of the tier treated as the participant, without `*` or `:`.
    pub participant_tier: String,
}

impl Default for ChatOptions {
    fn default() -> Self {
        ChatOptions {
            participant_tier: DEFAULT_PARTICIPANT_TIER.to_string(),
        }
    }
}

/// Decode UTF-8, skipping a leading byte-order mark.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    Ok(std::str::from_utf8(bytes)?)
}

pub fn parse_chat(id: &str, bytes: &[u8], options: &ChatOptions) -> Result<Transcript> {
    let text = decode_utf8(bytes)?;

    // Join continuation lines onto the tier line they belong to.
    let mut tiers: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.starts_with('\t') && !tiers.is_empty() {
            let last = tiers.last_mut().expect("non-empty");
            last.push(' ');
            last.push_str(line.trim());
        } else {
            tiers.push(line.to_string());
        }
    }

    let mut found = false;
    let mut texts = Vec::new();
    for tier in &tiers {
        let Some(rest) = tier.strip_prefix('*') else {
            continue;
        };
        let Some((code, body)) = rest.split_once(':') else {
            continue;
        };
        if code.trim() != options.participant_tier {
            continue;
        }
        found = true;
        let stripped = strip_chat_markup(body);
        // a bare terminator left after stripping carries no speech
        if stripped.chars().any(char::is_alphanumeric) {
            texts.push(stripped);
        }
    }

    if !found {
        return Err(Error::MalformedChat(format!(
            "no *{}: tier found",
            options.participant_tier
        )));
    }
    Ok(Transcript::from_texts(
        id,
        texts,
        &options.participant_tier,
        SourceFormat::Chat,
    ))
}

/// Split plain text into sentences on `.`, `?` and `!`.
///
/// Runs of terminators stay together, as do closing quotes or brackets that
/// directly follow a terminator.
pub fn parse_plain(id: &str, bytes: &[u8]) -> Result<Transcript> {
    let text = decode_utf8(bytes)?;
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if is_terminator(c) {
            while let Some(&next) = chars.peek() {
                if is_terminator(next) || is_closing(next) {
                    current.push(next);
                    chars.next();
                } else {
                    break;
                }
            }
            sentences.push(collapse_whitespace(&current));
            current.clear();
        }
    }
    sentences.push(collapse_whitespace(&current));
    Ok(Transcript::from_texts(
        id,
        sentences,
        DEFAULT_PARTICIPANT_TIER,
        SourceFormat::PlainText,
    ))
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | '»' | ')' | ']')
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Word(String),
    Code(String),
    GroupOpen,
    GroupClose,
}

const RETRACE_LOOKBACK: usize = 4;

/// Strip CHAT markup from the body of a main tier line.
pub(crate) fn strip_chat_markup(body: &str) -> String {
    let body = remove_bullets(body);
    let items = scan_items(&body);

    let mut out: Vec<Item> = Vec::new();
    let mut group_starts: Vec<usize> = Vec::new();
    let mut closed_group: Option<usize> = None;
    for (pos, item) in items.iter().enumerate() {
        match item {
            Item::GroupOpen => {
                group_starts.push(out.len());
                closed_group = None;
            }
            Item::GroupClose => {
                closed_group = group_starts.pop();
            }
            Item::Code(code) => {
                if is_retrace(code) {
                    if let Some(start) = closed_group {
                        out.truncate(start);
                    } else {
                        retract_before(&mut out, next_word(&items[pos + 1..]));
                    }
                }
                // Other codes (and a group they annotate) are transparent.
                closed_group = None;
            }
            Item::Word(w) => {
                out.push(Item::Word(w.clone()));
                closed_group = None;
            }
        }
    }

    let words: Vec<String> = out
        .into_iter()
        .filter_map(|item| match item {
            Item::Word(w) => clean_word(&w),
            _ => None,
        })
        .collect();
    words.join(" ")
}

fn remove_bullets(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut inside = false;
    for c in s.chars() {
        if c == '\u{15}' {
            inside = !inside;
            continue;
        }
        if !inside {
            out.push(c);
        }
    }
    out
}

fn scan_items(s: &str) -> Vec<Item> {
    let mut items = Vec::new();
    let mut word = String::new();
    let mut chars = s.chars();
    let flush = |word: &mut String, items: &mut Vec<Item>| {
        if !word.is_empty() {
            items.push(Item::Word(std::mem::take(word)));
        }
    };
    while let Some(c) = chars.next() {
        match c {
            '[' => {
                flush(&mut word, &mut items);
                let code: String = chars.by_ref().take_while(|&c| c != ']').collect();
                items.push(Item::Code(code.trim().to_string()));
            }
            ']' => flush(&mut word, &mut items),
            '<' => {
                flush(&mut word, &mut items);
                items.push(Item::GroupOpen);
            }
            '>' => {
                flush(&mut word, &mut items);
                items.push(Item::GroupClose);
            }
            c if c.is_whitespace() => flush(&mut word, &mut items),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut items);
    items
}

fn is_retrace(code: &str) -> bool {
    matches!(code, "/" | "//" | "///" | "/-" | "/?")
}

fn next_word(items: &[Item]) -> Option<String> {
    items.iter().find_map(|item| match item {
        Item::Word(w) => clean_word(w).map(|w| w.to_lowercase()),
        _ => None,
    })
}

/// Remove retraced material in front of a retracing marker that has no
/// explicit `<...>` scope. When the speaker restarts with a word that occurs
/// within the last few words, everything from that occurrence on is the
/// retraced span; otherwise only the preceding word is.
fn retract_before(out: &mut Vec<Item>, restart: Option<String>) {
    let word_positions: Vec<usize> = out
        .iter()
        .enumerate()
        .filter_map(|(i, item)| matches!(item, Item::Word(_)).then_some(i))
        .collect();
    if let Some(restart) = restart {
        for &i in word_positions.iter().rev().take(RETRACE_LOOKBACK) {
            if let Item::Word(w) = &out[i] {
                if clean_word(w).map(|w| w.to_lowercase()).as_deref() == Some(restart.as_str()) {
                    out.truncate(i);
                    return;
                }
            }
        }
    }
    if let Some(&last) = word_positions.last() {
        out.truncate(last);
    }
}

const DROPPED_SYMBOLS: &[char] = &[
    ':', '^', 'ˈ', 'ˌ', '≠', '↫', '⌈', '⌉', '⌊', '⌋', '↑', '↓', '‡', '„', '\t', '•', '·',
];

/// Clean one CHAT word, or `None` when the token carries no speech.
fn clean_word(word: &str) -> Option<String> {
    if word.starts_with('&') || word.starts_with('+') || word.starts_with('0') {
        return None;
    }
    let base = match word.find('@') {
        Some(at) => &word[..at],
        None => word,
    };
    let lower = base.to_lowercase();
    if matches!(lower.as_str(), "xxx" | "yyy" | "www" | "xx" | "yy") {
        return None;
    }
    if base.starts_with('(') && base.ends_with(')') && !base.chars().any(char::is_alphabetic) {
        // pause markers such as (.) and (1.5)
        return None;
    }
    let cleaned: String = base
        .chars()
        .filter(|c| !matches!(c, '(' | ')') && !DROPPED_SYMBOLS.contains(c))
        .collect();
    (!cleaned.is_empty()).then_some(cleaned)
}
