//! CIU inventory, dictionary loading and CIU extraction from tokens.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{fold_phrase, Token};

pub const DEFAULT_LEXICON_JSON: &str = include_str!("../data/lexicon.json");

pub const CIU_COUNT: u8 = 23;

/// Canonical labels and short display names, indexed by item number − 1.
const INVENTORY: [(&str, &str); CIU_COUNT as usize] = [
    ("Boy", "Boy"),
    ("Girl", "Girl"),
    ("Woman", "Woman"),
    ("Kitchen", "Kitchen"),
    ("Outside", "Outside"),
    ("Cookie", "Cookie"),
    ("Jar", "Jar"),
    ("Stool", "Stool"),
    ("Sink", "Sink"),
    ("Plate", "Plate"),
    ("Dishcloth", "Dishcloth"),
    ("Water", "Water"),
    ("Window", "Window"),
    ("Cupboard", "Cupboard"),
    ("Dishes", "Dishes"),
    ("Curtains", "Curtains"),
    ("Boy taking/stealing", "Taking"),
    ("Boy or stool falling", "Falling"),
    ("Woman drying/washing plates/dishes", "Washing"),
    ("Water overflowing/spilling", "Overflowing"),
    ("Action performed by the girl", "GirlAction"),
    ("Woman unconcerned by overflowing", "Unconcerned"),
    ("Woman indifferent to the children", "Indifferent"),
];

/// Item number of a content information unit, 1..=23.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct CiuId(u8);

impl CiuId {
    pub fn new(value: i64) -> Result<Self> {
        if (1..=i64::from(CIU_COUNT)).contains(&value) {
            Ok(CiuId(value as u8))
        } else {
            Err(Error::UnknownCiuId(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        INVENTORY[usize::from(self.0) - 1].0
    }

    pub fn short_name(self) -> &'static str {
        INVENTORY[usize::from(self.0) - 1].1
    }

    pub fn all() -> impl Iterator<Item = CiuId> {
        (1..=CIU_COUNT).map(CiuId)
    }
}

impl fmt::Display for CiuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for CiuId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = i64::deserialize(deserializer)?;
        CiuId::new(value).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiuMatch {
    pub ciu: CiuId,
    pub token_index: usize,
    pub sentence_index: usize,
    pub matched_word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiuSequence {
    pub transcript_id: String,
    pub matches: Vec<CiuMatch>,
}

impl CiuSequence {
    pub fn ids(&self) -> Vec<CiuId> {
        self.matches.iter().map(|m| m.ciu).collect()
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiwordEntry {
    pub tokens: Vec<String>,
    pub cius: Vec<CiuId>,
    /// Spelling variant of another dictionary word; not a separate word.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_of: Option<String>,
}

impl MultiwordEntry {
    pub fn phrase(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CiuLabel {
    id: i64,
    label: String,
    #[serde(default)]
    short: Option<String>,
}

/// JSON object read as a list of pairs so duplicate keys stay visible.
#[derive(Debug, Default)]
struct EntryList(Vec<(String, Vec<i64>)>);

impl<'de> Deserialize<'de> for EntryList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntryVisitor;
        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = EntryList;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of word to CIU id list")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<EntryList, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<i64>>()? {
                    pairs.push((k, v));
                }
                Ok(EntryList(pairs))
            }
        }
        deserializer.deserialize_map(EntryVisitor)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    version: String,
    #[serde(default)]
    cius: Vec<CiuLabel>,
    entries: EntryList,
    #[serde(default)]
    multiword: Vec<RawMultiword>,
    #[serde(default)]
    low_precision: Vec<String>,
    #[serde(default)]
    notes: Vec<Note>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMultiword {
    tokens: Vec<String>,
    cius: Vec<i64>,
    #[serde(default)]
    variant_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct Phrase {
    tokens: Vec<String>,
    cius: Vec<CiuId>,
    word: String,
    low_precision: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Hit {
    cius: Vec<CiuId>,
    word: String,
    low_precision: bool,
}

/// Validated CIU dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    version: String,
    labels: BTreeMap<CiuId, String>,
    entries: BTreeMap<String, Vec<CiuId>>,
    multiword: Vec<MultiwordEntry>,
    low_precision: BTreeSet<String>,
    notes: Vec<Note>,
    single: HashMap<String, Hit>,
    /// Longest first.
    phrases: Vec<Phrase>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::from_json(DEFAULT_LEXICON_JSON.as_bytes()).expect("bundled lexicon is valid")
    }
}

fn to_ids(word: &str, raw: &[i64]) -> Result<Vec<CiuId>> {
    if raw.is_empty() {
        return Err(Error::schema(format!("entry {word:?} has no CIU ids")));
    }
    let ids = raw.iter().map(|&v| CiuId::new(v)).collect::<Result<Vec<_>>>()?;
    let distinct: BTreeSet<_> = ids.iter().collect();
    if distinct.len() != ids.len() {
        return Err(Error::ConflictingEntry {
            word: word.to_string(),
            detail: "emission list repeats a CIU id".into(),
        });
    }
    Ok(ids)
}

impl Lexicon {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: LexiconFile = serde_json::from_slice(bytes)?;

        let mut labels = BTreeMap::new();
        for c in &file.cius {
            let id = CiuId::new(c.id)?;
            if labels.insert(id, c.label.clone()).is_some() {
                return Err(Error::schema(format!("CIU {id} is listed twice")));
            }
        }
        for id in CiuId::all() {
            labels.entry(id).or_insert_with(|| id.label().to_string());
        }

        let low_precision: BTreeSet<String> = file.low_precision.iter().cloned().collect();

        let mut entries: BTreeMap<String, Vec<CiuId>> = BTreeMap::new();
        for (word, raw) in &file.entries.0 {
            let ids = to_ids(word, raw)?;
            if let Some(existing) = entries.get(word) {
                if *existing != ids {
                    return Err(Error::ConflictingEntry {
                        word: word.clone(),
                        detail: format!("listed twice with {existing:?} and {ids:?}"),
                    });
                }
            }
            entries.insert(word.clone(), ids);
        }

        let mut multiword = Vec::new();
        for raw in &file.multiword {
            if raw.tokens.is_empty() {
                return Err(Error::schema("multiword entry without tokens"));
            }
            let cius = to_ids(&raw.tokens.join(" "), &raw.cius)?;
            multiword.push(MultiwordEntry {
                tokens: raw.tokens.clone(),
                cius,
                variant_of: raw.variant_of.clone(),
            });
        }

        for entry in &multiword {
            let Some(target) = &entry.variant_of else { continue };
            let canonical = entries
                .get(target)
                .or_else(|| multiword.iter().find(|m| &m.phrase() == target).map(|m| &m.cius));
            match canonical {
                Some(cius) if *cius == entry.cius => {}
                Some(cius) => {
                    return Err(Error::ConflictingEntry {
                        word: entry.phrase(),
                        detail: format!("variant of {target:?} maps to {:?}, not {cius:?}", entry.cius),
                    })
                }
                None => {
                    return Err(Error::schema(format!(
                        "{:?} is a variant of unknown word {target:?}",
                        entry.phrase()
                    )))
                }
            }
        }

        // Build the matching indexes over folded forms.
        let mut single: HashMap<String, Hit> = HashMap::new();
        let mut phrases: Vec<Phrase> = Vec::new();
        let mut add = |word: &str, tokens: Vec<String>, cius: &[CiuId], flagged: bool| -> Result<()> {
            match tokens.len() {
                0 => Err(Error::schema(format!("entry {word:?} folds to nothing"))),
                1 => {
                    let key = tokens.into_iter().next().expect("one token");
                    match single.get(&key) {
                        Some(hit) if hit.cius != cius => Err(Error::ConflictingEntry {
                            word: word.to_string(),
                            detail: format!("folds to {key:?}, already mapped to {:?}", hit.cius),
                        }),
                        Some(_) => Ok(()),
                        None => {
                            single.insert(
                                key,
                                Hit {
                                    cius: cius.to_vec(),
                                    word: word.to_string(),
                                    low_precision: flagged,
                                },
                            );
                            Ok(())
                        }
                    }
                }
                _ => match phrases.iter().find(|p| p.tokens == tokens) {
                    Some(p) if p.cius != cius => Err(Error::ConflictingEntry {
                        word: word.to_string(),
                        detail: format!("folds to {:?}, already mapped to {:?}", tokens, p.cius),
                    }),
                    Some(_) => Ok(()),
                    None => {
                        phrases.push(Phrase {
                            tokens,
                            cius: cius.to_vec(),
                            word: word.to_string(),
                            low_precision: flagged,
                        });
                        Ok(())
                    }
                },
            }
        };
        for (word, cius) in &entries {
            add(word, fold_phrase(word), cius, low_precision.contains(word))?;
        }
        for entry in &multiword {
            let phrase = entry.phrase();
            let tokens: Vec<String> = entry.tokens.iter().flat_map(|t| fold_phrase(t)).collect();
            add(&phrase, tokens, &entry.cius, low_precision.contains(&phrase))?;
        }
        phrases.sort_by(|a, b| {
            b.tokens
                .len()
                .cmp(&a.tokens.len())
                .then_with(|| a.tokens.cmp(&b.tokens))
        });

        Ok(Lexicon {
            version: file.version,
            labels,
            entries,
            multiword,
            low_precision,
            notes: file.notes,
            single,
            phrases,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn label(&self, id: CiuId) -> &str {
        self.labels.get(&id).map(String::as_str).unwrap_or(id.label())
    }

    /// Single-word entries as written in the dictionary file.
    pub fn entries(&self) -> &BTreeMap<String, Vec<CiuId>> {
        &self.entries
    }

    pub fn multiword(&self) -> &[MultiwordEntry] {
        &self.multiword
    }

    pub fn low_precision(&self) -> &BTreeSet<String> {
        &self.low_precision
    }

    pub fn notes(&self) -> &[Note] {
        &self.notes
    }

    /// Every `(word, CIU)` pair, counting multiword spelling variants under
    /// the word they are a variant of.
    pub fn word_pairs(&self) -> BTreeSet<(String, CiuId)> {
        let mut pairs = BTreeSet::new();
        for (word, cius) in &self.entries {
            pairs.extend(cius.iter().map(|&c| (word.clone(), c)));
        }
        for entry in &self.multiword {
            let word = entry.variant_of.clone().unwrap_or_else(|| entry.phrase());
            pairs.extend(entry.cius.iter().map(|&c| (word.clone(), c)));
        }
        pairs
    }

    fn lookup(&self, key: &str, options: &ExtractOptions) -> Option<&Hit> {
        self.single
            .get(key)
            .filter(|hit| options.include_low_precision || !hit.low_precision)
    }

    fn phrase_at(&self, tokens: &[Token], options: &ExtractOptions) -> Option<&Phrase> {
        let sentence = tokens.first()?.sentence_index;
        self.phrases.iter().find(|p| {
            (options.include_low_precision || !p.low_precision)
                && p.tokens.len() <= tokens.len()
                && p.tokens
                    .iter()
                    .zip(tokens)
                    .all(|(want, tok)| tok.sentence_index == sentence && *want == tok.surface)
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Match entries flagged as low precision (e.g. "three").
    pub include_low_precision: bool,
}

/// Map a token stream to its CIU sequence.
///
/// Multiword entries are tried first at each position (longest first), then
/// the surface form, then the lemma. A hyphenated token whose joined form
/// misses is retried piece by piece. Within one sentence each CIU is emitted
/// at most once.
pub fn extract_cius(transcript_id: &str, tokens: &[Token], lexicon: &Lexicon, options: &ExtractOptions) -> CiuSequence {
    let mut matches = Vec::new();
    let mut seen: BTreeSet<CiuId> = BTreeSet::new();
    let mut current_sentence = None;
    let mut emit = |matches: &mut Vec<CiuMatch>, tok: &Token, cius: &[CiuId], word: &str| {
        if current_sentence != Some(tok.sentence_index) {
            current_sentence = Some(tok.sentence_index);
            seen.clear();
        }
        for &ciu in cius {
            if seen.insert(ciu) {
                matches.push(CiuMatch {
                    ciu,
                    token_index: tok.token_index,
                    sentence_index: tok.sentence_index,
                    matched_word: word.to_string(),
                });
            }
        }
    };

    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        if let Some(phrase) = lexicon.phrase_at(&tokens[i..], options) {
            emit(&mut matches, tok, &phrase.cius, &phrase.word);
            i += phrase.tokens.len();
            continue;
        }
        let hit = lexicon
            .lookup(&tok.surface, options)
            .or_else(|| lexicon.lookup(&tok.lemma, options));
        if let Some(hit) = hit {
            emit(&mut matches, tok, &hit.cius, &hit.word);
        } else {
            for part in &tok.parts {
                let hit = lexicon
                    .lookup(&part.surface, options)
                    .or_else(|| lexicon.lookup(&part.lemma, options));
                if let Some(hit) = hit {
                    emit(&mut matches, tok, &hit.cius, &hit.word);
                }
            }
        }
        i += 1;
    }

    CiuSequence {
        transcript_id: transcript_id.to_string(),
        matches,
    }
}
