//! Passage collections, conversation topics, and the shared tokenizer.
//!
//! Every piece of text in the pipeline (passages, queries, qrels ids aside)
//! goes through [`tokenize`] with one stopword list, so similarity and
//! co-occurrence computations always see the same token stream.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Lowercased stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Empty list; tokenization keeps every token.
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list compiled into the crate.
    pub fn bundled_english() -> Self {
        Self::from_lines(BUNDLED_STOPWORDS.lines())
    }

    /// Load from a UTF-8 file, one token per line; `#`-prefixed lines and
    /// blank lines are ignored. Entries are lowercased.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(text.lines()))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    fn from_lines<'a>(lines: impl Iterator<Item = &'a str>) -> Self {
        Self::from_words(
            lines
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries in sorted order (for serialization).
    pub fn sorted_words(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

/// Lowercase, split on any non-alphanumeric character (Unicode-aware),
/// drop stopwords, keep original order.
///
/// Total function: empty input yields an empty sequence. Numerals are
/// alphanumeric runs and are kept.
pub fn tokenize(text: &str, stops: &StopwordList) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !stops.contains(t))
        .map(str::to_string)
        .collect()
}

/// A raw passage from the collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

/// A passage reduced to its filtered token sequence. Positions are indices
/// into `tokens`, i.e. post-filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPassage {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Immutable collection of passages plus their tokenizations and the
/// stopword list they were produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageStore {
    passages: Vec<Passage>,
    tokenized: Vec<TokenizedPassage>,
    by_id: HashMap<String, usize>,
    stops: StopwordList,
}

impl PassageStore {
    /// Load a TSV collection: one `id<TAB>text` line per passage, no header.
    pub fn load_collection(path: impl AsRef<Path>, stops: &StopwordList) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected id<TAB>text"))?;
            if id.is_empty() {
                return Err(Error::parse(path, lineno, "empty passage id"));
            }
            if body.is_empty() {
                return Err(Error::parse(path, lineno, "empty passage text"));
            }
            pairs.push((id.to_string(), body.to_string()));
        }
        Self::from_pairs(pairs, stops)
    }

    /// Build a store from `(id, text)` pairs. Fails on duplicate or empty ids
    /// and on empty texts; line numbers in errors refer to pair order.
    pub fn from_pairs<I>(pairs: I, stops: &StopwordList) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut passages = Vec::new();
        let mut tokenized = Vec::new();
        let mut by_id = HashMap::new();
        for (i, (id, text)) in pairs.into_iter().enumerate() {
            let lineno = i + 1;
            if id.is_empty() || text.is_empty() {
                return Err(Error::Validation(format!(
                    "passage {lineno}: id and text must be non-empty"
                )));
            }
            if by_id.insert(id.clone(), passages.len()).is_some() {
                return Err(Error::DuplicateId { id, line: lineno });
            }
            tokenized.push(TokenizedPassage {
                id: id.clone(),
                tokens: tokenize(&text, stops),
            });
            passages.push(Passage { id, text });
        }
        Ok(Self {
            passages,
            tokenized,
            by_id,
            stops: stops.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    pub fn tokens(&self, id: &str) -> Option<&[String]> {
        self.by_id.get(id).map(|&i| self.tokenized[i].tokens.as_slice())
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn tokenized(&self) -> &[TokenizedPassage] {
        &self.tokenized
    }

    pub fn stopwords(&self) -> &StopwordList {
        &self.stops
    }
}

/// A conversation topic: ordered raw utterances, 1-based turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub id: String,
    pub title: String,
    pub description: String,
    pub turns: Vec<String>,
}

impl Conversation {
    /// Raw utterance of 1-based turn `t`.
    pub fn turn(&self, t: usize) -> Result<&str> {
        if t == 0 || t > self.turns.len() {
            return Err(Error::TurnOutOfRange {
                t,
                total: self.turns.len(),
            });
        }
        Ok(&self.turns[t - 1])
    }
}

#[derive(Deserialize)]
struct RawTopic {
    number: serde_json::Value,
    title: String,
    description: String,
    turns: Vec<RawTurn>,
}

#[derive(Deserialize)]
struct RawTurn {
    number: u64,
    raw_utterance: String,
}

fn id_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Load a JSON topics file: an array of
/// `{number, title, description, turns: [{number, raw_utterance}]}`.
///
/// Turns are reordered by their turn number, which must be 1-based and
/// contiguous.
pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Conversation>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<RawTopic> = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;

    let mut out = Vec::with_capacity(raw.len());
    for topic in raw {
        let id = id_string(&topic.number)
            .ok_or_else(|| Error::Validation("topic number must be a string or number".into()))?;
        if topic.turns.is_empty() {
            return Err(Error::Validation(format!("topic {id}: turns must be non-empty")));
        }
        let mut turns = topic.turns;
        turns.sort_by_key(|t| t.number);
        for (i, t) in turns.iter().enumerate() {
            if t.number != (i + 1) as u64 {
                return Err(Error::Validation(format!(
                    "topic {id}: turn numbers must be contiguous from 1 (found {} at position {})",
                    t.number,
                    i + 1
                )));
            }
        }
        out.push(Conversation {
            id,
            title: topic.title,
            description: topic.description,
            turns: turns.into_iter().map(|t| t.raw_utterance).collect(),
        });
    }
    Ok(out)
}
