//! Conversational query formulation: which turns of a conversation feed
//! the scorer (cq) and the retriever (iq), and with what weights.
//!
//! Turn weights decay as `t/T` except for the first and current turns,
//! which always receive full weight.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Conversation, StopwordList};
use crate::error::{Error, Result};

/// Turn-selection strategy for the scoring query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CqStrategy {
    /// Current and first turn, unweighted.
    #[serde(rename = "CQ1")]
    Cq1,
    /// Current, previous, and first turn; previous decayed to `(T-1)/T`.
    #[serde(rename = "CQ2")]
    Cq2,
    /// All turns with decayed weights.
    #[serde(rename = "CQ3")]
    Cq3,
}

/// Turn-selection strategy for the retrieval query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IqStrategy {
    /// Current, previous, and first turn, unweighted.
    #[serde(rename = "IQ1")]
    Iq1,
    /// Current, two previous, and first turn, unweighted.
    #[serde(rename = "IQ2")]
    Iq2,
    /// All turns, weighted.
    #[serde(rename = "IQ3")]
    Iq3,
    /// All three of the above issued separately; candidates are unioned.
    #[serde(rename = "IQ_UNION")]
    IqUnion,
}

impl fmt::Display for CqStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CqStrategy::Cq1 => "CQ1",
            CqStrategy::Cq2 => "CQ2",
            CqStrategy::Cq3 => "CQ3",
        })
    }
}

impl fmt::Display for IqStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IqStrategy::Iq1 => "IQ1",
            IqStrategy::Iq2 => "IQ2",
            IqStrategy::Iq3 => "IQ3",
            IqStrategy::IqUnion => "IQ_UNION",
        })
    }
}

impl FromStr for CqStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CQ1" => Ok(CqStrategy::Cq1),
            "CQ2" => Ok(CqStrategy::Cq2),
            "CQ3" => Ok(CqStrategy::Cq3),
            other => Err(Error::ConfigInvalid(format!("unknown cq strategy {other:?}"))),
        }
    }
}

impl FromStr for IqStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IQ1" => Ok(IqStrategy::Iq1),
            "IQ2" => Ok(IqStrategy::Iq2),
            "IQ3" => Ok(IqStrategy::Iq3),
            "IQ_UNION" => Ok(IqStrategy::IqUnion),
            other => Err(Error::ConfigInvalid(format!("unknown iq strategy {other:?}"))),
        }
    }
}

/// Weight of turn `t` in a conversation currently at turn `total`:
/// 1 for the first and current turns, `t/total` otherwise.
pub fn turn_weight(t: usize, total: usize) -> Result<f64> {
    if t == 0 || t > total {
        return Err(Error::TurnOutOfRange { t, total });
    }
    if t == 1 || t == total {
        Ok(1.0)
    } else {
        Ok(t as f64 / total as f64)
    }
}

/// One scoring-query entry: a token from turn `turn` carrying that
/// turn's weight. The same token may appear once per contributing turn.
#[derive(Debug, Clone, PartialEq)]
pub struct CqEntry {
    pub token: String,
    pub turn: usize,
    pub weight: f64,
}

/// The conversational query used for node and edge scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationalQuery {
    entries: Vec<CqEntry>,
    current_turn: usize,
    strategy: CqStrategy,
}

impl ConversationalQuery {
    pub fn entries(&self) -> &[CqEntry] {
        &self.entries
    }

    pub fn current_turn(&self) -> usize {
        self.current_turn
    }

    pub fn strategy(&self) -> CqStrategy {
        self.strategy
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One weighted group of a retrieval query (the tokens of one turn).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub tokens: Vec<String>,
    pub weight: f64,
}

/// A retrieval query: weighted turn groups fed to the ranker together.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRetrievalQuery {
    pub groups: Vec<QueryGroup>,
    pub strategy: IqStrategy,
}

impl WeightedRetrievalQuery {
    /// All tokens across groups, duplicates preserved.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().flat_map(|g| g.tokens.iter().map(String::as_str))
    }
}

/// Selected turns for a strategy, newest first, out-of-range references
/// dropped and duplicates collapsed.
fn select_turns(selectors: &[isize], current: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for &s in selectors {
        if s >= 1 && s as usize <= current {
            let t = s as usize;
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

fn cq_turns(strategy: CqStrategy, current: usize) -> Vec<usize> {
    let t = current as isize;
    match strategy {
        CqStrategy::Cq1 => select_turns(&[t, 1], current),
        CqStrategy::Cq2 => select_turns(&[t, t - 1, 1], current),
        CqStrategy::Cq3 => (1..=current).rev().collect(),
    }
}

fn iq_turns(strategy: IqStrategy, current: usize) -> Vec<usize> {
    let t = current as isize;
    match strategy {
        IqStrategy::Iq1 => select_turns(&[t, t - 1, 1], current),
        IqStrategy::Iq2 => select_turns(&[t, t - 1, t - 2, 1], current),
        IqStrategy::Iq3 => (1..=current).rev().collect(),
        IqStrategy::IqUnion => unreachable!("union expands to IQ1..IQ3"),
    }
}

/// Build the conversational query for the conversation prefix ending at
/// turn `current`.
///
/// Tokens are stopword-filtered with the shared tokenizer and deduplicated
/// within each turn; a token appearing in several selected turns keeps one
/// entry per turn with that turn's weight.
pub fn make_cq(
    conv: &Conversation,
    current: usize,
    strategy: CqStrategy,
    stops: &StopwordList,
) -> Result<ConversationalQuery> {
    if current == 0 || current > conv.turns.len() {
        return Err(Error::TurnOutOfRange {
            t: current,
            total: conv.turns.len(),
        });
    }
    let mut entries = Vec::new();
    for t in cq_turns(strategy, current) {
        let weight = turn_weight(t, current)?;
        let mut seen = Vec::new();
        for token in tokenize(conv.turn(t)?, stops) {
            if seen.contains(&token) {
                continue;
            }
            seen.push(token.clone());
            entries.push(CqEntry { token, turn: t, weight });
        }
    }
    Ok(ConversationalQuery {
        entries,
        current_turn: current,
        strategy,
    })
}

/// Build the retrieval query (or queries, for the union strategy) for the
/// conversation prefix ending at turn `current`.
///
/// Unweighted strategies use weight 1 for every group; the weighted
/// strategy uses [`turn_weight`]. Duplicate tokens within a turn are kept:
/// they are genuine occurrences to the query-likelihood model.
pub fn make_iq(
    conv: &Conversation,
    current: usize,
    strategy: IqStrategy,
    stops: &StopwordList,
) -> Result<Vec<WeightedRetrievalQuery>> {
    if current == 0 || current > conv.turns.len() {
        return Err(Error::TurnOutOfRange {
            t: current,
            total: conv.turns.len(),
        });
    }
    if strategy == IqStrategy::IqUnion {
        let mut queries = Vec::with_capacity(3);
        for sub in [IqStrategy::Iq1, IqStrategy::Iq2, IqStrategy::Iq3] {
            queries.extend(make_iq(conv, current, sub, stops)?);
        }
        return Ok(queries);
    }

    let weighted = strategy == IqStrategy::Iq3;
    let mut groups = Vec::new();
    for t in iq_turns(strategy, current) {
        let weight = if weighted { turn_weight(t, current)? } else { 1.0 };
        groups.push(QueryGroup {
            tokens: tokenize(conv.turn(t)?, stops),
            weight,
        });
    }
    Ok(vec![WeightedRetrievalQuery { groups, strategy }])
}
