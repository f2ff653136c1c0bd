//! Passage scoring: similarity (node), coherence (edge), and retrieval
//! prior, combined as `h1 * prior + h2 * node + h3 * edge`.
//!
//! A passage token contributes to the node score when some conversational
//! query token is more similar than the threshold `alpha`; its weight is
//! that best similarity times the turn weight of the matched query token.
//! A pair of passage tokens within the proximity window contributes to the
//! edge score when the graph has an edge above `beta` between them and
//! their best query matches clear `alpha` and name two different query
//! tokens. Both scores normalize by the number of contributors and are 0
//! when nothing qualifies.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convquery::{CqStrategy, ConversationalQuery, IqStrategy};
use crate::corpus::{Conversation, StopwordList, TokenizedPassage};
use crate::embeddings::{best_query_match, EmbeddingStore};
use crate::error::{Error, Result};
use crate::retrieval::CandidateList;
use crate::wpn::WordProximityNetwork;
use crate::{convquery, make_cq};

/// A full run configuration; the JSON form uses these exact field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cq_strategy: CqStrategy,
    pub iq_strategy: IqStrategy,
    /// Node similarity threshold (strict `>`).
    pub alpha: f64,
    /// Edge NPMI threshold (strict `>`).
    pub beta: f64,
    /// Proximity window for edge scoring; must match the graph's build
    /// window when `h3 > 0`.
    pub window: usize,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    /// Candidate depth per retrieval.
    pub k: usize,
    pub run_tag: String,
}

impl RunConfig {
    /// Load and validate a JSON config file.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.alpha) {
            return Err(Error::ConfigInvalid(format!(
                "alpha {} outside [-1, 1]",
                self.alpha
            )));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(Error::ConfigInvalid(format!(
                "beta {} outside [-1, 1]",
                self.beta
            )));
        }
        if self.window < 1 {
            return Err(Error::ConfigInvalid("window must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::ConfigInvalid("k must be >= 1".into()));
        }
        for (name, h) in [("h1", self.h1), ("h2", self.h2), ("h3", self.h3)] {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::ConfigInvalid(format!(
                    "{name} must be a finite non-negative number, got {h}"
                )));
            }
        }
        if self.iq_strategy == IqStrategy::IqUnion && self.h1 != 0.0 {
            return Err(Error::ConfigInvalid(
                "IQ_UNION rankings are incomparable; h1 must be 0".into(),
            ));
        }
        Ok(())
    }

    /// The four shipped configurations.
    ///
    /// * `igraph` — CQ1/IQ1, alpha 0.7, beta 0, h = (0.6, 0.3, 0.1)
    /// * `intu`   — CQ1/IQ1, alpha 0.7, beta 0, h = (0.9, 0.1, 0.0)
    /// * `union`  — CQ1/IQ_UNION, alpha 0.7, beta 0, h = (0, 0.6, 0.4)
    /// * `cqw`    — CQ2/IQ1, alpha 0.85, beta 0, h = (0.6, 0.3, 0.1)
    ///
    /// All use window 3 and candidate depth 1000.
    pub fn preset(name: &str) -> Result<Self> {
        let base = |cq, iq, alpha, h1, h2, h3, tag: &str| RunConfig {
            cq_strategy: cq,
            iq_strategy: iq,
            alpha,
            beta: 0.0,
            window: 3,
            h1,
            h2,
            h3,
            k: 1000,
            run_tag: tag.to_string(),
        };
        match name {
            "igraph" => Ok(base(CqStrategy::Cq1, IqStrategy::Iq1, 0.7, 0.6, 0.3, 0.1, "igraph")),
            "intu" => Ok(base(CqStrategy::Cq1, IqStrategy::Iq1, 0.7, 0.9, 0.1, 0.0, "intu")),
            "union" => Ok(base(
                CqStrategy::Cq1,
                IqStrategy::IqUnion,
                0.7,
                0.0,
                0.6,
                0.4,
                "union",
            )),
            "cqw" => Ok(base(CqStrategy::Cq2, IqStrategy::Iq1, 0.85, 0.6, 0.3, 0.1, "cqw")),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// A candidate passage with its component and combined scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPassage {
    pub passage_id: String,
    pub score_node: f64,
    pub score_edge: f64,
    pub score_indri: f64,
    pub final_score: f64,
    pub retrieval_rank: usize,
}

/// Final ranking for one query: descending score, passage id breaks ties.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRanking {
    pub query_id: String,
    pub entries: Vec<ScoredPassage>,
}

/// Average best-match similarity (times turn weight) over passage tokens
/// whose best match clears `alpha`; 0 when none do.
pub fn node_score(
    tp: &TokenizedPassage,
    cq: &ConversationalQuery,
    emb: &EmbeddingStore,
    alpha: f64,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0u64;
    for token in &tp.tokens {
        if let Some(m) = best_query_match(token, cq, emb) {
            if m.similarity > alpha {
                sum += m.similarity * m.turn_weight;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Average NPMI over in-window token pairs that have a graph edge above
/// `beta` and whose best query matches clear `alpha` and differ; 0 when no
/// pair qualifies.
pub fn edge_score(
    tp: &TokenizedPassage,
    cq: &ConversationalQuery,
    wpn: &WordProximityNetwork,
    emb: &EmbeddingStore,
    alpha: f64,
    beta: f64,
    window: usize,
) -> f64 {
    assert!(window >= 1, "window must be >= 1");
    let matches: Vec<Option<crate::embeddings::QueryMatch>> = tp
        .tokens
        .iter()
        .map(|t| best_query_match(t, cq, emb))
        .collect();

    let mut sum = 0.0;
    let mut count = 0u64;
    let n = tp.tokens.len();
    for j in 0..n {
        let hi = (j + window).min(n.saturating_sub(1));
        for k in j + 1..=hi {
            let Some(npmi) = wpn.edge_npmi(&tp.tokens[j], &tp.tokens[k]) else {
                continue;
            };
            if npmi <= beta {
                continue;
            }
            let (Some(mj), Some(mk)) = (&matches[j], &matches[k]) else {
                continue;
            };
            if mj.similarity > alpha && mk.similarity > alpha && mj.query_token != mk.query_token {
                sum += npmi;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Reciprocal-rank retrieval prior, `1 / rank`.
pub fn indri_prior(rank: usize) -> Result<f64> {
    if rank < 1 {
        return Err(Error::InvalidRank(rank));
    }
    Ok(1.0 / rank as f64)
}

/// Anything that can hand back the ordered, filtered token sequence of a
/// passage: the in-memory store or a loaded index.
pub trait TokenSource: Sync {
    fn tokens_for(&self, id: &str) -> Option<Vec<String>>;
}

impl TokenSource for crate::corpus::PassageStore {
    fn tokens_for(&self, id: &str) -> Option<Vec<String>> {
        self.tokens(id).map(|t| t.to_vec())
    }
}

impl TokenSource for crate::retrieval::InvertedIndex {
    fn tokens_for(&self, id: &str) -> Option<Vec<String>> {
        self.tokens_of(id)
    }
}

/// Score every candidate and produce the final ranking for the turn.
///
/// The retrieval prior is 0 for union candidate lists (their ranks are
/// positional only). Candidates missing from `passages` score 0 on both
/// content components. `stops` must be the list the corpus was tokenized
/// with.
#[allow(clippy::too_many_arguments)]
pub fn rank_passages(
    candidates: &CandidateList,
    conv: &Conversation,
    current_turn: usize,
    cfg: &RunConfig,
    wpn: &WordProximityNetwork,
    emb: &EmbeddingStore,
    passages: &impl TokenSource,
    stops: &StopwordList,
) -> Result<ScoredRanking> {
    cfg.validate()?;
    if candidates.from_union && cfg.h1 != 0.0 {
        return Err(Error::ConfigInvalid(
            "candidates come from a union retrieval; h1 must be 0".into(),
        ));
    }
    if cfg.h3 > 0.0 && cfg.window != wpn.window() {
        return Err(Error::ConfigInvalid(format!(
            "config window {} does not match graph window {}",
            cfg.window,
            wpn.window()
        )));
    }
    if candidates.entries.is_empty() {
        return Err(Error::EmptyCandidates {
            query_id: candidates.query_id.clone(),
        });
    }
    // Priors are computed up front so a malformed rank surfaces as an error
    // rather than an infinity inside the parallel loop.
    let priors: Vec<f64> = candidates
        .entries
        .iter()
        .map(|c| {
            if candidates.from_union {
                Ok(0.0)
            } else {
                indri_prior(c.rank)
            }
        })
        .collect::<Result<_>>()?;

    let cq = make_cq(conv, current_turn, cfg.cq_strategy, stops)?;
    let mut entries: Vec<ScoredPassage> = candidates
        .entries
        .par_iter()
        .zip(priors)
        .map(|(c, score_indri)| {
            let tp = TokenizedPassage {
                id: c.passage_id.clone(),
                tokens: passages.tokens_for(&c.passage_id).unwrap_or_default(),
            };
            let score_node = if cfg.h2 != 0.0 {
                node_score(&tp, &cq, emb, cfg.alpha)
            } else {
                0.0
            };
            let score_edge = if cfg.h3 != 0.0 {
                edge_score(&tp, &cq, wpn, emb, cfg.alpha, cfg.beta, cfg.window)
            } else {
                0.0
            };
            let final_score = cfg.h1 * score_indri + cfg.h2 * score_node + cfg.h3 * score_edge;
            ScoredPassage {
                passage_id: c.passage_id.clone(),
                score_node,
                score_edge,
                score_indri,
                final_score,
                retrieval_rank: c.rank,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.passage_id.cmp(&b.passage_id))
    });
    Ok(ScoredRanking {
        query_id: candidates.query_id.clone(),
        entries,
    })
}

/// Convenience wrapper: formulate the retrieval query for the turn, fetch
/// candidates, and rank them. Used by the CLI per (conversation, turn).
#[allow(clippy::too_many_arguments)]
pub fn rank_turn(
    query_id: &str,
    index: &crate::retrieval::InvertedIndex,
    conv: &Conversation,
    current_turn: usize,
    cfg: &RunConfig,
    wpn: &WordProximityNetwork,
    emb: &EmbeddingStore,
    stops: &StopwordList,
) -> Result<ScoredRanking> {
    let queries = convquery::make_iq(conv, current_turn, cfg.iq_strategy, stops)?;
    let candidates = if cfg.iq_strategy == IqStrategy::IqUnion {
        index.retrieve_union(query_id, &queries, cfg.k)?
    } else {
        index.retrieve(query_id, &queries[0], cfg.k)?
    };
    rank_passages(&candidates, conv, current_turn, cfg, wpn, emb, index, stops)
}
