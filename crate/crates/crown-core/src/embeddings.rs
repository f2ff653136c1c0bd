//! Pretrained word vectors, cosine similarity, and the best-matching
//! query token lookup behind the node and edge conditions.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::convquery::ConversationalQuery;
use crate::error::{Error, Result};

/// Dense word vectors of a fixed dimension, loaded from the textual
/// word2vec format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Entry>,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    vector: Vec<f64>,
    norm: f64,
}

impl EmbeddingStore {
    /// Load a text word-vector file: header `count dim`, then one
    /// `token v1 .. v_dim` line per token. Duplicate tokens keep the last
    /// entry and emit a warning on stderr.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing 'count dim' header"))?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(path, 1, "invalid vector count in header"))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::parse(path, 1, "invalid dimension in header"))?;

        let mut vectors = HashMap::with_capacity(count);
        let mut seen = 0usize;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap().to_string();
            let vector: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(path, lineno, format!("bad float {f:?}")))
                })
                .collect::<Result<_>>()?;
            if vector.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} components, found {}", vector.len()),
                ));
            }
            seen += 1;
            let norm = l2_norm(&vector);
            if vectors.insert(token.clone(), Entry { vector, norm }).is_some() {
                eprintln!("warning: {}: duplicate vector for {token:?}, last entry wins", path.display());
            }
        }
        if seen != count {
            return Err(Error::parse(
                path,
                0,
                format!("header declared {count} vectors, file has {seen}"),
            ));
        }
        Ok(Self { dim, vectors })
    }

    /// Build a store in memory; all vectors must have length `dim`.
    pub fn from_pairs<I, S>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut vectors = HashMap::new();
        for (token, vector) in pairs {
            if vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: vector.len(),
                });
            }
            let norm = l2_norm(&vector);
            vectors.insert(token.into(), Entry { vector, norm });
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|e| e.vector.as_slice())
    }

    fn entry(&self, token: &str) -> Option<&Entry> {
        self.vectors.get(token).filter(|e| e.norm > 0.0)
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity `dot(u,v) / (|u| |v|)`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot / (nu * nv))
}

/// The conversational-query entry most similar to a passage token.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatch {
    pub query_token: String,
    pub similarity: f64,
    pub turn_index: usize,
    pub turn_weight: f64,
}

/// Find the query entry maximizing raw cosine similarity to `token`.
///
/// Returns `None` when `token` has no vector or no query entry is
/// embeddable. Exact similarity ties are broken by larger turn weight,
/// then larger turn index, then lexicographically smaller query token,
/// so the winner is the unique maximizer everywhere downstream.
pub fn best_query_match(
    token: &str,
    cq: &ConversationalQuery,
    store: &EmbeddingStore,
) -> Option<QueryMatch> {
    let target = store.entry(token)?;
    let mut best: Option<QueryMatch> = None;
    for entry in cq.entries() {
        let Some(qvec) = store.entry(&entry.token) else {
            continue;
        };
        let dot: f64 = target.vector.iter().zip(&qvec.vector).map(|(a, b)| a * b).sum();
        let sim = dot / (target.norm * qvec.norm);
        let candidate = QueryMatch {
            query_token: entry.token.clone(),
            similarity: sim,
            turn_index: entry.turn,
            turn_weight: entry.weight,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                sim > b.similarity
                    || (sim == b.similarity
                        && (candidate.turn_weight > b.turn_weight
                            || (candidate.turn_weight == b.turn_weight
                                && (candidate.turn_index > b.turn_index
                                    || (candidate.turn_index == b.turn_index
                                        && candidate.query_token < b.query_token)))))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best
}
