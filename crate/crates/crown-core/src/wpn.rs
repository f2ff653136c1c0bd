//! Word proximity network: windowed co-occurrence counting, NPMI edge
//! weights, and a versioned binary graph file.
//!
//! Counting walks every tokenized passage once and, for each position `j`,
//! counts the unordered pair `(p_j, p_k)` for every `k` with
//! `j < k <= j + window` inside the same passage. Probabilities are then
//! estimated as `p(x,y) = c(x,y) / N_pair` and `p(x) = c(x) / N_tok`, and
//!
//! ```text
//! npmi(x,y) = log2(p(x,y) / (p(x) * p(y))) / -log2(p(x,y))
//! ```
//!
//! with `npmi = 1` when `p(x,y) = 1`. Tokens are interned to `u32` ids so
//! corpus-scale counting stays compact.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::binio;
use crate::corpus::PassageStore;
use crate::error::{Error, Result};

const WPN_MAGIC: &[u8; 4] = b"WPN1";

type GraphForm<'a> = (Vec<&'a str>, Vec<((&'a str, &'a str), u64)>, usize);

// Passages per rayon work unit when counting.
const COUNT_CHUNK: usize = 512;

/// Token and window-pair counts over a corpus.
///
/// Pair keys are unordered; internally they are canonicalized by interned
/// id, and exposed with the lexicographically smaller token first.
#[derive(Debug, Clone)]
pub struct CooccurrenceCounts {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    token_count: Vec<u64>,
    pair_count: HashMap<(u32, u32), u64>,
    total_tokens: u64,
    total_pairs: u64,
    window: usize,
}

impl CooccurrenceCounts {
    /// Assemble counts directly, e.g. from an external counting pipeline or
    /// a test fixture. Totals are taken as given and may exceed the sums of
    /// the supplied maps when the maps are a filtered view.
    pub fn from_parts(
        token_count: impl IntoIterator<Item = (String, u64)>,
        pair_count: impl IntoIterator<Item = ((String, String), u64)>,
        total_tokens: u64,
        total_pairs: u64,
        window: usize,
    ) -> Self {
        let mut counts = Self {
            tokens: Vec::new(),
            ids: HashMap::new(),
            token_count: Vec::new(),
            pair_count: HashMap::new(),
            total_tokens,
            total_pairs,
            window,
        };
        for (tok, c) in token_count {
            let id = counts.intern(&tok);
            counts.token_count[id as usize] = c;
        }
        for ((x, y), c) in pair_count {
            let a = counts.intern(&x);
            let b = counts.intern(&y);
            counts.pair_count.insert(canonical(a, b), c);
        }
        counts
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        self.token_count.push(0);
        id
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    /// Occurrence count `c(x)`, 0 if never seen.
    pub fn token_count(&self, token: &str) -> u64 {
        self.ids
            .get(token)
            .map(|&id| self.token_count[id as usize])
            .unwrap_or(0)
    }

    /// Window co-occurrence count `c(x,y)`, 0 if never counted. Symmetric.
    pub fn pair_count(&self, x: &str, y: &str) -> u64 {
        match (self.ids.get(x), self.ids.get(y)) {
            (Some(&a), Some(&b)) => self.pair_count.get(&canonical(a, b)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Sum of all stored token counts (equals `total_tokens` for counts
    /// produced by [`count_cooccurrences`]).
    pub fn sum_token_counts(&self) -> u64 {
        self.token_count.iter().sum()
    }

    /// Sum of all stored pair counts (equals `total_pairs` for counts
    /// produced by [`count_cooccurrences`]).
    pub fn sum_pair_counts(&self) -> u64 {
        self.pair_count.values().sum()
    }

    /// Pairs with the lexicographically smaller token first.
    pub fn pairs(&self) -> impl Iterator<Item = ((&str, &str), u64)> {
        self.pair_count.iter().map(move |(&(a, b), &c)| {
            let (x, y) = (&self.tokens[a as usize], &self.tokens[b as usize]);
            if x <= y {
                ((x.as_str(), y.as_str()), c)
            } else {
                ((y.as_str(), x.as_str()), c)
            }
        })
    }
}

fn canonical(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Count token occurrences and window co-occurrences over a store.
///
/// Pairs never cross passage boundaries. Counting is partitioned across
/// threads; the merge is a plain sum, so the result is deterministic.
pub fn count_cooccurrences(store: &PassageStore, window: usize) -> CooccurrenceCounts {
    assert!(window >= 1, "window must be >= 1");

    // Sequential interning pass keeps ids in first-occurrence order.
    let mut tokens = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut doc_ids: Vec<Vec<u32>> = Vec::with_capacity(store.len());
    for tp in store.tokenized() {
        let seq = tp
            .tokens
            .iter()
            .map(|t| {
                if let Some(&id) = ids.get(t) {
                    id
                } else {
                    let id = tokens.len() as u32;
                    tokens.push(t.clone());
                    ids.insert(t.clone(), id);
                    id
                }
            })
            .collect();
        doc_ids.push(seq);
    }

    let mut token_count = vec![0u64; tokens.len()];
    for seq in &doc_ids {
        for &id in seq {
            token_count[id as usize] += 1;
        }
    }
    let total_tokens: u64 = token_count.iter().sum();

    let pair_count = doc_ids
        .par_chunks(COUNT_CHUNK)
        .fold(HashMap::new, |mut acc: HashMap<(u32, u32), u64>, chunk| {
            for seq in chunk {
                for j in 0..seq.len() {
                    let hi = (j + window).min(seq.len().saturating_sub(1));
                    for k in j + 1..=hi {
                        *acc.entry(canonical(seq[j], seq[k])).or_insert(0) += 1;
                    }
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let total_pairs: u64 = pair_count.values().sum();

    CooccurrenceCounts {
        tokens,
        ids,
        token_count,
        pair_count,
        total_tokens,
        total_pairs,
        window,
    }
}

/// Normalized pointwise mutual information of a counted pair, in `[-1, 1]`.
///
/// Errors with [`Error::NoCooccurrence`] when the pair was never counted;
/// callers treat that as "no edge". `p(x,y) = 1` yields the limit value 1.
/// The result is clamped to `[-1, 1]`: with pair probabilities normalized
/// by window pairs and token probabilities by token occurrences, degenerate
/// corpora (e.g. two tokens alternating inside one short passage) can push
/// the raw ratio above 1.
pub fn npmi(counts: &CooccurrenceCounts, x: &str, y: &str) -> Result<f64> {
    let c_xy = counts.pair_count(x, y);
    if c_xy == 0 {
        return Err(Error::NoCooccurrence {
            x: x.to_string(),
            y: y.to_string(),
        });
    }
    if c_xy == counts.total_pairs {
        return Ok(1.0);
    }
    let p_xy = c_xy as f64 / counts.total_pairs as f64;
    let p_x = counts.token_count(x) as f64 / counts.total_tokens as f64;
    let p_y = counts.token_count(y) as f64 / counts.total_tokens as f64;
    let pmi = (p_xy / (p_x * p_y)).log2();
    Ok((pmi / -p_xy.log2()).clamp(-1.0, 1.0))
}

/// The graph: nodes are corpus tokens, edges are pairs co-occurring at
/// least `min_pair_count` times, weighted by NPMI.
#[derive(Debug, Clone)]
pub struct WordProximityNetwork {
    nodes: Vec<String>,
    ids: HashMap<String, u32>,
    edges: HashMap<(u32, u32), f64>,
    window: usize,
}

impl WordProximityNetwork {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn has_edge(&self, x: &str, y: &str) -> bool {
        self.edge_npmi(x, y).is_some()
    }

    /// Stored NPMI for the pair, or `None` when there is no edge.
    /// Symmetric in its arguments.
    pub fn edge_npmi(&self, x: &str, y: &str) -> Option<f64> {
        match (self.ids.get(x), self.ids.get(y)) {
            (Some(&a), Some(&b)) => self.edges.get(&canonical(a, b)).copied(),
            _ => None,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    /// Edges with the lexicographically smaller token first.
    pub fn edges(&self) -> impl Iterator<Item = ((&str, &str), f64)> {
        self.edges.iter().map(move |(&(a, b), &w)| {
            let (x, y) = (&self.nodes[a as usize], &self.nodes[b as usize]);
            if x <= y {
                ((x.as_str(), y.as_str()), w)
            } else {
                ((y.as_str(), x.as_str()), w)
            }
        })
    }

    /// Sorted edge list with NPMI bit patterns, used for structural
    /// comparison independent of internal id assignment.
    fn canonical_form(&self) -> GraphForm<'_> {
        let mut nodes: Vec<&str> = self.nodes().collect();
        nodes.sort_unstable();
        let mut edges: Vec<((&str, &str), u64)> = self
            .edges()
            .map(|(pair, w)| (pair, w.to_bits()))
            .collect();
        edges.sort_unstable();
        (nodes, edges, self.window)
    }

    /// Write the graph: magic `WPN1`, window, sorted node table, sorted edge
    /// table of `(node index, node index, f64 npmi)`. Byte-stable for equal
    /// graphs.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(WPN_MAGIC).map_err(|e| Error::io(path, e))?;
        binio::write_u32(&mut w, path, self.window as u32)?;

        let mut order: Vec<u32> = (0..self.nodes.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| self.nodes[a as usize].cmp(&self.nodes[b as usize]));
        let mut rank = vec![0u32; self.nodes.len()];
        for (sorted_pos, &old) in order.iter().enumerate() {
            rank[old as usize] = sorted_pos as u32;
        }

        binio::write_u64(&mut w, path, self.nodes.len() as u64)?;
        for &old in &order {
            binio::write_str(&mut w, path, &self.nodes[old as usize])?;
        }

        let mut edges: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .map(|(&(a, b), &wgt)| {
                let (ra, rb) = canonical(rank[a as usize], rank[b as usize]);
                (ra, rb, wgt)
            })
            .collect();
        edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
        binio::write_u64(&mut w, path, edges.len() as u64)?;
        for (a, b, wgt) in edges {
            binio::write_u32(&mut w, path, a)?;
            binio::write_u32(&mut w, path, b)?;
            binio::write_f64(&mut w, path, wgt)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read a graph written by [`WordProximityNetwork::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        binio::expect_magic(&mut r, path, WPN_MAGIC)?;
        let window = binio::read_u32(&mut r, path)? as usize;

        let node_count = binio::read_u64(&mut r, path)? as usize;
        let mut nodes = Vec::with_capacity(node_count);
        let mut ids = HashMap::with_capacity(node_count);
        for _ in 0..node_count {
            let token = binio::read_str(&mut r, path)?;
            ids.insert(token.clone(), nodes.len() as u32);
            nodes.push(token);
        }

        let edge_count = binio::read_u64(&mut r, path)? as usize;
        let mut edges = HashMap::with_capacity(edge_count);
        for _ in 0..edge_count {
            let a = binio::read_u32(&mut r, path)?;
            let b = binio::read_u32(&mut r, path)?;
            let wgt = binio::read_f64(&mut r, path)?;
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::parse(path, 0, "edge endpoint out of range"));
            }
            edges.insert(canonical(a, b), wgt);
        }
        Ok(Self {
            nodes,
            ids,
            edges,
            window,
        })
    }
}

impl PartialEq for WordProximityNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

/// Admit an edge for every counted pair with `c(x,y) >= min_pair_count`,
/// excluding self-pairs. Nodes are all counted tokens regardless of edges.
pub fn build_wpn(counts: &CooccurrenceCounts, min_pair_count: u64) -> WordProximityNetwork {
    assert!(min_pair_count >= 1, "min_pair_count must be >= 1");
    let mut edges = HashMap::new();
    for (&(a, b), &c) in &counts.pair_count {
        if a == b || c < min_pair_count {
            continue;
        }
        let x = &counts.tokens[a as usize];
        let y = &counts.tokens[b as usize];
        let weight = npmi(counts, x, y).expect("counted pair must have npmi");
        assert!((-1.0..=1.0).contains(&weight));
        edges.insert((a, b), weight);
    }
    WordProximityNetwork {
        nodes: counts.tokens.clone(),
        ids: counts.ids.clone(),
        edges,
        window: counts.window,
    }
}
