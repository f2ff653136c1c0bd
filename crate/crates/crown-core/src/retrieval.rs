//! Candidate generation: an inverted index with Dirichlet-smoothed,
//! group-weighted query-likelihood ranking.
//!
//! A document scores
//!
//! ```text
//! score(D) = sum over query token occurrences t of
//!            (g_t / sum of group weights) * ln((tf(t,D) + mu*cf(t)/N) / (|D| + mu))
//! ```
//!
//! where `g_t` is the weight of the token's turn group. Query tokens
//! missing from the vocabulary are skipped; every document in the
//! collection is scored, since smoothing assigns mass to non-matching
//! documents too. Ties are broken by passage id ascending.
//!
//! The index file (`IDX1`) stores the ordered token sequences of every
//! passage along with the stopword list used at build time: downstream
//! ranking needs token positions for proximity scoring and the same
//! stopword filtering for query formulation, and neither is recoverable
//! from bare postings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::binio;
use crate::convquery::WeightedRetrievalQuery;
use crate::corpus::{PassageStore, StopwordList};
use crate::error::{Error, Result};

const IDX_MAGIC: &[u8; 4] = b"IDX1";

/// Default Dirichlet smoothing mass.
pub const DEFAULT_MU: f64 = 2500.0;

/// Inverted index over a passage collection, plus the per-passage token
/// sequences and collection statistics ranking needs.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_tokens: Vec<Vec<u32>>,
    by_id: HashMap<String, u32>,
    vocab: Vec<String>,
    vocab_ids: HashMap<String, u32>,
    postings: Vec<Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    collection_freq: Vec<u64>,
    total_tokens: u64,
    stops: StopwordList,
}

/// One retrieved candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub passage_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Ranked candidates for one query. When `from_union` is set the ranks are
/// positional only (assigned by passage id) and must not feed a rank prior.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub query_id: String,
    pub entries: Vec<Candidate>,
    pub from_union: bool,
}

/// Build the index from a non-empty store.
pub fn build_index(store: &PassageStore) -> Result<InvertedIndex> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut vocab = Vec::new();
    let mut vocab_ids: HashMap<String, u32> = HashMap::new();
    let mut doc_ids = Vec::with_capacity(store.len());
    let mut doc_tokens = Vec::with_capacity(store.len());
    for tp in store.tokenized() {
        doc_ids.push(tp.id.clone());
        let seq: Vec<u32> = tp
            .tokens
            .iter()
            .map(|t| {
                if let Some(&id) = vocab_ids.get(t) {
                    id
                } else {
                    let id = vocab.len() as u32;
                    vocab.push(t.clone());
                    vocab_ids.insert(t.clone(), id);
                    id
                }
            })
            .collect();
        doc_tokens.push(seq);
    }
    Ok(InvertedIndex::assemble(
        doc_ids,
        doc_tokens,
        vocab,
        vocab_ids,
        store.stopwords().clone(),
    ))
}

impl InvertedIndex {
    /// Derive postings, lengths, and collection statistics from the token
    /// sequences; shared by build and load so both produce identical state.
    fn assemble(
        doc_ids: Vec<String>,
        doc_tokens: Vec<Vec<u32>>,
        vocab: Vec<String>,
        vocab_ids: HashMap<String, u32>,
        stops: StopwordList,
    ) -> Self {
        let mut postings: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vocab.len()];
        let mut doc_lengths = Vec::with_capacity(doc_tokens.len());
        let mut collection_freq = vec![0u64; vocab.len()];
        let mut total_tokens = 0u64;
        let mut tf: HashMap<u32, u32> = HashMap::new();
        for (d, seq) in doc_tokens.iter().enumerate() {
            doc_lengths.push(seq.len() as u32);
            total_tokens += seq.len() as u64;
            tf.clear();
            for &t in seq {
                *tf.entry(t).or_insert(0) += 1;
                collection_freq[t as usize] += 1;
            }
            let mut terms: Vec<(u32, u32)> = tf.iter().map(|(&t, &c)| (t, c)).collect();
            terms.sort_unstable_by_key(|&(t, _)| t);
            for (t, c) in terms {
                postings[t as usize].push((d as u32, c));
            }
        }
        let by_id = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Self {
            doc_ids,
            doc_tokens,
            by_id,
            vocab,
            vocab_ids,
            postings,
            doc_lengths,
            collection_freq,
            total_tokens,
            stops,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_length(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).map(|&d| self.doc_lengths[d as usize] as usize)
    }

    pub fn collection_frequency(&self, token: &str) -> u64 {
        self.vocab_ids
            .get(token)
            .map(|&t| self.collection_freq[t as usize])
            .unwrap_or(0)
    }

    /// Postings list for a token as `(passage id, term frequency)`.
    pub fn postings(&self, token: &str) -> Vec<(&str, u32)> {
        match self.vocab_ids.get(token) {
            Some(&t) => self.postings[t as usize]
                .iter()
                .map(|&(d, c)| (self.doc_ids[d as usize].as_str(), c))
                .collect(),
            None => Vec::new(),
        }
    }

    /// The ordered, stopword-filtered token sequence of a passage.
    pub fn tokens_of(&self, id: &str) -> Option<Vec<String>> {
        self.by_id.get(id).map(|&d| {
            self.doc_tokens[d as usize]
                .iter()
                .map(|&t| self.vocab[t as usize].clone())
                .collect()
        })
    }

    /// Stopword list the corpus was tokenized with.
    pub fn stopwords(&self) -> &StopwordList {
        &self.stops
    }

    /// Retrieve the top `k` passages with the default smoothing mass.
    pub fn retrieve(
        &self,
        query_id: &str,
        query: &WeightedRetrievalQuery,
        k: usize,
    ) -> Result<CandidateList> {
        self.retrieve_with_mu(query_id, query, k, DEFAULT_MU)
    }

    /// Retrieve the top `k` passages under Dirichlet smoothing mass `mu`.
    pub fn retrieve_with_mu(
        &self,
        query_id: &str,
        query: &WeightedRetrievalQuery,
        k: usize,
        mu: f64,
    ) -> Result<CandidateList> {
        assert!(k >= 1, "k must be >= 1");
        // Flatten to (token id, group weight) occurrences, skipping
        // out-of-vocabulary tokens.
        let mut flat: Vec<(u32, f64)> = Vec::new();
        let mut weight_sum = 0.0;
        for group in &query.groups {
            weight_sum += group.weight;
            for token in &group.tokens {
                if let Some(&t) = self.vocab_ids.get(token) {
                    flat.push((t, group.weight));
                }
            }
        }
        if flat.is_empty() {
            return Err(Error::EmptyCandidates {
                query_id: query_id.to_string(),
            });
        }

        // Per-token tf lookup tables for the handful of query tokens.
        let mut tf_maps: HashMap<u32, HashMap<u32, u32>> = HashMap::new();
        for &(t, _) in &flat {
            tf_maps
                .entry(t)
                .or_insert_with(|| self.postings[t as usize].iter().copied().collect());
        }

        let n = self.total_tokens as f64;
        let mut scored: Vec<(f64, u32)> = Vec::with_capacity(self.doc_count());
        for d in 0..self.doc_count() as u32 {
            let len = self.doc_lengths[d as usize] as f64;
            let mut score = 0.0;
            for &(t, g) in &flat {
                let tf = tf_maps[&t].get(&d).copied().unwrap_or(0) as f64;
                let p_coll = self.collection_freq[t as usize] as f64 / n;
                score += (g / weight_sum) * ((tf + mu * p_coll) / (len + mu)).ln();
            }
            scored.push((score, d));
        }
        scored.sort_unstable_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| self.doc_ids[a.1 as usize].cmp(&self.doc_ids[b.1 as usize]))
        });
        scored.truncate(k);

        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, d))| Candidate {
                passage_id: self.doc_ids[d as usize].clone(),
                score,
                rank: i + 1,
            })
            .collect();
        Ok(CandidateList {
            query_id: query_id.to_string(),
            entries,
            from_union: false,
        })
    }

    /// Issue each query separately and take the union of the top-`k` sets,
    /// deduplicated by passage id.
    ///
    /// The per-query rankings are incomparable, so union candidates carry
    /// score 0 and positional ranks by passage id ascending; consumers must
    /// not weight a rank prior (`h1 = 0`). Sub-queries with no vocabulary
    /// overlap contribute nothing; only an entirely empty union is an error.
    pub fn retrieve_union(
        &self,
        query_id: &str,
        queries: &[WeightedRetrievalQuery],
        k: usize,
    ) -> Result<CandidateList> {
        let mut ids: Vec<String> = Vec::new();
        for query in queries {
            match self.retrieve(query_id, query, k) {
                Ok(list) => {
                    for c in list.entries {
                        if !ids.contains(&c.passage_id) {
                            ids.push(c.passage_id);
                        }
                    }
                }
                Err(Error::EmptyCandidates { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if ids.is_empty() {
            return Err(Error::EmptyCandidates {
                query_id: query_id.to_string(),
            });
        }
        ids.sort_unstable();
        let entries = ids
            .into_iter()
            .enumerate()
            .map(|(i, passage_id)| Candidate {
                passage_id,
                score: 0.0,
                rank: i + 1,
            })
            .collect();
        Ok(CandidateList {
            query_id: query_id.to_string(),
            entries,
            from_union: true,
        })
    }

    /// Write the index: magic `IDX1`, stopword list, vocabulary, then per
    /// passage its id and token-id sequence. Statistics are rederived on
    /// load.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(IDX_MAGIC).map_err(|e| Error::io(path, e))?;

        let stops = self.stops.sorted_words();
        binio::write_u64(&mut w, path, stops.len() as u64)?;
        for word in stops {
            binio::write_str(&mut w, path, word)?;
        }

        binio::write_u64(&mut w, path, self.vocab.len() as u64)?;
        for token in &self.vocab {
            binio::write_str(&mut w, path, token)?;
        }

        binio::write_u64(&mut w, path, self.doc_ids.len() as u64)?;
        for (id, seq) in self.doc_ids.iter().zip(&self.doc_tokens) {
            binio::write_str(&mut w, path, id)?;
            binio::write_u32(&mut w, path, seq.len() as u32)?;
            for &t in seq {
                binio::write_u32(&mut w, path, t)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read an index written by [`InvertedIndex::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        binio::expect_magic(&mut r, path, IDX_MAGIC)?;

        let stop_count = binio::read_u64(&mut r, path)? as usize;
        let mut stop_words = Vec::with_capacity(stop_count);
        for _ in 0..stop_count {
            stop_words.push(binio::read_str(&mut r, path)?);
        }
        let stops = StopwordList::from_words(stop_words);

        let vocab_count = binio::read_u64(&mut r, path)? as usize;
        let mut vocab = Vec::with_capacity(vocab_count);
        let mut vocab_ids = HashMap::with_capacity(vocab_count);
        for _ in 0..vocab_count {
            let token = binio::read_str(&mut r, path)?;
            vocab_ids.insert(token.clone(), vocab.len() as u32);
            vocab.push(token);
        }

        let doc_count = binio::read_u64(&mut r, path)? as usize;
        let mut doc_ids = Vec::with_capacity(doc_count);
        let mut doc_tokens = Vec::with_capacity(doc_count);
        for _ in 0..doc_count {
            doc_ids.push(binio::read_str(&mut r, path)?);
            let len = binio::read_u32(&mut r, path)? as usize;
            let mut seq = Vec::with_capacity(len);
            for _ in 0..len {
                let t = binio::read_u32(&mut r, path)?;
                if t as usize >= vocab_count {
                    return Err(Error::parse(path, 0, "token id out of range"));
                }
                seq.push(t);
            }
            doc_tokens.push(seq);
        }
        Ok(Self::assemble(doc_ids, doc_tokens, vocab, vocab_ids, stops))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convquery::{IqStrategy, QueryGroup};

    fn store_of(pairs: &[(&str, &str)]) -> PassageStore {
        PassageStore::from_pairs(
            pairs.iter().map(|(i, t)| (i.to_string(), t.to_string())),
            &StopwordList::empty(),
        )
        .unwrap()
    }

    fn query(tokens: &[&str]) -> WeightedRetrievalQuery {
        WeightedRetrievalQuery {
            groups: vec![QueryGroup {
                tokens: tokens.iter().map(|s| s.to_string()).collect(),
                weight: 1.0,
            }],
            strategy: IqStrategy::Iq1,
        }
    }

    #[test]
    fn build_counts_postings_and_lengths() {
        let idx = build_index(&store_of(&[("p", "a b a")])).unwrap();
        assert_eq!(idx.postings("a"), vec![("p", 2)]);
        assert_eq!(idx.postings("b"), vec![("p", 1)]);
        assert_eq!(idx.doc_length("p"), Some(3));
        assert_eq!(idx.postings("zzz"), Vec::<(&str, u32)>::new());
    }

    #[test]
    fn build_rejects_empty_store() {
        let store = PassageStore::from_pairs(Vec::new(), &StopwordList::empty()).unwrap();
        assert!(matches!(build_index(&store), Err(Error::EmptyStore)));
    }

    #[test]
    fn rebuild_is_identical() {
        let store = store_of(&[("p1", "a b c"), ("p2", "b c d")]);
        assert_eq!(build_index(&store).unwrap(), build_index(&store).unwrap());
    }

    #[test]
    fn only_matching_passage_ranks_first() {
        let idx = build_index(&store_of(&[
            ("p1", "alpha beta"),
            ("p2", "gamma delta"),
            ("p3", "epsilon zeta"),
        ]))
        .unwrap();
        let list = idx.retrieve("q", &query(&["gamma"]), 3).unwrap();
        assert_eq!(list.entries[0].passage_id, "p2");
        assert_eq!(list.entries[0].rank, 1);
    }

    #[test]
    fn cutoff_limits_candidates() {
        let idx = build_index(&store_of(&[("p1", "a"), ("p2", "a"), ("p3", "a")])).unwrap();
        let list = idx.retrieve("q", &query(&["a"]), 1).unwrap();
        assert_eq!(list.entries.len(), 1);
    }

    #[test]
    fn ordering_matches_hand_computed_likelihood() {
        // Three passages, two-token query; mirror the scoring formula with
        // independent arithmetic per document.
        let docs = [
            ("p1", vec!["x", "x", "y"]),
            ("p2", vec!["x", "z", "z", "z"]),
            ("p3", vec!["y", "y"]),
        ];
        let store = store_of(&[
            ("p1", "x x y"),
            ("p2", "x z z z"),
            ("p3", "y y"),
        ]);
        let idx = build_index(&store).unwrap();
        let mu = DEFAULT_MU;
        let n = 9.0;
        let cf = |t: &str| docs.iter().flat_map(|(_, d)| d).filter(|w| **w == t).count() as f64;
        let mut expected: Vec<(String, f64)> = docs
            .iter()
            .map(|(id, d)| {
                let len = d.len() as f64;
                let score: f64 = ["x", "y"]
                    .iter()
                    .map(|t| {
                        let tf = d.iter().filter(|w| **w == *t).count() as f64;
                        ((tf + mu * cf(t) / n) / (len + mu)).ln()
                    })
                    .sum();
                (id.to_string(), score)
            })
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let list = idx.retrieve("q", &query(&["x", "y"]), 3).unwrap();
        let got: Vec<&str> = list.entries.iter().map(|c| c.passage_id.as_str()).collect();
        let want: Vec<&str> = expected.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(got, want);
        for (c, (_, s)) in list.entries.iter().zip(&expected) {
            assert!((c.score - s).abs() < 1e-12);
        }
    }

    #[test]
    fn oov_only_query_errors() {
        let idx = build_index(&store_of(&[("p1", "a b")])).unwrap();
        assert!(matches!(
            idx.retrieve("q", &query(&["zzz"]), 10),
            Err(Error::EmptyCandidates { .. })
        ));
    }

    #[test]
    fn scores_non_increasing_and_ranks_contiguous() {
        let idx = build_index(&store_of(&[
            ("p1", "a b c"),
            ("p2", "a a b"),
            ("p3", "c d e"),
            ("p4", "a"),
        ]))
        .unwrap();
        let list = idx.retrieve("q", &query(&["a", "c"]), 10).unwrap();
        for w in list.entries.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for (i, c) in list.entries.iter().enumerate() {
            assert_eq!(c.rank, i + 1);
        }
    }

    #[test]
    fn matching_passages_outrank_non_matching_at_equal_length() {
        let idx = build_index(&store_of(&[
            ("p1", "alpha beta gamma"),
            ("p2", "delta beta epsilon"),
            ("p3", "zeta eta theta"),
            ("p4", "iota kappa lambda"),
        ]))
        .unwrap();
        let list = idx.retrieve("q", &query(&["beta"]), 4).unwrap();
        let rank_of = |pid: &str| list.entries.iter().position(|c| c.passage_id == pid).unwrap();
        for with in ["p1", "p2"] {
            for without in ["p3", "p4"] {
                assert!(rank_of(with) < rank_of(without));
            }
        }
    }

    #[test]
    fn raising_k_preserves_prefix() {
        let idx = build_index(&store_of(&[
            ("p1", "a b"),
            ("p2", "a c"),
            ("p3", "b c"),
            ("p4", "a a"),
        ]))
        .unwrap();
        let small = idx.retrieve("q", &query(&["a", "b"]), 2).unwrap();
        let large = idx.retrieve("q", &query(&["a", "b"]), 4).unwrap();
        assert_eq!(small.entries, large.entries[..2]);
    }

    #[test]
    fn union_of_identical_queries_is_single_set() {
        let idx = build_index(&store_of(&[("p1", "a b"), ("p2", "a c")])).unwrap();
        let q = query(&["a"]);
        let single = idx.retrieve("q", &q, 10).unwrap();
        let union = idx
            .retrieve_union("q", &[q.clone(), q.clone(), q], 10)
            .unwrap();
        assert!(union.from_union);
        let mut single_ids: Vec<String> =
            single.entries.iter().map(|c| c.passage_id.clone()).collect();
        single_ids.sort();
        let union_ids: Vec<String> = union.entries.iter().map(|c| c.passage_id.clone()).collect();
        assert_eq!(union_ids, single_ids);
        assert!(union.entries.iter().all(|c| c.score == 0.0));
    }

    #[test]
    fn union_merges_disjoint_sets() {
        let idx = build_index(&store_of(&[
            ("p1", "a a"),
            ("p2", "b b"),
            ("p3", "c c"),
        ]))
        .unwrap();
        let union = idx
            .retrieve_union("q", &[query(&["a"]), query(&["b"]), query(&["c"])], 1)
            .unwrap();
        assert_eq!(union.entries.len(), 3);
    }

    #[test]
    fn union_all_empty_errors() {
        let idx = build_index(&store_of(&[("p1", "a")])).unwrap();
        assert!(matches!(
            idx.retrieve_union("q", &[query(&["x"]), query(&["y"])], 5),
            Err(Error::EmptyCandidates { .. })
        ));
    }

    #[test]
    fn index_roundtrip() {
        let store = store_of(&[("p1", "a b c a"), ("p2", "b d")]);
        let idx = build_index(&store).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        idx.save(f.path()).unwrap();
        let loaded = InvertedIndex::load(f.path()).unwrap();
        assert_eq!(loaded, idx);
        assert_eq!(loaded.tokens_of("p1").unwrap(), ["a", "b", "c", "a"]);
    }

    #[test]
    fn index_bad_magic_and_truncation() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), b"NOPE").unwrap();
        assert!(matches!(
            InvertedIndex::load(f.path()),
            Err(Error::BadMagic { .. })
        ));

        let store = store_of(&[("p1", "a b c")]);
        let idx = build_index(&store).unwrap();
        idx.save(f.path()).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        std::fs::write(f.path(), &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            InvertedIndex::load(f.path()),
            Err(Error::Truncated { .. })
        ));
    }
}
