//! Unsupervised conversational passage re-ranking.
//!
//! Candidates from a lexical retriever are re-scored by a weighted sum of
//! three signals: embedding similarity between passage tokens and the
//! conversational query (node score), NPMI coherence of in-window passage
//! token pairs over a word proximity network (edge score), and the
//! reciprocal of the retrieval rank (prior).
//!
//! The pipeline is organized as:
//!
//! * [`corpus`] — collections, topics, and the shared tokenizer
//! * [`wpn`] — co-occurrence counting and the word proximity network
//! * [`embeddings`] — word vectors and best-query-match lookups
//! * [`convquery`] — conversational and retrieval query formulation
//! * [`retrieval`] — inverted index with query-likelihood ranking
//! * [`scoring`] — node/edge/prior scores and the final ranking
//! * [`evalkit`] — qrels, nDCG/ERR/AP, and TREC run files

mod binio;
pub mod convquery;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod evalkit;
pub mod retrieval;
pub mod scoring;
pub mod wpn;

pub use convquery::{
    make_cq, make_iq, turn_weight, ConversationalQuery, CqEntry, CqStrategy, IqStrategy,
    QueryGroup, WeightedRetrievalQuery,
};
pub use corpus::{
    load_topics, tokenize, Conversation, Passage, PassageStore, StopwordList, TokenizedPassage,
};
pub use embeddings::{best_query_match, cosine, EmbeddingStore, QueryMatch};
pub use error::{Error, Result};
pub use evalkit::{
    ap_at_k, err_at_k, evaluate, ndcg_at_k, read_run, write_run, Metric, MetricTable, Qrels,
    RunFile, RunRow,
};
pub use retrieval::{build_index, Candidate, CandidateList, InvertedIndex, DEFAULT_MU};
pub use scoring::{
    edge_score, indri_prior, node_score, rank_passages, rank_turn, RunConfig, ScoredPassage,
    ScoredRanking, TokenSource,
};
pub use wpn::{
    build_wpn, count_cooccurrences, npmi, CooccurrenceCounts, WordProximityNetwork,
};
