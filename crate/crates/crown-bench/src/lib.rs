//! Shared corpus generation for the benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crown_core::{EmbeddingStore, PassageStore, StopwordList};

/// Deterministic synthetic collection: `passages` passages of 8..40 tokens
/// over a `vocab`-token vocabulary, skewed toward frequent low ids.
pub fn synthetic_store(passages: usize, vocab: usize, seed: u64) -> PassageStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(String, String)> = (0..passages)
        .map(|i| {
            let len = rng.gen_range(8..=40);
            let text = (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    format!("t{:05}", (r * r * vocab as f64) as usize)
                })
                .collect::<Vec<_>>()
                .join(" ");
            (format!("p{i:06}"), text)
        })
        .collect();
    PassageStore::from_pairs(pairs, &StopwordList::empty()).unwrap()
}

/// Random unit-scale embeddings covering the synthetic vocabulary.
pub fn synthetic_embeddings(vocab: usize, dim: usize, seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingStore::from_pairs(
        dim,
        (0..vocab).map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (format!("t{i:05}"), v)
        }),
    )
    .unwrap()
}
