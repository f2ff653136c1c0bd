//! Property tests for the pipeline invariants.

use proptest::prelude::*;

use crown_core::{
    ap_at_k, best_query_match, build_index, build_wpn, cosine, count_cooccurrences, err_at_k,
    make_cq, ndcg_at_k, rank_passages, tokenize, Conversation, CqStrategy, EmbeddingStore,
    IqStrategy, PassageStore, Qrels, QueryGroup, RunConfig, StopwordList, WeightedRetrievalQuery,
};

fn token() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "alder", "birch", "cedar", "dogwood", "elm", "fir", "gorse", "hazel", "ivy", "juniper",
    ])
    .prop_map(str::to_string)
}

fn passage_tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token(), 1..10)
}

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(passage_tokens(), 1..12)
}

fn store_from(corpus: &[Vec<String>]) -> PassageStore {
    let pairs: Vec<(String, String)> = corpus
        .iter()
        .enumerate()
        .map(|(i, toks)| (format!("p{i:03}"), toks.join(" ")))
        .collect();
    PassageStore::from_pairs(pairs, &StopwordList::empty()).unwrap()
}

proptest! {
    #[test]
    fn tokenize_idempotent_on_own_output(text in ".{0,80}") {
        let stops = StopwordList::from_words(["the", "of", "a"]);
        let once = tokenize(&text, &stops);
        let twice = tokenize(&once.join(" "), &stops);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tokenize_never_emits_stopwords(text in ".{0,80}") {
        let stops = StopwordList::bundled_english();
        for tok in tokenize(&text, &stops) {
            prop_assert!(!stops.contains(&tok));
        }
    }

    #[test]
    fn store_tokens_agree_with_tokenizer(corpus in corpus()) {
        let store = store_from(&corpus);
        for (p, tp) in store.passages().iter().zip(store.tokenized()) {
            prop_assert_eq!(&tp.tokens, &tokenize(&p.text, store.stopwords()));
        }
    }

    #[test]
    fn counting_totals_are_consistent(corpus in corpus(), window in 1usize..5) {
        let counts = count_cooccurrences(&store_from(&corpus), window);
        prop_assert_eq!(counts.sum_token_counts(), counts.total_tokens());
        prop_assert_eq!(counts.sum_pair_counts(), counts.total_pairs());
    }

    #[test]
    fn stored_edges_stay_in_npmi_range(corpus in corpus(), window in 1usize..5) {
        let wpn = build_wpn(&count_cooccurrences(&store_from(&corpus), window), 1);
        for (_, w) in wpn.edges() {
            prop_assert!((-1.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn edges_only_join_window_cooccurrences(corpus in corpus(), window in 1usize..5) {
        let store = store_from(&corpus);
        let wpn = build_wpn(&count_cooccurrences(&store, window), 1);
        for ((x, y), _) in wpn.edges() {
            let mut found = false;
            'scan: for tp in store.tokenized() {
                for j in 0..tp.tokens.len() {
                    for k in j + 1..tp.tokens.len().min(j + window + 1) {
                        let (a, b) = (tp.tokens[j].as_str(), tp.tokens[k].as_str());
                        if (a == x && b == y) || (a == y && b == x) {
                            found = true;
                            break 'scan;
                        }
                    }
                }
            }
            prop_assert!(found, "edge ({x}, {y}) has no in-window witness");
        }
    }

    #[test]
    fn cosine_symmetric_and_scale_invariant(
        u in prop::collection::vec(-5.0f64..5.0, 4),
        v in prop::collection::vec(-5.0f64..5.0, 4),
        c in 0.1f64..10.0,
    ) {
        prop_assume!(u.iter().any(|&x| x != 0.0) && v.iter().any(|&x| x != 0.0));
        let uv = cosine(&u, &v).unwrap();
        let vu = cosine(&v, &u).unwrap();
        prop_assert!((uv - vu).abs() < 1e-12);
        let scaled: Vec<f64> = u.iter().map(|&x| c * x).collect();
        prop_assert!((cosine(&scaled, &v).unwrap() - uv).abs() < 1e-9);
    }

    #[test]
    fn turn_weights_follow_the_law(total in 2usize..=10) {
        for t in 1..=total {
            let w = crown_core::turn_weight(t, total).unwrap();
            if t == 1 || t == total {
                prop_assert_eq!(w, 1.0);
            } else {
                prop_assert_eq!(w, t as f64 / total as f64);
            }
        }
    }

    #[test]
    fn retrieval_is_deterministic_and_prefix_stable(corpus in corpus(), k in 1usize..6) {
        let store = store_from(&corpus);
        let idx = build_index(&store).unwrap();
        let query = WeightedRetrievalQuery {
            groups: vec![QueryGroup {
                tokens: vec!["alder".into(), "cedar".into()],
                weight: 1.0,
            }],
            strategy: IqStrategy::Iq1,
        };
        let Ok(first) = idx.retrieve("q", &query, k) else {
            return Ok(()); // both query tokens missing from this corpus
        };
        let again = idx.retrieve("q", &query, k).unwrap();
        prop_assert_eq!(&first, &again);
        let wider = idx.retrieve("q", &query, k + 3).unwrap();
        prop_assert_eq!(first.entries.as_slice(), &wider.entries[..first.entries.len()]);
    }

    #[test]
    fn metric_values_stay_in_unit_interval(
        grades in prop::collection::vec(0u8..=2, 1..8),
        k in 1usize..10,
    ) {
        let mut qrels = Qrels::default();
        let ranking: Vec<String> = (0..grades.len()).map(|i| format!("d{i}")).collect();
        for (i, &g) in grades.iter().enumerate() {
            qrels.insert("q_1", &format!("d{i}"), g);
        }
        for v in [
            ndcg_at_k(&ranking, &qrels, "q_1", k),
            err_at_k(&ranking, &qrels, "q_1", k),
            ap_at_k(&ranking, &qrels, "q_1", k),
        ] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "metric value {v} out of range");
        }
    }

    #[test]
    fn metrics_invariant_under_relabeling(
        grades in prop::collection::vec(0u8..=2, 1..8),
        k in 1usize..10,
    ) {
        let mut qrels = Qrels::default();
        let mut renamed = Qrels::default();
        let ranking: Vec<String> = (0..grades.len()).map(|i| format!("d{i}")).collect();
        let relabeled: Vec<String> = (0..grades.len()).map(|i| format!("zz{i}")).collect();
        for (i, &g) in grades.iter().enumerate() {
            qrels.insert("q_1", &format!("d{i}"), g);
            renamed.insert("q_1", &format!("zz{i}"), g);
        }
        prop_assert_eq!(
            ndcg_at_k(&ranking, &qrels, "q_1", k),
            ndcg_at_k(&relabeled, &renamed, "q_1", k)
        );
        prop_assert_eq!(
            err_at_k(&ranking, &qrels, "q_1", k),
            err_at_k(&relabeled, &renamed, "q_1", k)
        );
        prop_assert_eq!(
            ap_at_k(&ranking, &qrels, "q_1", k),
            ap_at_k(&relabeled, &renamed, "q_1", k)
        );
    }

    #[test]
    fn downward_swap_never_helps_graded_metrics(
        grades in prop::collection::vec(0u8..=2, 2..8),
        pos in 0usize..6,
    ) {
        let n = grades.len();
        let i = pos % (n - 1);
        prop_assume!(grades[i] > grades[i + 1]);
        let mut qrels = Qrels::default();
        let ranking: Vec<String> = (0..n).map(|d| format!("d{d}")).collect();
        for (d, &g) in grades.iter().enumerate() {
            qrels.insert("q_1", &format!("d{d}"), g);
        }
        let mut swapped = ranking.clone();
        swapped.swap(i, i + 1);
        prop_assert!(ndcg_at_k(&swapped, &qrels, "q_1", n) <= ndcg_at_k(&ranking, &qrels, "q_1", n) + 1e-12);
        prop_assert!(err_at_k(&swapped, &qrels, "q_1", n) <= err_at_k(&ranking, &qrels, "q_1", n) + 1e-12);
    }
}

fn unit_vec(angle: f64) -> Vec<f64> {
    vec![angle.cos(), angle.sin()]
}

proptest! {
    #[test]
    fn best_match_equals_exhaustive_scan(
        angles in prop::collection::vec(0.0f64..1.5, 1..6),
        target in 0.0f64..1.5,
    ) {
        let mut pairs: Vec<(String, Vec<f64>)> = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| (format!("q{i}"), unit_vec(a)))
            .collect();
        pairs.push(("target".to_string(), unit_vec(target)));
        let store = EmbeddingStore::from_pairs(2, pairs).unwrap();
        let text = (0..angles.len()).map(|i| format!("q{i}")).collect::<Vec<_>>().join(" ");
        let conv = Conversation {
            id: "1".into(),
            title: String::new(),
            description: String::new(),
            turns: vec![text],
        };
        let cq = make_cq(&conv, 1, CqStrategy::Cq1, &StopwordList::empty()).unwrap();
        let m = best_query_match("target", &cq, &store).unwrap();
        let exhaustive = cq
            .entries()
            .iter()
            .filter_map(|e| store.get(&e.token))
            .map(|v| cosine(store.get("target").unwrap(), v).unwrap())
            .fold(f64::MIN, f64::max);
        prop_assert!(m.similarity >= exhaustive);
    }

    #[test]
    fn node_score_bounded_and_alpha_monotone(
        angles in prop::collection::vec(0.0f64..1.5, 1..8),
    ) {
        let mut pairs: Vec<(String, Vec<f64>)> = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| (format!("w{i}"), unit_vec(a)))
            .collect();
        pairs.push(("query".to_string(), unit_vec(0.0)));
        let store = EmbeddingStore::from_pairs(2, pairs).unwrap();
        let conv = Conversation {
            id: "1".into(),
            title: String::new(),
            description: String::new(),
            turns: vec!["query".to_string()],
        };
        let cq = make_cq(&conv, 1, CqStrategy::Cq1, &StopwordList::empty()).unwrap();
        let tp = crown_core::TokenizedPassage {
            id: "p".into(),
            tokens: (0..angles.len()).map(|i| format!("w{i}")).collect(),
        };
        let qualifying = |alpha: f64| -> Vec<usize> {
            tp.tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    best_query_match(t, &cq, &store).is_some_and(|m| m.similarity > alpha)
                })
                .map(|(i, _)| i)
                .collect()
        };
        let loose = qualifying(0.7);
        let tight = qualifying(0.85);
        prop_assert!(tight.iter().all(|i| loose.contains(i)));
        let score = crown_core::node_score(&tp, &cq, &store, 0.0);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&score));
    }

    #[test]
    fn prior_only_ranking_follows_candidates(corpus in corpus()) {
        let store = store_from(&corpus);
        let idx = build_index(&store).unwrap();
        let query = WeightedRetrievalQuery {
            groups: vec![QueryGroup { tokens: vec!["birch".into()], weight: 1.0 }],
            strategy: IqStrategy::Iq1,
        };
        let Ok(candidates) = idx.retrieve("1_1", &query, 8) else { return Ok(()); };
        let conv = Conversation {
            id: "1".into(),
            title: String::new(),
            description: String::new(),
            turns: vec!["birch".to_string()],
        };
        let cfg = RunConfig {
            cq_strategy: CqStrategy::Cq1,
            iq_strategy: IqStrategy::Iq1,
            alpha: 0.7,
            beta: 0.0,
            window: 3,
            h1: 1.0,
            h2: 0.0,
            h3: 0.0,
            k: 8,
            run_tag: "prior".into(),
        };
        let wpn = build_wpn(&count_cooccurrences(&store, 3), 1);
        let emb = EmbeddingStore::from_pairs(2, Vec::<(String, Vec<f64>)>::new()).unwrap();
        let ranking = rank_passages(
            &candidates, &conv, 1, &cfg, &wpn, &emb, &store, &StopwordList::empty(),
        )
        .unwrap();
        let got: Vec<&str> = ranking.entries.iter().map(|e| e.passage_id.as_str()).collect();
        let want: Vec<&str> = candidates.entries.iter().map(|c| c.passage_id.as_str()).collect();
        prop_assert_eq!(got, want);
    }
}
