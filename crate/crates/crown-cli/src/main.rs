//! Batch pipeline over persisted artifacts: build an index and a word
//! proximity network from a collection, rank conversation turns into a
//! TREC run file, and evaluate runs against qrels.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use rayon::prelude::*;

use crown_core::{
    build_index, evaluate, load_topics, read_run, write_run, EmbeddingStore, Error,
    InvertedIndex, Metric, PassageStore, Qrels, RunConfig, StopwordList, WordProximityNetwork,
};

#[derive(Parser)]
#[command(
    name = "crown",
    version,
    about = "Conversational passage re-ranking over word proximity networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and persist the inverted index for a passage collection.
    BuildIndex {
        /// TSV collection, one "id<TAB>text" line per passage.
        #[arg(long)]
        corpus: PathBuf,
        /// Stopword file (one token per line); defaults to the bundled
        /// English list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Output index file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and persist the word proximity network for a collection.
    BuildWpn {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Co-occurrence context window.
        #[arg(long, default_value_t = 3)]
        window: usize,
        /// Minimum pair count for an edge.
        #[arg(long, default_value_t = 2)]
        min_pair_count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every turn of every conversation into one TREC run file.
    #[command(group(ArgGroup::new("cfg").required(true).args(["config", "preset"])))]
    Rank {
        /// Topics file (JSON array of conversations).
        #[arg(long)]
        topics: PathBuf,
        /// Index file from build-index.
        #[arg(long)]
        index: PathBuf,
        /// Graph file from build-wpn.
        #[arg(long)]
        wpn: PathBuf,
        /// Word vectors in textual word2vec format.
        #[arg(long)]
        embeddings: PathBuf,
        /// Run configuration as a JSON file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named configuration: igraph, intu, union, or cqw.
        #[arg(long)]
        preset: Option<String>,
        /// Candidate depth override (default: the config's k).
        #[arg(long)]
        k: Option<usize>,
        /// Output run file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a run file against qrels.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Qrels file, "qid 0 pid grade" lines.
        #[arg(long)]
        qrels: PathBuf,
        /// Comma-separated metrics, e.g. ndcg@1000,err@1000,ap@5.
        #[arg(long, value_delimiter = ',', default_value = "ndcg@1000,err@1000,ap@5")]
        metrics: Vec<String>,
        /// Also report per-turn means (query ids must be topic_turn).
        #[arg(long)]
        per_turn: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load_stopwords(path: &Option<PathBuf>) -> crown_core::Result<StopwordList> {
    match path {
        Some(p) => StopwordList::from_file(p),
        None => Ok(StopwordList::bundled_english()),
    }
}

fn run(command: Command) -> crown_core::Result<()> {
    match command {
        Command::BuildIndex { corpus, stopwords, out } => {
            let stops = load_stopwords(&stopwords)?;
            let store = PassageStore::load_collection(&corpus, &stops)?;
            let index = build_index(&store)?;
            index.save(&out)?;
            println!(
                "indexed {} passages, vocabulary {} tokens -> {}",
                index.doc_count(),
                index.vocab_size(),
                out.display()
            );
            Ok(())
        }
        Command::BuildWpn { corpus, stopwords, window, min_pair_count, out } => {
            if window < 1 {
                return Err(Error::ConfigInvalid("--window must be >= 1".into()));
            }
            if min_pair_count < 1 {
                return Err(Error::ConfigInvalid("--min-pair-count must be >= 1".into()));
            }
            let stops = load_stopwords(&stopwords)?;
            let store = PassageStore::load_collection(&corpus, &stops)?;
            let counts = crown_core::count_cooccurrences(&store, window);
            let wpn = crown_core::build_wpn(&counts, min_pair_count);
            wpn.save(&out)?;
            println!(
                "graph: {} nodes, {} edges (window {}) -> {}",
                wpn.node_count(),
                wpn.edge_count(),
                wpn.window(),
                out.display()
            );
            Ok(())
        }
        Command::Rank { topics, index, wpn, embeddings, config, preset, k, out } => {
            let mut cfg = match (&config, &preset) {
                (Some(path), None) => RunConfig::from_json_file(path)?,
                (None, Some(name)) => RunConfig::preset(name)?,
                _ => unreachable!("clap enforces exactly one of --config/--preset"),
            };
            if let Some(k) = k {
                cfg.k = k;
            }
            cfg.validate()?;
            println!(
                "config {}: cq={} iq={} alpha={} beta={} window={} h=({}, {}, {}) k={}",
                cfg.run_tag,
                cfg.cq_strategy,
                cfg.iq_strategy,
                cfg.alpha,
                cfg.beta,
                cfg.window,
                cfg.h1,
                cfg.h2,
                cfg.h3,
                cfg.k
            );

            let index = InvertedIndex::load(&index)?;
            let wpn = WordProximityNetwork::load(&wpn)?;
            if cfg.h3 > 0.0 && cfg.window != wpn.window() {
                return Err(Error::ConfigInvalid(format!(
                    "config window {} does not match graph window {}",
                    cfg.window,
                    wpn.window()
                )));
            }
            let emb = EmbeddingStore::load(&embeddings)?;
            let conversations = load_topics(&topics)?;
            let stops = index.stopwords().clone();

            let turns: Vec<(usize, usize)> = conversations
                .iter()
                .enumerate()
                .flat_map(|(c, conv)| (1..=conv.turns.len()).map(move |t| (c, t)))
                .collect();
            let rankings: Vec<crown_core::ScoredRanking> = turns
                .par_iter()
                .filter_map(|&(c, t)| {
                    let conv = &conversations[c];
                    let qid = format!("{}_{t}", conv.id);
                    match crown_core::rank_turn(&qid, &index, conv, t, &cfg, &wpn, &emb, &stops) {
                        Ok(r) => Some(Ok(r)),
                        Err(Error::EmptyCandidates { query_id }) => {
                            eprintln!("warning: no candidates for query {query_id}; emitting no rows");
                            None
                        }
                        Err(e) => Some(Err(e)),
                    }
                })
                .collect::<crown_core::Result<_>>()?;

            write_run(&rankings, &cfg.run_tag, &out)?;
            let rows: usize = rankings.iter().map(|r| r.entries.len()).sum();
            println!(
                "ranked {} queries ({} rows) -> {}",
                rankings.len(),
                rows,
                out.display()
            );
            Ok(())
        }
        Command::Eval { run, qrels, metrics, per_turn } => {
            let metrics: Vec<Metric> = metrics
                .iter()
                .map(|m| m.parse())
                .collect::<crown_core::Result<_>>()?;
            let run = read_run(&run)?;
            let qrels = Qrels::load(&qrels)?;
            let table = evaluate(&run, &qrels, &metrics, per_turn)?;
            print!("{table}");
            Ok(())
        }
    }
}
