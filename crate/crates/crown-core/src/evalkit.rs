//! Graded-judgment evaluation: qrels parsing, nDCG / ERR / AP at cutoff,
//! and TREC run-file reading and writing.
//!
//! Grades follow the three-point scale {0, 1, 2}. nDCG uses exponential
//! gain `2^g - 1` with `log2(rank + 1)` discounts; ERR uses the cascade
//! model with satisfaction `(2^g - 1) / 2^max_grade`; AP binarizes at
//! grade >= 1 and divides by the total number of relevant passages.
//! Unjudged passages count as grade 0 throughout.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scoring::ScoredRanking;

const MAX_GRADE: u8 = 2;

/// Relevance judgments keyed by (query id, passage id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    by_query: HashMap<String, HashMap<String, u8>>,
    max_grade: u8,
}

impl Qrels {
    /// Parse `qid 0 pid grade` lines. Grades must be within {0, 1, 2}.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut qrels = Qrels::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            }
            let grade: u8 = fields[3]
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad grade {:?}", fields[3])))?;
            if grade > MAX_GRADE {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: grade {grade} outside the 0..={MAX_GRADE} scale",
                    path.display()
                )));
            }
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn insert(&mut self, qid: &str, pid: &str, grade: u8) {
        self.by_query
            .entry(qid.to_string())
            .or_default()
            .insert(pid.to_string(), grade);
        self.max_grade = self.max_grade.max(grade);
    }

    /// Grade for a pair; unjudged pairs are grade 0.
    pub fn grade(&self, qid: &str, pid: &str) -> u8 {
        self.by_query
            .get(qid)
            .and_then(|m| m.get(pid))
            .copied()
            .unwrap_or(0)
    }

    /// Maximum grade observed anywhere in the judgments.
    pub fn max_grade(&self) -> u8 {
        self.max_grade
    }

    pub fn judged_queries(&self) -> usize {
        self.by_query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    fn grades_for(&self, qid: &str) -> Vec<u8> {
        self.by_query
            .get(qid)
            .map(|m| m.values().copied().collect())
            .unwrap_or_default()
    }

    fn relevant_count(&self, qid: &str) -> usize {
        self.grades_for(qid).iter().filter(|&&g| g >= 1).count()
    }
}

fn gain(grade: u8) -> f64 {
    (1u64 << grade) as f64 - 1.0
}

/// nDCG@k with exponential gain; 0 when the query has no judged passages.
pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, qid: &str, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, pid)| gain(qrels.grade(qid, pid.as_ref())) / ((i + 2) as f64).log2())
        .sum();
    let mut ideal = qrels.grades_for(qid);
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// ERR@k under the cascade model; max_grade comes from the qrels.
pub fn err_at_k<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, qid: &str, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    let scale = (1u64 << qrels.max_grade().max(1)) as f64;
    let mut err = 0.0;
    let mut continue_p = 1.0;
    for (i, pid) in ranking.iter().take(k).enumerate() {
        let r = gain(qrels.grade(qid, pid.as_ref())) / scale;
        err += continue_p * r / (i + 1) as f64;
        continue_p *= 1.0 - r;
    }
    err
}

/// AP@k with relevance binarized at grade >= 1, normalized by the total
/// number of relevant passages for the query; 0 when there are none.
pub fn ap_at_k<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, qid: &str, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    let total_relevant = qrels.relevant_count(qid);
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, pid) in ranking.iter().take(k).enumerate() {
        if qrels.grade(qid, pid.as_ref()) >= 1 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

/// One row of a TREC run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub query_id: String,
    pub passage_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// A parsed run file; rows keep their per-query rank order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    rows: Vec<RunRow>,
}

impl RunFile {
    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    /// Query ids in first-appearance order.
    pub fn query_ids(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.query_id.as_str()) {
                seen.push(row.query_id.as_str());
            }
        }
        seen
    }

    /// Passage ids of one query in rank order.
    pub fn ranking_for(&self, qid: &str) -> Vec<&str> {
        let mut rows: Vec<&RunRow> = self.rows.iter().filter(|r| r.query_id == qid).collect();
        rows.sort_by_key(|r| r.rank);
        rows.into_iter().map(|r| r.passage_id.as_str()).collect()
    }
}

/// Write rankings as `qid Q0 pid rank score tag` rows, scores with six
/// decimal places.
pub fn write_run(rankings: &[ScoredRanking], tag: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for ranking in rankings {
        for (i, entry) in ranking.entries.iter().enumerate() {
            writeln!(
                w,
                "{} Q0 {} {} {:.6} {}",
                ranking.query_id,
                entry.passage_id,
                i + 1,
                entry.final_score,
                tag
            )
            .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parse a run file written by [`write_run`] (or any TREC run).
pub fn read_run(path: impl AsRef<Path>) -> Result<RunFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut per_query: HashMap<String, Vec<String>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad score {:?}", fields[4])))?;
        let seen = per_query.entry(fields[0].to_string()).or_default();
        if seen.contains(&fields[2].to_string()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate passage {:?} for query {:?}", fields[2], fields[0]),
            ));
        }
        seen.push(fields[2].to_string());
        rows.push(RunRow {
            query_id: fields[0].to_string(),
            passage_id: fields[2].to_string(),
            rank,
            score,
            tag: fields[5].to_string(),
        });
    }
    Ok(RunFile { rows })
}

/// A metric name with its cutoff, e.g. `ndcg@1000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ndcg(usize),
    Err(usize),
    Ap(usize),
}

impl Metric {
    pub fn compute<S: AsRef<str>>(&self, ranking: &[S], qrels: &Qrels, qid: &str) -> f64 {
        match *self {
            Metric::Ndcg(k) => ndcg_at_k(ranking, qrels, qid, k),
            Metric::Err(k) => err_at_k(ranking, qrels, qid, k),
            Metric::Ap(k) => ap_at_k(ranking, qrels, qid, k),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Err(k) => write!(f, "err@{k}"),
            Metric::Ap(k) => write!(f, "ap@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, k) = s
            .split_once('@')
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))?;
        let k: usize = k.parse().map_err(|_| Error::UnknownMetric(s.to_string()))?;
        if k < 1 {
            return Err(Error::UnknownMetric(s.to_string()));
        }
        match name {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "err" => Ok(Metric::Err(k)),
            "ap" => Ok(Metric::Ap(k)),
            _ => Err(Error::UnknownMetric(s.to_string())),
        }
    }
}

/// Per-query metric values plus per-turn and overall means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    /// (metric, query id, value), queries in run order.
    pub per_query: Vec<(String, String, f64)>,
    /// (metric, group, mean) where group is a turn number or "all".
    pub rows: Vec<(String, String, f64)>,
}

impl MetricTable {
    /// The aggregate value for a (metric, group) pair.
    pub fn value(&self, metric: &str, group: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|(m, g, _)| m == metric && g == group)
            .map(|&(_, _, v)| v)
    }
}

impl fmt::Display for MetricTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (metric, group, value) in &self.rows {
            writeln!(f, "{metric}\t{group}\t{value:.6}")?;
        }
        Ok(())
    }
}

fn turn_of(qid: &str) -> Result<usize> {
    qid.rsplit_once('_')
        .and_then(|(_, t)| t.parse::<usize>().ok())
        .ok_or_else(|| {
            Error::Validation(format!(
                "query id {qid:?} does not follow the topic_turn convention"
            ))
        })
}

/// Evaluate a run against qrels. Means are arithmetic over the run's
/// queries; with `per_turn` the table also carries one row per turn
/// (query ids follow the `topic_turn` convention).
pub fn evaluate(
    run: &RunFile,
    qrels: &Qrels,
    metrics: &[Metric],
    per_turn: bool,
) -> Result<MetricTable> {
    if qrels.is_empty() {
        return Err(Error::Validation(
            "qrels are empty; no metric is defined".into(),
        ));
    }
    let qids = run.query_ids();
    let mut per_query = Vec::new();
    let mut rows = Vec::new();
    for metric in metrics {
        let name = metric.to_string();
        let mut values = Vec::with_capacity(qids.len());
        for qid in &qids {
            let ranking = run.ranking_for(qid);
            let v = metric.compute(&ranking, qrels, qid);
            per_query.push((name.clone(), qid.to_string(), v));
            values.push((*qid, v));
        }
        if per_turn {
            let mut turns: Vec<usize> = Vec::new();
            for (qid, _) in &values {
                let t = turn_of(qid)?;
                if !turns.contains(&t) {
                    turns.push(t);
                }
            }
            turns.sort_unstable();
            for t in turns {
                let group: Vec<f64> = values
                    .iter()
                    .filter(|(qid, _)| turn_of(qid).is_ok_and(|x| x == t))
                    .map(|&(_, v)| v)
                    .collect();
                rows.push((name.clone(), t.to_string(), mean(&group)));
            }
        }
        let all: Vec<f64> = values.iter().map(|&(_, v)| v).collect();
        rows.push((name.clone(), "all".to_string(), mean(&all)));
    }
    Ok(MetricTable { per_query, rows })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
