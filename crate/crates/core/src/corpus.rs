//! Loading and quality-filtering statement/document pairs.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{RawPair, StatementDocPair, ValidationError};
use crate::rouge::rouge2;
use crate::text::{word_strings, Stopwords};

#[derive(Debug, Error)]
pub enum LoadErrorKind {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pair {id:?}: {source}")]
    Validation {
        id: String,
        #[source]
        source: ValidationError,
    },
}

/// A line of the interchange file that could not be turned into a pair.
#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct LoadError {
    pub line: usize,
    pub kind: LoadErrorKind,
}

impl LoadError {
    pub fn pair_id(&self) -> Option<&str> {
        match &self.kind {
            LoadErrorKind::Validation { id, .. } => Some(id),
            _ => None,
        }
    }
}

/// Iterator over pairs in an interchange JSONL stream, in file order.
/// Blank lines are skipped; every other bad line yields an error carrying
/// its 1-based line number.
pub struct PairReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> PairReader<R> {
    pub fn new(reader: R) -> Self {
        PairReader {
            lines: reader.lines(),
            line: 0,
        }
    }
}

impl<R: BufRead> Iterator for PairReader<R> {
    type Item = Result<StatementDocPair, LoadError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = self.lines.next()?;
            self.line += 1;
            let line = self.line;
            let text = match raw {
                Ok(t) => t,
                Err(e) => return Some(Err(LoadError { line, kind: e.into() })),
            };
            if text.trim().is_empty() {
                continue;
            }
            let parsed: RawPair = match serde_json::from_str(&text) {
                Ok(p) => p,
                Err(e) => return Some(Err(LoadError { line, kind: e.into() })),
            };
            let id = parsed.id.clone();
            return Some(parsed.into_pair().map_err(|source| LoadError {
                line,
                kind: LoadErrorKind::Validation { id, source },
            }));
        }
    }
}

/// Opens an interchange JSONL file.
pub fn load_pairs(path: impl AsRef<Path>) -> io::Result<PairReader<BufReader<File>>> {
    Ok(PairReader::new(BufReader::new(File::open(path)?)))
}

#[derive(Debug, Clone)]
pub struct CorpusFilterConfig {
    pub max_doc_words: usize,
    pub relevance_missing_fraction: f64,
    /// `None` means: use the median score of the pairs reaching the gate.
    pub rouge2_threshold: Option<f64>,
    pub stopwords: Stopwords,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        CorpusFilterConfig {
            max_doc_words: 1000,
            relevance_missing_fraction: 0.5,
            rouge2_threshold: None,
            stopwords: Stopwords::default(),
        }
    }
}

/// Fraction of the statement's distinct content words absent from the
/// document, or `None` when the statement has no content words.
pub fn missing_fraction(pair: &StatementDocPair, stopwords: &Stopwords) -> Option<f64> {
    let statement = stopwords.content_set(&pair.statement.text);
    if statement.is_empty() {
        return None;
    }
    let document: std::collections::HashSet<String> = word_strings(&pair.document.text).into_iter().collect();
    let missing = statement.iter().filter(|w| !document.contains(*w)).count();
    Some(missing as f64 / statement.len() as f64)
}

/// True if the pair passes the relevance gate: at most
/// `relevance_missing_fraction` of the statement's content words are
/// missing from the document.
pub fn relevance_filter(pair: &StatementDocPair, cfg: &CorpusFilterConfig) -> bool {
    missing_fraction(pair, &cfg.stopwords).is_some_and(|f| f <= cfg.relevance_missing_fraction)
}

/// ROUGE-2 of a pair, document as candidate and statement as reference.
pub fn pair_rouge2(pair: &StatementDocPair) -> f64 {
    rouge2(&pair.document.text, &pair.statement.text)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no pairs")]
pub struct NoPairs;

/// Median ROUGE-2 over `pairs`; the lower middle for even counts.
pub fn median_rouge2<'a, I>(pairs: I) -> Result<f64, NoPairs>
where
    I: IntoIterator<Item = &'a StatementDocPair>,
{
    let scores: Vec<f64> = pairs.into_iter().map(pair_rouge2).collect();
    median_of(scores)
}

pub(crate) fn median_of(mut scores: Vec<f64>) -> Result<f64, NoPairs> {
    if scores.is_empty() {
        return Err(NoPairs);
    }
    scores.sort_by(f64::total_cmp);
    Ok(scores[(scores.len() - 1) / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Length,
    Relevance,
    Rouge2,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub truncated: usize,
    pub discarded_length: usize,
    pub discarded_relevance: usize,
    pub discarded_rouge2: usize,
    pub rouge2_threshold: f64,
    /// Per discarded pair, in input order.
    pub discarded: Vec<(String, Gate)>,
}

impl FilterReport {
    pub fn discarded_total(&self) -> usize {
        self.discarded_length + self.discarded_relevance + self.discarded_rouge2
    }

    fn record(&mut self, id: &str, gate: Gate) {
        match gate {
            Gate::Length => self.discarded_length += 1,
            Gate::Relevance => self.discarded_relevance += 1,
            Gate::Rouge2 => self.discarded_rouge2 += 1,
        }
        self.discarded.push((id.to_string(), gate));
    }
}

/// Applies the document length cap, the relevance gate, and the ROUGE-2
/// gate (`score >= threshold`), in that order.
///
/// Documents longer than `max_doc_words` are truncated at the last sentence
/// boundary within the cap; a document whose first sentence alone exceeds
/// the cap is discarded at the length gate.
pub fn corpus_filter<I>(pairs: I, cfg: &CorpusFilterConfig) -> (Vec<StatementDocPair>, FilterReport)
where
    I: IntoIterator<Item = StatementDocPair>,
{
    let mut report = FilterReport::default();
    let mut survivors = Vec::new();
    for mut pair in pairs {
        report.input += 1;
        match pair.document.truncate_words(cfg.max_doc_words) {
            None => {
                report.record(&pair.id, Gate::Length);
                continue;
            }
            Some(doc) => {
                if doc.text.len() != pair.document.text.len() {
                    report.truncated += 1;
                }
                pair.document = doc;
            }
        }
        if !relevance_filter(&pair, cfg) {
            report.record(&pair.id, Gate::Relevance);
            continue;
        }
        survivors.push(pair);
    }

    let scores: Vec<f64> = survivors.par_iter().map(pair_rouge2).collect();
    let threshold = match cfg.rouge2_threshold {
        Some(t) => t,
        None => median_of(scores.clone()).unwrap_or(0.0),
    };
    report.rouge2_threshold = threshold;

    // keep input order in the discard log
    let mut kept = Vec::with_capacity(survivors.len());
    let mut rouge_rejects = Vec::new();
    for (pair, score) in survivors.into_iter().zip(scores) {
        if score >= threshold {
            kept.push(pair);
        } else {
            rouge_rejects.push(pair.id);
        }
    }
    for id in rouge_rejects {
        report.record(&id, Gate::Rouge2);
    }
    report.kept = kept.len();
    (kept, report)
}
