//! QA examples: assembly from filtered pairs, SQuAD-1.1 serialization, and
//! the initial/unseen split used by iterative refinement.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::StatementDocPair;
use crate::answer::{extract_candidates, extract_subclauses, locate_answer, AnswerSpan, MaskCategory};
use crate::cloze::make_cloze;
use crate::text::{byte_to_char, CharIndex, Stopwords};
use crate::translate::{Method, Translator};

/// Where an example's question came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generation {
    Original,
    /// Produced by refinement in iteration `k` (1-based).
    Refined(u32),
}

impl fmt::Display for Generation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generation::Original => f.write_str("original"),
            Generation::Refined(k) => write!(f, "refined-{k}"),
        }
    }
}

impl FromStr for Generation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            return Ok(Generation::Original);
        }
        s.strip_prefix("refined-")
            .and_then(|k| k.parse().ok())
            .map(Generation::Refined)
            .ok_or_else(|| format!("bad generation {s:?}"))
    }
}

impl Serialize for Generation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Generation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub pair_id: String,
    /// Token range of the statement clause the question was built from.
    pub clause: [usize; 2],
    pub method: Method,
    pub generation: Generation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<MaskCategory>,
    /// NER label of the answer, absent when the answer is not an NER mention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner_label: Option<String>,
}

impl Provenance {
    pub fn clause_range(&self) -> Range<usize> {
        self.clause[0]..self.clause[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAExample {
    pub id: String,
    pub title: String,
    pub context: String,
    pub question: String,
    /// Byte span into `context`.
    pub answer: AnswerSpan,
    pub provenance: Option<Provenance>,
}

/// Hex SHA-256 of the parts joined by NUL, truncated to `len` hex chars.
pub fn stable_id(parts: &[&str], len: usize) -> String {
    let mut hasher = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0u8]);
        }
        hasher.update(p.as_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect::<String>()[..len].to_string()
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub min_clause_tokens: usize,
    pub window: usize,
    pub stopwords: Stopwords,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            min_clause_tokens: 6,
            window: 10,
            stopwords: Stopwords::default(),
        }
    }
}

/// A pair or example that produced no output, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildFailure {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    pub examples: Vec<QAExample>,
    pub failures: Vec<BuildFailure>,
}

fn build_pair(pair: &StatementDocPair, translator: Translator, cfg: &BuildConfig) -> BuildOutput {
    let mut out = BuildOutput::default();
    let fail = |reason: String| BuildFailure {
        pair_id: pair.id.clone(),
        reason,
    };
    let clauses = extract_subclauses(&pair.statement, cfg.min_clause_tokens);
    if clauses.is_empty() {
        out.failures.push(fail("no sub-clause long enough".into()));
        return out;
    }
    let mut any_candidate = false;
    for clause in clauses {
        for cand in extract_candidates(&pair.statement, clause.clone(), &pair.document) {
            any_candidate = true;
            let id = stable_id(
                &[
                    &pair.id,
                    &clause.start.to_string(),
                    &clause.end.to_string(),
                    &cand.statement_span.start.to_string(),
                    &cand.statement_span.end.to_string(),
                ],
                24,
            );
            let answer = match locate_answer(&pair.document, &cand, &pair.statement, cfg.window, &cfg.stopwords) {
                Ok(a) => a,
                Err(e) => {
                    out.failures.push(fail(e.to_string()));
                    continue;
                }
            };
            let question = make_cloze(&pair.statement, clause.clone(), &cand).and_then(|cloze| {
                let salt = u64::from_str_radix(&id[..16], 16).unwrap_or(0);
                translator.translate(&cloze, salt)
            });
            let question = match question {
                Ok(q) => q,
                Err(e) => {
                    out.failures.push(fail(format!("{}: {e}", cand.text)));
                    continue;
                }
            };
            assert!(
                answer.verify(&pair.document.text).is_ok(),
                "answer span must match its context"
            );
            out.examples.push(QAExample {
                id,
                title: pair.title().to_string(),
                context: pair.document.text.clone(),
                question: question.text,
                answer,
                provenance: Some(Provenance {
                    pair_id: pair.id.clone(),
                    clause: [clause.start, clause.end],
                    method: question.method,
                    generation: Generation::Original,
                    category: Some(cand.category),
                    ner_label: cand.ner_label.clone(),
                }),
            });
        }
    }
    if !any_candidate {
        out.failures.push(fail("no answer candidate found in document".into()));
    }
    out
}

/// Runs clause extraction, candidate extraction, answer localization, cloze
/// generation and translation for every pair. One example per (clause,
/// candidate); failures are collected, never fatal.
pub fn build_examples(pairs: &[StatementDocPair], translator: Translator, cfg: &BuildConfig) -> BuildOutput {
    let per_pair: Vec<BuildOutput> = pairs.par_iter().map(|p| build_pair(p, translator, cfg)).collect();
    let mut out = BuildOutput::default();
    for p in per_pair {
        for f in &p.failures {
            log::debug!("pair {}: {}", f.pair_id, f.reason);
        }
        out.examples.extend(p.examples);
        out.failures.extend(p.failures);
    }
    out
}

// ---------------------------------------------------------------------------
// SQuAD 1.1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadFile {
    pub version: String,
    pub data: Vec<SquadArticle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadArticle {
    pub title: String,
    pub paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadParagraph {
    pub context: String,
    pub qas: Vec<SquadQa>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadQa {
    pub id: String,
    pub question: String,
    pub answers: Vec<SquadAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    /// Character offset into the context.
    pub answer_start: usize,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("malformed SQuAD JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("qa {id:?}: {reason}")]
    BadAnswer { id: String, reason: String },
    #[error("initial size {initial} exceeds {available} examples")]
    InitialTooLarge { initial: usize, available: usize },
    #[error("number of parts must be at least 1")]
    NoParts,
}

impl QAExample {
    pub fn to_squad_qa(&self) -> SquadQa {
        SquadQa {
            id: self.id.clone(),
            question: self.question.clone(),
            answers: vec![SquadAnswer {
                text: self.answer.text.clone(),
                answer_start: byte_to_char(&self.context, self.answer.start),
            }],
            provenance: self.provenance.clone(),
        }
    }
}

/// Groups examples into articles by title and paragraphs by context, in
/// order of first appearance.
pub fn to_squad(examples: &[QAExample]) -> Result<SquadFile, DatasetError> {
    let mut seen = HashSet::new();
    for e in examples {
        if !seen.insert(e.id.as_str()) {
            return Err(DatasetError::DuplicateId(e.id.clone()));
        }
    }
    let mut data: Vec<SquadArticle> = Vec::new();
    let mut article_at: HashMap<&str, usize> = HashMap::new();
    let mut paragraph_at: HashMap<(usize, &str), usize> = HashMap::new();
    for e in examples {
        let a = *article_at.entry(e.title.as_str()).or_insert_with(|| {
            data.push(SquadArticle {
                title: e.title.clone(),
                paragraphs: Vec::new(),
            });
            data.len() - 1
        });
        let paragraphs = &mut data[a].paragraphs;
        let p = *paragraph_at.entry((a, e.context.as_str())).or_insert_with(|| {
            paragraphs.push(SquadParagraph {
                context: e.context.clone(),
                qas: Vec::new(),
            });
            paragraphs.len() - 1
        });
        paragraphs[p].qas.push(e.to_squad_qa());
    }
    Ok(SquadFile {
        version: "1.1".into(),
        data,
    })
}

pub fn to_squad_json(examples: &[QAExample], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let file = to_squad(examples)?;
    fs::write(path, serde_json::to_vec(&file)?)?;
    Ok(())
}

/// Flattens a SQuAD file into examples, checking every answer against its
/// context. Only the first answer of each qa is used.
pub fn from_squad(file: SquadFile) -> Result<Vec<QAExample>, DatasetError> {
    let mut out = Vec::new();
    for article in file.data {
        for paragraph in article.paragraphs {
            let index = CharIndex::new(&paragraph.context);
            for qa in paragraph.qas {
                let bad = |reason: String| DatasetError::BadAnswer {
                    id: qa.id.clone(),
                    reason,
                };
                let ans = qa.answers.first().ok_or_else(|| bad("no answers".into()))?;
                let start = index
                    .byte(ans.answer_start)
                    .ok_or_else(|| bad(format!("answer_start {} past context end", ans.answer_start)))?;
                let end = start + ans.text.len();
                let span = AnswerSpan::from_context(&paragraph.context, start..end).map_err(|e| bad(e.to_string()))?;
                if span.text != ans.text {
                    return Err(bad(format!(
                        "context slice {:?} does not match answer {:?}",
                        span.text, ans.text
                    )));
                }
                out.push(QAExample {
                    id: qa.id.clone(),
                    title: article.title.clone(),
                    context: paragraph.context.clone(),
                    question: qa.question.clone(),
                    answer: span,
                    provenance: qa.provenance.clone(),
                });
            }
        }
    }
    Ok(out)
}

pub fn read_squad_json(path: impl AsRef<Path>) -> Result<Vec<QAExample>, DatasetError> {
    let bytes = fs::read(path)?;
    from_squad(serde_json::from_slice(&bytes)?)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub initial: Vec<QAExample>,
    pub parts: Vec<Vec<QAExample>>,
}

/// Uniformly samples `initial_size` examples for the initial pool and deals
/// the rest into `num_parts` parts whose sizes differ by at most one.
pub fn sample_split(
    examples: Vec<QAExample>,
    initial_size: usize,
    num_parts: usize,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if num_parts == 0 {
        return Err(DatasetError::NoParts);
    }
    if initial_size > examples.len() {
        return Err(DatasetError::InitialTooLarge {
            initial: initial_size,
            available: examples.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = examples;
    items.shuffle(&mut rng);
    let rest = items.split_off(initial_size);
    let base = rest.len() / num_parts;
    let extra = rest.len() % num_parts;
    let mut parts = Vec::with_capacity(num_parts);
    let mut iter = rest.into_iter();
    for k in 0..num_parts {
        let size = base + usize::from(k < extra);
        parts.push(iter.by_ref().take(size).collect());
    }
    Ok(DatasetSplit { initial: items, parts })
}
