//! Iterative data refinement.
//!
//! The initial pool is emitted as the first training batch. Each unseen part
//! is then run through the current predictor: confident predictions that
//! agree with the original answer keep the example, confident disagreeing
//! predictions replace the answer and regenerate the question, and the rest
//! are dropped. Refined and kept examples are combined into the next batch,
//! the predictor trains on it, and the threshold decays.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::ops::Range;
use std::thread;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{decode_bio, AnnotatedSentence};
use crate::answer::{category_for_label, AnswerCandidate, AnswerSpan, MaskCategory};
use crate::cloze::make_cloze;
use crate::dataset::{stable_id, DatasetSplit, Generation, QAExample};
use crate::predictor::{PredictError, PredictRequest, Prediction, Predictor};
use crate::text::find_word_occurrences;
use crate::translate::Translator;
use crate::tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    FilteredKeep,
    Refined,
    Dropped,
}

/// How a predicted answer relates to the original one, by byte-interval
/// containment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    #[serde(rename = "OA_contains_PA")]
    OaContainsPa,
    #[serde(rename = "PA_contains_OA")]
    PaContainsOa,
    Other,
    NoPrediction,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Equal => "Equal",
            Relation::OaContainsPa => "OA_contains_PA",
            Relation::PaContainsOa => "PA_contains_OA",
            Relation::Other => "Other",
            Relation::NoPrediction => "NoPrediction",
        })
    }
}

pub fn classify_relation(original: &AnswerSpan, predicted: &AnswerSpan) -> Relation {
    let (o, p) = (original.range(), predicted.range());
    let contains = |outer: &Range<usize>, inner: &Range<usize>| outer.start <= inner.start && inner.end <= outer.end;
    if o == p {
        Relation::Equal
    } else if contains(&o, &p) {
        Relation::OaContainsPa
    } else if contains(&p, &o) {
        Relation::PaContainsOa
    } else {
        Relation::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementOutcome {
    pub example_id: String,
    pub part: usize,
    pub verdict: Verdict,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_answer: Option<AnswerSpan>,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementConfig {
    pub tau0: f64,
    pub gamma: f64,
    /// refined : filtered
    pub combine_ratio: (usize, usize),
    pub keep_if_substring: bool,
    pub num_parts: usize,
    pub seed: u64,
    pub retry: RetryPolicy,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            tau0: 0.15,
            gamma: 0.9,
            combine_ratio: (1, 1),
            keep_if_substring: true,
            num_parts: 6,
            seed: 0,
            retry: RetryPolicy::default(),
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if !(0.0..=1.0).contains(&self.tau0) {
            return Err(RefineError::Config(format!("tau0 {} outside [0, 1]", self.tau0)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(RefineError::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.combine_ratio.0 == 0 || self.combine_ratio.1 == 0 {
            return Err(RefineError::Config("combine ratio terms must be positive".into()));
        }
        if self.num_parts == 0 {
            return Err(RefineError::Config("num_parts must be at least 1".into()));
        }
        Ok(())
    }

    /// Threshold used for part `k` (0-based): `tau0 * gamma^k`.
    pub fn tau_at(&self, k: usize) -> f64 {
        self.tau0 * self.gamma.powi(k as i32)
    }
}

// ---------------------------------------------------------------------------
// Question regeneration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regenerated {
    pub question: String,
    pub category: MaskCategory,
    pub ner_label: Option<String>,
}

/// Produces a question for a new answer of an existing example.
pub trait QuestionRegenerator: Sync {
    /// `None` when the new answer cannot be anchored in the source clause.
    fn regenerate(&self, example: &QAExample, predicted: &AnswerSpan, salt: u64) -> Option<Regenerated>;
}

/// Never regenerates; refined examples keep their original question.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepQuestion;

impl QuestionRegenerator for KeepQuestion {
    fn regenerate(&self, _: &QAExample, _: &AnswerSpan, _: u64) -> Option<Regenerated> {
        None
    }
}

/// Rebuilds the question from the source statement clause, with the
/// predicted answer as the new cloze answer and the example's original
/// translation method.
#[derive(Debug, Clone, Default)]
pub struct StatementRegenerator {
    statements: HashMap<String, AnnotatedSentence>,
    seed: u64,
}

impl StatementRegenerator {
    pub fn new(statements: HashMap<String, AnnotatedSentence>, seed: u64) -> Self {
        StatementRegenerator { statements, seed }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

/// Token range of `statement` inside `clause` whose text matches `answer`
/// case-insensitively and starts and ends on token boundaries.
pub fn anchor_in_clause(statement: &AnnotatedSentence, clause: Range<usize>, answer: &str) -> Option<Range<usize>> {
    if clause.is_empty() || clause.end > statement.tokens.len() {
        return None;
    }
    let span = statement.char_span(clause.clone());
    let clause_text = &statement.text[span.clone()];
    find_word_occurrences(clause_text, answer).into_iter().find_map(|occ| {
        let (s, e) = (occ.start + span.start, occ.end + span.start);
        let first = clause.clone().find(|&i| statement.tokens[i].start == s)?;
        let last = clause.clone().find(|&i| statement.tokens[i].end == e)?;
        (first <= last).then_some(first..last + 1)
    })
}

impl QuestionRegenerator for StatementRegenerator {
    fn regenerate(&self, example: &QAExample, predicted: &AnswerSpan, salt: u64) -> Option<Regenerated> {
        let prov = example.provenance.as_ref()?;
        let statement = self.statements.get(&prov.pair_id)?;
        let clause = prov.clause_range();
        let tokens = anchor_in_clause(statement, clause.clone(), &predicted.text)?;

        // category from the NER mention holding the span's syntactic head
        let depth = tree::depths(&statement.heads());
        let head = tokens.clone().min_by_key(|&i| (depth[i], i))?;
        let mentions = decode_bio(&statement.tokens, clause.clone());
        let category = mentions
            .iter()
            .find(|m| m.tokens.contains(&head))
            .map_or(MaskCategory::Thing, |m| category_for_label(&m.label));
        let ner_label = mentions.iter().find(|m| m.tokens == tokens).map(|m| m.label.clone());

        let statement_span = statement.char_span(tokens.clone());
        let candidate = AnswerCandidate {
            text: statement.text[statement_span.clone()].to_string(),
            ner_label: ner_label.clone(),
            category,
            statement_span,
            tokens,
            clause: clause.clone(),
        };
        let cloze = make_cloze(statement, clause, &candidate).ok()?;
        let question = Translator::from_method(prov.method, self.seed)
            .translate(&cloze, salt)
            .ok()?;
        Some(Regenerated {
            question: question.text,
            category,
            ner_label,
        })
    }
}

// ---------------------------------------------------------------------------
// One part
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct PartResult {
    pub refined: Vec<QAExample>,
    pub filtered: Vec<QAExample>,
    pub outcomes: Vec<RefinementOutcome>,
}

fn predict_with_retry<P: Predictor + ?Sized>(
    predictor: &P,
    example: &QAExample,
    retry: RetryPolicy,
) -> Result<Option<Prediction>, PredictError> {
    let request = PredictRequest::from(example);
    let mut attempt = 0;
    loop {
        match predictor.predict(&request) {
            Ok(p) => return Ok(p),
            Err(e) => {
                attempt += 1;
                if attempt >= retry.attempts.max(1) {
                    return Err(e);
                }
                log::warn!("predict {} failed (attempt {attempt}): {e}", example.id);
                thread::sleep(retry.backoff * 2u32.saturating_pow(attempt - 1));
            }
        }
    }
}

fn refined_example(
    original: &QAExample,
    predicted: &Prediction,
    question: String,
    regenerated: Option<&Regenerated>,
    part: usize,
) -> QAExample {
    let generation = Generation::Refined(part as u32);
    QAExample {
        id: stable_id(&[&original.id, &generation.to_string()], 24),
        title: original.title.clone(),
        context: original.context.clone(),
        question,
        answer: predicted.span.clone(),
        provenance: original.provenance.as_ref().map(|p| {
            let mut p = p.clone();
            p.generation = generation;
            p.category = regenerated.map(|r| r.category);
            p.ner_label = regenerated.and_then(|r| r.ner_label.clone());
            p
        }),
    }
}

/// Runs one unseen part through the predictor at threshold `tau`.
/// `part` is the 1-based iteration number recorded in outcomes.
pub fn refine_part<P: Predictor + ?Sized>(
    examples: &[QAExample],
    part: usize,
    predictor: &P,
    tau: f64,
    regenerator: &dyn QuestionRegenerator,
    cfg: &RefinementConfig,
) -> PartResult {
    let predictions: Vec<Result<Option<Prediction>, PredictError>> = examples
        .par_iter()
        .map(|e| predict_with_retry(predictor, e, cfg.retry))
        .collect();

    let mut result = PartResult::default();
    for (example, prediction) in examples.iter().zip(predictions) {
        let mut outcome = RefinementOutcome {
            example_id: example.id.clone(),
            part,
            verdict: Verdict::Dropped,
            relation: Relation::NoPrediction,
            new_question: None,
            new_answer: None,
            probability: 0.0,
            note: None,
        };
        let predicted = match prediction {
            Err(e) => {
                outcome.note = Some(format!("predictor error: {e}"));
                result.outcomes.push(outcome);
                continue;
            }
            Ok(None) => {
                result.outcomes.push(outcome);
                continue;
            }
            Ok(Some(p)) => p,
        };
        outcome.probability = predicted.probability;
        outcome.relation = classify_relation(&example.answer, &predicted.span);
        let keep = outcome.relation == Relation::Equal
            || (cfg.keep_if_substring && outcome.relation == Relation::OaContainsPa);
        if predicted.probability < tau {
            // dropped
        } else if keep {
            outcome.verdict = Verdict::FilteredKeep;
            result.filtered.push(example.clone());
        } else {
            let salt = u64::from_str_radix(&stable_id(&[&example.id, &part.to_string()], 16), 16).unwrap_or(0);
            let regenerated = regenerator.regenerate(example, &predicted.span, salt);
            let question = match &regenerated {
                Some(r) => r.question.clone(),
                None => {
                    outcome.note = Some("question kept: predicted answer not anchored in clause".into());
                    example.question.clone()
                }
            };
            let refined = refined_example(example, &predicted, question, regenerated.as_ref(), part);
            debug_assert!(refined.answer.verify(&refined.context).is_ok());
            outcome.verdict = Verdict::Refined;
            outcome.new_question = Some(refined.question.clone());
            outcome.new_answer = Some(refined.answer.clone());
            result.refined.push(refined);
        }
        result.outcomes.push(outcome);
    }
    result
}

// ---------------------------------------------------------------------------
// Combining
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombineResult {
    pub batch: Vec<QAExample>,
    pub refined_used: usize,
    pub filtered_used: usize,
    pub warning: Option<String>,
}

fn subsample(mut items: Vec<QAExample>, n: usize, rng: &mut ChaCha8Rng) -> Vec<QAExample> {
    if n < items.len() {
        items.shuffle(rng);
        items.truncate(n);
    }
    items
}

/// Combines refined and filtered examples at `ratio` (refined : filtered),
/// subsampling the larger side. When one side is empty the other is used
/// whole and a warning is returned.
pub fn combine(refined: Vec<QAExample>, filtered: Vec<QAExample>, ratio: (usize, usize), seed: u64) -> CombineResult {
    let (r, f) = ratio;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nr, nf) = (refined.len(), filtered.len());
    let warning = match (nr, nf) {
        (0, 0) => Some("both refined and filtered data are empty".to_string()),
        (_, 0) => Some("no filtered data; batch holds refined data only".to_string()),
        (0, _) => Some("no refined data; batch holds filtered data only".to_string()),
        _ => None,
    };
    let (keep_r, keep_f) = if nr == 0 || nf == 0 {
        (nr, nf)
    } else if nr * f <= nf * r {
        let want = ((nr * f) as f64 / r as f64).round() as usize;
        (nr, want.min(nf))
    } else {
        let want = ((nf * r) as f64 / f as f64).round() as usize;
        (want.min(nr), nf)
    };
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let mut batch = subsample(refined, keep_r, &mut rng);
    batch.extend(subsample(filtered, keep_f, &mut rng));
    batch.shuffle(&mut rng);
    CombineResult {
        batch,
        refined_used: keep_r,
        filtered_used: keep_f,
        warning,
    }
}

// ---------------------------------------------------------------------------
// Iterations
// ---------------------------------------------------------------------------

/// Receives each training batch; index 0 is the initial pool.
pub trait BatchSink {
    fn emit(&mut self, index: usize, batch: &[QAExample]) -> Result<(), String>;
}

/// Keeps batches in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub batches: Vec<Vec<QAExample>>,
}

impl BatchSink for VecSink {
    fn emit(&mut self, _index: usize, batch: &[QAExample]) -> Result<(), String> {
        self.batches.push(batch.to_vec());
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub part: usize,
    pub tau: f64,
    pub size: usize,
    pub verdicts: BTreeMap<Verdict, usize>,
    pub relations: BTreeMap<Relation, usize>,
    pub refined: usize,
    pub filtered: usize,
    pub questions_kept: usize,
    pub batch_size: usize,
    pub train_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub initial_size: usize,
    pub taus: Vec<f64>,
    pub parts: Vec<PartReport>,
    pub verdicts: BTreeMap<Verdict, usize>,
    pub relations: BTreeMap<Relation, usize>,
    pub batches_emitted: usize,
    #[serde(skip)]
    pub outcomes: Vec<RefinementOutcome>,
}

impl RefinementReport {
    /// One JSON object per outcome, then a summary object.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        #[derive(Serialize)]
        struct Tagged<'a, T> {
            #[serde(rename = "type")]
            kind: &'a str,
            #[serde(flatten)]
            inner: &'a T,
        }
        for o in &self.outcomes {
            serde_json::to_writer(
                &mut w,
                &Tagged {
                    kind: "outcome",
                    inner: o,
                },
            )?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut w,
            &Tagged {
                kind: "summary",
                inner: self,
            },
        )?;
        w.write_all(b"\n")
    }
}

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("invalid refinement config: {0}")]
    Config(String),
    #[error("split has {found} parts, config expects {expected}")]
    PartsMismatch { expected: usize, found: usize },
}

/// A run stopped by a sink or training failure, with everything done so far.
#[derive(Debug, Error)]
#[error("refinement aborted at batch {batch}: {reason}")]
pub struct RefineAbort {
    pub batch: usize,
    pub reason: String,
    pub report: Box<RefinementReport>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(#[from] RefineError),
    #[error(transparent)]
    Aborted(#[from] RefineAbort),
}

fn deliver<P: Predictor + ?Sized>(
    index: usize,
    batch: &[QAExample],
    sink: &mut dyn BatchSink,
    predictor: &mut P,
    report: &mut RefinementReport,
) -> Result<u64, RefineAbort> {
    let abort = |reason: String, report: &RefinementReport| RefineAbort {
        batch: index,
        reason,
        report: Box::new(report.clone()),
    };
    sink.emit(index, batch)
        .map_err(|e| abort(format!("sink: {e}"), report))?;
    report.batches_emitted += 1;
    let ack = predictor
        .train(batch)
        .map_err(|e| abort(format!("train: {e}"), report))?;
    Ok(ack.steps)
}

/// Runs the whole refinement loop over `split`.
pub fn run_iterations<P: Predictor + ?Sized>(
    split: &DatasetSplit,
    predictor: &mut P,
    regenerator: &dyn QuestionRegenerator,
    cfg: &RefinementConfig,
    sink: &mut dyn BatchSink,
) -> Result<RefinementReport, RunError> {
    cfg.validate()?;
    if split.parts.len() != cfg.num_parts {
        return Err(RefineError::PartsMismatch {
            expected: cfg.num_parts,
            found: split.parts.len(),
        }
        .into());
    }
    let mut report = RefinementReport {
        initial_size: split.initial.len(),
        ..Default::default()
    };
    deliver(0, &split.initial, sink, predictor, &mut report)?;

    for (k, part) in split.parts.iter().enumerate() {
        let tau = cfg.tau_at(k);
        let index = k + 1;
        let result = refine_part(part, index, &*predictor, tau, regenerator, cfg);

        let mut pr = PartReport {
            part: index,
            tau,
            size: part.len(),
            ..Default::default()
        };
        for o in &result.outcomes {
            *pr.verdicts.entry(o.verdict).or_default() += 1;
            *pr.relations.entry(o.relation).or_default() += 1;
            if o.verdict == Verdict::Refined && o.note.is_some() {
                pr.questions_kept += 1;
            }
        }
        pr.refined = result.refined.len();
        pr.filtered = result.filtered.len();
        for (v, n) in &pr.verdicts {
            *report.verdicts.entry(*v).or_default() += n;
        }
        for (r, n) in &pr.relations {
            *report.relations.entry(*r).or_default() += n;
        }
        report.taus.push(tau);
        report.outcomes.extend(result.outcomes);

        let combined = combine(
            result.refined,
            result.filtered,
            cfg.combine_ratio,
            cfg.seed.wrapping_add(index as u64),
        );
        pr.batch_size = combined.batch.len();
        pr.warning = combined.warning;
        report.parts.push(pr);
        let steps = deliver(index, &combined.batch, sink, predictor, &mut report)?;
        if let Some(last) = report.parts.last_mut() {
            last.train_steps = steps;
        }
    }
    Ok(report)
}
