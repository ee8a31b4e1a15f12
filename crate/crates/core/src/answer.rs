//! Sub-clauses, answer candidates, and answer localization in the document.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{decode_bio, AnnotatedDocument, AnnotatedSentence};
use crate::text::{find_word_occurrences, words, Stopwords};
use crate::tree;

/// High-level answer category used as the cloze mask token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MaskCategory {
    Person,
    Org,
    Place,
    Thing,
    Temporal,
    Numeric,
}

impl MaskCategory {
    pub const ALL: [MaskCategory; 6] = [
        MaskCategory::Person,
        MaskCategory::Org,
        MaskCategory::Place,
        MaskCategory::Thing,
        MaskCategory::Temporal,
        MaskCategory::Numeric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskCategory::Person => "PERSON",
            MaskCategory::Org => "ORG",
            MaskCategory::Place => "PLACE",
            MaskCategory::Thing => "THING",
            MaskCategory::Temporal => "TEMPORAL",
            MaskCategory::Numeric => "NUMERIC",
        }
    }

    /// The mask token, e.g. `[THING]`.
    pub fn mask_token(self) -> String {
        format!("[{}]", self.as_str())
    }

    pub fn wh_word(self) -> &'static str {
        match self {
            MaskCategory::Person | MaskCategory::Org => "Who",
            MaskCategory::Place => "Where",
            MaskCategory::Temporal => "When",
            MaskCategory::Thing => "What",
            MaskCategory::Numeric => "How much",
        }
    }
}

impl fmt::Display for MaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mask category {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for MaskCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

/// Groups a raw NER label into its mask category. Returns `None` for labels
/// outside the grouping table.
pub fn group_label(label: &str) -> Option<MaskCategory> {
    use MaskCategory::*;
    Some(match label {
        "PERSON" | "PER" | "NORP" => Person,
        "ORG" => Org,
        "GPE" | "LOC" | "FAC" => Place,
        "PRODUCT" | "EVENT" | "WORK_OF_ART" | "LAW" | "LANGUAGE" => Thing,
        "DATE" | "TIME" => Temporal,
        "MONEY" | "QUANTITY" | "PERCENT" | "CARDINAL" | "ORDINAL" => Numeric,
        _ => return None,
    })
}

/// Like [`group_label`], mapping unknown labels to `THING` with a warning.
pub fn category_for_label(label: &str) -> MaskCategory {
    group_label(label).unwrap_or_else(|| {
        warn!("unknown NER label {label:?}, using THING");
        MaskCategory::Thing
    })
}

/// A byte span of a context with its text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("span {start}..{end} is not a valid slice of the context")]
    OutOfBounds { start: usize, end: usize },
    #[error("span text {expected:?} does not match context slice {found:?}")]
    Mismatch { expected: String, found: String },
}

impl AnswerSpan {
    /// Takes the span text from the context, so the result is bit-exact.
    pub fn from_context(context: &str, range: Range<usize>) -> Result<Self, SpanError> {
        let text = context.get(range.clone()).ok_or(SpanError::OutOfBounds {
            start: range.start,
            end: range.end,
        })?;
        Ok(AnswerSpan {
            start: range.start,
            end: range.end,
            text: text.to_string(),
        })
    }

    /// Checks `context[start..end] == text`.
    pub fn verify(&self, context: &str) -> Result<(), SpanError> {
        match context.get(self.start..self.end) {
            None => Err(SpanError::OutOfBounds {
                start: self.start,
                end: self.end,
            }),
            Some(s) if s == self.text => Ok(()),
            Some(s) => Err(SpanError::Mismatch {
                expected: self.text.clone(),
                found: s.to_string(),
            }),
        }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub text: String,
    /// Raw NER label; `None` for spans that did not come from the NER layer.
    pub ner_label: Option<String>,
    pub category: MaskCategory,
    /// Byte span in the statement text.
    pub statement_span: Range<usize>,
    /// Token range in the statement.
    pub tokens: Range<usize>,
    pub clause: Range<usize>,
}

const CLAUSAL_RELATIONS: &[&str] = &["ccomp", "advcl", "relcl", "acl:relcl"];

fn is_clausal(deprel: &str, pos: &str) -> bool {
    CLAUSAL_RELATIONS.contains(&deprel) || (deprel == "conj" && matches!(pos, "VERB" | "AUX"))
}

/// Sub-clause token ranges of a statement, each at least `min_tokens` long.
///
/// Upstream clause spans are used when present. Otherwise clauses come from
/// the dependency tree: the whole sentence plus the span of every subtree
/// headed by a clausal relation.
pub fn extract_subclauses(statement: &AnnotatedSentence, min_tokens: usize) -> Vec<Range<usize>> {
    let mut clauses: Vec<Range<usize>> = match &statement.clause_spans {
        Some(spans) => spans.clone(),
        None => {
            let kids = tree::children(&statement.heads());
            let whole = 0..statement.tokens.len();
            let mut out = vec![whole];
            for t in &statement.tokens {
                if t.head.is_some() && is_clausal(&t.deprel, &t.pos) {
                    let nodes = tree::subtree(&kids, t.index);
                    out.push(nodes[0]..nodes[nodes.len() - 1] + 1);
                }
            }
            out
        }
    };
    clauses.retain(|c| c.len() >= min_tokens);
    clauses.sort_by_key(|c| (c.start, c.end));
    clauses.dedup();
    clauses
}

/// Entity mentions inside `clause` whose surface text occurs in the
/// document (case-insensitive, on word boundaries).
pub fn extract_candidates(
    statement: &AnnotatedSentence,
    clause: Range<usize>,
    document: &AnnotatedDocument,
) -> Vec<AnswerCandidate> {
    decode_bio(&statement.tokens, clause.clone())
        .into_iter()
        .filter_map(|m| {
            let span = statement.char_span(m.tokens.clone());
            let text = statement.text[span.clone()].to_string();
            if find_word_occurrences(&document.text, &text).is_empty() {
                return None;
            }
            Some(AnswerCandidate {
                category: category_for_label(&m.label),
                ner_label: Some(m.label),
                text,
                statement_span: span,
                tokens: m.tokens,
                clause: clause.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("answer not in document: {0:?}")]
pub struct AnswerNotInDocument(pub String);

/// Every occurrence of `answer` in `document_text` with its context overlap
/// score against `statement_content`.
pub fn occurrence_overlaps(
    document_text: &str,
    answer: &str,
    statement_content: &std::collections::HashSet<String>,
    window: usize,
    stopwords: &Stopwords,
) -> Vec<(Range<usize>, usize)> {
    let doc_words = words(document_text);
    find_word_occurrences(document_text, answer)
        .into_iter()
        .map(|occ| {
            let before = doc_words.partition_point(|w| w.span.end <= occ.start);
            let after = doc_words.partition_point(|w| w.span.start < occ.end);
            let left = &doc_words[before.saturating_sub(window)..before];
            let right = &doc_words[after..(after + window).min(doc_words.len())];
            let context: std::collections::HashSet<&str> = left
                .iter()
                .chain(right)
                .map(|w| w.norm.as_str())
                .filter(|w| !stopwords.contains(w))
                .collect();
            let overlap = context.iter().filter(|w| statement_content.contains(**w)).count();
            (occ, overlap)
        })
        .collect()
}

/// Picks the occurrence of the candidate whose surrounding `window` words
/// on each side share the most content words with the statement. Ties go
/// to the earliest occurrence.
pub fn locate_answer(
    document: &AnnotatedDocument,
    candidate: &AnswerCandidate,
    statement: &AnnotatedSentence,
    window: usize,
    stopwords: &Stopwords,
) -> Result<AnswerSpan, AnswerNotInDocument> {
    let content = stopwords.content_set(&statement.text);
    let scored = occurrence_overlaps(&document.text, &candidate.text, &content, window, stopwords);
    let mut best: Option<(Range<usize>, usize)> = None;
    for (occ, overlap) in scored {
        if best.as_ref().is_none_or(|(_, b)| overlap > *b) {
            best = Some((occ, overlap));
        }
    }
    let (range, _) = best.ok_or_else(|| AnswerNotInDocument(candidate.text.clone()))?;
    Ok(AnswerSpan::from_context(&document.text, range).expect("occurrence ranges are char-aligned"))
}
