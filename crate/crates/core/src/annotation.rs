//! Annotated statements and documents.
//!
//! Token offsets are byte offsets into the owning text. Heads are indices
//! within the same sentence; `None` marks the sentence root.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_wordlike, CharIndex};
use crate::tree::{self, TreeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub head: Option<usize>,
    pub deprel: String,
    pub pos: String,
    pub ner: String,
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn is_punct(&self) -> bool {
        self.pos == "PUNCT" || !is_wordlike(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("token at position {position} carries index {found}")]
    TokenIndex { position: usize, found: usize },
    #[error("token {token} has empty or inverted offsets {start}..{end}")]
    EmptySpan { token: usize, start: usize, end: usize },
    #[error("token {token} offset {offset} outside text (length {len} chars)")]
    OffsetOutOfBounds { token: usize, offset: usize, len: usize },
    #[error("token {token} text {expected:?} does not match text slice {found:?}")]
    TextMismatch {
        token: usize,
        expected: String,
        found: String,
    },
    #[error("token {token} overlaps or precedes the previous token")]
    OverlappingOffsets { token: usize },
    #[error("token {token} has invalid head {head}")]
    BadHead { token: usize, head: i64 },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("clause {start}..{end} is empty or outside 0..{len}")]
    BadClause { start: usize, end: usize, len: usize },
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
}

/// Checks offset and text invariants of `tokens` against `text`, requiring
/// that the first token start at or after `floor`.
fn check_offsets(text: &str, tokens: &[Token], floor: usize) -> Result<(), ValidationError> {
    let mut prev_end = floor;
    for (position, t) in tokens.iter().enumerate() {
        if t.index != position {
            return Err(ValidationError::TokenIndex {
                position,
                found: t.index,
            });
        }
        if t.start >= t.end {
            return Err(ValidationError::EmptySpan {
                token: position,
                start: t.start,
                end: t.end,
            });
        }
        if t.start < prev_end {
            return Err(ValidationError::OverlappingOffsets { token: position });
        }
        let slice = text.get(t.start..t.end).ok_or(ValidationError::OffsetOutOfBounds {
            token: position,
            offset: t.end,
            len: text.chars().count(),
        })?;
        if slice != t.text {
            return Err(ValidationError::TextMismatch {
                token: position,
                expected: t.text.clone(),
                found: slice.to_string(),
            });
        }
        prev_end = t.end;
    }
    Ok(())
}

fn heads_of(tokens: &[Token]) -> Vec<Option<usize>> {
    tokens.iter().map(|t| t.head).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
    /// Half-open token ranges marking sub-clauses, when upstream supplied them.
    pub clause_spans: Option<Vec<Range<usize>>>,
}

impl AnnotatedSentence {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.tokens.is_empty() {
            return Err(ValidationError::EmptySentence(0));
        }
        check_offsets(&self.text, &self.tokens, 0)?;
        tree::check_tree(&self.heads())?;
        if let Some(clauses) = &self.clause_spans {
            for c in clauses {
                if c.start >= c.end || c.end > self.tokens.len() {
                    return Err(ValidationError::BadClause {
                        start: c.start,
                        end: c.end,
                        len: self.tokens.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn heads(&self) -> Vec<Option<usize>> {
        heads_of(&self.tokens)
    }

    pub fn root(&self) -> usize {
        self.tokens.iter().position(|t| t.head.is_none()).unwrap_or(0)
    }

    /// Byte range of the text covered by a token range.
    pub fn char_span(&self, tokens: Range<usize>) -> Range<usize> {
        self.tokens[tokens.start].start..self.tokens[tokens.end - 1].end
    }

    /// Source text covered by a token range.
    pub fn slice(&self, tokens: Range<usize>) -> &str {
        &self.text[self.char_span(tokens)]
    }
}

/// A document: sentences sharing one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub text: String,
    pub sentences: Vec<Vec<Token>>,
}

impl AnnotatedDocument {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut floor = 0;
        for (i, sentence) in self.sentences.iter().enumerate() {
            if sentence.is_empty() {
                return Err(ValidationError::EmptySentence(i));
            }
            check_offsets(&self.text, sentence, floor)?;
            tree::check_tree(&heads_of(sentence))?;
            floor = sentence.last().map_or(floor, |t| t.end);
        }
        Ok(())
    }

    /// Number of word tokens (tokens with at least one alphanumeric char).
    pub fn word_count(&self) -> usize {
        self.sentences
            .iter()
            .map(|s| s.iter().filter(|t| is_wordlike(&t.text)).count())
            .sum()
    }

    /// Keeps the longest prefix of whole sentences holding at most
    /// `max_words` words; the text is cut at the end of the last kept
    /// sentence. Returns `None` when even the first sentence is too long.
    pub fn truncate_words(&self, max_words: usize) -> Option<AnnotatedDocument> {
        if self.word_count() <= max_words {
            return Some(self.clone());
        }
        let mut words = 0;
        let mut keep = 0;
        for sentence in &self.sentences {
            let n = sentence.iter().filter(|t| is_wordlike(&t.text)).count();
            if words + n > max_words {
                break;
            }
            words += n;
            keep += 1;
        }
        if keep == 0 {
            return None;
        }
        let sentences = self.sentences[..keep].to_vec();
        let cut = sentences[keep - 1].last().map_or(0, |t| t.end);
        Some(AnnotatedDocument {
            text: self.text[..cut].to_string(),
            sentences,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementDocPair {
    pub id: String,
    pub statement: AnnotatedSentence,
    pub document: AnnotatedDocument,
    pub meta: BTreeMap<String, String>,
}

impl StatementDocPair {
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.statement.validate()?;
        self.document.validate()
    }

    /// Page title from `meta`, falling back to the pair id.
    pub fn title(&self) -> &str {
        self.meta
            .get("title")
            .or_else(|| self.meta.get("page_title"))
            .map_or(self.id.as_str(), String::as_str)
    }
}

/// A BIO-decoded entity mention: a half-open token range plus its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub tokens: Range<usize>,
    pub label: String,
}

/// Decodes BIO tags of `tokens[range]` into mentions. An `I-` tag that does
/// not continue a mention of the same label starts a new one. Mentions are
/// cut at the range boundaries.
pub fn decode_bio(tokens: &[Token], range: Range<usize>) -> Vec<Mention> {
    let mut out: Vec<Mention> = Vec::new();
    let mut open: Option<Mention> = None;
    for i in range.clone() {
        let tag = tokens[i].ner.as_str();
        let (prefix, label) = match tag.split_once('-') {
            Some((p, l)) if p == "B" || p == "I" => (p, l),
            _ => {
                out.extend(open.take());
                continue;
            }
        };
        match (&mut open, prefix) {
            (Some(m), "I") if m.label == label => m.tokens.end = i + 1,
            _ => {
                out.extend(open.take());
                open = Some(Mention {
                    tokens: i..i + 1,
                    label: label.to_string(),
                });
            }
        }
    }
    out.extend(open);
    out
}

// ---------------------------------------------------------------------------
// Interchange (JSONL) representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawToken {
    pub i: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub head: i64,
    pub deprel: String,
    pub pos: String,
    pub ner: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSentence {
    pub text: String,
    pub tokens: Vec<RawToken>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clauses: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub text: String,
    pub sentences: Vec<Vec<RawToken>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPair {
    pub id: String,
    pub statement: RawSentence,
    pub document: RawDocument,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

fn convert_tokens(raw: &[RawToken], index: &CharIndex) -> Result<Vec<Token>, ValidationError> {
    raw.iter()
        .enumerate()
        .map(|(position, t)| {
            let byte = |offset: usize| {
                index.byte(offset).ok_or(ValidationError::OffsetOutOfBounds {
                    token: position,
                    offset,
                    len: index.char_len(),
                })
            };
            let head = match t.head {
                -1 => None,
                h if h >= 0 => Some(h as usize),
                h => {
                    return Err(ValidationError::BadHead {
                        token: position,
                        head: h,
                    })
                }
            };
            Ok(Token {
                index: t.i,
                text: t.text.clone(),
                start: byte(t.start)?,
                end: byte(t.end)?,
                head,
                deprel: t.deprel.clone(),
                pos: t.pos.clone(),
                ner: t.ner.clone(),
            })
        })
        .collect()
}

impl RawPair {
    /// Converts character offsets to byte offsets and validates every
    /// invariant of the annotated pair.
    pub fn into_pair(self) -> Result<StatementDocPair, ValidationError> {
        let s_index = CharIndex::new(&self.statement.text);
        let statement = AnnotatedSentence {
            tokens: convert_tokens(&self.statement.tokens, &s_index)?,
            clause_spans: self
                .statement
                .clauses
                .map(|cs| cs.into_iter().map(|[a, b]| a..b).collect()),
            text: self.statement.text,
        };
        let d_index = CharIndex::new(&self.document.text);
        let sentences = self
            .document
            .sentences
            .iter()
            .map(|s| convert_tokens(s, &d_index))
            .collect::<Result<Vec<_>, _>>()?;
        let pair = StatementDocPair {
            id: self.id,
            statement,
            document: AnnotatedDocument {
                text: self.document.text,
                sentences,
            },
            meta: self.meta,
        };
        pair.validate()?;
        Ok(pair)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Builds a sentence from whitespace-separated words with the given heads
    /// (`-1` = root), deprels and NER tags. Offsets follow single spacing.
    pub fn sentence(words: &[&str], heads: &[i64], ner: &[&str]) -> AnnotatedSentence {
        let text = words.join(" ");
        let mut pos = 0;
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let t = Token {
                    index: i,
                    text: w.to_string(),
                    start: pos,
                    end: pos + w.len(),
                    head: (heads[i] >= 0).then(|| heads[i] as usize),
                    deprel: "dep".into(),
                    pos: if is_wordlike(w) { "X".into() } else { "PUNCT".into() },
                    ner: ner.get(i).copied().unwrap_or("O").to_string(),
                };
                pos += w.len() + 1;
                t
            })
            .collect();
        AnnotatedSentence {
            text,
            tokens,
            clause_spans: None,
        }
    }
}
