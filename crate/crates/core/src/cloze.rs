//! Cloze questions: a sub-clause with its answer collapsed to one mask node.

use std::ops::Range;

use thiserror::Error;

use crate::annotation::AnnotatedSentence;
use crate::answer::{AnswerCandidate, MaskCategory};
use crate::tree::{self, TreeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClozeToken {
    pub text: String,
    pub head: Option<usize>,
    pub deprel: String,
    pub pos: String,
    /// Source text between the previous clause token and this one.
    pub gap_before: String,
    pub is_mask: bool,
}

impl ClozeToken {
    pub fn is_punct(&self) -> bool {
        !self.is_mask && (self.pos == "PUNCT" || !crate::text::is_wordlike(&self.text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClozeQuestion {
    pub tokens: Vec<ClozeToken>,
    pub mask_index: usize,
    pub category: MaskCategory,
    pub answer: AnswerCandidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClozeError {
    #[error("answer tokens {answer:?} cross clause {clause:?}")]
    AnswerOutsideClause { answer: Range<usize>, clause: Range<usize> },
    #[error("answer has no tokens")]
    EmptyAnswer,
    #[error("clause {0:?} outside the statement")]
    BadClause(Range<usize>),
    #[error("mask node absent")]
    NoMask,
    #[error("cloze tree invalid: {0}")]
    Tree(#[from] TreeError),
}

impl ClozeQuestion {
    pub fn heads(&self) -> Vec<Option<usize>> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    /// Checks the single-mask and tree invariants.
    pub fn validate(&self) -> Result<(), ClozeError> {
        let masks: Vec<usize> = self
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_mask)
            .map(|(i, _)| i)
            .collect();
        if masks != [self.mask_index] {
            return Err(ClozeError::NoMask);
        }
        tree::check_tree(&self.heads())?;
        Ok(())
    }

    /// The cloze as text, with source spacing between tokens.
    pub fn text(&self) -> String {
        let order: Vec<usize> = (0..self.tokens.len()).collect();
        self.render(&order, &self.category.mask_token())
    }

    /// Joins the tokens at `order`, rendering the mask as `mask_text`. Two
    /// tokens that were adjacent in the clause keep their source gap; any
    /// other pair is separated by one space.
    pub fn render(&self, order: &[usize], mask_text: &str) -> String {
        let mut out = String::new();
        let mut prev: Option<usize> = None;
        for &i in order {
            let tok = &self.tokens[i];
            if let Some(p) = prev {
                if p + 1 == i {
                    out.push_str(&tok.gap_before);
                } else {
                    out.push(' ');
                }
            }
            out.push_str(if tok.is_mask { mask_text } else { &tok.text });
            prev = Some(i);
        }
        out
    }
}

/// Builds the cloze for `answer` within `clause` of `statement`.
///
/// The answer's tokens collapse into one mask node that takes the place of
/// the answer's syntactic head (its token closest to the root). Heads that
/// point outside the clause are reattached to the clause root, which is the
/// remaining node closest to the sentence root.
pub fn make_cloze(
    statement: &AnnotatedSentence,
    clause: Range<usize>,
    answer: &AnswerCandidate,
) -> Result<ClozeQuestion, ClozeError> {
    let span = answer.tokens.clone();
    if clause.start >= clause.end || clause.end > statement.tokens.len() {
        return Err(ClozeError::BadClause(clause));
    }
    if span.is_empty() {
        return Err(ClozeError::EmptyAnswer);
    }
    if span.start < clause.start || span.end > clause.end {
        return Err(ClozeError::AnswerOutsideClause { answer: span, clause });
    }

    let full_heads = statement.heads();
    let depth = tree::depths(&full_heads);
    let answer_head = span.clone().min_by_key(|&i| (depth[i], i)).expect("non-empty answer");

    // statement index -> cloze index
    let mut map = vec![None; statement.tokens.len()];
    let mut sources = Vec::new();
    for i in clause.clone() {
        if span.contains(&i) {
            if i == span.start {
                map[i] = Some(sources.len());
                sources.push(answer_head);
            } else {
                map[i] = map[span.start];
            }
        } else {
            map[i] = Some(sources.len());
            sources.push(i);
        }
    }
    let mask_index = map[span.start].expect("mask mapped");

    let resolved: Vec<Option<usize>> = sources
        .iter()
        .map(|&src| full_heads[src].and_then(|h| map[h]))
        .collect();
    let root = (0..sources.len())
        .filter(|&n| resolved[n].is_none())
        .min_by_key(|&n| (depth[sources[n]], n))
        .expect("a clause always has a topmost node");

    let text = &statement.text;
    let mut tokens = Vec::with_capacity(sources.len());
    let mut prev_end: Option<usize> = None;
    for (n, &src) in sources.iter().enumerate() {
        let is_mask = n == mask_index;
        let (start, end) = if is_mask {
            (statement.tokens[span.start].start, statement.tokens[span.end - 1].end)
        } else {
            (statement.tokens[src].start, statement.tokens[src].end)
        };
        let source = &statement.tokens[src];
        tokens.push(ClozeToken {
            text: if is_mask {
                answer.category.mask_token()
            } else {
                source.text.clone()
            },
            head: if n == root {
                None
            } else {
                Some(resolved[n].unwrap_or(root))
            },
            deprel: source.deprel.clone(),
            pos: if is_mask { "MASK".into() } else { source.pos.clone() },
            gap_before: prev_end.map_or_else(String::new, |p| text[p..start].to_string()),
            is_mask,
        });
        prev_end = Some(end);
    }

    let cloze = ClozeQuestion {
        tokens,
        mask_index,
        category: answer.category,
        answer: answer.clone(),
    };
    cloze.validate()?;
    Ok(cloze)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::test_support::sentence;

    fn candidate(
        s: &AnnotatedSentence,
        tokens: Range<usize>,
        category: MaskCategory,
        clause: Range<usize>,
    ) -> AnswerCandidate {
        let span = s.char_span(tokens.clone());
        AnswerCandidate {
            text: s.text[span.clone()].to_string(),
            ner_label: None,
            category,
            statement_span: span,
            tokens,
            clause,
        }
    }

    #[test]
    fn collapses_multi_token_answer() {
        // Guillermo crashed an interview about Tour de Pharmacy
        let w = [
            "Guillermo",
            "crashed",
            "an",
            "interview",
            "about",
            "Tour",
            "de",
            "Pharmacy",
        ];
        let heads = [1, -1, 3, 1, 3, 7, 7, 4];
        let s = sentence(&w, &heads, &[]);
        let a = candidate(&s, 5..8, MaskCategory::Thing, 0..8);
        let c = make_cloze(&s, 0..8, &a).unwrap();
        assert_eq!(c.text(), "Guillermo crashed an interview about [THING]");
        assert_eq!(c.tokens.len(), 6);
        assert_eq!(c.mask_index, 5);
        // mask inherits the head of "Pharmacy" (about)
        assert_eq!(c.tokens[5].head, Some(4));
    }

    #[test]
    fn out_of_clause_heads_reattach_to_clause_root() {
        // X said that he left early today
        let w = ["X", "said", "that", "he", "left", "early", "today"];
        let heads = [1, -1, 4, 4, 1, 4, 4];
        let s = sentence(&w, &heads, &[]);
        let a = candidate(&s, 6..7, MaskCategory::Temporal, 2..7);
        let c = make_cloze(&s, 2..7, &a).unwrap();
        assert_eq!(c.text(), "that he left early [TEMPORAL]");
        assert_eq!(c.heads(), vec![Some(2), Some(2), None, Some(2), Some(2)]);
    }

    #[test]
    fn answer_crossing_clause_is_rejected() {
        let s = sentence(&["a", "b", "c", "d"], &[1, -1, 1, 2], &[]);
        let a = candidate(&s, 1..3, MaskCategory::Thing, 0..2);
        assert!(matches!(
            make_cloze(&s, 0..2, &a),
            Err(ClozeError::AnswerOutsideClause { .. })
        ));
    }

    #[test]
    fn two_token_cloze() {
        let s = sentence(&["Bob", "the", "builder", "works"], &[3, 2, 0, -1], &[]);
        let a = candidate(&s, 0..3, MaskCategory::Person, 0..4);
        let c = make_cloze(&s, 0..4, &a).unwrap();
        assert_eq!(c.text(), "[PERSON] works");
        assert_eq!(c.heads(), vec![Some(1), None]);
    }

    #[test]
    fn source_spacing_is_kept() {
        let mut s = sentence(&["Murphy", "'s", "club", "won"], &[2, 0, 3, -1], &["B-PERSON"]);
        // rewrite text as "Murphy's club won"
        s.text = "Murphy's club won".into();
        let offsets = [(0, 6), (6, 8), (9, 13), (14, 17)];
        for (t, (a, b)) in s.tokens.iter_mut().zip(offsets) {
            t.start = a;
            t.end = b;
        }
        s.validate().unwrap();
        let a = candidate(&s, 3..4, MaskCategory::Thing, 0..4);
        assert_eq!(make_cloze(&s, 0..4, &a).unwrap().text(), "Murphy's club [THING]");
    }
}
