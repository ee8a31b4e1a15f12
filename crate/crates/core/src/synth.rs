//! Seeded synthetic inputs for property tests, acceptance checks and
//! benchmarks.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotation::{AnnotatedDocument, AnnotatedSentence, StatementDocPair, Token};
use crate::answer::{AnswerCandidate, AnswerSpan, MaskCategory};
use crate::cloze::{ClozeQuestion, ClozeToken};
use crate::dataset::{stable_id, Generation, Provenance, QAExample};
use crate::translate::Method;

/// A uniformly shaped random dependency tree over `n` word tokens
/// `t0..t{n-1}` with one random token masked.
pub fn random_cloze<R: Rng>(rng: &mut R, n: usize) -> ClozeQuestion {
    assert!(n > 0, "cloze needs at least one token");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    for k in 1..n {
        heads[order[k]] = Some(order[rng.gen_range(0..k)]);
    }
    let mask = rng.gen_range(0..n);
    let category = *MaskCategory::ALL.choose(rng).expect("categories");
    let tokens = (0..n)
        .map(|i| ClozeToken {
            text: if i == mask {
                category.mask_token()
            } else {
                format!("t{i}")
            },
            head: heads[i],
            deprel: if heads[i].is_none() {
                "ROOT".into()
            } else {
                "dep".into()
            },
            pos: if i == mask { "MASK".into() } else { "X".into() },
            gap_before: if i == 0 { String::new() } else { " ".into() },
            is_mask: i == mask,
        })
        .collect();
    ClozeQuestion {
        tokens,
        mask_index: mask,
        category,
        answer: AnswerCandidate {
            text: format!("t{mask}"),
            ner_label: None,
            category,
            statement_span: 0..0,
            tokens: mask..mask + 1,
            clause: 0..n,
        },
    }
}

const VOCAB: &[&str] = &[
    "the", "river", "city", "won", "a", "prize", "in", "north", "band", "album", "was", "born", "team", "of", "and",
    "record", "year", "film", "new", "old",
];

/// Space-joined random words from a small vocabulary, so bigrams repeat.
pub fn random_sentence<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| *VOCAB.choose(rng).expect("vocab"))
        .collect::<Vec<_>>()
        .join(" ")
}

const NAMES: &[&str] = &[
    "Acme",
    "Zürich",
    "Lincoln City",
    "Orion Labs",
    "São Paulo",
    "Maria Lopez",
    "1998",
];

/// `n` valid examples over varied (partly non-ASCII) contexts. Every
/// example's answer is a name that also occurs earlier in its context, so
/// predictors have a distinct span to disagree with.
pub fn synthetic_examples(n: usize, seed: u64) -> Vec<QAExample> {
    (0..n)
        .map(|i| {
            let name = NAMES[i % NAMES.len()];
            let other = NAMES[(i / NAMES.len() + i + 1) % NAMES.len()];
            let context = format!(
                "Report {i}: {other} met {name} near the old {name} hall in year {}.",
                1900 + i
            );
            let start = context.find(&format!(" {name} near")).expect("name present") + 1;
            let answer = AnswerSpan::from_context(&context, start..start + name.len()).expect("char aligned");
            let id = stable_id(&[&seed.to_string(), &i.to_string()], 24);
            QAExample {
                id,
                title: format!("Article {}", i % 13),
                context,
                question: format!("Who did {other} meet in report {i}"),
                answer,
                provenance: Some(Provenance {
                    pair_id: format!("pair-{i}"),
                    clause: [0, 8],
                    method: Method::Drc,
                    generation: Generation::Original,
                    category: Some(MaskCategory::ALL[i % MaskCategory::ALL.len()]),
                    ner_label: Some("ORG".into()),
                }),
            }
        })
        .collect()
}

/// Seeded predictions for [`synthetic_examples`], keyed by example id:
/// a mix of exact answers, prefixes of the answer, answers extended by one
/// word, unrelated spans and abstentions, each with a uniform probability.
pub fn scripted_predictions(examples: &[QAExample], seed: u64) -> HashMap<String, (AnswerSpan, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = HashMap::new();
    for e in examples {
        let kind = rng.gen_range(0..5);
        let prob: f64 = rng.gen();
        let a = e.answer.range();
        let range = match kind {
            0 => a,
            1 => {
                let first = e.answer.text.chars().next().map_or(1, char::len_utf8);
                a.start..a.start + first
            }
            2 => {
                let next_space = e.context[a.end + 1..]
                    .find(' ')
                    .map_or(e.context.len(), |k| a.end + 1 + k);
                a.start..next_space
            }
            3 => 0..e.context.find(' ').unwrap_or(e.context.len()),
            _ => continue,
        };
        let span = AnswerSpan::from_context(&e.context, range).expect("char aligned");
        table.insert(e.id.clone(), (span, prob));
    }
    table
}

/// Whitespace tokens of `text[base..]` with a flat parse: the first token
/// is the root and every other token depends on it.
fn flat_tokens(text: &str, base: usize) -> Vec<Token> {
    let mut out = Vec::new();
    let mut offset = base;
    for piece in text[base..].split_inclusive(char::is_whitespace) {
        let word = piece.trim_end();
        if !word.is_empty() {
            let i = out.len();
            out.push(Token {
                index: i,
                text: word.to_string(),
                start: offset,
                end: offset + word.len(),
                head: (i > 0).then_some(0),
                deprel: if i == 0 { "ROOT".into() } else { "dep".into() },
                pos: "X".into(),
                ner: "O".into(),
            });
        }
        offset += piece.len();
    }
    out
}

/// A pair with flat parses and no entities. Document sentences are joined
/// by single spaces.
pub fn flat_pair(id: &str, statement: &str, sentences: &[String]) -> StatementDocPair {
    let text = sentences.join(" ");
    let mut doc_sentences = Vec::with_capacity(sentences.len());
    let mut base = 0;
    for s in sentences {
        doc_sentences.push(flat_tokens(&text[..base + s.len()], base));
        base += s.len() + 1;
    }
    StatementDocPair {
        id: id.to_string(),
        statement: AnnotatedSentence {
            text: statement.to_string(),
            tokens: flat_tokens(statement, 0),
            clause_spans: None,
        },
        document: AnnotatedDocument {
            text,
            sentences: doc_sentences,
        },
        meta: Default::default(),
    }
}
