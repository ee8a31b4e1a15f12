//! Unsupervised extractive-QA data synthesis from cited statements.
//!
//! A Wikipedia-style statement and the document it cites become
//! context/question/answer triples: the document is the context, named
//! entities shared by a statement sub-clause and the document are answers,
//! and the clause with its answer masked is turned into a question. The
//! resulting data can then be refined iteratively with any QA model that
//! implements [`predictor::Predictor`].
//!
//! Pipeline, in module order:
//!
//! - [`corpus`]: load annotated pairs, apply the quality gates
//! - [`answer`]: sub-clauses, answer candidates, answer localization
//! - [`cloze`] and [`translate`]: cloze questions and their translation
//! - [`dataset`]: examples, SQuAD-1.1 files, initial/unseen split
//! - [`refine`]: the refinement loop

pub mod annotation;
pub mod answer;
pub mod cloze;
pub mod corpus;
pub mod dataset;
pub mod predictor;
pub mod refine;
pub mod rouge;
pub mod synth;
pub mod text;
pub mod translate;
pub mod tree;

pub use annotation::{AnnotatedDocument, AnnotatedSentence, StatementDocPair, Token, ValidationError};
pub use answer::{extract_candidates, extract_subclauses, locate_answer, AnswerCandidate, AnswerSpan, MaskCategory};
pub use cloze::{make_cloze, ClozeQuestion};
pub use corpus::{corpus_filter, load_pairs, median_rouge2, relevance_filter, CorpusFilterConfig, FilterReport};
pub use dataset::{
    build_examples, read_squad_json, sample_split, to_squad_json, BuildConfig, DatasetSplit, Generation, Provenance,
    QAExample,
};
pub use predictor::{HttpPredictor, MockPredictor, PredictError, Prediction, Predictor};
pub use refine::{
    classify_relation, combine, refine_part, run_iterations, RefinementConfig, RefinementOutcome, RefinementReport,
    Relation, Verdict,
};
pub use rouge::rouge2;
pub use text::Stopwords;
pub use translate::{translate_drc, translate_identity, translate_noise, wh_word, Method, NaturalQuestion, Translator};
