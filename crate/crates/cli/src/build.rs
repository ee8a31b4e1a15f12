use std::fs;
use std::path::PathBuf;

use citeqa_core::corpus::LoadError;
use citeqa_core::dataset::BuildFailure;
use citeqa_core::{
    build_examples, corpus_filter, load_pairs, to_squad_json, BuildConfig, CorpusFilterConfig, FilterReport, Method,
    Stopwords, Translator,
};
use clap::Args;
use serde::Serialize;

use crate::{input_err, set_workers, Failure};

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Interchange JSONL with annotated statement/document pairs.
    #[arg(long)]
    input: PathBuf,
    /// Output SQuAD-1.1 JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "drc", value_parser = clap::value_parser!(Method))]
    translator: Method,
    /// Fixed ROUGE-2 threshold; pairs scoring below it are discarded.
    #[arg(long, conflicts_with = "auto_median")]
    rouge_threshold: Option<f64>,
    /// Use the corpus median ROUGE-2 as threshold (the default).
    #[arg(long)]
    auto_median: bool,
    #[arg(long, default_value_t = 6)]
    min_clause_tokens: usize,
    /// Words on each side of an answer occurrence used to pick among occurrences.
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, default_value_t = 1000)]
    max_doc_words: usize,
    /// Largest fraction of statement content words allowed to be missing from the document.
    #[arg(long, default_value_t = 0.5)]
    max_missing: f64,
    /// Newline-separated stopword list replacing the built-in one.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Seed for the noise translator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Writes filter counts, rejected lines and build failures as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct BuildReport<'a> {
    invalid_lines: Vec<String>,
    filter: &'a FilterReport,
    examples: usize,
    failures: &'a [BuildFailure],
}

pub fn run(args: BuildArgs) -> Result<(), Failure> {
    set_workers(args.workers)?;
    if let Some(t) = args.rouge_threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Input(format!("--rouge-threshold {t} outside [0, 1]")));
        }
    }
    let stopwords = match &args.stopwords {
        Some(path) => {
            Stopwords::parse(&fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?)
        }
        None => Stopwords::default(),
    };

    let reader = load_pairs(&args.input).map_err(|e| Failure::Input(format!("{}: {e}", args.input.display())))?;
    let mut pairs = Vec::new();
    let mut invalid: Vec<LoadError> = Vec::new();
    for item in reader {
        match item {
            Ok(p) => pairs.push(p),
            Err(e) => {
                if let citeqa_core::corpus::LoadErrorKind::Io(_) = e.kind {
                    return Err(input_err(e));
                }
                log::warn!("skipping {e}");
                invalid.push(e);
            }
        }
    }

    let filter_cfg = CorpusFilterConfig {
        max_doc_words: args.max_doc_words,
        relevance_missing_fraction: args.max_missing,
        rouge2_threshold: args.rouge_threshold,
        stopwords: stopwords.clone(),
    };
    let (kept, filter) = corpus_filter(pairs, &filter_cfg);
    let build_cfg = BuildConfig {
        min_clause_tokens: args.min_clause_tokens,
        window: args.window,
        stopwords,
    };
    let translator = Translator::from_method(args.translator, args.seed);
    let out = build_examples(&kept, translator, &build_cfg);

    eprintln!(
        "pairs: {} read, {} invalid, {} kept ({} truncated)",
        filter.input,
        invalid.len(),
        filter.kept,
        filter.truncated
    );
    eprintln!(
        "discarded: length {}, relevance {}, rouge2 {} (threshold {:.6}{})",
        filter.discarded_length,
        filter.discarded_relevance,
        filter.discarded_rouge2,
        filter.rouge2_threshold,
        if args.rouge_threshold.is_none() { ", median" } else { "" }
    );
    eprintln!(
        "examples: {} ({} build failures)",
        out.examples.len(),
        out.failures.len()
    );

    if let Some(path) = &args.report {
        let report = BuildReport {
            invalid_lines: invalid.iter().map(ToString::to_string).collect(),
            filter: &filter,
            examples: out.examples.len(),
            failures: &out.failures,
        };
        let json = serde_json::to_vec_pretty(&report).map_err(input_err)?;
        fs::write(path, json).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }

    if out.examples.is_empty() {
        return Err(Failure::Empty("no examples survived filtering and generation".into()));
    }
    to_squad_json(&out.examples, &args.out).map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    Ok(())
}
