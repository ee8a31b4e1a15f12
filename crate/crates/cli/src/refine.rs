use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use citeqa_core::predictor::MockPredictor;
use citeqa_core::refine::{BatchSink, KeepQuestion, QuestionRegenerator, RunError, StatementRegenerator};
use citeqa_core::text::CharIndex;
use citeqa_core::{
    load_pairs, read_squad_json, run_iterations, sample_split, to_squad_json, AnswerSpan, HttpPredictor, Predictor,
    QAExample, RefinementConfig, RefinementReport,
};
use clap::Args;
use serde::Deserialize;

use crate::{input_err, set_workers, Failure};

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// SQuAD-1.1 dataset produced by `build`.
    #[arg(long)]
    data: PathBuf,
    /// Size of the initial pool; defaults to a third of the data.
    #[arg(long)]
    init_size: Option<usize>,
    #[arg(long, default_value_t = 6)]
    parts: usize,
    /// Threshold for the first part.
    #[arg(long, default_value_t = 0.15)]
    tau: f64,
    /// Per-part threshold decay.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// `mock:echo-original`, `mock:first-entity`, `mock:table=PATH`, or an
    /// `http://` service root.
    #[arg(long)]
    predictor: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interchange JSONL of the source pairs; enables question regeneration.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Refined to filtered ratio of each batch, `R:F`.
    #[arg(long, default_value = "1:1", value_parser = parse_ratio)]
    ratio: (usize, usize),
    /// Treat a prediction inside the original answer as a disagreement.
    #[arg(long)]
    no_keep_substring: bool,
    /// Per-request timeout for http predictors, in seconds.
    #[arg(long, default_value_t = 60)]
    predict_timeout: u64,
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_ratio(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected R:F, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || b == 0 {
        return Err("ratio terms must be positive".into());
    }
    Ok((a, b))
}

#[derive(Debug, Deserialize)]
struct TableEntry {
    text: String,
    /// Character offset into the example context.
    answer_start: usize,
    prob: f64,
}

/// Reads a `{id: {text, answer_start, prob}}` table for the mock predictor.
fn load_table(path: &Path, examples: &[QAExample]) -> Result<MockPredictor, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let raw: HashMap<String, TableEntry> =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let contexts: HashMap<&str, &str> = examples.iter().map(|e| (e.id.as_str(), e.context.as_str())).collect();
    let mut table = HashMap::new();
    for (id, entry) in raw {
        let Some(context) = contexts.get(id.as_str()) else {
            log::warn!("table entry {id:?} matches no example");
            continue;
        };
        let bad = |why: String| Failure::Input(format!("table entry {id:?}: {why}"));
        let start = CharIndex::new(context)
            .byte(entry.answer_start)
            .ok_or_else(|| bad("answer_start past context end".into()))?;
        let span =
            AnswerSpan::from_context(context, start..start + entry.text.len()).map_err(|e| bad(e.to_string()))?;
        if span.text != entry.text {
            return Err(bad(format!("context has {:?} at answer_start", span.text)));
        }
        table.insert(id, (span, entry.prob));
    }
    Ok(MockPredictor::fixed_table(table))
}

fn make_predictor(spec: &str, examples: &[QAExample], timeout: Duration) -> Result<Box<dyn Predictor>, Failure> {
    if let Some(path) = spec.strip_prefix("mock:table=") {
        return Ok(Box::new(load_table(Path::new(path), examples)?));
    }
    match spec {
        "mock:echo-original" => Ok(Box::new(MockPredictor::echo_original(examples))),
        "mock:first-entity" => Ok(Box::new(MockPredictor::first_entity())),
        s if s.starts_with("http://") || s.starts_with("https://") => {
            let p = HttpPredictor::new(s, timeout);
            p.health()
                .map_err(|e| Failure::Input(format!("predictor {s} not healthy: {e}")))?;
            Ok(Box::new(p))
        }
        other => Err(Failure::Input(format!("unknown predictor {other:?}"))),
    }
}

struct DirSink<'a> {
    dir: &'a Path,
}

impl BatchSink for DirSink<'_> {
    fn emit(&mut self, index: usize, batch: &[QAExample]) -> Result<(), String> {
        let path = self.dir.join(format!("batch_{index}.json"));
        to_squad_json(batch, &path).map_err(|e| format!("{}: {e}", path.display()))?;
        log::info!("wrote {} ({} examples)", path.display(), batch.len());
        Ok(())
    }
}

fn load_regenerator(path: &Path, seed: u64) -> Result<StatementRegenerator, Failure> {
    let reader = load_pairs(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut statements = HashMap::new();
    for item in reader {
        match item {
            Ok(p) => {
                statements.insert(p.id, p.statement);
            }
            Err(e) => log::warn!("{}: skipping {e}", path.display()),
        }
    }
    Ok(StatementRegenerator::new(statements, seed))
}

fn write_report(dir: &Path, report: &RefinementReport) -> Result<(), Failure> {
    let path = dir.join("report.jsonl");
    let file = File::create(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    report
        .write_jsonl(BufWriter::new(file))
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn run(args: RefineArgs) -> Result<(), Failure> {
    set_workers(args.workers)?;
    let examples = read_squad_json(&args.data).map_err(|e| Failure::Input(format!("{}: {e}", args.data.display())))?;
    if examples.is_empty() {
        return Err(Failure::Empty(format!("{} holds no examples", args.data.display())));
    }
    let init_size = args.init_size.unwrap_or(examples.len() / 3);
    let cfg = RefinementConfig {
        tau0: args.tau,
        gamma: args.gamma,
        combine_ratio: args.ratio,
        keep_if_substring: !args.no_keep_substring,
        num_parts: args.parts,
        seed: args.seed,
        ..Default::default()
    };
    cfg.validate().map_err(input_err)?;

    let mut predictor = make_predictor(&args.predictor, &examples, Duration::from_secs(args.predict_timeout))?;
    let regenerator: Box<dyn QuestionRegenerator> = match &args.pairs {
        Some(path) => Box::new(load_regenerator(path, args.seed)?),
        None => Box::new(KeepQuestion),
    };
    let split = sample_split(examples, init_size, args.parts, args.seed).map_err(input_err)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Input(format!("{}: {e}", args.out_dir.display())))?;

    let mut sink = DirSink { dir: &args.out_dir };
    match run_iterations(&split, &mut predictor, regenerator.as_ref(), &cfg, &mut sink) {
        Ok(report) => {
            write_report(&args.out_dir, &report)?;
            eprintln!("initial pool: {}", report.initial_size);
            for p in &report.parts {
                eprintln!(
                    "part {}: tau {:.6}, {} examples, {} refined, {} filtered, batch {}",
                    p.part, p.tau, p.size, p.refined, p.filtered, p.batch_size
                );
            }
            eprintln!("batches written: {}", report.batches_emitted);
            Ok(())
        }
        Err(RunError::Aborted(abort)) => {
            write_report(&args.out_dir, &abort.report)?;
            Err(Failure::Input(format!(
                "refinement aborted at batch {}: {} (partial report written)",
                abort.batch, abort.reason
            )))
        }
        Err(RunError::Invalid(e)) => Err(input_err(e)),
    }
}
