use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use citeqa_core::dataset::from_squad;
use citeqa_core::text::words;
use citeqa_core::QAExample;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub examples: usize,
    pub contexts: usize,
    /// Mask category counts; `NONE` for examples without one.
    pub categories: BTreeMap<String, usize>,
    /// Question length in words to count.
    pub question_lengths: BTreeMap<usize, usize>,
    /// Share of examples whose answer is not an exact NER mention.
    pub non_ner_fraction: f64,
}

pub fn compute(examples: &[QAExample]) -> Stats {
    let mut stats = Stats {
        examples: examples.len(),
        ..Default::default()
    };
    let contexts: HashSet<&str> = examples.iter().map(|e| e.context.as_str()).collect();
    stats.contexts = contexts.len();
    let mut non_ner = 0;
    for e in examples {
        let prov = e.provenance.as_ref();
        let category = prov.and_then(|p| p.category).map_or("NONE", |c| c.as_str());
        *stats.categories.entry(category.to_string()).or_default() += 1;
        *stats.question_lengths.entry(words(&e.question).len()).or_default() += 1;
        if prov.is_none_or(|p| p.ner_label.is_none()) {
            non_ner += 1;
        }
    }
    if !examples.is_empty() {
        stats.non_ner_fraction = non_ner as f64 / examples.len() as f64;
    }
    stats
}

pub fn run(path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let examples = if text.trim().is_empty() {
        Vec::new()
    } else {
        let file = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        from_squad(file).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
    };
    let stats = compute(&examples);
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}
