//! ROUGE-2 between a statement and its cited document.
//!
//! F-measure over lowercased word bigrams with clipped counts. Text is
//! tokenized with [`crate::text::words`].

use std::collections::HashMap;

use crate::text::word_strings;

fn bigram_counts(tokens: &[String]) -> HashMap<(&str, &str), usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(2) {
        *counts.entry((w[0].as_str(), w[1].as_str())).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-2 F-measure of `candidate` against `reference`.
///
/// Returns 0 when either side has fewer than two words or no bigram is
/// shared.
pub fn rouge2(candidate: &str, reference: &str) -> f64 {
    rouge2_tokens(&word_strings(candidate), &word_strings(reference))
}

/// [`rouge2`] over pre-tokenized input.
pub fn rouge2_tokens(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.len() < 2 || reference.len() < 2 {
        return 0.0;
    }
    let cand = bigram_counts(candidate);
    let refs = bigram_counts(reference);
    let shared: usize = cand.iter().filter_map(|(bg, &c)| refs.get(bg).map(|&r| c.min(r))).sum();
    if shared == 0 {
        return 0.0;
    }
    let precision = shared as f64 / (candidate.len() - 1) as f64;
    let recall = shared as f64 / (reference.len() - 1) as f64;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_strings_score_one() {
        assert_eq!(rouge2("the cat sat", "the cat sat"), 1.0);
    }

    #[test]
    fn partial_overlap() {
        // candidate bigrams: the-cat cat-sat sat-on on-the the-mat; reference: the-cat cat-sat
        let f = rouge2("the cat sat on the mat", "the cat sat");
        assert!((f - 4.0 / 7.0).abs() < 1e-12);
        assert!((f - 0.5714).abs() < 1e-4);
    }

    #[test]
    fn degenerate_inputs_score_zero() {
        assert_eq!(rouge2("alpha beta", "gamma delta"), 0.0);
        assert_eq!(rouge2("single", "single"), 0.0);
        assert_eq!(rouge2("", "a b"), 0.0);
    }

    #[test]
    fn counts_are_clipped() {
        // candidate has "a a" three times, reference once
        let f = rouge2("a a a a", "a a");
        // shared = 1, P = 1/3, R = 1
        assert!((f - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in "[abc ]{0,30}", b in "[abc ]{0,30}") {
            let x = rouge2(&a, &b);
            let y = rouge2(&b, &a);
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
