use citeqa_core::rouge2;
use citeqa_core::synth::random_sentence;
use citeqa_core::text::word_strings;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clipped bigram F-measure by exhaustive matching: each reference bigram
/// is consumed by at most one equal candidate bigram.
fn brute_force(candidate: &str, reference: &str) -> f64 {
    let c = word_strings(candidate);
    let r = word_strings(reference);
    if c.len() < 2 || r.len() < 2 {
        return 0.0;
    }
    let cb: Vec<(&str, &str)> = c.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
    let rb: Vec<(&str, &str)> = r.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
    let mut used = vec![false; rb.len()];
    let mut matched = 0usize;
    for b in &cb {
        if let Some(j) = (0..rb.len()).find(|&j| !used[j] && rb[j] == *b) {
            used[j] = true;
            matched += 1;
        }
    }
    if matched == 0 {
        return 0.0;
    }
    let p = matched as f64 / cb.len() as f64;
    let rc = matched as f64 / rb.len() as f64;
    2.0 * p * rc / (p + rc)
}

#[test]
fn matches_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let (la, lb) = (rng.gen_range(0..40), rng.gen_range(0..25));
        let a = random_sentence(&mut rng, la);
        let b = random_sentence(&mut rng, lb);
        let fast = rouge2(&a, &b);
        let slow = brute_force(&a, &b);
        assert!((fast - slow).abs() <= 1e-9, "{a:?} / {b:?}: {fast} vs {slow}");
    }
}

#[test]
fn case_and_punctuation_insensitive() {
    assert_eq!(rouge2("The River, City!", "the river city"), 1.0);
}
