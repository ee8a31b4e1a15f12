//! Word tokenization, stopwords, and character/byte offset bookkeeping.
//!
//! Everything inside the engine indexes strings by UTF-8 byte offsets. The
//! interchange files, SQuAD JSON and the predictor wire protocol count
//! Unicode scalar values instead, so conversions happen at those borders
//! only.

use std::collections::HashSet;
use std::ops::Range;

/// A lowercased word and the byte range it was taken from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub norm: String,
    pub span: Range<usize>,
}

/// Splits `text` into maximal runs of alphanumeric characters.
///
/// Apostrophes inside a run (`don't`) stay attached so contractions do not
/// produce stray single-letter words.
pub fn words(text: &str) -> Vec<Word> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let inner_apostrophe =
            (c == '\'' || c == '\u{2019}') && start.is_some() && chars.peek().is_some_and(|(_, n)| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(Word {
                norm: text[s..i].to_lowercase(),
                span: s..i,
            });
        }
    }
    if let Some(s) = start {
        out.push(Word {
            norm: text[s..].to_lowercase(),
            span: s..text.len(),
        });
    }
    out
}

/// Lowercased word strings of `text`, in order.
pub fn word_strings(text: &str) -> Vec<String> {
    words(text).into_iter().map(|w| w.norm).collect()
}

/// True if the string carries at least one alphanumeric character.
pub fn is_wordlike(s: &str) -> bool {
    s.chars().any(char::is_alphanumeric)
}

/// Set of lowercase stopwords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(list: &str) -> Self {
        Self::new(
            list.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Distinct lowercased non-stopwords of `text`.
    pub fn content_set(&self, text: &str) -> HashSet<String> {
        words(text)
            .into_iter()
            .map(|w| w.norm)
            .filter(|w| !self.contains(w))
            .collect()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::new(DEFAULT_STOPWORDS.iter())
    }
}

/// English function words shipped as the default list.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "s",
    "t",
    "also",
    "said",
    "upon",
];

/// Byte offset of the `char_idx`-th character, or `None` past the end.
/// `char_idx == char count` maps to `text.len()`.
pub fn char_to_byte(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in text.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(text.len())
}

/// Number of characters before byte offset `byte_idx`.
pub fn byte_to_char(text: &str, byte_idx: usize) -> usize {
    text[..byte_idx].chars().count()
}

/// Precomputed char→byte table for repeated conversions on one text.
#[derive(Debug, Clone)]
pub struct CharIndex {
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { bytes }
    }

    pub fn byte(&self, char_idx: usize) -> Option<usize> {
        self.bytes.get(char_idx).copied()
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }
}

fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Byte ranges of all case-insensitive occurrences of `needle` in `haystack`
/// that start and end on word boundaries. Occurrences may not overlap; the
/// scan resumes after each match.
pub fn find_word_occurrences(haystack: &str, needle: &str) -> Vec<Range<usize>> {
    let needle_chars: Vec<char> = needle.chars().collect();
    if needle_chars.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut resume = 0;
    for (start, _) in haystack.char_indices() {
        if start < resume {
            continue;
        }
        let mut it = haystack[start..].char_indices();
        let mut end = None;
        for (k, &nc) in needle_chars.iter().enumerate() {
            match it.next() {
                Some((_, hc)) if chars_eq_ci(hc, nc) => {
                    if k + 1 == needle_chars.len() {
                        end = Some(start + it.offset());
                    }
                }
                _ => break,
            }
        }
        let Some(end) = end else { continue };
        let before_ok = haystack[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric() || !needle_chars[0].is_alphanumeric());
        let after_ok = haystack[end..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric() || !needle_chars[needle_chars.len() - 1].is_alphanumeric());
        if before_ok && after_ok {
            out.push(start..end);
            resume = end;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_split_on_punctuation() {
        let w = word_strings("Guillermo crashed a Matt Damon interview, about his movie.");
        assert_eq!(
            w,
            [
                "guillermo",
                "crashed",
                "a",
                "matt",
                "damon",
                "interview",
                "about",
                "his",
                "movie"
            ]
        );
    }

    #[test]
    fn contractions_stay_whole() {
        assert_eq!(word_strings("That's What's Up"), ["that's", "what's", "up"]);
        assert_eq!(word_strings("Murphy 's"), ["murphy", "s"]);
    }

    #[test]
    fn word_spans_are_byte_exact() {
        let text = "Zürich, 15,000 naïve";
        for w in words(text) {
            assert_eq!(text[w.span.clone()].to_lowercase(), w.norm);
        }
    }

    #[test]
    fn char_byte_round_trip() {
        let text = "aé€b";
        let idx = CharIndex::new(text);
        assert_eq!(idx.char_len(), 4);
        for c in 0..=4 {
            let b = char_to_byte(text, c).unwrap();
            assert_eq!(idx.byte(c), Some(b));
            assert_eq!(byte_to_char(text, b), c);
        }
        assert_eq!(char_to_byte(text, 5), None);
    }

    #[test]
    fn occurrences_respect_word_boundaries_and_case() {
        let doc = "Paris is not Parisian; PARIS again. paris";
        let hits = find_word_occurrences(doc, "Paris");
        let texts: Vec<&str> = hits.iter().map(|r| &doc[r.clone()]).collect();
        assert_eq!(texts, ["Paris", "PARIS", "paris"]);
    }

    #[test]
    fn occurrences_of_multibyte_needle() {
        let doc = "in Zürich and ZÜRICH";
        let hits = find_word_occurrences(doc, "zürich");
        assert_eq!(hits.len(), 2);
        assert_eq!(&doc[hits[1].clone()], "ZÜRICH");
    }

    #[test]
    fn content_set_drops_stopwords() {
        let sw = Stopwords::default();
        let set = sw.content_set("The cat sat on the mat");
        let mut v: Vec<_> = set.into_iter().collect();
        v.sort();
        assert_eq!(v, ["cat", "mat", "sat"]);
    }
}
