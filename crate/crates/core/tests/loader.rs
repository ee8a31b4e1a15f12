use std::io::Cursor;

use citeqa_core::annotation::ValidationError;
use citeqa_core::corpus::{LoadErrorKind, PairReader};
use citeqa_core::tree::TreeError;
use serde_json::{json, Value};

fn base_line() -> Value {
    json!({
        "id": "p1",
        "statement": {
            "text": "Zoë joined Acme",
            "tokens": [
                {"i": 0, "text": "Zoë", "start": 0, "end": 3, "head": 1, "deprel": "nsubj", "pos": "PROPN", "ner": "B-PERSON"},
                {"i": 1, "text": "joined", "start": 4, "end": 10, "head": -1, "deprel": "ROOT", "pos": "VERB", "ner": "O"},
                {"i": 2, "text": "Acme", "start": 11, "end": 15, "head": 1, "deprel": "dobj", "pos": "PROPN", "ner": "B-ORG"}
            ]
        },
        "document": {
            "text": "Acme hired Zoë.",
            "sentences": [[
                {"i": 0, "text": "Acme", "start": 0, "end": 4, "head": 1, "deprel": "nsubj", "pos": "PROPN", "ner": "B-ORG"},
                {"i": 1, "text": "hired", "start": 5, "end": 10, "head": -1, "deprel": "ROOT", "pos": "VERB", "ner": "O"},
                {"i": 2, "text": "Zoë", "start": 11, "end": 14, "head": 1, "deprel": "dobj", "pos": "PROPN", "ner": "B-PERSON"},
                {"i": 3, "text": ".", "start": 14, "end": 15, "head": 1, "deprel": "punct", "pos": "PUNCT", "ner": "O"}
            ]]
        },
        "meta": {"title": "Acme"}
    })
}

fn read(lines: &[String]) -> Vec<Result<citeqa_core::StatementDocPair, citeqa_core::corpus::LoadError>> {
    PairReader::new(Cursor::new(lines.join("\n"))).collect()
}

#[test]
fn good_line_converts_char_offsets() {
    let out = read(&[base_line().to_string()]);
    let pair = out.into_iter().next().unwrap().unwrap();
    let acme = &pair.statement.tokens[2];
    // "Zoë" is four bytes
    assert_eq!((acme.start, acme.end), (12, 16));
    assert_eq!(&pair.statement.text[acme.span()], "Acme");
    assert_eq!(pair.title(), "Acme");
}

#[test]
fn overlapping_offsets_rejected_with_line_number() {
    let mut v = base_line();
    v["statement"]["tokens"][1]["start"] = json!(2);
    v["statement"]["tokens"][1]["text"] = json!("ë joined");
    let out = read(&[base_line().to_string(), String::new(), v.to_string()]);
    assert_eq!(out.len(), 2);
    assert!(out[0].is_ok());
    let err = out[1].as_ref().unwrap_err();
    assert_eq!(err.line, 3);
    assert_eq!(err.pair_id(), Some("p1"));
    assert!(matches!(
        err.kind,
        LoadErrorKind::Validation {
            source: ValidationError::OverlappingOffsets { .. },
            ..
        }
    ));
}

#[test]
fn cyclic_heads_rejected() {
    let mut v = base_line();
    v["statement"]["tokens"][0]["head"] = json!(2);
    v["statement"]["tokens"][2]["head"] = json!(0);
    let err = read(&[v.to_string()]).remove(0).unwrap_err();
    let LoadErrorKind::Validation { source, .. } = &err.kind else {
        panic!("{err}")
    };
    assert!(matches!(source, ValidationError::Tree(TreeError::Cycle(_))), "{source}");
    assert!(err.to_string().contains("line 1"));
}

#[test]
fn text_mismatch_and_malformed_json() {
    let mut v = base_line();
    v["document"]["sentences"][0][0]["text"] = json!("Acne");
    let out = read(&[v.to_string(), "{not json".into()]);
    assert!(matches!(
        out[0].as_ref().unwrap_err().kind,
        LoadErrorKind::Validation {
            source: ValidationError::TextMismatch { .. },
            ..
        }
    ));
    assert!(matches!(out[1].as_ref().unwrap_err().kind, LoadErrorKind::Json(_)));
}

#[test]
fn head_out_of_bounds_rejected() {
    let mut v = base_line();
    v["statement"]["tokens"][0]["head"] = json!(7);
    assert!(read(&[v.to_string()]).remove(0).is_err());
}
