use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use citeqa_core::predictor::{MockPredictor, PredictRequest};
use citeqa_core::refine::{KeepQuestion, RetryPolicy};
use citeqa_core::synth::synthetic_examples;
use citeqa_core::{
    refine_part, HttpPredictor, PredictError, Predictor, QAExample, RefinementConfig, Relation, Verdict,
};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &str, &Value) -> (u16, Value) + Send + Sync;

/// Minimal HTTP/1.1 server answering one request per connection.
struct TestServer {
    base: String,
    log: Arc<Mutex<Vec<(String, Value)>>>,
}

fn handle(mut stream: TcpStream, handler: &Handler, log: &Mutex<Vec<(String, Value)>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("").to_string();
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" || line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let body: Value = if body.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&body).unwrap()
    };
    log.lock().unwrap().push((path.clone(), body.clone()));
    let (status, reply) = handler(&method, &path, &body);
    let reply = reply.to_string();
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
}

impl TestServer {
    fn start(handler: impl Fn(&str, &str, &Value) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let log = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let server_log = Arc::clone(&log);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let handler = Arc::clone(&handler);
                let log = Arc::clone(&server_log);
                thread::spawn(move || handle(stream, handler.as_ref(), &log));
            }
        });
        TestServer { base, log }
    }

    fn client(&self) -> HttpPredictor {
        HttpPredictor::new(&self.base, Duration::from_secs(5))
    }
}

/// Reference service: answers with the first occurrence of the last word
/// of the question, in character offsets.
fn echo_service(method: &str, path: &str, body: &Value) -> (u16, Value) {
    match (method, path) {
        ("GET", "/health") => (200, json!({"status": "ok"})),
        ("POST", "/predict") => {
            let context = body["context"].as_str().unwrap();
            let word = body["question"].as_str().unwrap().rsplit(' ').next().unwrap();
            match context.find(word) {
                Some(b) => {
                    let start = context[..b].chars().count();
                    let end = start + word.chars().count();
                    (
                        200,
                        json!({"text": word, "char_start": start, "char_end": end, "prob": 0.8}),
                    )
                }
                None => (200, json!({"no_answer": true})),
            }
        }
        ("POST", "/train") => (
            200,
            json!({"status": "ok", "steps": body["examples"].as_array().unwrap().len()}),
        ),
        _ => (404, json!({})),
    }
}

fn request<'a>(id: &'a str, context: &'a str, question: &'a str) -> PredictRequest<'a> {
    PredictRequest { id, context, question }
}

/// Properties every predictor must satisfy.
fn check_contract<P: Predictor>(predictor: &mut P, examples: &[QAExample]) {
    for e in examples {
        if let Some(p) = predictor.predict(&e.into()).unwrap() {
            p.span.verify(&e.context).unwrap();
            assert!((0.0..=1.0).contains(&p.probability));
        }
    }
    predictor.train(examples).unwrap();
}

#[test]
fn mock_and_http_satisfy_contract() {
    let examples = synthetic_examples(20, 1);
    check_contract(&mut MockPredictor::first_entity(), &examples);
    check_contract(&mut MockPredictor::echo_original(&examples), &examples);
    let server = TestServer::start(echo_service);
    check_contract(&mut server.client(), &examples);
}

#[test]
fn http_converts_char_offsets() {
    let server = TestServer::start(echo_service);
    let client = server.client();
    client.health().unwrap();
    let ctx = "Café Zürich hosted São Paulo delegates";
    let p = client
        .predict(&request("x", ctx, "who came from Paulo"))
        .unwrap()
        .unwrap();
    assert_eq!(&ctx[p.span.range()], "Paulo");
    assert_eq!(p.probability, 0.8);
    assert!(client.predict(&request("x", ctx, "who is Nobody")).unwrap().is_none());
}

#[test]
fn http_train_sends_squad_answers_in_chars() {
    let server = TestServer::start(echo_service);
    let mut client = server.client();
    let examples = synthetic_examples(8, 2);
    let ack = client.train(&examples).unwrap();
    assert_eq!(ack.steps, 8);
    let log = server.log.lock().unwrap();
    let (_, body) = log.iter().find(|(p, _)| p == "/train").unwrap();
    for (wire, e) in body["examples"].as_array().unwrap().iter().zip(&examples) {
        assert_eq!(wire["id"], e.id.as_str());
        let start = wire["answers"][0]["answer_start"].as_u64().unwrap() as usize;
        let text: String = e
            .context
            .chars()
            .skip(start)
            .take(e.answer.text.chars().count())
            .collect();
        assert_eq!(text, e.answer.text);
    }
}

#[test]
fn http_rejects_span_not_matching_text() {
    let server = TestServer::start(|_, _, _| {
        (
            200,
            json!({"text": "Acme", "char_start": 0, "char_end": 4, "prob": 0.9}),
        )
    });
    let err = server
        .client()
        .predict(&request("x", "Zürich hosts Acme", "q"))
        .unwrap_err();
    assert!(matches!(err, PredictError::BitExactness(_)), "{err}");
}

#[test]
fn http_status_and_health_failures() {
    let server = TestServer::start(|_, path, _| {
        if path == "/health" {
            (200, json!({"status": "loading"}))
        } else {
            (500, json!({"error": "boom"}))
        }
    });
    let client = server.client();
    assert!(client.health().is_err());
    assert!(matches!(
        client.predict(&request("x", "abc", "q")),
        Err(PredictError::Status(500))
    ));

    let dead = HttpPredictor::new("http://127.0.0.1:9", Duration::from_millis(500));
    assert!(matches!(dead.health(), Err(PredictError::Transport(_))));
}

#[test]
fn flaky_predictor_is_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let server = TestServer::start(move |method, path, body| {
        if path == "/predict" && counter.fetch_add(1, Ordering::SeqCst) < 2 {
            return (503, json!({}));
        }
        echo_service(method, path, body)
    });
    let mut ex = synthetic_examples(1, 3);
    ex[0].question = format!("who is {}", ex[0].answer.text.rsplit(' ').next().unwrap());
    let retry = RetryPolicy {
        attempts: 3,
        backoff: Duration::from_millis(5),
    };
    let cfg = RefinementConfig {
        retry,
        ..Default::default()
    };
    let client = server.client();
    let r = refine_part(&ex, 1, &client, 0.15, &KeepQuestion, &cfg);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    assert_ne!(r.outcomes[0].relation, Relation::NoPrediction);

    calls.store(0, Ordering::SeqCst);
    let cfg = RefinementConfig {
        retry: RetryPolicy { attempts: 2, ..retry },
        ..Default::default()
    };
    let r = refine_part(&ex, 1, &client, 0.15, &KeepQuestion, &cfg);
    assert_eq!(r.outcomes[0].verdict, Verdict::Dropped);
    assert!(r.outcomes[0].note.as_deref().unwrap().contains("503"));
}
