//! HTTP client for a predictor service.
//!
//! Offsets on the wire are character offsets; they are converted to byte
//! offsets and checked against the context before a prediction is returned.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{clamp_probability, PredictError, PredictRequest, Prediction, Predictor, TrainAck};
use crate::answer::{AnswerSpan, SpanError};
use crate::dataset::{QAExample, SquadAnswer};
use crate::text::CharIndex;

#[derive(Debug, Serialize)]
struct PredictBody<'a> {
    context: &'a str,
    question: &'a str,
}

/// `/predict` response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictWire {
    NoAnswer {
        no_answer: bool,
    },
    Answer {
        text: String,
        char_start: usize,
        char_end: usize,
        prob: f64,
    },
}

/// One qa object of a `/train` request, context inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answers: Vec<SquadAnswer>,
}

impl From<&QAExample> for TrainExample {
    fn from(e: &QAExample) -> Self {
        let qa = e.to_squad_qa();
        TrainExample {
            id: qa.id,
            question: qa.question,
            context: e.context.clone(),
            answers: qa.answers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainWire {
    pub status: String,
    #[serde(default)]
    pub steps: u64,
}

#[derive(Debug, Deserialize)]
struct HealthWire {
    status: String,
}

#[derive(Debug, Clone)]
pub struct HttpPredictor {
    base: String,
    predict_agent: ureq::Agent,
    train_agent: ureq::Agent,
}

fn agent(timeout: Option<Duration>) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(timeout).build().into()
}

fn map_err(e: ureq::Error) -> PredictError {
    match e {
        ureq::Error::StatusCode(code) => PredictError::Status(code),
        other => PredictError::Transport(other.to_string()),
    }
}

impl HttpPredictor {
    /// `base` is the service root, e.g. `http://127.0.0.1:8000`. Predictions
    /// time out after `predict_timeout`; training waits indefinitely.
    pub fn new(base: &str, predict_timeout: Duration) -> Self {
        HttpPredictor {
            base: base.trim_end_matches('/').to_string(),
            predict_agent: agent(Some(predict_timeout)),
            train_agent: agent(None),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn post<T: for<'de> Deserialize<'de>>(
        &self,
        agent: &ureq::Agent,
        path: &str,
        body: &impl Serialize,
    ) -> Result<T, PredictError> {
        let mut resp = agent
            .post(format!("{}{path}", self.base))
            .send_json(body)
            .map_err(map_err)?;
        let text = resp.body_mut().read_to_string().map_err(map_err)?;
        serde_json::from_str(&text).map_err(|e| PredictError::Protocol(format!("{path}: {e}")))
    }

    pub fn health(&self) -> Result<(), PredictError> {
        let mut resp = self
            .predict_agent
            .get(format!("{}/health", self.base))
            .call()
            .map_err(map_err)?;
        let text = resp.body_mut().read_to_string().map_err(map_err)?;
        let h: HealthWire = serde_json::from_str(&text).map_err(|e| PredictError::Protocol(format!("/health: {e}")))?;
        if h.status != "ok" {
            return Err(PredictError::Protocol(format!("/health status {:?}", h.status)));
        }
        Ok(())
    }
}

/// Turns a wire response into a validated prediction for `context`.
pub(crate) fn decode_prediction(context: &str, wire: PredictWire) -> Result<Option<Prediction>, PredictError> {
    match wire {
        PredictWire::NoAnswer { no_answer: true } => Ok(None),
        PredictWire::NoAnswer { no_answer: false } => {
            Err(PredictError::Protocol("no_answer=false without an answer".into()))
        }
        PredictWire::Answer {
            text,
            char_start,
            char_end,
            prob,
        } => {
            let index = CharIndex::new(context);
            let (Some(start), Some(end)) = (index.byte(char_start), index.byte(char_end)) else {
                return Err(SpanError::OutOfBounds {
                    start: char_start,
                    end: char_end,
                }
                .into());
            };
            if start >= end {
                return Err(SpanError::OutOfBounds {
                    start: char_start,
                    end: char_end,
                }
                .into());
            }
            let span = AnswerSpan { start, end, text };
            span.verify(context)?;
            Ok(Some(Prediction {
                span,
                probability: clamp_probability(prob)?,
            }))
        }
    }
}

impl Predictor for HttpPredictor {
    fn predict(&self, request: &PredictRequest<'_>) -> Result<Option<Prediction>, PredictError> {
        let body = PredictBody {
            context: request.context,
            question: request.question,
        };
        let wire: PredictWire = self.post(&self.predict_agent, "/predict", &body)?;
        decode_prediction(request.context, wire)
    }

    fn train(&mut self, batch: &[QAExample]) -> Result<TrainAck, PredictError> {
        #[derive(Serialize)]
        struct Body {
            examples: Vec<TrainExample>,
        }
        let body = Body {
            examples: batch.iter().map(TrainExample::from).collect(),
        };
        let wire: TrainWire = self.post(&self.train_agent, "/train", &body)?;
        if wire.status != "ok" {
            return Err(PredictError::Protocol(format!("/train status {:?}", wire.status)));
        }
        Ok(TrainAck { steps: wire.steps })
    }
}
