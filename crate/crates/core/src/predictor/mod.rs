//! The QA predictor contract consumed by refinement.
//!
//! `predict` takes `&self` and may run concurrently; `train` takes
//! `&mut self`, so no prediction can be in flight while a model trains.

mod mock;
mod remote;

pub use mock::{MockPredictor, MockScript};
pub use remote::{HttpPredictor, PredictWire, TrainExample, TrainWire};

use thiserror::Error;

use crate::answer::{AnswerSpan, SpanError};
use crate::dataset::QAExample;

#[derive(Debug, Clone, Copy)]
pub struct PredictRequest<'a> {
    /// Example id; remote predictors ignore it.
    pub id: &'a str,
    pub context: &'a str,
    pub question: &'a str,
}

impl<'a> From<&'a QAExample> for PredictRequest<'a> {
    fn from(e: &'a QAExample) -> Self {
        PredictRequest {
            id: &e.id,
            context: &e.context,
            question: &e.question,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Byte span into the request context.
    pub span: AnswerSpan,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainAck {
    pub steps: u64,
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("server returned status {0}")]
    Status(u16),
    #[error("prediction fails bit-exactness: {0}")]
    BitExactness(#[from] SpanError),
    #[error("protocol: {0}")]
    Protocol(String),
}

pub trait Predictor: Sync {
    /// Top-1 answer for the request, or `None` when the model abstains.
    fn predict(&self, request: &PredictRequest<'_>) -> Result<Option<Prediction>, PredictError>;

    /// Continues training on `batch` and blocks until done.
    fn train(&mut self, batch: &[QAExample]) -> Result<TrainAck, PredictError>;
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&self, request: &PredictRequest<'_>) -> Result<Option<Prediction>, PredictError> {
        (**self).predict(request)
    }

    fn train(&mut self, batch: &[QAExample]) -> Result<TrainAck, PredictError> {
        (**self).train(batch)
    }
}

/// Clamps a probability into [0, 1], warning when it was outside.
pub(crate) fn clamp_probability(p: f64) -> Result<f64, PredictError> {
    if p.is_nan() {
        return Err(PredictError::Protocol("probability is NaN".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        log::warn!("clamping probability {p} into [0, 1]");
    }
    Ok(p.clamp(0.0, 1.0))
}
