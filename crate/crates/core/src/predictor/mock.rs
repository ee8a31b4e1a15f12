use std::collections::HashMap;

use super::{PredictError, PredictRequest, Prediction, Predictor, TrainAck};
use crate::answer::AnswerSpan;
use crate::dataset::QAExample;
use crate::text::words;

#[derive(Debug, Clone)]
pub enum MockScript {
    /// Returns the recorded original answer with probability 1.
    EchoOriginal(HashMap<String, AnswerSpan>),
    /// Explicit id → (span, probability) table; unknown ids get no answer.
    FixedTable(HashMap<String, (AnswerSpan, f64)>),
    /// The first run of capitalized words in the context, probability 0.5.
    FirstEntity,
}

/// Deterministic predictor for tests and dry runs. `train` only records
/// the ids it was given.
#[derive(Debug, Clone)]
pub struct MockPredictor {
    script: MockScript,
    trained: Vec<String>,
    train_calls: usize,
}

impl MockPredictor {
    pub fn new(script: MockScript) -> Self {
        MockPredictor {
            script,
            trained: Vec::new(),
            train_calls: 0,
        }
    }

    pub fn echo_original<'a>(examples: impl IntoIterator<Item = &'a QAExample>) -> Self {
        Self::new(MockScript::EchoOriginal(
            examples.into_iter().map(|e| (e.id.clone(), e.answer.clone())).collect(),
        ))
    }

    pub fn fixed_table(table: HashMap<String, (AnswerSpan, f64)>) -> Self {
        Self::new(MockScript::FixedTable(table))
    }

    pub fn first_entity() -> Self {
        Self::new(MockScript::FirstEntity)
    }

    /// Every id passed to `train`, in order.
    pub fn trained_ids(&self) -> &[String] {
        &self.trained
    }

    pub fn train_calls(&self) -> usize {
        self.train_calls
    }
}

fn first_capitalized_run(context: &str) -> Option<AnswerSpan> {
    let ws = words(context);
    let is_cap = |i: usize| {
        context[ws[i].span.clone()]
            .chars()
            .next()
            .is_some_and(char::is_uppercase)
    };
    let first = (0..ws.len()).find(|&i| is_cap(i))?;
    let mut last = first;
    while last + 1 < ws.len()
        && is_cap(last + 1)
        && context[ws[last].span.end..ws[last + 1].span.start]
            .chars()
            .all(char::is_whitespace)
    {
        last += 1;
    }
    AnswerSpan::from_context(context, ws[first].span.start..ws[last].span.end).ok()
}

impl Predictor for MockPredictor {
    fn predict(&self, request: &PredictRequest<'_>) -> Result<Option<Prediction>, PredictError> {
        let prediction = match &self.script {
            MockScript::EchoOriginal(table) => table.get(request.id).map(|span| Prediction {
                span: span.clone(),
                probability: 1.0,
            }),
            MockScript::FixedTable(table) => table.get(request.id).map(|(span, p)| Prediction {
                span: span.clone(),
                probability: *p,
            }),
            MockScript::FirstEntity => {
                first_capitalized_run(request.context).map(|span| Prediction { span, probability: 0.5 })
            }
        };
        if let Some(p) = &prediction {
            p.span.verify(request.context)?;
        }
        Ok(prediction)
    }

    fn train(&mut self, batch: &[QAExample]) -> Result<TrainAck, PredictError> {
        self.train_calls += 1;
        self.trained.extend(batch.iter().map(|e| e.id.clone()));
        Ok(TrainAck {
            steps: batch.len() as u64,
        })
    }
}
