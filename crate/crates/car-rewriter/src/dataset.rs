//! The rewrite loop over a training batch: for every (query, positive
//! document) pair, build the context, call the rewriter, and collect the
//! rewritten training set in input order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use car_corpus::{RewrittenExample, TrainingExample};
use car_selector::{select_passage, Selector};

use crate::client::{rewrite, ChatClient, RetryPolicy};
use crate::error::RewriteError;
use crate::prompt::{truncate_context, GenerationParams, PromptStyle};

/// Fan-out and failure-tolerance knobs for [`rewrite_dataset`].
#[derive(Debug, Clone)]
pub struct RewriteDatasetConfig {
    /// Maximum in-flight requests (threads).
    pub concurrency: usize,
    pub policy: RetryPolicy,
    /// Abort when more than this fraction of calls fail.
    pub failure_threshold: f64,
}

impl Default for RewriteDatasetConfig {
    fn default() -> Self {
        RewriteDatasetConfig {
            concurrency: 4,
            policy: RetryPolicy::default(),
            failure_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RewriteOutcome {
    /// One rewritten example per input, in input order.
    pub examples: Vec<RewrittenExample>,
    /// How many fell back to the original query text.
    pub fallbacks: usize,
}

/// Rewrite every (query, positive document) pair. Per-example failures fall
/// back to the original query text with the `fallback` flag set, keeping
/// output and input aligned one-to-one; the whole call fails only when more
/// than `failure_threshold` of the examples fail.
pub fn rewrite_dataset(
    client: &dyn ChatClient,
    style: &PromptStyle,
    params: &GenerationParams,
    inputs: &[TrainingExample],
    selector: Option<&Selector>,
    config: &RewriteDatasetConfig,
) -> Result<RewriteOutcome, RewriteError> {
    for (i, example) in inputs.iter().enumerate() {
        if example.label != 1 {
            return Err(RewriteError::contract(format!(
                "input {i} is not a positive example"
            )));
        }
    }

    // Contexts are derived up front (sequentially: selector scoring is
    // deterministic and cheap next to the rewrite calls).
    let contexts: Vec<Option<String>> = if style.requires_context() {
        let mut out = Vec::with_capacity(inputs.len());
        for example in inputs {
            let context = match selector {
                Some(selector) => {
                    let (passage, _) = select_passage(selector, &example.query, &example.doc)?;
                    passage.text
                }
                None => truncate_context(&example.doc.text),
            };
            out.push(Some(context));
        }
        out
    } else {
        vec![None; inputs.len()]
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, RewriteError>>>> =
        Mutex::new((0..inputs.len()).map(|_| None).collect());

    let workers = config.concurrency.max(1).min(inputs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= inputs.len() {
                    break;
                }
                let result = rewrite(
                    client,
                    style,
                    params,
                    &inputs[i].query,
                    contexts[i].as_deref(),
                    &config.policy,
                );
                results.lock().expect("result lock").as_mut_slice()[i] = Some(result);
            });
        }
    });

    let results = results.into_inner().expect("result lock");
    let mut examples = Vec::with_capacity(inputs.len());
    let mut fallbacks = 0usize;
    for (input, result) in inputs.iter().zip(results) {
        let result = result.expect("every index processed");
        let (text, fallback) = match result {
            Ok(text) => (text, false),
            Err(_) => {
                fallbacks += 1;
                (input.query.text.clone(), true)
            }
        };
        examples.push(RewrittenExample {
            original_query: input.query.clone(),
            rewritten_text: text,
            context_doc_id: input.doc.id.clone(),
            label: input.label,
            prompt_style: style.kind.as_str().to_string(),
            rewriter_model: params.model_name.clone(),
            fallback,
        });
    }

    if !inputs.is_empty() && fallbacks as f64 > config.failure_threshold * inputs.len() as f64 {
        return Err(RewriteError::TooManyFailures {
            failed: fallbacks,
            total: inputs.len(),
        });
    }
    Ok(RewriteOutcome {
        examples,
        fallbacks,
    })
}
