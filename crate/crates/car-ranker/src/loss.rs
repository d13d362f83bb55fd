//! Pointwise binary cross-entropy over relevance predictions.

use car_grad::{Tape64, Tensor64, Var64};

use crate::error::RankerError;

/// Predictions are clamped into `[EPS, 1 - EPS]` before the logs.
pub const EPS: f64 = 1e-12;

fn check_labels(labels: &[u8]) -> Result<(), RankerError> {
    if labels.iter().any(|y| *y > 1) {
        return Err(RankerError::contract("labels must be 0 or 1"));
    }
    Ok(())
}

/// `-(1/N) * sum_i [ y_i ln p_i + (1 - y_i) ln (1 - p_i) ]`.
pub fn pointwise_loss(predictions: &[f64], labels: &[u8]) -> Result<f64, RankerError> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(RankerError::contract(format!(
            "need matching non-empty predictions and labels, got {} and {}",
            predictions.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    let n = predictions.len() as f64;
    let mut total = 0.0;
    for (p, y) in predictions.iter().zip(labels) {
        let p = p.clamp(EPS, 1.0 - EPS);
        total += if *y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(-total / n)
}

/// Tape composition of the same loss for training: `predictions` is a
/// vector-shaped variable of batch probabilities.
pub fn pointwise_loss_var<'t>(
    tape: &'t Tape64,
    predictions: Var64<'t>,
    labels: &[u8],
) -> Result<Var64<'t>, RankerError> {
    let n = labels.len();
    if n == 0 {
        return Err(RankerError::contract("empty batch"));
    }
    check_labels(labels)?;
    let y: Vec<f64> = labels.iter().map(|y| *y as f64).collect();
    let y_pos = tape.constant(Tensor64::vector(y.clone()));
    let y_neg = tape.constant(Tensor64::vector(y.iter().map(|v| 1.0 - v).collect()));

    let p = predictions.clamp(EPS, 1.0 - EPS)?;
    let log_p = p.ln()?;
    let log_not_p = p.affine(-1.0, 1.0)?.ln()?;
    let per_example = y_pos.mul(log_p)?.add(y_neg.mul(log_not_p)?)?;
    Ok(per_example.sum()?.scale(-1.0 / n as f64)?)
}
