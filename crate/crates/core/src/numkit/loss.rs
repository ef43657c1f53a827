use super::{Matrix, EPS_CLAMP};
use crate::error::{Error, Result};

/// Scalar loss plus its gradients.
///
/// `grad` is taken with respect to the probabilities passed in; `grad_logits`
/// with respect to the pre-activation of the sigmoid/softmax that produced them.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub value: f64,
    pub grad: Matrix,
    pub grad_logits: Matrix,
}

impl LossOutput {
    /// Multiplies the loss and both gradients by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.grad = self.grad.scale(s);
        self.grad_logits = self.grad_logits.scale(s);
        self
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP)
}

/// Mean binary cross-entropy `-mean[t log p + (1-t) log(1-p)]`, with `p`
/// clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]` before the logs.
pub fn bce_loss(pred: &Matrix, target: &Matrix) -> Result<LossOutput> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "bce_loss",
            format!("pred {:?} vs target {:?}", pred.shape(), target.shape()),
        ));
    }
    let n = pred.data().len().max(1) as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut grad_logits = Matrix::zeros(pred.rows(), pred.cols());
    for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
        let p = clamp_prob(p);
        value -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.data_mut()[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
        grad_logits.data_mut()[i] = (p - t) / n;
    }
    Ok(LossOutput {
        value: value / n,
        grad,
        grad_logits,
    })
}

/// Mean categorical cross-entropy `-mean log pred[row, target[row]]`.
pub fn categorical_ce_loss(pred: &Matrix, target_index: &[usize]) -> Result<LossOutput> {
    if target_index.len() != pred.rows() {
        return Err(Error::shape(
            "categorical_ce_loss",
            format!("{} targets for {} rows", target_index.len(), pred.rows()),
        ));
    }
    if let Some(&bad) = target_index.iter().find(|&&t| t >= pred.cols()) {
        return Err(Error::contract(format!(
            "class index {bad} out of range for {} classes",
            pred.cols()
        )));
    }
    let rows = pred.rows().max(1) as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut grad_logits = pred.scale(1.0 / rows);
    for (r, &t) in target_index.iter().enumerate() {
        let p = clamp_prob(pred.get(r, t));
        value -= p.ln();
        grad.set(r, t, -1.0 / (p * rows));
        grad_logits.set(r, t, grad_logits.get(r, t) - 1.0 / rows);
    }
    Ok(LossOutput {
        value: value / rows,
        grad,
        grad_logits,
    })
}
