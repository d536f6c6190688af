use super::{NnError, Tensor};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-element `-[t ln σ(z) + (1-t) ln(1-σ(z))]` in the overflow-free form
/// `max(z, 0) - z t + ln(1 + e^{-|z|})`.
fn bce_term(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

fn check_lengths(logits: &Tensor, targets: &Tensor, weights: &Tensor) -> Result<(), NnError> {
    if logits.len() != targets.len() || logits.len() != weights.len() {
        return Err(NnError::Shape(format!(
            "logits ({}), targets ({}) and weights ({}) must have equal length",
            logits.len(),
            targets.len(),
            weights.len()
        )));
    }
    if logits.is_empty() {
        return Err(NnError::Shape("empty loss input".into()));
    }
    Ok(())
}

/// Weighted binary cross-entropy on raw logits, normalised by the total
/// weight: `Σ w_i l_i / Σ w_i`.
pub fn bce_with_logits(logits: &Tensor, targets: &Tensor, weights: &Tensor) -> Result<f64, NnError> {
    Ok(bce_with_logits_grad(logits, targets, weights)?.0)
}

/// Loss and its gradient w.r.t. the logits.
pub fn bce_with_logits_grad(logits: &Tensor, targets: &Tensor, weights: &Tensor) -> Result<(f64, Tensor), NnError> {
    check_lengths(logits, targets, weights)?;
    let total_weight: f64 = weights.values().iter().sum();
    if weights.values().iter().any(|&w| !(w > 0.0)) {
        return Err(NnError::Shape("loss weights must be positive".into()));
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for ((&z, &t), &w) in logits.values().iter().zip(targets.values()).zip(weights.values()) {
        loss += w * bce_term(z, t);
        grad.push(w * (sigmoid(z) - t) / total_weight);
    }
    let loss = loss / total_weight;
    if !loss.is_finite() {
        return Err(NnError::Numeric(format!("non-finite BCE loss {loss}")));
    }
    let grad = Tensor::new(logits.shape().to_vec(), grad)?;
    Ok((loss, grad))
}

/// Differentiable scalar objective over a network output.
pub trait Loss {
    fn value_and_grad(&self, output: &Tensor) -> Result<(f64, Tensor), NnError>;

    fn value(&self, output: &Tensor) -> Result<f64, NnError> {
        Ok(self.value_and_grad(output)?.0)
    }
}

/// `0.5 · Σ (o - t)^2 / rows`.
#[derive(Debug, Clone)]
pub struct SquaredError {
    pub target: Tensor,
}

impl Loss for SquaredError {
    fn value_and_grad(&self, output: &Tensor) -> Result<(f64, Tensor), NnError> {
        if output.len() != self.target.len() {
            return Err(NnError::Shape(format!(
                "output has {} values, target {}",
                output.len(),
                self.target.len()
            )));
        }
        let rows = output.as_rows()?.0 as f64;
        let mut value = 0.0;
        let grad: Vec<f64> = output
            .values()
            .iter()
            .zip(self.target.values())
            .map(|(o, t)| {
                let r = o - t;
                value += 0.5 * r * r;
                r / rows
            })
            .collect();
        Ok((value / rows, Tensor::new(output.shape().to_vec(), grad)?))
    }
}

/// Mean squared error `Σ (o - t)^2 / n` over all elements.
#[derive(Debug, Clone)]
pub struct MeanSquaredError {
    pub target: Tensor,
}

impl Loss for MeanSquaredError {
    fn value_and_grad(&self, output: &Tensor) -> Result<(f64, Tensor), NnError> {
        if output.len() != self.target.len() || output.is_empty() {
            return Err(NnError::Shape(format!(
                "output has {} values, target {}",
                output.len(),
                self.target.len()
            )));
        }
        let n = output.len() as f64;
        let mut value = 0.0;
        let grad: Vec<f64> = output
            .values()
            .iter()
            .zip(self.target.values())
            .map(|(o, t)| {
                let r = o - t;
                value += r * r;
                2.0 * r / n
            })
            .collect();
        Ok((value / n, Tensor::new(output.shape().to_vec(), grad)?))
    }
}

/// [`bce_with_logits`] as a [`Loss`].
#[derive(Debug, Clone)]
pub struct BceWithLogits {
    pub targets: Tensor,
    pub weights: Tensor,
}

impl Loss for BceWithLogits {
    fn value_and_grad(&self, output: &Tensor) -> Result<(f64, Tensor), NnError> {
        bce_with_logits_grad(output, &self.targets, &self.weights)
    }
}
