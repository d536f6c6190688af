use super::{DenseNet, Loss, NnError, Tensor};

/// Largest parameter count [`grad_check`] accepts.
pub const MAX_GRAD_CHECK_PARAMS: usize = 10_000;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Index into [`DenseNet::params`] where the maximum occurred.
    pub worst_param: usize,
    pub param_count: usize,
    /// Smallest `|pre-activation|` over LeakyReLU units at the checked input.
    pub min_kink_distance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / scale
}

/// Compare backward gradients against central differences for every
/// parameter. `passed` is `max_relative_error < tolerance`.
pub fn grad_check(net: &DenseNet, input: &Tensor, loss: &dyn Loss, tolerance: f64) -> Result<GradCheckReport, NnError> {
    let param_count = net.param_count();
    if param_count > MAX_GRAD_CHECK_PARAMS {
        return Err(NnError::Shape(format!(
            "grad_check limited to {MAX_GRAD_CHECK_PARAMS} parameters, net has {param_count}"
        )));
    }
    let mut work = net.clone();
    let out = work.forward(input)?;
    let min_kink_distance = work.min_kink_distance().unwrap_or(f64::INFINITY);
    let (value, upstream) = loss.value_and_grad(&out)?;
    if !value.is_finite() {
        return Err(NnError::Numeric("non-finite loss at base point".into()));
    }
    work.backward(&upstream)?;
    let analytic = work.grads();

    let base = net.params();
    let mut probe = net.clone();
    let mut params = base.clone();
    let mut eval = |params: &[f64]| -> Result<f64, NnError> {
        probe.set_params(params)?;
        let out = probe.infer(input)?;
        let v = loss.value(&out)?;
        if !v.is_finite() {
            return Err(NnError::Numeric("non-finite loss during finite differences".into()));
        }
        Ok(v)
    };

    let mut max_relative_error = 0.0_f64;
    let mut worst_param = 0;
    for i in 0..param_count {
        params[i] = base[i] + FD_STEP;
        let plus = eval(&params)?;
        params[i] = base[i] - FD_STEP;
        let minus = eval(&params)?;
        params[i] = base[i];
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric);
        if err > max_relative_error {
            max_relative_error = err;
            worst_param = i;
        }
    }
    Ok(GradCheckReport {
        max_relative_error,
        worst_param,
        param_count,
        min_kink_distance,
        passed: max_relative_error < tolerance,
    })
}
