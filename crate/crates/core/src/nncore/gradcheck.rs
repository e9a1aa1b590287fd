//! Central finite-difference check of analytic gradients.

use super::{Graph, ParamStore, Var};
use crate::error::{Error, Result};

/// Denominator floor for the relative error, so that gradients which are
/// zero up to round-off do not produce huge ratios.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// `|a - n| / max(|a| + |n|, GRADCHECK_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(GRADCHECK_FLOOR)
}

/// Compares backward-pass gradients of the scalar built by `loss` with
/// `(f(x + eps) - f(x - eps)) / 2 eps` for every trainable element, or an
/// evenly strided subset of `max_per_param` elements for larger tensors.
/// Parameters are restored afterwards.
pub fn gradient_check<F>(
    params: &mut ParamStore,
    eps: f64,
    max_per_param: usize,
    loss: F,
) -> Result<GradCheck>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    let eval = |params: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(params);
        let l = loss(&mut g)?;
        let t = g.value(l);
        if t.len() != 1 {
            return Err(Error::Graph(format!(
                "gradient check needs a scalar, got {:?}",
                t.shape()
            )));
        }
        Ok(t.item())
    };
    let grads = {
        let mut g = Graph::new(params);
        let l = loss(&mut g)?;
        g.backward(l)?
    };
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for id in 0..params.len() {
        if !params.is_trainable(id) {
            continue;
        }
        let n = params.tensor(id).len();
        let analytic = grads
            .get(id)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; n]);
        let stride = n.div_ceil(max_per_param.max(1)).max(1);
        for j in (0..n).step_by(stride) {
            let orig = params.tensor(id).data()[j];
            params.tensor_mut(id).data_mut()[j] = orig + eps;
            let plus = eval(params);
            params.tensor_mut(id).data_mut()[j] = orig - eps;
            let minus = eval(params);
            params.tensor_mut(id).data_mut()[j] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let err = relative_error(analytic[j], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = err.max(report.max_rel_error);
                report.worst_param = params.entry(id).name.clone();
                report.worst_index = j;
            }
        }
    }
    Ok(report)
}
