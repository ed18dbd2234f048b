use super::params::ModelParameters;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParameters,
    pub v: ModelParameters,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        AdamState {
            m: ModelParameters::zeros(input_dim, hidden),
            v: ModelParameters::zeros(input_dim, hidden),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }

    pub fn for_params(params: &ModelParameters) -> Self {
        AdamState::new(params.input_dim(), params.hidden_units())
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut ModelParameters,
    grads: &ModelParameters,
    state: &mut AdamState,
    learning_rate: f64,
) {
    state.t += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let correction1 = 1.0 - b1.powi(state.t as i32);
    let correction2 = 1.0 - b2.powi(state.t as i32);

    let slots = params
        .slices_mut()
        .into_iter()
        .zip(grads.slices())
        .zip(state.m.slices_mut().into_iter().zip(state.v.slices_mut()));
    for ((theta, g), (m, v)) in slots {
        for k in 0..theta.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / correction1;
            let v_hat = v[k] / correction2;
            theta[k] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
