//! Single-layer LSTM over a batch of equal-length sequences.
//!
//! Batched arrays stack time-major: row `t * batch + j` holds sequence `j`
//! at step `t`. The input projection for all steps is one matrix product;
//! only the recurrent term is evaluated step by step.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::params::ModelParameters;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub(crate) batch: usize,
    pub(crate) steps: usize,
    /// `(T*B, D)` inputs.
    pub(crate) x: Array2<f64>,
    /// `(T*B, 4H)` activated gates `[i | f | g | o]`.
    pub(crate) gates: Array2<f64>,
    /// `((T+1)*B, H)` cell states, block 0 is the zero initial state.
    pub(crate) c: Array2<f64>,
    /// `((T+1)*B, H)` hidden states, block 0 is the zero initial state.
    pub(crate) h: Array2<f64>,
    /// `(T*B, H)` tanh of the cell state after each step.
    pub(crate) tanh_c: Array2<f64>,
    pub(crate) fingerprint: u64,
}

impl LstmCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Final hidden states `h_T`, one row per sequence.
    pub fn final_hidden(&self) -> ArrayView2<'_, f64> {
        let b = self.batch;
        self.h.slice(s![self.steps * b..(self.steps + 1) * b, ..])
    }
}

pub(crate) fn stack_inputs(xs: &[&FeatureMatrix], input_dim: usize) -> Result<Array2<f64>> {
    let Some(first) = xs.first() else {
        return Err(Error::InvalidArgument("empty batch".into()));
    };
    let steps = first.rows();
    if steps == 0 {
        return Err(Error::Dimension("sequence has no time steps".into()));
    }
    for x in xs {
        if x.cols() != input_dim {
            return Err(Error::Dimension(format!(
                "input has {} columns, model expects {input_dim}",
                x.cols()
            )));
        }
        if x.rows() != steps {
            return Err(Error::Dimension(format!(
                "batch mixes sequence lengths {steps} and {}",
                x.rows()
            )));
        }
    }
    let batch = xs.len();
    let mut stacked = Array2::<f64>::zeros((steps * batch, input_dim));
    for (j, x) in xs.iter().enumerate() {
        for t in 0..steps {
            stacked.row_mut(t * batch + j).assign(&x.row(t));
        }
    }
    Ok(stacked)
}

/// Runs the recurrence over a batch, starting from `h_0 = c_0 = 0`.
pub fn lstm_forward_batch(params: &ModelParameters, xs: &[&FeatureMatrix]) -> Result<LstmCache> {
    params.check_shapes()?;
    let hidden = params.hidden_units();
    let x = stack_inputs(xs, params.input_dim())?;
    let batch = xs.len();
    let steps = x.nrows() / batch;

    let mut gates = x.dot(&params.w);
    gates += &params.b;
    let mut c = Array2::<f64>::zeros(((steps + 1) * batch, hidden));
    let mut h = Array2::<f64>::zeros(((steps + 1) * batch, hidden));
    let mut tanh_c = Array2::<f64>::zeros((steps * batch, hidden));

    for t in 0..steps {
        let rows = t * batch..(t + 1) * batch;
        let recurrent = h.slice(s![rows.clone(), ..]).dot(&params.u);
        let mut z = gates.slice_mut(s![rows.clone(), ..]);
        z += &recurrent;
        for j in 0..batch {
            let row = t * batch + j;
            let zrow = z.row_mut(j).into_slice().expect("contiguous");
            let (zi, rest) = zrow.split_at_mut(hidden);
            let (zf, rest) = rest.split_at_mut(hidden);
            let (zg, zo) = rest.split_at_mut(hidden);
            let c_prev = c.row(row).to_owned();
            let mut c_next = c.row_mut(row + batch);
            let c_next = c_next.as_slice_mut().expect("contiguous");
            let mut tc = tanh_c.row_mut(row);
            let tc = tc.as_slice_mut().expect("contiguous");
            let mut h_next = h.row_mut(row + batch);
            let h_next = h_next.as_slice_mut().expect("contiguous");
            for k in 0..hidden {
                let i = sigmoid(zi[k]);
                let f = sigmoid(zf[k]);
                let g = zg[k].tanh();
                let o = sigmoid(zo[k]);
                zi[k] = i;
                zf[k] = f;
                zg[k] = g;
                zo[k] = o;
                let cell = f * c_prev[k] + i * g;
                c_next[k] = cell;
                tc[k] = cell.tanh();
                h_next[k] = o * tc[k];
            }
        }
    }

    Ok(LstmCache {
        batch,
        steps,
        x,
        gates,
        c,
        h,
        tanh_c,
        fingerprint: params.fingerprint(),
    })
}

/// Final hidden state `h_T` for one sequence, plus the cache for backprop.
pub fn lstm_forward(params: &ModelParameters, x: &FeatureMatrix) -> Result<(Array1<f64>, LstmCache)> {
    let cache = lstm_forward_batch(params, &[x])?;
    let h_final = cache.final_hidden().row(0).to_owned();
    Ok((h_final, cache))
}

/// Backpropagation through time given `dL/dh_T` for every sequence.
/// Gradients are summed over the batch; the dense-layer slots of the
/// returned parameters are left at zero.
pub(crate) fn lstm_backward(
    params: &ModelParameters,
    cache: &LstmCache,
    d_h_final: &Array2<f64>,
) -> Result<ModelParameters> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::InvalidArgument(
            "cache was produced with different parameters".into(),
        ));
    }
    let hidden = params.hidden_units();
    let (batch, steps) = (cache.batch, cache.steps);
    if d_h_final.dim() != (batch, hidden) {
        return Err(Error::Dimension(format!(
            "upstream gradient {:?} does not match batch {batch} x hidden {hidden}",
            d_h_final.dim()
        )));
    }

    let mut d_z = Array2::<f64>::zeros((steps * batch, 4 * hidden));
    let mut d_h = d_h_final.clone();
    let mut d_c = Array2::<f64>::zeros((batch, hidden));
    let u_t = params.u.t();

    for t in (0..steps).rev() {
        for j in 0..batch {
            let row = t * batch + j;
            let gate = cache.gates.row(row);
            let gate = gate.as_slice().expect("contiguous");
            let (gi, rest) = gate.split_at(hidden);
            let (gf, rest) = rest.split_at(hidden);
            let (gg, go) = rest.split_at(hidden);
            let c_prev = cache.c.row(row);
            let tc = cache.tanh_c.row(row);
            let mut dz_row = d_z.row_mut(row);
            let dz_row = dz_row.as_slice_mut().expect("contiguous");
            let (dzi, rest) = dz_row.split_at_mut(hidden);
            let (dzf, rest) = rest.split_at_mut(hidden);
            let (dzg, dzo) = rest.split_at_mut(hidden);
            let dh = d_h.row(j);
            let mut dc = d_c.row_mut(j);
            for k in 0..hidden {
                let (i, f, g, o) = (gi[k], gf[k], gg[k], go[k]);
                let tck = tc[k];
                let dcell = dc[k] + dh[k] * o * (1.0 - tck * tck);
                dzi[k] = dcell * g * i * (1.0 - i);
                dzf[k] = dcell * c_prev[k] * f * (1.0 - f);
                dzg[k] = dcell * i * (1.0 - g * g);
                dzo[k] = dh[k] * tck * o * (1.0 - o);
                dc[k] = dcell * f;
            }
        }
        let rows = t * batch..(t + 1) * batch;
        d_h = d_z.slice(s![rows, ..]).dot(&u_t);
    }

    let h_prev = cache.h.slice(s![..steps * batch, ..]);
    Ok(ModelParameters {
        w: cache.x.t().dot(&d_z),
        u: h_prev.t().dot(&d_z),
        b: d_z.sum_axis(Axis(0)),
        w_out: Array1::zeros(hidden),
        b_out: 0.0,
    })
}
