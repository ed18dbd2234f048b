use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::ModelConfig;
use crate::error::{Error, Result};

/// Gate blocks inside the `4H` axis, in this order.
pub const GATE_ORDER: [&str; 4] = ["input", "forget", "candidate", "output"];

/// Names of the parameter arrays in serialization order.
pub const PARAM_ORDER: [&str; 5] = ["W", "U", "b", "w_out", "b_out"];

/// LSTM scalars: input kernel, recurrent kernel and bias for four gates.
pub fn lstm_param_count(input_dim: usize, hidden: usize) -> usize {
    4 * ((input_dim + hidden) * hidden + hidden)
}

/// Dense output layer: one weight per hidden unit plus a bias.
pub fn dense_param_count(hidden: usize) -> usize {
    hidden + 1
}

pub fn param_count(config: &ModelConfig) -> usize {
    lstm_param_count(config.input_dim, config.hidden_units) + dense_param_count(config.hidden_units)
}

/// LSTM + dense weights. Gate columns of `w`, `u` and `b` are laid out as
/// `[input | forget | candidate | output]`, `H` columns each.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
    pub w_out: Array1<f64>,
    pub b_out: f64,
}

impl ModelParameters {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        ModelParameters {
            w: Array2::zeros((input_dim, 4 * hidden)),
            u: Array2::zeros((hidden, 4 * hidden)),
            b: Array1::zeros(4 * hidden),
            w_out: Array1::zeros(hidden),
            b_out: 0.0,
        }
    }

    /// Glorot-uniform input and output kernels, orthogonal recurrent kernel,
    /// zero biases except the forget gate at 1.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut params = ModelParameters::zeros(input_dim, hidden);
        glorot_uniform(params.w.as_slice_mut().expect("contiguous"), input_dim, 4 * hidden, rng);
        params.u = orthogonal(hidden, 4 * hidden, rng);
        params
            .b
            .slice_mut(ndarray::s![hidden..2 * hidden])
            .fill(1.0);
        glorot_uniform(params.w_out.as_slice_mut().expect("contiguous"), hidden, 1, rng);
        params
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden_units(&self) -> usize {
        self.u.nrows()
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len() + self.w_out.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, h) = (self.input_dim(), self.hidden_units());
        if self.w.ncols() != 4 * h
            || self.u.ncols() != 4 * h
            || self.b.len() != 4 * h
            || self.w_out.len() != h
            || d == 0
            || h == 0
        {
            return Err(Error::Dimension(format!(
                "inconsistent parameter shapes W{:?} U{:?} b[{}] w_out[{}]",
                self.w.dim(),
                self.u.dim(),
                self.b.len(),
                self.w_out.len()
            )));
        }
        Ok(())
    }

    /// Parameter arrays in [`PARAM_ORDER`], each flattened row-major.
    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.w.as_slice().expect("contiguous"),
            self.u.as_slice().expect("contiguous"),
            self.b.as_slice().expect("contiguous"),
            self.w_out.as_slice().expect("contiguous"),
            std::slice::from_ref(&self.b_out),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.w.as_slice_mut().expect("contiguous"),
            self.u.as_slice_mut().expect("contiguous"),
            self.b.as_slice_mut().expect("contiguous"),
            self.w_out.as_slice_mut().expect("contiguous"),
            std::slice::from_mut(&mut self.b_out),
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// Inverse of [`to_flat`](Self::to_flat).
    pub fn from_flat(input_dim: usize, hidden: usize, values: &[f64]) -> Result<Self> {
        let mut params = ModelParameters::zeros(input_dim, hidden);
        if values.len() != params.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameters for D={input_dim} H={hidden}, got {}",
                params.len(),
                values.len()
            )));
        }
        let mut rest = values;
        for slot in params.slices_mut() {
            let (head, tail) = rest.split_at(slot.len());
            slot.copy_from_slice(head);
            rest = tail;
        }
        Ok(params)
    }

    pub fn scale(&mut self, factor: f64) {
        for slot in self.slices_mut() {
            slot.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &ModelParameters) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }

    /// Order-sensitive hash of every scalar's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        const FNV_PRIME: u64 = 0x100_0000_01b3;
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for slot in self.slices() {
            for v in slot {
                hash ^= v.to_bits();
                hash = hash.wrapping_mul(FNV_PRIME);
            }
        }
        hash
    }
}

fn glorot_uniform<R: Rng + ?Sized>(out: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    out.iter_mut().for_each(|v| *v = dist.sample(rng));
}

/// `rows x cols` matrix with orthonormal rows (rows <= cols) or columns,
/// from modified Gram-Schmidt on a standard normal draw.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let mut q = Array2::<f64>::from_shape_fn((tall, short), |_| StandardNormal.sample(rng));
    for j in 0..short {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let basis = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-proj, &basis);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    if rows < cols {
        q.reversed_axes().as_standard_layout().to_owned()
    } else {
        q
    }
}
