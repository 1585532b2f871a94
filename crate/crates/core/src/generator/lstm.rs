//! A single LSTM layer with explicit forward caches and backpropagation
//! through time.
//!
//! Gates are kept as separate tensors in the order input, forget, output,
//! candidate. Pre-activations are `z = xᵀW + hᵀU + b`, with `W` of shape
//! `d_in × d_h` and `U` of shape `d_h × d_h`.

use rand::Rng;

use crate::tensor::{axpy, sigmoid, Matrix};

pub const GATES: [&str; 4] = ["i", "f", "o", "g"];
const FORGET: usize = 1;
const CANDIDATE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: [Matrix; 4],
    pub recurrent: [Matrix; 4],
    pub bias: [Vec<f64>; 4],
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            input: std::array::from_fn(|_| Matrix::zeros(input_dim, hidden_dim)),
            recurrent: std::array::from_fn(|_| Matrix::zeros(hidden_dim, hidden_dim)),
            bias: std::array::from_fn(|_| vec![0.0; hidden_dim]),
        }
    }

    /// Weights uniform in `±1/sqrt(d_h)`, biases zero except the forget
    /// gate, which starts at one.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        let input = std::array::from_fn(|_| Matrix::uniform(input_dim, hidden_dim, bound, rng));
        let recurrent = std::array::from_fn(|_| Matrix::uniform(hidden_dim, hidden_dim, bound, rng));
        let mut bias: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden_dim]);
        bias[FORGET].iter_mut().for_each(|b| *b = 1.0);
        LstmParams {
            input,
            recurrent,
            bias,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input[0].rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.input[0].cols()
    }

    /// Every tensor in persisted order: W_i..W_g, U_i..U_g, b_i..b_g.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(12);
        v.extend(self.input.iter().map(Matrix::data));
        v.extend(self.recurrent.iter().map(Matrix::data));
        v.extend(self.bias.iter().map(Vec::as_slice));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(12);
        v.extend(self.input.iter_mut().map(Matrix::data_mut));
        v.extend(self.recurrent.iter_mut().map(Matrix::data_mut));
        v.extend(self.bias.iter_mut().map(Vec::as_mut_slice));
        v
    }

    pub fn tensor_names(prefix: &str) -> Vec<String> {
        let mut v = Vec::with_capacity(12);
        for kind in ["W", "U", "b"] {
            for g in GATES {
                v.push(format!("{prefix}.{kind}_{g}"));
            }
        }
        v
    }

    fn assert_shapes(&self, x: &[f64], h: &[f64], c: &[f64]) {
        assert_eq!(x.len(), self.input_dim(), "lstm input has wrong length");
        assert_eq!(h.len(), self.hidden_dim(), "lstm hidden state has wrong length");
        assert_eq!(c.len(), self.hidden_dim(), "lstm cell state has wrong length");
    }
}

/// Everything a step needs for its backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Post-activation gate values, `GATES` order.
    pub gates: [Vec<f64>; 4],
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn step_cached(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> StepCache {
    p.assert_shapes(x, h, c);
    let gates: [Vec<f64>; 4] = std::array::from_fn(|g| {
        let mut z = p.bias[g].clone();
        p.input[g].accumulate_vec_mul(x, &mut z);
        p.recurrent[g].accumulate_vec_mul(h, &mut z);
        if g == CANDIDATE {
            z.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        z
    });
    let [i, f, o, g] = &gates;
    let c_new: Vec<f64> = (0..c.len()).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
    let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
    let h_new: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    StepCache {
        x: x.to_vec(),
        h_prev: h.to_vec(),
        c_prev: c.to_vec(),
        gates,
        c: c_new,
        tanh_c,
        h: h_new,
    }
}

/// One gated update: returns `(h', c')`.
///
/// # Panics
/// If `x`, `h` or `c` do not match the parameter shapes.
pub fn lstm_step(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = step_cached(p, x, h, c);
    (s.h, s.c)
}

/// Runs the layer over `inputs` from the zero state.
pub fn run_sequence<'a, I>(p: &LstmParams, inputs: I) -> Vec<StepCache>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let d_h = p.hidden_dim();
    let mut h = vec![0.0; d_h];
    let mut c = vec![0.0; d_h];
    let mut out = Vec::new();
    for x in inputs {
        let s = step_cached(p, x, &h, &c);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        out.push(s);
    }
    out
}

/// Gradients flowing out of one step.
pub struct StepGrad {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
}

/// Backward through one step. `dh` is the total gradient reaching `h'`,
/// `dc` the gradient reaching `c'` from later steps. Parameter gradients
/// accumulate into `grad`.
pub fn step_backward(p: &LstmParams, s: &StepCache, dh: &[f64], dc: &[f64], grad: &mut LstmParams) -> StepGrad {
    let d_h = p.hidden_dim();
    let [i, f, o, g] = &s.gates;
    let mut dz: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d_h]);
    let mut dc_prev = vec![0.0; d_h];
    for j in 0..d_h {
        let dct = dc[j] + dh[j] * o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
        let d_o = dh[j] * s.tanh_c[j];
        let d_i = dct * g[j];
        let d_g = dct * i[j];
        let d_f = dct * s.c_prev[j];
        dc_prev[j] = dct * f[j];
        dz[0][j] = d_i * i[j] * (1.0 - i[j]);
        dz[1][j] = d_f * f[j] * (1.0 - f[j]);
        dz[2][j] = d_o * o[j] * (1.0 - o[j]);
        dz[3][j] = d_g * (1.0 - g[j] * g[j]);
    }
    let mut dx = vec![0.0; p.input_dim()];
    let mut dh_prev = vec![0.0; d_h];
    for (k, dzk) in dz.iter().enumerate() {
        grad.input[k].add_outer(&s.x, dzk);
        grad.recurrent[k].add_outer(&s.h_prev, dzk);
        axpy(1.0, dzk, &mut grad.bias[k]);
        p.input[k].accumulate_mul_vec(dzk, &mut dx);
        p.recurrent[k].accumulate_mul_vec(dzk, &mut dh_prev);
    }
    StepGrad { dx, dh_prev, dc_prev }
}

/// Backpropagation through time. `dh_out[t]` is the external gradient on
/// the hidden state of step `t`; returns the gradient for each input.
pub fn sequence_backward(
    p: &LstmParams,
    steps: &[StepCache],
    dh_out: &[Vec<f64>],
    grad: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let d_h = p.hidden_dim();
    let mut dh_next = vec![0.0; d_h];
    let mut dc_next = vec![0.0; d_h];
    let mut dxs = vec![Vec::new(); steps.len()];
    for t in (0..steps.len()).rev() {
        let mut dh = dh_out[t].clone();
        axpy(1.0, &dh_next, &mut dh);
        let sg = step_backward(p, &steps[t], &dh, &dc_next, grad);
        dh_next = sg.dh_prev;
        dc_next = sg.dc_prev;
        dxs[t] = sg.dx;
    }
    dxs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_and_state_stay_zero() {
        let p = LstmParams::zeros(3, 4);
        let (h, c) = lstm_step(&p, &[0.3, -2.0, 5.0], &[0.0; 4], &[0.0; 4]);
        assert_eq!(h, vec![0.0; 4]);
        assert_eq!(c, vec![0.0; 4]);
    }

    #[test]
    fn hidden_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = LstmParams::init(3, 5, &mut rng);
        for t in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= 3.0);
        }
        let (h, _) = lstm_step(&p, &[1.0, -2.0, 0.5], &[0.9; 5], &[2.0; 5]);
        assert!(h.iter().all(|v| v.abs() < 1.0));
        // saturated gates round to exactly 1 in f64; never beyond
        for t in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= 50.0);
        }
        let (h, _) = lstm_step(&p, &[10.0, -10.0, 3.0], &[0.9; 5], &[40.0; 5]);
        assert!(h.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    #[should_panic(expected = "wrong length")]
    fn shape_mismatch_panics() {
        let p = LstmParams::zeros(3, 4);
        lstm_step(&p, &[0.0; 2], &[0.0; 4], &[0.0; 4]);
    }

    /// Central differences on `L = Σ_t w_t · h_t` through a short sequence.
    #[test]
    fn bptt_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d_in, d_h) = (3, 4);
        let p = LstmParams::init(d_in, d_h, &mut rng);
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ws: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..d_h).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let loss = |p: &LstmParams, xs: &[Vec<f64>]| -> f64 {
            run_sequence(p, xs.iter().map(Vec::as_slice))
                .iter()
                .zip(&ws)
                .map(|(s, w)| crate::tensor::dot(&s.h, w))
                .sum()
        };
        let steps = run_sequence(&p, xs.iter().map(Vec::as_slice));
        let mut grad = LstmParams::zeros(d_in, d_h);
        let dxs = sequence_backward(&p, &steps, &ws, &mut grad);

        let eps = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
        let mut probe = p.clone();
        let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|t| t.to_vec()).collect();
        for (ti, at) in analytic.iter().enumerate() {
            for k in 0..at.len() {
                let orig = probe.tensors()[ti][k];
                probe.tensors_mut()[ti][k] = orig + eps;
                let up = loss(&probe, &xs);
                probe.tensors_mut()[ti][k] = orig - eps;
                let down = loss(&probe, &xs);
                probe.tensors_mut()[ti][k] = orig;
                let num = (up - down) / (2.0 * eps);
                assert!(rel(at[k], num) < 1e-6, "tensor {ti}[{k}]: {} vs {num}", at[k]);
            }
        }
        for t in 0..xs.len() {
            for k in 0..d_in {
                let mut up = xs.clone();
                up[t][k] += eps;
                let mut down = xs.clone();
                down[t][k] -= eps;
                let num = (loss(&p, &up) - loss(&p, &down)) / (2.0 * eps);
                assert!(rel(dxs[t][k], num) < 1e-6);
            }
        }
    }
}
