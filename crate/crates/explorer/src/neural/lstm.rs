//! LSTM layer with full backpropagation through time.

use super::tensor::{matvec_acc, matvec_t, outer_acc, Mat};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Standard LSTM cell:
///
/// ```text
/// i = σ(x·Wi + h·Ui + bi)      input gate
/// f = σ(x·Wf + h·Uf + bf)      forget gate
/// o = σ(x·Wo + h·Uo + bo)      output gate
/// g = tanh(x·Wg + h·Ug + bg)   candidate
/// c' = f∘c + i∘g               cell update
/// h' = o∘tanh(c')              output
/// ```
///
/// `W_*: [input, hidden]`, `U_*: [hidden, hidden]`, `b_*: [1, hidden]`.
#[derive(Clone, Debug)]
pub struct Lstm {
    pub wi: Mat,
    pub ui: Mat,
    pub bi: Mat,
    pub wf: Mat,
    pub uf: Mat,
    pub bf: Mat,
    pub wo: Mat,
    pub uo: Mat,
    pub bo: Mat,
    pub wg: Mat,
    pub ug: Mat,
    pub bg: Mat,
}

/// Hidden and cell state; zeroed at the start of every sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Per-step intermediates kept for backpropagation through time.
#[derive(Clone, Debug)]
pub struct LstmStepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}


fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Lstm {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        Lstm {
            wi: Mat::xavier(input, hidden, rng),
            ui: Mat::xavier(hidden, hidden, rng),
            bi: Mat::zeros(1, hidden),
            wf: Mat::xavier(input, hidden, rng),
            uf: Mat::xavier(hidden, hidden, rng),
            bf: Mat::zeros(1, hidden),
            wo: Mat::xavier(input, hidden, rng),
            uo: Mat::xavier(hidden, hidden, rng),
            bo: Mat::zeros(1, hidden),
            wg: Mat::xavier(input, hidden, rng),
            ug: Mat::xavier(hidden, hidden, rng),
            bg: Mat::zeros(1, hidden),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wi.rows
    }

    pub fn hidden_dim(&self) -> usize {
        self.wi.cols
    }

    pub fn param_names() -> [&'static str; 12] {
        [
            "wi", "ui", "bi", "wf", "uf", "bf", "wo", "uo", "bo", "wg", "ug", "bg",
        ]
    }

    pub fn params(&self) -> [&Mat; 12] {
        [
            &self.wi, &self.ui, &self.bi, &self.wf, &self.uf, &self.bf, &self.wo, &self.uo,
            &self.bo, &self.wg, &self.ug, &self.bg,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Mat; 12] {
        [
            &mut self.wi, &mut self.ui, &mut self.bi, &mut self.wf, &mut self.uf, &mut self.bf,
            &mut self.wo, &mut self.uo, &mut self.bo, &mut self.wg, &mut self.ug, &mut self.bg,
        ]
    }

    pub fn zero_grads(&self) -> Vec<Mat> {
        self.params()
            .iter()
            .map(|p| Mat::zeros(p.rows, p.cols))
            .collect()
    }

    /// One cell step. Returns the new state and the cached intermediates.
    pub fn step(&self, x: &[f64], state: &LstmState) -> (LstmState, LstmStepCache) {
        let hidden = self.hidden_dim();
        assert_eq!(x.len(), self.input_dim(), "lstm input width mismatch");
        assert_eq!(state.h.len(), hidden, "lstm state width mismatch");

        let mut zi = self.bi.data.clone();
        let mut zf = self.bf.data.clone();
        let mut zo = self.bo.data.clone();
        let mut zg = self.bg.data.clone();
        matvec_acc(&self.wi, x, &mut zi);
        matvec_acc(&self.wf, x, &mut zf);
        matvec_acc(&self.wo, x, &mut zo);
        matvec_acc(&self.wg, x, &mut zg);
        matvec_acc(&self.ui, &state.h, &mut zi);
        matvec_acc(&self.uf, &state.h, &mut zf);
        matvec_acc(&self.uo, &state.h, &mut zo);
        matvec_acc(&self.ug, &state.h, &mut zg);

        let i: Vec<f64> = zi.iter().map(|&z| sigmoid(z)).collect();
        let f: Vec<f64> = zf.iter().map(|&z| sigmoid(z)).collect();
        let o: Vec<f64> = zo.iter().map(|&z| sigmoid(z)).collect();
        let g: Vec<f64> = zg.iter().map(|&z| z.tanh()).collect();

        let mut c = vec![0.0; hidden];
        for j in 0..hidden {
            c[j] = f[j] * state.c[j] + i[j] * g[j];
        }
        let tanh_c: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
        let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(&o, &t)| o * t).collect();

        let cache = LstmStepCache {
            x: x.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            i,
            f,
            o,
            g,
            tanh_c,
        };
        (LstmState { h, c }, cache)
    }

    /// Runs the cell over a whole sequence, threading state. Errors if a
    /// hidden or cell value goes non-finite, reporting the step index.
    pub fn forward_seq(
        &self,
        xs: &[Vec<f64>],
        state0: &LstmState,
    ) -> Result<(Vec<Vec<f64>>, LstmState, Vec<LstmStepCache>)> {
        assert!(!xs.is_empty(), "lstm sequence must have at least one step");
        let mut state = state0.clone();
        let mut outputs = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        for (t, x) in xs.iter().enumerate() {
            let (next, cache) = self.step(x, &state);
            if !next.h.iter().chain(&next.c).all(|v| v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite LSTM state at sequence step {t}"
                )));
            }
            outputs.push(next.h.clone());
            caches.push(cache);
            state = next;
        }
        Ok((outputs, state, caches))
    }

    /// Backpropagation through time.
    ///
    /// `d_hs[t]` is the loss gradient on the step-`t` output (pass zeros for
    /// steps without a direct loss). Parameter gradients accumulate into
    /// `grads` (12 matrices in [`Lstm::param_names`] order); the return
    /// value is the gradient on each input `x_t`.
    pub fn backward_seq(
        &self,
        caches: &[LstmStepCache],
        d_hs: &[Vec<f64>],
        grads: &mut [Mat],
    ) -> Vec<Vec<f64>> {
        assert_eq!(caches.len(), d_hs.len(), "BPTT length mismatch");
        assert_eq!(grads.len(), 12, "LSTM gradient block count");
        let hidden = self.hidden_dim();
        let input = self.input_dim();
        let t_len = caches.len();

        let mut dxs = vec![vec![0.0; input]; t_len];
        let mut dh = vec![0.0; hidden];
        let mut dc = vec![0.0; hidden];

        for t in (0..t_len).rev() {
            let cc = &caches[t];
            for j in 0..hidden {
                dh[j] += d_hs[t][j];
            }

            let mut dzi = vec![0.0; hidden];
            let mut dzf = vec![0.0; hidden];
            let mut dzo = vec![0.0; hidden];
            let mut dzg = vec![0.0; hidden];
            for j in 0..hidden {
                let tc = cc.tanh_c[j];
                let d_o = dh[j] * tc;
                dc[j] += dh[j] * cc.o[j] * (1.0 - tc * tc);
                let d_i = dc[j] * cc.g[j];
                let d_g = dc[j] * cc.i[j];
                let d_f = dc[j] * cc.c_prev[j];
                // σ'(z) expressed through the gate output: s(1−s).
                dzi[j] = d_i * cc.i[j] * (1.0 - cc.i[j]);
                dzf[j] = d_f * cc.f[j] * (1.0 - cc.f[j]);
                dzo[j] = d_o * cc.o[j] * (1.0 - cc.o[j]);
                dzg[j] = d_g * (1.0 - cc.g[j] * cc.g[j]);
                // Carry into the previous cell state.
                dc[j] *= cc.f[j];
            }

            outer_acc(&mut grads[0], &cc.x, &dzi);
            outer_acc(&mut grads[1], &cc.h_prev, &dzi);
            acc_bias(&mut grads[2], &dzi);
            outer_acc(&mut grads[3], &cc.x, &dzf);
            outer_acc(&mut grads[4], &cc.h_prev, &dzf);
            acc_bias(&mut grads[5], &dzf);
            outer_acc(&mut grads[6], &cc.x, &dzo);
            outer_acc(&mut grads[7], &cc.h_prev, &dzo);
            acc_bias(&mut grads[8], &dzo);
            outer_acc(&mut grads[9], &cc.x, &dzg);
            outer_acc(&mut grads[10], &cc.h_prev, &dzg);
            acc_bias(&mut grads[11], &dzg);

            matvec_t(&self.wi, &dzi, &mut dxs[t]);
            matvec_t(&self.wf, &dzf, &mut dxs[t]);
            matvec_t(&self.wo, &dzo, &mut dxs[t]);
            matvec_t(&self.wg, &dzg, &mut dxs[t]);

            let mut dh_prev = vec![0.0; hidden];
            matvec_t(&self.ui, &dzi, &mut dh_prev);
            matvec_t(&self.uf, &dzf, &mut dh_prev);
            matvec_t(&self.uo, &dzo, &mut dh_prev);
            matvec_t(&self.ug, &dzg, &mut dh_prev);
            dh = dh_prev;
        }
        dxs
    }
}

fn acc_bias(db: &mut Mat, dz: &[f64]) {
    for (g, &d) in db.data.iter_mut().zip(dz) {
        *g += d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_keep_outputs_zero() {
        let lstm = Lstm {
            wi: Mat::zeros(3, 2),
            ui: Mat::zeros(2, 2),
            bi: Mat::zeros(1, 2),
            wf: Mat::zeros(3, 2),
            uf: Mat::zeros(2, 2),
            bf: Mat::zeros(1, 2),
            wo: Mat::zeros(3, 2),
            uo: Mat::zeros(2, 2),
            bo: Mat::zeros(1, 2),
            wg: Mat::zeros(3, 2),
            ug: Mat::zeros(2, 2),
            bg: Mat::zeros(1, 2),
        };
        let xs = vec![vec![1.0, -1.0, 2.0]; 4];
        let (outs, state, _) = lstm.forward_seq(&xs, &LstmState::zeros(2)).unwrap();
        for out in outs {
            assert_eq!(out, vec![0.0, 0.0]);
        }
        assert_eq!(state.c, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_gates_give_tanh_of_one() {
        // Scalar cell, all weights zero; large input/output/candidate gate
        // biases force i ≈ o ≈ 1 and g ≈ 1, so h ≈ tanh(1).
        let mut lstm = Lstm::new(1, 1, &mut Rng::new(0));
        for p in lstm.params_mut() {
            p.fill(0.0);
        }
        lstm.bi.fill(20.0);
        lstm.bo.fill(20.0);
        lstm.bg.fill(20.0);
        let (outs, _, _) = lstm
            .forward_seq(&[vec![0.0]], &LstmState::zeros(1))
            .unwrap();
        let expected = 1.0_f64.tanh(); // 0.7615941559557649
        assert!(
            (outs[0][0] - expected).abs() < 1e-6,
            "got {}, want ≈ {}",
            outs[0][0],
            expected
        );
    }

    #[test]
    fn sequence_split_equivalence() {
        let lstm = Lstm::new(4, 3, &mut Rng::new(9));
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|t| (0..4).map(|k| ((t * 4 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let (_, whole, _) = lstm.forward_seq(&xs, &LstmState::zeros(3)).unwrap();

        let mut threaded = LstmState::zeros(3);
        for x in &xs {
            let (next, _) = lstm.step(x, &threaded);
            threaded = next;
        }
        assert_eq!(whole, threaded);
    }

    #[test]
    fn input_gradients_match_finite_difference() {
        let lstm = Lstm::new(3, 4, &mut Rng::new(15));
        let mut rng = Rng::new(16);
        let mut xs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let probe: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let loss = |l: &Lstm, xs: &[Vec<f64>]| -> f64 {
            let (outs, _, _) = l.forward_seq(xs, &LstmState::zeros(4)).unwrap();
            outs.last().unwrap().iter().zip(&probe).map(|(a, b)| a * b).sum()
        };

        let (_, _, caches) = lstm.forward_seq(&xs, &LstmState::zeros(4)).unwrap();
        let mut d_hs = vec![vec![0.0; 4]; 5];
        d_hs[4] = probe.clone();
        let mut grads = lstm.zero_grads();
        let dxs = lstm.backward_seq(&caches, &d_hs, &mut grads);

        let h = 1e-6;
        for t in 0..5 {
            for j in 0..3 {
                let orig = xs[t][j];
                xs[t][j] = orig + h;
                let lp = loss(&lstm, &xs);
                xs[t][j] = orig - h;
                let lm = loss(&lstm, &xs);
                xs[t][j] = orig;
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = dxs[t][j];
                let rel = (analytic - numeric).abs()
                    / analytic.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    rel < 1e-4,
                    "dx[{t}][{j}]: analytic {analytic}, numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn non_finite_state_reports_step_index() {
        let mut lstm = Lstm::new(1, 1, &mut Rng::new(0));
        for p in lstm.params_mut() {
            p.fill(0.0);
        }
        lstm.wi.fill(f64::NAN);
        let err = lstm
            .forward_seq(&[vec![0.0], vec![1.0]], &LstmState::zeros(1))
            .unwrap_err();
        assert!(err.to_string().contains("step 1"), "got: {err}");
    }
}
