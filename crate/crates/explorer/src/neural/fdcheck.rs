//! Central finite-difference gradient verification.
//!
//! These helpers compare analytic gradients against `(L(p+h) − L(p−h)) / 2h`
//! for a linear probe loss `L = Σ cᵢ·outᵢ`. They exist for the test suite
//! but live in the library so integration tests can drive them against the
//! full-size architectures.
//!
//! ReLU caveat: when a pre-activation sits within `h` of zero, the central
//! difference straddles the kink and is not a valid derivative estimate, so
//! an entry that misses the tolerance is re-estimated at `h/32` and
//! `h/1024`. Kink artifacts disappear as `h` shrinks; a genuine analytic
//! error stays wrong at every scale.

use super::dense::Dense;
use super::lstm::{Lstm, LstmState};
use super::net::RecurrentNet;

/// Relative error with an absolute floor, so near-zero gradient pairs (where
/// the finite difference is pure roundoff) compare sanely.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs().max(n.abs()).max(1e-6))
}

/// Gives every bias a small random value.
///
/// Freshly built networks have all-zero biases, so whenever an entire ReLU
/// layer is inactive the next layer's pre-activation is *exactly* zero —
/// on the kink, where no derivative exists and a central difference returns
/// the two-sided average at every step size. Checked configurations shift
/// the biases off zero to keep the finite-difference oracle valid; training
/// still starts from zero biases.
pub fn randomize_biases(net: &mut RecurrentNet, rng: &mut crate::rng::Rng, scale: f64) {
    for p in net.params_mut() {
        if p.rows == 1 {
            for v in &mut p.data {
                *v = rng.uniform(-scale, scale);
            }
        }
    }
}

/// Outcome of one gradient check.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// (block index, flat index, analytic, numeric) of the worst entry.
    pub worst: (usize, usize, f64, f64),
}

impl GradCheckReport {
    fn new() -> Self {
        GradCheckReport {
            max_rel_err: 0.0,
            checked: 0,
            worst: (0, 0, 0.0, 0.0),
        }
    }

    fn record(&mut self, block: usize, idx: usize, analytic: f64, numeric: f64, err: f64) {
        self.checked += 1;
        if err > self.max_rel_err {
            self.max_rel_err = err;
            self.worst = (block, idx, analytic, numeric);
        }
    }
}

/// Central difference around `orig` with kink-robust h-refinement:
/// if the estimate at `h` misses `tol`, retries at `h/32` and `h/1024` and
/// keeps the best. `eval_at(v)` must set the parameter to `v` and return the
/// loss; the parameter is restored before returning.
fn fd_best(
    analytic: f64,
    orig: f64,
    h: f64,
    tol: f64,
    mut eval_at: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let mut best_err = f64::INFINITY;
    let mut best_num = f64::NAN;
    for scale in [1.0, 32.0, 1024.0] {
        let hh = h / scale;
        let lp = eval_at(orig + hh);
        let lm = eval_at(orig - hh);
        let numeric = (lp - lm) / (2.0 * hh);
        let e = rel_err(analytic, numeric);
        if e < best_err {
            best_err = e;
            best_num = numeric;
        }
        if best_err < tol {
            break;
        }
    }
    eval_at(orig);
    (best_err, best_num)
}

/// Checks every parameter of a dense layer against finite differences.
pub fn check_dense(layer: &mut Dense, x: &[f64], probe: &[f64], h: f64, tol: f64) -> GradCheckReport {
    let mut report = GradCheckReport::new();

    let (_, cache) = layer.forward(x);
    let mut dw = super::tensor::Mat::zeros(layer.w.rows, layer.w.cols);
    let mut db = super::tensor::Mat::zeros(1, layer.b.cols);
    layer.backward(&cache, probe, &mut dw, &mut db);

    for block in 0..2 {
        let len = if block == 0 { layer.w.len() } else { layer.b.len() };
        for idx in 0..len {
            let analytic = if block == 0 { dw.data[idx] } else { db.data[idx] };
            let orig = if block == 0 {
                layer.w.data[idx]
            } else {
                layer.b.data[idx]
            };
            let (err, numeric) = fd_best(analytic, orig, h, tol, |v| {
                if block == 0 {
                    layer.w.data[idx] = v;
                } else {
                    layer.b.data[idx] = v;
                }
                let (y, _) = layer.forward(x);
                y.iter().zip(probe).map(|(a, b)| a * b).sum()
            });
            report.record(block, idx, analytic, numeric, err);
        }
    }
    report
}

/// Checks every LSTM parameter against finite differences. The loss probes
/// every timestep's output (`L = Σ_t Σ_j probes[t][j]·h_t[j]`), which
/// exercises the full backward recurrence.
pub fn check_lstm(
    lstm: &mut Lstm,
    xs: &[Vec<f64>],
    probes: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> GradCheckReport {
    let mut report = GradCheckReport::new();
    let hidden = lstm.hidden_dim();

    let state0 = LstmState::zeros(hidden);
    let (_, _, caches) = lstm.forward_seq(xs, &state0).expect("finite forward");
    let mut grads = lstm.zero_grads();
    lstm.backward_seq(&caches, probes, &mut grads);

    let n_blocks = grads.len();
    for block in 0..n_blocks {
        for idx in 0..grads[block].len() {
            let analytic = grads[block].data[idx];
            let orig = lstm.params_mut()[block].data[idx];
            let (err, numeric) = fd_best(analytic, orig, h, tol, |v| {
                lstm.params_mut()[block].data[idx] = v;
                let (outs, _, _) = lstm
                    .forward_seq(xs, &LstmState::zeros(hidden))
                    .expect("finite forward");
                outs.iter()
                    .zip(probes)
                    .flat_map(|(o, p)| o.iter().zip(p))
                    .map(|(a, b)| a * b)
                    .sum()
            });
            report.record(block, idx, analytic, numeric, err);
        }
    }
    report
}

/// Checks network parameters against finite differences.
///
/// `sample`: `None` checks every parameter (use for small dimensions);
/// `Some(k)` checks `k` deterministically spread entries per parameter
/// block, which keeps full-size architectures affordable.
pub fn check_net(
    net: &mut RecurrentNet,
    states: &[Vec<f64>],
    maps: &[Vec<f64>],
    probe: &[f64],
    h: f64,
    tol: f64,
    sample: Option<usize>,
) -> GradCheckReport {
    let mut report = GradCheckReport::new();

    let (_, cache) = net.forward(states, maps).expect("finite forward");
    let mut grads = net.zero_grads();
    net.backward(&cache, probe, &mut grads);

    let n_blocks = grads.mats.len();
    for block in 0..n_blocks {
        let len = grads.mats[block].len();
        let indices: Vec<usize> = match sample {
            None => (0..len).collect(),
            Some(k) => {
                // Deterministic spread: k entries at even strides through the
                // block, offset by the block index so blocks don't all probe
                // entry 0.
                let k = k.min(len);
                (0..k).map(|j| (j * len / k + block * 7919) % len).collect()
            }
        };
        for idx in indices {
            let analytic = grads.mats[block].data[idx];
            let orig = net.params_mut()[block].data[idx];
            let (err, numeric) = fd_best(analytic, orig, h, tol, |v| {
                net.params_mut()[block].data[idx] = v;
                let (y, _) = net.forward(states, maps).expect("finite forward");
                y.iter().zip(probe).map(|(a, b)| a * b).sum()
            });
            report.record(block, idx, analytic, numeric, err);
        }
    }
    report
}
