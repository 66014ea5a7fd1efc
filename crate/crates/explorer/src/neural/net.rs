//! The two-branch recurrent network shared by the navigation and
//! exploration agents.
//!
//! Per timestep, a state vector passes through two ReLU dense layers and a
//! flattened local-map patch through two more; the concatenated features
//! feed a fusion stage — an LSTM over the 5-step history, or a same-width
//! tanh dense layer for the memoryless variant — and a final head (linear
//! Q-values, linear value, or softmax action probabilities) reads the last
//! timestep's fused features.

use super::adam::Adam;
use super::dense::{Activation, Dense, DenseCache};
use super::lstm::{Lstm, LstmState, LstmStepCache};
use super::tensor::Mat;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Length of the observation history fed to the networks.
pub const HISTORY_LEN: usize = 5;

/// Layer widths. [`NetDims::standard`] gives the sizes used by the agents;
/// tests use smaller ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetDims {
    pub state_dim: usize,
    pub state_h1: usize,
    pub state_h2: usize,
    pub map_dim: usize,
    pub map_h1: usize,
    pub map_h2: usize,
    pub hidden: usize,
    pub out: usize,
}

impl NetDims {
    /// The fixed architecture used by every agent network: state branch
    /// →64→10, map branch →100→100, fusion width 110.
    pub fn standard(state_dim: usize, map_dim: usize, out: usize) -> Self {
        NetDims {
            state_dim,
            state_h1: 64,
            state_h2: 10,
            map_dim,
            map_h1: 100,
            map_h2: 100,
            hidden: 110,
            out,
        }
    }

    pub fn fused(&self) -> usize {
        self.state_h2 + self.map_h2
    }
}

/// Fusion stage over the per-timestep branch features.
#[derive(Clone, Debug)]
pub enum Fusion {
    /// LSTM across the history window; the head reads the final hidden state.
    Recurrent(Lstm),
    /// Memoryless variant: an equal-width tanh dense layer applied to the
    /// final timestep only (earlier history cannot influence the output).
    Feedforward(Dense),
}

#[derive(Clone, Debug)]
pub struct RecurrentNet {
    pub state_fc1: Dense,
    pub state_fc2: Dense,
    pub map_fc1: Dense,
    pub map_fc2: Dense,
    pub fusion: Fusion,
    pub head: Dense,
}

/// Per-timestep branch caches plus the fusion/head caches.
pub struct NetCache {
    branch: Vec<BranchCache>,
    fusion: FusionCache,
    head: DenseCache,
}

struct BranchCache {
    s1: DenseCache,
    s2: DenseCache,
    m1: DenseCache,
    m2: DenseCache,
}

enum FusionCache {
    Recurrent(Vec<LstmStepCache>),
    Feedforward(DenseCache),
}

/// Parameter gradients aligned with [`RecurrentNet::param_names`].
pub struct NetGrads {
    pub mats: Vec<Mat>,
}

impl NetGrads {
    pub fn zero(&mut self) {
        for m in &mut self.mats {
            m.fill(0.0);
        }
    }

    /// Elementwise `self += other` (used to merge per-sample gradients).
    pub fn add(&mut self, other: &NetGrads) {
        assert_eq!(self.mats.len(), other.mats.len());
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    /// Elementwise scale (used to average over a batch).
    pub fn scale(&mut self, s: f64) {
        for m in &mut self.mats {
            m.data.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Two adjacent gradient matrices (a layer's weight and bias) borrowed
/// mutably at once.
fn wb_mut(mats: &mut [Mat], i: usize) -> (&mut Mat, &mut Mat) {
    let (a, b) = mats[i..].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

impl RecurrentNet {
    pub fn new(dims: &NetDims, head_act: Activation, recurrent: bool, rng: &mut Rng) -> Self {
        let fused = dims.fused();
        RecurrentNet {
            state_fc1: Dense::new(dims.state_dim, dims.state_h1, Activation::Relu, rng),
            state_fc2: Dense::new(dims.state_h1, dims.state_h2, Activation::Relu, rng),
            map_fc1: Dense::new(dims.map_dim, dims.map_h1, Activation::Relu, rng),
            map_fc2: Dense::new(dims.map_h1, dims.map_h2, Activation::Relu, rng),
            fusion: if recurrent {
                Fusion::Recurrent(Lstm::new(fused, dims.hidden, rng))
            } else {
                Fusion::Feedforward(Dense::new(fused, dims.hidden, Activation::Tanh, rng))
            },
            head: Dense::new(dims.hidden, dims.out, head_act, rng),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_fc1.input_dim()
    }

    pub fn map_dim(&self) -> usize {
        self.map_fc1.input_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self.fusion, Fusion::Recurrent(_))
    }

    /// Stable parameter order; weight files, gradients and optimizer state
    /// all follow it.
    pub fn param_names(&self) -> Vec<&'static str> {
        let mut names = vec![
            "state_fc1.w",
            "state_fc1.b",
            "state_fc2.w",
            "state_fc2.b",
            "map_fc1.w",
            "map_fc1.b",
            "map_fc2.w",
            "map_fc2.b",
        ];
        match &self.fusion {
            Fusion::Recurrent(_) => names.extend([
                "lstm.wi", "lstm.ui", "lstm.bi", "lstm.wf", "lstm.uf", "lstm.bf", "lstm.wo",
                "lstm.uo", "lstm.bo", "lstm.wg", "lstm.ug", "lstm.bg",
            ]),
            Fusion::Feedforward(_) => names.extend(["fusion.w", "fusion.b"]),
        }
        names.extend(["head.w", "head.b"]);
        names
    }

    pub fn params(&self) -> Vec<&Mat> {
        let mut ps = vec![
            &self.state_fc1.w,
            &self.state_fc1.b,
            &self.state_fc2.w,
            &self.state_fc2.b,
            &self.map_fc1.w,
            &self.map_fc1.b,
            &self.map_fc2.w,
            &self.map_fc2.b,
        ];
        match &self.fusion {
            Fusion::Recurrent(lstm) => ps.extend(lstm.params()),
            Fusion::Feedforward(d) => ps.extend([&d.w, &d.b]),
        }
        ps.extend([&self.head.w, &self.head.b]);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Mat> {
        let mut ps = vec![
            &mut self.state_fc1.w,
            &mut self.state_fc1.b,
            &mut self.state_fc2.w,
            &mut self.state_fc2.b,
            &mut self.map_fc1.w,
            &mut self.map_fc1.b,
            &mut self.map_fc2.w,
            &mut self.map_fc2.b,
        ];
        match &mut self.fusion {
            Fusion::Recurrent(lstm) => ps.extend(lstm.params_mut()),
            Fusion::Feedforward(d) => ps.extend([&mut d.w, &mut d.b]),
        }
        ps.extend([&mut self.head.w, &mut self.head.b]);
        ps
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            mats: self
                .params()
                .iter()
                .map(|p| Mat::zeros(p.rows, p.cols))
                .collect(),
        }
    }

    /// Adam state sized for this network.
    pub fn adam(&self, lr: f64) -> Adam {
        let shapes: Vec<usize> = self.params().iter().map(|p| p.len()).collect();
        Adam::new(lr, &shapes)
    }

    /// Copies all parameters from `src` (used for target-network syncs).
    pub fn copy_params_from(&mut self, src: &RecurrentNet) {
        let srcs: Vec<Mat> = src.params().into_iter().cloned().collect();
        for (dst, s) in self.params_mut().into_iter().zip(srcs) {
            assert_eq!(dst.rows, s.rows, "target sync shape mismatch");
            assert_eq!(dst.cols, s.cols, "target sync shape mismatch");
            *dst = s;
        }
    }

    /// Forward pass over a full history window.
    ///
    /// `states` and `maps` must each hold exactly [`HISTORY_LEN`] timesteps
    /// (zero-padded at the start of an episode), oldest first. The
    /// feedforward variant consumes only the final timestep.
    pub fn forward(&self, states: &[Vec<f64>], maps: &[Vec<f64>]) -> Result<(Vec<f64>, NetCache)> {
        assert_eq!(
            states.len(),
            HISTORY_LEN,
            "history must hold {HISTORY_LEN} state vectors"
        );
        assert_eq!(
            maps.len(),
            HISTORY_LEN,
            "history must hold {HISTORY_LEN} map patches"
        );

        let steps: &[usize] = match &self.fusion {
            Fusion::Recurrent(_) => &[0, 1, 2, 3, 4],
            Fusion::Feedforward(_) => &[HISTORY_LEN - 1],
        };

        let mut branch = Vec::with_capacity(steps.len());
        let mut fused = Vec::with_capacity(steps.len());
        for &t in steps {
            let (s1, s1c) = self.state_fc1.forward(&states[t]);
            let (s2, s2c) = self.state_fc2.forward(&s1);
            let (m1, m1c) = self.map_fc1.forward(&maps[t]);
            let (m2, m2c) = self.map_fc2.forward(&m1);
            let mut cat = s2;
            cat.extend_from_slice(&m2);
            fused.push(cat);
            branch.push(BranchCache {
                s1: s1c,
                s2: s2c,
                m1: m1c,
                m2: m2c,
            });
        }

        let (final_features, fusion_cache) = match &self.fusion {
            Fusion::Recurrent(lstm) => {
                let state0 = LstmState::zeros(lstm.hidden_dim());
                let (mut outs, _, caches) = lstm.forward_seq(&fused, &state0)?;
                (
                    outs.pop().expect("non-empty sequence"),
                    FusionCache::Recurrent(caches),
                )
            }
            Fusion::Feedforward(d) => {
                let (y, cache) = d.forward(&fused[0]);
                (y, FusionCache::Feedforward(cache))
            }
        };

        let (out, head_cache) = self.head.forward(&final_features);
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite network output"));
        }
        Ok((
            out,
            NetCache {
                branch,
                fusion: fusion_cache,
                head: head_cache,
            },
        ))
    }

    /// Reverse accumulation from an output gradient. Parameter gradients
    /// accumulate into `grads`, so per-sample calls sum over a batch.
    pub fn backward(&self, cache: &NetCache, d_out: &[f64], grads: &mut NetGrads) {
        let g = &mut grads.mats;
        let head_i = g.len() - 2;

        let d_final = {
            let (hw, hb) = wb_mut(g, head_i);
            self.head.backward(&cache.head, d_out, hw, hb)
        };

        // Gradient on each consumed timestep's fused feature vector.
        let d_fused: Vec<Vec<f64>> = match (&self.fusion, &cache.fusion) {
            (Fusion::Recurrent(lstm), FusionCache::Recurrent(caches)) => {
                let hidden = lstm.hidden_dim();
                let mut d_hs = vec![vec![0.0; hidden]; caches.len()];
                *d_hs.last_mut().expect("non-empty sequence") = d_final;
                lstm.backward_seq(caches, &d_hs, &mut g[8..20])
            }
            (Fusion::Feedforward(d), FusionCache::Feedforward(dc)) => {
                let dx = {
                    let (fw, fb) = wb_mut(g, 8);
                    d.backward(dc, &d_final, fw, fb)
                };
                vec![dx]
            }
            _ => unreachable!("cache kind always matches fusion kind"),
        };

        let s2_dim = self.state_fc2.output_dim();
        for (bc, dcat) in cache.branch.iter().zip(&d_fused) {
            let (d_s2, d_m2) = dcat.split_at(s2_dim);
            let d_s1 = {
                let (w, b) = wb_mut(g, 2);
                self.state_fc2.backward(&bc.s2, d_s2, w, b)
            };
            {
                let (w, b) = wb_mut(g, 0);
                self.state_fc1.backward_params_only(&bc.s1, &d_s1, w, b);
            }
            let d_m1 = {
                let (w, b) = wb_mut(g, 6);
                self.map_fc2.backward(&bc.m2, d_m2, w, b)
            };
            {
                let (w, b) = wb_mut(g, 4);
                self.map_fc1.backward_params_only(&bc.m1, &d_m1, w, b);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dims() -> NetDims {
        NetDims {
            state_dim: 3,
            state_h1: 4,
            state_h2: 2,
            map_dim: 4,
            map_h1: 3,
            map_h2: 3,
            hidden: 5,
            out: 2,
        }
    }

    fn history(net: &RecurrentNet, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = Rng::new(seed);
        let states = (0..HISTORY_LEN)
            .map(|_| (0..net.state_dim()).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let maps = (0..HISTORY_LEN)
            .map(|_| (0..net.map_dim()).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        (states, maps)
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut net = RecurrentNet::new(&tiny_dims(), Activation::Linear, true, &mut Rng::new(1));
        for p in net.params_mut() {
            p.fill(0.0);
        }
        let (states, maps) = history(&net, 2);
        let (out, _) = net.forward(&states, &maps).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = RecurrentNet::new(&tiny_dims(), Activation::Linear, true, &mut Rng::new(3));
        let (states, maps) = history(&net, 4);
        let (a, _) = net.forward(&states, &maps).unwrap();
        let (b, _) = net.forward(&states, &maps).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recurrent_net_sees_oldest_timestep() {
        let net = RecurrentNet::new(&tiny_dims(), Activation::Linear, true, &mut Rng::new(5));
        let (states, maps) = history(&net, 6);
        let (base, _) = net.forward(&states, &maps).unwrap();
        let mut perturbed = states.clone();
        perturbed[0][0] += 0.5;
        let (out, _) = net.forward(&perturbed, &maps).unwrap();
        let delta: f64 = base.iter().zip(&out).map(|(a, b)| (a - b).abs()).sum();
        assert!(delta > 1e-9, "oldest timestep had no effect on the output");
    }

    #[test]
    fn feedforward_variant_ignores_history() {
        let net = RecurrentNet::new(&tiny_dims(), Activation::Linear, false, &mut Rng::new(7));
        let (states, maps) = history(&net, 8);
        let (base, _) = net.forward(&states, &maps).unwrap();
        let mut perturbed_s = states.clone();
        let mut perturbed_m = maps.clone();
        for t in 0..HISTORY_LEN - 1 {
            perturbed_s[t].iter_mut().for_each(|v| *v += 1.0);
            perturbed_m[t].iter_mut().for_each(|v| *v -= 1.0);
        }
        let (out, _) = net.forward(&perturbed_s, &perturbed_m).unwrap();
        assert_eq!(base, out, "memoryless variant must ignore older steps");
    }

    #[test]
    fn softmax_head_outputs_distribution() {
        let dims = NetDims::standard(29, 625, 5);
        let net = RecurrentNet::new(&dims, Activation::Softmax, true, &mut Rng::new(11));
        let (states, maps) = history(&net, 12);
        let (out, _) = net.forward(&states, &maps).unwrap();
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(out.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn standard_nav_dims_match_contract() {
        let dims = NetDims::standard(31, 625, 5);
        let net = RecurrentNet::new(&dims, Activation::Linear, true, &mut Rng::new(13));
        assert_eq!(net.state_dim(), 31);
        assert_eq!(net.map_dim(), 625);
        assert_eq!(net.out_dim(), 5);
        let total: usize = net.params().iter().map(|p| p.len()).sum();
        // (31·64+64) + (64·10+10) + (625·100+100) + (100·100+100)
        //   + 4·(110·110 + 110·110 + 110) + (110·5+5) = 173 193
        assert_eq!(total, 173_193);
    }
}
