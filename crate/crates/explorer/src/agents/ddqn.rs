//! Double-DQN navigator: epsilon schedule, double-Q targets, Huber loss,
//! and the batched update step.

use super::replay::{ReplayBuffer, Transition};
use super::{argmax, TrainConfig};
use crate::env::ACTIONS;
use crate::error::{Error, Result};
use crate::mapping::EGO_AREA;
use crate::neural::{clip_global_norm, Activation, Adam, NetDims, NetGrads, RecurrentNet};
use crate::rng::Rng;

/// Exploration rate at update step `k`: `max(0.95 · 0.99^k, 0.01)`,
/// evaluated in closed form so the sequence is exact for every `k`.
pub fn epsilon_value(k: u32) -> f64 {
    (0.95 * 0.99f64.powi(k as i32)).max(0.01)
}

/// Counts gradient updates and exposes the matching exploration rate.
#[derive(Clone, Copy, Debug, Default)]
pub struct EpsilonSchedule {
    pub k: u32,
}

impl EpsilonSchedule {
    pub fn value(&self) -> f64 {
        epsilon_value(self.k)
    }

    pub fn advance(&mut self) {
        self.k = self.k.saturating_add(1);
    }
}

/// Double-Q target: the online network chooses the successor action, the
/// target network evaluates it. Terminal transitions ignore successors.
pub fn td_target_double(
    reward: f64,
    terminal: bool,
    q_online_next: &[f64],
    q_target_next: &[f64],
    gamma: f64,
) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * q_target_next[argmax(q_online_next)]
    }
}

/// Huber loss (δ = 1): quadratic near zero, linear in the tails.
pub fn huber(e: f64) -> f64 {
    if e.abs() <= 1.0 {
        0.5 * e * e
    } else {
        e.abs() - 0.5
    }
}

/// d huber / d e.
pub fn huber_grad(e: f64) -> f64 {
    e.clamp(-1.0, 1.0)
}

/// The navigator: online and target networks, optimizer, replay buffer,
/// and the epsilon schedule.
pub struct DdqnAgent {
    pub online: RecurrentNet,
    pub target: RecurrentNet,
    pub opt: Adam,
    pub buffer: ReplayBuffer,
    pub eps: EpsilonSchedule,
    pub gamma: f64,
    pub batch_size: usize,
    pub sync_period: usize,
    pub grad_clip: f64,
    pub updates: usize,
}

impl DdqnAgent {
    /// Fresh agent with the standard architecture for `state_dim`-entry
    /// states; the target starts as an exact copy of the online network.
    pub fn new(state_dim: usize, cfg: &TrainConfig, rng: &mut Rng) -> Self {
        let dims = NetDims::standard(state_dim, EGO_AREA, ACTIONS.len());
        let recurrent = cfg.ablation.recurrent();
        let online = RecurrentNet::new(&dims, Activation::Linear, recurrent, rng);
        let mut target = RecurrentNet::new(&dims, Activation::Linear, recurrent, rng);
        target.copy_params_from(&online);
        let opt = online.adam(cfg.ddqn_lr);
        DdqnAgent {
            online,
            target,
            opt,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            eps: EpsilonSchedule::default(),
            gamma: cfg.gamma,
            batch_size: cfg.batch_size,
            sync_period: cfg.sync_period,
            grad_clip: cfg.grad_clip,
            updates: 0,
        }
    }

    /// Q-values of the online network for an input window.
    pub fn q_values(&self, states: &[Vec<f64>], maps: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.online.forward(states, maps)?.0)
    }

    /// ε-greedy action: uniform with probability `epsilon`, otherwise the
    /// greedy action (ties to the lowest index). `epsilon = 0` is fully
    /// deterministic and consumes no randomness.
    pub fn act(
        &self,
        states: &[Vec<f64>],
        maps: &[Vec<f64>],
        epsilon: f64,
        rng: &mut Rng,
    ) -> Result<usize> {
        if epsilon > 0.0 && rng.chance(epsilon) {
            return Ok(rng.index_below(ACTIONS.len()));
        }
        Ok(argmax(&self.q_values(states, maps)?))
    }

    /// Hard-copies the online parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target.copy_params_from(&self.online);
    }

    /// One gradient update on a uniform batch. Returns `None` (and does
    /// nothing) while the buffer holds fewer than `batch_size` items.
    /// A non-finite loss aborts the update with parameters untouched.
    pub fn update(&mut self, rng: &mut Rng) -> Result<Option<f64>> {
        if self.buffer.len() < self.batch_size {
            return Ok(None);
        }
        let indices = self.buffer.sample_indices(rng, self.batch_size);
        let batch: Vec<&Transition> = indices.iter().map(|&i| self.buffer.get(i)).collect();

        let targets = ddqn_targets(&self.online, &self.target, &batch, self.gamma)?;
        let (loss, mut grads) = ddqn_loss_and_grads(&self.online, &batch, &targets)?;
        if !loss.is_finite() {
            return Err(Error::invalid(format!("non-finite navigator loss {loss}")));
        }
        clip_global_norm(&mut grads.mats, self.grad_clip);
        self.opt.step(self.online.params_mut(), &grads.mats)?;
        self.updates += 1;
        self.eps.advance();
        if self.updates % self.sync_period == 0 {
            self.sync_target();
        }
        Ok(Some(loss))
    }
}

/// Double-Q regression targets for a batch (pure; no parameters change).
pub fn ddqn_targets(
    online: &RecurrentNet,
    target: &RecurrentNet,
    batch: &[&Transition],
    gamma: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                Ok(t.reward)
            } else {
                let (qo, _) = online.forward(&t.next_states, &t.next_maps)?;
                let (qt, _) = target.forward(&t.next_states, &t.next_maps)?;
                Ok(td_target_double(t.reward, false, &qo, &qt, gamma))
            }
        })
        .collect()
}

/// Mean Huber loss of `Q(s,a)` against fixed `targets`, and its gradient
/// with respect to the online parameters (semi-gradient: targets are
/// constants). Pure, so finite differences can check it directly.
pub fn ddqn_loss_and_grads(
    online: &RecurrentNet,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(f64, NetGrads)> {
    assert_eq!(batch.len(), targets.len());
    let mut grads = online.zero_grads();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (t, &y) in batch.iter().zip(targets) {
        let (q, cache) = online.forward(&t.states, &t.maps)?;
        let e = q[t.action] - y;
        loss += huber(e) * scale;
        let mut d = vec![0.0; q.len()];
        d[t.action] = huber_grad(e) * scale;
        online.backward(&cache, &d, &mut grads);
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::fdcheck::{randomize_biases, rel_err};
    use crate::neural::HISTORY_LEN;

    #[test]
    fn epsilon_closed_form_and_floor() {
        assert_eq!(epsilon_value(0), 0.95);
        assert!((epsilon_value(1) - 0.9405).abs() < 1e-12);
        assert_eq!(epsilon_value(10_000), 0.01);
        // Nonincreasing and exactly the closed form at every step.
        let mut sched = EpsilonSchedule::default();
        let mut prev = f64::INFINITY;
        for k in 0..1200u32 {
            let v = sched.value();
            assert_eq!(v, (0.95 * 0.99f64.powi(k as i32)).max(0.01));
            assert!(v <= prev);
            prev = v;
            sched.advance();
        }
    }

    #[test]
    fn double_q_target_hand_cases() {
        assert_eq!(td_target_double(2.0, true, &[9.0; 5], &[9.0; 5], 0.95), 2.0);
        let y = td_target_double(
            0.0,
            false,
            &[1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.5, 9.0, 9.0, 9.0, 9.0],
            0.95,
        );
        assert!((y - 0.475).abs() < 1e-15);
        // Uniform online values: argmax tie-breaks to action 0.
        let y = td_target_double(1.0, false, &[0.2; 5], &[3.0, 7.0, 7.0, 7.0, 7.0], 0.5);
        assert!((y - 2.5).abs() < 1e-15);
    }

    #[test]
    fn huber_values_and_slope() {
        assert_eq!(huber(0.0), 0.0);
        assert_eq!(huber(0.5), 0.125);
        assert_eq!(huber(1.0), 0.5);
        assert_eq!(huber(3.0), 2.5);
        assert_eq!(huber(-3.0), 2.5);
        assert_eq!(huber_grad(0.5), 0.5);
        assert_eq!(huber_grad(4.0), 1.0);
        assert_eq!(huber_grad(-4.0), -1.0);
    }

    fn tiny_dims() -> NetDims {
        NetDims {
            state_dim: 3,
            state_h1: 6,
            state_h2: 4,
            map_dim: 4,
            map_h1: 5,
            map_h2: 4,
            hidden: 8,
            out: 5,
        }
    }

    fn tiny_transition(rng: &mut Rng, action: usize, reward: f64, terminal: bool) -> Transition {
        let mk = |rng: &mut Rng, d: usize| -> Vec<Vec<f64>> {
            (0..HISTORY_LEN)
                .map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .collect()
        };
        let states = mk(rng, 3);
        let maps = mk(rng, 4);
        let mut next_states = states.clone();
        next_states.remove(0);
        next_states.push((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let mut next_maps = maps.clone();
        next_maps.remove(0);
        next_maps.push((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect());
        Transition {
            states,
            maps,
            action,
            reward,
            next_states,
            next_maps,
            terminal,
        }
    }

    /// Builds a tiny agent directly (small dims keep the tests fast).
    fn tiny_agent(rng: &mut Rng, lr: f64) -> DdqnAgent {
        let dims = tiny_dims();
        let mut online = RecurrentNet::new(&dims, Activation::Linear, true, rng);
        randomize_biases(&mut online, rng, 0.1);
        let mut target = RecurrentNet::new(&dims, Activation::Linear, true, rng);
        target.copy_params_from(&online);
        let opt = online.adam(lr);
        DdqnAgent {
            online,
            target,
            opt,
            buffer: ReplayBuffer::new(64),
            eps: EpsilonSchedule::default(),
            gamma: 0.95,
            batch_size: 2,
            sync_period: 1000,
            grad_clip: 5.0,
            updates: 0,
        }
    }

    #[test]
    fn perfect_predictions_leave_parameters_unchanged() {
        let mut rng = Rng::new(5);
        let mut agent = tiny_agent(&mut rng, 1e-3);
        // Terminal transitions whose reward equals the current prediction:
        // zero error, zero loss, and Adam moves nothing on zero gradients.
        for i in 0..4 {
            let mut t = tiny_transition(&mut rng, i % 5, 0.0, true);
            let q = agent.q_values(&t.states, &t.maps).unwrap();
            t.reward = q[t.action];
            agent.buffer.push(t);
        }
        let before: Vec<Vec<f64>> = agent.online.params().iter().map(|m| m.data.clone()).collect();
        let loss = agent.update(&mut rng).unwrap().unwrap();
        assert_eq!(loss, 0.0);
        let after: Vec<Vec<f64>> = agent.online.params().iter().map(|m| m.data.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn batch_gradient_matches_finite_difference() {
        let mut rng = Rng::new(11);
        let agent = tiny_agent(&mut rng, 1e-3);
        let t1 = tiny_transition(&mut rng, 2, 1.0, false);
        let t2 = tiny_transition(&mut rng, 4, -0.5, true);
        let batch = vec![&t1, &t2];
        let targets = ddqn_targets(&agent.online, &agent.target, &batch, 0.95).unwrap();
        let (_, grads) = ddqn_loss_and_grads(&agent.online, &batch, &targets).unwrap();

        let mut online = agent.online;
        let names = online.param_names();
        let mut worst = 0.0f64;
        for block in 0..grads.mats.len() {
            let len = grads.mats[block].len();
            // A handful of spread-out entries per parameter block.
            for j in 0..len.min(4) {
                let idx = j * len / len.min(4);
                let analytic = grads.mats[block].data[idx];
                let orig = online.params()[block].data[idx];
                let h = 1e-5;
                online.params_mut()[block].data[idx] = orig + h;
                let t1b = vec![&t1, &t2];
                let (lp, _) = ddqn_loss_and_grads(&online, &t1b, &targets).unwrap();
                online.params_mut()[block].data[idx] = orig - h;
                let (lm, _) = ddqn_loss_and_grads(&online, &t1b, &targets).unwrap();
                online.params_mut()[block].data[idx] = orig;
                let numeric = (lp - lm) / (2.0 * h);
                let e = rel_err(analytic, numeric);
                assert!(
                    e < 1e-4,
                    "block {} ({}) idx {}: analytic {} vs numeric {} (rel {})",
                    block,
                    names[block],
                    idx,
                    analytic,
                    numeric,
                    e
                );
                worst = worst.max(e);
            }
        }
        assert!(worst < 1e-4);
    }

    #[test]
    fn repeated_updates_converge_to_fixed_target() {
        let mut rng = Rng::new(21);
        let mut agent = tiny_agent(&mut rng, 1e-3);
        agent.batch_size = 1;
        let t = tiny_transition(&mut rng, 3, 2.0, true);
        agent.buffer.push(t.clone());
        for _ in 0..4000 {
            agent.update(&mut rng).unwrap();
        }
        let q = agent.q_values(&t.states, &t.maps).unwrap();
        assert!(
            (q[3] - 2.0).abs() < 1e-3,
            "Q did not converge to the target: {}",
            q[3]
        );
    }

    #[test]
    fn target_sync_copies_online_exactly() {
        let mut rng = Rng::new(31);
        let mut agent = tiny_agent(&mut rng, 1e-3);
        agent.sync_period = 3;
        for i in 0..8 {
            agent.buffer.push(tiny_transition(&mut rng, i % 5, 0.3, i % 2 == 0));
        }
        for _ in 0..3 {
            agent.update(&mut rng).unwrap();
        }
        assert_eq!(agent.updates, 3);
        let on: Vec<Vec<f64>> = agent.online.params().iter().map(|m| m.data.clone()).collect();
        let tg: Vec<Vec<f64>> = agent.target.params().iter().map(|m| m.data.clone()).collect();
        assert_eq!(on, tg, "target must equal online right after a sync");
        // One more update: they drift apart again.
        agent.update(&mut rng).unwrap();
        let on: Vec<Vec<f64>> = agent.online.params().iter().map(|m| m.data.clone()).collect();
        let tg: Vec<Vec<f64>> = agent.target.params().iter().map(|m| m.data.clone()).collect();
        assert_ne!(on, tg);
    }

    #[test]
    fn update_waits_for_a_full_batch() {
        let mut rng = Rng::new(41);
        let mut agent = tiny_agent(&mut rng, 1e-3);
        assert!(agent.update(&mut rng).unwrap().is_none());
        agent.buffer.push(tiny_transition(&mut rng, 0, 1.0, true));
        assert!(agent.update(&mut rng).unwrap().is_none());
        agent.buffer.push(tiny_transition(&mut rng, 1, 1.0, true));
        assert!(agent.update(&mut rng).unwrap().is_some());
    }
}
