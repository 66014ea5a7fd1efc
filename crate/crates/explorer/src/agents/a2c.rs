//! Actor-critic explorer: n-step returns, advantage-weighted policy
//! gradient with an entropy bonus, and a squared-error critic.

use super::{argmax, TrainConfig};
use crate::env::ACTIONS;
use crate::error::{Error, Result};
use crate::mapping::EGO_AREA;
use crate::neural::{clip_global_norm, Activation, Adam, NetDims, NetGrads, RecurrentNet};
use crate::rng::Rng;

/// Probability floor inside logarithms, so a collapsed action never
/// produces an infinite loss or gradient.
pub const LOG_PROB_FLOOR: f64 = 1e-12;

/// One decision point of a rollout: the input windows, the action taken,
/// and the reward received.
#[derive(Clone, Debug)]
pub struct RolloutStep {
    pub states: Vec<Vec<f64>>,
    pub maps: Vec<Vec<f64>>,
    pub action: usize,
    pub reward: f64,
}

/// A short on-policy segment plus the bootstrap value of the state after
/// its last step (0 for a true terminal cut).
#[derive(Clone, Debug, Default)]
pub struct Rollout {
    pub steps: Vec<RolloutStep>,
    pub bootstrap: f64,
}

/// The explorer: a softmax actor and a scalar critic with the same
/// recurrent backbone shape, trained by separate optimizers.
pub struct A2cAgent {
    pub actor: RecurrentNet,
    pub critic: RecurrentNet,
    pub opt_actor: Adam,
    pub opt_critic: Adam,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub grad_clip: f64,
    pub updates: usize,
}

impl A2cAgent {
    pub fn new(state_dim: usize, cfg: &TrainConfig, rng: &mut Rng) -> Self {
        let dims = NetDims::standard(state_dim, EGO_AREA, ACTIONS.len());
        let critic_dims = NetDims::standard(state_dim, EGO_AREA, 1);
        let recurrent = cfg.ablation.recurrent();
        let actor = RecurrentNet::new(&dims, Activation::Softmax, recurrent, rng);
        let critic = RecurrentNet::new(&critic_dims, Activation::Linear, recurrent, rng);
        let opt_actor = actor.adam(cfg.a2c_lr);
        let opt_critic = critic.adam(cfg.a2c_lr);
        A2cAgent {
            actor,
            critic,
            opt_actor,
            opt_critic,
            gamma: cfg.gamma,
            entropy_coef: cfg.entropy_coef,
            grad_clip: cfg.grad_clip,
            updates: 0,
        }
    }

    /// Action distribution at an input window.
    pub fn probs(&self, states: &[Vec<f64>], maps: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.actor.forward(states, maps)?.0)
    }

    /// State value estimate.
    pub fn value(&self, states: &[Vec<f64>], maps: &[Vec<f64>]) -> Result<f64> {
        Ok(self.critic.forward(states, maps)?.0[0])
    }

    /// Samples from the policy when exploring, otherwise the most likely
    /// action (ties to the lowest index; consumes no randomness).
    pub fn act(
        &self,
        states: &[Vec<f64>],
        maps: &[Vec<f64>],
        explore: bool,
        rng: &mut Rng,
    ) -> Result<usize> {
        let p = self.probs(states, maps)?;
        if !explore {
            return Ok(argmax(&p));
        }
        let u = rng.next_f64();
        let mut cum = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            cum += pi;
            if u < cum {
                return Ok(i);
            }
        }
        Ok(p.len() - 1)
    }

    /// One update on a rollout (the batch is the rollout itself). Returns
    /// the summed policy and value losses. Parameters stay untouched if
    /// either loss comes out non-finite.
    pub fn update(&mut self, rollout: &Rollout) -> Result<(f64, f64)> {
        if rollout.steps.is_empty() {
            return Err(Error::invalid("empty rollout"));
        }
        let returns = n_step_returns(rollout, self.gamma);
        let advantages: Vec<f64> = rollout
            .steps
            .iter()
            .zip(&returns)
            .map(|(s, &r)| Ok(r - self.value(&s.states, &s.maps)?))
            .collect::<Result<_>>()?;

        let (policy_loss, mut actor_grads) =
            actor_loss_and_grads(&self.actor, rollout, &advantages, self.entropy_coef)?;
        let (value_loss, mut critic_grads) = critic_loss_and_grads(&self.critic, rollout, &returns)?;
        if !policy_loss.is_finite() || !value_loss.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite explorer losses ({policy_loss}, {value_loss})"
            )));
        }
        clip_global_norm(&mut actor_grads.mats, self.grad_clip);
        clip_global_norm(&mut critic_grads.mats, self.grad_clip);
        self.opt_actor.step(self.actor.params_mut(), &actor_grads.mats)?;
        self.opt_critic.step(self.critic.params_mut(), &critic_grads.mats)?;
        self.updates += 1;
        Ok((policy_loss, value_loss))
    }
}

/// Discounted n-step returns, bootstrapped with `rollout.bootstrap`.
pub fn n_step_returns(rollout: &Rollout, gamma: f64) -> Vec<f64> {
    let mut returns = vec![0.0; rollout.steps.len()];
    let mut r = rollout.bootstrap;
    for (i, step) in rollout.steps.iter().enumerate().rev() {
        r = step.reward + gamma * r;
        returns[i] = r;
    }
    returns
}

/// Entropy of a distribution, with the probability floor inside the log.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&pi| pi * pi.max(LOG_PROB_FLOOR).ln()).sum::<f64>()
}

/// Summed actor loss `Σ_t [−log π(a_t|s_t)·A_t − c_H·H(π_t)]` over the
/// rollout, with advantages treated as constants, and its parameter
/// gradient. Pure, so finite differences can check it.
pub fn actor_loss_and_grads(
    actor: &RecurrentNet,
    rollout: &Rollout,
    advantages: &[f64],
    entropy_coef: f64,
) -> Result<(f64, NetGrads)> {
    let mut grads = actor.zero_grads();
    let mut loss = 0.0;
    for (step, &adv) in rollout.steps.iter().zip(advantages) {
        let (p, cache) = actor.forward(&step.states, &step.maps)?;
        let pa = p[step.action].max(LOG_PROB_FLOOR);
        loss += -pa.ln() * adv - entropy_coef * entropy(&p);
        // d/dp_a of −A·log p_a, plus d/dp_j of +c_H·Σ p log p. The softmax
        // backward projects out the constant offset in the entropy term.
        let mut d: Vec<f64> = p
            .iter()
            .map(|&pj| entropy_coef * (pj.max(LOG_PROB_FLOOR).ln() + 1.0))
            .collect();
        d[step.action] += -adv / pa;
        actor.backward(&cache, &d, &mut grads);
    }
    Ok((loss, grads))
}

/// Summed critic loss `Σ_t (R_t − V(s_t))²` and its parameter gradient.
pub fn critic_loss_and_grads(
    critic: &RecurrentNet,
    rollout: &Rollout,
    returns: &[f64],
) -> Result<(f64, NetGrads)> {
    let mut grads = critic.zero_grads();
    let mut loss = 0.0;
    for (step, &ret) in rollout.steps.iter().zip(returns) {
        let (v, cache) = critic.forward(&step.states, &step.maps)?;
        let e = v[0] - ret;
        loss += e * e;
        critic.backward(&cache, &[2.0 * e], &mut grads);
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::fdcheck::{randomize_biases, rel_err};
    use crate::neural::HISTORY_LEN;

    fn tiny_dims(out: usize) -> NetDims {
        NetDims {
            state_dim: 3,
            state_h1: 6,
            state_h2: 4,
            map_dim: 4,
            map_h1: 5,
            map_h2: 4,
            hidden: 8,
            out,
        }
    }

    fn tiny_agent(rng: &mut Rng) -> A2cAgent {
        let mut actor = RecurrentNet::new(&tiny_dims(5), Activation::Softmax, true, rng);
        let mut critic = RecurrentNet::new(&tiny_dims(1), Activation::Linear, true, rng);
        randomize_biases(&mut actor, rng, 0.1);
        randomize_biases(&mut critic, rng, 0.1);
        let opt_actor = actor.adam(1e-3);
        let opt_critic = critic.adam(1e-3);
        A2cAgent {
            actor,
            critic,
            opt_actor,
            opt_critic,
            gamma: 0.95,
            entropy_coef: 0.01,
            grad_clip: 5.0,
            updates: 0,
        }
    }

    fn tiny_rollout(rng: &mut Rng, n: usize, bootstrap: f64) -> Rollout {
        let mk = |rng: &mut Rng, d: usize| -> Vec<Vec<f64>> {
            (0..HISTORY_LEN)
                .map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .collect()
        };
        Rollout {
            steps: (0..n)
                .map(|i| RolloutStep {
                    states: mk(rng, 3),
                    maps: mk(rng, 4),
                    action: i % 5,
                    reward: rng.uniform(-1.0, 1.0),
                })
                .collect(),
            bootstrap,
        }
    }

    #[test]
    fn n_step_returns_hand_case() {
        let mut rng = Rng::new(1);
        let mut rollout = tiny_rollout(&mut rng, 3, 10.0);
        rollout.steps[0].reward = 1.0;
        rollout.steps[1].reward = 2.0;
        rollout.steps[2].reward = 3.0;
        let r = n_step_returns(&rollout, 0.5);
        // r2 = 3 + 0.5·10 = 8; r1 = 2 + 0.5·8 = 6; r0 = 1 + 0.5·6 = 4.
        assert_eq!(r, vec![4.0, 6.0, 8.0]);
    }

    #[test]
    fn zero_advantage_gives_zero_policy_gradient() {
        let mut rng = Rng::new(2);
        let agent = tiny_agent(&mut rng);
        let rollout = tiny_rollout(&mut rng, 2, 0.0);
        let advantages = vec![0.0; 2];
        // Entropy switched off: the gradient must vanish identically.
        let (_, grads) = actor_loss_and_grads(&agent.actor, &rollout, &advantages, 0.0).unwrap();
        for m in &grads.mats {
            assert!(m.data.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn single_terminal_step_advantage_and_critic_loss() {
        let mut rng = Rng::new(3);
        let mut agent = tiny_agent(&mut rng);
        // Zero input windows: a freshly built critic outputs exactly 0.
        agent.critic = RecurrentNet::new(&tiny_dims(1), Activation::Linear, true, &mut rng);
        let rollout = Rollout {
            steps: vec![RolloutStep {
                states: vec![vec![0.0; 3]; 5],
                maps: vec![vec![0.0; 4]; 5],
                action: 0,
                reward: 1.0,
            }],
            bootstrap: 0.0,
        };
        let returns = n_step_returns(&rollout, 0.95);
        assert_eq!(returns, vec![1.0]);
        let v = agent.value(&rollout.steps[0].states, &rollout.steps[0].maps).unwrap();
        assert_eq!(v, 0.0);
        let (value_loss, _) = critic_loss_and_grads(&agent.critic, &rollout, &returns).unwrap();
        assert_eq!(value_loss, 1.0);
    }

    #[test]
    fn actor_gradient_matches_finite_difference() {
        let mut rng = Rng::new(4);
        let agent = tiny_agent(&mut rng);
        let rollout = tiny_rollout(&mut rng, 3, 0.4);
        let advantages = vec![0.7, -1.2, 0.3];
        let (_, grads) = actor_loss_and_grads(&agent.actor, &rollout, &advantages, 0.01).unwrap();
        let mut actor = agent.actor;
        check_against_fd(
            &mut actor,
            &grads,
            |net| actor_loss_and_grads(net, &rollout, &advantages, 0.01).unwrap().0,
        );
    }

    #[test]
    fn critic_gradient_matches_finite_difference() {
        let mut rng = Rng::new(5);
        let agent = tiny_agent(&mut rng);
        let rollout = tiny_rollout(&mut rng, 3, 0.4);
        let returns = n_step_returns(&rollout, 0.95);
        let (_, grads) = critic_loss_and_grads(&agent.critic, &rollout, &returns).unwrap();
        let mut critic = agent.critic;
        check_against_fd(
            &mut critic,
            &grads,
            |net| critic_loss_and_grads(net, &rollout, &returns).unwrap().0,
        );
    }

    fn check_against_fd(
        net: &mut RecurrentNet,
        grads: &NetGrads,
        mut loss: impl FnMut(&RecurrentNet) -> f64,
    ) {
        let names = net.param_names();
        for block in 0..grads.mats.len() {
            let len = grads.mats[block].len();
            let probes = len.min(4);
            for j in 0..probes {
                let idx = j * len / probes;
                let analytic = grads.mats[block].data[idx];
                let orig = net.params()[block].data[idx];
                let h = 1e-5;
                net.params_mut()[block].data[idx] = orig + h;
                let lp = loss(net);
                net.params_mut()[block].data[idx] = orig - h;
                let lm = loss(net);
                net.params_mut()[block].data[idx] = orig;
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
            }
        }
    }

    #[test]
    fn update_moves_parameters_and_counts() {
        let mut rng = Rng::new(6);
        let mut agent = tiny_agent(&mut rng);
        let rollout = tiny_rollout(&mut rng, 5, 0.0);
        let before: Vec<Vec<f64>> = agent.actor.params().iter().map(|m| m.data.clone()).collect();
        let (pl, vl) = agent.update(&rollout).unwrap();
        assert!(pl.is_finite() && vl.is_finite() && vl >= 0.0);
        let after: Vec<Vec<f64>> = agent.actor.params().iter().map(|m| m.data.clone()).collect();
        assert_ne!(before, after);
        assert_eq!(agent.updates, 1);
        assert!(agent.update(&Rollout::default()).is_err(), "empty rollout rejected");
    }

    #[test]
    fn sampling_follows_the_policy_distribution() {
        let mut rng = Rng::new(7);
        let agent = tiny_agent(&mut rng);
        let states = vec![vec![0.3; 3]; 5];
        let maps = vec![vec![0.1; 4]; 5];
        let p = agent.probs(&states, &maps).unwrap();
        let mut counts = [0usize; 5];
        let n = 20_000;
        for _ in 0..n {
            counts[agent.act(&states, &maps, true, &mut rng).unwrap()] += 1;
        }
        for i in 0..5 {
            let freq = counts[i] as f64 / n as f64;
            assert!(
                (freq - p[i]).abs() < 0.02,
                "action {i}: frequency {freq} vs probability {}",
                p[i]
            );
        }
        // Greedy mode always takes the argmax.
        let greedy = agent.act(&states, &maps, false, &mut rng).unwrap();
        assert_eq!(greedy, argmax(&p));
    }
}
