//! DDPG actor-critic with replay, target networks and soft updates,
//! extended with an optimization-driven target merge: alongside the usual
//! bootstrapped critic target y, each stored transition carries the
//! model-based lower-bound value y' from the robust SDP pipeline, and
//! training targets take the larger of the two. At execution time the same
//! comparison decides whether the actor's beamformer or the optimizer's is
//! transmitted.

use crate::env::{encode_state, Environment};
use crate::error::{Error, Result};
use crate::linalg::{C64, CVec};
use crate::model::BeamformingAction;
use crate::nn::Mlp;
use crate::optimizer::{robust_beamforming, RobustStatus};
use crate::sdp::ConicBackend;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// One replay sample. `y_prime` is the (reward-scaled) model-based target
/// recorded when the transition was stored; 0 when the optimizer was
/// skipped or infeasible.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: DVector<f64>,
    /// Squashed action representation (see [`Agent::squash`]).
    pub action: DVector<f64>,
    pub reward: f64,
    pub next_state: DVector<f64>,
    pub y_prime: f64,
}

/// Bounded FIFO of transitions with uniform without-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    pub capacity: usize,
    storage: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer { capacity, storage: VecDeque::with_capacity(capacity) }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    /// Uniform sample of `k` distinct transitions.
    pub fn sample<'a>(&'a self, k: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Transition> {
        assert!(k <= self.storage.len());
        rand::seq::index::sample(rng, self.storage.len(), k)
            .iter()
            .map(|i| &self.storage[i])
            .collect()
    }
}

/// Network architecture: hidden widths shared by actor and critic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximatorSpec {
    pub hidden: Vec<usize>,
}

impl Default for ApproximatorSpec {
    fn default() -> Self {
        ApproximatorSpec { hidden: vec![128, 128] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Soft-update coefficient for target networks.
    pub tau_soft: f64,
    /// Actor learning rate.
    pub alpha_v: f64,
    /// Critic learning rate.
    pub alpha_omega: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gaussian std added to raw actor encodings during exploration.
    pub noise_scale: f64,
    /// Multiplicative decay applied to the noise scale each step.
    pub noise_decay: f64,
    /// Multiplicative decay applied per step to both learning rates. The
    /// efficiency reward is scale-invariant in transmit power, so with a
    /// constant step size the actor's output norm random-walks once
    /// exploration noise has annealed; decaying the step size freezes the
    /// policy near its learned optimum instead.
    pub lr_decay: f64,
    /// Transmit-power cap (watts) enforced by the action squashing.
    pub p_max: f64,
    /// Rewards and model-based targets are multiplied by this before
    /// storage so critic targets are O(1).
    pub reward_scale: f64,
    /// In optimization-driven mode, call the SDP pipeline every k-th step.
    pub optimizer_every: usize,
    /// Optional cadence change: from `optimizer_switch_step` onward the
    /// pipeline is called every `optimizer_every_late`-th step instead.
    /// Lets a run ration the solver budget across training phases.
    pub optimizer_every_late: Option<usize>,
    /// Step index at which `optimizer_every_late` takes over (if set).
    pub optimizer_switch_step: usize,
    /// When set, y' competes as y' + gamma * Q_target instead of bare y'
    /// (ablation knob; the default compares the bare bound).
    pub y_prime_bootstrap: bool,
    pub approximator: ApproximatorSpec,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.3,
            tau_soft: 0.01,
            alpha_v: 1e-3,
            alpha_omega: 1e-3,
            batch_size: 32,
            buffer_capacity: 10_000,
            noise_scale: 0.3,
            noise_decay: 0.9998,
            lr_decay: 1.0,
            p_max: 4000.0,
            reward_scale: 500.0,
            optimizer_every: 1,
            optimizer_every_late: None,
            optimizer_switch_step: 0,
            y_prime_bootstrap: false,
            approximator: ApproximatorSpec::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!("gamma = {} outside [0,1]", self.gamma)));
        }
        if !(self.tau_soft > 0.0 && self.tau_soft <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_soft = {} outside (0,1]",
                self.tau_soft
            )));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::InvalidArgument("batch_size/buffer_capacity invalid".into()));
        }
        if self.p_max <= 0.0 {
            return Err(Error::InvalidArgument("p_max must be positive".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lr_decay = {} outside (0,1]",
                self.lr_decay
            )));
        }
        if self.optimizer_every == 0 {
            return Err(Error::InvalidArgument("optimizer_every must be >= 1".into()));
        }
        if self.optimizer_every_late == Some(0) {
            return Err(Error::InvalidArgument("optimizer_every_late must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    ModelFree,
    OptimizationDriven,
}

/// Diagnostics from one training step.
#[derive(Debug, Clone, Copy)]
pub struct StepMetrics {
    pub reward: f64,
    pub transmit_power: f64,
    pub rho: f64,
    pub outage: bool,
    /// Unscaled model-based target value (0 when unavailable).
    pub y_model: f64,
    /// Critic's value of the actor action at the pre-step state (unscaled).
    pub y_critic: f64,
    /// Whether the optimizer action won the execution merge.
    pub merge_win: bool,
    pub critic_loss: f64,
    pub actor_objective: f64,
}

pub struct Agent {
    pub config: AgentConfig,
    pub m: usize,
    pub n: usize,
    pub state_dim: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub noise: f64,
    pub step_count: usize,
    pub rng: ChaCha8Rng,
    seed: u64,
}

impl Agent {
    /// Action dimension: 2M reals for w, N phases, one rho.
    pub fn action_dim(m: usize, n: usize) -> usize {
        2 * m + n + 1
    }

    pub fn new(m: usize, n: usize, state_dim: usize, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let adim = Self::action_dim(m, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor_dims = vec![state_dim];
        actor_dims.extend(&config.approximator.hidden);
        actor_dims.push(adim);
        let mut critic_dims = vec![state_dim + adim];
        critic_dims.extend(&config.approximator.hidden);
        critic_dims.push(1);
        let actor = Mlp::new(&actor_dims, &mut rng);
        let critic = Mlp::new(&critic_dims, &mut rng);
        Ok(Agent {
            noise: config.noise_scale,
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            config,
            m,
            n,
            state_dim,
            step_count: 0,
            rng,
            seed,
        })
    }

    // -- action representation -------------------------------------------

    /// Maps a raw actor output to the bounded representation fed to the
    /// critic: first 2M entries are the beamformer reals scaled by
    /// 1/sqrt(2M) and projected onto the power cap (in units of
    /// sqrt(P_max)), then N sigmoids for phases in (0,1) (fraction of a
    /// turn), then one sigmoid for rho.
    pub fn squash(&self, raw: &DVector<f64>) -> DVector<f64> {
        let (m, n) = (self.m, self.n);
        let c = 1.0 / ((2 * m) as f64).sqrt();
        let mut out = DVector::zeros(raw.len());
        let mut norm_sq = 0.0;
        for i in 0..2 * m {
            let v = c * raw[i];
            out[i] = v;
            norm_sq += v * v;
        }
        if norm_sq > 1.0 {
            let s = 1.0 / norm_sq.sqrt();
            for i in 0..2 * m {
                out[i] *= s;
            }
        }
        for i in 2 * m..2 * m + n + 1 {
            out[i] = sigmoid(raw[i]);
        }
        out
    }

    /// Jacobian of [`Agent::squash`] (square, action_dim x action_dim).
    pub fn squash_jacobian(&self, raw: &DVector<f64>) -> DMatrix<f64> {
        let (m, n) = (self.m, self.n);
        let d = raw.len();
        let c = 1.0 / ((2 * m) as f64).sqrt();
        let mut jac = DMatrix::zeros(d, d);
        let v = DVector::from_fn(2 * m, |i, _| c * raw[i]);
        let norm = v.norm();
        if norm <= 1.0 {
            for i in 0..2 * m {
                jac[(i, i)] = c;
            }
        } else {
            // d/du [ v/||v|| ] = (I - vhat vhat^T)/||v|| * c
            let vhat = v.scale(1.0 / norm);
            for i in 0..2 * m {
                for j in 0..2 * m {
                    let eye = if i == j { 1.0 } else { 0.0 };
                    jac[(i, j)] = c * (eye - vhat[i] * vhat[j]) / norm;
                }
            }
        }
        for i in 2 * m..2 * m + n + 1 {
            let s = sigmoid(raw[i]);
            jac[(i, i)] = s * (1.0 - s);
        }
        jac
    }

    /// Decodes the squashed representation into a physical action.
    pub fn decode(&self, rep: &DVector<f64>) -> BeamformingAction {
        let (m, n) = (self.m, self.n);
        let sqrt_p = self.config.p_max.sqrt();
        let w = CVec::from_fn(m, |i, _| {
            C64::new(rep[2 * i] * sqrt_p, rep[2 * i + 1] * sqrt_p)
        });
        let theta = CVec::from_fn(n, |i, _| {
            let ang = rep[2 * m + i] * std::f64::consts::TAU;
            C64::new(ang.cos(), ang.sin())
        });
        let rho = rep[2 * m + n].clamp(1e-6, 1.0 - 1e-6);
        BeamformingAction { w, theta, rho }
    }

    /// Inverse of [`Agent::decode`] for storing externally produced actions
    /// (e.g. the optimizer's) in the replay representation.
    pub fn encode_action(&self, action: &BeamformingAction) -> DVector<f64> {
        let (m, n) = (self.m, self.n);
        let sqrt_p = self.config.p_max.sqrt();
        let mut rep = DVector::zeros(Self::action_dim(m, n));
        let mut w = action.w.clone();
        let p = w.norm_squared();
        if p > self.config.p_max {
            w = w.scale((self.config.p_max / p).sqrt());
        }
        for i in 0..m {
            rep[2 * i] = w[i].re / sqrt_p;
            rep[2 * i + 1] = w[i].im / sqrt_p;
        }
        for i in 0..n {
            let mut ang = action.theta[i].arg();
            if ang < 0.0 {
                ang += std::f64::consts::TAU;
            }
            rep[2 * m + i] = ang / std::f64::consts::TAU;
        }
        rep[2 * m + n] = action.rho;
        rep
    }

    // -- policy and targets ----------------------------------------------

    /// Runs the actor. With `explore`, Gaussian noise of the current scale
    /// is added to the raw encoding before squashing. Returns the decoded
    /// action together with the squashed representation.
    pub fn act(
        &self,
        state: &DVector<f64>,
        explore: bool,
        rng: &mut ChaCha8Rng,
    ) -> (BeamformingAction, DVector<f64>) {
        let mut raw = self.actor.forward(state);
        if explore {
            for v in raw.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v += self.noise * z;
            }
        }
        let rep = self.squash(&raw);
        (self.decode(&rep), rep)
    }

    fn q_value(net: &Mlp, state: &DVector<f64>, action_rep: &DVector<f64>) -> f64 {
        let mut input = DVector::zeros(state.len() + action_rep.len());
        input.rows_mut(0, state.len()).copy_from(state);
        input.rows_mut(state.len(), action_rep.len()).copy_from(action_rep);
        net.forward(&input)[0]
    }

    /// Bootstrapped targets y_i = r_i + gamma * Q'(s_{i+1}, pi'(s_{i+1}))
    /// using target networks only.
    pub fn critic_target(&self, batch: &[&Transition]) -> Vec<f64> {
        batch
            .iter()
            .map(|t| {
                let raw = self.target_actor.forward(&t.next_state);
                let rep = self.squash(&raw);
                t.reward + self.config.gamma * Self::q_value(&self.target_critic, &t.next_state, &rep)
            })
            .collect()
    }

    /// The optimization-driven max rule: the larger target wins; on a win
    /// the optimizer's beamformer and phases replace the actor's (rho is
    /// kept); ties keep the actor's action.
    pub fn merge_targets(
        y: f64,
        y_prime: f64,
        actor_action: &BeamformingAction,
        optimized_action: &BeamformingAction,
    ) -> (f64, BeamformingAction) {
        if y_prime > y {
            (
                y_prime,
                BeamformingAction {
                    w: optimized_action.w.clone(),
                    theta: optimized_action.theta.clone(),
                    rho: actor_action.rho,
                },
            )
        } else {
            (y, actor_action.clone())
        }
    }

    // -- updates ---------------------------------------------------------

    /// Current learning-rate multiplier under the decay schedule.
    fn lr_scale(&self) -> f64 {
        self.config.lr_decay.powi(self.step_count as i32)
    }

    /// One gradient-descent step on the mean squared TD error; returns the
    /// pre-step loss.
    pub fn update_critic(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        assert_eq!(batch.len(), targets.len());
        assert!(!batch.is_empty());
        let b = batch.len() as f64;
        let mut grads = self.critic.zero_grads();
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            let mut input = DVector::zeros(t.state.len() + t.action.len());
            input.rows_mut(0, t.state.len()).copy_from(&t.state);
            input.rows_mut(t.state.len(), t.action.len()).copy_from(&t.action);
            let cache = self.critic.forward_cache(&input);
            let q = cache.outputs.last().unwrap()[0];
            loss += (y - q) * (y - q) / b;
            // d/dq of (y-q)^2 / b
            let grad_out = DVector::from_element(1, -2.0 * (y - q) / b);
            self.critic.backward(&cache, &grad_out, &mut grads);
        }
        if !loss.is_finite() {
            return Err(Error::NumericalFailure(format!("critic loss = {loss}")));
        }
        self.critic.apply_grads(&grads, -self.config.alpha_omega * self.lr_scale());
        Ok(loss)
    }

    /// One ascent step on mean Q(s, pi(s)); returns the pre-step mean Q.
    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64> {
        assert!(!batch.is_empty());
        let b = batch.len() as f64;
        let mut grads = self.actor.zero_grads();
        let mut mean_q = 0.0;
        for t in batch {
            let actor_cache = self.actor.forward_cache(&t.state);
            let raw = actor_cache.outputs.last().unwrap().clone();
            let rep = self.squash(&raw);
            let mut input = DVector::zeros(t.state.len() + rep.len());
            input.rows_mut(0, t.state.len()).copy_from(&t.state);
            input.rows_mut(t.state.len(), rep.len()).copy_from(&rep);
            let critic_cache = self.critic.forward_cache(&input);
            mean_q += critic_cache.outputs.last().unwrap()[0] / b;
            // dQ/d input, then restrict to the action slice
            let mut scratch = self.critic.zero_grads();
            let grad_input = self.critic.backward(
                &critic_cache,
                &DVector::from_element(1, 1.0 / b),
                &mut scratch,
            );
            let grad_rep = grad_input.rows(t.state.len(), rep.len()).into_owned();
            let grad_raw = self.squash_jacobian(&raw).transpose() * grad_rep;
            self.actor.backward(&actor_cache, &grad_raw, &mut grads);
        }
        if !mean_q.is_finite() {
            return Err(Error::NumericalFailure(format!("actor objective = {mean_q}")));
        }
        self.actor.apply_grads(&grads, self.config.alpha_v * self.lr_scale());
        Ok(mean_q)
    }

    pub fn soft_update(&mut self) -> Result<()> {
        self.target_actor.soft_update_from(&self.actor, self.config.tau_soft)?;
        self.target_critic.soft_update_from(&self.critic, self.config.tau_soft)
    }

    // -- full step --------------------------------------------------------

    /// Runs one interaction + learning step against the environment.
    pub fn train_step(
        &mut self,
        env: &mut Environment,
        buffer: &mut ReplayBuffer,
        mode: TrainMode,
        backend: &dyn ConicBackend,
    ) -> Result<StepMetrics> {
        let state = DVector::from_vec(encode_state(&env.state, &env.geo));
        let mut rng = self.rng.clone();
        let (actor_action, _) = self.act(&state, true, &mut rng);
        self.rng = rng;

        // model-based branch
        let mut y_model = 0.0;
        let mut y_prime_scaled = 0.0;
        let mut optimized: Option<BeamformingAction> = None;
        let cadence = if self.step_count >= self.config.optimizer_switch_step {
            self.config.optimizer_every_late.unwrap_or(self.config.optimizer_every)
        } else {
            self.config.optimizer_every
        };
        if mode == TrainMode::OptimizationDriven && self.step_count % cadence == 0 {
            // mean direct channel over the window pairs with the window's
            // uncertainty model
            let mut g_mean = CVec::zeros(self.m);
            for ch in &env.state.window {
                g_mean += &ch.g;
            }
            g_mean /= C64::new(env.state.window.len() as f64, 0.0);
            let mut rng = self.rng.clone();
            let result = robust_beamforming(
                actor_action.rho,
                &env.state.uncertainty,
                &g_mean,
                &env.geo,
                backend,
                &mut rng,
            )?;
            self.rng = rng;
            if result.status == RobustStatus::Optimal {
                y_model = result.y_prime;
                y_prime_scaled = result.y_prime * self.config.reward_scale;
                optimized = Some(BeamformingAction {
                    w: result.w,
                    theta: result.theta,
                    rho: actor_action.rho,
                });
            }
        }

        // execution merge: compare against the target critic's estimate of
        // the actor's action
        let actor_rep = self.encode_action(&actor_action);
        let y_critic_scaled = Self::q_value(&self.target_critic, &state, &actor_rep);
        let mut y_prime_exec = y_prime_scaled;
        if self.config.y_prime_bootstrap && optimized.is_some() {
            y_prime_exec += self.config.gamma * y_critic_scaled;
        }
        let (executed, merge_win) = match &optimized {
            Some(opt) if y_prime_exec > y_critic_scaled => {
                let (_, act) = Self::merge_targets(y_critic_scaled, y_prime_exec, &actor_action, opt);
                (act, true)
            }
            _ => (actor_action.clone(), false),
        };

        let (reward, info) = env.step(&executed)?;
        let next_state = DVector::from_vec(encode_state(&env.state, &env.geo));
        buffer.push(Transition {
            state: state.clone(),
            action: self.encode_action(&executed),
            reward: reward * self.config.reward_scale,
            next_state,
            y_prime: if merge_win { y_prime_exec } else { y_prime_scaled },
        });

        // learning
        let mut critic_loss = 0.0;
        let mut actor_objective = 0.0;
        if buffer.len() >= self.config.batch_size {
            let mut rng = self.rng.clone();
            let batch = buffer.sample(self.config.batch_size, &mut rng);
            let y = self.critic_target(&batch);
            let merged: Vec<f64> = y
                .iter()
                .zip(batch.iter())
                .map(|(&yi, t)| yi.max(t.y_prime))
                .collect();
            // the borrow of `buffer` ends before the mutable updates
            let batch_owned: Vec<Transition> = batch.into_iter().cloned().collect();
            let batch_refs: Vec<&Transition> = batch_owned.iter().collect();
            critic_loss = self.update_critic(&batch_refs, &merged)?;
            actor_objective = self.update_actor(&batch_refs)?;
            self.soft_update()?;
            self.rng = rng;
        }

        self.noise *= self.config.noise_decay;
        self.step_count += 1;
        Ok(StepMetrics {
            reward,
            transmit_power: info.transmit_power,
            rho: executed.rho,
            outage: info.outage,
            y_model,
            y_critic: y_critic_scaled / self.config.reward_scale,
            merge_win,
            critic_loss,
            actor_objective,
        })
    }

    // -- checkpointing ----------------------------------------------------

    pub fn save_checkpoint(&self) -> Result<String> {
        let ck = Checkpoint {
            version: 1,
            config: self.config.clone(),
            m: self.m,
            n: self.n,
            state_dim: self.state_dim,
            actor: self.actor.params(),
            critic: self.critic.params(),
            target_actor: self.target_actor.params(),
            target_critic: self.target_critic.params(),
            noise: self.noise,
            step_count: self.step_count,
            rng_seed: self.seed,
            rng_word_pos: self.rng.get_word_pos(),
        };
        Ok(serde_json::to_string_pretty(&ck)?)
    }

    pub fn load_checkpoint(data: &str) -> Result<Agent> {
        let ck: Checkpoint = serde_json::from_str(data)?;
        if ck.version != 1 {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint version {}",
                ck.version
            )));
        }
        let mut agent = Agent::new(ck.m, ck.n, ck.state_dim, ck.config, ck.rng_seed)?;
        agent.actor.set_params(&ck.actor)?;
        agent.critic.set_params(&ck.critic)?;
        agent.target_actor.set_params(&ck.target_actor)?;
        agent.target_critic.set_params(&ck.target_critic)?;
        agent.noise = ck.noise;
        agent.step_count = ck.step_count;
        agent.rng.set_word_pos(ck.rng_word_pos);
        Ok(agent)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: AgentConfig,
    m: usize,
    n: usize,
    state_dim: usize,
    actor: Vec<f64>,
    critic: Vec<f64>,
    target_actor: Vec<f64>,
    target_critic: Vec<f64>,
    noise: f64,
    step_count: usize,
    rng_seed: u64,
    rng_word_pos: u128,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_agent() -> Agent {
        let mut cfg = AgentConfig::default();
        cfg.approximator = ApproximatorSpec { hidden: vec![8] };
        cfg.batch_size = 4;
        cfg.buffer_capacity = 16;
        Agent::new(2, 3, 6, cfg, 42).unwrap()
    }

    #[test]
    fn act_is_deterministic_without_noise_and_valid() {
        let agent = small_agent();
        let state = DVector::from_fn(6, |i, _| 0.1 * i as f64);
        let (a1, rep1) = agent.act(&state, false, &mut rng(1));
        let (a2, rep2) = agent.act(&state, false, &mut rng(2));
        assert_eq!(rep1, rep2);
        assert_eq!(a1.w, a2.w);
        a1.validate().unwrap();
        assert!(a1.w.norm_squared() <= agent.config.p_max * (1.0 + 1e-12));
    }

    #[test]
    fn exploration_noise_std_matches_scale() {
        let mut agent = small_agent();
        agent.noise = 0.25;
        let state = DVector::zeros(6);
        let base = agent.actor.forward(&state);
        let mut r = rng(3);
        let mut acc = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let mut raw = agent.actor.forward(&state);
            for v in raw.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut r);
                *v += agent.noise * z;
            }
            let d = &raw - &base;
            acc += d.norm_squared() / raw.len() as f64;
        }
        let std = (acc / draws as f64).sqrt();
        assert!((std - 0.25).abs() < 0.05 * 0.25, "std {std}");
    }

    #[test]
    fn critic_target_arithmetic_and_loop_oracle() {
        let mut agent = small_agent();
        // force gamma = 0.99 and a constant critic via zero weights + bias 2
        agent.config.gamma = 0.99;
        let zeros = vec![0.0; agent.target_critic.params().len()];
        agent.target_critic.set_params(&zeros).unwrap();
        let nl = agent.target_critic.layers.len();
        agent.target_critic.layers[nl - 1].b[0] = 2.0;
        let t = Transition {
            state: DVector::zeros(6),
            action: DVector::zeros(Agent::action_dim(2, 3)),
            reward: 1.0,
            next_state: DVector::zeros(6),
            y_prime: 0.0,
        };
        let y = agent.critic_target(&[&t]);
        assert!((y[0] - 2.98).abs() < 1e-12);

        agent.config.gamma = 0.0;
        let y = agent.critic_target(&[&t]);
        assert!((y[0] - 1.0).abs() < 1e-12);

        // loop oracle on a random batch
        agent.config.gamma = 0.7;
        let mut r = rng(4);
        let ts: Vec<Transition> = (0..5)
            .map(|_| Transition {
                state: DVector::from_fn(6, |_, _| r.random_range(-1.0..1.0)),
                action: DVector::zeros(Agent::action_dim(2, 3)),
                reward: r.random_range(-1.0..1.0),
                next_state: DVector::from_fn(6, |_, _| r.random_range(-1.0..1.0)),
                y_prime: 0.0,
            })
            .collect();
        let refs: Vec<&Transition> = ts.iter().collect();
        let ys = agent.critic_target(&refs);
        for (t, &y) in ts.iter().zip(&ys) {
            let rep = agent.squash(&agent.target_actor.forward(&t.next_state));
            let q = Agent::q_value(&agent.target_critic, &t.next_state, &rep);
            assert!((y - (t.reward + 0.7 * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_rule_and_tie_break() {
        let agent = small_agent();
        let state = DVector::zeros(6);
        let (actor_action, _) = agent.act(&state, false, &mut rng(5));
        let optimized = BeamformingAction {
            w: actor_action.w.scale(0.5),
            theta: actor_action.theta.clone(),
            rho: 0.9,
        };
        let (y, a) = Agent::merge_targets(3.0, 5.0, &actor_action, &optimized);
        assert_eq!(y, 5.0);
        assert_eq!(a.w, optimized.w);
        assert_eq!(a.rho, actor_action.rho); // rho kept from the actor

        let (y, a) = Agent::merge_targets(4.0, 2.0, &actor_action, &optimized);
        assert_eq!(y, 4.0);
        assert_eq!(a.w, actor_action.w);

        let (y, a) = Agent::merge_targets(4.0, 4.0, &actor_action, &optimized);
        assert_eq!(y, 4.0);
        assert_eq!(a.w, actor_action.w); // tie keeps the actor
    }

    #[test]
    fn critic_update_zero_gradient_and_single_sample() {
        let mut agent = small_agent();
        let mut r = rng(6);
        let ts: Vec<Transition> = (0..4)
            .map(|_| Transition {
                state: DVector::from_fn(6, |_, _| r.random_range(-1.0..1.0)),
                action: DVector::from_fn(Agent::action_dim(2, 3), |_, _| r.random_range(-1.0..1.0)),
                reward: 0.0,
                next_state: DVector::zeros(6),
                y_prime: 0.0,
            })
            .collect();
        let refs: Vec<&Transition> = ts.iter().collect();
        // targets equal to current Q: zero loss, parameters unchanged
        let targets: Vec<f64> = ts
            .iter()
            .map(|t| Agent::q_value(&agent.critic, &t.state, &t.action))
            .collect();
        let before = agent.critic.params();
        let loss = agent.update_critic(&refs, &targets).unwrap();
        assert!(loss < 1e-24);
        for (a, b) in agent.critic.params().iter().zip(&before) {
            assert!((a - b).abs() < 1e-12);
        }
        // single sample: loss = (y - Q)^2
        let q = Agent::q_value(&agent.critic, &ts[0].state, &ts[0].action);
        let loss = agent.update_critic(&refs[..1], &[q + 0.5]).unwrap();
        assert!((loss - 0.25).abs() < 1e-12);
    }

    #[test]
    fn actor_update_zero_step_and_ascent() {
        let mut agent = small_agent();
        let mut r = rng(7);
        let ts: Vec<Transition> = (0..4)
            .map(|_| Transition {
                state: DVector::from_fn(6, |_, _| r.random_range(-1.0..1.0)),
                action: DVector::zeros(Agent::action_dim(2, 3)),
                reward: 0.0,
                next_state: DVector::zeros(6),
                y_prime: 0.0,
            })
            .collect();
        let refs: Vec<&Transition> = ts.iter().collect();
        agent.config.alpha_v = 0.0;
        let before = agent.actor.params();
        agent.update_actor(&refs).unwrap();
        assert_eq!(agent.actor.params(), before);

        // repeated ascent on a fixed critic: mean Q nondecreasing overall
        agent.config.alpha_v = 1e-2;
        let mut qs = Vec::new();
        for _ in 0..100 {
            qs.push(agent.update_actor(&refs).unwrap());
        }
        assert!(qs.last().unwrap() > qs.first().unwrap());
    }

    #[test]
    fn target_network_lag_formula() {
        let mut agent = small_agent();
        let tau = 0.1;
        agent.config.tau_soft = tau;
        let online = agent.actor.params();
        let initial = agent.target_actor.params();
        let k = 7;
        for _ in 0..k {
            agent.soft_update().unwrap();
        }
        let decay = (1.0 - tau).powi(k);
        for ((t, o), i) in agent.target_actor.params().iter().zip(&online).zip(&initial) {
            let expect = o * (1.0 - decay) + i * decay;
            assert!((t - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn replay_buffer_fifo_and_uniform_sampling() {
        let mut buf = ReplayBuffer::new(100);
        let mk = |v: f64| Transition {
            state: DVector::from_element(1, v),
            action: DVector::zeros(1),
            reward: v,
            next_state: DVector::zeros(1),
            y_prime: 0.0,
        };
        for i in 0..120 {
            buf.push(mk(i as f64));
        }
        assert_eq!(buf.len(), 100);
        // oldest 20 evicted
        let mut r = rng(8);
        let all = buf.sample(100, &mut r);
        assert!(all.iter().all(|t| t.reward >= 20.0));

        // uniformity: 1e5 single-draws over a 100-element buffer
        let mut counts = vec![0usize; 100];
        for _ in 0..100_000 {
            let s = buf.sample(1, &mut r);
            counts[(s[0].reward - 20.0) as usize] += 1;
        }
        // chi-square goodness of fit, 99 dof: 150 is far into the tail
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0)
            .sum();
        assert!(chi2 < 150.0, "chi-square statistic {chi2}");
    }

    #[test]
    fn squash_jacobian_matches_finite_differences() {
        let agent = small_agent();
        let mut r = rng(9);
        for &scale in &[0.3f64, 5.0] {
            // small raw: inside the cap; large raw: on the projection branch
            let raw = DVector::from_fn(Agent::action_dim(2, 3), |_, _| {
                r.random_range(-1.0..1.0) * scale
            });
            let jac = agent.squash_jacobian(&raw);
            let eps = 1e-6;
            for j in 0..raw.len() {
                let mut up = raw.clone();
                up[j] += eps;
                let mut dn = raw.clone();
                dn[j] -= eps;
                let fd = (agent.squash(&up) - agent.squash(&dn)).scale(0.5 / eps);
                for i in 0..raw.len() {
                    assert!(
                        (fd[i] - jac[(i, j)]).abs() < 1e-5,
                        "scale {scale} ({i},{j}): fd {} vs {}",
                        fd[i],
                        jac[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_stable() {
        let agent = small_agent();
        let data = agent.save_checkpoint().unwrap();
        let restored = Agent::load_checkpoint(&data).unwrap();
        assert_eq!(restored.actor.params(), agent.actor.params());
        assert_eq!(restored.critic.params(), agent.critic.params());
        assert_eq!(restored.step_count, agent.step_count);
        let again = restored.save_checkpoint().unwrap();
        assert_eq!(data, again);
    }
}
