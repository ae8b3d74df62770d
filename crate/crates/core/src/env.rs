//! MDP wrapper over the channel simulator: maintains a sliding window of
//! the last T channel realizations and outage indicators, derives the
//! uncertainty model from that window, and scores actions with the
//! energy-efficiency reward (successfully delivered SNR over transmit
//! power, averaged across the window).

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::model::{
    check_outage, estimate_uncertainty_model, received_snr, sample_channel, BeamformingAction,
    ChannelRealization, NetworkGeometry, UncertaintyModel,
};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How the true channel evolves between decision periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelMode {
    /// Fresh independent draw every step.
    IidPerStep,
    /// A draw is held constant for k consecutive steps.
    BlockHold { k: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Window length T.
    pub t_window: usize,
    pub steps_per_episode: usize,
    pub channel_mode: ChannelMode,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_window == 0 {
            return Err(Error::InvalidArgument("T must be >= 1".into()));
        }
        if self.steps_per_episode == 0 {
            return Err(Error::InvalidArgument("steps_per_episode must be >= 1".into()));
        }
        if let ChannelMode::BlockHold { k } = self.channel_mode {
            if k == 0 {
                return Err(Error::InvalidArgument("block-hold k must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Observable state: the last T channels, their outage indicators, and the
/// uncertainty model estimated from the window.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub window: Vec<ChannelRealization>,
    pub outages: Vec<bool>,
    pub uncertainty: UncertaintyModel,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub transmit_power: f64,
    pub outage: bool,
    pub snr: f64,
}

/// Owns the channel process and the sliding window for one rollout.
#[derive(Debug, Clone)]
pub struct Environment {
    pub geo: NetworkGeometry,
    pub config: EpisodeConfig,
    pub state: EnvState,
    rng: ChaCha8Rng,
    held: ChannelRealization,
    held_age: usize,
}

impl Environment {
    pub fn new(geo: NetworkGeometry, config: EpisodeConfig, rng: ChaCha8Rng) -> Result<Self> {
        geo.validate()?;
        config.validate()?;
        let mut env = Environment {
            held: ChannelRealization {
                g: CVec::zeros(geo.m),
                h: CMat::zeros(geo.m, geo.n),
                f: CVec::zeros(geo.n),
                h_f: CMat::zeros(geo.m, geo.n),
            },
            state: EnvState {
                window: Vec::new(),
                outages: Vec::new(),
                uncertainty: UncertaintyModel {
                    h_bar: CMat::zeros(geo.m, geo.n),
                    hf_bar: CMat::zeros(geo.m, geo.n),
                    delta_h: 0.0,
                    delta_f: 0.0,
                },
            },
            geo,
            config,
            rng,
            held_age: 0,
        };
        env.reset();
        Ok(env)
    }

    /// Refills the window with T fresh draws and clears the outage bits.
    pub fn reset(&mut self) -> &EnvState {
        let t = self.config.t_window;
        let window: Vec<ChannelRealization> =
            (0..t).map(|_| sample_channel(&self.geo, &mut self.rng)).collect();
        self.held = window.last().unwrap().clone();
        self.held_age = 0;
        self.state = EnvState {
            uncertainty: estimate_uncertainty_model(&window).expect("nonempty window"),
            window,
            outages: vec![false; t],
        };
        &self.state
    }

    fn advance_channel(&mut self) -> ChannelRealization {
        match self.config.channel_mode {
            ChannelMode::IidPerStep => sample_channel(&self.geo, &mut self.rng),
            ChannelMode::BlockHold { k } => {
                self.held_age += 1;
                if self.held_age >= k {
                    self.held = sample_channel(&self.geo, &mut self.rng);
                    self.held_age = 0;
                }
                self.held.clone()
            }
        }
    }

    /// Applies the action for one period: draws the next true channel,
    /// evaluates the outage on it, slides the window, and returns the
    /// window-averaged energy-efficiency reward.
    pub fn step(&mut self, action: &BeamformingAction) -> Result<(f64, StepInfo)> {
        action.validate()?;
        let ch = self.advance_channel();
        let power = action.w.norm_squared();

        if power == 0.0 {
            // zero transmit power cannot satisfy a positive SNR requirement
            self.state.window.remove(0);
            self.state.outages.remove(0);
            self.state.window.push(ch);
            self.state.outages.push(true);
            self.state.uncertainty = estimate_uncertainty_model(&self.state.window)?;
            return Ok((0.0, StepInfo { transmit_power: 0.0, outage: true, snr: 0.0 }));
        }

        let outage = check_outage(&ch, action, &self.geo)?;
        let snr = received_snr(&ch, action)?;

        self.state.window.remove(0);
        self.state.outages.remove(0);
        self.state.window.push(ch);
        self.state.outages.push(outage);
        self.state.uncertainty = estimate_uncertainty_model(&self.state.window)?;

        let mut reward = 0.0;
        for (chan, &o) in self.state.window.iter().zip(&self.state.outages) {
            if !o {
                reward += received_snr(chan, action)? / power;
            }
        }
        reward /= self.state.window.len() as f64;
        Ok((reward, StepInfo { transmit_power: power, outage, snr }))
    }

    pub fn encode_state(&self) -> Vec<f64> {
        encode_state(&self.state, &self.geo)
    }
}

/// Feature length for an encoded state: T*(2M + 4MN) + T.
pub fn encoded_len(geo: &NetworkGeometry, t_window: usize) -> usize {
    t_window * (2 * geo.m + 4 * geo.m * geo.n) + t_window
}

/// Flattens the window into reals: for each period (oldest first) the
/// Re/Im pairs of g (by antenna), then H (column-major), then H_f
/// (column-major), each normalized by its link's path-loss amplitude;
/// the T outage bits (0/1) close the vector.
pub fn encode_state(state: &EnvState, geo: &NetworkGeometry) -> Vec<f64> {
    let amp_g = geo.amp(geo.d0);
    let amp_h = geo.amp(geo.d1);
    let amp_hf = geo.amp(geo.d1) * geo.amp(geo.d2);
    let mut out = Vec::with_capacity(encoded_len(geo, state.window.len()));
    for ch in &state.window {
        for v in ch.g.iter() {
            out.push(v.re / amp_g);
            out.push(v.im / amp_g);
        }
        for v in ch.h.iter() {
            out.push(v.re / amp_h);
            out.push(v.im / amp_h);
        }
        for v in ch.h_f.iter() {
            out.push(v.re / amp_hf);
            out.push(v.im / amp_hf);
        }
    }
    for &o in &state.outages {
        out.push(if o { 1.0 } else { 0.0 });
    }
    out
}

/// Inverse of [`encode_state`] up to the per-element reflection gains
/// (which are not part of the encoding): recovers (g, H, H_f) per period
/// and the outage bits.
pub fn decode_state(
    features: &[f64],
    geo: &NetworkGeometry,
    t_window: usize,
) -> Result<(Vec<(CVec, CMat, CMat)>, Vec<bool>)> {
    if features.len() != encoded_len(geo, t_window) {
        return Err(Error::DimensionMismatch(format!(
            "feature vector has length {}, expected {}",
            features.len(),
            encoded_len(geo, t_window)
        )));
    }
    let (m, n) = (geo.m, geo.n);
    let amp_g = geo.amp(geo.d0);
    let amp_h = geo.amp(geo.d1);
    let amp_hf = geo.amp(geo.d1) * geo.amp(geo.d2);
    let mut idx = 0;
    let mut take = |amp: f64, features: &[f64]| {
        let v = crate::linalg::C64::new(features[idx] * amp, features[idx + 1] * amp);
        idx += 2;
        v
    };
    let mut periods = Vec::with_capacity(t_window);
    for _ in 0..t_window {
        let g = CVec::from_fn(m, |_, _| take(amp_g, features));
        let mut h = CMat::zeros(m, n);
        for c in 0..n {
            for r in 0..m {
                h[(r, c)] = take(amp_h, features);
            }
        }
        let mut h_f = CMat::zeros(m, n);
        for c in 0..n {
            for r in 0..m {
                h_f[(r, c)] = take(amp_hf, features);
            }
        }
        periods.push((g, h, h_f));
    }
    let outages = (0..t_window).map(|i| features[idx + i] != 0.0).collect();
    Ok((periods, outages))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn config(t: usize) -> EpisodeConfig {
        EpisodeConfig { t_window: t, steps_per_episode: 10, channel_mode: ChannelMode::IidPerStep }
    }

    fn some_action(geo: &NetworkGeometry, r: &mut ChaCha8Rng) -> BeamformingAction {
        let w = CVec::from_fn(geo.m, |_, _| {
            let re: f64 = StandardNormal.sample(r);
            let im: f64 = StandardNormal.sample(r);
            C64::new(re, im)
        });
        BeamformingAction {
            w,
            theta: CVec::from_element(geo.n, C64::new(1.0, 0.0)),
            rho: 0.5,
        }
    }

    #[test]
    fn reset_window_boundary_and_determinism() {
        let geo = NetworkGeometry::desk_default();
        let env1 = Environment::new(geo.clone(), config(1), rng(1)).unwrap();
        assert_eq!(env1.state.window.len(), 1);
        assert_eq!(env1.state.outages, vec![false]);

        let env2 = Environment::new(geo.clone(), config(3), rng(7)).unwrap();
        let env3 = Environment::new(geo, config(3), rng(7)).unwrap();
        assert_eq!(encode_state(&env2.state, &env2.geo), encode_state(&env3.state, &env3.geo));
    }

    #[test]
    fn reset_channel_power_matches_path_loss() {
        let geo = NetworkGeometry::desk_default();
        let mut r = rng(2);
        let mut acc = 0.0;
        let draws = 1000;
        for _ in 0..draws {
            // fresh rng per reset so draws are independent
            let seed: u64 = rand::Rng::random(&mut r);
            let env = Environment::new(geo.clone(), config(1), rng(seed)).unwrap();
            acc += env.state.window[0].g.norm_squared() / geo.m as f64;
        }
        let mean = acc / draws as f64;
        assert!((mean - geo.path_gain(geo.d0)).abs() < 0.05 * geo.path_gain(geo.d0));
    }

    #[test]
    fn step_reward_single_window_no_outage() {
        // with gamma1 = 0 and mu = 0 outage is impossible, and T = 1 makes
        // the reward exactly SNR/||w||^2 on the new channel
        let mut geo = NetworkGeometry::desk_default();
        geo.gamma1 = 1e-12; // effectively never in outage
        geo.mu = 0.0;
        let mut env = Environment::new(geo.clone(), config(1), rng(3)).unwrap();
        let mut r = rng(4);
        let action = some_action(&geo, &mut r);
        let (reward, info) = env.step(&action).unwrap();
        assert!(!info.outage);
        let expect = received_snr(&env.state.window[0], &action).unwrap() / action.w.norm_squared();
        assert_relative_eq!(reward, expect, max_relative = 1e-12);
    }

    #[test]
    fn step_all_outage_gives_zero_reward() {
        // impossible SNR requirement: every period is an outage
        let mut geo = NetworkGeometry::desk_default();
        geo.gamma1 = 1e12;
        let mut env = Environment::new(geo.clone(), config(3), rng(5)).unwrap();
        let mut r = rng(6);
        let action = some_action(&geo, &mut r);
        let mut last = f64::NAN;
        for _ in 0..3 {
            let (reward, info) = env.step(&action).unwrap();
            assert!(info.outage);
            last = reward;
        }
        // once the whole window is in outage the reward is exactly zero
        assert!(env.state.outages.iter().all(|&o| o));
        assert_eq!(last, 0.0);
    }

    #[test]
    fn step_matches_loop_oracle_and_window_discipline() {
        let mut geo = NetworkGeometry::desk_default();
        geo.gamma1 = 1e-3; // mixed outcomes
        let mut env = Environment::new(geo.clone(), config(4), rng(7)).unwrap();
        let mut r = rng(8);
        let action = some_action(&geo, &mut r);
        let before = env.state.window.clone();
        let (reward, _) = env.step(&action).unwrap();
        // oldest evicted, rest shifted
        for i in 0..3 {
            assert_eq!(
                encode_state(
                    &EnvState {
                        window: vec![env.state.window[i].clone()],
                        outages: vec![false],
                        uncertainty: env.state.uncertainty.clone()
                    },
                    &geo
                ),
                encode_state(
                    &EnvState {
                        window: vec![before[i + 1].clone()],
                        outages: vec![false],
                        uncertainty: env.state.uncertainty.clone()
                    },
                    &geo
                )
            );
        }
        assert_eq!(env.state.window.len(), 4);
        // explicit-loop averaging oracle
        let p = action.w.norm_squared();
        let mut acc = 0.0;
        for (ch, &o) in env.state.window.iter().zip(&env.state.outages) {
            if !o {
                acc += received_snr(ch, &action).unwrap() / p;
            }
        }
        acc /= 4.0;
        assert_relative_eq!(reward, acc, max_relative = 1e-12);
        // reward bound
        let max_term = env
            .state
            .window
            .iter()
            .map(|ch| received_snr(ch, &action).unwrap() / p)
            .fold(0.0f64, f64::max);
        assert!(reward >= 0.0 && reward <= max_term + 1e-15);
    }

    #[test]
    fn zero_beamformer_is_outage_with_zero_reward() {
        let geo = NetworkGeometry::desk_default();
        let mut env = Environment::new(geo.clone(), config(2), rng(9)).unwrap();
        let action = BeamformingAction {
            w: CVec::zeros(geo.m),
            theta: CVec::from_element(geo.n, C64::new(1.0, 0.0)),
            rho: 0.5,
        };
        let (reward, info) = env.step(&action).unwrap();
        assert_eq!(reward, 0.0);
        assert!(info.outage);
    }

    #[test]
    fn encoded_length_formula() {
        let geo = NetworkGeometry::desk_default(); // M = 4, N = 8
        assert_eq!(encoded_len(&geo, 4), 4 * (8 + 128) + 4);
        let env = Environment::new(geo.clone(), config(4), rng(10)).unwrap();
        assert_eq!(env.encode_state().len(), 548);
    }

    #[test]
    fn zero_channels_encode_to_outage_bits_only() {
        let geo = NetworkGeometry::desk_default();
        let zero = ChannelRealization {
            g: CVec::zeros(geo.m),
            h: CMat::zeros(geo.m, geo.n),
            f: CVec::zeros(geo.n),
            h_f: CMat::zeros(geo.m, geo.n),
        };
        let state = EnvState {
            window: vec![zero.clone(), zero],
            outages: vec![false, true],
            uncertainty: UncertaintyModel {
                h_bar: CMat::zeros(geo.m, geo.n),
                hf_bar: CMat::zeros(geo.m, geo.n),
                delta_h: 0.0,
                delta_f: 0.0,
            },
        };
        let enc = encode_state(&state, &geo);
        let body = &enc[..enc.len() - 2];
        assert!(body.iter().all(|&v| v == 0.0));
        assert_eq!(&enc[enc.len() - 2..], &[0.0, 1.0]);
    }

    #[test]
    fn decode_encode_roundtrip() {
        let geo = NetworkGeometry::desk_default();
        let env = Environment::new(geo.clone(), config(3), rng(11)).unwrap();
        let enc = env.encode_state();
        let (periods, outages) = decode_state(&enc, &geo, 3).unwrap();
        assert_eq!(outages, env.state.outages);
        for (dec, ch) in periods.iter().zip(&env.state.window) {
            assert!((&dec.0 - &ch.g).norm() <= 1e-9 * ch.g.norm());
            assert!(crate::linalg::fro_norm(&(&dec.1 - &ch.h)) <= 1e-9);
            assert!(crate::linalg::fro_norm(&(&dec.2 - &ch.h_f)) <= 1e-9);
        }
        assert!(decode_state(&enc[1..], &geo, 3).is_err());
    }

    #[test]
    fn block_hold_repeats_channels() {
        let geo = NetworkGeometry::desk_default();
        let cfg = EpisodeConfig {
            t_window: 2,
            steps_per_episode: 10,
            channel_mode: ChannelMode::BlockHold { k: 3 },
        };
        let mut env = Environment::new(geo.clone(), cfg, rng(12)).unwrap();
        let mut r = rng(13);
        let action = some_action(&geo, &mut r);
        let mut gs = Vec::new();
        for _ in 0..6 {
            env.step(&action).unwrap();
            gs.push(env.state.window.last().unwrap().g.clone());
        }
        // within a block the channel repeats; across blocks it changes
        assert_eq!(gs[0], gs[1]);
        assert_ne!(gs[1], gs[2]);
        assert_eq!(gs[2], gs[3]);
        assert_eq!(gs[3], gs[4]);
        assert_ne!(gs[4], gs[5]);
    }
}
