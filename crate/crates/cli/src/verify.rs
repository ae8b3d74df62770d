//! Verification suite: machine-readable pass/fail report over the numeric
//! invariants of the channel model, the SDP pipeline, and the agent.

use crate::config::ExperimentConfig;
use irsbf_core::agent::{Agent, AgentConfig, ApproximatorSpec, ReplayBuffer, TrainMode};
use irsbf_core::env::{encoded_len, ChannelMode, Environment, EpisodeConfig};
use irsbf_core::linalg::{fro_norm, kron, vec_cols, C64, CMat, CVec};
use irsbf_core::model::{
    ball_sample, sample_channel, BeamformingAction, UncertaintyModel,
};
use irsbf_core::nn::Mlp;
use irsbf_core::optimizer::{
    align_phases, build_energy_lmi, build_energy_lmi_signed, robust_beamforming,
    solve_power_min_nominal, VarLayout,
};
use irsbf_core::sdp::{BarrierSolver, SolveStatus};
use irsbf_core::{Result, RobustStatus};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Pinned tolerance or threshold the measurement is compared against.
    pub tolerance: f64,
    /// Worst measured value across the check's instances.
    pub measured: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: u32,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs every check and writes `verification.json` under `out`.
pub fn run_verification(config: &ExperimentConfig, out: &Path) -> Result<(PathBuf, VerificationReport)> {
    config.validate()?;
    let report = compute_verification(config)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("verification.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    Ok((path, report))
}

pub fn compute_verification(config: &ExperimentConfig) -> Result<VerificationReport> {
    let checks = vec![
        check_network_gradients()?,
        check_kronecker_identity()?,
        check_schur_zero_radius(config)?,
        check_action_ranges(config)?,
        check_all_outage_reward(config)?,
        check_merged_target_dominance(config)?,
        check_monte_carlo_robustness(config)?,
        check_energy_sign_mutation_detected(config)?,
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport { version: REPORT_VERSION, all_passed, checks })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Actor/critic backprop vs central finite differences, 1e-4 relative.
fn check_network_gradients() -> Result<CheckResult> {
    let tol = 1e-4;
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for dims in [&[6usize, 12, 8, 1][..], &[10, 16, 5][..]] {
        let net = Mlp::new(dims, &mut r);
        let x = DVector::from_fn(dims[0], |_, _| r.random_range(-1.0..1.0));
        let cache = net.forward_cache(&x);
        let mut grads = net.zero_grads();
        let out_dim = *dims.last().unwrap();
        // scalar loss: sum of outputs
        net.backward(&cache, &DVector::from_element(out_dim, 1.0), &mut grads);
        let flat: Vec<f64> = (0..net.layers.len())
            .flat_map(|k| {
                grads.w[k].iter().copied().chain(grads.b[k].iter().copied()).collect::<Vec<_>>()
            })
            .collect();
        let p0 = net.params();
        let mut probe = net.clone();
        let eps = 1e-6;
        for i in (0..p0.len()).step_by(5) {
            let mut p = p0.clone();
            p[i] += eps;
            probe.set_params(&p).unwrap();
            let up: f64 = probe.forward(&x).iter().sum();
            p[i] -= 2.0 * eps;
            probe.set_params(&p).unwrap();
            let dn: f64 = probe.forward(&x).iter().sum();
            let fd = (up - dn) / (2.0 * eps);
            let rel = (fd - flat[i]).abs() / fd.abs().max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(CheckResult {
        name: "network_gradients_vs_finite_differences".into(),
        passed: worst <= tol,
        tolerance: tol,
        measured: worst,
        detail: "central differences, eps = 1e-6, every 5th parameter of two architectures".into(),
    })
}

/// vec(H)^H (I_N kron w w^H) vec(H) = ||H^H w||^2, 1e-9 relative.
fn check_kronecker_identity() -> Result<CheckResult> {
    let tol = 1e-9;
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (m, n) = (r.random_range(2..5usize), r.random_range(2..7usize));
        let h = CMat::from_fn(m, n, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        let w = CVec::from_fn(m, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        let eye = CMat::identity(n, n);
        let ww = &w * w.adjoint();
        let big = kron(&eye, &ww);
        let v = vec_cols(&h);
        let lhs = (v.adjoint() * &big * &v)[(0, 0)].re;
        let rhs = (h.adjoint() * &w).norm_squared();
        worst = worst.max((lhs - rhs).abs() / rhs.max(1e-12));
    }
    Ok(CheckResult {
        name: "kronecker_vectorization_identity".into(),
        passed: worst <= tol,
        tolerance: tol,
        measured: worst,
        detail: "20 random complex (H, w) pairs, M in 2..4, N in 2..6".into(),
    })
}

/// Zero-radius auxiliary-variable route vs direct Schur route, 1e-6 relative.
fn check_schur_zero_radius(config: &ExperimentConfig) -> Result<CheckResult> {
    let tol = 1e-6;
    let geo = config.geometry.clone();
    let backend = BarrierSolver::default();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for seed in 0..3u64 {
        let mut r = rng(30 + seed);
        let ch = sample_channel(&geo, &mut r);
        let unc = UncertaintyModel::exact(&ch);
        let aligned = align_phases(&ch.g, &unc.hf_bar)?;
        let rho = 0.5;
        let nominal = solve_power_min_nominal(
            &ch.g, &unc.h_bar, rho, aligned.kappa, geo.gamma1, geo.eta, geo.mu, &backend,
        );
        let robust = robust_beamforming(rho, &unc, &ch.g, &geo, &backend, &mut r)?;
        if nominal.status != SolveStatus::Optimal || robust.status != RobustStatus::Optimal {
            detail = format!("instance {seed} did not solve");
            worst = f64::INFINITY;
            break;
        }
        worst = worst
            .max((nominal.objective - robust.sdp_objective).abs() / nominal.objective.max(1e-12));
    }
    Ok(CheckResult {
        name: "schur_complement_zero_radius_equivalence".into(),
        passed: worst <= tol,
        tolerance: tol,
        measured: worst,
        detail: if detail.is_empty() { "3 random desk-scale instances".into() } else { detail },
    })
}

/// Unit-modulus phases and rho range over 1e4 sampled actions.
fn check_action_ranges(config: &ExperimentConfig) -> Result<CheckResult> {
    let geo = config.geometry.clone();
    let state_dim = encoded_len(&geo, config.episode.t_window);
    let agent_config = AgentConfig {
        approximator: ApproximatorSpec { hidden: vec![32] },
        ..config.agent.clone()
    };
    let p_max = agent_config.p_max;
    let agent = Agent::new(geo.m, geo.n, state_dim, agent_config, 7)?;
    let mut r = rng(4);
    let mut worst_modulus: f64 = 0.0;
    let mut rho_ok = true;
    let mut power_ok = true;
    for _ in 0..10_000 {
        let state = DVector::from_fn(state_dim, |_, _| r.random_range(-2.0..2.0));
        let (action, _) = agent.act(&state, true, &mut r);
        for t in action.theta.iter() {
            worst_modulus = worst_modulus.max((t.norm() - 1.0).abs());
        }
        rho_ok &= action.rho > 0.0 && action.rho < 1.0;
        power_ok &= action.w.norm_squared() <= p_max * (1.0 + 1e-9);
    }
    let tol = 1e-9;
    Ok(CheckResult {
        name: "sampled_action_ranges".into(),
        passed: worst_modulus <= tol && rho_ok && power_ok,
        tolerance: tol,
        measured: worst_modulus,
        detail: "1e4 noisy actions: |theta_i| = 1, rho in (0,1), ||w||^2 <= p_max".into(),
    })
}

/// Reward is exactly zero once every window period is in outage.
fn check_all_outage_reward(config: &ExperimentConfig) -> Result<CheckResult> {
    let geo = config.geometry.clone();
    let episode = EpisodeConfig {
        t_window: config.episode.t_window,
        steps_per_episode: 100,
        channel_mode: ChannelMode::IidPerStep,
    };
    let mut env = Environment::new(geo.clone(), episode, rng(5))?;
    // transmit power far below the SNR requirement: every period outages
    let tiny = BeamformingAction {
        w: CVec::from_element(geo.m, C64::new(1e-12, 0.0)),
        theta: CVec::from_element(geo.n, C64::new(1.0, 0.0)),
        rho: 0.5,
    };
    let mut worst: f64 = 0.0;
    let mut saturated = false;
    for _ in 0..config.episode.t_window + 4 {
        let (reward, info) = env.step(&tiny)?;
        if env.state.outages.iter().all(|&o| o) {
            saturated = true;
            worst = worst.max(reward.abs());
        }
        debug_assert!(info.outage);
    }
    Ok(CheckResult {
        name: "all_outage_window_zero_reward".into(),
        passed: saturated && worst == 0.0,
        tolerance: 0.0,
        measured: worst,
        detail: "near-zero beamformer drives every window period into outage".into(),
    })
}

/// max(y, y') dominates both inputs on every trained batch.
fn check_merged_target_dominance(config: &ExperimentConfig) -> Result<CheckResult> {
    let mut geo = config.geometry.clone();
    geo.m = 2;
    geo.n = 4;
    let episode = EpisodeConfig {
        t_window: 3,
        steps_per_episode: 100,
        channel_mode: ChannelMode::BlockHold { k: 6 },
    };
    let agent_config = AgentConfig {
        approximator: ApproximatorSpec { hidden: vec![16] },
        batch_size: 8,
        buffer_capacity: 64,
        optimizer_every: 2,
        ..config.agent.clone()
    };
    let state_dim = encoded_len(&geo, episode.t_window);
    let mut env = Environment::new(geo.clone(), episode, rng(6))?;
    let mut agent = Agent::new(geo.m, geo.n, state_dim, agent_config, 9)?;
    let mut buffer = ReplayBuffer::new(64);
    let backend = BarrierSolver::default();
    for _ in 0..20 {
        agent.train_step(&mut env, &mut buffer, TrainMode::OptimizationDriven, &backend)?;
    }
    let mut r = rng(7);
    let mut ok = true;
    let mut checked = 0;
    for _ in 0..5 {
        let batch = buffer.sample(8, &mut r);
        let y = agent.critic_target(&batch);
        for (yi, t) in y.iter().zip(&batch) {
            let merged = yi.max(t.y_prime);
            ok &= merged >= *yi && merged >= t.y_prime;
            checked += 1;
        }
    }
    Ok(CheckResult {
        name: "merged_target_dominance".into(),
        passed: ok && checked > 0,
        tolerance: 0.0,
        measured: if ok { 0.0 } else { 1.0 },
        detail: format!("{checked} batch elements after 20 optimization-driven steps"),
    })
}

/// Extracted beamformers satisfy the modeled robust constraints on sampled
/// uncertainties (the analytic worst-case scaling makes this structural).
fn check_monte_carlo_robustness(config: &ExperimentConfig) -> Result<CheckResult> {
    let geo = config.geometry.clone();
    let backend = BarrierSolver::default();
    let samples = 500;
    let mut feasible = 0usize;
    let mut total = 0usize;
    let mut solved = 0;
    for seed in 0..3u64 {
        let mut r = rng(80 + seed);
        let base = sample_channel(&geo, &mut r);
        let mut unc = UncertaintyModel::exact(&base);
        unc.delta_h = 0.05 * fro_norm(&unc.h_bar);
        unc.delta_f = 0.05 * fro_norm(&unc.hf_bar);
        let result = robust_beamforming(0.6, &unc, &base.g, &geo, &backend, &mut r)?;
        if result.status != RobustStatus::Optimal {
            continue;
        }
        solved += 1;
        let kappa = align_phases(&base.g, &unc.hf_bar)?.kappa;
        let alpha = 1.0 + result.rho * kappa;
        let need_harvest = geo.n as f64 * geo.mu;
        for _ in 0..samples {
            let d_f = ball_sample(geo.m, geo.n, unc.delta_f, &mut r);
            let d_h = ball_sample(geo.m, geo.n, unc.delta_h, &mut r);
            let g_eff = base.g.scale(alpha) + (&d_f * &result.theta).scale(result.rho);
            let snr = (g_eff.adjoint() * &result.w)[(0, 0)].norm_sqr();
            let h = &unc.h_bar + d_h;
            let harvest = geo.eta * (1.0 - result.rho * result.rho)
                * (h.adjoint() * &result.w).norm_squared();
            total += 1;
            if snr >= geo.gamma1 * (1.0 - 1e-6) && harvest >= need_harvest * (1.0 - 1e-6) {
                feasible += 1;
            }
        }
    }
    let rate = if total > 0 { feasible as f64 / total as f64 } else { 0.0 };
    Ok(CheckResult {
        name: "monte_carlo_robust_feasibility".into(),
        passed: solved >= 2 && rate >= 0.999,
        tolerance: 0.999,
        measured: rate,
        detail: format!("{solved} instances x {samples} ball samples, 1e-6 relative slack"),
    })
}

/// A flipped sign on the energy LMI's uncertainty budget must be caught by
/// the Monte Carlo harvest oracle (mutation test fixture).
fn check_energy_sign_mutation_detected(config: &ExperimentConfig) -> Result<CheckResult> {
    let geo = config.geometry.clone();
    let mut r = rng(9);
    let ch = sample_channel(&geo, &mut r);
    let rho = 0.6;
    let delta_h = 0.5 * fro_norm(&ch.h);
    let canonical = build_energy_lmi(&ch.h, rho, delta_h, geo.eta, geo.mu, geo.n)?;
    let mutated = build_energy_lmi_signed(&ch.h, rho, delta_h, geo.eta, geo.mu, geo.n, 1.0)?;

    let layout = VarLayout { m: geo.m };
    let eps = 1e-9;
    let mut x = vec![0.0; layout.n_vars()];
    let w = CMat::identity(geo.m, geo.m).scale(eps);
    x[..layout.n_w()].copy_from_slice(&layout.x_from_w(&w));
    x[layout.tau_index()] = 1e6;

    let mutated_certifies = mutated.min_eig(&x) >= -1e-12;
    let canonical_rejects = canonical.min_eig(&x) < 0.0;

    let need = geo.n as f64 * geo.mu / (geo.eta * (1.0 - rho * rho));
    let mut violations = 0;
    for _ in 0..200 {
        let h = &ch.h + ball_sample(geo.m, geo.n, delta_h, &mut r);
        if eps * fro_norm(&h).powi(2) < need {
            violations += 1;
        }
    }
    let passed = mutated_certifies && canonical_rejects && violations == 200;
    Ok(CheckResult {
        name: "energy_sign_mutation_detected".into(),
        passed,
        tolerance: 0.0,
        measured: violations as f64 / 200.0,
        detail: "wrong-signed budget certifies a tiny-W point that violates harvest on every sample"
            .into(),
    })
}

/// Summarizes a report as human-readable lines (one per check).
pub fn report_lines(report: &VerificationReport) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{}: {} (tolerance {}, measured {})",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.tolerance,
                c.measured
            )
        })
        .collect()
}
