//! Worst-case transmit-power minimization for a fixed power-splitting ratio.
//!
//! Pipeline: co-phase the passive beamformer against the direct channel,
//! build the two robust LMI constraints (SNR under a Frobenius-ball
//! perturbation of the cascaded channel, harvested energy under a ball on
//! the AP-IRS channel), minimize Tr(W) over the PSD covariance with an
//! interior-point backend, recover a rank-one beamformer, and score the
//! result on the mean channel as a model-based target value.
//!
//! The SNR LMI has one large block of size (MN+1); because its range
//! structure is an isometry image of an (M+1)-dimensional space, the solver
//! internally uses an exactly equivalent (M+1) block and the full-size form
//! is only used for post-solve validation.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen_desc, hermitian_min_eig, kron, C64, CMat, CVec};
use crate::model::{effective_channel, NetworkGeometry, UncertaintyModel};
use crate::sdp::{ConicBackend, ConicProblem, LmiBlock, SolveStatus, SparseHermitian};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write as _;

/// Co-phased passive beamformer and its alignment gain.
#[derive(Debug, Clone)]
pub struct AlignedPhase {
    /// Unit-modulus phase vector, length N.
    pub theta: CVec,
    /// Nonnegative projection gain of the cascaded channel onto the direct
    /// channel: kappa = Re(g^H Hf_bar theta) / ||g||^2.
    pub kappa: f64,
}

/// Output of the covariance SDP.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub w_mat: CMat,
    pub t: f64,
    pub tau: f64,
    /// Tr(W) in watts.
    pub objective: f64,
    pub status: SolveStatus,
    pub newton_steps: usize,
}

/// Terminal status of the full robust pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
    ExtractionFailure,
}

/// Joint active/passive beamforming decision produced by the model-based
/// pipeline, plus its target value on the mean channel.
#[derive(Debug, Clone)]
pub struct RobustBeamformingResult {
    pub w: CVec,
    pub theta: CVec,
    pub rho: f64,
    /// ||w||^2 in watts.
    pub transmit_power: f64,
    /// Mean-channel energy efficiency of the optimized action; 0 when the
    /// pipeline did not produce a beamformer.
    pub y_prime: f64,
    pub status: RobustStatus,
    /// Tr(W) of the covariance relaxation (a lower bound on the achievable
    /// robust transmit power for this (rho, theta)); NaN unless optimal.
    pub sdp_objective: f64,
}

// ---------------------------------------------------------------------------
// variable layout: x = [Hermitian coordinates of W (m^2 reals), t, tau]
// ---------------------------------------------------------------------------

/// Real coordinate chart for M x M Hermitian matrices plus the two scalar
/// slack variables of the robust constraints.
#[derive(Debug, Clone, Copy)]
pub struct VarLayout {
    pub m: usize,
}

impl VarLayout {
    pub fn n_w(&self) -> usize {
        self.m * self.m
    }

    pub fn n_vars(&self) -> usize {
        self.m * self.m + 2
    }

    pub fn t_index(&self) -> usize {
        self.m * self.m
    }

    pub fn tau_index(&self) -> usize {
        self.m * self.m + 1
    }

    /// i-th Hermitian basis matrix: diagonals first, then for each pair
    /// k < l (lexicographic) the real part E_kl + E_lk followed by the
    /// imaginary part i(E_kl - E_lk), so that W_kl = x_re + i x_im.
    pub fn basis(&self, i: usize) -> SparseHermitian {
        let m = self.m;
        assert!(i < self.n_w());
        if i < m {
            return SparseHermitian { dim: m, entries: vec![(i, i, C64::new(1.0, 0.0))] };
        }
        let mut idx = i - m;
        for k in 0..m {
            for l in (k + 1)..m {
                if idx < 2 {
                    let entries = if idx == 0 {
                        vec![(k, l, C64::new(1.0, 0.0)), (l, k, C64::new(1.0, 0.0))]
                    } else {
                        vec![(k, l, C64::new(0.0, 1.0)), (l, k, C64::new(0.0, -1.0))]
                    };
                    return SparseHermitian { dim: m, entries };
                }
                idx -= 2;
            }
        }
        unreachable!()
    }

    /// Reassembles W from the coordinate vector.
    pub fn w_from_x(&self, x: &[f64]) -> CMat {
        let m = self.m;
        let mut w = CMat::zeros(m, m);
        for i in 0..m {
            w[(i, i)] = C64::new(x[i], 0.0);
        }
        let mut idx = m;
        for k in 0..m {
            for l in (k + 1)..m {
                let v = C64::new(x[idx], x[idx + 1]);
                w[(k, l)] = v;
                w[(l, k)] = v.conj();
                idx += 2;
            }
        }
        w
    }

    /// Coordinates of a Hermitian matrix in this chart.
    pub fn x_from_w(&self, w: &CMat) -> Vec<f64> {
        let m = self.m;
        let mut x = vec![0.0; self.n_w()];
        for i in 0..m {
            x[i] = w[(i, i)].re;
        }
        let mut idx = m;
        for k in 0..m {
            for l in (k + 1)..m {
                x[idx] = w[(k, l)].re;
                x[idx + 1] = w[(k, l)].im;
                idx += 2;
            }
        }
        x
    }

    /// Objective coefficients for Tr(W).
    pub fn trace_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_vars()];
        for i in 0..self.m {
            c[i] = 1.0;
        }
        c
    }
}

// ---------------------------------------------------------------------------
// phase alignment
// ---------------------------------------------------------------------------

/// Co-phases every cascaded-channel column against the direct channel:
/// theta_n = exp(-j arg(g^H hf_n)), making each projection nonnegative real.
pub fn align_phases(g: &CVec, hf_bar: &CMat) -> Result<AlignedPhase> {
    if g.norm() == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    if hf_bar.nrows() != g.len() {
        return Err(Error::DimensionMismatch(format!(
            "g has {} rows but Hf_bar has {}",
            g.len(),
            hf_bar.nrows()
        )));
    }
    let n = hf_bar.ncols();
    let mut theta = CVec::zeros(n);
    let mut proj = 0.0f64;
    for c in 0..n {
        let inner = (g.adjoint() * hf_bar.column(c))[(0, 0)];
        let phase = if inner.norm() > 0.0 {
            (inner / inner.norm()).conj()
        } else {
            C64::new(1.0, 0.0)
        };
        theta[c] = phase;
        proj += (inner * phase).re;
    }
    let kappa = proj / g.norm_squared();
    Ok(AlignedPhase { theta, kappa: kappa.max(0.0) })
}

// ---------------------------------------------------------------------------
// LMI builders
// ---------------------------------------------------------------------------

fn check_theta(theta: &CVec) -> Result<()> {
    for v in theta.iter() {
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "theta entry has modulus {}, expected 1",
                v.norm()
            )));
        }
    }
    Ok(())
}

/// Full-size robust SNR constraint, affine in (W, t):
/// [[rho^2 (theta theta^H kron W) + t I_MN, alpha rho (theta kron W) g],
///  [., alpha^2 g^H W g - gamma1 - t delta_f^2]] >= 0, with alpha = 1 + rho kappa.
pub fn build_snr_lmi(
    theta: &CVec,
    rho: f64,
    g: &CVec,
    kappa: f64,
    gamma1: f64,
    delta_f: f64,
) -> Result<LmiBlock> {
    check_theta(theta)?;
    if gamma1 <= 0.0 {
        return Err(Error::InvalidArgument("gamma1 must be positive".into()));
    }
    let m = g.len();
    let n = theta.len();
    let layout = VarLayout { m };
    let dim = m * n + 1;
    let alpha = 1.0 + rho * kappa;

    let mut constant = CMat::zeros(dim, dim);
    constant[(dim - 1, dim - 1)] = C64::new(-gamma1, 0.0);

    let mut coeffs = Vec::with_capacity(layout.n_vars());
    let theta_mat = CMat::from_fn(n, 1, |r, _| theta[r]);
    let tt = &theta_mat * theta_mat.adjoint();
    for i in 0..layout.n_w() {
        let b = layout.basis(i).to_dense();
        let mut f = CMat::zeros(dim, dim);
        // top-left rho^2 (theta theta^H kron B)
        let tl = kron(&tt, &b).scale(rho * rho);
        f.view_mut((0, 0), (m * n, m * n)).copy_from(&tl);
        // border alpha rho (theta kron B) g
        let bg = &b * g;
        for bn in 0..n {
            for r in 0..m {
                let v = bg[r] * theta[bn] * (alpha * rho);
                f[(bn * m + r, dim - 1)] = v;
                f[(dim - 1, bn * m + r)] = v.conj();
            }
        }
        // corner alpha^2 g^H B g
        f[(dim - 1, dim - 1)] = (g.adjoint() * &b * g)[(0, 0)] * (alpha * alpha);
        coeffs.push(SparseHermitian::from_dense(&f, 0.0));
    }
    // t: identity on the top-left, -delta_f^2 at the corner
    let mut t_coeff = SparseHermitian::identity(dim);
    t_coeff.entries[dim - 1].2 = C64::new(-delta_f * delta_f, 0.0);
    coeffs.push(t_coeff);
    // tau does not enter this constraint
    coeffs.push(SparseHermitian::zero(dim));

    Ok(LmiBlock { name: "snr".into(), dim, constant, coeffs })
}

/// (M+1)-size constraint exactly equivalent to [`build_snr_lmi`] together
/// with t >= 0: projecting the big block onto the isometry
/// (theta/sqrt(N)) kron I_M gives
/// [[rho^2 N W + t I_M, sqrt(N) alpha rho W g],
///  [., alpha^2 g^H W g - gamma1 - t delta_f^2]] >= 0,
/// while the orthogonal complement only adds back the condition t >= 0.
pub fn build_snr_lmi_reduced(
    n_elements: usize,
    rho: f64,
    g: &CVec,
    kappa: f64,
    gamma1: f64,
    delta_f: f64,
) -> Result<LmiBlock> {
    if gamma1 <= 0.0 {
        return Err(Error::InvalidArgument("gamma1 must be positive".into()));
    }
    let m = g.len();
    let n = n_elements as f64;
    let layout = VarLayout { m };
    let dim = m + 1;
    let alpha = 1.0 + rho * kappa;

    let mut constant = CMat::zeros(dim, dim);
    constant[(dim - 1, dim - 1)] = C64::new(-gamma1, 0.0);

    let mut coeffs = Vec::with_capacity(layout.n_vars());
    for i in 0..layout.n_w() {
        let b = layout.basis(i).to_dense();
        let mut f = CMat::zeros(dim, dim);
        f.view_mut((0, 0), (m, m)).copy_from(&b.scale(rho * rho * n));
        let bg = &b * g;
        for r in 0..m {
            let v = bg[r] * (alpha * rho * n.sqrt());
            f[(r, dim - 1)] = v;
            f[(dim - 1, r)] = v.conj();
        }
        f[(dim - 1, dim - 1)] = (g.adjoint() * &b * g)[(0, 0)] * (alpha * alpha);
        coeffs.push(SparseHermitian::from_dense(&f, 0.0));
    }
    let mut t_coeff = SparseHermitian::identity(dim);
    t_coeff.entries[dim - 1].2 = C64::new(-delta_f * delta_f, 0.0);
    coeffs.push(t_coeff);
    coeffs.push(SparseHermitian::zero(dim));

    Ok(LmiBlock { name: "snr_reduced".into(), dim, constant, coeffs })
}

/// Robust harvested-energy constraint, affine in (W, tau):
/// [[I_N kron W + tau I_MN, (I_N kron W) vec(H_bar)],
///  [., gamma0_bar - N mu / (eta (1 - rho^2)) - tau delta_h^2]] >= 0,
/// where gamma0_bar = vec(H_bar)^H (I_N kron W) vec(H_bar).
pub fn build_energy_lmi(
    h_bar: &CMat,
    rho: f64,
    delta_h: f64,
    eta: f64,
    mu: f64,
    n_elements: usize,
) -> Result<LmiBlock> {
    build_energy_lmi_signed(h_bar, rho, delta_h, eta, mu, n_elements, -1.0)
}

/// [`build_energy_lmi`] with an adjustable sign on the corner -tau delta_h^2
/// term. Only the canonical sign (-1) is meaningful; the hook exists so the
/// robustness test suite can verify its Monte Carlo oracle detects a
/// wrong-signed uncertainty budget.
#[doc(hidden)]
pub fn build_energy_lmi_signed(
    h_bar: &CMat,
    rho: f64,
    delta_h: f64,
    eta: f64,
    mu: f64,
    n_elements: usize,
    corner_sign: f64,
) -> Result<LmiBlock> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} outside (0, 1)")));
    }
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let n = h_bar.ncols();
    if n != n_elements {
        return Err(Error::DimensionMismatch(format!(
            "H_bar has {n} columns but N = {n_elements}"
        )));
    }
    energy_lmi_from_columns(h_bar, n_elements, delta_h, eta, mu, rho, corner_sign)
}

/// Rank-compressed robust harvested-energy constraint. The full LMI depends
/// on H_bar only through C C^H = H_bar H_bar^H and tr(C^H W C) =
/// tr(H_bar^H W H_bar), where C = U Sigma from the SVD of H_bar, so the
/// N Kronecker blocks collapse to rank(H_bar) <= M blocks: an equivalent
/// LMI of size M*min(M,N)+1 instead of M*N+1. The full-size block should
/// still be used to validate solutions.
pub fn build_energy_lmi_reduced(
    h_bar: &CMat,
    rho: f64,
    delta_h: f64,
    eta: f64,
    mu: f64,
    n_elements: usize,
) -> Result<LmiBlock> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} outside (0, 1)")));
    }
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let n = h_bar.ncols();
    if n != n_elements {
        return Err(Error::DimensionMismatch(format!(
            "H_bar has {n} columns but N = {n_elements}"
        )));
    }
    let m = h_bar.nrows();
    if n <= m {
        // nothing to compress
        return energy_lmi_from_columns(h_bar, n_elements, delta_h, eta, mu, rho, -1.0);
    }
    let svd = h_bar.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let r = svd.singular_values.len().min(m);
    let c = CMat::from_fn(m, r, |i, j| u[(i, j)] * C64::new(svd.singular_values[j], 0.0));
    energy_lmi_from_columns(&c, n_elements, delta_h, eta, mu, rho, -1.0)
}

fn energy_lmi_from_columns(
    cols: &CMat,
    n_elements: usize,
    delta_h: f64,
    eta: f64,
    mu: f64,
    rho: f64,
    corner_sign: f64,
) -> Result<LmiBlock> {
    let h_bar = cols;
    let m = h_bar.nrows();
    let n = h_bar.ncols();
    let layout = VarLayout { m };
    let dim = m * n + 1;

    let mut constant = CMat::zeros(dim, dim);
    constant[(dim - 1, dim - 1)] =
        C64::new(-(n_elements as f64) * mu / (eta * (1.0 - rho * rho)), 0.0);

    let mut coeffs = Vec::with_capacity(layout.n_vars());
    for i in 0..layout.n_w() {
        let b = layout.basis(i);
        let bd = b.to_dense();
        let mut entries = Vec::new();
        // top-left I_N kron B
        for blk in 0..n {
            for &(r, c, v) in &b.entries {
                entries.push((blk * m + r, blk * m + c, v));
            }
        }
        // border (I_N kron B) vec(H_bar) and corner vec^H (I_N kron B) vec
        let mut corner = C64::new(0.0, 0.0);
        for blk in 0..n {
            let hcol = h_bar.column(blk).into_owned();
            let bh = &bd * &hcol;
            for r in 0..m {
                if bh[r].norm() > 0.0 {
                    entries.push((blk * m + r, dim - 1, bh[r]));
                    entries.push((dim - 1, blk * m + r, bh[r].conj()));
                }
            }
            corner += (hcol.adjoint() * &bh)[(0, 0)];
        }
        if corner.norm() > 0.0 {
            entries.push((dim - 1, dim - 1, corner));
        }
        coeffs.push(SparseHermitian { dim, entries });
    }
    // t does not enter this constraint
    coeffs.push(SparseHermitian::zero(dim));
    // tau: identity on the top-left, corner_sign * delta_h^2 at the corner
    let mut tau_coeff = SparseHermitian::identity(dim);
    tau_coeff.entries[dim - 1].2 = C64::new(corner_sign * delta_h * delta_h, 0.0);
    coeffs.push(tau_coeff);

    Ok(LmiBlock { name: "energy".into(), dim, constant, coeffs })
}

// ---------------------------------------------------------------------------
// SDP assembly and solve
// ---------------------------------------------------------------------------

fn scalar_var_block(name: &str, n_vars: usize, var: usize, sign: f64, offset: f64) -> LmiBlock {
    let mut coeffs = vec![SparseHermitian::zero(1); n_vars];
    coeffs[var] = SparseHermitian { dim: 1, entries: vec![(0, 0, C64::new(sign, 0.0))] };
    LmiBlock {
        name: name.into(),
        dim: 1,
        constant: CMat::from_element(1, 1, C64::new(offset, 0.0)),
        coeffs,
    }
}

/// Minimizes Tr(W) subject to W >= 0 and the two robust constraints.
///
/// `snr_full` is only used to validate the solution; the solve itself runs
/// on the reduced SNR block plus bound blocks on the slack scalars (the
/// slacks are boxed to keep the barrier domain bounded when a radius is
/// zero and the slack direction would otherwise recede).
pub fn solve_power_min_sdp(
    snr_full: &LmiBlock,
    snr_reduced: &LmiBlock,
    energy: &LmiBlock,
    m: usize,
    backend: &dyn ConicBackend,
) -> SdpSolution {
    solve_power_min_sdp_with(snr_full, snr_reduced, energy, energy, m, backend)
}

/// [`solve_power_min_sdp`] with a separate (typically rank-compressed)
/// energy block for the solve; `energy_full` validates the solution.
pub fn solve_power_min_sdp_with(
    snr_full: &LmiBlock,
    snr_reduced: &LmiBlock,
    energy_full: &LmiBlock,
    energy: &LmiBlock,
    m: usize,
    backend: &dyn ConicBackend,
) -> SdpSolution {
    let layout = VarLayout { m };
    let n_vars = layout.n_vars();
    assert_eq!(snr_reduced.coeffs.len(), n_vars);
    assert_eq!(energy.coeffs.len(), n_vars);

    // characteristic scales pulled back out of the blocks
    let gamma1 = -snr_reduced.constant[(m, m)].re;
    let alpha2_g2: f64 = (0..m)
        .map(|i| snr_reduced.coeffs[i].entries.last().map(|e| e.2.re).unwrap_or(0.0))
        .sum();
    let energy_need = -energy.constant[(energy.dim - 1, energy.dim - 1)].re;
    let energy_gain: f64 = (0..m)
        .map(|i| {
            energy.coeffs[i]
                .entries
                .iter()
                .filter(|e| e.0 == energy.dim - 1 && e.1 == energy.dim - 1)
                .map(|e| e.2.re)
                .sum::<f64>()
        })
        .sum();
    let mut w_scale = (gamma1.max(1e-12) / alpha2_g2.max(1e-12)).max(1e-12);
    if energy_need > 0.0 && energy_gain > 1e-300 {
        w_scale = w_scale.max(energy_need / energy_gain);
    }
    let rho2n = snr_reduced.coeffs[0]
        .entries
        .first()
        .map(|e| e.2.re)
        .unwrap_or(1.0);
    let t_cap = 1e6 * (1.0 + rho2n * w_scale * m as f64 + gamma1);
    let tau_cap = 1e6 * (1.0 + w_scale * m as f64 + energy_need.abs());

    let w_psd = LmiBlock {
        name: "w_psd".into(),
        dim: m,
        constant: CMat::zeros(m, m),
        coeffs: (0..n_vars)
            .map(|i| if i < layout.n_w() { layout.basis(i) } else { SparseHermitian::zero(m) })
            .collect(),
    };
    let t_i = layout.t_index();
    let tau_i = layout.tau_index();
    let blocks = vec![
        w_psd,
        snr_reduced.clone(),
        energy.clone(),
        scalar_var_block("t_nonneg", n_vars, t_i, 1.0, 0.0),
        scalar_var_block("t_cap", n_vars, t_i, -1.0, t_cap),
        scalar_var_block("tau_nonneg", n_vars, tau_i, 1.0, 0.0),
        scalar_var_block("tau_cap", n_vars, tau_i, -1.0, tau_cap),
    ];
    let mut var_scale = vec![w_scale; n_vars];
    var_scale[t_i] = t_cap;
    var_scale[tau_i] = tau_cap;

    let problem = ConicProblem {
        n_vars,
        objective: layout.trace_objective(),
        blocks,
        var_scale,
        initial: None,
    };
    let sol = backend.solve(&problem);
    let w_mat = layout.w_from_x(&sol.x[..layout.n_w()]);
    let mut out = SdpSolution {
        w_mat,
        t: sol.x[t_i],
        tau: sol.x[tau_i],
        objective: sol.objective,
        status: sol.status,
        newton_steps: sol.newton_steps,
    };
    if out.status == SolveStatus::Optimal {
        // validate the full-size constraints at the solution
        let tol = |b: &LmiBlock, x: &[f64]| {
            let f = b.eval(x);
            let scale = f.iter().map(|z| z.norm()).fold(1.0, f64::max);
            hermitian_min_eig(&f) >= -1e-7 * scale
        };
        let w_ok = hermitian_min_eig(&out.w_mat)
            >= -1e-8 * out.w_mat.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if !(w_ok
            && tol(snr_full, &sol.x)
            && tol(energy_full, &sol.x)
            && out.t >= 0.0
            && out.tau >= 0.0)
        {
            out.status = SolveStatus::NumericalFailure;
        }
    }
    out
}

/// The zero-radius problem without slack variables: W >= 0,
/// alpha^2 g^H W g >= gamma1, and the scalar harvested-energy constraint.
/// Used to cross-check the Schur-complement structure of the LMIs.
pub fn solve_power_min_nominal(
    g: &CVec,
    h_bar: &CMat,
    rho: f64,
    kappa: f64,
    gamma1: f64,
    eta: f64,
    mu: f64,
    backend: &dyn ConicBackend,
) -> SdpSolution {
    let m = g.len();
    let n = h_bar.ncols();
    let layout = VarLayout { m };
    let n_vars = layout.n_vars();
    let alpha = 1.0 + rho * kappa;

    let snr_coeffs: Vec<SparseHermitian> = (0..n_vars)
        .map(|i| {
            if i < layout.n_w() {
                let b = layout.basis(i).to_dense();
                let q = (g.adjoint() * &b * g)[(0, 0)] * (alpha * alpha);
                SparseHermitian { dim: 1, entries: vec![(0, 0, q)] }
            } else {
                SparseHermitian::zero(1)
            }
        })
        .collect();
    let energy_coeffs: Vec<SparseHermitian> = (0..n_vars)
        .map(|i| {
            if i < layout.n_w() {
                let b = layout.basis(i).to_dense();
                let mut q = C64::new(0.0, 0.0);
                for c in 0..n {
                    let col = h_bar.column(c).into_owned();
                    q += (col.adjoint() * &b * &col)[(0, 0)];
                }
                SparseHermitian { dim: 1, entries: vec![(0, 0, q)] }
            } else {
                SparseHermitian::zero(1)
            }
        })
        .collect();
    let w_psd = LmiBlock {
        name: "w_psd".into(),
        dim: m,
        constant: CMat::zeros(m, m),
        coeffs: (0..n_vars)
            .map(|i| if i < layout.n_w() { layout.basis(i) } else { SparseHermitian::zero(m) })
            .collect(),
    };
    let alpha2_g2 = alpha * alpha * g.norm_squared();
    let w_scale = (gamma1.max(1e-12) / alpha2_g2.max(1e-12)).max(1e-12);
    let mut blocks = vec![
        w_psd,
        LmiBlock {
            name: "snr_scalar".into(),
            dim: 1,
            constant: CMat::from_element(1, 1, C64::new(-gamma1, 0.0)),
            coeffs: snr_coeffs,
        },
        LmiBlock {
            name: "energy_scalar".into(),
            dim: 1,
            constant: CMat::from_element(
                1,
                1,
                C64::new(-(n as f64) * mu / (eta * (1.0 - rho * rho)), 0.0),
            ),
            coeffs: energy_coeffs,
        },
    ];
    // keep the unused slacks boxed so the domain stays bounded
    blocks.push(scalar_var_block("t_nonneg", n_vars, layout.t_index(), 1.0, 0.0));
    blocks.push(scalar_var_block("t_cap", n_vars, layout.t_index(), -1.0, 1.0));
    blocks.push(scalar_var_block("tau_nonneg", n_vars, layout.tau_index(), 1.0, 0.0));
    blocks.push(scalar_var_block("tau_cap", n_vars, layout.tau_index(), -1.0, 1.0));

    let problem = ConicProblem {
        n_vars,
        objective: layout.trace_objective(),
        blocks,
        var_scale: {
            let mut v = vec![w_scale; n_vars];
            v[layout.t_index()] = 1.0;
            v[layout.tau_index()] = 1.0;
            v
        },
        initial: None,
    };
    let sol = backend.solve(&problem);
    SdpSolution {
        w_mat: layout.w_from_x(&sol.x[..layout.n_w()]),
        t: 0.0,
        tau: 0.0,
        objective: sol.objective,
        status: sol.status,
        newton_steps: sol.newton_steps,
    }
}

// ---------------------------------------------------------------------------
// rank-one extraction
// ---------------------------------------------------------------------------

/// Everything needed to check a candidate beamformer against the two robust
/// constraints at their analytic worst case.
#[derive(Debug, Clone)]
pub struct ExtractionContext {
    pub g: CVec,
    pub h_bar: CMat,
    pub rho: f64,
    pub alpha: f64,
    pub gamma1: f64,
    pub delta_f: f64,
    pub delta_h: f64,
    pub eta: f64,
    pub mu: f64,
    pub n_elements: usize,
}

impl ExtractionContext {
    /// Worst-case SNR amplitude over the cascaded-channel ball:
    /// max(0, alpha |g^H w| - rho delta_f sqrt(N) ||w||).
    pub fn worst_snr_amplitude(&self, w: &CVec) -> f64 {
        let aligned = self.alpha * (self.g.adjoint() * w)[(0, 0)].norm();
        (aligned - self.rho * self.delta_f * (self.n_elements as f64).sqrt() * w.norm()).max(0.0)
    }

    /// Worst-case harvest amplitude over the AP-IRS ball:
    /// max(0, ||H_bar^H w|| - delta_h ||w||).
    pub fn worst_harvest_amplitude(&self, w: &CVec) -> f64 {
        ((self.h_bar.adjoint() * w).norm() - self.delta_h * w.norm()).max(0.0)
    }

    /// Minimal nonnegative scaling c so that c*w satisfies both worst-case
    /// constraints with a strictly positive margin, or None when no scaling
    /// can (zero worst-case margin). Exact boundary scaling would leave the
    /// realized constraints at equality, where solver tolerance flips them
    /// to violations about half the time; the guard keeps them clear of it.
    pub fn min_feasible_scale(&self, w: &CVec) -> Option<f64> {
        const FEASIBILITY_GUARD: f64 = 1e-3;
        let mut c: f64 = 0.0;
        let snr_amp = self.worst_snr_amplitude(w);
        if self.gamma1 > 0.0 {
            if snr_amp <= 0.0 {
                return None;
            }
            c = c.max(self.gamma1.sqrt() / snr_amp);
        }
        let harvest_need = (self.n_elements as f64) * self.mu
            / (self.eta * (1.0 - self.rho * self.rho));
        if harvest_need > 0.0 {
            let amp = self.worst_harvest_amplitude(w);
            if amp <= 0.0 {
                return None;
            }
            c = c.max(harvest_need.sqrt() / amp);
        }
        Some(c * (1.0 + FEASIBILITY_GUARD))
    }
}

/// Recovers a beamforming vector from the covariance solution: eigenvector
/// route when W is numerically rank one, Gaussian randomization otherwise.
/// Every candidate is scaled to the minimum power satisfying both
/// worst-case constraints; the cheapest feasible candidate wins.
pub fn extract_rank_one(
    w_mat: &CMat,
    ctx: &ExtractionContext,
    rng: &mut ChaCha8Rng,
) -> Result<CVec> {
    let m = w_mat.nrows();
    let (vals, vecs) = hermitian_eigen_desc(w_mat);
    let lambda1 = vals[0].max(0.0);
    if lambda1 <= 0.0 {
        return Err(Error::ExtractionFailure);
    }
    let lambda2 = if m > 1 { vals[1].max(0.0) } else { 0.0 };
    if lambda2 / lambda1 <= 1e-6 {
        let w = vecs.column(0).into_owned().scale(lambda1.sqrt());
        // never scale below the covariance's own power
        match ctx.min_feasible_scale(&w) {
            Some(c) => return Ok(w.scale(c.max(1.0))),
            None => return Err(Error::ExtractionFailure),
        }
    }

    // Gaussian randomization: w = F z with F F^H = W, z ~ CN(0, I)
    const G: usize = 500;
    let factor = CMat::from_fn(m, m, |r, c| vecs[(r, c)] * C64::new(vals[c].max(0.0).sqrt(), 0.0));
    let mut best: Option<(f64, CVec)> = None;
    for _ in 0..G {
        let z = CVec::from_fn(m, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let cand = &factor * z;
        if cand.norm() == 0.0 {
            continue;
        }
        if let Some(c) = ctx.min_feasible_scale(&cand) {
            let scaled = cand.scale(c);
            let p = scaled.norm_squared();
            if best.as_ref().map_or(true, |(bp, _)| p < *bp) {
                best = Some((p, scaled));
            }
        }
    }
    best.map(|(_, w)| w).ok_or(Error::ExtractionFailure)
}

// ---------------------------------------------------------------------------
// target value and full pipeline
// ---------------------------------------------------------------------------

/// Mean-channel energy efficiency |(g + rho Hf_bar theta)^H w|^2 / ||w||^2.
pub fn evaluate_target_lower_bound(
    w: &CVec,
    theta: &CVec,
    rho: f64,
    g: &CVec,
    hf_bar: &CMat,
) -> Result<f64> {
    if w.norm() == 0.0 {
        return Err(Error::InvalidArgument("w must be nonzero".into()));
    }
    let g_hat = effective_channel(g, hf_bar, theta, rho)?;
    Ok((g_hat.adjoint() * w)[(0, 0)].norm_sqr() / w.norm_squared())
}

/// Full model-based pipeline for one decision: align phases, build the
/// robust constraints from the uncertainty model, solve the covariance SDP,
/// extract a rank-one beamformer, and score it on the mean channel.
///
/// Solver and extraction failures are soft outcomes recorded in `status`
/// with `y_prime = 0`; only argument errors (rho outside (0,1), dimension
/// mismatches) are returned as `Err`.
pub fn robust_beamforming(
    rho: f64,
    unc: &UncertaintyModel,
    g: &CVec,
    geo: &NetworkGeometry,
    backend: &dyn ConicBackend,
    rng: &mut ChaCha8Rng,
) -> Result<RobustBeamformingResult> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} outside (0, 1)")));
    }
    let n = unc.hf_bar.ncols();
    let failed = |theta: &CVec, status: RobustStatus| RobustBeamformingResult {
        w: CVec::zeros(g.len()),
        theta: theta.clone(),
        rho,
        transmit_power: 0.0,
        y_prime: 0.0,
        status,
        sdp_objective: f64::NAN,
    };

    let aligned = match align_phases(g, &unc.hf_bar) {
        Ok(a) => a,
        Err(Error::DegenerateChannel) => {
            return Ok(failed(&CVec::from_element(n, C64::new(1.0, 0.0)), RobustStatus::NumericalFailure))
        }
        Err(e) => return Err(e),
    };
    let alpha = 1.0 + rho * aligned.kappa;

    // fast certificates of infeasibility: no beamformer of any power can
    // have a positive worst-case margin
    let s = g.norm();
    let snr_ceiling = alpha * s - rho * unc.delta_f * (n as f64).sqrt();
    if snr_ceiling <= 0.0 {
        return Ok(failed(&aligned.theta, RobustStatus::Infeasible));
    }
    if geo.mu > 0.0 {
        let sigma_max = unc
            .h_bar
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        if sigma_max <= unc.delta_h {
            return Ok(failed(&aligned.theta, RobustStatus::Infeasible));
        }
    }

    // solve in channel-normalized units: g_s = g/s has unit norm and the
    // covariance scales as W_s = s^2 W, leaving gamma1 and mu unchanged
    let g_s = g.scale(1.0 / s);
    let h_s = unc.h_bar.scale(1.0 / s);
    let df_s = unc.delta_f / s;
    let dh_s = unc.delta_h / s;

    let snr_full = build_snr_lmi(&aligned.theta, rho, &g_s, aligned.kappa, geo.gamma1, df_s)?;
    let snr_red = build_snr_lmi_reduced(n, rho, &g_s, aligned.kappa, geo.gamma1, df_s)?;
    let energy = build_energy_lmi(&h_s, rho, dh_s, geo.eta, geo.mu, n)?;
    let energy_red = build_energy_lmi_reduced(&h_s, rho, dh_s, geo.eta, geo.mu, n)?;
    let sdp = solve_power_min_sdp_with(&snr_full, &snr_red, &energy, &energy_red, g.len(), backend);
    match sdp.status {
        SolveStatus::Infeasible => return Ok(failed(&aligned.theta, RobustStatus::Infeasible)),
        SolveStatus::NumericalFailure => {
            return Ok(failed(&aligned.theta, RobustStatus::NumericalFailure))
        }
        SolveStatus::Optimal => {}
    }

    let ctx = ExtractionContext {
        g: g_s.clone(),
        h_bar: h_s.clone(),
        rho,
        alpha,
        gamma1: geo.gamma1,
        delta_f: df_s,
        delta_h: dh_s,
        eta: geo.eta,
        mu: geo.mu,
        n_elements: n,
    };
    let w_s = match extract_rank_one(&sdp.w_mat, &ctx, rng) {
        Ok(w) => w,
        Err(Error::ExtractionFailure) => {
            return Ok(failed(&aligned.theta, RobustStatus::ExtractionFailure))
        }
        Err(e) => return Err(e),
    };
    // undo the channel normalization: w = w_s / s
    let w = w_s.scale(1.0 / s);
    let y_prime = evaluate_target_lower_bound(&w, &aligned.theta, rho, g, &unc.hf_bar)?;
    Ok(RobustBeamformingResult {
        transmit_power: w.norm_squared(),
        w,
        theta: aligned.theta,
        rho,
        y_prime,
        status: RobustStatus::Optimal,
        sdp_objective: sdp.objective / (s * s),
    })
}

/// Writes the given blocks as JSON (`[{name, dim, entries}]` with complex
/// entries encoded as `[re, im]` pairs) for cross-validation against an
/// external solver.
pub fn dump_lmi_blocks(blocks: &[(&str, CMat)], path: &std::path::Path) -> Result<()> {
    let mut out = Vec::new();
    for (name, m) in blocks {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect();
        out.push(serde_json::json!({
            "name": name,
            "dim": m.nrows(),
            "entries": rows,
        }));
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&out)?)?;
    Ok(())
}
