//! Conic backend for linear objectives over Hermitian LMI constraints.
//!
//! The problems produced by the robust beamforming pipeline have very few
//! scalar variables (M^2 + 2) against large PSD blocks ((MN+1) x (MN+1)
//! complex), so the backend is a log-det barrier interior-point method that
//! works on the Hermitian blocks directly instead of embedding them into a
//! real symmetric form. Coefficient matrices are kept sparse; the per-step
//! cost is one dense inverse per block plus sparse trace contractions for
//! the Newton system.

use crate::linalg::{
    cholesky_inverse, cholesky_logdet, hermitian_cholesky, hermitian_min_eig, real_cholesky,
    real_cholesky_solve, C64, CMat,
};
use nalgebra::{DMatrix, DVector};

/// Sparse Hermitian coefficient matrix. `entries` lists every nonzero
/// (row, col, value) including both triangles.
#[derive(Debug, Clone)]
pub struct SparseHermitian {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn zero(dim: usize) -> Self {
        SparseHermitian { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        SparseHermitian {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        SparseHermitian {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(s, 0.0))).collect(),
        }
    }

    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)].norm() > tol {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        SparseHermitian { dim: m.nrows(), entries }
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            out[(r, c)] += v;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        SparseHermitian {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }
}

/// One affine Hermitian LMI constraint `F0 + sum_i x_i F_i >= 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub name: String,
    pub dim: usize,
    pub constant: CMat,
    pub coeffs: Vec<SparseHermitian>,
}

impl LmiBlock {
    /// Evaluates the block at the given variable vector.
    pub fn eval(&self, x: &[f64]) -> CMat {
        assert_eq!(x.len(), self.coeffs.len());
        let mut out = self.constant.clone();
        for (xi, fi) in x.iter().zip(&self.coeffs) {
            if *xi == 0.0 {
                continue;
            }
            for &(r, c, v) in &fi.entries {
                out[(r, c)] += v * *xi;
            }
        }
        out
    }

    /// Smallest eigenvalue of the block at `x`.
    pub fn min_eig(&self, x: &[f64]) -> f64 {
        hermitian_min_eig(&self.eval(x))
    }
}

/// `min c^T x  s.t.  F_b(x) >= 0 for every block`.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    /// Per-variable magnitude hints; the solver substitutes x_i = scale_i * y_i
    /// to equilibrate the Newton system. Use 1.0 when unsure.
    pub var_scale: Vec<f64>,
    /// Optional starting point (need not be feasible).
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub newton_steps: usize,
}

/// Interface the optimizer pipeline programs against; implementations must
/// be safe to run concurrently on separate instances.
pub trait ConicBackend {
    fn solve(&self, problem: &ConicProblem) -> ConicSolution;
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    /// Target duality-gap bound nu/t relative to max(1, |objective|).
    pub rel_gap: f64,
    pub t0: f64,
    pub mu: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { rel_gap: 1e-9, t0: 1.0, mu: 20.0, max_outer: 40, max_inner: 60 }
    }
}

/// Log-det barrier path-following solver with a big-M phase-I stage.
#[derive(Debug, Clone, Default)]
pub struct BarrierSolver {
    pub opts: BarrierOptions,
}

struct Workspace {
    blocks: Vec<LmiBlock>,
    n: usize,
}

impl Workspace {
    fn all_pd(&self, x: &[f64]) -> bool {
        self.blocks
            .iter()
            .all(|b| hermitian_cholesky(&b.eval(x)).is_some())
    }

    fn barrier_value(&self, x: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for b in &self.blocks {
            let l = hermitian_cholesky(&b.eval(x))?;
            total -= cholesky_logdet(&l);
        }
        Some(total)
    }

    /// Gradient and Hessian of the barrier at `x`. Returns None when some
    /// block is not positive definite.
    fn barrier_derivs(&self, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n;
        let mut grad = DVector::<f64>::zeros(n);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for b in &self.blocks {
            let l = hermitian_cholesky(&b.eval(x))?;
            let inv = cholesky_inverse(&l);
            let d = b.dim;
            // grad_i = -tr(F^-1 F_i); hess_ij = tr((F^-1 F_i)(F^-1 F_j)).
            // Precomputing A_i = F^-1 F_i keeps the pair loop at O(d^2)
            // instead of O(nnz_i * nnz_j).
            let mut a_mats: Vec<(usize, CMat)> = Vec::new();
            for i in 0..n {
                let fi = &b.coeffs[i];
                if fi.entries.is_empty() {
                    continue;
                }
                let mut a = CMat::zeros(d, d);
                let mut tr = 0.0;
                for &(r, c, v) in &fi.entries {
                    tr += (inv[(c, r)] * v).re;
                    // A += inv * e_r v e_c^T: adds v * inv[:, r] to column c
                    for p in 0..d {
                        a[(p, c)] += inv[(p, r)] * v;
                    }
                }
                grad[i] -= tr;
                a_mats.push((i, a));
            }
            for (ii, (i, ai)) in a_mats.iter().enumerate() {
                for (j, aj) in &a_mats[ii..] {
                    // tr(A_i A_j) = sum_{r,c} A_i[r,c] * A_j[c,r]
                    let mut h = 0.0;
                    for r in 0..d {
                        for c in 0..d {
                            h += (ai[(r, c)] * aj[(c, r)]).re;
                        }
                    }
                    hess[(*i, *j)] += h;
                    if j != i {
                        hess[(*j, *i)] += h;
                    }
                }
            }
        }
        Some((grad, hess))
    }
}

struct InnerResult {
    steps: usize,
}

/// Damped Newton minimization of t * c^T x + barrier(x) from a strictly
/// feasible start. `stop_early` allows phase I to bail out as soon as the
/// iterate is good enough.
fn newton_minimize(
    ws: &Workspace,
    c: &DVector<f64>,
    t: f64,
    x: &mut Vec<f64>,
    max_inner: usize,
    mut stop_early: impl FnMut(&[f64]) -> bool,
) -> Option<InnerResult> {
    let mut steps = 0;
    // merit at the current iterate, carried across iterations so the line
    // search only evaluates candidate points
    let mut merit0 = t * c.dot(&DVector::from_column_slice(x)) + ws.barrier_value(x)?;
    for _ in 0..max_inner {
        if stop_early(x) {
            return Some(InnerResult { steps });
        }
        let (bgrad, mut bhess) = ws.barrier_derivs(x)?;
        let grad = c.scale(t) + bgrad;
        // small ridge keeps the factorization alive on nearly flat directions
        let ridge = 1e-12 * (1.0 + bhess.diagonal().amax());
        for i in 0..ws.n {
            bhess[(i, i)] += ridge;
        }
        let lh = match real_cholesky(&bhess) {
            Some(l) => l,
            None => return Some(InnerResult { steps }),
        };
        let dir = real_cholesky_solve(&lh, &(-&grad));
        let decrement = -grad.dot(&dir);
        if decrement <= 2e-11 {
            return Some(InnerResult { steps });
        }
        // backtracking line search on the merit function; barrier_value
        // returns None outside the cone, doubling as the feasibility check
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..48 {
            let cand: Vec<f64> = x.iter().zip(dir.iter()).map(|(xi, di)| xi + step * di).collect();
            if let Some(bv) = ws.barrier_value(&cand) {
                let merit = t * c.dot(&DVector::from_column_slice(&cand)) + bv;
                if merit <= merit0 - 0.01 * step * decrement {
                    *x = cand;
                    merit0 = merit;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        steps += 1;
        if !accepted {
            return Some(InnerResult { steps });
        }
    }
    Some(InnerResult { steps })
}

impl ConicBackend for BarrierSolver {
    fn solve(&self, problem: &ConicProblem) -> ConicSolution {
        let n = problem.n_vars;
        assert_eq!(problem.objective.len(), n);
        assert_eq!(problem.var_scale.len(), n);

        // substitute x = S y
        let scale = &problem.var_scale;
        let scaled_blocks: Vec<LmiBlock> = problem
            .blocks
            .iter()
            .map(|b| LmiBlock {
                name: b.name.clone(),
                dim: b.dim,
                constant: b.constant.clone(),
                coeffs: b
                    .coeffs
                    .iter()
                    .zip(scale)
                    .map(|(f, &s)| f.scale(s))
                    .collect(),
            })
            .collect();
        let c_scaled = DVector::from_iterator(
            n,
            problem.objective.iter().zip(scale).map(|(c, s)| c * s),
        );

        let mut y: Vec<f64> = match &problem.initial {
            Some(x0) => x0.iter().zip(scale).map(|(x, s)| x / s).collect(),
            None => vec![0.0; n],
        };

        let mut newton_steps = 0usize;

        // ---- phase I: minimize the uniform shift s over F_b(y) + s I > 0
        let block_norms: Vec<f64> = scaled_blocks
            .iter()
            .map(|b| {
                let base = b.constant.iter().map(|z| z.norm()).fold(0.0, f64::max);
                b.coeffs
                    .iter()
                    .map(|f| f.max_abs())
                    .fold(base, f64::max)
                    .max(1e-12)
            })
            .collect();
        let s0 = {
            let worst = scaled_blocks
                .iter()
                .map(|b| -b.min_eig(&y))
                .fold(f64::NEG_INFINITY, f64::max);
            let pad = 1e-3 * (1.0 + block_norms.iter().fold(0.0f64, |a, &b| a.max(b)));
            worst.max(0.0) * 1.1 + pad
        };
        let phase1_ws = Workspace {
            n: n + 1,
            blocks: scaled_blocks
                .iter()
                .map(|b| LmiBlock {
                    name: b.name.clone(),
                    dim: b.dim,
                    constant: b.constant.clone(),
                    coeffs: {
                        let mut cs = b.coeffs.clone();
                        cs.push(SparseHermitian::identity(b.dim));
                        cs
                    },
                })
                .collect(),
        };
        let mut z: Vec<f64> = y.iter().copied().chain(std::iter::once(s0)).collect();
        let c1 = DVector::from_fn(n + 1, |i, _| if i == n { 1.0 } else { 0.0 });
        let target = -1e-4 * (1.0 + s0.abs());
        let mut t = self.opts.t0;
        let mut feasible = false;
        for _ in 0..self.opts.max_outer {
            let res = match newton_minimize(&phase1_ws, &c1, t, &mut z, self.opts.max_inner, |zz| {
                zz[n] <= target
            }) {
                Some(r) => r,
                None => {
                    return ConicSolution {
                        x: vec![0.0; n],
                        objective: f64::NAN,
                        status: SolveStatus::NumericalFailure,
                        newton_steps,
                    }
                }
            };
            newton_steps += res.steps;
            if z[n] <= target {
                feasible = true;
                break;
            }
            if (n as f64 + 1.0 + phase1_ws.blocks.iter().map(|b| b.dim as f64).sum::<f64>()) / t
                < 1e-9 * (1.0 + s0.abs())
            {
                break;
            }
            t *= self.opts.mu;
        }
        if !feasible {
            // accept a barely interior point; otherwise the problem is
            // (numerically) infeasible
            let barely = -1e-9 * (1.0 + s0.abs());
            if z[n] <= barely {
                feasible = true;
            }
        }
        if !feasible {
            return ConicSolution {
                x: vec![0.0; n],
                objective: f64::NAN,
                status: SolveStatus::Infeasible,
                newton_steps,
            };
        }
        y.copy_from_slice(&z[..n]);

        // ---- phase II: path following on the real objective
        let ws = Workspace { n, blocks: scaled_blocks };
        if !ws.all_pd(&y) {
            return ConicSolution {
                x: vec![0.0; n],
                objective: f64::NAN,
                status: SolveStatus::NumericalFailure,
                newton_steps,
            };
        }
        let nu: f64 = ws.blocks.iter().map(|b| b.dim as f64).sum();
        let mut t = self.opts.t0;
        for _ in 0..self.opts.max_outer {
            let res = match newton_minimize(&ws, &c_scaled, t, &mut y, self.opts.max_inner, |_| false)
            {
                Some(r) => r,
                None => {
                    return ConicSolution {
                        x: vec![0.0; n],
                        objective: f64::NAN,
                        status: SolveStatus::NumericalFailure,
                        newton_steps,
                    }
                }
            };
            newton_steps += res.steps;
            let obj = c_scaled.dot(&DVector::from_column_slice(&y));
            if nu / t <= self.opts.rel_gap * obj.abs().max(1.0) {
                break;
            }
            t *= self.opts.mu;
        }

        let x: Vec<f64> = y.iter().zip(scale).map(|(yi, s)| yi * s).collect();
        let objective = problem
            .objective
            .iter()
            .zip(&x)
            .map(|(c, xi)| c * xi)
            .sum();
        ConicSolution { x, objective, status: SolveStatus::Optimal, newton_steps }
    }
}
