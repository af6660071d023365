//! Dual side of the optimality system.
//!
//! Given SINR multipliers `beta`, the fronthaul multipliers `Lambda_m` are
//! recovered in closed form by forcing `D(beta, Lambda) = 0` under the
//! zero-prefix rank-one structure `Lambda_m = lambda_m lambda_m^†`. Each
//! `beta_k` is then refreshed as the unique value that makes
//! `C_k - beta_k H_k` singular, `beta_k = 1 / (h_k^† C_k^{-1} h_k)`.
//! Iterating this map from zero converges monotonically to the dual optimum
//! whenever the problem is feasible and diverges otherwise.

use num_complex::Complex64;

use crate::error::SolverError;
use crate::linalg::{self, cholesky, CVector, HermitianMatrix, Tolerances};
use crate::model::{real, DualSolution, ProblemInstance};

/// Stopping rules shared by the dual and primal fixed-point loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative sup-norm change between iterates that counts as converged.
    pub tol: f64,
    pub max_iters: usize,
    /// Any dual iterate above this value is taken as divergence.
    pub divergence_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 10_000,
            divergence_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationStatus {
    Converged,
    MaxIterations,
    Diverged,
}

/// One step of a fixed-point loop, as handed to trace observers.
#[derive(Debug, Clone, Copy)]
pub struct IterationTrace<'a> {
    pub iteration: usize,
    pub values: &'a [f64],
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualIterationState {
    pub beta: Vec<f64>,
    pub iteration: usize,
    /// Sup-norm of the last change in `beta`.
    pub residual: f64,
    pub status: IterationStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub solution: DualSolution,
    pub state: DualIterationState,
}

/// `Gamma = I + sum_k beta_k gamma_k H_k`.
pub fn build_gamma(inst: &ProblemInstance, beta: &[f64]) -> HermitianMatrix {
    let mut g = HermitianMatrix::identity(inst.relays());
    for (k, h) in inst.channels.iter().enumerate() {
        let w = beta[k] * inst.sinr_targets[k];
        if w != 0.0 {
            g.add_outer(w, h);
        }
    }
    g
}

/// Multipliers `{lambda_m}` with `D(beta, Lambda) = 0` for the given `beta`.
pub fn recover_lambdas(inst: &ProblemInstance, beta: &[f64]) -> Result<Vec<CVector>, SolverError> {
    lambdas_from_gamma(&build_gamma(inst, beta), &inst.etas())
}

/// Peels `Gamma = sum_m (eta_m Lambda_m - Lambda_m^{(m,m)} E_m)` one relay at
/// a time. Row `m` of the current residual block fixes the top row of
/// `Lambda_m`; rank one fixes the rest; the contribution of `Lambda_m` is then
/// removed from the trailing block.
pub fn lambdas_from_gamma(gamma: &HermitianMatrix, etas: &[f64]) -> Result<Vec<CVector>, SolverError> {
    let n = gamma.dim();
    assert_eq!(etas.len(), n);
    let max_diag = (0..n).map(|i| gamma.diag(i)).fold(0.0, f64::max);
    let floor = Tolerances::pivot_floor(n, max_diag);
    let mut residual = gamma.clone();
    let mut lambdas = Vec::with_capacity(n);
    for (m, &eta) in etas.iter().enumerate() {
        let pivot = residual.diag(0);
        if !(pivot > floor && pivot > 0.0) {
            return Err(SolverError::NonPositivePivot { relay: m, pivot });
        }
        let lead = pivot / (eta - 1.0);
        let root = lead.sqrt();
        let mut lambda = vec![Complex64::new(0.0, 0.0); n];
        lambda[m] = real(root);
        for j in 1..residual.dim() {
            // Lambda^{(m, m+j)} = lambda_m conj(lambda_{m+j}).
            lambda[m + j] = (residual.get(0, j) / eta).conj() / root;
        }
        let mut next = residual.trailing(1);
        next.add_outer(-eta, &lambda[m + 1..]);
        residual = next;
        lambdas.push(lambda);
    }
    Ok(lambdas)
}

/// `C_k = I + sum_{j != k} beta_j gamma_j H_j + sum_m Lambda_m^{(m,m)} E_m`.
pub fn build_c(inst: &ProblemInstance, beta: &[f64], lambdas: &[CVector], k: usize) -> HermitianMatrix {
    let mut c = HermitianMatrix::identity(inst.relays());
    for (j, h) in inst.channels.iter().enumerate() {
        let w = beta[j] * inst.sinr_targets[j];
        if j != k && w != 0.0 {
            c.add_outer(w, h);
        }
    }
    for (m, lambda) in lambdas.iter().enumerate() {
        c.add_diag(m, lambda[m].norm_sqr());
    }
    c
}

/// The dual slack matrix
/// `D = I - sum_m eta_m Lambda_m + sum_k beta_k gamma_k H_k + sum_m Lambda_m^{(m,m)} E_m`,
/// using that `Lambda_m` vanishes outside its trailing block.
pub fn d_matrix(inst: &ProblemInstance, beta: &[f64], lambdas: &[CVector]) -> HermitianMatrix {
    let mut d = build_gamma(inst, beta);
    for (m, lambda) in lambdas.iter().enumerate() {
        d.add_outer(-inst.eta(m), lambda);
        d.add_diag(m, lambda[m].norm_sqr());
    }
    d
}

/// The dual update `I(beta)`.
pub fn beta_map(inst: &ProblemInstance, beta: &[f64]) -> Result<Vec<f64>, SolverError> {
    let lambdas = recover_lambdas(inst, beta)?;
    (0..inst.users())
        .map(|k| {
            let c = build_c(inst, beta, &lambdas, k);
            let h = &inst.channels[k];
            let x = cholesky(&c)?.solve(h)?;
            let q = linalg::inner(h, &x).re;
            Ok(1.0 / q)
        })
        .collect()
}

pub fn solve_dual(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<DualOutcome, SolverError> {
    solve_dual_with(inst, cfg, None, &mut |_| {})
}

/// Runs `beta <- I(beta)` from `start` (zero by default), reporting every
/// iterate to `observer`.
///
/// Divergence past `cfg.divergence_bound` is reported as infeasibility, as is
/// running out of iterations while the step size has stopped shrinking.
pub fn solve_dual_with(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
    observer: &mut dyn FnMut(&IterationTrace<'_>),
) -> Result<DualOutcome, SolverError> {
    let k = inst.users();
    let mut beta = match start {
        Some(b) => {
            assert_eq!(b.len(), k);
            b.to_vec()
        }
        None => vec![0.0; k],
    };
    let mut residual = f64::INFINITY;
    let mut midpoint_residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iters {
        let next = beta_map(inst, &beta)?;
        residual = sup_distance(&next, &beta);
        let max_beta = next.iter().copied().fold(0.0, f64::max);
        observer(&IterationTrace {
            iteration,
            values: &next,
            residual,
        });
        if !max_beta.is_finite() || max_beta > cfg.divergence_bound {
            return Err(SolverError::Infeasible { iterations: iteration, max_beta });
        }
        beta = next;
        if residual <= cfg.tol * max_beta {
            let lambdas = recover_lambdas(inst, &beta)?;
            return Ok(DualOutcome {
                solution: DualSolution {
                    beta: beta.clone(),
                    lambdas,
                },
                state: DualIterationState {
                    beta,
                    iteration,
                    residual,
                    status: IterationStatus::Converged,
                },
            });
        }
        if iteration == cfg.max_iters / 2 {
            midpoint_residual = residual;
        }
    }
    // A convergent iteration shrinks its step geometrically; a step that has
    // not even halved over the second half of the budget is divergence.
    if residual > 0.5 * midpoint_residual {
        Err(SolverError::Infeasible {
            iterations: cfg.max_iters,
            max_beta: beta.iter().copied().fold(0.0, f64::max),
        })
    } else {
        Err(SolverError::MaxIterations {
            stage: crate::error::Stage::Dual,
            iterations: cfg.max_iters,
            residual,
        })
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
