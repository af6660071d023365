//! Reference optima computed without the fixed-point machinery.
//!
//! Single relay: the quantization noise is a scalar `q`. For fixed `q` the
//! cheapest SINR-feasible powers solve a linear system, the objective grows
//! with `q`, and the fronthaul constraint holds from some threshold on, so
//! a log-spaced grid over `q` (refined around the first feasible point)
//! brackets the optimum. Two or more relays: the semidefinite relaxation
//! over beam covariances and `Q` is solved by a generic interior-point
//! method, whose duality bound gives the bracket.

use thiserror::Error;

use super::barrier::{BarrierOptions, LmiBlock, LmiOutcome, LmiProblem};
use crate::linalg::HermitianMatrix;
use crate::model::ProblemInstance;
use num_complex::Complex64;

/// Interval known to contain the optimal total power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Whether `x` lies in the bracket widened by `rel` on both sides.
    pub fn contains_rel(&self, x: f64, rel: f64) -> bool {
        x >= self.lower * (1.0 - rel) && x <= self.upper * (1.0 + rel)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no feasible point found on the search grid")]
    InfeasibleOnGrid,
    #[error("reference solver failed: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub points: usize,
    pub refinements: usize,
    /// Search range for `q`, relative to `sigma2`.
    pub q_min: f64,
    pub q_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 2001,
            refinements: 2,
            q_min: 1e-10,
            q_max: 1e10,
        }
    }
}

pub fn brute_force_oracle(inst: &ProblemInstance) -> Result<Bracket, OracleError> {
    if inst.relays() == 1 {
        scalar_grid(inst, &GridSpec::default())
    } else {
        relaxation(inst, &BarrierOptions::default())
    }
}

/// Minimal powers meeting every SINR target with equality for a single
/// relay and quantization noise `q`; `None` if the targets are unreachable.
fn min_powers(inst: &ProblemInstance, q: f64) -> Option<Vec<f64>> {
    let k = inst.users();
    let gains: Vec<f64> = inst.channels.iter().map(|h| h[0].norm_sqr()).collect();
    // p_k / gamma_k - sum_{j != k} p_j = q + sigma2 / g_k
    let mut a = vec![vec![-1.0; k + 1]; k];
    for i in 0..k {
        a[i][i] = 1.0 / inst.sinr_targets[i];
        a[i][k] = q + inst.sigma2 / gains[i];
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        a.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            return None;
        }
        for row in 0..k {
            if row != col {
                let f = a[row][col] / d;
                for c in col..=k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let p: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    p.iter().all(|&x| x > 0.0 && x.is_finite()).then_some(p)
}

fn scalar_grid(inst: &ProblemInstance, grid: &GridSpec) -> Result<Bracket, OracleError> {
    let eta = inst.eta(0);
    let feasible = |q: f64| min_powers(inst, q).filter(|p| p.iter().sum::<f64>() <= (eta - 1.0) * q);
    let objective = |q: f64| min_powers(inst, q).map(|p| p.iter().sum::<f64>() + q);

    let (lo_q, hi_q) = (grid.q_min * inst.sigma2, grid.q_max * inst.sigma2);
    let ratio = (hi_q / lo_q).powf(1.0 / (grid.points - 1) as f64);
    let qs: Vec<f64> = (0..grid.points).map(|i| lo_q * ratio.powi(i as i32)).collect();
    let first = qs.iter().position(|&q| feasible(q).is_some()).ok_or(OracleError::InfeasibleOnGrid)?;
    let (mut lo, mut hi) = if first == 0 { (0.0, qs[0]) } else { (qs[first - 1], qs[first]) };

    for _ in 0..grid.refinements {
        let step = (hi - lo) / (grid.points - 1) as f64;
        let idx = (1..grid.points)
            .find(|&i| feasible(lo + step * i as f64).is_some())
            .unwrap_or(grid.points - 1);
        let new_hi = if idx == grid.points - 1 { hi } else { lo + step * idx as f64 };
        lo += step * (idx - 1) as f64;
        hi = new_hi;
    }
    // The objective increases with q and the feasible set of q is [q*, inf).
    let upper = objective(hi).ok_or(OracleError::InfeasibleOnGrid)?;
    let lower = objective(lo).ok_or(OracleError::InfeasibleOnGrid)?;
    Ok(Bracket { lower, upper })
}

/// Real coordinates of an `n x n` Hermitian matrix: diagonal entries, then
/// real and imaginary parts of each strictly lower entry.
fn hermitian_basis(n: usize) -> Vec<HermitianMatrix> {
    let mut basis = Vec::with_capacity(n * n);
    for d in 0..n {
        basis.push(HermitianMatrix::from_lower_fn(n, |i, j| {
            Complex64::new(if i == d && j == d { 1.0 } else { 0.0 }, 0.0)
        }));
    }
    for r in 0..n {
        for c in 0..r {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                basis.push(HermitianMatrix::from_lower_fn(n, |i, j| {
                    if i == r && j == c {
                        unit
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    basis
}

fn relaxation(inst: &ProblemInstance, opts: &BarrierOptions) -> Result<Bracket, OracleError> {
    let n = inst.relays();
    let users = inst.users();
    let basis = hermitian_basis(n);
    let per = basis.len();
    let vars = (users + 1) * per;
    let zero = |d: usize| HermitianMatrix::zeros(d);
    let scalar = |v: f64| HermitianMatrix::from_diag(&[v]);

    let mut cost = vec![0.0; vars];
    for blk in 0..=users {
        for d in 0..n {
            cost[blk * per + d] = 1.0;
        }
    }
    let mut blocks = Vec::new();

    // SINR: V_k . H_k - gamma_k (sum_{j != k} V_j . H_k + Q . H_k + sigma2) >= 0
    for k in 0..users {
        let h = inst.channel_gram(k);
        let gamma = inst.sinr_targets[k];
        let mut coeffs = vec![scalar(0.0); vars];
        for blk in 0..=users {
            let w = if blk == k { 1.0 } else { -gamma };
            for (e, b) in basis.iter().enumerate() {
                coeffs[blk * per + e] = scalar(w * b.inner(&h));
            }
        }
        blocks.push(LmiBlock {
            constant: scalar(-gamma * inst.sigma2),
            coeffs,
        });
    }

    // Fronthaul: eta_m Q[m:, m:] - (sum_k V_k + Q)[m, m] e1 e1^T >= 0
    for m in 0..n {
        let d = n - m;
        let eta = inst.eta(m);
        let mut coeffs = vec![zero(d); vars];
        for blk in 0..=users {
            for (e, b) in basis.iter().enumerate() {
                let mut c = if blk == users { b.trailing(m).scaled(eta) } else { zero(d) };
                c.add_diag(0, -b.diag(m));
                coeffs[blk * per + e] = c;
            }
        }
        blocks.push(LmiBlock { constant: zero(d), coeffs });
    }

    // V_k >= 0 and Q >= 0
    for blk in 0..=users {
        let mut coeffs = vec![zero(n); vars];
        for (e, b) in basis.iter().enumerate() {
            coeffs[blk * per + e] = b.clone();
        }
        blocks.push(LmiBlock { constant: zero(n), coeffs });
    }

    match (LmiProblem { cost, blocks }).solve(opts).map_err(OracleError::Numerical)? {
        LmiOutcome::Infeasible => Err(OracleError::InfeasibleOnGrid),
        LmiOutcome::Optimal { lower, upper, .. } => Ok(Bracket { lower, upper }),
    }
}
