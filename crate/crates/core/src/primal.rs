//! Primal recovery from a converged dual solution.
//!
//! Beam directions follow in closed form from the kernel of `C_k - beta_k H_k`.
//! Powers are the fixed point of `p <- J(p)`, where `J` first rebuilds the
//! quantization covariance `Q(p)` from `B_m lambda_m = 0` by back-substitution
//! over relays `M..1` and then meets every SINR target with equality.

use num_complex::Complex64;

use crate::dual::{build_c, sup_distance, IterationTrace, SolverConfig};
use crate::error::{SolverError, Stage};
use crate::linalg::{self, cholesky, CVector, ComplexMatrix, HermitianMatrix};
use crate::model::{DualSolution, PrimalSolution, ProblemInstance};

/// `v_k = C_k^{-1} h_k / ||C_k^{-1} h_k||`, rotated so that `h_k^† v_k` is
/// real and nonnegative.
pub fn beam_directions(inst: &ProblemInstance, dual: &DualSolution) -> Result<Vec<CVector>, SolverError> {
    (0..inst.users())
        .map(|k| {
            let c = build_c(inst, &dual.beta, &dual.lambdas, k);
            let h = &inst.channels[k];
            let x = cholesky(&c)?.solve(h)?;
            let n = linalg::norm(&x);
            if !(n > 1e-14 * linalg::norm(h)) {
                return Err(SolverError::NumericalFailure(format!(
                    "user {k}: C_k^-1 h_k vanishes (norm {n:e})"
                )));
            }
            let proj = linalg::inner(h, &x);
            let phase = if proj.norm() > 0.0 {
                proj.conj() / proj.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            Ok(x.iter().map(|z| z * phase / n).collect())
        })
        .collect()
}

/// Precomputed pieces of the power map for fixed directions.
struct PowerMap<'a> {
    inst: &'a ProblemInstance,
    dual: &'a DualSolution,
    /// `gains[k][j] = |h_k^† v_j|^2`.
    gains: Vec<Vec<f64>>,
    /// `relay_weights[k][m] = |v_{k,m}|^2`.
    relay_weights: Vec<Vec<f64>>,
}

impl<'a> PowerMap<'a> {
    fn new(inst: &'a ProblemInstance, dual: &'a DualSolution, directions: &[CVector]) -> Result<Self, SolverError> {
        let k = inst.users();
        let gains: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                directions
                    .iter()
                    .map(|v| linalg::inner(&inst.channels[i], v).norm_sqr())
                    .collect()
            })
            .collect();
        for (i, g) in gains.iter().enumerate() {
            let floor = 1e-14 * linalg::norm(&inst.channels[i]).powi(2);
            if !(g[i] > floor) {
                return Err(SolverError::OrthogonalBeam { user: i });
            }
        }
        let relay_weights = directions
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).collect())
            .collect();
        Ok(Self {
            inst,
            dual,
            gains,
            relay_weights,
        })
    }

    fn relay_power(&self, p: &[f64], m: usize) -> f64 {
        p.iter().zip(&self.relay_weights).map(|(pk, w)| pk * w[m]).sum()
    }

    fn covariance(&self, p: &[f64]) -> Result<HermitianMatrix, SolverError> {
        let n = self.inst.relays();
        let mut q = ComplexMatrix::zeros(n, n);
        for m in (0..n).rev() {
            let mu = &self.dual.lambdas[m];
            let lead = mu[m].re;
            let mu_scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !(lead > 1e-14 * mu_scale.max(f64::MIN_POSITIVE)) || mu[m].im != 0.0 {
                return Err(SolverError::DegenerateMultiplier { relay: m });
            }
            // Rows j > m of eta_m Q^{(m:,m:)} mu = t_m mu^{(1)} e_1 fix column m.
            for j in m + 1..n {
                let s: Complex64 = (m + 1..n).map(|l| q[(j, l)] * mu[l]).sum();
                q[(j, m)] = -s / lead;
                q[(m, j)] = q[(j, m)].conj();
            }
            // Row m then fixes the diagonal entry.
            let terms: Vec<Complex64> = (m + 1..n).map(|l| q[(m, l)] * mu[l]).collect();
            let coupling: Complex64 = terms.iter().sum();
            let magnitude: f64 = terms.iter().map(|z| z.norm()).sum();
            if coupling.im.abs() > 1e-9 * (1.0 + coupling.re.abs() + magnitude) {
                return Err(SolverError::NonHermitianResidual {
                    relay: m,
                    imag: coupling.im,
                });
            }
            let eta = self.inst.eta(m);
            let diag = (self.relay_power(p, m) - eta * coupling.re / lead) / (eta - 1.0);
            q[(m, m)] = Complex64::new(diag, 0.0);
        }
        Ok(HermitianMatrix::from_lower(&q).expect("square"))
    }

    fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, HermitianMatrix), SolverError> {
        let q = self.covariance(p)?;
        let inst = self.inst;
        let next = (0..inst.users())
            .map(|k| {
                let interference: f64 = (0..inst.users())
                    .filter(|&j| j != k)
                    .map(|j| p[j] * self.gains[k][j])
                    .sum();
                let quant = linalg::quadratic_form(&q, &inst.channels[k])?;
                Ok(inst.sinr_targets[k] * (interference + quant + inst.sigma2) / self.gains[k][k])
            })
            .collect::<Result<Vec<f64>, SolverError>>()?;
        Ok((next, q))
    }
}

/// `Q(p)` solving `B_m lambda_m = 0` for every relay, from the last relay back
/// to the first.
pub fn recover_q(
    inst: &ProblemInstance,
    dual: &DualSolution,
    directions: &[CVector],
    p: &[f64],
) -> Result<HermitianMatrix, SolverError> {
    PowerMap::new(inst, dual, directions)?.covariance(p)
}

/// The primal update `J(p)`: powers that meet every SINR target with
/// equality given the interference and `Q(p)` produced by `p`.
pub fn power_map(
    inst: &ProblemInstance,
    dual: &DualSolution,
    directions: &[CVector],
    p: &[f64],
) -> Result<Vec<f64>, SolverError> {
    Ok(PowerMap::new(inst, dual, directions)?.apply(p)?.0)
}

/// `B_m = eta_m [0 0; 0 Q^{(m:,m:)}] - (sum_k V_k + Q)^{(m,m)} E_m`.
pub fn b_matrix(inst: &ProblemInstance, sol: &PrimalSolution, m: usize) -> HermitianMatrix {
    let n = inst.relays();
    let eta = inst.eta(m);
    let mut b = HermitianMatrix::from_lower_fn(n, |i, j| {
        if i >= m && j >= m {
            sol.q.get(i, j) * eta
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    b.add_diag(m, -(sol.relay_signal_power(m) + sol.q.diag(m)));
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalOutcome {
    pub solution: PrimalSolution,
    pub iterations: usize,
    pub residual: f64,
}

pub fn solve_primal(
    inst: &ProblemInstance,
    dual: &DualSolution,
    cfg: &SolverConfig,
) -> Result<PrimalOutcome, SolverError> {
    solve_primal_with(inst, dual, cfg, &mut |_| {})
}

/// Runs `p <- J(p)` from zero with the same stopping rule as the dual loop.
pub fn solve_primal_with(
    inst: &ProblemInstance,
    dual: &DualSolution,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationTrace<'_>),
) -> Result<PrimalOutcome, SolverError> {
    let directions = beam_directions(inst, dual)?;
    let map = PowerMap::new(inst, dual, &directions)?;
    let mut p = vec![0.0; inst.users()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iters {
        let (next, _) = map.apply(&p)?;
        residual = sup_distance(&next, &p);
        let max_p = next.iter().copied().fold(0.0, f64::max);
        observer(&IterationTrace {
            iteration,
            values: &next,
            residual,
        });
        if !max_p.is_finite() || max_p > cfg.divergence_bound {
            return Err(SolverError::NumericalFailure(format!(
                "primal powers diverged ({max_p:e}) after {iteration} iterations"
            )));
        }
        p = next;
        if residual <= cfg.tol * max_p {
            let q = map.covariance(&p)?;
            return Ok(PrimalOutcome {
                solution: PrimalSolution {
                    directions,
                    powers: p,
                    q,
                },
                iterations: iteration,
                residual,
            });
        }
    }
    Err(SolverError::MaxIterations {
        stage: Stage::Primal,
        iterations: cfg.max_iters,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::solve_dual;
    use crate::linalg::min_eigenvalue;
    use crate::model::{fronthaul_rate, objective, real, sinr};

    fn scalar() -> (ProblemInstance, DualSolution) {
        let inst = ProblemInstance::new(1.0, vec![vec![real(1.0)]], vec![1.0], vec![2.0]).unwrap();
        let dual = DualSolution {
            beta: vec![2.0],
            lambdas: vec![vec![real(1.0)]],
        };
        (inst, dual)
    }

    fn three_by_two() -> ProblemInstance {
        let h1 = vec![Complex64::new(0.3, 0.9), Complex64::new(-1.1, 0.2), Complex64::new(0.5, -0.4)];
        let h2 = vec![Complex64::new(-0.7, 0.1), Complex64::new(0.2, 0.6), Complex64::new(1.3, 0.8)];
        ProblemInstance::new(1.0, vec![h1, h2], vec![0.8, 1.2], vec![2.0, 3.0, 2.5]).unwrap()
    }

    #[test]
    fn directions_for_identity_c() {
        let h = vec![Complex64::new(0.6, -0.8), Complex64::new(0.0, 0.0)];
        let inst = ProblemInstance::new(1.0, vec![h.clone()], vec![1.0], vec![1.0, 1.0]).unwrap();
        // Zero multipliers make C_k = I.
        let dual = DualSolution {
            beta: vec![0.0],
            lambdas: vec![vec![real(0.0); 2]; 2],
        };
        let v = &beam_directions(&inst, &dual).unwrap()[0];
        for (a, b) in v.iter().zip(&h) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn scalar_direction_is_unit() {
        let inst = ProblemInstance::new(1.0, vec![vec![Complex64::new(0.0, -3.0)]], vec![1.0], vec![2.0]).unwrap();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let v = &beam_directions(&inst, &dual).unwrap()[0];
        assert!((v[0].norm() - 1.0).abs() < 1e-15);
        let proj = linalg::inner(&inst.channels[0], v);
        assert!(proj.im.abs() < 1e-15 && proj.re > 0.0);
    }

    #[test]
    fn directions_for_diagonal_c() {
        // C_k = diag(1, 2) from beta = 0 and Lambda_2^{(2,2)} = 1, h = [1, 1].
        let inst = ProblemInstance::new(1.0, vec![vec![real(1.0), real(1.0)]], vec![1.0], vec![1.0, 1.0]).unwrap();
        let dual = DualSolution {
            beta: vec![0.0],
            lambdas: vec![vec![real(0.0), real(0.0)], vec![real(0.0), real(1.0)]],
        };
        let v = &beam_directions(&inst, &dual).unwrap()[0];
        let s5 = 5f64.sqrt();
        assert!((v[0] - real(2.0 / s5)).norm() < 1e-15);
        assert!((v[1] - real(1.0 / s5)).norm() < 1e-15);
    }

    #[test]
    fn scalar_q_and_power_map() {
        let (inst, dual) = scalar();
        let dirs = vec![vec![real(1.0)]];
        let q = recover_q(&inst, &dual, &dirs, &[1.5]).unwrap();
        assert!((q.diag(0) - 0.5).abs() < 1e-15);
        for p in [0.0, 1.0, 1.5, 9.0] {
            let next = power_map(&inst, &dual, &dirs, &[p]).unwrap()[0];
            assert!((next - (p / 3.0 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_powers_give_zero_q() {
        let inst = three_by_two();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let dirs = beam_directions(&inst, &dual).unwrap();
        let q = recover_q(&inst, &dual, &dirs, &[0.0, 0.0]).unwrap();
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn noiseless_zero_power_is_a_fixed_point() {
        let (mut inst, dual) = scalar();
        inst.sigma2 = 0.0;
        let p = power_map(&inst, &dual, &[vec![real(1.0)]], &[0.0]).unwrap();
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn single_user_without_quantization_term() {
        // Dual with lambda = 0 except the degenerate check: use M=1 where
        // Q(p=0) = 0 so J(0) = gamma sigma^2 / |h^† v|^2.
        let h = vec![Complex64::new(0.8, 0.6)];
        let inst = ProblemInstance::new(2.0, vec![h], vec![1.5], vec![2.0]).unwrap();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let dirs = beam_directions(&inst, &dual).unwrap();
        let p = power_map(&inst, &dual, &dirs, &[0.0]).unwrap();
        assert!((p[0] - 1.5 * 2.0 / 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_multiplier_is_reported() {
        let (inst, _) = scalar();
        let dual = DualSolution {
            beta: vec![2.0],
            lambdas: vec![vec![real(0.0)]],
        };
        assert_eq!(
            recover_q(&inst, &dual, &[vec![real(1.0)]], &[1.0]),
            Err(SolverError::DegenerateMultiplier { relay: 0 })
        );
    }

    #[test]
    fn q_zeroes_bm_lambda() {
        let inst = three_by_two();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let dirs = beam_directions(&inst, &dual).unwrap();
        let p = vec![0.7, 1.9];
        let q = recover_q(&inst, &dual, &dirs, &p).unwrap();
        let sol = PrimalSolution {
            directions: dirs,
            powers: p,
            q,
        };
        for m in 0..3 {
            let b = b_matrix(&inst, &sol, m);
            let r = b.mul_vec(&dual.lambdas[m]).unwrap();
            assert!(linalg::norm(&r) <= 1e-9, "relay {m}: {}", linalg::norm(&r));
        }
    }

    #[test]
    fn scalar_closed_loop() {
        let inst = ProblemInstance::new(1.0, vec![vec![real(1.0)]], vec![1.0], vec![2.0]).unwrap();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let out = solve_primal(&inst, &dual, &SolverConfig::default()).unwrap();
        let sol = &out.solution;
        assert!((sol.powers[0] - 1.5).abs() < 1e-8);
        assert!((sol.q.diag(0) - 0.5).abs() < 1e-8);
        assert!((objective(sol) - 2.0).abs() < 1e-8);
        assert!((sinr(&inst, sol, 0).unwrap() - 1.0).abs() < 1e-8);
        assert!((fronthaul_rate(&inst, sol, 0).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fixed_point_is_tight_and_psd() {
        let inst = three_by_two();
        let dual = solve_dual(&inst, &SolverConfig::default()).unwrap().solution;
        let mut prev = vec![0.0; 2];
        let out = solve_primal_with(&inst, &dual, &SolverConfig::default(), &mut |t| {
            for (a, b) in t.values.iter().zip(&prev) {
                assert!(*a >= *b * (1.0 - 1e-12));
            }
            prev = t.values.to_vec();
        })
        .unwrap();
        let sol = &out.solution;
        for k in 0..2 {
            let s = sinr(&inst, sol, k).unwrap();
            assert!((s - inst.sinr_targets[k]).abs() <= 1e-7 * inst.sinr_targets[k]);
        }
        for m in 0..3 {
            let rate = fronthaul_rate(&inst, sol, m).unwrap();
            assert!((rate - inst.capacities[m]).abs() < 1e-7, "relay {m}: {rate}");
            assert!(min_eigenvalue(&b_matrix(&inst, sol, m)) > -1e-9);
        }
        assert!(min_eigenvalue(&sol.q) > -1e-9);
        let gap = objective(sol) - dual.objective(&inst);
        assert!(gap.abs() <= 1e-6 * (1.0 + objective(sol)), "gap {gap}");
    }
}
