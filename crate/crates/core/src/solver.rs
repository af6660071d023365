//! The two-stage algorithm end to end: dual fixed point, then primal fixed
//! point on top of it.

use crate::dual::{solve_dual_with, IterationTrace, SolverConfig};
use crate::error::SolverError;
use crate::model::{DualSolution, PrimalSolution, ProblemInstance};
use crate::primal::solve_primal_with;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub primal: PrimalSolution,
    pub dual: DualSolution,
    pub dual_iterations: usize,
    pub primal_iterations: usize,
}

/// Which loop a trace line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Dual,
    Primal,
}

pub fn solve(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    solve_traced(inst, cfg, &mut |_, _| {})
}

pub fn solve_traced(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(Phase, &IterationTrace<'_>),
) -> Result<Solution, SolverError> {
    inst.validate()?;
    let dual = solve_dual_with(inst, cfg, None, &mut |t| observer(Phase::Dual, t))?;
    let primal = solve_primal_with(inst, &dual.solution, cfg, &mut |t| observer(Phase::Primal, t))?;
    Ok(Solution {
        primal: primal.solution,
        dual: dual.solution,
        dual_iterations: dual.state.iteration,
        primal_iterations: primal.iterations,
    })
}
