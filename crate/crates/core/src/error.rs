use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::ModelError;

/// Which fixed-point loop an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Dual,
    Primal,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Dual => "dual",
            Stage::Primal => "primal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    /// The dual iteration diverged: no finite fixed point exists.
    #[error("problem is infeasible: dual iterate reached {max_beta:e} after {iterations} iterations")]
    Infeasible { iterations: usize, max_beta: f64 },
    #[error("multiplier recursion hit a non-positive pivot {pivot:e} at relay {relay}")]
    NonPositivePivot { relay: usize, pivot: f64 },
    #[error("fronthaul multiplier of relay {relay} vanishes; row {relay} of Q is undetermined")]
    DegenerateMultiplier { relay: usize },
    #[error("Q back-substitution at relay {relay} produced a diagonal with imaginary part {imag:e}")]
    NonHermitianResidual { relay: usize, imag: f64 },
    #[error("beam of user {user} is orthogonal to its channel")]
    OrthogonalBeam { user: usize },
    #[error("{stage} iteration did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations {
        stage: Stage,
        iterations: usize,
        residual: f64,
    },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SolverError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, SolverError::Infeasible { .. })
    }
}
