//! Globally optimal joint beamforming and fronthaul compression for a
//! central processor serving users through rate-limited relays.
//!
//! The solver minimizes total transmit power subject to per-user SINR targets
//! and per-relay fronthaul capacities under multivariate compression. It runs
//! two fixed-point iterations, one over the SINR multipliers and one over the
//! beam powers, and every result can be checked independently with
//! [`certify::certify`], which evaluates the full optimality system and the
//! duality gap.
//!
//! ```
//! use coopbf::{solve, ProblemInstance, SolverConfig};
//! use num_complex::Complex64;
//!
//! let inst = ProblemInstance::new(
//!     1.0,
//!     vec![vec![Complex64::new(1.0, 0.0)]],
//!     vec![1.0],
//!     vec![2.0],
//! )
//! .unwrap();
//! let sol = solve(&inst, &SolverConfig::default()).unwrap();
//! assert!((coopbf::model::objective(&sol.primal) - 2.0).abs() < 1e-8);
//! ```

pub mod certify;
pub mod dual;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod primal;
pub mod solver;

pub use certify::{certify, Certificate, CertifyTolerances};
pub use dual::{solve_dual, SolverConfig};
pub use error::SolverError;
pub use linalg::{CVector, ComplexMatrix, HermitianMatrix};
pub use model::{DualSolution, ModelError, PrimalSolution, ProblemInstance};
pub use primal::solve_primal;
pub use solver::{solve, Solution};
