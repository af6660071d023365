//! Evaluation tooling: random instances, independent reference solvers,
//! and the Monte-Carlo rate sweep.

pub mod barrier;
pub mod generate;
pub mod oracle;
pub mod sweep;
pub mod trace;

pub use generate::{gen_instance, stream_rng};
pub use oracle::{brute_force_oracle, Bracket, OracleError};
pub use sweep::{run_sweep, RunRecord, RunStatus, SweepConfig, SweepReport};
