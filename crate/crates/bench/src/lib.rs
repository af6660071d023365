//! Fixtures shared by the criterion benchmarks.

use coopbf::harness::{gen_instance, stream_rng};
use coopbf::ProblemInstance;

/// Eight relays, ten users, 3 bits of fronthaul per relay, unit noise.
pub fn reference_instance(rate: f64, run: usize) -> ProblemInstance {
    let mut rng = stream_rng(2024, 0, run);
    gen_instance(8, 10, 3.0, 1.0, rate, &mut rng).expect("valid parameters")
}
