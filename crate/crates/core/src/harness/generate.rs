use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::CVector;
use crate::model::{ModelError, ProblemInstance};

/// Independent Rayleigh channels, `CN(0, 1)` entries, drawn user by user
/// with the real part before the imaginary part.
pub fn gen_channels<R: Rng + ?Sized>(relays: usize, users: usize, rng: &mut R) -> Vec<CVector> {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid deviation");
    (0..users)
        .map(|_| {
            (0..relays)
                .map(|_| {
                    let re = normal.sample(rng);
                    let im = normal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect()
}

/// A random instance with equal capacities and equal rate targets.
pub fn gen_instance<R: Rng + ?Sized>(
    relays: usize,
    users: usize,
    capacity: f64,
    sigma2: f64,
    rate_target: f64,
    rng: &mut R,
) -> Result<ProblemInstance, ModelError> {
    let channels = gen_channels(relays, users, rng);
    ProblemInstance::with_rate_targets(sigma2, channels, &vec![rate_target; users], vec![capacity; relays])
}

/// Deterministic generator for one (rate index, run) cell of a sweep.
/// Cells never share a stream, so results do not depend on execution order.
pub fn stream_rng(seed: u64, rate_index: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rate_index as u64) << 32) | run as u64);
    rng
}
