use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::statevec::QuantumState;

pub(crate) fn random_state(n: usize, seed: u64) -> QuantumState<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1 << n)
        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    QuantumState::from_amplitudes(n, amps).unwrap()
}

/// Haar-ish random 2×2 unitary from a random axis and angle.
pub(crate) fn random_su2(seed: u64) -> crate::linalg::CMat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let phase = Complex::from_polar(1.0, rng.gen_range(-3.0..3.0));
    crate::linalg::su2_rotation(axis, rng.gen_range(0.0..std::f64::consts::TAU)).scale(phase)
}
