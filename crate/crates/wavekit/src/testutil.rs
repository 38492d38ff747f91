//! Small deterministic helpers shared by unit tests.

use crate::field::FieldState;
use num_complex::Complex64;

pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [−1, 1).
    pub fn next_sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    pub fn next_complex(&mut self) -> Complex64 {
        Complex64::new(self.next_sym(), self.next_sym())
    }
}

pub fn random_state(dim: usize, cutoff: i32, reality: bool, seed: u64) -> FieldState {
    let mut rng = SplitMix64(seed);
    let mut state = FieldState::zero(dim, cutoff, reality);
    for z in state.amps_mut() {
        *z = rng.next_complex();
    }
    if reality {
        state.enforce_reality();
    }
    state
}
