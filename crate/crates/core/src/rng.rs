//! Deterministic seeded random number streams.
//!
//! Every Monte Carlo entity (trial, user, oracle draw) gets its own
//! counter-derived stream so that parallel evaluation is order-independent
//! and results are reproducible for a fixed base seed regardless of the
//! number of worker threads.

use nalgebra::DVector;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// splitmix64 step; used to mix seed components into stream seeds.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes an arbitrary list of seed components into a single 64-bit seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x51A5_C060_D00D_F00Du64;
    let mut out = 0u64;
    for &p in parts {
        state ^= p;
        out ^= splitmix64(&mut state);
    }
    out
}

/// Independent stream for a given set of seed components.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(parts))
}

/// Uniform in (0, 1]; never returns 0 so `ln` is always finite.
pub fn uniform_open01(rng: &mut ChaCha8Rng) -> f64 {
    let x = rng.next_u64() >> 11; // 53 bits
    (x as f64 + 1.0) / 9_007_199_254_740_992.0
}

/// Circularly-symmetric complex normal CN(0, 1) via Box-Muller in polar
/// form: magnitude^2 ~ Exp(1), phase uniform.
pub fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    let r = (-u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * theta.cos(), r * theta.sin())
}

/// Vector of i.i.d. CN(0, 1) entries.
pub fn complex_normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| complex_normal(rng))
}

/// Uniform random point on the unit sphere of C^n.
pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    loop {
        let v = complex_normal_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-30 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}
