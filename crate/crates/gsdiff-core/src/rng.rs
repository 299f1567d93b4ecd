//! Deterministic pseudo-random machinery.
//!
//! Every stochastic quantity in this crate flows through two fixed,
//! documented generators:
//!
//! * [`splitmix64_mix`] — the splitmix64 finalizer, used to derive child
//!   seeds and to expand a 64-bit seed into generator state.
//! * [`TrajectoryRng`] — xoshiro256++ with Box–Muller normal draws. One
//!   instance is seeded per trajectory and its state travels inside
//!   checkpoints, so resuming a trajectory continues the exact stream.
//!
//! Draw order contract: a trajectory draws one standard-normal tensor for
//! its initial latent, then (only when `eta > 0`) exactly one normal tensor
//! per reverse step. Normal tensors are filled pairwise by Box–Muller in
//! index order; an odd-length tensor discards the trailing half-pair.
//! Bit-exact reproducibility is guaranteed within this implementation, not
//! across implementations.

const GAMMA: u64 = 0x9E3779B97F4A7C15;

/// One splitmix64 step: advance `state` by the golden-ratio increment and
/// return the mixed output.
#[inline]
pub fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GAMMA);
    splitmix64_mix(*state)
}

/// The splitmix64 finalizer applied to an already-advanced state word.
#[inline]
pub fn splitmix64_mix(advanced_state: u64) -> u64 {
    let mut z = advanced_state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// xoshiro256++ stream with serializable state and normal draws.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRng {
    state: [u64; 4],
}

impl TrajectoryRng {
    /// Seed by expanding `seed` through four splitmix64 steps.
    pub fn seed_from(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = splitmix64_next(&mut sm);
        }
        // xoshiro must never start from the all-zero state.
        if state == [0; 4] {
            state[0] = GAMMA;
        }
        TrajectoryRng { state }
    }

    /// Raw state words, for checkpoint serialization.
    pub fn state(&self) -> [u64; 4] {
        self.state
    }

    pub fn from_state(state: [u64; 4]) -> Self {
        TrajectoryRng { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in (0, 1]: 53 significand bits, never zero, so it is always
    /// a valid Box–Muller radius argument.
    #[inline]
    pub fn next_unit_open(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Fill `out` with standard-normal samples via Box–Muller, pairwise in
    /// index order.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i < out.len() {
            let u1 = self.next_unit_open();
            let u2 = self.next_unit_open();
            let radius = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            out[i] = radius * theta.cos();
            if i + 1 < out.len() {
                out[i + 1] = radius * theta.sin();
            }
            i += 2;
        }
    }
}
