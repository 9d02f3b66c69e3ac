//! SplitMix64, the generator behind bootstrap resampling.
//!
//! Stream definition, so other implementations can reproduce draws:
//!
//! ```text
//! state = seed
//! next():
//!     state = state + 0x9E3779B97F4A7C15          (wrapping)
//!     z = state
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9    (wrapping)
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB    (wrapping)
//!     return z ^ (z >> 31)
//! index(n):
//!     return (next() * n) >> 64                   (128-bit product)
//! ```

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish index in `0..n` by multiply-high.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
