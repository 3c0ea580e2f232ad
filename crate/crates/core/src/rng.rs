//! splitmix64 stream used for scenario generation.
//!
//! The constants and the float mapping are part of the scenario format: any
//! reimplementation that follows them reproduces generated agents bit for bit.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_NEG_64: f64 = 1.0 / 18_446_744_073_709_551_616.0;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// `z / 2^64` for the next output `z`.
    pub fn next_unit(&mut self) -> f64 {
        self.next_u64() as f64 * TWO_POW_NEG_64
    }

    /// Affine map of [`next_unit`](Self::next_unit) onto `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}
