//! Seeded pseudo-randomness with a fully specified algorithm.
//!
//! Reproducibility across platforms and library versions is a hard
//! requirement for the synthetic benchmark, so this crate does not depend on
//! an external RNG whose stream might change under it. Instead it uses
//! SplitMix64 — a tiny, widely documented generator with a public reference
//! implementation — plus the Box–Muller transform for normal deviates:
//!
//! - **State update**: `state += 0x9E3779B97F4A7C15`, then the output is the
//!   state scrambled by two xor-shift-multiply rounds
//!   (`0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`) and a final `z ^ (z >> 31)`.
//! - **Uniform doubles**: the top 53 bits of the output scaled by `2⁻⁵³`,
//!   giving values in `[0, 1)`.
//! - **Normals**: Box–Muller on a pair of uniforms, with `u₁` mapped into
//!   `(0, 1]` so the logarithm is always finite; the second deviate of each
//!   pair is cached and handed out next.
//!
//! Substreams are derived with [`subseed`], which mixes a root seed with a
//! string tag and an index. Every generated object in the benchmark draws
//! from its own tagged substream, so generation order — and the number of
//! worker threads — cannot change any stream.

/// SplitMix64 generator with a Box–Muller spare slot.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_normal: Option<f64>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl Rng {
    /// Creates a generator from a seed. Equal seeds give equal streams.
    pub fn new(seed: u64) -> Rng {
        Rng {
            state: seed,
            spare_normal: None,
        }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate via Box–Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 ∈ (0, 1] keeps ln(u1) finite; u2 ∈ [0, 1).
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform integer in `[0, bound)` by rejection, so the distribution is
    /// exact for every bound.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below: bound must be positive");
        // Rejection zone keeps the modulo unbiased.
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// A sorted sample of `k` distinct indices from `0..n`, drawn without
    /// replacement. When `k == n` this is exactly `0..n`.
    ///
    /// Sorting makes subset runs reproduce full runs bitwise when `k == n`:
    /// the selected rows appear in their original order, so the assembled
    /// matrices are identical to the unsampled ones.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "sample_indices: k must not exceed n");
        // Partial Fisher-Yates over an index array, then sort the prefix.
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut chosen = pool[..k].to_vec();
        chosen.sort_unstable();
        chosen
    }
}

/// Derives an independent substream seed from a root seed, a string tag, and
/// an index.
///
/// The tag is hashed with FNV-1a; the result is mixed with the seed and the
/// index through SplitMix64 scrambling. Distinct (tag, index) pairs yield
/// effectively independent streams regardless of the order they are created
/// in.
pub fn subseed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut mixer = Rng::new(seed ^ h);
    let first = mixer.next_u64();
    let mut mixer2 = Rng::new(first ^ index.wrapping_mul(GOLDEN_GAMMA));
    mixer2.next_u64()
}
