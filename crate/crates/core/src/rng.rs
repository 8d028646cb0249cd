//! Seeded randomness shared by every stage of the pipeline.
//!
//! All random decisions are drawn from [`SplitMix64`], a tiny generator with a
//! frozen output sequence, so results never depend on the version of an
//! external RNG crate. Per-document streams are keyed by [`derive_doc_seed`].

/// Golden-ratio increment used by SplitMix64.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer (Stafford "Mix13"). A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the per-document random stream.
///
/// Defined as `mix64(mix64(global_seed ^ doc_id))`. For a fixed global seed
/// this is a bijection of `doc_id` (and vice versa), so distinct documents
/// never share a stream. The definition is part of the reproducibility
/// contract and must not change.
#[inline]
pub fn derive_doc_seed(global_seed: u64, doc_id: u64) -> u64 {
    mix64(mix64(global_seed ^ doc_id))
}

/// Stream tags that separate independent decisions made about one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Word selection and translation choice.
    Replace = 0,
    /// Whether a document is selected for intervention.
    Select = 0x5E1E_C7ED_0000_0001,
}

/// Seed for a given decision stream of one document.
#[inline]
pub fn stream_seed(global_seed: u64, doc_id: u64, stream: Stream) -> u64 {
    match stream {
        Stream::Replace => derive_doc_seed(global_seed, doc_id),
        other => mix64(derive_doc_seed(global_seed, doc_id) ^ other as u64),
    }
}

/// SplitMix64 pseudo-random generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Unbiased (Lemire's widening multiply with
    /// rejection). `n` must be non-zero.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
