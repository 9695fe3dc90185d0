//! Counter-based random streams.
//!
//! Every random draw in the library is made from a stream identified by a
//! [`RngKey`]: a master seed plus a path of integer labels such as
//! `(replicate, t, particle)`. Two keys with the same seed and path always
//! produce the same stream, no matter which thread asks for it or in what
//! order, so parallel loops are bit-identical to sequential ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator handed out by [`RngKey::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngKey {
    seed: u64,
    path: u64,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngKey {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Key of the sub-stream labelled `label` below this one.
    pub fn child(&self, label: u64) -> Self {
        Self {
            seed: self.seed,
            path: mix(self.path ^ mix(label.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    /// Shorthand for a chain of [`child`](Self::child) calls.
    pub fn derive(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |k, &l| k.child(l))
    }

    /// A fresh generator positioned at the start of this stream.
    ///
    /// The seed selects the ChaCha key and the hashed path selects the
    /// ChaCha stream id, so distinct paths never share keystream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}
