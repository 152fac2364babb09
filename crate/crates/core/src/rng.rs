//! Counter-based, hierarchically addressed randomness.
//!
//! Every random object used by the estimator is a pure function of a master
//! seed, a finite index path `θ = (θ₁, …, θₖ)` and a purpose tag. Nothing is
//! stored: re-evaluating a process at a different time re-derives exactly the
//! same uniforms and Brownian increments from their addresses.
//!
//! Uniforms are produced on `[0, 1)`; the endpoint `1` is never returned.

use std::fmt;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const PATH_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const TAG_SALT: u64 = 0xAEF1_7502_108E_F2D9;
const LEN_SALT: u64 = 0x8CB9_2BA7_2F3D_8DD7;

/// SplitMix64 / Stafford variant 13 finalizer. Bijective on `u64`.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.rotate_left(23) ^ mix64(word.wrapping_add(PATH_SALT)).wrapping_add(GOLDEN))
}

/// Purpose label separating the independent streams hanging off one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag(u64);

impl Tag {
    /// The uniform time fraction `𝔲^θ` of a Picard sample.
    pub const TIME: Tag = Tag(1 << 56);
    /// Points drawn by the Lipschitz self-check.
    pub const LIPSCHITZ: Tag = Tag(2 << 56);

    /// Brownian increment number `step` of the path owned by a key.
    pub const fn increment(step: u64) -> Tag {
        Tag((3 << 56) | (step & ((1 << 56) - 1)))
    }

    /// Free-form tags for callers outside the estimator (tests, oracles).
    pub const fn custom(value: u64) -> Tag {
        Tag((4 << 56) | (value & ((1 << 56) - 1)))
    }

    pub const fn raw(self) -> u64 {
        self.0
    }
}

/// Address `(seed, θ)` of one independent copy of the underlying randomness.
///
/// Equality and hashing use the seed and the path only; the absorbed digest
/// is a cache derived from them.
#[derive(Clone)]
pub struct IndexKey {
    seed: u64,
    path: Vec<u64>,
    digest: u64,
}

impl IndexKey {
    /// The empty-path key for a master seed. Estimator roots extend it by `[0]`.
    pub fn root(seed: u64) -> Self {
        IndexKey {
            seed,
            path: Vec::new(),
            digest: mix64(seed ^ LEN_SALT),
        }
    }

    pub fn new(seed: u64, path: &[u64]) -> Self {
        IndexKey::root(seed).child(path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Concatenates `extension` onto the path. The receiver is left untouched.
    pub fn child(&self, extension: &[u64]) -> IndexKey {
        let mut path = Vec::with_capacity(self.path.len() + extension.len());
        path.extend_from_slice(&self.path);
        path.extend_from_slice(extension);
        let digest = extension.iter().fold(self.digest, |s, &w| absorb(s, w));
        IndexKey {
            seed: self.seed,
            path,
            digest,
        }
    }

    /// Digest of the full address: the element-wise absorption is finished
    /// with the path length, so the encoding is injective on paths.
    #[inline]
    fn finalized(&self) -> u64 {
        mix64(self.digest ^ mix64((self.path.len() as u64).wrapping_add(LEN_SALT)))
    }

    /// Raw 64-bit output number `counter` of the stream `(self, tag)`.
    #[inline]
    pub fn word(&self, tag: Tag, counter: u64) -> u64 {
        let base = mix64(self.finalized() ^ mix64(tag.0 ^ TAG_SALT));
        mix64(base.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }
}

impl PartialEq for IndexKey {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.path == other.path
    }
}

impl Eq for IndexKey {}

impl std::hash::Hash for IndexKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.seed.hash(state);
        self.path.hash(state);
    }
}

impl fmt::Debug for IndexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexKey({:#x}, {:?})", self.seed, self.path)
    }
}

/// Seed of repetition `index` under a master seed.
pub fn repetition_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ 0x5851_F42D_4C95_7F2D).wrapping_add(index.wrapping_mul(GOLDEN)))
}

#[inline]
fn to_unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw on `[0, 1)` addressed by `(key, tag)`.
pub fn uniform(key: &IndexKey, tag: Tag) -> f64 {
    to_unit(key.word(tag, 0))
}

/// The `counter`-th uniform of the stream `(key, tag)`.
pub fn uniform_at(key: &IndexKey, tag: Tag, counter: u64) -> f64 {
    to_unit(key.word(tag, counter))
}

/// Writes `out.len()` i.i.d. `N(0, variance)` coordinates for `(key, tag)`.
///
/// Box–Muller on pairs of counter-indexed uniforms; coordinate `2j` and
/// `2j + 1` share one pair. No rejection, so the uniforms consumed per call
/// are a fixed function of the dimension.
pub fn fill_gaussian(key: &IndexKey, tag: Tag, variance: f64, out: &mut [f64]) {
    let base = mix64(key.finalized() ^ mix64(tag.0 ^ TAG_SALT));
    let sd = variance.sqrt();
    let mut pair = 0u64;
    for chunk in out.chunks_mut(2) {
        let w1 = mix64(base.wrapping_add((2 * pair + 1).wrapping_mul(GOLDEN)));
        let w2 = mix64(base.wrapping_add((2 * pair + 2).wrapping_mul(GOLDEN)));
        // 1 - U lies in (0, 1], so the logarithm is finite.
        let u1 = 1.0 - to_unit(w1);
        let u2 = to_unit(w2);
        let r = (-2.0 * u1.ln()).sqrt() * sd;
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        chunk[0] = r * c;
        if let Some(second) = chunk.get_mut(1) {
            *second = r * s;
        }
        pair += 1;
    }
}

/// Allocating form of [`fill_gaussian`].
pub fn gaussian_vector(key: &IndexKey, tag: Tag, dim: usize, variance: f64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::invalid(
            "gaussian_vector: dimension must be at least 1",
        ));
    }
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!(
            "gaussian_vector: variance must be finite and non-negative, got {variance}"
        )));
    }
    let mut out = vec![0.0; dim];
    fill_gaussian(key, tag, variance, &mut out);
    Ok(out)
}
