//! Event-driven sampling primitives.
//!
//! Detection probabilities per slot are tiny (~1e-5), so runs step from one
//! occupied slot to the next with geometric gaps instead of visiting every slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for one pulse block: the run seed selects the key, the block
/// index selects the ChaCha stream.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Decorrelated seed for the `index`-th sub-run of a seeded run (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Number of failed Bernoulli(p) trials before the first success.
/// Returns `u64::MAX` when `p == 0`.
pub fn geometric_gap<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    if p <= 0.0 {
        return u64::MAX;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let k = (u.ln() / (-p).ln_1p()).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Poisson(lambda) conditioned on being at least one, by inversion.
pub fn zero_truncated_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(lambda > 0.0);
    let u = rng.random::<f64>();
    let mut k = 1u64;
    let mut pk = lambda / lambda.exp_m1();
    let mut cdf = pk;
    while u >= cdf {
        k += 1;
        pk *= lambda / k as f64;
        let next = cdf + pk;
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

/// Probability that a Poisson(lambda) count is non-zero.
pub fn occupied(lambda: f64) -> f64 {
    -(-lambda).exp_m1()
}

/// Visit every occupied slot of a per-slot Bernoulli(p) process on
/// `[start, end)`, in increasing order.
pub fn for_each_bernoulli<R: Rng + ?Sized>(
    rng: &mut R,
    p: f64,
    start: u64,
    end: u64,
    mut f: impl FnMut(&mut R, u64),
) {
    let mut slot = start;
    loop {
        let gap = geometric_gap(rng, p);
        slot = match slot.checked_add(gap) {
            Some(s) if s < end => s,
            _ => return,
        };
        f(rng, slot);
        slot += 1;
    }
}
