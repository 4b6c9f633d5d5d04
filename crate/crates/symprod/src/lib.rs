//! Finite-stage combinatorics of symmetric groups under the normalized
//! Hamming metric.
//!
//! The crate is organized around desk-scale experiments on sequences of
//! symmetric groups `Sym(k_0), Sym(k_1), …`:
//!
//! * [`perm`] — permutation arithmetic, the normalized Hamming metric and
//!   seeded samplers; everything else builds on this.
//! * [`cut_lift`] — the first-return restriction `σ ↓ Sym(l)`, the
//!   fixed-point extension `σ ↑ Sym(n)` and the degree dispatcher `↕`,
//!   together with their quantitative bounds.
//! * [`reduced`] — finite-horizon representatives of stagewise elements,
//!   almost permutations, the induced maps `ψ_f`, tail pseudometric
//!   profiles and defect functionals for stagewise map families.
//! * [`stability`] — synthetic near-homomorphisms `Sym(n) → Sym(m)` with
//!   seeded noise and conjugator recovery, measuring how far a map is from
//!   an exact conjugation.
//! * [`involutions`] — conjugacy classes of involutions keyed by
//!   transposition count: class squares, truncated addition, complement
//!   witnesses, and decompositions into two conjugates.
//! * [`rearrange`] — degree-sequence alignment: almost rearrangements with
//!   tolerance and exception budgets, log-gap profiles, outer-shadow graphs.
//! * [`oracles`] — brute-force ground truth at small degree, implemented
//!   independently of the fast paths it checks.
//!
//! All values are immutable after construction; operations are pure
//! functions and samplers take explicit seeds, so everything is safe to
//! share across threads and reproducible regardless of scheduling.

pub mod cut_lift;
mod error;
pub mod involutions;
pub mod oracles;
pub mod perm;
pub mod rearrange;
pub mod reduced;
pub mod stability;

pub use error::{Error, Result};
pub use perm::{HammingValue, Permutation, Rat};

/// Derives a child seed from a base seed and a named path of indices.
///
/// Every source of randomness in the crate flows from one experiment seed
/// through chains of this function (splitmix64 steps), so results are
/// reproducible and independent of scheduling.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in path {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p);
        state = splitmix64(state);
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Parses an exact rational from `"p/q"`, a decimal like `"0.05"`, or an
/// integer.
pub fn parse_ratio(s: &str) -> Result<Rat> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<u128> {
        t.parse::<u128>()
            .map_err(|_| Error::Parse(format!("invalid rational component `{t}`")))
    };
    if let Some((p, q)) = s.split_once('/') {
        let num = parse_int(p)?;
        let den = parse_int(q)?;
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rat::new(num, den))
    } else if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() { 0 } else { parse_int(int)? };
        if frac.len() > 18 {
            return Err(Error::Parse("too many decimal digits".into()));
        }
        let digits = parse_int(frac)?;
        let scale = 10u128.pow(frac.len() as u32);
        Ok(Rat::new(int * scale + digits, scale))
    } else {
        Ok(Rat::from_integer(parse_int(s)?))
    }
}
