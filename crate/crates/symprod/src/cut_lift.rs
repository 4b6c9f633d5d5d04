//! Cutting (first-return restriction), lifting (fixed-point extension) and
//! the degree dispatcher between them.
//!
//! `cut(σ, l)` sends each `i < l` to the first point of the forward orbit
//! `σ(i), σ²(i), …` that lands back below `l`; `lift(σ, n)` extends by
//! fixed points. Cutting a product is close to the product of the cuts:
//! the defect is at most `2(n−m)/m`, and a cut followed by a lift moves at
//! most `2(n−m)` points — both bounds are exposed here so tests and the
//! CLI pin them from one place.

use crate::perm::{Permutation, Rat};
use crate::{Error, Result};

/// Extends `sigma` to degree `n` by fixed points.
pub fn lift(sigma: &Permutation, n: u32) -> Result<Permutation> {
    let m = sigma.degree();
    if n < m {
        return Err(Error::LiftBelowDegree { degree: m, target: n });
    }
    if n == m {
        return Ok(sigma.clone());
    }
    Ok(sigma.direct_sum(&Permutation::identity(n - m)))
}

/// First-return permutation of `{0, …, l−1}` induced by `sigma`.
///
/// Walks each cycle of `sigma` once and links consecutive points below
/// `l`, so the total work is linear in the degree.
pub fn cut(sigma: &Permutation, l: u32) -> Result<Permutation> {
    let m = sigma.degree();
    if l == 0 || l > m {
        return Err(Error::CutOutOfRange { degree: m, len: l });
    }
    let mut image: Vec<u32> = (0..l).collect();
    let mut seen = vec![false; m as usize];
    for start in 0..l as usize {
        if seen[start] {
            continue;
        }
        // Record the points below l in cycle order; consecutive ones are
        // exactly the first-return steps.
        let mut small = Vec::new();
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            if (cur as u32) < l {
                small.push(cur as u32);
            }
            cur = sigma.apply(cur as u32) as usize;
        }
        for (idx, &p) in small.iter().enumerate() {
            image[p as usize] = small[(idx + 1) % small.len()];
        }
    }
    Permutation::from_image(image)
}

/// Dispatches on degree: lift when the target is larger, cut when smaller.
pub fn updown(sigma: &Permutation, n: u32) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::ZeroDegree);
    }
    if sigma.degree() <= n {
        lift(sigma, n)
    } else {
        cut(sigma, n)
    }
}

/// The uniform almost-homomorphism bound `2(n−m)/m` for cutting
/// `Sym(n) → Sym(m)`.
pub fn cut_hom_bound(n: u32, m: u32) -> Rat {
    Rat::new(2 * (n - m) as u128, m as u128)
}

/// The round-trip bound `2(n−m)/n` on `d_n(σ↓Sym(m)↑Sym(n), σ)`.
pub fn roundtrip_bound(n: u32, m: u32) -> Rat {
    Rat::new(2 * (n - m) as u128, n as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::random_permutation;

    #[test]
    fn lift_basics() {
        let sigma = random_permutation(4, 1);
        assert_eq!(lift(&sigma, 4).unwrap(), sigma);
        assert_eq!(
            lift(&Permutation::identity(3), 5).unwrap(),
            Permutation::identity(5)
        );
        assert!(matches!(
            lift(&sigma, 3),
            Err(Error::LiftBelowDegree { .. })
        ));
    }

    #[test]
    fn cut_first_return_examples() {
        // 1-based (1 2 3): first return of 2 below 2 is 1, so we get the swap.
        let c3: Permutation = "(1 2 3)".parse().unwrap();
        assert_eq!(cut(&c3, 2).unwrap(), "(1 2)".parse().unwrap());
        // 1-based (2 3) in Sym(3): 1 fixed, 2 → 3 → 2 returns to itself.
        let t: Permutation = "3: (2 3)".parse().unwrap();
        assert_eq!(cut(&t, 2).unwrap(), Permutation::identity(2));
        assert_eq!(
            cut(&Permutation::identity(6), 4).unwrap(),
            Permutation::identity(4)
        );
        assert!(matches!(cut(&c3, 0), Err(Error::CutOutOfRange { .. })));
        assert!(matches!(cut(&c3, 4), Err(Error::CutOutOfRange { .. })));
    }

    #[test]
    fn updown_dispatch() {
        let sigma = random_permutation(5, 9);
        assert_eq!(updown(&sigma, 5).unwrap(), sigma);
        assert_eq!(updown(&sigma, 7).unwrap(), lift(&sigma, 7).unwrap());
        assert_eq!(updown(&sigma, 3).unwrap(), cut(&sigma, 3).unwrap());
        assert!(updown(&sigma, 0).is_err());
    }

    #[test]
    fn lift_then_cut_is_exact() {
        for m in 1..=5u32 {
            for n in m..=9u32 {
                for seed in 0..4 {
                    let tau = random_permutation(m, crate::derive_seed(seed, &[m as u64, n as u64]));
                    assert_eq!(cut(&lift(&tau, n).unwrap(), m).unwrap(), tau);
                }
            }
        }
    }

    #[test]
    fn cut_then_lift_is_close() {
        for seed in 0..10 {
            let sigma = random_permutation(9, crate::derive_seed(seed, &[40]));
            for m in 1..=9u32 {
                let back = lift(&cut(&sigma, m).unwrap(), 9).unwrap();
                assert!(back.hamming(&sigma).ratio() <= roundtrip_bound(9, m));
            }
        }
    }

    #[test]
    fn cut_is_near_homomorphism_small() {
        use crate::perm::all_permutations;
        for n in 2..=4u32 {
            for m in 1..n {
                let bound = cut_hom_bound(n, m);
                for p in all_permutations(n) {
                    for q in all_permutations(n) {
                        let lhs = cut(&p.compose(&q), m).unwrap();
                        let rhs = cut(&p, m).unwrap().compose(&cut(&q, m).unwrap());
                        assert!(lhs.hamming(&rhs).ratio() <= bound);
                    }
                }
            }
        }
    }

    #[test]
    fn cut_stays_bijective_at_scale() {
        // from_image validates bijectivity, so surviving construction is the check.
        let sigma = random_permutation(10_000, 5);
        for l in [1u32, 2, 17, 5_000, 9_999] {
            let c = cut(&sigma, l).unwrap();
            assert_eq!(c.degree(), l);
        }
    }
}
