//! Brute-force ground truth at small degree.
//!
//! Everything here follows the defining formulas directly and shares no
//! code with the fast paths it anchors (only the permutation atoms from
//! [`crate::perm`]): enumeration uses hand-rolled lexicographic successor
//! stepping rather than the iterator in `perm`, cutting iterates the
//! permutation literally, conjugator search scans every candidate, class
//! squares multiply full classes, and two-conjugate search scans every
//! factor pair. Intended for tests and cross-checks, not performance.

use std::collections::BTreeSet;

use crate::perm::{CycleType, Permutation, Rat};
use crate::reduced::PermutationMap;
use crate::{Error, Result};

/// Hard cap for full `Sym(n)` enumeration.
pub const ENUM_CAP: u32 = 8;
/// Cap for quadratic (pairwise) exhaustive scans.
pub const PAIRWISE_CAP: u32 = 7;

/// All of `Sym(n)` in lexicographic order, each exactly once.
pub fn enumerate_sym(n: u32) -> Result<SymIter> {
    if n == 0 {
        return Err(Error::ZeroDegree);
    }
    if n > ENUM_CAP {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: ENUM_CAP,
        });
    }
    Ok(SymIter {
        next: Some((0..n).collect()),
    })
}

pub struct SymIter {
    next: Option<Vec<u32>>,
}

impl Iterator for SymIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let out = Permutation::from_image(current.clone()).expect("successor keeps bijectivity");
        // Classic lexicographic successor: find the rightmost ascent, swap
        // with the smallest larger element to its right, reverse the tail.
        let mut image = current;
        let n = image.len();
        let mut i = n.wrapping_sub(2);
        while i < n && image[i] >= image[i + 1] {
            i = i.wrapping_sub(1);
        }
        if i < n {
            let mut j = n - 1;
            while image[j] <= image[i] {
                j -= 1;
            }
            image.swap(i, j);
            image[i + 1..].reverse();
            self.next = Some(image);
        }
        Some(out)
    }
}

/// Definition-following cut: iterate `sigma` from each point until the
/// orbit returns below `l`. Quadratic, kept deliberately naive.
pub fn oracle_cut(sigma: &Permutation, l: u32) -> Result<Permutation> {
    let m = sigma.degree();
    if l == 0 || l > m {
        return Err(Error::CutOutOfRange { degree: m, len: l });
    }
    let mut image = Vec::with_capacity(l as usize);
    for i in 0..l {
        let mut v = sigma.apply(i);
        while v >= l {
            v = sigma.apply(v);
        }
        image.push(v);
    }
    Permutation::from_image(image)
}

/// Scans every candidate conjugator and returns one minimizing the worst
/// lifted disagreement with the map, together with that distance.
pub fn oracle_min_conjugator(phi: &dyn PermutationMap) -> Result<(Permutation, Rat)> {
    let n = phi.source_degree();
    let m = phi.target_degree();
    if n > PAIRWISE_CAP {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: PAIRWISE_CAP,
        });
    }
    let top = n.max(m);
    let pad = |p: &Permutation| -> Permutation {
        if p.degree() == top {
            p.clone()
        } else {
            p.direct_sum(&Permutation::identity(top - p.degree()))
        }
    };
    let images: Vec<(Permutation, Permutation)> = enumerate_sym(n)?
        .map(|sigma| {
            let img = pad(&phi.eval(&sigma));
            (sigma, img)
        })
        .collect();
    let mut best: Option<(Permutation, Rat)> = None;
    for alpha in enumerate_sym(n)? {
        let mut worst = Rat::from_integer(0);
        for (sigma, img) in &images {
            let conj = pad(&sigma.conjugate_by(&alpha));
            let d = img.hamming(&conj).ratio();
            if d > worst {
                worst = d;
            }
        }
        if best.as_ref().map_or(true, |(_, b)| worst < *b) {
            best = Some((alpha, worst));
        }
    }
    Ok(best.expect("Sym(n) nonempty"))
}

/// All involutions of `Sym(n)` with exactly `t` transpositions, found by
/// filtering the full enumeration.
pub fn involutions_with(n: u32, t: u32) -> Result<Vec<Permutation>> {
    Ok(enumerate_sym(n)?
        .filter(|p| p.is_involution() && p.support_size() == 2 * t)
        .collect())
}

/// Cycle types realized by products over the full class times itself.
pub fn oracle_squared_class(n: u32, t: u32) -> Result<BTreeSet<CycleType>> {
    if n > PAIRWISE_CAP {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: PAIRWISE_CAP,
        });
    }
    let class = involutions_with(n, t)?;
    let mut types = BTreeSet::new();
    for a in &class {
        for b in &class {
            types.insert(a.compose(b).cycle_type());
        }
    }
    Ok(types)
}

/// Result of the exhaustive two-conjugate search.
pub struct OracleTwoConjugates {
    /// Smallest achievable recomposition distance.
    pub min_epsilon: Rat,
    /// A minimizing factor pair `(u, v)` with `u·v` closest to the target.
    pub witness: (Permutation, Permutation),
}

/// Scans every pair of `t`-transposition involutions for the product
/// closest to `b`.
pub fn oracle_two_conjugates(b: &Permutation, t: u32) -> Result<OracleTwoConjugates> {
    let n = b.degree();
    if n > PAIRWISE_CAP {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: PAIRWISE_CAP,
        });
    }
    if 2 * t > n {
        return Err(Error::TooManyTranspositions { n, t });
    }
    let class = involutions_with(n, t)?;
    let mut best: Option<OracleTwoConjugates> = None;
    for u in &class {
        for v in &class {
            let d = b.hamming(&u.compose(v)).ratio();
            if best.as_ref().map_or(true, |o| d < o.min_epsilon) {
                best = Some(OracleTwoConjugates {
                    min_epsilon: d,
                    witness: (u.clone(), v.clone()),
                });
            }
        }
    }
    Ok(best.expect("class nonempty when 2t <= n"))
}

/// Componentwise best certificates over all involutions commuting with `a`:
/// smallest class error against `1 − d1(a)` and smallest support error of
/// the product, scanned independently.
pub fn oracle_neg_best(a: &Permutation) -> Result<(Rat, Rat)> {
    let n = a.degree();
    if n > PAIRWISE_CAP {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: PAIRWISE_CAP,
        });
    }
    if !a.is_involution() {
        return Err(Error::NotInvolution);
    }
    let target = Rat::from_integer(1) - a.hamming_to_identity().ratio();
    let mut best_class: Option<Rat> = None;
    let mut best_supp: Option<Rat> = None;
    for b in enumerate_sym(n)? {
        if !b.is_involution() || a.compose(&b) != b.compose(&a) {
            continue;
        }
        let class_err = abs_diff(b.hamming_to_identity().ratio(), target);
        let supp_err =
            Rat::from_integer(1) - a.compose(&b).hamming_to_identity().ratio();
        if best_class.map_or(true, |c| class_err < c) {
            best_class = Some(class_err);
        }
        if best_supp.map_or(true, |s| supp_err < s) {
            best_supp = Some(supp_err);
        }
    }
    Ok((best_class.unwrap(), best_supp.unwrap()))
}

fn abs_diff(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a - b
    } else {
        b - a
    }
}
