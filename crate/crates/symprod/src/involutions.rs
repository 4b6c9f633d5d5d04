//! Conjugacy classes of involutions and the finite shadow of the class
//! lattice: distance-to-identity values, class squares, truncated
//! addition, complement witnesses, and decompositions into two conjugates.
//!
//! Finite-degree truth differs from the asymptotic statements (the Sym(4)
//! class square of double transpositions contains no 3-cycles), so this
//! module ships measurements and certificates, never the limit claims.

use std::collections::BTreeSet;

use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::perm::{
    all_permutations, conjugator_between, random_involution_with, CycleType, Permutation, Rat,
};
use crate::{derive_seed, Error, Result};

/// Degree cap for the exhaustive class scans.
pub const CLASS_CAP: u32 = 7;

/// A conjugacy class of involutions in `Sym(n)`, keyed by its
/// transposition count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InvolutionClass {
    degree: u32,
    transpositions: u32,
}

impl InvolutionClass {
    pub fn new(degree: u32, transpositions: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::ZeroDegree);
        }
        if 2 * transpositions > degree {
            return Err(Error::TooManyTranspositions {
                n: degree,
                t: transpositions,
            });
        }
        Ok(InvolutionClass {
            degree,
            transpositions,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn transpositions(&self) -> u32 {
        self.transpositions
    }

    /// Distance to the identity shared by every member: `2t/n`.
    pub fn d1(&self) -> Rat {
        Rat::new(2 * self.transpositions as u128, self.degree as u128)
    }

    /// The representative with transpositions packed at the front:
    /// `(0 1)(2 3)…`.
    pub fn canonical_rep(&self) -> Permutation {
        let mut image: Vec<u32> = (0..self.degree).collect();
        for i in 0..self.transpositions {
            image[2 * i as usize] = 2 * i + 1;
            image[2 * i as usize + 1] = 2 * i;
        }
        Permutation::from_image(image).expect("pairs are disjoint")
    }

    /// A uniformly random member.
    pub fn sample(&self, seed: u64) -> Permutation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_involution_with(self.degree, self.transpositions, &mut rng)
            .expect("class parameters validated")
    }

    /// Every member, generated by a matching recursion (smallest free
    /// point fixed or paired with each larger one). Capped at degree 7.
    pub fn members(&self) -> Result<Vec<Permutation>> {
        if self.degree > CLASS_CAP {
            return Err(Error::ExhaustiveCap {
                degree: self.degree,
                cap: CLASS_CAP,
            });
        }
        let mut out = Vec::new();
        let mut image: Vec<u32> = (0..self.degree).collect();
        let free: Vec<u32> = (0..self.degree).collect();
        fn rec(free: &[u32], left: u32, image: &mut Vec<u32>, out: &mut Vec<Permutation>) {
            if left == 0 {
                out.push(Permutation::from_image(image.clone()).expect("matching is valid"));
                return;
            }
            if (free.len() as u32) < 2 * left {
                return;
            }
            let first = free[0];
            let rest = &free[1..];
            // first stays fixed
            rec(rest, left, image, out);
            // first pairs with each later free point
            for (idx, &other) in rest.iter().enumerate() {
                image[first as usize] = other;
                image[other as usize] = first;
                let remaining: Vec<u32> = rest
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != idx)
                    .map(|(_, &v)| v)
                    .collect();
                rec(&remaining, left - 1, image, out);
                image[first as usize] = first;
                image[other as usize] = other;
            }
        }
        rec(&free, self.transpositions, &mut image, &mut out);
        Ok(out)
    }

    /// `n! / (2^t · t! · (n−2t)!)`, via the falling product of the top
    /// `2t` terms.
    pub fn size(&self) -> u128 {
        let n = self.degree as u128;
        let t = self.transpositions as u128;
        let falling: u128 = (n - 2 * t + 1..=n).product::<u128>().max(1);
        let t_fact: u128 = (1..=t).product::<u128>().max(1);
        falling / (2u128.pow(t as u32) * t_fact)
    }
}

/// Cycle types realized by products `a·b` with `a, b` in the class.
///
/// The square of a class is conjugation-invariant, so one factor may be
/// frozen at the canonical representative while the other runs over the
/// full class.
pub fn squared_class(class: &InvolutionClass) -> Result<BTreeSet<CycleType>> {
    let a = class.canonical_rep();
    let mut types = BTreeSet::new();
    for b in class.members()? {
        types.insert(a.compose(&b).cycle_type());
    }
    Ok(types)
}

/// How class-pair statistics are evaluated.
#[derive(Clone, Copy, Debug)]
pub enum ClassScanMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

/// Empirical truncated addition: the largest distance from the identity
/// realized by a product of one member of each class. To be compared
/// against [`oplus_predicted`].
pub fn oplus_empirical(
    c1: &InvolutionClass,
    c2: &InvolutionClass,
    mode: ClassScanMode,
) -> Result<Rat> {
    if c1.degree != c2.degree {
        return Err(Error::HorizonMismatch(
            c1.degree as usize,
            c2.degree as usize,
        ));
    }
    let a = c1.canonical_rep();
    let mut worst = Rat::zero();
    match mode {
        ClassScanMode::Exhaustive => {
            for b in c2.members()? {
                let d = a.compose(&b).hamming_to_identity().ratio();
                if d > worst {
                    worst = d;
                }
            }
        }
        ClassScanMode::Sampled { count, seed } => {
            for i in 0..count {
                let b = c2.sample(derive_seed(seed, &[i as u64]));
                let d = a.compose(&b).hamming_to_identity().ratio();
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    Ok(worst)
}

/// The lattice prediction `min(1, d1(C1) + d1(C2))`.
pub fn oplus_predicted(c1: &InvolutionClass, c2: &InvolutionClass) -> Rat {
    let sum = c1.d1() + c2.d1();
    sum.min(Rat::from_integer(1))
}

/// One-sided approximate inclusion defect
/// `max_{x ∈ C1²} min_{y ∈ C2²} d(x, y)`, computed over one representative
/// per cycle type of `C1²` (distance to a conjugation-closed set is a
/// class function) against all permutations with types in `C2²`.
pub fn inclusion_defect(c1: &InvolutionClass, c2: &InvolutionClass) -> Result<Rat> {
    if c1.degree != c2.degree {
        return Err(Error::HorizonMismatch(
            c1.degree as usize,
            c2.degree as usize,
        ));
    }
    let n = c1.degree;
    let a = c1.canonical_rep();
    let mut reps: Vec<(CycleType, Permutation)> = Vec::new();
    for b in c1.members()? {
        let x = a.compose(&b);
        let ty = x.cycle_type();
        if !reps.iter().any(|(t, _)| *t == ty) {
            reps.push((ty, x));
        }
    }
    let targets = squared_class(c2)?;
    let mut worst = Rat::zero();
    for (_, x) in &reps {
        let mut best: Option<Rat> = None;
        for w in all_permutations(n) {
            if !targets.contains(&w.cycle_type()) {
                continue;
            }
            let d = x.hamming(&w).ratio();
            if best.map_or(true, |b| d < b) {
                best = Some(d);
            }
            if best == Some(Rat::zero()) {
                break;
            }
        }
        let d = best.expect("class squares are nonempty");
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// A complement witness: `b` commutes with `a`, its class value is within
/// the certificate of `1 − d1(a)`, and the product `ab` moves all but the
/// certified fraction of points.
#[derive(Clone, Debug)]
pub struct NegWitness {
    pub b: Permutation,
    /// `|d1(class of b) − (1 − d1(a))|`, exact.
    pub class_error: Rat,
    /// `1 − d1(ab)`, exact.
    pub support_error: Rat,
}

#[derive(Clone, Debug)]
pub enum NegOutcome {
    Witness(NegWitness),
    /// The recipe's best certificates exceed the requested tolerance.
    Infeasible { min_epsilon: Rat, best: NegWitness },
}

/// Constructs the complement witness by pairing up the fixed points of
/// `a`; the leftover parity point (at most one) accounts for the exact
/// certificate slack `(f mod 2)/n`. Not including transpositions of `a`
/// itself is deliberate: any shared transposition would be cancelled in
/// `ab`, shrinking its support.
pub fn neg_witness(a: &Permutation, epsilon: Rat) -> Result<NegOutcome> {
    if !a.is_involution() {
        return Err(Error::NotInvolution);
    }
    let n = a.degree();
    let fixed: Vec<u32> = (0..n).filter(|&i| a.apply(i) == i).collect();
    let mut image: Vec<u32> = (0..n).collect();
    for pair in fixed.chunks_exact(2) {
        image[pair[0] as usize] = pair[1];
        image[pair[1] as usize] = pair[0];
    }
    let b = Permutation::from_image(image).expect("pairing fixed points");
    let one = Rat::from_integer(1);
    let target = one - a.hamming_to_identity().ratio();
    let class_error = {
        let v = b.hamming_to_identity().ratio();
        if v >= target {
            v - target
        } else {
            target - v
        }
    };
    let support_error = one - a.compose(&b).hamming_to_identity().ratio();
    let witness = NegWitness {
        b,
        class_error,
        support_error,
    };
    let worst = witness.class_error.max(witness.support_error);
    if worst <= epsilon {
        Ok(NegOutcome::Witness(witness))
    } else {
        Ok(NegOutcome::Infeasible {
            min_epsilon: worst,
            best: witness,
        })
    }
}

/// Decides whether some permutation with the given full cycle type is a
/// product of two involutions having exactly `t` transpositions each.
///
/// A factor pair corresponds to a reversing involution: it pairs up
/// equal-length cycles (contributing the cycle length to both factor
/// counts, fixed points included) or reverses a cycle in place (an odd
/// `ℓ`-cycle contributes `(ℓ−1)/2` to both, an even one splits `ℓ/2` and
/// `ℓ/2 − 1` with a free orientation). Balancing the orientations needs
/// an even number of unpaired even cycles, and each pairing raises the
/// common count by one, giving the closed form below.
pub fn admits_factor_count(lambda: &CycleType, t: u32) -> bool {
    let n: u32 = lambda.0.iter().sum();
    let r = lambda.0.len() as u32;
    let even_cycles = lambda.0.iter().filter(|&&l| l % 2 == 0).count() as u32;
    if even_cycles % 2 != 0 {
        return false;
    }
    debug_assert_eq!((n - r) % 2, 0);
    let base = (n - r) / 2;
    if t < base {
        return false;
    }
    let q = t - base;
    let max_pairs: u32 = {
        let mut counts = std::collections::HashMap::new();
        for &l in &lambda.0 {
            *counts.entry(l).or_insert(0u32) += 1;
        }
        counts.values().map(|&m| m / 2).sum()
    };
    q <= max_pairs
}

/// A two-conjugates decomposition: `conjugate(g, a) · conjugate(h, a)` is
/// within `epsilon_actual` of the target, where `a` is the canonical
/// involution with `t` transpositions.
#[derive(Clone, Debug)]
pub struct TwoConjWitness {
    pub g: Permutation,
    pub h: Permutation,
    /// Exact recomposition distance.
    pub epsilon_actual: Rat,
}

#[derive(Clone, Debug)]
pub enum TwoConjOutcome {
    Found(TwoConjWitness),
    Infeasible(TwoConjInfeasible),
}

#[derive(Clone, Debug)]
pub struct TwoConjInfeasible {
    /// Best achievable recomposition distance (exact below the scan cap,
    /// best known from the constructive family above it).
    pub min_epsilon: Rat,
    /// Smallest `t` admitting an exact decomposition of the target, when
    /// any does.
    pub min_exact_t: Option<u32>,
}

/// Degree cap for the exact fallback scan.
const TWO_CONJ_SCAN_CAP: u32 = 8;

/// Writes `b ≈ u·v` with both factors conjugates of the canonical
/// `t`-transposition involution, returning the conjugators and the exact
/// recomposition certificate.
///
/// Exact decompositions follow the reversing-involution structure of the
/// cycle type; when the type does not admit the count, the nearest
/// admissible product is found by a full scan at degree ≤ 8 and by local
/// padding edits above that (certificates then report the achieved, not
/// necessarily minimal, distance).
pub fn two_conjugates(b: &Permutation, t: u32, epsilon: Rat) -> Result<TwoConjOutcome> {
    let n = b.degree();
    if 2 * t > n {
        return Err(Error::TooManyTranspositions { n, t });
    }
    let (w, dist) = nearest_admissible(b, t)?;
    let (u, v) = factor_into_involutions(&w, t);
    debug_assert_eq!(u.compose(&v), w);
    debug_assert!(u.is_involution() && v.is_involution());
    debug_assert_eq!(u.support_size(), 2 * t);
    debug_assert_eq!(v.support_size(), 2 * t);
    let a = InvolutionClass::new(n, t)?.canonical_rep();
    let g = conjugator_between(&a, &u).expect("u has t transpositions");
    let h = conjugator_between(&a, &v).expect("v has t transpositions");
    if dist <= epsilon {
        Ok(TwoConjOutcome::Found(TwoConjWitness {
            g,
            h,
            epsilon_actual: dist,
        }))
    } else {
        let min_exact_t = (0..=n / 2).find(|&tt| admits_factor_count(&b.cycle_type(), tt));
        Ok(TwoConjOutcome::Infeasible(TwoConjInfeasible {
            min_epsilon: dist,
            min_exact_t,
        }))
    }
}

/// Nearest permutation (exact by scan at small degree) whose cycle type
/// admits a `(t, t)` factorization.
fn nearest_admissible(b: &Permutation, t: u32) -> Result<(Permutation, Rat)> {
    if admits_factor_count(&b.cycle_type(), t) {
        return Ok((b.clone(), Rat::zero()));
    }
    let n = b.degree();
    if n <= TWO_CONJ_SCAN_CAP {
        let mut admissible_types: std::collections::HashMap<CycleType, bool> =
            std::collections::HashMap::new();
        let mut best: Option<(Permutation, Rat)> = None;
        for w in all_permutations(n) {
            let ty = w.cycle_type();
            let ok = *admissible_types
                .entry(ty)
                .or_insert_with_key(|ty| admits_factor_count(ty, t));
            if !ok {
                continue;
            }
            let d = b.hamming(&w).ratio();
            if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
                best = Some((w, d));
            }
        }
        return best
            .map(Ok)
            .unwrap_or(Err(Error::TooManyTranspositions { n, t }));
    }
    // Above the scan cap: steer the cycle type by local edits, composing b
    // with transpositions of its own fixed points (each edit touches two
    // points). This reaches any pair/parity deficit expressible on the
    // free points; the certificate stays honest either way.
    let mut w = b.clone();
    for _ in 0..n {
        if admits_factor_count(&w.cycle_type(), t) {
            break;
        }
        let fixed: Vec<u32> = (0..n).filter(|&i| w.apply(i) == i).collect();
        if fixed.len() < 2 {
            break;
        }
        let patch = Permutation::from_cycles(n, &[vec![fixed[0], fixed[1]]])?;
        w = w.compose(&patch);
    }
    if !admits_factor_count(&w.cycle_type(), t) {
        return Err(Error::ExhaustiveCap {
            degree: n,
            cap: TWO_CONJ_SCAN_CAP,
        });
    }
    let d = b.hamming(&w).ratio();
    Ok((w, d))
}

/// Builds the factor pair for an admissible target: pair equal-length
/// cycles until the count is reached, reverse the rest, and alternate the
/// orientation of unpaired even cycles so both factors land on `t`.
fn factor_into_involutions(w: &Permutation, t: u32) -> (Permutation, Permutation) {
    let n = w.degree();
    let mut cycles: Vec<Vec<u32>> = w.cycles();
    let moved: Vec<bool> = {
        let mut m = vec![false; n as usize];
        for c in &cycles {
            for &x in c {
                m[x as usize] = true;
            }
        }
        m
    };
    for i in 0..n {
        if !moved[i as usize] {
            cycles.push(vec![i]);
        }
    }
    // Deterministic processing order: by length, then by minimal element.
    cycles.sort_by_key(|c| (c.len(), c[0]));
    let r = cycles.len() as u32;
    let base = (n - r) / 2;
    let mut pairs_needed = t - base;

    let mut u = vec![0u32; n as usize];
    let mut v = vec![0u32; n as usize];
    let mut singles: Vec<Vec<u32>> = Vec::new();
    let mut i = 0;
    while i < cycles.len() {
        if pairs_needed > 0
            && i + 1 < cycles.len()
            && cycles[i].len() == cycles[i + 1].len()
        {
            let (c, c2) = (&cycles[i], &cycles[i + 1]);
            let l = c.len();
            // v: c_i ↔ c'_{−i};  u: c_i ↔ c'_{1−i};  then u∘v steps the cycle.
            for k in 0..l {
                v[c[k] as usize] = c2[(l - k) % l];
                v[c2[(l - k) % l] as usize] = c[k];
                u[c[k] as usize] = c2[(l + 1 - k) % l];
                u[c2[(l + 1 - k) % l] as usize] = c[k];
            }
            pairs_needed -= 1;
            i += 2;
        } else {
            singles.push(cycles[i].clone());
            i += 1;
        }
    }
    // Unpaired cycles: reversal in place. Even cycles alternate which
    // factor takes the heavier side so the totals balance.
    let mut heavy_to_u = true;
    for c in &singles {
        let l = c.len();
        let s = if l % 2 == 1 {
            0
        } else if heavy_to_u {
            heavy_to_u = false;
            1
        } else {
            heavy_to_u = true;
            0
        };
        // v: c_i → c_{s−i};  u: c_i → c_{s+1−i} (indices mod l).
        for k in 0..l {
            v[c[k] as usize] = c[(s + l - k) % l];
            u[c[k] as usize] = c[(s + 1 + l - k) % l];
        }
    }
    let u = Permutation::from_image(u).expect("reversal structure is a bijection");
    let v = Permutation::from_image(v).expect("reversal structure is a bijection");
    (u, v)
}

/// One row of the class-pair measurement table.
#[derive(Clone, Debug)]
pub struct ClassPairRow {
    pub degree: u32,
    pub t1: u32,
    pub t2: u32,
    pub oplus_empirical: Rat,
    pub oplus_predicted: Rat,
    /// Whether disjoint supports fit, which forces equality.
    pub equality_expected: bool,
    pub inclusion_defect: Rat,
}

/// Full class-pair table at one degree (exhaustive; degree ≤ 7).
pub fn class_pair_table(degree: u32) -> Result<Vec<ClassPairRow>> {
    let mut rows = Vec::new();
    for t1 in 0..=degree / 2 {
        for t2 in 0..=degree / 2 {
            let c1 = InvolutionClass::new(degree, t1)?;
            let c2 = InvolutionClass::new(degree, t2)?;
            rows.push(ClassPairRow {
                degree,
                t1,
                t2,
                oplus_empirical: oplus_empirical(&c1, &c2, ClassScanMode::Exhaustive)?,
                oplus_predicted: oplus_predicted(&c1, &c2),
                equality_expected: 2 * t1 + 2 * t2 <= degree,
                inclusion_defect: inclusion_defect(&c1, &c2)?,
            });
        }
    }
    Ok(rows)
}
