//! Permutations of `{0, …, n−1}` and the normalized Hamming metric.
//!
//! Points are 0-based internally; the text formats (`Display`/`FromStr`)
//! are 1-based. Composition is fixed crate-wide as "right factor acts
//! first": `compose(p, q)` maps `i` to `p(q(i))`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Exact rational with headroom for degree products up to `2^32 − 1`.
pub type Rat = Ratio<u128>;

/// A bijection of `{0, …, n−1}`, stored as its image vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<u32>,
}

impl Permutation {
    /// Builds a permutation from an image vector, rejecting non-bijections.
    pub fn from_image(image: Vec<u32>) -> Result<Self> {
        if image.is_empty() {
            return Err(Error::ZeroDegree);
        }
        let n = image.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidImage(format!("degree {n} too large")));
        }
        let mut seen = vec![false; n];
        for &v in &image {
            let Some(slot) = seen.get_mut(v as usize) else {
                return Err(Error::InvalidImage(format!("value {v} out of range")));
            };
            if *slot {
                return Err(Error::InvalidImage(format!("value {v} repeated")));
            }
            *slot = true;
        }
        Ok(Permutation { image })
    }

    /// The identity of `Sym(n)`.
    ///
    /// Panics if `n == 0`.
    pub fn identity(n: u32) -> Self {
        assert!(n >= 1, "degree must be positive");
        Permutation {
            image: (0..n).collect(),
        }
    }

    /// Builds a permutation of `Sym(n)` from disjoint cycles (0-based).
    pub fn from_cycles(n: u32, cycles: &[Vec<u32>]) -> Result<Self> {
        let mut p = Self::identity(n);
        let mut touched = vec![false; n as usize];
        for cycle in cycles {
            for (idx, &a) in cycle.iter().enumerate() {
                if a >= n {
                    return Err(Error::InvalidImage(format!("cycle point {a} out of range")));
                }
                if touched[a as usize] {
                    return Err(Error::InvalidImage(format!("cycle point {a} repeated")));
                }
                touched[a as usize] = true;
                let b = cycle[(idx + 1) % cycle.len()];
                p.image[a as usize] = b;
            }
        }
        Ok(p)
    }

    pub fn degree(&self) -> u32 {
        self.image.len() as u32
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    /// Image of a single point.
    pub fn apply(&self, i: u32) -> u32 {
        self.image[i as usize]
    }

    /// `self ∘ other`: the right factor acts first.
    ///
    /// Panics on degree mismatch.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(
            self.degree(),
            other.degree(),
            "compose needs equal degrees"
        );
        Permutation {
            image: other.image.iter().map(|&i| self.image[i as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![0u32; self.image.len()];
        for (i, &v) in self.image.iter().enumerate() {
            image[v as usize] = i as u32;
        }
        Permutation { image }
    }

    /// `α ∘ self ∘ α⁻¹` for `α = alpha`; preserves cycle type.
    ///
    /// Panics on degree mismatch.
    pub fn conjugate_by(&self, alpha: &Self) -> Self {
        assert_eq!(
            self.degree(),
            alpha.degree(),
            "conjugation needs equal degrees"
        );
        let mut image = vec![0u32; self.image.len()];
        for (i, &si) in self.image.iter().enumerate() {
            image[alpha.image[i] as usize] = alpha.image[si as usize];
        }
        Permutation { image }
    }

    /// Acts as `self` on the first block and as `other` (shifted) on the rest.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.degree();
        let mut image = self.image.clone();
        image.extend(other.image.iter().map(|&v| v + n));
        Permutation { image }
    }

    /// Normalized Hamming distance as an exact rational.
    ///
    /// Panics on degree mismatch.
    pub fn hamming(&self, other: &Self) -> HammingValue {
        assert_eq!(
            self.degree(),
            other.degree(),
            "hamming needs equal degrees"
        );
        let numerator = self
            .image
            .iter()
            .zip(&other.image)
            .filter(|(a, b)| a != b)
            .count() as u64;
        HammingValue {
            numerator,
            denominator: self.degree() as u64,
        }
    }

    /// Distance to the identity, i.e. moved points over degree.
    pub fn hamming_to_identity(&self) -> HammingValue {
        let numerator = self.support_size() as u64;
        HammingValue {
            numerator,
            denominator: self.degree() as u64,
        }
    }

    /// Number of non-fixed points.
    pub fn support_size(&self) -> u32 {
        self.image
            .iter()
            .enumerate()
            .filter(|(i, &v)| *i as u32 != v)
            .count() as u32
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i as u32 == v)
    }

    pub fn is_involution(&self) -> bool {
        self.image
            .iter()
            .enumerate()
            .all(|(i, &v)| self.image[v as usize] == i as u32)
    }

    /// Disjoint cycles covering all non-fixed points, each rotated to start
    /// at its minimal element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let n = self.image.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] || self.image[start] == start as u32 {
                seen[start] = true;
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur as u32);
                cur = self.image[cur] as usize;
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Full cycle type (fixed points included), sorted descending.
    pub fn cycle_type(&self) -> CycleType {
        let n = self.image.len();
        let mut seen = vec![false; n];
        let mut parts = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0u32;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                len += 1;
                cur = self.image[cur] as usize;
            }
            parts.push(len);
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        CycleType(parts)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

/// Canonical text form: `"n: i1 i2 … in"`, 1-based.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.degree())?;
        for &v in &self.image {
            write!(f, " {}", v + 1)?;
        }
        Ok(())
    }
}

/// Parses either image notation `"n: i1 … in"` (1-based) or cycle notation
/// `"(a b c)(d e)"`, optionally prefixed by `"n:"` to pin the degree.
impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (declared, rest) = match s.split_once(':') {
            Some((head, rest)) if head.trim().chars().all(|c| c.is_ascii_digit()) && !head.trim().is_empty() => {
                let n: u32 = head
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad degree `{head}`")))?;
                (Some(n), rest.trim())
            }
            _ => (None, s),
        };
        if rest.starts_with('(') || (rest.is_empty() && declared.is_some()) {
            parse_cycle_notation(declared, rest)
        } else {
            parse_image_notation(declared, rest)
        }
    }
}

fn parse_image_notation(declared: Option<u32>, body: &str) -> Result<Permutation> {
    let entries: Vec<u32> = body
        .split_whitespace()
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad image entry `{tok}`")))
        })
        .collect::<Result<_>>()?;
    if let Some(n) = declared {
        if entries.len() != n as usize {
            return Err(Error::Parse(format!(
                "declared degree {n} but {} entries",
                entries.len()
            )));
        }
    }
    let image: Vec<u32> = entries
        .iter()
        .map(|&v| {
            v.checked_sub(1)
                .ok_or_else(|| Error::Parse("image entries are 1-based".into()))
        })
        .collect::<Result<_>>()?;
    Permutation::from_image(image)
}

fn parse_cycle_notation(declared: Option<u32>, body: &str) -> Result<Permutation> {
    let mut cycles: Vec<Vec<u32>> = Vec::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        if !rest.starts_with('(') {
            return Err(Error::Parse(format!("expected `(` at `{rest}`")));
        }
        let close = rest
            .find(')')
            .ok_or_else(|| Error::Parse("unclosed cycle".into()))?;
        let inner = &rest[1..close];
        let cycle: Vec<u32> = inner
            .split_whitespace()
            .map(|tok| {
                let v: u32 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad cycle entry `{tok}`")))?;
                v.checked_sub(1)
                    .ok_or_else(|| Error::Parse("cycle entries are 1-based".into()))
            })
            .collect::<Result<_>>()?;
        if !cycle.is_empty() {
            cycles.push(cycle);
        }
        rest = rest[close + 1..].trim_start();
    }
    let max_point = cycles.iter().flatten().copied().max();
    let n = match (declared, max_point) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::Parse(format!(
                "cycle point {} exceeds declared degree {n}",
                m + 1
            )))
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::Parse("empty cycle form needs a degree prefix".into())),
    };
    Permutation::from_cycles(n, &cycles)
}

/// A normalized Hamming distance: disagreement count over degree, kept
/// exact. Bound checks should go through [`HammingValue::ratio`].
#[derive(Clone, Copy)]
pub struct HammingValue {
    numerator: u64,
    denominator: u64,
}

impl HammingValue {
    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn ratio(&self) -> Rat {
        Rat::new(self.numerator as u128, self.denominator as u128)
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }
}

impl PartialEq for HammingValue {
    fn eq(&self, other: &Self) -> bool {
        self.numerator as u128 * other.denominator as u128
            == other.numerator as u128 * self.denominator as u128
    }
}

impl Eq for HammingValue {}

impl PartialOrd for HammingValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HammingValue {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.numerator as u128 * other.denominator as u128)
            .cmp(&(other.numerator as u128 * self.denominator as u128))
    }
}

impl fmt::Display for HammingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl fmt::Debug for HammingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Full cycle type of a permutation: the partition of the degree into cycle
/// lengths (fixed points included), sorted descending.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleType(pub Vec<u32>);

impl CycleType {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Lengths `>= 2` only.
    pub fn nontrivial(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied().filter(|&l| l >= 2)
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl fmt::Debug for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycleType({self})")
    }
}

/// Uniform permutation via Fisher–Yates on a seeded ChaCha stream.
pub fn random_permutation(n: u32, seed: u64) -> Permutation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_permutation_with(n, &mut rng)
}

pub fn random_permutation_with<R: Rng>(n: u32, rng: &mut R) -> Permutation {
    assert!(n >= 1, "degree must be positive");
    let mut image: Vec<u32> = (0..n).collect();
    for i in (1..n as usize).rev() {
        let j = rng.random_range(0..=i);
        image.swap(i, j);
    }
    Permutation { image }
}

/// Uniform involution with exactly `t` transpositions.
pub fn random_involution(n: u32, t: u32, seed: u64) -> Result<Permutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_involution_with(n, t, &mut rng)
}

pub fn random_involution_with<R: Rng>(n: u32, t: u32, rng: &mut R) -> Result<Permutation> {
    if 2 * t as u64 > n as u64 {
        return Err(Error::TooManyTranspositions { n, t });
    }
    // A uniform shuffle paired off two-by-two induces a uniform matching.
    let points = random_permutation_with(n, rng);
    let mut image: Vec<u32> = (0..n).collect();
    for pair in points.image().chunks_exact(2).take(t as usize) {
        image[pair[0] as usize] = pair[1];
        image[pair[1] as usize] = pair[0];
    }
    Ok(Permutation { image })
}

/// All of `Sym(n)` in lexicographic image order, via itertools.
///
/// The independent slow counterpart (hand-rolled successor stepping) lives
/// in [`crate::oracles::enumerate_sym`].
pub fn all_permutations(n: u32) -> impl Iterator<Item = Permutation> {
    use itertools::Itertools;
    assert!(n >= 1, "degree must be positive");
    (0..n)
        .permutations(n as usize)
        .map(|image| Permutation { image })
}

/// Some permutation `g` with `g · from · g⁻¹ = to`; errors if the cycle
/// types differ.
pub fn conjugator_between(from: &Permutation, to: &Permutation) -> Result<Permutation> {
    if from.degree() != to.degree() {
        return Err(Error::InvalidImage("conjugator needs equal degrees".into()));
    }
    let group = |p: &Permutation| -> HashMap<u32, Vec<Vec<u32>>> {
        let mut all: Vec<Vec<u32>> = p.cycles();
        let moved: Vec<bool> = {
            let mut m = vec![false; p.degree() as usize];
            for c in &all {
                for &x in c {
                    m[x as usize] = true;
                }
            }
            m
        };
        for (i, used) in moved.iter().enumerate() {
            if !used {
                all.push(vec![i as u32]);
            }
        }
        let mut by_len: HashMap<u32, Vec<Vec<u32>>> = HashMap::new();
        for c in all {
            by_len.entry(c.len() as u32).or_default().push(c);
        }
        by_len
    };
    let mut from_cycles = group(from);
    let to_cycles = group(to);
    let mut image = vec![0u32; from.degree() as usize];
    for (len, tos) in to_cycles {
        let Some(froms) = from_cycles.remove(&len) else {
            return Err(Error::InvalidImage("cycle types differ".into()));
        };
        if froms.len() != tos.len() {
            return Err(Error::InvalidImage("cycle types differ".into()));
        }
        for (fc, tc) in froms.iter().zip(&tos) {
            for (a, b) in fc.iter().zip(tc) {
                image[*a as usize] = *b;
            }
        }
    }
    Ok(Permutation { image })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(image: &[u32]) -> Permutation {
        Permutation::from_image(image.to_vec()).unwrap()
    }

    #[test]
    fn identity_basics() {
        assert_eq!(Permutation::identity(3).image(), &[0, 1, 2]);
        let p = random_permutation(5, 7);
        assert_eq!(Permutation::identity(5).compose(&p), p);
        assert!(Permutation::identity(4)
            .hamming(&Permutation::identity(4))
            .is_zero());
    }

    #[test]
    #[should_panic(expected = "degree must be positive")]
    fn identity_rejects_zero() {
        let _ = Permutation::identity(0);
    }

    #[test]
    fn compose_examples() {
        let swap = perm(&[1, 0]);
        assert_eq!(swap.compose(&swap), Permutation::identity(2));
        // (0 1 2) squared is (0 2 1).
        let c3 = Permutation::from_cycles(3, &[vec![0, 1, 2]]).unwrap();
        let expected = Permutation::from_cycles(3, &[vec![0, 2, 1]]).unwrap();
        assert_eq!(c3.compose(&c3), expected);
        for seed in 0..5 {
            let p = random_permutation(6, seed);
            assert_eq!(p.compose(&p.inverse()), Permutation::identity(6));
        }
    }

    #[test]
    #[should_panic(expected = "equal degrees")]
    fn compose_rejects_degree_mismatch() {
        let _ = Permutation::identity(3).compose(&Permutation::identity(4));
    }

    #[test]
    fn composition_order_is_right_first() {
        // q maps 0→1, p maps 1→2, so compose(p, q) maps 0→2.
        let q = Permutation::from_cycles(3, &[vec![0, 1]]).unwrap();
        let p = Permutation::from_cycles(3, &[vec![1, 2]]).unwrap();
        assert_eq!(p.compose(&q).apply(0), 2);
    }

    #[test]
    fn hamming_examples() {
        let t = Permutation::from_cycles(6, &[vec![0, 1]]).unwrap();
        let d = Permutation::identity(6).hamming(&t);
        assert_eq!((d.numerator(), d.denominator()), (2, 6));
        let a = Permutation::from_cycles(4, &[vec![0, 1]]).unwrap();
        let b = Permutation::from_cycles(4, &[vec![0, 2]]).unwrap();
        assert_eq!(a.hamming(&b).ratio(), Rat::new(3, 4));
    }

    #[test]
    fn hamming_bi_invariance() {
        for seed in 0..10 {
            let p = random_permutation(9, crate::derive_seed(seed, &[0]));
            let q = random_permutation(9, crate::derive_seed(seed, &[1]));
            let r = random_permutation(9, crate::derive_seed(seed, &[2]));
            let d = p.hamming(&q);
            assert_eq!(r.compose(&p).hamming(&r.compose(&q)), d);
            assert_eq!(p.compose(&r).hamming(&q.compose(&r)), d);
        }
    }

    #[test]
    fn conjugation_preserves_cycle_type() {
        assert_eq!(
            random_permutation(6, 3).conjugate_by(&Permutation::identity(6)),
            random_permutation(6, 3)
        );
        let alpha = random_permutation(6, 11);
        assert!(Permutation::identity(6)
            .conjugate_by(&alpha)
            .is_identity());
        for seed in 0..10 {
            let sigma = random_permutation(6, crate::derive_seed(seed, &[4]));
            let alpha = random_permutation(6, crate::derive_seed(seed, &[5]));
            assert_eq!(sigma.conjugate_by(&alpha).cycle_type(), sigma.cycle_type());
        }
    }

    #[test]
    fn conjugate_matches_explicit_product() {
        for seed in 0..10 {
            let sigma = random_permutation(7, crate::derive_seed(seed, &[6]));
            let alpha = random_permutation(7, crate::derive_seed(seed, &[7]));
            let explicit = alpha.compose(&sigma).compose(&alpha.inverse());
            assert_eq!(sigma.conjugate_by(&alpha), explicit);
        }
    }

    #[test]
    fn direct_sum_examples() {
        let t = perm(&[1, 0]);
        let expected = Permutation::from_cycles(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(t.direct_sum(&t), expected);
        // Disjoint supports add Hamming numerators.
        let p = random_permutation(5, 21);
        let q = random_permutation(3, 22);
        let p2 = random_permutation(5, 23);
        let q2 = random_permutation(3, 24);
        let lhs = p.direct_sum(&q).hamming(&p2.direct_sum(&q2));
        let num = p.hamming(&p2).numerator() + q.hamming(&q2).numerator();
        assert_eq!((lhs.numerator(), lhs.denominator()), (num, 8));
    }

    #[test]
    fn cycle_decomposition() {
        assert!(Permutation::identity(4).cycles().is_empty());
        let c = Permutation::from_cycles(3, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(c.cycles(), vec![vec![0, 1, 2]]);
        // Recomposition oracle over random inputs.
        for seed in 0..20 {
            let p = random_permutation(8, crate::derive_seed(seed, &[9]));
            let rebuilt = Permutation::from_cycles(8, &p.cycles()).unwrap();
            assert_eq!(rebuilt, p);
        }
    }

    #[test]
    fn cycle_type_includes_fixed_points() {
        let p = Permutation::from_cycles(5, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(p.cycle_type().0, vec![3, 1, 1]);
        assert_eq!(p.cycle_type().to_string(), "3+1+1");
    }

    #[test]
    fn involution_sampler() {
        assert!(random_involution(6, 0, 1).unwrap().is_identity());
        for seed in 0..20 {
            let p = random_involution(9, 3, seed).unwrap();
            assert!(p.is_involution());
            assert_eq!(p.support_size(), 6);
        }
        assert!(matches!(
            random_involution(5, 3, 0),
            Err(Error::TooManyTranspositions { .. })
        ));
    }

    #[test]
    fn text_roundtrip_and_cycle_parse() {
        let p = perm(&[2, 0, 1, 3]);
        assert_eq!(p.to_string(), "4: 3 1 2 4");
        assert_eq!(p.to_string().parse::<Permutation>().unwrap(), p);
        let parsed: Permutation = "(1 2)(3 4)".parse().unwrap();
        assert_eq!(
            parsed,
            Permutation::from_cycles(4, &[vec![0, 1], vec![2, 3]]).unwrap()
        );
        let with_prefix: Permutation = "5: (1 2)".parse().unwrap();
        assert_eq!(with_prefix.degree(), 5);
        assert_eq!("5:".parse::<Permutation>().unwrap(), Permutation::identity(5));
        assert!("(0 1)".parse::<Permutation>().is_err());
        assert!("3: 1 1 2".parse::<Permutation>().is_err());
        assert!("3: (1 2".parse::<Permutation>().is_err());
    }

    #[test]
    fn conjugator_between_matches() {
        for seed in 0..10 {
            let a = random_permutation(8, crate::derive_seed(seed, &[10]));
            let g0 = random_permutation(8, crate::derive_seed(seed, &[11]));
            let b = a.conjugate_by(&g0);
            let g = conjugator_between(&a, &b).unwrap();
            assert_eq!(a.conjugate_by(&g), b);
        }
        let t = Permutation::from_cycles(4, &[vec![0, 1]]).unwrap();
        let c = Permutation::from_cycles(4, &[vec![0, 1, 2]]).unwrap();
        assert!(conjugator_between(&t, &c).is_err());
    }
}
