//! Finite-horizon machinery for stagewise elements of products of
//! symmetric groups.
//!
//! Infinite objects are represented by a finite prefix plus an optional
//! closed-form tail rule; every limit-flavoured quantity (tail suprema,
//! limsup values, defect limits) is therefore an explicit *horizon
//! estimate*, and the types say so rather than pretending to hold a limit.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cut_lift::updown;
use crate::perm::{all_permutations, random_permutation_with, Permutation, Rat};
use crate::{derive_seed, Error, Result};

/// Closed-form generator extending a degree sequence beyond its prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum TailRule {
    /// `k_n = a·n + b`
    Affine { a: u64, b: u64 },
    /// `k_n = ⌈a·r^n⌉`, with `a` and `r` exact rationals so that e.g.
    /// powers of two come out bit-exact.
    Geometric { a: Rat, r: Rat },
}

impl TailRule {
    fn value_at(&self, n: usize) -> Option<u128> {
        match self {
            TailRule::Affine { a, b } => {
                (*a as u128).checked_mul(n as u128)?.checked_add(*b as u128)
            }
            TailRule::Geometric { a, r } => {
                let e = u32::try_from(n).ok()?;
                let numer = a.numer().checked_mul(r.numer().checked_pow(e)?)?;
                let denom = a.denom().checked_mul(r.denom().checked_pow(e)?)?;
                Some(numer.div_ceil(denom))
            }
        }
    }

    /// Whether the rule is monotonically unbounded (the `lim k_n = ∞` regime).
    fn is_unbounded(&self) -> bool {
        match self {
            TailRule::Affine { a, .. } => *a >= 1,
            TailRule::Geometric { a, r } => {
                *a > Rat::from_integer(0) && *r > Rat::from_integer(1)
            }
        }
    }
}

/// A degree sequence `(k_0, …, k_{N−1})` with an optional tail rule.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSequence {
    prefix: Vec<u128>,
    tail_rule: Option<TailRule>,
}

impl ShapeSequence {
    pub fn new(prefix: Vec<u128>, tail_rule: Option<TailRule>) -> Result<Self> {
        for (i, &k) in prefix.iter().enumerate() {
            if k == 0 {
                return Err(Error::ZeroShapeEntry(i));
            }
        }
        Ok(ShapeSequence { prefix, tail_rule })
    }

    pub fn explicit(prefix: Vec<u128>) -> Result<Self> {
        Self::new(prefix, None)
    }

    /// Materializes `horizon` entries of an affine rule `k_n = a·n + b`.
    pub fn affine(a: u64, b: u64, horizon: usize) -> Result<Self> {
        let rule = TailRule::Affine { a, b };
        Self::from_rule(rule, horizon)
    }

    /// Materializes `horizon` entries of a geometric rule `k_n = ⌈a·r^n⌉`.
    pub fn geometric(a: Rat, r: Rat, horizon: usize) -> Result<Self> {
        let rule = TailRule::Geometric { a, r };
        Self::from_rule(rule, horizon)
    }

    fn from_rule(rule: TailRule, horizon: usize) -> Result<Self> {
        let mut prefix = Vec::with_capacity(horizon);
        for n in 0..horizon {
            let v = rule.value_at(n).ok_or(Error::HorizonExceeded(n))?;
            prefix.push(v);
        }
        Self::new(prefix, Some(rule))
    }

    /// Parses a generator spec `"affine a b"` or `"geometric a r"`.
    pub fn from_spec(spec: &str, horizon: usize) -> Result<Self> {
        let toks: Vec<&str> = spec.split_whitespace().collect();
        match toks.as_slice() {
            ["affine", a, b] => {
                let a = a.parse().map_err(|_| Error::Parse(format!("bad affine a `{a}`")))?;
                let b = b.parse().map_err(|_| Error::Parse(format!("bad affine b `{b}`")))?;
                Self::affine(a, b, horizon)
            }
            ["geometric", a, r] => {
                let a = crate::parse_ratio(a)?;
                let r = crate::parse_ratio(r)?;
                Self::geometric(a, r, horizon)
            }
            _ => Err(Error::Parse(format!("unknown shape spec `{spec}`"))),
        }
    }

    pub fn horizon(&self) -> usize {
        self.prefix.len()
    }

    pub fn entries(&self) -> &[u128] {
        &self.prefix
    }

    /// Value at a stage, extending by the tail rule when needed.
    pub fn value_at(&self, n: usize) -> Result<u128> {
        if let Some(&k) = self.prefix.get(n) {
            return Ok(k);
        }
        let rule = self.tail_rule.as_ref().ok_or(Error::HorizonExceeded(n))?;
        rule.value_at(n)
            .filter(|&v| v >= 1)
            .ok_or(Error::HorizonExceeded(n))
    }

    /// Entry at a stage as a permutation degree; errors when it does not
    /// fit the supported degree range.
    pub fn degree_at(&self, n: usize) -> Result<u32> {
        let v = self.value_at(n)?;
        u32::try_from(v).map_err(|_| Error::HorizonExceeded(n))
    }

    /// True when the declared tail rule grows without bound; experiments
    /// that assume `lim k_n = ∞` refuse shapes where this fails.
    pub fn is_unbounded(&self) -> bool {
        self.tail_rule.as_ref().is_some_and(TailRule::is_unbounded)
    }

    pub fn tail_rule(&self) -> Option<&TailRule> {
        self.tail_rule.as_ref()
    }
}

/// One permutation per stage, degrees matching a shape.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedElement {
    shape: ShapeSequence,
    stages: Vec<Permutation>,
}

impl TruncatedElement {
    pub fn new(shape: ShapeSequence, stages: Vec<Permutation>) -> Result<Self> {
        if stages.len() != shape.horizon() {
            return Err(Error::HorizonMismatch(stages.len(), shape.horizon()));
        }
        for (n, p) in stages.iter().enumerate() {
            if p.degree() as u128 != shape.prefix[n] {
                return Err(Error::ShapeMismatch(n));
            }
        }
        Ok(TruncatedElement { shape, stages })
    }

    /// Panics if an entry exceeds the supported permutation degree range.
    pub fn identity(shape: ShapeSequence) -> Self {
        let stages = shape
            .prefix
            .iter()
            .map(|&k| Permutation::identity(u32::try_from(k).expect("degree fits u32")))
            .collect();
        TruncatedElement { shape, stages }
    }

    /// Stagewise-uniform random element; stage seeds derive from `seed`.
    /// Panics if an entry exceeds the supported permutation degree range.
    pub fn random(shape: ShapeSequence, seed: u64) -> Self {
        let stages = shape
            .prefix
            .iter()
            .enumerate()
            .map(|(n, &k)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n as u64]));
                random_permutation_with(u32::try_from(k).expect("degree fits u32"), &mut rng)
            })
            .collect();
        TruncatedElement { shape, stages }
    }

    pub fn shape(&self) -> &ShapeSequence {
        &self.shape
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, n: usize) -> &Permutation {
        &self.stages[n]
    }

    pub fn stages(&self) -> &[Permutation] {
        &self.stages
    }

    /// Writes the text format: a `shape:` header, then one permutation per
    /// line in image notation.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "shape:")?;
        for &k in &self.shape.prefix {
            write!(w, " {k}")?;
        }
        writeln!(w)?;
        for p in &self.stages {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let header = header.trim();
        let rest = header
            .strip_prefix("shape:")
            .ok_or_else(|| Error::Parse("missing `shape:` header".into()))?;
        let prefix: Vec<u128> = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u128>()
                    .map_err(|_| Error::Parse(format!("bad shape entry `{tok}`")))
            })
            .collect::<Result<_>>()?;
        let shape = ShapeSequence::explicit(prefix)?;
        let mut stages = Vec::with_capacity(shape.horizon());
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            stages.push(line.parse()?);
        }
        TruncatedElement::new(shape, stages)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_from(&mut s.as_bytes())
    }
}

/// A set of stage indices: an explicit (finite) list or an arithmetic
/// progression, the only form accepted where an infinite set is required.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexSet {
    Explicit(Vec<usize>),
    Progression { start: usize, step: usize },
}

impl IndexSet {
    pub fn evens() -> Self {
        IndexSet::Progression { start: 0, step: 2 }
    }

    pub fn odds() -> Self {
        IndexSet::Progression { start: 1, step: 2 }
    }

    pub fn all() -> Self {
        IndexSet::Progression { start: 0, step: 1 }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, IndexSet::Progression { step, .. } if *step >= 1)
    }

    pub fn contains(&self, n: usize) -> bool {
        match self {
            IndexSet::Explicit(v) => v.binary_search(&n).is_ok(),
            IndexSet::Progression { start, step } => {
                n >= *start && *step >= 1 && (n - start) % step == 0
            }
        }
    }

    pub fn members_below(&self, horizon: usize) -> Vec<usize> {
        match self {
            IndexSet::Explicit(v) => v.iter().copied().filter(|&n| n < horizon).collect(),
            IndexSet::Progression { start, step } => {
                if *step == 0 {
                    return Vec::new();
                }
                (*start..horizon).step_by(*step).collect()
            }
        }
    }
}

/// Tail profile of stagewise Hamming distances over an index set: entry
/// `j` is the supremum over member stages `≥ j` within the horizon.
///
/// Everything here is a horizon estimate of a limsup, never the limit
/// itself; [`DsProfile::limsup_estimate`] reads the last fixed tail window.
#[derive(Clone, Debug)]
pub struct DsProfile {
    values: Vec<Rat>,
    horizon: usize,
}

/// Tail-window starts used across the crate: `{0, N/4, N/2, 3N/4}`.
pub fn tail_window_starts(horizon: usize) -> [usize; 4] {
    [0, horizon / 4, horizon / 2, 3 * horizon / 4]
}

impl DsProfile {
    /// Suffix suprema, one entry per stage; non-increasing.
    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// `(window start, suffix supremum)` at the fixed window schedule.
    pub fn windows(&self) -> Vec<(usize, Rat)> {
        tail_window_starts(self.horizon)
            .iter()
            .map(|&s| (s, self.values.get(s).copied().unwrap_or_else(Rat::zero)))
            .collect()
    }

    /// Horizon estimate of the limsup: the value at the last tail window.
    pub fn limsup_estimate(&self) -> Rat {
        self.windows().last().map(|&(_, v)| v).unwrap_or_else(Rat::zero)
    }
}

/// Suffix suprema of `d(a_n, b_n)` over stages in `s`.
pub fn d_s_profile(a: &TruncatedElement, b: &TruncatedElement, s: &IndexSet) -> Result<DsProfile> {
    if a.horizon() != b.horizon() {
        return Err(Error::HorizonMismatch(a.horizon(), b.horizon()));
    }
    for n in 0..a.horizon() {
        if a.shape.prefix[n] != b.shape.prefix[n] {
            return Err(Error::ShapeMismatch(n));
        }
    }
    if !s.is_infinite() {
        return Err(Error::FiniteIndexSet);
    }
    let horizon = a.horizon();
    let mut per_stage = vec![Rat::zero(); horizon];
    for n in s.members_below(horizon) {
        per_stage[n] = a.stage(n).hamming(b.stage(n)).ratio();
    }
    let member = {
        let mut flags = vec![false; horizon];
        for n in s.members_below(horizon) {
            flags[n] = true;
        }
        flags
    };
    let mut values = vec![Rat::zero(); horizon];
    let mut running = Rat::zero();
    for j in (0..horizon).rev() {
        if member[j] && per_stage[j] > running {
            running = per_stage[j];
        }
        values[j] = running;
    }
    Ok(DsProfile { values, horizon })
}

/// Tail rule for an almost permutation beyond its tabulated horizon.
#[derive(Clone, Debug, PartialEq)]
pub enum AlmostTail {
    /// `n ↦ n + offset` (clamped at zero on the left for negative offsets).
    Shift { offset: i64 },
}

/// A finitely-represented partial self-map of the stage indices:
/// cofinitely injective with cofinite range (a bijection up to finitely
/// many errors).
#[derive(Clone, Debug, PartialEq)]
pub struct AlmostPermutation {
    images: Vec<usize>,
    exceptional: BTreeSet<usize>,
    co_range: BTreeSet<usize>,
    tail_rule: Option<AlmostTail>,
}

impl AlmostPermutation {
    /// Validates on the horizon: injectivity off the exceptional set, and
    /// a flux check that values missed inside the horizon (beyond the
    /// declared co-range, and not reachable through the tail rule) are
    /// balanced by images exported past the horizon.
    pub fn new(
        images: Vec<usize>,
        exceptional: BTreeSet<usize>,
        co_range: BTreeSet<usize>,
        tail_rule: Option<AlmostTail>,
    ) -> Result<Self> {
        let horizon = images.len();
        let mut hit = vec![false; horizon];
        let mut exported = 0usize;
        let mut seen = std::collections::HashMap::new();
        for (n, &v) in images.iter().enumerate() {
            if v < horizon {
                hit[v] = true;
            } else {
                exported += 1;
            }
            if exceptional.contains(&n) {
                continue;
            }
            if let Some(prev) = seen.insert(v, n) {
                return Err(Error::InvalidAlmostPermutation(format!(
                    "stages {prev} and {n} collide on value {v} outside the exceptional set"
                )));
            }
        }
        let reachable_from_tail = |v: usize| match tail_rule {
            Some(AlmostTail::Shift { offset }) => v as i64 - offset >= horizon as i64,
            None => false,
        };
        let missed = (0..horizon)
            .filter(|&v| !hit[v] && !co_range.contains(&v) && !reachable_from_tail(v))
            .count();
        if missed > exported {
            return Err(Error::InvalidAlmostPermutation(format!(
                "{missed} undeclared values missed inside the horizon but only {exported} images leave it"
            )));
        }
        Ok(AlmostPermutation {
            images,
            exceptional,
            co_range,
            tail_rule,
        })
    }

    pub fn identity(horizon: usize) -> Self {
        AlmostPermutation {
            images: (0..horizon).collect(),
            exceptional: BTreeSet::new(),
            co_range: BTreeSet::new(),
            tail_rule: Some(AlmostTail::Shift { offset: 0 }),
        }
    }

    /// The shift `n ↦ n + offset`; negative offsets clamp the first
    /// `|offset|` stages to the identity and mark them exceptional.
    pub fn shift(offset: i64, horizon: usize) -> Self {
        let mut exceptional = BTreeSet::new();
        let mut co_range = BTreeSet::new();
        let images = (0..horizon)
            .map(|n| {
                let v = n as i64 + offset;
                if v < 0 {
                    exceptional.insert(n);
                    n
                } else {
                    v as usize
                }
            })
            .collect();
        if offset > 0 {
            for v in 0..(offset as usize).min(horizon) {
                co_range.insert(v);
            }
        }
        AlmostPermutation {
            images,
            exceptional,
            co_range,
            tail_rule: Some(AlmostTail::Shift { offset }),
        }
    }

    pub fn horizon(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn exceptional(&self) -> &BTreeSet<usize> {
        &self.exceptional
    }

    pub fn co_range(&self) -> &BTreeSet<usize> {
        &self.co_range
    }

    pub fn is_exceptional(&self, n: usize) -> bool {
        self.exceptional.contains(&n)
    }

    /// Value at a stage, using the tail rule beyond the horizon.
    pub fn value_at(&self, n: usize) -> Option<usize> {
        if n < self.images.len() {
            return Some(self.images[n]);
        }
        match self.tail_rule {
            Some(AlmostTail::Shift { offset }) => {
                let v = n as i64 + offset;
                (v >= 0).then_some(v as usize)
            }
            None => None,
        }
    }

    /// `self ∘ inner` on the common horizon (the right factor acts first,
    /// matching permutation composition). Stages where either factor is
    /// exceptional or leaves the horizon are marked exceptional.
    pub fn compose(&self, inner: &Self) -> Self {
        let horizon = inner.horizon();
        let mut exceptional = BTreeSet::new();
        let images = (0..horizon)
            .map(|n| {
                if inner.is_exceptional(n) {
                    exceptional.insert(n);
                    return n;
                }
                let mid = inner.images[n];
                match self.value_at(mid) {
                    Some(v) if !self.is_exceptional(mid) => v,
                    _ => {
                        exceptional.insert(n);
                        n
                    }
                }
            })
            .collect();
        AlmostPermutation {
            images,
            exceptional,
            co_range: BTreeSet::new(),
            tail_rule: None,
        }
    }
}

/// Result of applying `ψ_f`: the stagewise image together with its
/// well-definedness certificate.
#[derive(Clone, Debug)]
pub struct PsiOutput {
    pub element: TruncatedElement,
    pub certificate: PsiCertificate,
}

/// Certificate attached to a `ψ_f` application: the worst relative degree
/// gap `|k_{f(n)} − l_n| / l_n` over evaluated stages (the map is an
/// isomorphism candidate only when this tends to zero), plus the stages
/// that had to be filled with the identity.
#[derive(Clone, Debug)]
pub struct PsiCertificate {
    pub max_ratio_gap: Rat,
    pub flagged_stages: Vec<usize>,
    pub evaluated_stages: usize,
}

/// Stage `n` of the output is `a_{f(n)} ↕ Sym(l_n)`; stages where `f(n)`
/// is exceptional or outside the horizon of `a` become the identity and
/// are flagged, never an error.
pub fn psi_f(
    a: &TruncatedElement,
    f: &AlmostPermutation,
    target: &ShapeSequence,
) -> Result<PsiOutput> {
    let horizon = target.horizon();
    let mut stages = Vec::with_capacity(horizon);
    let mut flagged = Vec::new();
    let mut max_gap = Rat::zero();
    let mut evaluated = 0usize;
    for n in 0..horizon {
        let l_n = target.degree_at(n)?;
        let source = f.value_at(n).filter(|_| !f.is_exceptional(n));
        match source {
            Some(m) if m < a.horizon() => {
                let k = a.shape.prefix[m];
                let gap = Rat::new(k.abs_diff(l_n as u128), l_n as u128);
                if gap > max_gap {
                    max_gap = gap;
                }
                evaluated += 1;
                stages.push(updown(a.stage(m), l_n)?);
            }
            _ => {
                flagged.push(n);
                stages.push(Permutation::identity(l_n));
            }
        }
    }
    Ok(PsiOutput {
        element: TruncatedElement::new(target.clone(), stages)?,
        certificate: PsiCertificate {
            max_ratio_gap: max_gap,
            flagged_stages: flagged,
            evaluated_stages: evaluated,
        },
    })
}

/// A single map `Sym(n) → Sym(m)` that can be queried pointwise.
pub trait PermutationMap {
    fn source_degree(&self) -> u32;
    fn target_degree(&self) -> u32;
    fn eval(&self, x: &Permutation) -> Permutation;
}

/// A stagewise family of maps `h_n : Sym(k_n) → Sym(l_n)`.
pub trait StageMapFamily {
    fn source_degree(&self, stage: usize) -> u32;
    fn target_degree(&self, stage: usize) -> u32;
    fn eval(&self, stage: usize, x: &Permutation) -> Permutation;

    fn at(&self, stage: usize) -> StageView<'_, Self>
    where
        Self: Sized,
    {
        StageView { family: self, stage }
    }
}

/// One stage of a family, viewed as a single map.
pub struct StageView<'a, F> {
    family: &'a F,
    stage: usize,
}

impl<F: StageMapFamily> PermutationMap for StageView<'_, F> {
    fn source_degree(&self) -> u32 {
        self.family.source_degree(self.stage)
    }

    fn target_degree(&self) -> u32 {
        self.family.target_degree(self.stage)
    }

    fn eval(&self, x: &Permutation) -> Permutation {
        self.family.eval(self.stage, x)
    }
}

/// `h_n = · ↕ Sym(l_n)`: pure cutting/lifting between two shapes.
pub struct UpdownFamily {
    source: ShapeSequence,
    target: ShapeSequence,
}

impl UpdownFamily {
    pub fn new(source: ShapeSequence, target: ShapeSequence) -> Result<Self> {
        if source.horizon() != target.horizon() {
            return Err(Error::HorizonMismatch(source.horizon(), target.horizon()));
        }
        Ok(UpdownFamily { source, target })
    }
}

impl StageMapFamily for UpdownFamily {
    fn source_degree(&self, stage: usize) -> u32 {
        self.source.degree_at(stage).expect("degree fits u32")
    }

    fn target_degree(&self, stage: usize) -> u32 {
        self.target.degree_at(stage).expect("degree fits u32")
    }

    fn eval(&self, stage: usize, x: &Permutation) -> Permutation {
        updown(x, self.target_degree(stage)).expect("target degrees are positive")
    }
}

/// `h_n = ad_{τ_n} ∘ (· ↕ Sym(l_n))` with seeded stagewise conjugators.
pub struct ConjUpdownFamily {
    source: ShapeSequence,
    target: ShapeSequence,
    conjugators: Vec<Permutation>,
}

impl ConjUpdownFamily {
    pub fn new(source: ShapeSequence, target: ShapeSequence, seed: u64) -> Result<Self> {
        if source.horizon() != target.horizon() {
            return Err(Error::HorizonMismatch(source.horizon(), target.horizon()));
        }
        let conjugators = target
            .prefix
            .iter()
            .enumerate()
            .map(|(n, &l)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n as u64]));
                random_permutation_with(u32::try_from(l).expect("degree fits u32"), &mut rng)
            })
            .collect();
        Ok(ConjUpdownFamily {
            source,
            target,
            conjugators,
        })
    }

    pub fn conjugator(&self, stage: usize) -> &Permutation {
        &self.conjugators[stage]
    }
}

impl StageMapFamily for ConjUpdownFamily {
    fn source_degree(&self, stage: usize) -> u32 {
        self.source.degree_at(stage).expect("degree fits u32")
    }

    fn target_degree(&self, stage: usize) -> u32 {
        self.target.degree_at(stage).expect("degree fits u32")
    }

    fn eval(&self, stage: usize, x: &Permutation) -> Permutation {
        updown(x, self.target_degree(stage))
            .expect("target degrees are positive")
            .conjugate_by(&self.conjugators[stage])
    }
}

/// `h_n ≡ identity`: maximally non-surjective, trivially homomorphic.
pub struct ConstantIdentityFamily {
    source: ShapeSequence,
    target: ShapeSequence,
}

impl ConstantIdentityFamily {
    pub fn new(source: ShapeSequence, target: ShapeSequence) -> Result<Self> {
        if source.horizon() != target.horizon() {
            return Err(Error::HorizonMismatch(source.horizon(), target.horizon()));
        }
        Ok(ConstantIdentityFamily { source, target })
    }
}

impl StageMapFamily for ConstantIdentityFamily {
    fn source_degree(&self, stage: usize) -> u32 {
        self.source.degree_at(stage).expect("degree fits u32")
    }

    fn target_degree(&self, stage: usize) -> u32 {
        self.target.degree_at(stage).expect("degree fits u32")
    }

    fn eval(&self, stage: usize, _x: &Permutation) -> Permutation {
        Permutation::identity(self.target_degree(stage))
    }
}

/// How a defect supremum is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum DefectMode {
    /// Full scan; only allowed at small degree.
    Exhaustive,
    /// Seeded sample of the given size.
    Sampled { count: usize, seed: u64 },
}

/// Which way a reported defect value bounds the true supremum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundDirection {
    /// Full scan: the value is the supremum.
    Exact,
    /// Sampled scan: the true supremum is at least this value.
    Lower,
    /// Mixed sampling (sampled inner infimum): no one-sided guarantee.
    Heuristic,
}

/// A measured defect together with its direction-of-bound metadata.
#[derive(Clone, Copy, Debug)]
pub struct DefectEstimate {
    pub value: Rat,
    pub direction: BoundDirection,
    pub samples: u64,
}

impl DefectEstimate {
    fn exact(value: Rat) -> Self {
        DefectEstimate {
            value,
            direction: BoundDirection::Exact,
            samples: 0,
        }
    }
}

impl std::fmt::Display for DefectEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.direction {
            BoundDirection::Exact => "exact",
            BoundDirection::Lower => "lower-bound",
            BoundDirection::Heuristic => "heuristic",
        };
        write!(f, "{}/{} ({tag})", self.value.numer(), self.value.denom())
    }
}

/// Cap on full `Sym(n)` scans inside the defect functionals.
pub const DEFECT_EXHAUSTIVE_CAP: u32 = 7;

/// Supremum (or sampled max, reported as a lower bound) of
/// `d(h(x)·h(y), h(x·y))` over the source group.
pub fn hom_defect(map: &impl PermutationMap, mode: DefectMode) -> Result<DefectEstimate> {
    let k = map.source_degree();
    match mode {
        DefectMode::Exhaustive => {
            if k > DEFECT_EXHAUSTIVE_CAP {
                return Err(Error::ExhaustiveCap {
                    degree: k,
                    cap: DEFECT_EXHAUSTIVE_CAP,
                });
            }
            let all: Vec<(Permutation, Permutation)> =
                all_permutations(k).map(|x| (map.eval(&x), x)).collect();
            let mut worst = Rat::zero();
            for (hx, x) in &all {
                for (hy, y) in &all {
                    let d = hx.compose(hy).hamming(&map.eval(&x.compose(y))).ratio();
                    if d > worst {
                        worst = d;
                    }
                }
            }
            Ok(DefectEstimate::exact(worst))
        }
        DefectMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = Rat::zero();
            for _ in 0..count {
                let x = random_permutation_with(k, &mut rng);
                let y = random_permutation_with(k, &mut rng);
                let d = map
                    .eval(&x)
                    .compose(&map.eval(&y))
                    .hamming(&map.eval(&x.compose(&y)))
                    .ratio();
                if d > worst {
                    worst = d;
                }
            }
            Ok(DefectEstimate {
                value: worst,
                direction: BoundDirection::Lower,
                samples: count as u64,
            })
        }
    }
}

/// Covering radius of the image: `sup_x inf_y d(x, h(y))`. Exhaustive mode
/// scans both sides; sampled mode samples `x` and keeps the inner infimum
/// exhaustive while the source degree allows, which still yields a lower
/// bound of the supremum.
pub fn surj_defect(map: &impl PermutationMap, mode: DefectMode) -> Result<DefectEstimate> {
    let k = map.source_degree();
    let l = map.target_degree();
    let inner_exhaustive = k <= DEFECT_EXHAUSTIVE_CAP;
    let inf_for = |x: &Permutation, rng: &mut ChaCha8Rng, samples: usize| -> Rat {
        let mut best: Option<Rat> = None;
        if inner_exhaustive {
            for y in all_permutations(k) {
                let d = x.hamming(&map.eval(&y)).ratio();
                if best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
                if best == Some(Rat::zero()) {
                    break;
                }
            }
        } else {
            for _ in 0..samples {
                let y = random_permutation_with(k, rng);
                let d = x.hamming(&map.eval(&y)).ratio();
                if best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best.unwrap_or_else(Rat::zero)
    };
    match mode {
        DefectMode::Exhaustive => {
            if l > DEFECT_EXHAUSTIVE_CAP || k > DEFECT_EXHAUSTIVE_CAP {
                return Err(Error::ExhaustiveCap {
                    degree: l.max(k),
                    cap: DEFECT_EXHAUSTIVE_CAP,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let mut worst = Rat::zero();
            for x in all_permutations(l) {
                let d = inf_for(&x, &mut rng, 0);
                if d > worst {
                    worst = d;
                }
            }
            Ok(DefectEstimate::exact(worst))
        }
        DefectMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = Rat::zero();
            for _ in 0..count {
                let x = random_permutation_with(l, &mut rng);
                let d = inf_for(&x, &mut rng, count);
                if d > worst {
                    worst = d;
                }
            }
            Ok(DefectEstimate {
                value: worst,
                direction: if inner_exhaustive {
                    BoundDirection::Lower
                } else {
                    BoundDirection::Heuristic
                },
                samples: count as u64,
            })
        }
    }
}

/// Worst distortion of pairwise distances: `sup |d(x,y) − d(h(x),h(y))|`.
pub fn iso_defect(map: &impl PermutationMap, mode: DefectMode) -> Result<DefectEstimate> {
    let k = map.source_degree();
    let abs = |a: Rat, b: Rat| if a >= b { a - b } else { b - a };
    match mode {
        DefectMode::Exhaustive => {
            // Pairwise over Sym(k)², so one degree lower than the other caps.
            if k > 6 {
                return Err(Error::ExhaustiveCap { degree: k, cap: 6 });
            }
            let all: Vec<(Permutation, Permutation)> =
                all_permutations(k).map(|x| (map.eval(&x), x)).collect();
            let mut worst = Rat::zero();
            for (hx, x) in &all {
                for (hy, y) in &all {
                    let d = abs(x.hamming(y).ratio(), hx.hamming(hy).ratio());
                    if d > worst {
                        worst = d;
                    }
                }
            }
            Ok(DefectEstimate::exact(worst))
        }
        DefectMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = Rat::zero();
            for _ in 0..count {
                let x = random_permutation_with(k, &mut rng);
                let y = random_permutation_with(k, &mut rng);
                let d = abs(
                    x.hamming(&y).ratio(),
                    map.eval(&x).hamming(&map.eval(&y)).ratio(),
                );
                if d > worst {
                    worst = d;
                }
            }
            Ok(DefectEstimate {
                value: worst,
                direction: BoundDirection::Lower,
                samples: count as u64,
            })
        }
    }
}

/// Per-stage defect measurements with running tail suprema.
#[derive(Clone, Debug)]
pub struct DefectReport {
    pub rows: Vec<DefectRow>,
    /// `tail_sup[n]` = sup over stages `≥ n` of the per-stage worst defect;
    /// non-increasing in `n`.
    pub tail_sup: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub struct DefectRow {
    pub stage: usize,
    pub hom: DefectEstimate,
    pub surj: DefectEstimate,
    pub iso: DefectEstimate,
}

/// Options for [`DefectReport::measure`]: full scans are used at stages
/// whose degrees fit under the exhaustive caps, seeded samples elsewhere.
#[derive(Clone, Copy, Debug)]
pub struct DefectOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for DefectOptions {
    fn default() -> Self {
        DefectOptions {
            samples: 200,
            seed: 0,
        }
    }
}

impl DefectReport {
    pub fn measure(
        family: &impl StageMapFamily,
        horizon: usize,
        opts: DefectOptions,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(horizon);
        for stage in 0..horizon {
            let view = family.at(stage);
            let k = view.source_degree();
            let l = view.target_degree();
            let pick = |cap: u32, lane: u64| -> DefectMode {
                if k <= cap && l <= cap {
                    DefectMode::Exhaustive
                } else {
                    DefectMode::Sampled {
                        count: opts.samples,
                        seed: derive_seed(opts.seed, &[stage as u64, lane]),
                    }
                }
            };
            rows.push(DefectRow {
                stage,
                hom: hom_defect(&view, pick(DEFECT_EXHAUSTIVE_CAP, 0))?,
                surj: surj_defect(&view, pick(DEFECT_EXHAUSTIVE_CAP, 1))?,
                iso: iso_defect(&view, pick(6, 2))?,
            });
        }
        let mut tail_sup = vec![Rat::zero(); rows.len()];
        let mut running = Rat::zero();
        for n in (0..rows.len()).rev() {
            let worst = rows[n]
                .hom
                .value
                .max(rows[n].surj.value)
                .max(rows[n].iso.value);
            if worst > running {
                running = worst;
            }
            tail_sup[n] = running;
        }
        Ok(DefectReport { rows, tail_sup })
    }

    /// CSV rows `stage,hom,surj,iso,tail_sup` with exact rationals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,hom,surj,iso,tail_sup\n");
        for row in &self.rows {
            let t = &self.tail_sup[row.stage];
            let _ = writeln!(
                out,
                "{},{}/{},{}/{},{}/{},{}/{}",
                row.stage,
                row.hom.value.numer(),
                row.hom.value.denom(),
                row.surj.value.numer(),
                row.surj.value.denom(),
                row.iso.value.numer(),
                row.iso.value.denom(),
                t.numer(),
                t.denom(),
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "stage": r.stage,
                    "hom": estimate_json(&r.hom),
                    "surj": estimate_json(&r.surj),
                    "iso": estimate_json(&r.iso),
                    "tail_sup": rat_string(&self.tail_sup[r.stage]),
                })
            })
            .collect();
        json!({ "kind": "defect-report", "horizon_estimate": true, "rows": rows })
    }
}

pub fn rat_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn estimate_json(e: &DefectEstimate) -> serde_json::Value {
    let dir = match e.direction {
        BoundDirection::Exact => "exact",
        BoundDirection::Lower => "lower-bound",
        BoundDirection::Heuristic => "heuristic",
    };
    json!({ "value": rat_string(&e.value), "direction": dir, "samples": e.samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut_lift::cut_hom_bound;
    use crate::perm::random_permutation;

    fn shape_n_plus(c: u64, horizon: usize) -> ShapeSequence {
        ShapeSequence::affine(1, c, horizon).unwrap()
    }

    #[test]
    fn shape_rules() {
        let s = shape_n_plus(2, 5);
        assert_eq!(s.entries(), &[2, 3, 4, 5, 6]);
        assert_eq!(s.value_at(10).unwrap(), 12);
        assert!(s.is_unbounded());
        let flat = ShapeSequence::from_spec("affine 0 5", 4).unwrap();
        assert!(!flat.is_unbounded());
        let geo = ShapeSequence::from_spec("geometric 1 2", 7).unwrap();
        assert_eq!(geo.value_at(100).unwrap(), 1u128 << 100);
        assert_eq!(geo.entries(), &[1, 2, 4, 8, 16, 32, 64]);
        assert!(ShapeSequence::explicit(vec![3, 0, 2]).is_err());
    }

    #[test]
    fn truncated_element_text_roundtrip() {
        let shape = shape_n_plus(2, 4);
        let a = TruncatedElement::random(shape, 17);
        let text = a.to_text();
        assert!(text.starts_with("shape: 2 3 4 5\n"));
        let back = TruncatedElement::from_text(&text).unwrap();
        assert_eq!(back.stages(), a.stages());
    }

    #[test]
    fn d_s_profile_zero_and_shift_decay() {
        let shape = shape_n_plus(2, 32);
        let a = TruncatedElement::random(shape.clone(), 3);
        let p = d_s_profile(&a, &a, &IndexSet::all()).unwrap();
        assert!(p.values().iter().all(|v| v.is_zero()));

        // One planted transposition per stage: tail sup from j is 2/(j+2).
        let stages: Vec<Permutation> = a
            .stages()
            .iter()
            .map(|p| p.compose(&Permutation::from_cycles(p.degree(), &[vec![0, 1]]).unwrap()))
            .collect();
        let b = TruncatedElement::new(shape, stages).unwrap();
        let p = d_s_profile(&a, &b, &IndexSet::all()).unwrap();
        for (j, v) in p.values().iter().enumerate() {
            assert_eq!(*v, Rat::new(2, (j + 2) as u128));
        }
        assert_eq!(p.limsup_estimate(), Rat::new(2, 26));
    }

    #[test]
    fn d_s_profile_sees_only_members() {
        let shape = shape_n_plus(2, 16);
        let a = TruncatedElement::identity(shape.clone());
        // Disagreements planted on odd stages only.
        let stages: Vec<Permutation> = (0..16)
            .map(|n| {
                let k = shape.degree_at(n).unwrap();
                if n % 2 == 1 {
                    Permutation::from_cycles(k, &[vec![0, 1]]).unwrap()
                } else {
                    Permutation::identity(k)
                }
            })
            .collect();
        let b = TruncatedElement::new(shape, stages).unwrap();
        let evens = d_s_profile(&a, &b, &IndexSet::evens()).unwrap();
        assert!(evens.values().iter().all(|v| v.is_zero()));
        let odds = d_s_profile(&a, &b, &IndexSet::odds()).unwrap();
        assert!(odds.values().iter().all(|v| !v.is_zero()));
        assert!(d_s_profile(&a, &b, &IndexSet::Explicit(vec![1, 3])).is_err());
    }

    #[test]
    fn almost_permutation_validation() {
        let f = AlmostPermutation::shift(1, 8);
        assert_eq!(f.value_at(3), Some(4));
        assert_eq!(f.value_at(20), Some(21));
        assert!(f.co_range().contains(&0));
        let g = AlmostPermutation::shift(-1, 8);
        assert!(g.is_exceptional(0));
        assert_eq!(g.value_at(5), Some(4));
        // Collision outside the exceptional set is rejected.
        assert!(AlmostPermutation::new(
            vec![0, 0, 1],
            BTreeSet::new(),
            BTreeSet::new(),
            None
        )
        .is_err());
        // Same collision declared exceptional passes.
        assert!(AlmostPermutation::new(
            vec![0, 0, 1],
            BTreeSet::from([0]),
            BTreeSet::from([2]),
            None
        )
        .is_ok());
        // Missing a value without export or declaration is rejected.
        assert!(AlmostPermutation::new(
            vec![1, 2, 1],
            BTreeSet::from([2]),
            BTreeSet::new(),
            None
        )
        .is_err());
    }

    #[test]
    fn psi_identity_and_exact_shift() {
        let shape = shape_n_plus(1, 10);
        let a = TruncatedElement::random(shape.clone(), 5);
        let out = psi_f(&a, &AlmostPermutation::identity(10), &shape).unwrap();
        assert_eq!(out.element.stages(), a.stages());
        assert!(out.certificate.max_ratio_gap.is_zero());
        assert!(out.certificate.flagged_stages.is_empty());

        // k_n = n+1, l_n = n+2, f(n) = n+1: ratios are exactly 1, and each
        // output stage equals the shifted source stage.
        let target = shape_n_plus(2, 9);
        let out = psi_f(&a, &AlmostPermutation::shift(1, 9), &target).unwrap();
        assert!(out.certificate.max_ratio_gap.is_zero());
        assert!(out.certificate.flagged_stages.is_empty());
        for n in 0..9 {
            assert_eq!(out.element.stage(n), a.stage(n + 1));
        }
    }

    #[test]
    fn psi_flags_out_of_horizon() {
        let shape = shape_n_plus(1, 6);
        let a = TruncatedElement::random(shape.clone(), 1);
        let out = psi_f(&a, &AlmostPermutation::shift(1, 6), &shape).unwrap();
        assert_eq!(out.certificate.flagged_stages, vec![5]);
        assert!(out.element.stage(5).is_identity());
    }

    #[test]
    fn psi_cofinite_agreement() {
        let shape = shape_n_plus(1, 12);
        let a = TruncatedElement::random(shape.clone(), 9);
        let f = AlmostPermutation::shift(1, 12);
        // Same map with one value patched: agrees cofinitely.
        let mut images = f.images().to_vec();
        images[2] = 0;
        let g = AlmostPermutation::new(
            images,
            BTreeSet::new(),
            BTreeSet::from([3]),
            Some(AlmostTail::Shift { offset: 1 }),
        )
        .unwrap();
        let target = shape_n_plus(2, 12);
        let fa = psi_f(&a, &f, &target).unwrap().element;
        let ga = psi_f(&a, &g, &target).unwrap().element;
        let disagreements = (0..12).filter(|&n| fa.stage(n) != ga.stage(n)).count();
        assert!(disagreements <= 1);
    }

    #[test]
    fn psi_perturbation_stays_in_budget() {
        // ε-perturbed inputs stay within ε_{f(n)} + 4|k_{f(n)} − l_n|/l_n.
        let source = shape_n_plus(3, 16);
        let target = shape_n_plus(2, 15);
        let f = AlmostPermutation::shift(1, 15);
        let a = TruncatedElement::random(source.clone(), 31);
        let stages: Vec<Permutation> = a
            .stages()
            .iter()
            .enumerate()
            .map(|(n, p)| {
                // Perturb by one transposition: ε_n = 2/k_n → 0.
                let k = source.degree_at(n).unwrap();
                p.compose(&Permutation::from_cycles(k, &[vec![0, 1]]).unwrap())
            })
            .collect();
        let a2 = TruncatedElement::new(source.clone(), stages).unwrap();
        let fa = psi_f(&a, &f, &target).unwrap().element;
        let fa2 = psi_f(&a2, &f, &target).unwrap().element;
        for n in 0..15 {
            let kfn = source.entries()[n + 1];
            let ln = target.entries()[n];
            let eps = Rat::new(2, kfn as u128);
            let budget = eps + Rat::new(4 * kfn.abs_diff(ln) as u128, ln as u128);
            assert!(fa.stage(n).hamming(fa2.stage(n)).ratio() <= budget);
        }
    }

    #[test]
    fn psi_composition_pure_cuts_agree_exactly() {
        // Cutting is transitive, so two shrinking steps equal one.
        let s0 = shape_n_plus(4, 20);
        let s1 = shape_n_plus(3, 20);
        let s2 = shape_n_plus(2, 20);
        let f = AlmostPermutation::shift(1, 20);
        let a = TruncatedElement::random(s0.clone(), 77);
        let step = psi_f(&a, &f, &s1).unwrap().element;
        let two_step = psi_f(&step, &f, &s2).unwrap().element;
        let direct = psi_f(&a, &f.compose(&f), &s2).unwrap().element;
        for n in 0..18 {
            assert_eq!(two_step.stage(n), direct.stage(n));
        }
    }

    #[test]
    fn psi_composition_within_error_budget() {
        // Cut below the final degree and lift back: the detour through the
        // smaller degree costs at most the round-trip bound per stage.
        let s0 = shape_n_plus(4, 20);
        let s1 = shape_n_plus(2, 20);
        let s2 = shape_n_plus(4, 20);
        let f = AlmostPermutation::shift(1, 20);
        let a = TruncatedElement::random(s0.clone(), 78);
        let step = psi_f(&a, &f, &s1).unwrap().element;
        let two_step = psi_f(&step, &f, &s2).unwrap().element;
        let direct = psi_f(&a, &f.compose(&f), &s2).unwrap().element;
        let mut nonzero = 0;
        for n in 0..18 {
            let l1 = s1.entries()[n + 1] as u128;
            let l2 = s2.entries()[n] as u128;
            let budget = Rat::new(2 * (l2 - l1), l2);
            let d = two_step.stage(n).hamming(direct.stage(n)).ratio();
            assert!(d <= budget);
            if !d.is_zero() {
                nonzero += 1;
            }
        }
        assert!(nonzero > 0, "expected the detour to cost something somewhere");
    }

    #[test]
    fn hom_defect_examples() {
        // Exact conjugation has zero defect.
        let shape = ShapeSequence::explicit(vec![5, 5, 5]).unwrap();
        let conj = ConjUpdownFamily::new(shape.clone(), shape.clone(), 4).unwrap();
        let d = hom_defect(&conj.at(1), DefectMode::Exhaustive).unwrap();
        assert!(d.value.is_zero());
        assert_eq!(d.direction, BoundDirection::Exact);

        // Cutting by one obeys the 2/(k−1) bound, exhaustively for k ≤ 6.
        for k in 2..=6u32 {
            let source = ShapeSequence::explicit(vec![k as u128]).unwrap();
            let target = ShapeSequence::explicit(vec![k as u128 - 1]).unwrap();
            let fam = UpdownFamily::new(source, target).unwrap();
            let d = hom_defect(&fam.at(0), DefectMode::Exhaustive).unwrap();
            assert!(d.value <= cut_hom_bound(k, k - 1));
        }
        // Cap respected.
        let big = ShapeSequence::explicit(vec![9]).unwrap();
        let fam = UpdownFamily::new(big.clone(), big).unwrap();
        assert!(hom_defect(&fam.at(0), DefectMode::Exhaustive).is_err());
    }

    #[test]
    fn surj_defect_examples() {
        // Bijective stage maps cover everything.
        let shape = ShapeSequence::explicit(vec![5]).unwrap();
        let conj = ConjUpdownFamily::new(shape.clone(), shape.clone(), 9).unwrap();
        assert!(surj_defect(&conj.at(0), DefectMode::Exhaustive)
            .unwrap()
            .value
            .is_zero());

        // Lifts miss at most a two-point patch around the added fixed point.
        for k in 2..=6u32 {
            let source = ShapeSequence::explicit(vec![k as u128]).unwrap();
            let target = ShapeSequence::explicit(vec![k as u128 + 1]).unwrap();
            let fam = UpdownFamily::new(source, target).unwrap();
            let d = surj_defect(&fam.at(0), DefectMode::Exhaustive).unwrap();
            assert!(d.value <= Rat::new(2, (k + 1) as u128));
        }

        // Constant-to-identity maps have defect 1 once derangements exist.
        for l in 4..=7u32 {
            let shape = ShapeSequence::explicit(vec![l as u128]).unwrap();
            let fam = ConstantIdentityFamily::new(shape.clone(), shape).unwrap();
            let d = surj_defect(&fam.at(0), DefectMode::Exhaustive).unwrap();
            assert_eq!(d.value, Rat::from_integer(1));
            assert!(d.value >= Rat::from_integer(1) - Rat::new(2, l as u128));
        }
    }

    #[test]
    fn defect_report_tail_sup_monotone() {
        let source = shape_n_plus(2, 12);
        let target = shape_n_plus(1, 12);
        let fam = UpdownFamily::new(source, target).unwrap();
        let report = DefectReport::measure(
            &fam,
            12,
            DefectOptions {
                samples: 40,
                seed: 5,
            },
        )
        .unwrap();
        for w in report.tail_sup.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("stage,hom,surj,iso,tail_sup\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn sampled_defects_are_deterministic() {
        let source = shape_n_plus(2, 3);
        let target = shape_n_plus(1, 3);
        let fam = UpdownFamily::new(source, target).unwrap();
        let mode = DefectMode::Sampled { count: 50, seed: 12 };
        let a = hom_defect(&fam.at(2), mode).unwrap();
        let b = hom_defect(&fam.at(2), mode).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.direction, BoundDirection::Lower);
        let _ = random_permutation(4, 0); // unrelated draw must not disturb determinism
        let c = hom_defect(&fam.at(2), mode).unwrap();
        assert_eq!(a.value, c.value);
    }
}
