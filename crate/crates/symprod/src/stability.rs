//! Synthetic near-homomorphism experiments: build a noisy conjugation
//! `Sym(n) → Sym(m)`, recover the hidden conjugator from queries alone,
//! and measure how close the map stays to an exact conjugation.
//!
//! The universal constant in the size and distance conclusions is treated
//! as configuration (default 10); every report also carries the smallest
//! constant that would make its own numbers pass, so experiments measure
//! rather than assume. The generator never produces embeddings that act
//! on the complement by an involution; if such a map were fed in, its
//! residuals would simply come out elevated.

use std::collections::HashMap;

use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cut_lift::updown;
use crate::perm::{all_permutations, random_permutation_with, Permutation, Rat};
use crate::reduced::{
    BoundDirection, DefectEstimate, PermutationMap, StageMapFamily,
};
use crate::{derive_seed, Error, Result};

/// Default configured universal constant.
pub fn default_c() -> Rat {
    Rat::from_integer(10)
}

/// Conditions under which the stability conclusions are not promised; the
/// generator builds the map anyway and flags it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeFlag {
    /// Source or target degree below 7.
    SmallDegree,
    /// Noise budget at or above `1/(3c)` for the configured constant.
    DeltaOutsideTheorem,
    /// Degrees violate `(1−δ)m ≤ n` already at construction.
    SizeLowerBoundViolated,
}

/// A seeded noisy conjugation `σ ↦ corrupt(ad_α(σ) ↕ Sym(m))`.
///
/// The ground-truth conjugator is hidden from the recovery path, which
/// only queries [`PermutationMap::eval`]; tests may read it through
/// [`PerturbedMap::ground_truth`] for scoring.
pub struct PerturbedMap {
    n: u32,
    m: u32,
    alpha: Permutation,
    delta: Rat,
    seed: u64,
    moved_budget: u32,
    pub regime_flags: Vec<RegimeFlag>,
}

impl PerturbedMap {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn delta(&self) -> Rat {
        self.delta
    }

    /// For scoring only; recovery never reads this.
    pub fn ground_truth(&self) -> &Permutation {
        &self.alpha
    }

    /// Points moved by the noise on each image (0 when `⌊δm⌋ = 0`).
    pub fn moved_budget(&self) -> u32 {
        self.moved_budget
    }

    /// The noiseless value `ad_α(σ) ↕ Sym(m)`.
    pub fn exact_value(&self, sigma: &Permutation) -> Permutation {
        updown(&sigma.conjugate_by(&self.alpha), self.m).expect("target degree positive")
    }

    /// Measured corruption of one image, for report tables.
    pub fn corruption_of(&self, sigma: &Permutation) -> Rat {
        self.eval(sigma).hamming(&self.exact_value(sigma)).ratio()
    }
}

/// Builds the synthetic hypothesis class: exact conjugation-plus-updown,
/// then a seeded value rotation on at most `⌊δm⌋` positions per image,
/// capped so the measured stagewise homomorphism defect stays within
/// `2δ + 4/m`.
pub fn make_perturbed(
    n: u32,
    m: u32,
    alpha: Permutation,
    delta: Rat,
    seed: u64,
    c: Rat,
) -> Result<PerturbedMap> {
    if n == 0 || m == 0 {
        return Err(Error::ZeroDegree);
    }
    if alpha.degree() != n {
        return Err(Error::HorizonMismatch(alpha.degree() as usize, n as usize));
    }
    let mut regime_flags = Vec::new();
    if n < 7 || m < 7 {
        regime_flags.push(RegimeFlag::SmallDegree);
    }
    if !c.is_zero() && delta >= Rat::new(1, 3) / c {
        regime_flags.push(RegimeFlag::DeltaOutsideTheorem);
    }
    if Rat::from_integer(n as u128) < (Rat::from_integer(1) - delta) * Rat::from_integer(m as u128)
    {
        regime_flags.push(RegimeFlag::SizeLowerBoundViolated);
    }
    let dm = (delta * Rat::from_integer(m as u128)).floor().to_integer() as u32;
    // Keep 3·moved ≤ 2δm + 4 so the triangle over three corrupted factors
    // lands under the promised defect; the cap only binds for ⌊δm⌋ ≥ 5.
    let hom_cap = ((Rat::from_integer(2) * delta * Rat::from_integer(m as u128)
        + Rat::from_integer(4))
        / Rat::from_integer(3))
    .floor()
    .to_integer() as u32;
    let moved_budget = dm.min(hom_cap);
    Ok(PerturbedMap {
        n,
        m,
        alpha,
        delta,
        seed,
        moved_budget,
        regime_flags,
    })
}

impl PermutationMap for PerturbedMap {
    fn source_degree(&self) -> u32 {
        self.n
    }

    fn target_degree(&self) -> u32 {
        self.m
    }

    fn eval(&self, sigma: &Permutation) -> Permutation {
        assert_eq!(sigma.degree(), self.n, "query degree mismatch");
        let clean = self.exact_value(sigma);
        if self.moved_budget == 0 {
            return clean;
        }
        // Noise must be a function of the input so the map is well defined:
        // derive the stream from the map seed and the image itself.
        let mut h = self.seed;
        for &v in sigma.image() {
            h = derive_seed(h, &[v as u64]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let mut image = clean.image().to_vec();
        let m = self.m as usize;
        if self.moved_budget == 1 {
            let i = rng.random_range(0..m);
            let j = (i + rng.random_range(1..m)) % m;
            image.swap(i, j);
        } else {
            // Partial Fisher–Yates draw of distinct positions, then one
            // cyclic rotation of their values.
            let k = self.moved_budget as usize;
            let mut pool: Vec<usize> = (0..m).collect();
            for idx in 0..k {
                let j = rng.random_range(idx..m);
                pool.swap(idx, j);
            }
            let first = image[pool[0]];
            for idx in 0..k - 1 {
                image[pool[idx]] = image[pool[idx + 1]];
            }
            image[pool[k - 1]] = first;
        }
        Permutation::from_image(image).expect("rotation keeps bijectivity")
    }
}

/// How the conjugator is searched for.
#[derive(Clone, Copy, Debug)]
pub enum RecoveryStrategy {
    /// Scan all of `Sym(n)` (n ≤ 7) for the best candidate.
    Exhaustive,
    /// Vote over supports of images of transpositions `(i k)`.
    TranspositionVote {
        /// Queries per point; 0 means all `k ≠ i`.
        queries_per_point: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct RecoveryConfig {
    pub strategy: RecoveryStrategy,
    /// Sample count for the report metrics when the degree is too large
    /// for full scans.
    pub metric_samples: usize,
    pub metric_seed: u64,
    /// A vote below this share of queries marks the point inconclusive.
    pub vote_threshold: Rat,
    /// Configured universal constant for the size bound check.
    pub c: Rat,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            strategy: RecoveryStrategy::TranspositionVote {
                queries_per_point: 0,
                seed: 0,
            },
            metric_samples: 200,
            metric_seed: 1,
            vote_threshold: Rat::new(1, 2),
            c: default_c(),
        }
    }
}

/// Everything measured about one recovery run.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub recovered_alpha: Permutation,
    /// False when some vote fell below threshold or the repair pass had to
    /// overwrite conflicting votes; the alpha is then best-effort partial.
    pub recovery_complete: bool,
    pub inconclusive_points: Vec<u32>,
    /// Worst lifted disagreement `d_{n∨m}(φ(σ)↑, ad_α(σ)↑)`.
    pub conjugation_distance: DefectEstimate,
    /// Worst pairwise distance distortion.
    pub isometry_defect: DefectEstimate,
    /// `(1−δ)m ≤ n ≤ (1+cδ)m` for the configured constant.
    pub size_bounds_ok: bool,
    /// Smallest constant making all three conclusions hold for the
    /// measured numbers; `None` when no finite constant does.
    pub empirical_c: Option<f64>,
}

/// Recovers a conjugator candidate from queries and measures the report
/// metrics at degree `n ∨ m` via lifts.
pub fn recover_conjugator(
    phi: &(impl PermutationMap + ?Sized),
    delta: Rat,
    cfg: &RecoveryConfig,
) -> Result<StabilityReport> {
    let n = phi.source_degree();
    let (alpha, complete, inconclusive) = match cfg.strategy {
        RecoveryStrategy::Exhaustive => {
            if n > 7 {
                return Err(Error::ExhaustiveCap { degree: n, cap: 7 });
            }
            (exhaustive_minimizer(phi), true, Vec::new())
        }
        RecoveryStrategy::TranspositionVote {
            queries_per_point,
            seed,
        } => transposition_vote(phi, queries_per_point, seed, cfg.vote_threshold),
    };
    report_for(phi, alpha, complete, inconclusive, delta, cfg)
}

/// Builds the report for a given candidate conjugator (used by recovery
/// and by the stagewise product-form analysis).
pub fn report_for(
    phi: &(impl PermutationMap + ?Sized),
    alpha: Permutation,
    recovery_complete: bool,
    inconclusive_points: Vec<u32>,
    delta: Rat,
    cfg: &RecoveryConfig,
) -> Result<StabilityReport> {
    let n = phi.source_degree();
    let m = phi.target_degree();
    let conjugation_distance = conjugation_distance(phi, &alpha, cfg);
    let isometry_defect = isometry_defect(phi, cfg.metric_samples, derive_seed(cfg.metric_seed, &[2]))?;
    let one = Rat::from_integer(1);
    let nr = Rat::from_integer(n as u128);
    let mr = Rat::from_integer(m as u128);
    let size_lower = (one - delta) * mr <= nr;
    let size_upper = nr <= (one + cfg.c * delta) * mr;
    let size_bounds_ok = size_lower && size_upper;
    let empirical_c = {
        let conj = rat_f64(conjugation_distance.value);
        let iso = rat_f64(isometry_defect.value);
        if delta.is_zero() {
            if conj == 0.0 && iso == 0.0 && n <= m {
                Some(0.0)
            } else {
                None
            }
        } else {
            let d = rat_f64(delta);
            let size_term = if n > m {
                (rat_f64(nr / mr) - 1.0) / d
            } else {
                0.0
            };
            Some(size_term.max(conj / (4.0 * d)).max(iso / (5.0 * d)))
        }
    };
    Ok(StabilityReport {
        recovered_alpha: alpha,
        recovery_complete,
        inconclusive_points,
        conjugation_distance,
        isometry_defect,
        size_bounds_ok,
        empirical_c,
    })
}

fn rat_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Compares `φ(σ)` against `ad_α(σ)` at the joined degree.
fn lifted_distance(phi: &(impl PermutationMap + ?Sized), alpha: &Permutation, sigma: &Permutation) -> Rat {
    let top = phi.source_degree().max(phi.target_degree());
    let lhs = updown(&phi.eval(sigma), top).expect("lift to join");
    let rhs = updown(&sigma.conjugate_by(alpha), top).expect("lift to join");
    lhs.hamming(&rhs).ratio()
}

fn conjugation_distance(
    phi: &(impl PermutationMap + ?Sized),
    alpha: &Permutation,
    cfg: &RecoveryConfig,
) -> DefectEstimate {
    let n = phi.source_degree();
    if n <= 7 {
        let mut worst = Rat::zero();
        for sigma in all_permutations(n) {
            let d = lifted_distance(phi, alpha, &sigma);
            if d > worst {
                worst = d;
            }
        }
        DefectEstimate {
            value: worst,
            direction: BoundDirection::Exact,
            samples: 0,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.metric_seed, &[1]));
        let mut worst = Rat::zero();
        for _ in 0..cfg.metric_samples {
            let sigma = random_permutation_with(n, &mut rng);
            let d = lifted_distance(phi, alpha, &sigma);
            if d > worst {
                worst = d;
            }
        }
        DefectEstimate {
            value: worst,
            direction: BoundDirection::Lower,
            samples: cfg.metric_samples as u64,
        }
    }
}

/// Worst pairwise distortion `|d_n(σ,τ) − d_m(φσ, φτ)|`; exhaustive below
/// degree 7, sampled above.
pub fn isometry_defect(
    phi: &(impl PermutationMap + ?Sized),
    samples: usize,
    seed: u64,
) -> Result<DefectEstimate> {
    let n = phi.source_degree();
    let abs = |a: Rat, b: Rat| if a >= b { a - b } else { b - a };
    if n <= 6 {
        let all: Vec<(Permutation, Permutation)> =
            all_permutations(n).map(|s| (phi.eval(&s), s)).collect();
        let mut worst = Rat::zero();
        for (fs, s) in &all {
            for (ft, t) in &all {
                let d = abs(s.hamming(t).ratio(), fs.hamming(ft).ratio());
                if d > worst {
                    worst = d;
                }
            }
        }
        Ok(DefectEstimate {
            value: worst,
            direction: BoundDirection::Exact,
            samples: 0,
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = Rat::zero();
        for _ in 0..samples {
            let s = random_permutation_with(n, &mut rng);
            let t = random_permutation_with(n, &mut rng);
            let d = abs(
                s.hamming(&t).ratio(),
                phi.eval(&s).hamming(&phi.eval(&t)).ratio(),
            );
            if d > worst {
                worst = d;
            }
        }
        Ok(DefectEstimate {
            value: worst,
            direction: BoundDirection::Lower,
            samples: samples as u64,
        })
    }
}

fn exhaustive_minimizer(phi: &(impl PermutationMap + ?Sized)) -> Permutation {
    let n = phi.source_degree();
    let queries: Vec<(Permutation, Permutation)> = all_permutations(n)
        .map(|sigma| {
            let img = phi.eval(&sigma);
            (sigma, img)
        })
        .collect();
    let top = phi.source_degree().max(phi.target_degree());
    let mut best: Option<(Permutation, Rat)> = None;
    for alpha in all_permutations(n) {
        let mut worst = Rat::zero();
        let cap = best.as_ref().map(|(_, b)| *b);
        let mut pruned = false;
        for (sigma, img) in &queries {
            let lhs = updown(img, top).expect("lift to join");
            let rhs = updown(&sigma.conjugate_by(&alpha), top).expect("lift to join");
            let d = lhs.hamming(&rhs).ratio();
            if d > worst {
                worst = d;
                if let Some(c) = cap {
                    if worst >= c {
                        pruned = true;
                        break;
                    }
                }
            }
        }
        if !pruned && best.as_ref().map_or(true, |(_, b)| worst < *b) {
            best = Some((alpha, worst));
        }
    }
    best.expect("Sym(n) nonempty").0
}

enum PointVote {
    Chosen(u32, Rat),
    /// No query produced any in-range support: the point is structurally
    /// invisible to the map (e.g. it gets cut away); filled silently.
    NoSignal,
    /// Signal present but the leader stayed at or below the threshold.
    Inconclusive,
}

/// Majority vote over supports of `φ((i k))`: for exact conjugations the
/// support is `{α(i), α(k)}`, so across varying `k` the stable element is
/// `α(i)`. Collisions are repaired greedily by vote share.
fn transposition_vote(
    phi: &(impl PermutationMap + ?Sized),
    queries_per_point: usize,
    seed: u64,
    threshold: Rat,
) -> (Permutation, bool, Vec<u32>) {
    let n = phi.source_degree();
    if n == 1 {
        return (Permutation::identity(1), true, Vec::new());
    }
    let mut votes: Vec<PointVote> = Vec::with_capacity(n as usize);
    let mut inconclusive = Vec::new();
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
        let ks: Vec<u32> = if queries_per_point == 0 || queries_per_point >= (n - 1) as usize {
            (0..n).filter(|&k| k != i).collect()
        } else {
            let mut pool: Vec<u32> = (0..n).filter(|&k| k != i).collect();
            for idx in 0..queries_per_point {
                let j = rng.random_range(idx..pool.len());
                pool.swap(idx, j);
            }
            pool.truncate(queries_per_point);
            pool
        };
        let mut tally: HashMap<u32, u64> = HashMap::new();
        for &k in &ks {
            let t = Permutation::from_cycles(n, &[vec![i, k]]).expect("valid transposition");
            let img = phi.eval(&t);
            for (p, &v) in img.image().iter().enumerate() {
                if p as u32 != v && (p as u32) < n {
                    *tally.entry(p as u32).or_default() += 1;
                }
            }
        }
        let best = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&v, &c)| (v, c));
        match best {
            Some((v, c)) if Rat::new(c as u128, ks.len() as u128) > threshold => {
                votes.push(PointVote::Chosen(v, Rat::new(c as u128, ks.len() as u128)));
            }
            Some(_) => {
                votes.push(PointVote::Inconclusive);
                inconclusive.push(i);
            }
            None => votes.push(PointVote::NoSignal),
        }
    }
    // Greedy repair to a bijection: strongest vote keeps a contested value.
    let mut claimed: HashMap<u32, (u32, Rat)> = HashMap::new();
    for (i, vote) in votes.iter().enumerate() {
        if let PointVote::Chosen(v, share) = vote {
            match claimed.get(v) {
                Some((_, s)) if s >= share => {}
                _ => {
                    claimed.insert(*v, (i as u32, *share));
                }
            }
        }
    }
    let mut image = vec![u32::MAX; n as usize];
    let mut used = vec![false; n as usize];
    let mut clean = true;
    for (i, vote) in votes.iter().enumerate() {
        match vote {
            PointVote::Chosen(v, _) if claimed.get(v).is_some_and(|(w, _)| *w == i as u32) => {
                image[i] = *v;
                used[*v as usize] = true;
            }
            PointVote::Chosen(..) | PointVote::Inconclusive => clean = false,
            PointVote::NoSignal => {}
        }
    }
    let mut free = (0..n).filter(|&v| !used[v as usize]);
    for slot in image.iter_mut() {
        if *slot == u32::MAX {
            *slot = free.next().expect("counts balance");
        }
    }
    let alpha = Permutation::from_image(image).expect("repair yields bijection");
    (alpha, clean && inconclusive.is_empty(), inconclusive)
}

/// Stagewise structure analysis of a product-form map family: per stage,
/// try to recover a conjugator, assemble the stagewise element cut down to
/// the target degrees, and measure residuals against `ad ∘ updown`.
pub struct ProductFormAnalysis {
    /// `k_n / l_n` per stage.
    pub ratio_profile: Vec<Rat>,
    /// Recovered stagewise conjugators, cut to the target degrees; skipped
    /// stages hold the identity.
    pub sigma: Vec<Permutation>,
    /// Per-stage max residual `d(h_n(a), ad_{σ_n}(a ↕ Sym(l_n)))` over
    /// samples; `None` when the stage was skipped.
    pub residuals: Vec<Option<Rat>>,
    pub skipped: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct AnalyzeConfig {
    /// Stages whose sampled hom defect exceeds this are skipped.
    pub defect_threshold: Rat,
    pub defect_samples: usize,
    pub residual_samples: usize,
    pub seed: u64,
    pub recovery: RecoveryConfig,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            defect_threshold: Rat::new(1, 3),
            defect_samples: 60,
            residual_samples: 60,
            seed: 0,
            recovery: RecoveryConfig::default(),
        }
    }
}

pub fn analyze_product_form(
    family: &impl StageMapFamily,
    horizon: usize,
    cfg: &AnalyzeConfig,
) -> Result<ProductFormAnalysis> {
    let mut ratio_profile = Vec::with_capacity(horizon);
    let mut sigma = Vec::with_capacity(horizon);
    let mut residuals = Vec::with_capacity(horizon);
    let mut skipped = Vec::new();
    for stage in 0..horizon {
        let view = family.at(stage);
        let k = view.source_degree();
        let l = view.target_degree();
        ratio_profile.push(Rat::new(k as u128, l as u128));
        let probe = crate::reduced::hom_defect(
            &view,
            crate::reduced::DefectMode::Sampled {
                count: cfg.defect_samples,
                seed: derive_seed(cfg.seed, &[stage as u64, 0]),
            },
        )?;
        if probe.value > cfg.defect_threshold {
            skipped.push(stage);
            sigma.push(Permutation::identity(l));
            residuals.push(None);
            continue;
        }
        let mut recovery = cfg.recovery;
        if let RecoveryStrategy::TranspositionVote { queries_per_point, .. } = recovery.strategy {
            recovery.strategy = RecoveryStrategy::TranspositionVote {
                queries_per_point,
                seed: derive_seed(cfg.seed, &[stage as u64, 1]),
            };
        }
        let report = recover_conjugator(&view, probe.value, &recovery)?;
        if !report.recovery_complete && !report.inconclusive_points.is_empty() {
            skipped.push(stage);
            sigma.push(Permutation::identity(l));
            residuals.push(None);
            continue;
        }
        let sigma_n = updown(&report.recovered_alpha, l)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[stage as u64, 2]));
        let mut worst = Rat::zero();
        for _ in 0..cfg.residual_samples {
            let a = random_permutation_with(k, &mut rng);
            let lhs = view.eval(&a);
            let rhs = updown(&a, l)?.conjugate_by(&sigma_n);
            let d = lhs.hamming(&rhs).ratio();
            if d > worst {
                worst = d;
            }
        }
        sigma.push(sigma_n);
        residuals.push(Some(worst));
    }
    Ok(ProductFormAnalysis {
        ratio_profile,
        sigma,
        residuals,
        skipped,
    })
}
