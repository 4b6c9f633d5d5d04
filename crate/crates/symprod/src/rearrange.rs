//! Degree-sequence alignment: almost rearrangements with a ratio
//! tolerance and an exception budget, pairwise log-gap profiles, and the
//! outer-shadow graph of coordinates any rearrangement may permute.
//!
//! All tolerance checks `|log k − log l| ≤ log(1+ε)` are performed as
//! exact cross-multiplied ratio comparisons; logs appear only at display
//! boundaries.

use std::collections::BTreeSet;

use num_traits::One;
#[cfg(test)]
use num_traits::Zero;

use crate::perm::Rat;
use crate::reduced::{tail_window_starts, AlmostPermutation, ShapeSequence};
use crate::{Error, Result};

/// Horizon cap for exact minimal-ε certificates (candidate enumeration is
/// quadratic in the horizon).
pub const CERTIFICATE_CAP: usize = 2048;

/// `max(a, b) ≤ min(a, b) · (1 + ε)`, exactly. The comparison goes
/// through `Ratio`, whose ordering is overflow-free, so entries as large
/// as 3^63 stay exact.
fn within_tolerance(a: u128, b: u128, eps: Rat) -> bool {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Rat::new(hi, lo) <= Rat::one() + eps
}

/// The exact ratio `max(a,b)/min(a,b) − 1`, the smallest tolerance at
/// which `a` and `b` match.
fn pair_epsilon(a: u128, b: u128) -> Rat {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Rat::new(hi, lo) - Rat::one()
}

/// A successful alignment: `f` maps target positions to source indices.
#[derive(Clone, Debug)]
pub struct Rearrangement {
    pub f: AlmostPermutation,
    /// Positions matched only by spending the exception budget.
    pub exceptions: Vec<usize>,
    /// Worst matched ratio gap `max/min − 1`, exact.
    pub max_matched_epsilon: Rat,
}

#[derive(Clone, Debug)]
pub struct RearrangementInfeasible {
    /// Unmatched positions beyond the budget at the requested tolerance.
    pub unmatched: usize,
    /// Smallest tolerance that succeeds within the budget; `None` above
    /// the certificate horizon cap.
    pub min_epsilon: Option<Rat>,
}

#[derive(Clone, Debug)]
pub enum RearrangementOutcome {
    Found(Rearrangement),
    Infeasible(RearrangementInfeasible),
}

/// Greedy monotone matching on the sorted values: every target entry
/// `l_n` takes the smallest unused source entry within the ratio
/// tolerance. Equal-width tolerance intervals on the (log) line make this
/// greedy optimal, so the unmatched count is minimal.
fn greedy_match(k: &[u128], l: &[u128], eps: Rat) -> (Vec<Option<usize>>, usize) {
    let mut k_sorted: Vec<usize> = (0..k.len()).collect();
    k_sorted.sort_by_key(|&i| (k[i], i));
    let mut l_sorted: Vec<usize> = (0..l.len()).collect();
    l_sorted.sort_by_key(|&j| (l[j], j));
    let mut assignment: Vec<Option<usize>> = vec![None; l.len()];
    let mut unmatched = 0usize;
    let mut cursor = 0usize;
    for &j in &l_sorted {
        // Skip source values already too small for this and every later target.
        while cursor < k_sorted.len() && {
            let kv = k[k_sorted[cursor]];
            kv < l[j] && !within_tolerance(kv, l[j], eps)
        } {
            cursor += 1;
        }
        if cursor < k_sorted.len() && within_tolerance(k[k_sorted[cursor]], l[j], eps) {
            assignment[j] = Some(k_sorted[cursor]);
            cursor += 1;
        } else {
            unmatched += 1;
        }
    }
    (assignment, unmatched)
}

/// Aligns `l` against `k`: finds an almost permutation `f` with
/// `k_{f(n)}` within the ratio tolerance of `l_n` for all positions
/// outside an exceptional set no larger than the budget. Infeasible
/// results carry the smallest tolerance that would succeed.
pub fn find_rearrangement(
    k: &ShapeSequence,
    l: &ShapeSequence,
    epsilon: Rat,
    exception_budget: usize,
) -> Result<RearrangementOutcome> {
    if k.horizon() != l.horizon() {
        return Err(Error::HorizonMismatch(k.horizon(), l.horizon()));
    }
    let kv = k.entries();
    let lv = l.entries();
    let (assignment, unmatched) = greedy_match(kv, lv, epsilon);
    if unmatched > exception_budget {
        return Ok(RearrangementOutcome::Infeasible(RearrangementInfeasible {
            unmatched,
            min_epsilon: min_feasible_epsilon(kv, lv, exception_budget)?,
        }));
    }
    Ok(RearrangementOutcome::Found(build_rearrangement(
        kv, lv, assignment,
    )))
}

fn build_rearrangement(kv: &[u128], lv: &[u128], assignment: Vec<Option<usize>>) -> Rearrangement {
    let horizon = assignment.len();
    let mut used = vec![false; kv.len()];
    for a in assignment.iter().flatten() {
        used[*a] = true;
    }
    let mut leftovers = (0..kv.len()).filter(|&i| !used[i]);
    let mut exceptions = Vec::new();
    let mut max_eps = Rat::from_integer(0);
    let images: Vec<usize> = assignment
        .iter()
        .enumerate()
        .map(|(j, slot)| match slot {
            Some(i) => {
                let e = pair_epsilon(kv[*i], lv[j]);
                if e > max_eps {
                    max_eps = e;
                }
                *i
            }
            None => {
                exceptions.push(j);
                leftovers.next().expect("leftover count balances")
            }
        })
        .collect();
    let exceptional: BTreeSet<usize> = exceptions.iter().copied().collect();
    let co_range: BTreeSet<usize> = {
        let mut used_vals = vec![false; kv.len().max(horizon)];
        for &v in &images {
            if v < used_vals.len() {
                used_vals[v] = true;
            }
        }
        (0..horizon).filter(|&v| !used_vals[v]).collect()
    };
    let f = AlmostPermutation::new(images, exceptional, co_range, None)
        .expect("greedy assignment is injective");
    Rearrangement {
        f,
        exceptions,
        max_matched_epsilon: max_eps,
    }
}

/// Re-checks a returned rearrangement against its sequences: exact
/// injectivity off the exceptional set and the tolerance inequality at
/// every non-exceptional position. Returns the worst matched gap.
pub fn verify_rearrangement(
    k: &ShapeSequence,
    l: &ShapeSequence,
    r: &Rearrangement,
    epsilon: Rat,
) -> Result<Rat> {
    let kv = k.entries();
    let lv = l.entries();
    let mut seen = BTreeSet::new();
    let mut worst = Rat::from_integer(0);
    for (j, &i) in r.f.images().iter().enumerate() {
        if r.f.is_exceptional(j) {
            continue;
        }
        if !seen.insert(i) {
            return Err(Error::InvalidAlmostPermutation(format!(
                "source index {i} reused"
            )));
        }
        let e = pair_epsilon(kv[i], lv[j]);
        if e > epsilon {
            return Err(Error::InvalidAlmostPermutation(format!(
                "position {j} exceeds tolerance"
            )));
        }
        if e > worst {
            worst = e;
        }
    }
    Ok(worst)
}

/// Exact smallest tolerance at which the greedy succeeds within the
/// budget: bisection over the sorted finite set of pairwise ratio gaps
/// (feasibility only changes at those values).
fn min_feasible_epsilon(
    kv: &[u128],
    lv: &[u128],
    budget: usize,
) -> Result<Option<Rat>> {
    let n = kv.len();
    if n > CERTIFICATE_CAP {
        return Ok(None);
    }
    let mut candidates: Vec<Rat> = Vec::with_capacity(n * n);
    for &a in kv {
        for &b in lv {
            candidates.push(pair_epsilon(a, b));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    let feasible =
        |eps: Rat| -> bool { greedy_match(kv, lv, eps).1 <= budget };
    if candidates.is_empty() || !feasible(*candidates.last().unwrap()) {
        return Ok(None);
    }
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(candidates[lo]))
}

/// Outcome of the stricter diagonal variant: the sequences must agree as
/// multisets after `f`, and the diagonal ratios `l_n / k_n` must sit
/// within the tolerance outside the budget.
#[derive(Clone, Debug)]
pub enum EquivalentOutcome {
    Found {
        rearrangement: Rearrangement,
        diagonal_violations: Vec<usize>,
    },
    Infeasible {
        /// Positions with no exact multiset partner, or diagonal
        /// violations, whichever broke the budget.
        unmatched: usize,
        diagonal_violations: Vec<usize>,
    },
}

/// The asymptotically-equivalent variant: exact multiset matching
/// (`k_{f(n)} = l_n`) plus the diagonal ratio check, both within the
/// shared exception budget.
pub fn find_equivalent_rearrangement(
    k: &ShapeSequence,
    l: &ShapeSequence,
    epsilon: Rat,
    exception_budget: usize,
) -> Result<EquivalentOutcome> {
    if k.horizon() != l.horizon() {
        return Err(Error::HorizonMismatch(k.horizon(), l.horizon()));
    }
    let kv = k.entries();
    let lv = l.entries();
    let diagonal_violations: Vec<usize> = (0..kv.len())
        .filter(|&n| !within_tolerance(kv[n], lv[n], epsilon))
        .collect();
    let (assignment, unmatched) = greedy_match(kv, lv, Rat::from_integer(0));
    if unmatched > exception_budget || diagonal_violations.len() > exception_budget {
        return Ok(EquivalentOutcome::Infeasible {
            unmatched,
            diagonal_violations,
        });
    }
    Ok(EquivalentOutcome::Found {
        rearrangement: build_rearrangement(kv, lv, assignment),
        diagonal_violations,
    })
}

/// Pairwise log-gap profile of a sequence, kept as exact minimal ratios
/// `max/min ≥ 1`; the log is taken only for display. A positive log-gap
/// at every tail window is the finite shadow of the complete-group
/// criterion.
#[derive(Clone, Debug)]
pub struct GapProfile {
    /// `(window start, smallest pairwise ratio within the window)`;
    /// `None` when the window has fewer than two entries.
    pub windows: Vec<(usize, Option<Rat>)>,
}

impl GapProfile {
    /// The whole-horizon minimal ratio.
    pub fn min_ratio(&self) -> Option<Rat> {
        self.windows.first().and_then(|w| w.1)
    }

    /// `ln` of a window's ratio, for reporting.
    pub fn log_at(&self, idx: usize) -> Option<f64> {
        self.windows[idx]
            .1
            .map(|r| (*r.numer() as f64 / *r.denom() as f64).ln())
    }
}

/// Minimal pairwise ratio over each tail window `{0, N/4, N/2, 3N/4}`.
pub fn log_gap(k: &ShapeSequence) -> Result<GapProfile> {
    if k.horizon() < 2 {
        return Err(Error::HorizonMismatch(k.horizon(), 2));
    }
    let kv = k.entries();
    let windows = tail_window_starts(k.horizon())
        .iter()
        .map(|&start| {
            let mut vals: Vec<u128> = kv[start..].to_vec();
            vals.sort_unstable();
            let best = vals.windows(2).map(|w| Rat::new(w[1], w[0])).min();
            (start, best)
        })
        .collect();
    Ok(GapProfile { windows })
}

/// The tolerance graph on stage indices: an edge joins `n` and `m` when
/// their values sit within ratio `1+ε`; connected components describe
/// which coordinates any tolerance-ε rearrangement may permute.
#[derive(Clone, Debug)]
pub struct Shadow {
    pub edges: Vec<(usize, usize)>,
    /// Components sorted by minimal element, each sorted ascending.
    pub components: Vec<Vec<usize>>,
}

impl Shadow {
    /// `component size → how many components` histogram.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut map = std::collections::BTreeMap::new();
        for c in &self.components {
            *map.entry(c.len()).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }

    pub fn is_discrete(&self) -> bool {
        self.edges.is_empty()
    }
}

pub fn out_shadow(k: &ShapeSequence, epsilon: Rat) -> Shadow {
    let kv = k.entries();
    let n = kv.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (kv[i], i));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut edges = Vec::new();
    // Sorted sweep: each index pairs with neighbours until the ratio breaks.
    for a in 0..n {
        for b in a + 1..n {
            if !within_tolerance(kv[order[a]], kv[order[b]], epsilon) {
                break;
            }
            let (x, y) = {
                let (i, j) = (order[a], order[b]);
                (i.min(j), i.max(j))
            };
            edges.push((x, y));
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx != ry {
                parent[rx.max(ry)] = rx.min(ry);
            }
        }
    }
    edges.sort_unstable();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    Shadow {
        edges,
        components: groups.into_values().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(vals: &[u128]) -> ShapeSequence {
        ShapeSequence::explicit(vals.to_vec()).unwrap()
    }

    #[test]
    fn shift_example_matches_with_one_exception() {
        // k_n = n+1 against l_n = n+2: f(n) = n+1 except at the top.
        let horizon = 16;
        let k = ShapeSequence::affine(1, 1, horizon).unwrap();
        let l = ShapeSequence::affine(1, 2, horizon).unwrap();
        match find_rearrangement(&k, &l, Rat::from_integer(0), 1).unwrap() {
            RearrangementOutcome::Found(r) => {
                assert_eq!(r.exceptions.len(), 1);
                for n in 0..horizon - 1 {
                    assert_eq!(r.f.images()[n], n + 1);
                }
                assert!(verify_rearrangement(&k, &l, &r, Rat::from_integer(0))
                    .unwrap()
                    .is_zero());
            }
            RearrangementOutcome::Infeasible(_) => panic!("shift must align"),
        }
        // Zero budget: one value cannot match.
        assert!(matches!(
            find_rearrangement(&k, &l, Rat::from_integer(0), 0).unwrap(),
            RearrangementOutcome::Infeasible(_)
        ));
    }

    #[test]
    fn equal_pairs_swap() {
        let k = shape(&[2, 2, 4, 4, 8, 8]);
        match find_rearrangement(&k, &k, Rat::from_integer(0), 0).unwrap() {
            RearrangementOutcome::Found(r) => {
                assert!(r.exceptions.is_empty());
                assert!(r.max_matched_epsilon.is_zero());
            }
            RearrangementOutcome::Infeasible(_) => panic!("identity works"),
        }
    }

    #[test]
    fn diverging_growth_is_infeasible_with_certificate() {
        let horizon = 32;
        let k = ShapeSequence::geometric(Rat::one(), Rat::from_integer(2), horizon).unwrap();
        let l = ShapeSequence::geometric(Rat::one(), Rat::from_integer(3), horizon).unwrap();
        match find_rearrangement(&k, &l, Rat::new(2, 5), horizon / 10).unwrap() {
            RearrangementOutcome::Infeasible(info) => {
                let min = info.min_epsilon.unwrap();
                assert!(min > Rat::new(2, 5));
                // The certificate is tight: feasible at min, infeasible below.
                assert!(matches!(
                    find_rearrangement(&k, &l, min, horizon / 10).unwrap(),
                    RearrangementOutcome::Found(_)
                ));
            }
            RearrangementOutcome::Found(_) => panic!("powers of 2 and 3 diverge"),
        }
    }

    #[test]
    fn feasibility_is_symmetric() {
        let specs: [(&[u128], &[u128]); 3] = [
            (&[2, 3, 5, 9], &[2, 4, 5, 8]),
            (&[10, 20, 30, 40], &[11, 19, 33, 44]),
            (&[7, 7, 7, 7], &[7, 7, 7, 49]),
        ];
        for (a, b) in specs {
            let ka = shape(a);
            let kb = shape(b);
            for eps in [Rat::from_integer(0), Rat::new(1, 10), Rat::new(1, 2)] {
                for budget in 0..=2 {
                    let fwd = matches!(
                        find_rearrangement(&ka, &kb, eps, budget).unwrap(),
                        RearrangementOutcome::Found(_)
                    );
                    let bwd = matches!(
                        find_rearrangement(&kb, &ka, eps, budget).unwrap(),
                        RearrangementOutcome::Found(_)
                    );
                    assert_eq!(fwd, bwd, "asymmetric at eps={eps:?} budget={budget}");
                }
            }
        }
    }

    #[test]
    fn equivalent_variant_checks_diagonal_and_multiset() {
        let k = shape(&[4, 5, 6, 7]);
        let l = shape(&[5, 4, 6, 7]); // same multiset, diagonal off by ratio 5/4
        match find_equivalent_rearrangement(&k, &l, Rat::new(1, 4), 0).unwrap() {
            EquivalentOutcome::Found {
                diagonal_violations,
                ..
            } => assert!(diagonal_violations.is_empty()),
            EquivalentOutcome::Infeasible { .. } => panic!("ratio 5/4 within 1+1/4"),
        }
        match find_equivalent_rearrangement(&k, &l, Rat::new(1, 10), 0).unwrap() {
            EquivalentOutcome::Infeasible {
                diagonal_violations,
                ..
            } => assert_eq!(diagonal_violations, vec![0, 1]),
            EquivalentOutcome::Found { .. } => panic!("diagonal breaks at 1/10"),
        }
        let m = shape(&[4, 5, 6, 8]);
        assert!(matches!(
            find_equivalent_rearrangement(&k, &m, Rat::one(), 0).unwrap(),
            EquivalentOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn log_gap_powers_of_two() {
        let k = ShapeSequence::geometric(Rat::one(), Rat::from_integer(2), 64).unwrap();
        let profile = log_gap(&k).unwrap();
        for (_, ratio) in &profile.windows {
            assert_eq!(ratio.unwrap(), Rat::from_integer(2));
        }
        assert!((profile.log_at(0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn log_gap_repeated_value_is_zero() {
        let k = shape(&[3, 9, 9, 27]);
        let profile = log_gap(&k).unwrap();
        assert_eq!(profile.min_ratio().unwrap(), Rat::from_integer(1));
        assert_eq!(profile.log_at(0), Some(0.0));
    }

    #[test]
    fn log_gap_affine_tends_to_one() {
        // k_n = n+1: the tightest pair sits at the top of the horizon, so
        // every window reports N/(N−1) — vanishing with the horizon, in
        // contrast to the constant gap of geometric sequences.
        let k = ShapeSequence::affine(1, 1, 64).unwrap();
        let profile = log_gap(&k).unwrap();
        for (_, ratio) in &profile.windows {
            assert_eq!(ratio.unwrap(), Rat::new(64, 63));
        }
        let longer = ShapeSequence::affine(1, 1, 256).unwrap();
        assert_eq!(
            log_gap(&longer).unwrap().min_ratio().unwrap(),
            Rat::new(256, 255)
        );
    }

    #[test]
    fn positive_gap_forces_identity_rearrangement() {
        let k = ShapeSequence::geometric(Rat::one(), Rat::from_integer(2), 64).unwrap();
        let gap = log_gap(&k).unwrap().min_ratio().unwrap();
        // Any tolerance below the gap admits only the identity alignment.
        let eps = gap - Rat::one() - Rat::new(1, 100);
        match find_rearrangement(&k, &k, eps, 0).unwrap() {
            RearrangementOutcome::Found(r) => {
                for (n, &v) in r.f.images().iter().enumerate() {
                    assert_eq!(n, v);
                }
            }
            RearrangementOutcome::Infeasible(_) => panic!("identity always works"),
        }
    }

    #[test]
    fn out_shadow_examples() {
        let pow2 = ShapeSequence::geometric(Rat::one(), Rat::from_integer(2), 16).unwrap();
        let shadow = out_shadow(&pow2, Rat::new(99, 100));
        assert!(shadow.is_discrete());
        assert_eq!(shadow.components.len(), 16);

        let paired = shape(&[2, 2, 4, 4]);
        let shadow = out_shadow(&paired, Rat::from_integer(0));
        assert_eq!(shadow.edges, vec![(0, 1), (2, 3)]);
        assert_eq!(shadow.histogram(), vec![(2, 2)]);

        // Affine sequences connect into neighbourhood intervals.
        let aff = ShapeSequence::affine(1, 1, 40).unwrap();
        let shadow = out_shadow(&aff, Rat::new(1, 10));
        assert!(!shadow.is_discrete());
        assert!(shadow.edges.contains(&(19, 21)));
        assert!(!shadow.edges.contains(&(0, 5)));
    }
}
