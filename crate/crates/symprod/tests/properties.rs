//! Cross-module property suites: metric laws, cut/lift bounds against the
//! brute-force oracles, sampler statistics, and determinism.

use proptest::prelude::*;

use symprod::cut_lift::{cut, cut_hom_bound, lift, roundtrip_bound, updown};
use symprod::oracles;
use symprod::perm::{all_permutations, random_involution, random_permutation, Permutation};
use symprod::{derive_seed, Rat};

fn arb_permutation(max_degree: u32) -> impl Strategy<Value = Permutation> {
    (1..=max_degree).prop_flat_map(|n| {
        Just((0..n).collect::<Vec<u32>>())
            .prop_shuffle()
            .prop_map(|image| Permutation::from_image(image).expect("shuffle keeps bijectivity"))
    })
}

fn arb_pair(max_degree: u32) -> impl Strategy<Value = (Permutation, Permutation)> {
    (2..=max_degree).prop_flat_map(|n| {
        let one = Just((0..n).collect::<Vec<u32>>())
            .prop_shuffle()
            .prop_map(|image| Permutation::from_image(image).expect("shuffle keeps bijectivity"));
        (one.clone(), one)
    })
}

proptest! {
    #[test]
    fn hamming_is_a_bi_invariant_metric((p, q) in arb_pair(40), seed in 0u64..1000) {
        let n = p.degree();
        let r = random_permutation(n, seed);
        let d = p.hamming(&q);
        // Identity of indiscernibles.
        prop_assert_eq!(d.is_zero(), p == q);
        // Symmetry.
        prop_assert_eq!(q.hamming(&p), d);
        // Bi-invariance.
        prop_assert_eq!(r.compose(&p).hamming(&r.compose(&q)), d);
        prop_assert_eq!(p.compose(&r).hamming(&q.compose(&r)), d);
        // Triangle through a third point.
        let s = random_permutation(n, seed.wrapping_add(1));
        prop_assert!(p.hamming(&q).ratio() <= p.hamming(&s).ratio() + s.hamming(&q).ratio());
    }

    #[test]
    fn conjugation_is_an_isometric_automorphism((p, q) in arb_pair(30), seed in 0u64..1000) {
        let alpha = random_permutation(p.degree(), seed);
        prop_assert_eq!(
            p.conjugate_by(&alpha).hamming(&q.conjugate_by(&alpha)),
            p.hamming(&q)
        );
        prop_assert_eq!(
            p.compose(&q).conjugate_by(&alpha),
            p.conjugate_by(&alpha).compose(&q.conjugate_by(&alpha))
        );
    }

    #[test]
    fn parse_display_roundtrip(p in arb_permutation(25)) {
        prop_assert_eq!(p.to_string().parse::<Permutation>().unwrap(), p);
    }

    #[test]
    fn cycles_recompose(p in arb_permutation(30)) {
        let rebuilt = Permutation::from_cycles(p.degree(), &p.cycles()).unwrap();
        prop_assert_eq!(rebuilt, p);
    }

    #[test]
    fn cut_matches_oracle_sampled(p in arb_permutation(60), l_frac in 0.01f64..1.0) {
        let m = p.degree();
        let l = ((m as f64 * l_frac).ceil() as u32).clamp(1, m);
        prop_assert_eq!(cut(&p, l).unwrap(), oracles::oracle_cut(&p, l).unwrap());
    }

    #[test]
    fn lift_cut_roundtrip_bound(p in arb_permutation(60), l_frac in 0.01f64..1.0) {
        let n = p.degree();
        let m = ((n as f64 * l_frac).ceil() as u32).clamp(1, n);
        let back = lift(&cut(&p, m).unwrap(), n).unwrap();
        prop_assert!(back.hamming(&p).ratio() <= roundtrip_bound(n, m));
    }

    #[test]
    fn updown_section_is_exact(p in arb_permutation(30), extra in 1u32..20) {
        let m = p.degree();
        prop_assert_eq!(updown(&updown(&p, m + extra).unwrap(), m).unwrap(), p);
    }
}

#[test]
fn no_hamming_numerator_one_exhaustive() {
    // Two distinct bijections cannot disagree in exactly one point.
    for n in 1..=6u32 {
        for p in all_permutations(n) {
            for q in all_permutations(n) {
                assert_ne!(p.hamming(&q).numerator(), 1, "n={n} p={p} q={q}");
            }
        }
    }
}

#[test]
fn enumeration_routes_agree() {
    // itertools-backed fast enumeration vs the hand-rolled oracle stepper.
    for n in 1..=6u32 {
        let fast: Vec<Permutation> = all_permutations(n).collect();
        let slow: Vec<Permutation> = oracles::enumerate_sym(n).unwrap().collect();
        assert_eq!(fast, slow);
    }
}

#[test]
fn cut_hom_bound_exhaustive_small() {
    for n in 1..=5u32 {
        for m in 1..=n {
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
fn cut_bijective_at_large_sampled_degrees() {
    for seed in 0..3u64 {
        let p = random_permutation(10_000, seed);
        for l in [1u32, 7, 100, 4_999, 9_999] {
            // Construction validates bijectivity internally.
            let c = cut(&p, l).unwrap();
            assert_eq!(c.degree(), l);
        }
    }
}

#[test]
fn derangement_fraction_sanity() {
    // Empirical fixed-point-free fraction over 10^4 samples of Sym(1000)
    // sits near 1/e; this is only a sampler sanity check.
    let trials = 10_000u32;
    let mut derangements = 0u32;
    for t in 0..trials {
        let p = random_permutation(1000, derive_seed(4242, &[t as u64]));
        if p.support_size() == 1000 {
            derangements += 1;
        }
    }
    let fraction = derangements as f64 / trials as f64;
    assert!((fraction - (-1.0f64).exp()).abs() < 0.05, "fraction={fraction}");
}

#[test]
fn involution_sampler_props() {
    for seed in 0..50u64 {
        let p = random_involution(12, 5, seed).unwrap();
        assert!(p.compose(&p).is_identity());
        assert_eq!(p.support_size(), 10);
    }
    assert!(random_involution(9, 0, 7).unwrap().is_identity());
}

#[test]
fn seeded_paths_are_reproducible() {
    assert_eq!(random_permutation(50, 99), random_permutation(50, 99));
    let a = derive_seed(7, &[1, 2, 3]);
    let b = derive_seed(7, &[1, 2, 3]);
    assert_eq!(a, b);
}

#[test]
fn sampled_cut_hom_bound_medium_degrees() {
    // Sampled check of the near-homomorphism bound away from the
    // exhaustive regime.
    for &n in &[50u32, 120] {
        for &m in &[n / 3, n / 2, n - 1] {
            let bound = cut_hom_bound(n, m);
            for t in 0..200u64 {
                let p = random_permutation(n, derive_seed(11, &[n as u64, m as u64, t, 0]));
                let q = random_permutation(n, derive_seed(11, &[n as u64, m as u64, t, 1]));
                let lhs = cut(&p.compose(&q), m).unwrap();
                let rhs = cut(&p, m).unwrap().compose(&cut(&q, m).unwrap());
                assert!(lhs.hamming(&rhs).ratio() <= bound);
            }
        }
    }
}

#[test]
fn oracle_min_conjugator_exact_map() {
    use symprod::reduced::PermutationMap;
    use symprod::stability::{make_perturbed, default_c};
    let alpha = random_permutation(5, 3);
    let phi = make_perturbed(5, 5, alpha.clone(), Rat::from_integer(0), 0, default_c()).unwrap();
    let (found, dist) = oracles::oracle_min_conjugator(&phi).unwrap();
    assert_eq!(dist, Rat::from_integer(0));
    // Distance-zero candidates induce the same conjugation as alpha.
    for sigma in all_permutations(5) {
        assert_eq!(phi.eval(&sigma), sigma.conjugate_by(&found));
    }
}

#[test]
fn recovery_agrees_with_oracle_distance_under_noise() {
    use symprod::stability::{
        make_perturbed, recover_conjugator, default_c, RecoveryConfig, RecoveryStrategy,
    };
    // Heavy noise at tiny degree: the exhaustive strategy must match the
    // independent oracle's achieved distance exactly.
    for seed in 0..6u64 {
        let alpha = random_permutation(5, derive_seed(31, &[seed, 0]));
        let phi = make_perturbed(
            5,
            5,
            alpha,
            Rat::new(2, 5),
            derive_seed(31, &[seed, 1]),
            default_c(),
        )
        .unwrap();
        let cfg = RecoveryConfig {
            strategy: RecoveryStrategy::Exhaustive,
            ..RecoveryConfig::default()
        };
        let report = recover_conjugator(&phi, Rat::new(2, 5), &cfg).unwrap();
        let (_, oracle_dist) = oracles::oracle_min_conjugator(&phi).unwrap();
        assert_eq!(report.conjugation_distance.value, oracle_dist);
    }
}
