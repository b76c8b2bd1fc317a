use markov_concentration::chain::{make_chain, random_reversible_chain, ChainKind};
use markov_concentration::exact::Budget;
use markov_concentration::proof_lab::cases::{alternate_case, increasing_case, splitting_case};
use markov_concentration::proof_lab::{admissible_patterns, holder_exponents, verify_lemma, verify_product_bound, LemmaId, MAX_PATTERN_M, PRODUCT_LOG_CEILING};
use markov_concentration::spectral::{e_pi, interpolated_gap_bound, lambda_pi, lp_norm_bracket};
use markov_concentration::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn seeded_increasing_instances_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let r = verify_lemma(&increasing_case(&mut rng).unwrap(), &Budget::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn alternate_and_splitting_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..150 {
        let r = verify_lemma(&alternate_case(&mut rng).unwrap(), &Budget::default()).unwrap();
        assert!(r.pass, "{r:?}");
        let r = verify_lemma(&splitting_case(&mut rng).unwrap(), &Budget::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn product_bound_stays_under_the_ceiling() {
    let mut last = 0.0;
    for m in 1..=MAX_PATTERN_M {
        let r = verify_product_bound(m).unwrap();
        assert!(r.pass && r.lemma == LemmaId::ProductBound);
        let per_m = r.lhs.ln() / m as f64;
        assert!(per_m < PRODUCT_LOG_CEILING);
        assert!(per_m >= last, "log product per m should grow with m here");
        last = per_m;
    }
    assert!(matches!(admissible_patterns(MAX_PATTERN_M + 1), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn pattern_counts_follow_fibonacci() {
    // |S_{2m-1}| = F(2m), and F(2m + 2) = 3 F(2m) - F(2m - 2)
    let (mut prev, mut cur) = (0usize, 1usize);
    for m in 1..=MAX_PATTERN_M {
        assert_eq!(admissible_patterns(m).unwrap().len(), cur);
        (prev, cur) = (cur, 3 * cur - prev);
    }
}

#[test]
fn holder_exponents_telescope_over_runs() {
    for m in 1..=6 {
        for s in admissible_patterns(m).unwrap() {
            let e = holder_exponents(&s);
            let mut j = 1;
            while j < 2 * m {
                if s.bit(j as i64) == 0 {
                    j += 1;
                    continue;
                }
                let (i1, i2) = s.run_bounds(j);
                // within a run the reciprocal exponents step by 1/(2m) from (2m + i1 - i2)/(4m)
                for k in i1..=i2 {
                    let x = e.get(k).unwrap();
                    let expected = (2 * m + i1 + i2 - 2 * k) as f64 / (4 * m) as f64;
                    assert!((1.0 / x.p - expected).abs() < 1e-12);
                    assert!(x.beta > 0.0 && x.beta <= 1.0);
                }
                j = i2 + 1;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brackets_are_consistent(seed in any::<u64>(), states in 2usize..=5, p in prop::sample::select(vec![1.0, 1.25, 4.0 / 3.0, 2.0, 3.0, 4.0, 7.0, f64::INFINITY])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = random_reversible_chain(states, &mut rng).unwrap();
        let m = chain.matrix() - e_pi(chain.pi());
        let b = lp_norm_bracket(&m, chain.pi(), p, 1, seed).unwrap();
        prop_assert!(b.lower <= b.upper);
        if p == 1.0 || p == 2.0 || p.is_infinite() {
            prop_assert!(b.upper - b.lower <= 1e-8);
        }
        prop_assert!(b.lower <= interpolated_gap_bound(chain.lambda().min(1.0), p).unwrap() + 1e-9);
    }

    #[test]
    fn two_state_lambda_is_exact(li in 1usize..20, ei in 1usize..20) {
        let (lambda, eps) = (li as f64 * 0.05, ei as f64 * 0.05);
        let chain = make_chain(ChainKind::TwoState { lambda, eps }).unwrap();
        prop_assert!((lambda_pi(&chain) - lambda).abs() <= 1e-10);
    }
}
