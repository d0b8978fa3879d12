mod common;

use pauli_lens_core::boolfn::{
    approx_degree, average_case_bound, best_error, best_error_general, BooleanFunction, NamedFunction,
};
use proptest::prelude::*;

fn function(n: usize, bits: u64) -> BooleanFunction {
    BooleanFunction::from_fn(n, |x| ((bits >> x) & 1) as f64).unwrap()
}

fn chi(s: u64, x: u64) -> f64 {
    if (s & x).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn degree_nonincreasing_in_epsilon(n in 1usize..=4, bits in any::<u64>(), a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let f = function(n, bits);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(approx_degree(&f, hi).unwrap().degree <= approx_degree(&f, lo).unwrap().degree);
    }

    #[test]
    fn witnesses_meet_their_error(n in 1usize..=5, bits in any::<u64>(), eps in 0.0f64..0.6) {
        let f = function(n, bits);
        let q = approx_degree(&f, eps).unwrap();
        let w = q.witness.expect("feasible queries carry a witness");
        prop_assert!(w.max_deviation(&f) <= eps + 1e-7);
        prop_assert!(w.degree() <= q.degree);
    }

    #[test]
    fn average_case_bound_beats_clipped_predictors(
        n in 1usize..=4,
        bits in any::<u64>(),
        k in 0usize..=2,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 16),
    ) {
        let f = function(n, bits);
        let k = k.min(n);
        let masks: Vec<u64> = (0..1u64 << n).filter(|s| s.count_ones() as usize <= k).collect();
        let q = |x: u64| masks.iter().zip(&coeffs).map(|(s, c)| c * chi(*s, x)).sum::<f64>() / masks.len() as f64 + 0.5;
        let mut agreement = 0.0;
        let mut clip_gap: f64 = 0.0;
        for x in 0..1u64 << n {
            let raw = q(x);
            let p = raw.clamp(0.0, 1.0);
            clip_gap = clip_gap.max((p - raw).abs());
            agreement += if f.value(x) == 1.0 { p } else { 1.0 - p };
        }
        agreement /= (1u64 << n) as f64;
        let bound = average_case_bound(&f, k, clip_gap).unwrap();
        prop_assert!(agreement <= bound + 1e-12, "agreement {} bound {}", agreement, bound);
    }

    #[test]
    fn routes_agree_on_symmetric_functions(n in 1usize..=6, profile in any::<u64>()) {
        let by_weight: Vec<f64> = (0..=n).map(|w| ((profile >> w) & 1) as f64).collect();
        let f = BooleanFunction::symmetric(n, &by_weight).unwrap();
        for d in 0..=n {
            let sym = best_error(&f, d).unwrap().0;
            let gen = best_error_general(&f, d).unwrap().0;
            prop_assert!((sym - gen).abs() <= 1e-7, "d={} symmetric {} general {}", d, sym, gen);
        }
    }
}

#[test]
fn parity_degree_is_full_below_one() {
    for n in 1..=6 {
        let f = BooleanFunction::named(NamedFunction::Parity, n).unwrap();
        let signed = pauli_lens_core::boolfn::approx_degree_signed(&f, 0.999).unwrap();
        assert_eq!(signed.degree, n);
        assert_eq!(approx_degree(&f, 0.49).unwrap().degree, n);
        assert!(best_error_general(&f, n - 1).unwrap().0 >= 0.5 - 1e-9);
    }
}

#[test]
fn routes_agree_at_eight_inputs() {
    let threshold = BooleanFunction::symmetric(8, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    let functions = [
        ("parity", BooleanFunction::named(NamedFunction::Parity, 8).unwrap()),
        ("mod3", BooleanFunction::named(NamedFunction::Mod(3), 8).unwrap()),
        ("threshold4", threshold),
    ];
    for (name, f) in functions {
        for d in [1, 3, 5, 7] {
            let sym = best_error(&f, d).unwrap().0;
            let gen = best_error_general(&f, d).unwrap().0;
            assert!((sym - gen).abs() <= 1e-7, "{name} d={d}: {sym} vs {gen}");
        }
    }
}
