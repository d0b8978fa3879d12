mod common;

use pauli_lens_core::linalg::inner;
use pauli_lens_core::states::{
    concentration_violation_degree_lb, correlation, derived_minus_c1, entrywise_distance_lower_bound, fidelity,
    fidelity_sandwich, longrange_states, make_nekomata, nekomata_reduction, purify_near_product,
    separation_degree_lb, MeasurementBasis, QuantumState,
};
use pauli_lens_core::{Matrix, C64};
use proptest::prelude::*;
use rand::Rng;

fn real_cat_like(n: usize, a: f64) -> QuantumState {
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    v[0] = C64::new(a, 0.0);
    v[(1 << n) - 1] = C64::new((1.0 - a * a).sqrt(), 0.0);
    QuantumState::pure(v).unwrap()
}

#[test]
fn fidelity_sandwich_on_random_pairs() {
    let mut g = common::rng(5);
    for _ in 0..100 {
        let dim = 1 << g.gen_range(1..=3);
        let rho = common::density(&mut g, dim);
        let sigma = common::density(&mut g, dim);
        let s = fidelity_sandwich(&rho, &sigma).unwrap();
        assert!(s.holds, "{s:?}");
        assert!((0.0..=1.0 + 1e-9).contains(&s.fidelity));
        let back = fidelity(&sigma, &rho).unwrap();
        assert!((back - s.fidelity).abs() <= 1e-8);
    }
}

#[test]
fn pure_fidelity_is_overlap() {
    let mut g = common::rng(6);
    for _ in 0..50 {
        let dim = 1 << g.gen_range(1..=3);
        let a = common::unit_vector(&mut g, dim);
        let b = common::unit_vector(&mut g, dim);
        let f = fidelity(&Matrix::outer(&a, &a), &Matrix::outer(&b, &b)).unwrap();
        assert!((f - inner(&a, &b).norm()).abs() <= 1e-7, "{f}");
    }
}

#[test]
fn purification_bounds_on_random_near_products() {
    let mut g = common::rng(7);
    for _ in 0..200 {
        let n = g.gen_range(1..=3);
        let a = g.gen_range(1..=2);
        let phi = common::unit_vector(&mut g, 1 << n);
        let nu = common::unit_vector(&mut g, 1 << a);
        let noise = common::unit_vector(&mut g, 1 << (n + a));
        let eta = g.gen::<f64>() * 0.3;
        let raw: Vec<C64> = phi
            .iter()
            .flat_map(|p| nu.iter().map(move |v| p * v))
            .zip(&noise)
            .map(|(x, e)| x + e * eta)
            .collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C64> = raw.iter().map(|z| z / norm).collect();
        let p = purify_near_product(&psi, &phi, None).unwrap();
        assert!(p.bound_ok, "{p:?}");
        assert!(p.schmidt_ok, "{p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn separation_agrees_with_entrywise_lp(n in 2usize..=5, a in 0.05f64..0.995) {
        let state = real_cat_like(n, a);
        let all_ones = (1u64 << n) - 1;
        let sep = separation_degree_lb(&state, &[0], &[all_ones], 0.0).unwrap();
        prop_assert_eq!(sep.distance, n);
        let z = sep.branches.iter().find(|b| b.basis == MeasurementBasis::Computational).unwrap();
        // below full degree nothing reaches the corner entry, so the LP optimum is |ab|
        let lp = entrywise_distance_lower_bound(&state, n - 1).unwrap();
        let b = (1.0 - a * a).sqrt();
        prop_assert!((lp - a * b).abs() <= 1e-8, "lp {} vs {}", lp, a * b);
        prop_assert!((z.block_norm - a * b).abs() <= 1e-12);
        prop_assert!(z.value <= lp + 1e-9);
        prop_assert!(entrywise_distance_lower_bound(&state, n).unwrap() <= 1e-8);
    }

    #[test]
    fn concentration_bound_shrinks_with_epsilon(seed in any::<u64>(), n in 1usize..=8, e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let mut g = common::rng(seed);
        let state = QuantumState::pure(common::unit_vector(&mut g, 1 << n)).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = concentration_violation_degree_lb(&state, lo).unwrap();
        let b = concentration_violation_degree_lb(&state, hi).unwrap();
        prop_assert!(b.lower_bound <= a.lower_bound);
        prop_assert!(a.lower_bound <= n);
    }

    #[test]
    fn nekomata_reduces_to_scaled_cat(seed in any::<u64>(), n in 2usize..=4, m in 1usize..=2) {
        let mut g = common::rng(seed);
        let psi0 = common::unit_vector(&mut g, 1 << m);
        let psi1 = common::unit_vector(&mut g, 1 << m);
        prop_assume!((0..psi0.len()).map(|i| (psi0[i] + psi1[i] * inner(&psi1, &psi0) / inner(&psi1, &psi0).norm()).norm_sqr()).sum::<f64>() > 1e-6);
        let red = nekomata_reduction(n, &psi0, &psi1, 0.01).unwrap();
        prop_assert!(red.residual <= 1e-10, "residual {}", red.residual);
        prop_assert!(red.overlap >= -1e-12);
        prop_assert!(red.scale > 0.0 && red.scale <= 1.0 + 1e-12);
        prop_assert!(make_nekomata(n, &psi0, &psi1).unwrap().n() == n + m, "qubit count");
    }

    #[test]
    fn longrange_correlations_match_amplitude_formula(n in 3usize..=9, s in 1usize..=3, t in 1usize..=3) {
        prop_assume!(s + t <= n);
        let (rho0, rho1) = longrange_states(n).unwrap();
        let s_region: Vec<usize> = (0..s).collect();
        let t_region: Vec<usize> = (s..s + t).collect();
        prop_assert!(correlation(&rho0, &s_region, &t_region).unwrap().abs() <= 1e-12);
        let minus_c1 = -correlation(&rho1, &s_region, &t_region).unwrap();
        let want = derived_minus_c1(n, s, t);
        prop_assert!((minus_c1 - want).abs() <= 1e-10, "n={} |S|={} |T|={}: {} vs {}", n, s, t, minus_c1, want);
    }
}
