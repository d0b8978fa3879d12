mod common;

use pauli_lens_core::circuit::{CzGate, QacCircuit};
use pauli_lens_core::linalg::spectral_norm;
use pauli_lens_core::lowdeg::{
    approx_circuit, approx_cz, approx_layer, chebyshev_top_projector, heisenberg_degree_bound, layer_threshold,
    layer_degree_bound, post_select, verify_certificate_dense, ApproxCertificate, CertificateForm,
};
use pauli_lens_core::{ErrorLedger, Matrix, PauliOperator, C64};
use proptest::prelude::*;
use rand::Rng;

fn cz_matrix(arity: usize) -> Matrix {
    let dim = 1usize << arity;
    Matrix::from_fn(dim, dim, |i, j| match (i == j, i == dim - 1) {
        (false, _) => C64::new(0.0, 0.0),
        (true, true) => C64::new(-1.0, 0.0),
        (true, false) => C64::new(1.0, 0.0),
    })
}

/// `T_k(x)` from the trigonometric and hyperbolic forms.
fn chebyshev_oracle(k: usize, x: f64) -> f64 {
    let k = k as f64;
    if x.abs() <= 1.0 {
        (k * x.acos()).cos()
    } else if x > 1.0 {
        (k * x.acosh()).cosh()
    } else {
        let s = if k as u64 % 2 == 0 { 1.0 } else { -1.0 };
        s * (k * (-x).acosh()).cosh()
    }
}

fn random_layer(g: &mut impl Rng, n: usize) -> Vec<CzGate> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, g.gen_range(0..=i));
    }
    let mut gates = Vec::new();
    let mut pos = 0;
    while pos < n {
        let end = (pos + g.gen_range(1..=n)).min(n);
        gates.push(CzGate::new(order[pos..end].to_vec()));
        pos = end;
    }
    gates
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chebyshev_error_matches_oracle(n in 2usize..=40, rho_frac in 0.0f64..1.0) {
        let rho = 1 + ((n - 1) as f64 * rho_frac) as usize;
        let p = chebyshev_top_projector(n, rho).unwrap();
        let top = chebyshev_oracle(rho, (n as f64 + 1.0) / (n as f64 - 1.0));
        prop_assert!((p.error() - 1.0 / top).abs() <= 1e-12 * (1.0 / top).max(1e-300));
        prop_assert!((p.max_off_top() - p.error()).abs() <= 1e-9 * p.error().max(1e-300));
        for j in 0..n {
            let want = chebyshev_oracle(rho, 2.0 * j as f64 / (n as f64 - 1.0) - 1.0) / top;
            prop_assert!((p.eval(j) - want).abs() <= 1e-10, "q({}) = {} vs {}", j, p.eval(j), want);
            prop_assert!(p.eval(j).abs() <= p.error() * (1.0 + 1e-12));
        }
        prop_assert_eq!(p.eval(n), 1.0);
    }

    #[test]
    fn cz_certificates_hold(arity in 2usize..=9, t in 0.01f64..0.99) {
        let r = 1.0 + t * (arity as f64 - 1.0);
        prop_assume!(r > 1.0 && r < arity as f64);
        let cert = approx_cz(arity, r).unwrap();
        let report = verify_certificate_dense(&cert, &cz_matrix(arity)).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
        prop_assert!(report.measured_degree <= cert.degree);
        prop_assert!(report.distance <= cert.epsilon() + 1e-9);
        prop_assert!(cert.epsilon() <= cert.closed_form_error);
    }

    #[test]
    fn layer_degree_within_closed_form(seed in any::<u64>(), n in 4usize..=400, ell in 1usize..=8, t in 0.01f64..0.99) {
        let mut g = common::rng(seed);
        let r = n.max(2) as f64 * t;
        prop_assume!(r > 1.0 && r < n as f64);
        prop_assume!(r < layer_threshold(n, ell, r));
        let gates = random_layer(&mut g, n);
        let cert = approx_layer(n, &gates, ell, r).unwrap();
        prop_assert!(cert.closed_forms_apply);
        prop_assert!(cert.degree as f64 <= layer_degree_bound(n, ell as f64, r) + 1e-9,
            "degree {} vs {}", cert.degree, layer_degree_bound(n, ell as f64, r));
    }

    #[test]
    fn layer_certificates_hold(seed in any::<u64>(), n in 3usize..=8, t in 0.0f64..1.0) {
        let mut g = common::rng(seed);
        let r = 1.0 + 1e-3 + t * (n as f64 - 1.002);
        let gates = random_layer(&mut g, n);
        let cert = approx_layer(n, &gates, 1, r).unwrap();
        let mut exact = QacCircuit::new(n, 0);
        exact.push_cz_layer(gates).unwrap();
        let report = verify_certificate_dense(&cert, &exact.unitary().unwrap()).unwrap();
        prop_assert!(report.distance_ok, "{:?}", report);
    }

    #[test]
    fn circuit_ledger_is_layer_composition(seed in any::<u64>(), n in 3usize..=7, depth in 1usize..=4, ell in 1usize..=2, t in 0.0f64..1.0) {
        let mut g = common::rng(seed);
        let c = common::circuit(&mut g, n, 0, depth, n);
        let r = 1.0 + 1e-3 + t * (n as f64 - 1.002);
        let cert = approx_circuit(&c, ell, r).unwrap();
        let mut degree = ell;
        let mut ledger = ErrorLedger::exact();
        for layer in c.cz_layers.iter().rev() {
            let l = approx_layer(n, layer, degree.max(1), r).unwrap();
            degree = l.degree;
            ledger = ledger.compose(&l.ledger);
        }
        prop_assert_eq!(cert.degree, degree);
        prop_assert!((cert.epsilon() - ledger.epsilon).abs() <= 1e-15 * ledger.epsilon.max(1.0));
        let report = verify_certificate_dense(&cert, &c.unitary().unwrap()).unwrap();
        prop_assert!(report.distance_ok, "{:?}", report);
    }

    #[test]
    fn heisenberg_certificates_hold(seed in any::<u64>(), n in 2usize..=6, depth in 1usize..=3, q in 0usize..6, t in 0.0f64..1.0) {
        let mut g = common::rng(seed);
        let c = common::circuit(&mut g, n, 0, depth, n);
        let obs = PauliOperator::from_terms(n, [(pauli_lens_core::PauliString::single(n, q % n, 'Z').unwrap(), C64::new(1.0, 0.0))]).unwrap();
        let r = 1.0 + 1e-3 + t * (n as f64 - 1.002);
        let cert = heisenberg_degree_bound(&c, &ApproxCertificate::exact("Z", obs.clone()), Some(r)).unwrap();
        let exact = c.heisenberg_dense(&obs.to_dense().unwrap()).unwrap();
        let report = verify_certificate_dense(&cert, &exact).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn post_selection_keeps_the_ledger(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=2, t in 0.0f64..1.0) {
        let mut g = common::rng(seed);
        let total = n + k;
        let c = common::circuit(&mut g, total, 0, 2, total);
        let obs = PauliOperator::from_terms(total, [(pauli_lens_core::PauliString::single(total, 0, 'X').unwrap(), C64::new(1.0, 0.0))]).unwrap();
        let r = 1.0 + 1e-3 + t * (total as f64 - 1.002);
        let inner = heisenberg_degree_bound(&c, &ApproxCertificate::exact("X", obs.clone()), Some(r)).unwrap();
        let rho = common::density(&mut g, 1 << k);
        let phi = PauliOperator::expand_from_dense(&rho).unwrap();
        let cert = post_select(&inner, &phi).unwrap();
        prop_assert_eq!(cert.epsilon(), inner.epsilon());
        prop_assert_eq!(cert.n, n);
        prop_assert!(cert.degree <= inner.degree);
        prop_assert!(matches!(cert.form, CertificateForm::PostSelected { .. }), "wrong form");
        // contraction with a state cannot grow the distance
        let exact = pauli_lens_core::lowdeg::post_select_dense(&c.heisenberg_dense(&obs.to_dense().unwrap()).unwrap(), &rho).unwrap();
        let gap = spectral_norm(&cert.materialize_dense().unwrap().sub(&exact)).unwrap();
        prop_assert!(gap <= inner.epsilon() + 1e-9);
    }
}
