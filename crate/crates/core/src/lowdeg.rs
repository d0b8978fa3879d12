//! Low-degree approximations of product-state projectors, CZ gates, CZ layers
//! and whole circuits, each carrying an exact degree and spectral-error ledger.
//!
//! The projector onto `|ψ⟩^{⊗n}` is approximated by `q(W)`, where `W` counts
//! how many blocks are in `|ψ⟩` and `q` is a rescaled Chebyshev polynomial
//! that equals 1 at `W = n` and is small on `0..n−1`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LOG2_E;

use num_bigint::BigUint;
#[allow(unused_imports)] // Float is inherent once a dependency enables num-traits/std
use num_traits::Float;
use num_traits::{One, Zero};

use crate::circuit::{self, conjugate_diagonal, conjugate_single, layer_diagonal, CzGate, QacCircuit};
use crate::limits::check_dense;
use crate::linalg::{self, Matrix, C64, ONE, ZERO};
use crate::pauli::{compose_epsilon, dense_pauli_degree, ErrorLedger, PauliOperator, PauliString};
use crate::{Error, Result};

/// Coefficients at or below this are treated as zero when measuring degree.
pub const DEGREE_TOL: f64 = 1e-9;

/// `q(x) = T_ρ(m(x)) / T_ρ(m(n))` with `m` the affine map `[0, n−1] → [−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightPolynomial {
    n: usize,
    rho: usize,
    log_top: f64,
    error: f64,
}

impl WeightPolynomial {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// `max_{j<n} |q(j)| = 1/|T_ρ(m(n))|`.
    pub fn error(&self) -> f64 {
        self.error
    }

    /// `ln T_ρ(m(n))`; infinite when `n = 1`.
    pub fn log_top(&self) -> f64 {
        self.log_top
    }

    /// `q(j)` for an integer weight `0 ≤ j ≤ n`.
    pub fn eval(&self, j: usize) -> f64 {
        if j >= self.n {
            return 1.0;
        }
        if self.n == 1 {
            return 0.0;
        }
        chebyshev_t(self.rho, affine(self.n, j)) * self.error
    }

    /// `q(0), …, q(n)`.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.eval(j)).collect()
    }

    /// Fresh re-evaluation of `max_{j<n} |q(j)|`.
    pub fn max_off_top(&self) -> f64 {
        (0..self.n).map(|j| self.eval(j).abs()).fold(0.0, f64::max)
    }

    /// The error as an exact fraction `(n−1)^ρ / U_ρ`, where `U_ρ = (n−1)^ρ T_ρ((n+1)/(n−1))`.
    pub fn exact_error(&self) -> (BigUint, BigUint) {
        if self.n == 1 {
            return (BigUint::zero(), BigUint::one());
        }
        let a = BigUint::from(self.n + 1);
        let b = BigUint::from(self.n - 1);
        let b2 = &b * &b;
        let two = BigUint::from(2u32);
        let (mut prev, mut cur) = (BigUint::one(), a.clone());
        for _ in 1..self.rho {
            let next = &two * &a * &cur - &b2 * &prev;
            prev = core::mem::replace(&mut cur, next);
        }
        (b.pow(self.rho as u32), cur)
    }

    /// `2^{−ρ²/(2⁸n)}`, the bound quoted for this degree.
    pub fn closed_form_bound(&self) -> f64 {
        let r = self.rho as f64;
        (-(r * r) / (256.0 * self.n as f64)).exp2()
    }

    /// Newton coefficients `Δᵏq(0)` for `k ≤ ρ`, so `q(w) = Σ_k Δᵏq(0)·C(w, k)`.
    pub fn newton_coefficients(&self) -> Vec<f64> {
        let mut diffs = self.grid();
        let mut out = Vec::with_capacity(self.rho + 1);
        while out.len() <= self.rho && !diffs.is_empty() {
            out.push(diffs[0]);
            diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        }
        out
    }

    /// Pauli coefficient of `Z_S` in `q(W)` for `|S| = j`, where `W` counts ones.
    pub fn krawtchouk_levels(&self) -> Vec<f64> {
        let n = self.n;
        let g = self.grid();
        let binom = binomial_table(n);
        let scale = (-(n as f64)).exp2();
        let mut out: Vec<f64> = (0..=n)
            .map(|j| {
                let mut s = 0.0;
                for (w, gw) in g.iter().enumerate() {
                    s += gw * krawtchouk(&binom, n, j, w);
                }
                s * scale
            })
            .collect();
        for v in out.iter_mut().skip(self.rho + 1) {
            *v = 0.0;
        }
        out
    }
}

/// Build the top projector approximation of degree `rho` on weights `0..=n`.
pub fn chebyshev_top_projector(n: usize, rho: usize) -> Result<WeightPolynomial> {
    if n == 0 || rho == 0 || rho > n {
        return Err(Error::OutOfRange(format!("degree {rho} for weight range {n}")));
    }
    if n == 1 {
        return Ok(WeightPolynomial { n, rho, log_top: f64::INFINITY, error: 0.0 });
    }
    let x = (n as f64 + 1.0) / (n as f64 - 1.0);
    let a = x.acosh() * rho as f64;
    let log_top = a + ((1.0 + (-2.0 * a).exp()) / 2.0).ln();
    Ok(WeightPolynomial { n, rho, log_top, error: (-log_top).exp() })
}

/// Smallest degree whose projector error is at most `target`.
pub fn smallest_rho_for(n: usize, target: f64) -> Option<usize> {
    (1..=n).find(|&rho| chebyshev_top_projector(n, rho).map(|p| p.error <= target).unwrap_or(false))
}

fn affine(n: usize, j: usize) -> f64 {
    2.0 * j as f64 / (n as f64 - 1.0) - 1.0
}

/// `T_k(x)` by the three-term recurrence; stable on `[−1, 1]`.
fn chebyshev_t(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0.0 };
        }
    }
    t
}

fn choose(binom: &[Vec<f64>], a: usize, b: usize) -> f64 {
    if b > a {
        0.0
    } else {
        binom[a][b]
    }
}

/// `K_j(w) = Σ_i (−1)^i C(j, i) C(n−j, w−i)`.
fn krawtchouk(binom: &[Vec<f64>], n: usize, j: usize, w: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..=j.min(w) {
        let term = choose(binom, j, i) * choose(binom, n - j, w - i);
        s += if i % 2 == 0 { term } else { -term };
    }
    s
}

/// How the approximant is represented.
#[derive(Clone, Debug, PartialEq)]
pub enum CertificateForm {
    Explicit(PauliOperator),
    /// `q(W)` for `W = Σ_i P_i`, with `P_i` the projector onto `block`
    /// placed on qubits `layout[i·ℓ .. (i+1)·ℓ]` of an `n_register` register.
    ProductState { block: Vec<C64>, count: usize, poly: WeightPolynomial, layout: Vec<usize>, n_register: usize },
    /// `1 − 2q(W)` on `arity` qubits.
    Cz { arity: usize, poly: WeightPolynomial },
    /// A CZ layer on `n` qubits with some gates replaced.
    Layer { n: usize, gates: Vec<CzGate>, plan: Vec<Option<WeightPolynomial>> },
    /// `Ũ` for a circuit; `plans[i]` covers `cz_layers[i]`.
    Circuit { circuit: QacCircuit, plans: Vec<Vec<Option<WeightPolynomial>>> },
    /// `Ũ†ÃŨ`.
    Heisenberg { circuit: QacCircuit, plans: Vec<Vec<Option<WeightPolynomial>>>, observable: Box<ApproxCertificate> },
    /// `Tr_{last k}[X (1 ⊗ φ)]` of the inner approximant.
    PostSelected { inner: Box<ApproxCertificate>, state: PauliOperator },
}

/// An approximant with its certified degree and spectral error, alongside
/// the closed-form values of the matching lemma.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxCertificate {
    pub target: String,
    /// Qubit count of the approximant.
    pub n: usize,
    /// For layer and circuit forms this bounds `deg(Ũ A Ũ†)` over all `A`
    /// of degree at most `input_degree`; otherwise it bounds the approximant.
    pub degree: usize,
    pub input_degree: Option<usize>,
    pub ledger: ErrorLedger,
    pub form: CertificateForm,
    pub closed_form_degree: f64,
    pub closed_form_error: f64,
    /// Whether the lemma's parameter range holds, so the bounds above must dominate.
    pub closed_forms_apply: bool,
    pub flags: Vec<String>,
}

impl ApproxCertificate {
    pub fn epsilon(&self) -> f64 {
        self.ledger.epsilon
    }

    pub fn within_closed_forms(&self) -> bool {
        self.degree as f64 <= self.closed_form_degree + 1e-9 && self.ledger.epsilon <= self.closed_form_error
    }

    /// Exact operator certificate, for observables known precisely.
    pub fn exact(target: impl Into<String>, op: PauliOperator) -> Self {
        let degree = op.degree();
        ApproxCertificate {
            target: target.into(),
            n: op.n(),
            degree,
            input_degree: None,
            ledger: ErrorLedger::exact(),
            closed_form_degree: degree as f64,
            closed_form_error: 0.0,
            closed_forms_apply: true,
            flags: Vec::new(),
            form: CertificateForm::Explicit(op),
        }
    }

    /// Dense matrix of the approximant.
    pub fn materialize_dense(&self) -> Result<Matrix> {
        check_dense(self.n)?;
        match &self.form {
            CertificateForm::Explicit(op) => op.to_dense(),
            CertificateForm::ProductState { .. } => self.explicit_operator()?.to_dense(),
            CertificateForm::Cz { arity, poly } => {
                let diag: Vec<C64> = (0..1u64 << arity)
                    .map(|x| C64::new(1.0 - 2.0 * poly.eval(x.count_ones() as usize), 0.0))
                    .collect();
                Ok(Matrix::from_diagonal(&diag))
            }
            CertificateForm::Layer { n, gates, plan } => {
                let d = approx_layer_diagonal(*n, gates, plan);
                Ok(Matrix::from_diagonal(&d.iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>()))
            }
            CertificateForm::Circuit { circuit, plans } => approx_unitary(circuit, plans),
            CertificateForm::Heisenberg { circuit, plans, observable } => {
                let mut x = observable.materialize_dense()?;
                conjugate_through(circuit, plans, &mut x)?;
                Ok(x)
            }
            CertificateForm::PostSelected { inner, state } => {
                post_select_dense(&inner.materialize_dense()?, &state.to_dense()?)
            }
        }
    }

    /// Pauli expansion of the approximant. Product-state and CZ forms are
    /// expanded symbolically; the rest go through the dense route.
    pub fn explicit_operator(&self) -> Result<PauliOperator> {
        match &self.form {
            CertificateForm::Explicit(op) => Ok(op.clone()),
            CertificateForm::ProductState { block, count, poly, layout, n_register } => {
                product_state_operator(block, *count, poly, layout, *n_register)
            }
            CertificateForm::Cz { arity, poly } => {
                let levels = poly.krawtchouk_levels();
                let mut op = PauliOperator::identity(*arity);
                for z in 0..1u64 << arity {
                    let c = levels[z.count_ones() as usize];
                    if c != 0.0 {
                        op.add_term(PauliString::new(*arity, 0, z)?, C64::new(-2.0 * c, 0.0));
                    }
                }
                Ok(op)
            }
            _ => PauliOperator::expand_with_tolerance(&self.materialize_dense()?, 1e-13),
        }
    }

    /// Largest Pauli degree observed. Layer and circuit forms are probed with
    /// weight-`input_degree` strings of `X` and of `Z` starting at each qubit.
    pub fn measured_degree(&self) -> Result<usize> {
        match &self.form {
            CertificateForm::Layer { .. } | CertificateForm::Circuit { .. } => {
                let n = self.n;
                let ell = self.input_degree.unwrap_or(1).min(n).max(1);
                let u = self.materialize_dense()?;
                let ud = u.adjoint();
                let mut worst = 0;
                for start in 0..n {
                    for sym in ['X', 'Z'] {
                        let mut x = 0u64;
                        for k in 0..ell {
                            x |= 1u64 << (n - 1 - (start + k) % n);
                        }
                        let s = if sym == 'X' { PauliString::new(n, x, 0)? } else { PauliString::new(n, 0, x)? };
                        let a = PauliOperator::from_terms(n, [(s, ONE)])?.to_dense()?;
                        let conj = u.mul(&a).mul(&ud);
                        worst = worst.max(dense_pauli_degree(&conj, DEGREE_TOL)?);
                    }
                }
                Ok(worst)
            }
            CertificateForm::Explicit(op) => Ok(op.pruned(DEGREE_TOL).degree()),
            CertificateForm::ProductState { .. } | CertificateForm::Cz { .. } => {
                Ok(self.explicit_operator()?.pruned(DEGREE_TOL).degree())
            }
            _ => dense_pauli_degree(&self.materialize_dense()?, DEGREE_TOL),
        }
    }
}

/// Outcome of checking a certificate against the exact object.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub distance: f64,
    pub ledger_epsilon: f64,
    pub measured_degree: usize,
    pub certified_degree: usize,
    pub distance_ok: bool,
    pub degree_ok: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.distance_ok && self.degree_ok
    }
}

/// Slack on the distance comparison, absorbing eigen-solver round-off.
pub const VERIFY_TOL: f64 = 1e-9;

pub fn verify_certificate(cert: &ApproxCertificate, exact: &PauliOperator) -> Result<VerificationReport> {
    if exact.n() != cert.n {
        return Err(Error::QubitMismatch { expected: cert.n, found: exact.n() });
    }
    if cert.n > crate::dense_limit() {
        return Err(Error::NoExplicitForm(format!("{} qubits exceeds the dense limit", cert.n)));
    }
    verify_certificate_dense(cert, &exact.to_dense()?)
}

pub fn verify_certificate_dense(cert: &ApproxCertificate, exact: &Matrix) -> Result<VerificationReport> {
    let approx = cert.materialize_dense()?;
    let diff = approx.sub(exact);
    let distance = linalg::spectral_norm(&diff)?;
    let measured_degree = cert.measured_degree()?;
    Ok(VerificationReport {
        distance,
        ledger_epsilon: cert.ledger.epsilon,
        measured_degree,
        certified_degree: cert.degree,
        distance_ok: distance <= cert.ledger.epsilon + VERIFY_TOL,
        degree_ok: measured_degree <= cert.degree,
    })
}

fn r_range_flags(r: f64, n: usize, flags: &mut Vec<String>) -> bool {
    let n = n as f64;
    let wide = r > 1.0 && r < n;
    let narrow = r > n.sqrt() && r < n;
    if !wide {
        flags.push(format!("r = {r} outside (1, {n}); closed-form bounds inapplicable"));
    } else if !narrow {
        flags.push(format!("r = {r} outside (√n, n) = ({:.4}, {n})", n.sqrt()));
    }
    wide
}

/// Approximate `|ψ⟩⟨ψ|^{⊗count}` for an `ℓ`-qubit block state with a
/// degree-`⌈r⌉` weight polynomial.
pub fn approx_product_state(block: &[C64], count: usize, r: f64) -> Result<ApproxCertificate> {
    let ell = linalg::qubits_for_dim(block.len())?;
    let n_register = ell * count;
    approx_product_state_on(block, count, r, (0..n_register).collect(), n_register)
}

/// As [`approx_product_state`], with block `i` placed on qubits
/// `layout[i·ℓ..(i+1)·ℓ]` of an `n_register`-qubit register.
pub fn approx_product_state_on(
    block: &[C64],
    count: usize,
    r: f64,
    layout: Vec<usize>,
    n_register: usize,
) -> Result<ApproxCertificate> {
    let ell = linalg::qubits_for_dim(block.len())?;
    if (linalg::norm(block) - 1.0).abs() > 1e-9 {
        return Err(Error::NotDensity("block state is not normalized".into()));
    }
    if layout.len() != ell * count || layout.iter().any(|&q| q >= n_register) {
        return Err(Error::Invalid("layout does not match the block structure".into()));
    }
    if !(r >= 1.0) {
        return Err(Error::OutOfRange(format!("r = {r} must be at least 1")));
    }
    let rho = (r.ceil() as usize).min(count);
    let poly = chebyshev_top_projector(count, rho)?;
    let mut flags = Vec::new();
    let n = count as f64;
    let applies = r > n.sqrt() && r < n;
    if !applies {
        flags.push(format!("r = {r} outside (√n, n) = ({:.4}, {n}); closed-form bound inapplicable", n.sqrt()));
    }
    Ok(ApproxCertificate {
        target: format!("product state: {count} blocks of {ell} qubits"),
        n: n_register,
        degree: ell * rho,
        input_degree: None,
        ledger: ErrorLedger::new(poly.error, format!("chebyshev(n={count}, rho={rho})"))?,
        closed_form_degree: ell as f64 * r,
        closed_form_error: (-(r * r) / (256.0 * n)).exp2(),
        closed_forms_apply: applies,
        flags,
        form: CertificateForm::ProductState { block: block.to_vec(), count, poly, layout, n_register },
    })
}

fn product_state_operator(
    block: &[C64],
    count: usize,
    poly: &WeightPolynomial,
    layout: &[usize],
    n_register: usize,
) -> Result<PauliOperator> {
    let ell = linalg::qubits_for_dim(block.len())?;
    let p = PauliOperator::expand_with_tolerance(&Matrix::outer(block, block), 1e-15)?;
    let id = PauliOperator::identity(ell);
    let rho = poly.rho();
    // e_k(P_1, …, P_i) built block by block
    let mut e: Vec<PauliOperator> = vec![PauliOperator::identity(0)];
    for _ in 0..count {
        let top = e.len().min(rho + 1);
        let mut next = Vec::with_capacity(top + 1);
        for k in 0..=top.min(rho) {
            let mut term = if k < e.len() { e[k].tensor(&id) } else { PauliOperator::zero(e[0].n() + ell) };
            if k >= 1 && k - 1 < e.len() {
                term = term.add(&e[k - 1].tensor(&p))?;
            }
            next.push(term);
        }
        e = next;
    }
    let coeffs = poly.newton_coefficients();
    let mut op = PauliOperator::zero(ell * count);
    for (k, c) in coeffs.iter().enumerate() {
        if k < e.len() {
            op = op.add(&e[k].scale(C64::new(*c, 0.0)))?;
        }
    }
    relabel(&op, layout, n_register)
}

/// Move qubit `i` of `op` to `layout[i]` in an `n_register`-qubit register.
pub fn relabel(op: &PauliOperator, layout: &[usize], n_register: usize) -> Result<PauliOperator> {
    let n = op.n();
    if layout.len() != n {
        return Err(Error::QubitMismatch { expected: n, found: layout.len() });
    }
    let mut out = PauliOperator::zero(n_register);
    for (s, c) in op.terms() {
        let (mut x, mut z) = (0u64, 0u64);
        for (i, &q) in layout.iter().enumerate() {
            let src = 1u64 << (n - 1 - i);
            let dst = 1u64 << (n_register - 1 - q);
            if s.x_mask() & src != 0 {
                x |= dst;
            }
            if s.z_mask() & src != 0 {
                z |= dst;
            }
        }
        out.add_term(PauliString::new(n_register, x, z)?, *c);
    }
    Ok(out)
}

/// `C̃Z = 1 − 2q(W)` with `ρ = ⌈√(nr)⌉`.
pub fn approx_cz(arity: usize, r: f64) -> Result<ApproxCertificate> {
    if !(r > 1.0 && r < arity as f64) {
        return Err(Error::OutOfRange(format!("r = {r} must lie in (1, {arity})")));
    }
    let rho = ((arity as f64 * r).sqrt().ceil() as usize).min(arity);
    let mut cert = approx_cz_with_degree(arity, rho)?;
    cert.closed_form_degree = (arity as f64 * r).sqrt();
    cert.closed_form_error = (1.0 - r / 256.0).exp2();
    cert.closed_forms_apply = true;
    cert.ledger = ErrorLedger::new(cert.ledger.epsilon, format!("cz(n={arity}, r={r}, rho={rho})"))?;
    Ok(cert)
}

/// `C̃Z` with the polynomial degree fixed directly.
pub fn approx_cz_with_degree(arity: usize, rho: usize) -> Result<ApproxCertificate> {
    let poly = chebyshev_top_projector(arity, rho)?;
    let eps = 2.0 * poly.error;
    Ok(ApproxCertificate {
        target: format!("CZ on {arity} qubits"),
        n: arity,
        degree: rho,
        input_degree: None,
        ledger: ErrorLedger::new(eps, format!("cz(n={arity}, rho={rho})"))?,
        closed_form_degree: f64::INFINITY,
        closed_form_error: f64::INFINITY,
        closed_forms_apply: false,
        flags: vec!["degree fixed directly; closed-form bounds not defined".into()],
        form: CertificateForm::Cz { arity, poly },
    })
}

/// `t = n^{2/3} ℓ^{−2/3} r^{1/3}`.
pub fn layer_threshold(n: usize, ell: usize, r: f64) -> f64 {
    (n as f64).powf(2.0 / 3.0) * (ell as f64).powf(-2.0 / 3.0) * r.cbrt()
}

/// `3 n^{2/3} ℓ^{1/3} r^{1/3}`.
pub fn layer_degree_bound(n: usize, ell: f64, r: f64) -> f64 {
    3.0 * (n as f64).powf(2.0 / 3.0) * ell.cbrt() * r.cbrt()
}

/// `n · 2^{1−r/2⁸} · log₂ e`.
pub fn layer_error_bound(n: usize, r: f64) -> f64 {
    n as f64 * (1.0 - r / 256.0).exp2() * LOG2_E
}

/// Approximate one CZ layer on `n` qubits for inputs of degree at most `ell`.
pub fn approx_layer(n: usize, gates: &[CzGate], ell: usize, r: f64) -> Result<ApproxCertificate> {
    if ell == 0 {
        return Err(Error::OutOfRange("incoming degree must be at least 1".into()));
    }
    let mut probe = QacCircuit::new(n, 0);
    probe.push_cz_layer(gates.to_vec())?;
    let mut flags = Vec::new();
    let applies = r_range_flags(r, n, &mut flags);
    let t = layer_threshold(n, ell, r);
    let max_arity = gates.iter().map(CzGate::arity).max().unwrap_or(1).max(1);
    let mut plan = vec![None; gates.len()];
    let mut ledger = ErrorLedger::exact().with_step(format!("layer(n={n}, ell={ell}, r={r}, t={t:.6})"));
    let degree;
    if r >= t || !(r > 1.0) {
        flags.push(format!("trivial branch: r = {r} ≥ t = {t:.6}"));
        degree = n.min(ell * max_arity);
    } else {
        let mut t_eff = 1;
        let mut large = 0usize;
        for (i, g) in gates.iter().enumerate() {
            let s = g.arity();
            if (s as f64) > t {
                let c = approx_cz(s, r)?;
                let CertificateForm::Cz { poly, .. } = c.form else { unreachable!() };
                large += 2 * poly.rho();
                ledger = ledger.compose(&c.ledger);
                plan[i] = Some(poly);
            } else {
                t_eff = t_eff.max(s);
            }
        }
        degree = n.min(ell * t_eff + large);
    }
    let bound_degree = layer_degree_bound(n, ell as f64, r);
    if applies && degree as f64 > bound_degree {
        flags.push(format!("integer rounding: degree {degree} exceeds 3n^(2/3)l^(1/3)r^(1/3) = {bound_degree:.4}"));
    }
    Ok(ApproxCertificate {
        target: format!("CZ layer of {} gates on {n} qubits", gates.len()),
        n,
        degree,
        input_degree: Some(ell),
        ledger,
        closed_form_degree: bound_degree,
        closed_form_error: layer_error_bound(n, r),
        closed_forms_apply: applies,
        flags,
        form: CertificateForm::Layer { n, gates: gates.to_vec(), plan },
    })
}

fn approx_layer_diagonal(n: usize, gates: &[CzGate], plan: &[Option<WeightPolynomial>]) -> Vec<f64> {
    layer_diagonal(n, gates, |gi, w, all| match &plan[gi] {
        Some(p) => 1.0 - 2.0 * p.eval(w),
        None => {
            if all {
                -1.0
            } else {
                1.0
            }
        }
    })
}

/// `ℓ_i = 3 n^{2/3} ℓ_{i−1}^{1/3} r^{1/3}` iterated `d` times.
pub fn degree_recursion(n: f64, ell: f64, r: f64, d: usize) -> f64 {
    let mut l = ell;
    for _ in 0..d {
        l = 3.0 * n.powf(2.0 / 3.0) * l.cbrt() * r.cbrt();
    }
    l
}

/// `3^{(3/2)(1−3^{−d})} n^{1−3^{−d}} ℓ^{3^{−d}} r^{(1−3^{−d})/2}`.
pub fn degree_closed_form(n: f64, ell: f64, r: f64, d: usize) -> f64 {
    let e = 3f64.powi(-(d as i32));
    3f64.powf(1.5 * (1.0 - e)) * n.powf(1.0 - e) * ell.powf(e) * r.powf((1.0 - e) / 2.0)
}

/// `d · n · 2^{1−r/2⁸} · log₂² e`.
pub fn circuit_error_bound(n: usize, r: f64, d: usize) -> f64 {
    d as f64 * layer_error_bound(n, r) * LOG2_E
}

/// Approximate the circuit layer by layer in Heisenberg order (`M_d` first)
/// for an observable of degree at most `ell`.
pub fn approx_circuit(circuit: &QacCircuit, ell: usize, r: f64) -> Result<ApproxCertificate> {
    circuit.validate()?;
    let n = circuit.n_qubits();
    let d = circuit.depth();
    let mut flags = Vec::new();
    let applies = d == 0 || r_range_flags(r, n, &mut flags);
    let mut plans = vec![Vec::new(); d];
    let mut degree = ell;
    let mut ledger = ErrorLedger::exact().with_step(format!("circuit(n={n}, d={d}, ell={ell}, r={r})"));
    for i in (0..d).rev() {
        let layer = approx_layer(n, &circuit.cz_layers[i], degree.max(1), r)?;
        degree = layer.degree;
        ledger = ledger.compose(&layer.ledger);
        for f in layer.flags {
            if f.starts_with("integer") || f.starts_with("trivial") {
                flags.push(format!("M_{}: {f}", i + 1));
            }
        }
        let CertificateForm::Layer { plan, .. } = layer.form else { unreachable!() };
        plans[i] = plan;
    }
    let bound_degree = degree_closed_form(n as f64, ell as f64, r, d);
    Ok(ApproxCertificate {
        target: format!("depth-{d} circuit on {n} qubits"),
        n,
        degree,
        input_degree: Some(ell),
        ledger,
        closed_form_degree: bound_degree,
        closed_form_error: circuit_error_bound(n, r, d),
        closed_forms_apply: applies,
        flags,
        form: CertificateForm::Circuit { circuit: circuit.clone(), plans },
    })
}

/// `r = 2⁸(1 + 2 log₂ n)`.
pub fn default_r(n: usize) -> f64 {
    256.0 * (1.0 + 2.0 * (n.max(1) as f64).log2())
}

/// Certificate for `Ũ†ÃŨ` given a certificate for the observable `A`.
/// Error is `(1+ε_A)(1+ε_U)² − 1`; `r` defaults to [`default_r`].
pub fn heisenberg_degree_bound(
    circuit: &QacCircuit,
    observable: &ApproxCertificate,
    r: Option<f64>,
) -> Result<ApproxCertificate> {
    let n = circuit.n_qubits();
    if observable.n != n {
        return Err(Error::QubitMismatch { expected: n, found: observable.n });
    }
    let r = r.unwrap_or_else(|| default_r(n));
    let ell = observable.degree.max(1);
    let u = approx_circuit(circuit, ell, r)?;
    let eps_u = u.ledger.epsilon;
    let ledger = observable.ledger.compose(&u.ledger).compose(&u.ledger).with_step("sandwich");
    let d = circuit.depth();
    let bound_eu = circuit_error_bound(n, r, d);
    let e = 3f64.powi(-(d as i32));
    let bound_degree = 3f64.powf(1.5) * (n as f64).powf(1.0 - e) * (ell as f64).powf(e) * r.sqrt();
    let degree = if d == 0 { observable.degree } else { u.degree };
    let CertificateForm::Circuit { plans, .. } = u.form else { unreachable!() };
    let mut flags = u.flags;
    if eps_u > 0.0 && observable.ledger.epsilon > 0.0 {
        flags.push("observable and circuit errors both nonzero".into());
    }
    Ok(ApproxCertificate {
        target: format!("Heisenberg evolution of [{}] through a depth-{d} circuit", observable.target),
        n,
        degree,
        input_degree: None,
        ledger,
        closed_form_degree: bound_degree.max(observable.degree as f64),
        closed_form_error: (1.0 + observable.ledger.epsilon) * (1.0 + bound_eu).powi(2) - 1.0,
        closed_forms_apply: u.closed_forms_apply,
        flags,
        form: CertificateForm::Heisenberg { circuit: circuit.clone(), plans, observable: Box::new(observable.clone()) },
    })
}

/// `Tr_{last k}[X (1 ⊗ φ)]`; degree and ledger carry over unchanged.
pub fn post_select(cert: &ApproxCertificate, state: &PauliOperator) -> Result<ApproxCertificate> {
    crate::pauli::validate_density(state)?;
    if state.n() > cert.n {
        return Err(Error::QubitMismatch { expected: cert.n, found: state.n() });
    }
    let mut out = cert.clone();
    out.n = cert.n - state.n();
    out.degree = cert.degree.min(out.n);
    out.input_degree = None;
    out.target = format!("post-selection of [{}] on {} qubits", cert.target, state.n());
    out.ledger = cert.ledger.clone().with_step("post-select");
    out.form = CertificateForm::PostSelected { inner: Box::new(cert.clone()), state: state.clone() };
    Ok(out)
}

/// `Tr_{last k}[X (1 ⊗ φ)]` for dense `X` and `φ`.
pub fn post_select_dense(x: &Matrix, phi: &Matrix) -> Result<Matrix> {
    let dim_a = phi.rows();
    if dim_a == 0 || x.rows() % dim_a != 0 {
        return Err(Error::Invalid("state does not divide the register".into()));
    }
    let dim = x.rows() / dim_a;
    Ok(Matrix::from_fn(dim, dim, |i, j| {
        let mut s = ZERO;
        for a in 0..dim_a {
            for b in 0..dim_a {
                s += x[(i * dim_a + a, j * dim_a + b)] * phi[(b, a)];
            }
        }
        s
    }))
}

fn conjugate_through(circuit: &QacCircuit, plans: &[Vec<Option<WeightPolynomial>>], x: &mut Matrix) -> Result<()> {
    let n = circuit.n_qubits();
    check_dense(n)?;
    for i in (0..circuit.local_layers.len()).rev() {
        for g in &circuit.local_layers[i] {
            conjugate_single(x, n, g);
        }
        if i > 0 {
            let d = approx_layer_diagonal(n, &circuit.cz_layers[i - 1], &plans[i - 1]);
            conjugate_diagonal(x, &d);
        }
    }
    Ok(())
}

/// Dense `Ũ = L_d M̃_d ⋯ M̃_1 L_0`.
fn approx_unitary(circuit: &QacCircuit, plans: &[Vec<Option<WeightPolynomial>>]) -> Result<Matrix> {
    let n = circuit.n_qubits();
    check_dense(n)?;
    let dim = 1usize << n;
    let diags: Vec<Vec<f64>> = circuit
        .cz_layers
        .iter()
        .zip(plans)
        .map(|(g, p)| approx_layer_diagonal(n, g, p))
        .collect();
    let mut u = Matrix::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|z| *z = ZERO);
        col[j] = ONE;
        for (i, layer) in circuit.local_layers.iter().enumerate() {
            if i > 0 {
                for (z, d) in col.iter_mut().zip(&diags[i - 1]) {
                    *z *= d;
                }
            }
            for g in layer {
                circuit::apply_single(&mut col, n, g);
            }
        }
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    Ok(u)
}

/// Worst-case ledger for one CZ layer over every way of partitioning `n`
/// qubits into gates.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerShape {
    pub degree_in: usize,
    pub degree_out: usize,
    pub threshold: f64,
    pub trivial: bool,
    pub epsilon: f64,
}

/// Worst-case `(degree, ε_U)` for any depth-`d` circuit on `n` qubits,
/// seeded with an observable of degree `ell`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeLedger {
    pub n: usize,
    pub depth: usize,
    pub ell: usize,
    pub r: f64,
    pub layers: Vec<LayerShape>,
    pub degree: usize,
    pub epsilon_u: f64,
}

impl ShapeLedger {
    /// `(1 + ε_A)(1 + ε_U)² − 1`.
    pub fn heisenberg_epsilon(&self, eps_a: f64) -> f64 {
        compose_epsilon(eps_a, compose_epsilon(self.epsilon_u, self.epsilon_u))
    }
}

pub fn shape_ledger(n: usize, depth: usize, ell: usize, r: f64) -> Result<ShapeLedger> {
    if n == 0 || ell == 0 {
        return Err(Error::OutOfRange("qubit count and seed degree must be positive".into()));
    }
    let mut layers = Vec::with_capacity(depth);
    let mut degree = ell.min(n);
    let mut log_growth = 0.0;
    for _ in 0..depth {
        let layer = worst_layer(n, degree, r)?;
        degree = layer.degree_out;
        log_growth += (layer.epsilon).ln_1p();
        layers.push(layer);
    }
    Ok(ShapeLedger { n, depth, ell, r, layers, degree, epsilon_u: log_growth.exp_m1() })
}

fn worst_layer(n: usize, ell: usize, r: f64) -> Result<LayerShape> {
    let t = layer_threshold(n, ell, r);
    if !(r > 1.0) || r >= t {
        return Ok(LayerShape { degree_in: ell, degree_out: n, threshold: t, trivial: true, epsilon: 0.0 });
    }
    let first_large = (t.floor() as usize + 1).max(1);
    let mut best_deg = vec![0usize; n + 1];
    let mut best_log = vec![0.0f64; n + 1];
    for s in first_large..=n {
        let rho = (((s as f64) * r).sqrt().ceil() as usize).min(s);
        let poly = chebyshev_top_projector(s, rho)?;
        let gain = 2 * rho;
        let loss = (2.0 * poly.error).ln_1p();
        for c in s..=n {
            best_deg[c] = best_deg[c].max(best_deg[c - s] + gain);
            best_log[c] = best_log[c].max(best_log[c - s] + loss);
        }
    }
    let mut degree = ell + best_deg[n];
    let small_max = (t.floor() as usize).min(n);
    for s in 2..=small_max {
        degree = degree.max(ell * s + best_deg[n - s]);
    }
    Ok(LayerShape {
        degree_in: ell,
        degree_out: degree.min(n),
        threshold: t,
        trivial: false,
        epsilon: best_log[n].exp_m1(),
    })
}

/// Certificate for `|0^n⟩⟨0^n|` with the smallest degree meeting `target`.
pub fn approx_zero_state(n: usize, target: f64) -> Result<ApproxCertificate> {
    let rho = smallest_rho_for(n, target).unwrap_or(n);
    approx_product_state(&[ONE, ZERO], n, rho as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_small_case_is_nine_over_forty_one() {
        let p = chebyshev_top_projector(4, 2).unwrap();
        assert!((p.error() - 9.0 / 41.0).abs() < 1e-15);
        let (num, den) = p.exact_error();
        assert_eq!((num, den), (BigUint::from(9u32), BigUint::from(41u32)));
        assert!((p.max_off_top() - p.error()).abs() < 1e-15);
        assert_eq!(p.eval(4), 1.0);
    }

    #[test]
    fn cz_certificate_values() {
        let c = approx_cz(4, 2.0).unwrap();
        assert_eq!(c.degree, 3);
        let forced = approx_cz_with_degree(4, 2).unwrap();
        assert!((forced.epsilon() - 18.0 / 41.0).abs() < 1e-15);
        let exact = Matrix::from_diagonal(
            &(0..16).map(|x| if x == 15 { -ONE } else { ONE }).collect::<Vec<_>>(),
        );
        let rep = verify_certificate_dense(&c, &exact).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.distance - c.epsilon()).abs() < 1e-12);
    }

    #[test]
    fn full_degree_cz_keeps_its_error() {
        for n in 2..=6usize {
            let c = approx_cz_with_degree(n, n).unwrap();
            assert!(c.epsilon() > 0.0);
            let dim = 1usize << n;
            let exact = Matrix::from_diagonal(&(0..dim).map(|x| if x == dim - 1 { -ONE } else { ONE }).collect::<Vec<_>>());
            let rep = verify_certificate_dense(&c, &exact).unwrap();
            assert!((rep.distance - c.epsilon()).abs() < 1e-9, "n = {n}: {rep:?}");
        }
    }

    #[test]
    fn explicit_cz_matches_diagonal() {
        let c = approx_cz(6, 3.0).unwrap();
        let a = c.explicit_operator().unwrap().to_dense().unwrap();
        assert!(a.max_abs_diff(&c.materialize_dense().unwrap()) < 1e-12);
    }

    #[test]
    fn product_state_epr_degree() {
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let epr = [h, ZERO, ZERO, h];
        let c = approx_product_state(&epr, 3, 2.0).unwrap();
        assert_eq!(c.degree, 4);
        let exact = Matrix::outer(
            &{
                let mut v = vec![ZERO; 64];
                for x in 0..8usize {
                    // pairs (q0,q1), (q2,q3), (q4,q5)
                    let idx = (0..3).fold(0, |acc, b| {
                        let bit = (x >> (2 - b)) & 1;
                        (acc << 2) | (bit << 1) | bit
                    });
                    v[idx] = C64::new((1.0f64 / 8.0).sqrt(), 0.0);
                }
                v
            },
            &{
                let mut v = vec![ZERO; 64];
                for x in 0..8usize {
                    let idx = (0..3).fold(0, |acc, b| {
                        let bit = (x >> (2 - b)) & 1;
                        (acc << 2) | (bit << 1) | bit
                    });
                    v[idx] = C64::new((1.0f64 / 8.0).sqrt(), 0.0);
                }
                v
            },
        );
        let rep = verify_certificate_dense(&c, &exact).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn recursion_matches_closed_form() {
        for d in 0..5 {
            let a = degree_recursion(100.0, 2.0, 7.0, d);
            let b = degree_closed_form(100.0, 2.0, 7.0, d);
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn shape_ledger_dominates_real_layer() {
        let gates = vec![CzGate::new([0, 1, 2, 3, 4, 5]), CzGate::new([6, 7, 8, 9]), CzGate::new([10, 11])];
        let real = approx_layer(12, &gates, 1, 2.0).unwrap();
        let shape = shape_ledger(12, 1, 1, 2.0).unwrap();
        assert!(real.degree <= shape.degree);
        assert!(real.epsilon() <= shape.epsilon_u + 1e-15);
    }
}
