//! Special states, Hamming-weight concentration, degree lower bounds for
//! states, the purification lemma, state-synthesis and channel certificates,
//! and the long-range-correlation example.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once a dependency enables num-traits/std
use num_traits::Float;

use crate::boolfn::{r_grid, Verdict};
use crate::circuit::{AncillaState, QacCircuit, SingleQubitGate};
use crate::limits::check_dense;
use crate::linalg::{self, Matrix, C64, ONE, ZERO};
use crate::lowdeg::{
    approx_product_state_on, chebyshev_top_projector, default_r, heisenberg_degree_bound, post_select,
    shape_ledger, smallest_rho_for, ApproxCertificate,
};
use crate::lp::LinearProgram;
use crate::pauli::PauliString;
use crate::{Error, PauliOperator, Result};

/// Slack when testing `P[W ≤ m] ≥ 1/2` and tail masses against `4ε²`.
pub const MASS_TOL: f64 = 1e-12;
/// Largest qubit count for the LP cross-check of a degree lower bound.
pub const LP_CHECK_LIMIT: usize = 6;
/// `(1/(4√2)/10)⁴`: below this `δ` the synthesis slack `10δ^{1/4}` stays under `1/(4√2)`.
pub const SYNTHESIS_DELTA0: f64 = 1.0 / 10_240_000.0;

/// A state on `n` qubits, stored as amplitudes or as a density matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure { n: usize, amplitudes: Vec<C64> },
    Mixed { n: usize, density: Matrix },
}

impl QuantumState {
    pub fn pure(amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::qubits_for_dim(amplitudes.len())?;
        let norm = linalg::norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotDensity(format!("state vector has norm {norm}")));
        }
        Ok(QuantumState::Pure { n, amplitudes })
    }

    pub fn mixed(density: Matrix) -> Result<Self> {
        if !density.is_square() {
            return Err(Error::NotSquare { rows: density.rows(), cols: density.cols() });
        }
        let n = linalg::qubits_for_dim(density.rows())?;
        if !density.is_hermitian(1e-10) {
            return Err(Error::NotDensity("matrix is not Hermitian".into()));
        }
        let tr = density.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let low = linalg::hermitian_eigenvalues(&density)?.first().copied().unwrap_or(0.0);
        if low < -1e-9 {
            return Err(Error::NotDensity(format!("negative eigenvalue {low}")));
        }
        Ok(QuantumState::Mixed { n, density })
    }

    /// Computational basis state `|x⟩`.
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        check_dense(n)?;
        if n < 64 && x >> n != 0 {
            return Err(Error::OutOfRange(format!("basis index {x} has more than {n} bits")));
        }
        let mut v = vec![ZERO; 1usize << n];
        v[x as usize] = ONE;
        Ok(QuantumState::Pure { n, amplitudes: v })
    }

    /// `(√(1−p)|0⟩ + √p|1⟩)^{⊗n}`.
    pub fn product(n: usize, p: f64) -> Result<Self> {
        check_dense(n)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("probability {p}")));
        }
        let (a0, a1) = ((1.0 - p).sqrt(), p.sqrt());
        let v = (0..1usize << n)
            .map(|x| {
                let w = x.count_ones() as i32;
                C64::new(a1.powi(w) * a0.powi(n as i32 - w), 0.0)
            })
            .collect();
        Ok(QuantumState::Pure { n, amplitudes: v })
    }

    pub fn n(&self) -> usize {
        match self {
            QuantumState::Pure { n, .. } | QuantumState::Mixed { n, .. } => *n,
        }
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match self {
            QuantumState::Pure { amplitudes, .. } => Some(amplitudes),
            QuantumState::Mixed { .. } => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    pub fn density(&self) -> Result<Matrix> {
        match self {
            QuantumState::Pure { n, amplitudes } => {
                check_dense(*n)?;
                Ok(Matrix::outer(amplitudes, amplitudes))
            }
            QuantumState::Mixed { density, .. } => Ok(density.clone()),
        }
    }

    pub fn to_pauli(&self) -> Result<PauliOperator> {
        PauliOperator::expand_with_tolerance(&self.density()?, 1e-14)
    }

    /// Diagonal of the density matrix in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes.iter().map(|z| z.norm_sqr()).collect(),
            QuantumState::Mixed { density, .. } => density.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// `H^{⊗n} φ H^{⊗n}`.
    pub fn hadamard_transform(&self) -> Self {
        match self {
            QuantumState::Pure { n, amplitudes } => {
                let mut v = amplitudes.clone();
                linalg::fwht(&mut v);
                let s = (v.len() as f64).sqrt().recip();
                QuantumState::Pure { n: *n, amplitudes: v.iter().map(|z| z * s).collect() }
            }
            QuantumState::Mixed { n, density } => {
                let dim = density.rows();
                let mut m = density.clone();
                for r in 0..dim {
                    linalg::fwht(m.row_mut(r));
                }
                let mut t = m.transpose();
                for r in 0..dim {
                    linalg::fwht(t.row_mut(r));
                }
                QuantumState::Mixed { n: *n, density: t.transpose().scale(C64::new(1.0 / dim as f64, 0.0)) }
            }
        }
    }
}

/// `(|0ⁿ⟩ + |1ⁿ⟩)/√2`.
pub fn make_cat(n: usize) -> Result<QuantumState> {
    if n == 0 {
        return Err(Error::OutOfRange("cat state on zero qubits".into()));
    }
    check_dense(n)?;
    let mut v = vec![ZERO; 1usize << n];
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[0] = h;
    v[(1usize << n) - 1] = h;
    Ok(QuantumState::Pure { n, amplitudes: v })
}

/// `(|0ⁿ,ψ₀⟩ + |1ⁿ,ψ₁⟩)/√2` on `n + m` qubits, with `ψ_b` on `m` qubits.
pub fn make_nekomata(n: usize, psi0: &[C64], psi1: &[C64]) -> Result<QuantumState> {
    if n == 0 {
        return Err(Error::OutOfRange("nekomata state needs at least one cat qubit".into()));
    }
    if psi0.len() != psi1.len() {
        return Err(Error::Invalid("the two tail states have different sizes".into()));
    }
    let m = linalg::qubits_for_dim(psi0.len())?;
    for psi in [psi0, psi1] {
        if (linalg::norm(psi) - 1.0).abs() > 1e-9 {
            return Err(Error::NotDensity("tail state is not normalized".into()));
        }
    }
    check_dense(n + m)?;
    let dim_t = psi0.len();
    let mut v = vec![ZERO; dim_t << n];
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let ones = (1usize << n) - 1;
    for t in 0..dim_t {
        v[t] += psi0[t] * s;
        v[ones * dim_t + t] += psi1[t] * s;
    }
    Ok(QuantumState::Pure { n: n + m, amplitudes: v })
}

/// Distribution of the Hamming weight of a computational-basis measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    pub probs: Vec<f64>,
}

impl WeightDistribution {
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P[W > t]`.
    pub fn above(&self, t: usize) -> f64 {
        self.probs.iter().skip(t + 1).sum()
    }

    /// `P[W < t]`.
    pub fn below(&self, t: usize) -> f64 {
        self.probs.iter().take(t).sum()
    }

    /// Smallest `m` with `P[W ≤ m] ≥ 1/2`.
    pub fn lower_median(&self) -> usize {
        let mut acc = 0.0;
        for (m, p) in self.probs.iter().enumerate() {
            acc += p;
            if acc >= 0.5 - MASS_TOL {
                return m;
            }
        }
        self.n()
    }

    /// Largest `m` with `P[W ≥ m] ≥ 1/2`.
    pub fn upper_median(&self) -> usize {
        let mut acc = 0.0;
        for (m, p) in self.probs.iter().enumerate().rev() {
            acc += p;
            if acc >= 0.5 - MASS_TOL {
                return m;
            }
        }
        0
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(w, p)| w as f64 * p).sum()
    }
}

pub fn weight_distribution(state: &QuantumState) -> WeightDistribution {
    let n = state.n();
    let mut probs = vec![0.0; n + 1];
    for (x, p) in state.probabilities().into_iter().enumerate() {
        probs[x.count_ones() as usize] += p;
    }
    WeightDistribution { probs }
}

/// Outcome of the concentration test on one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationBound {
    pub epsilon: f64,
    pub lower_median: usize,
    pub upper_median: usize,
    /// Largest `k` with `P[W > m + k] > 4ε²` for the lower median.
    pub k_above: Option<usize>,
    /// Largest `k` with `P[W < m − k] > 4ε²` for the upper median.
    pub k_below: Option<usize>,
    /// `deg_ε ≥ lower_bound`; zero when neither tail is heavy.
    pub lower_bound: usize,
}

/// Contrapositive of the anticoncentration lemma: a tail heavier than `4ε²`
/// at distance `k` from a median forces `deg_ε > k`.
pub fn concentration_violation_degree_lb(state: &QuantumState, epsilon: f64) -> Result<ConcentrationBound> {
    if !state.is_pure() {
        return Err(Error::Invalid("the concentration bound needs a pure state".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon}")));
    }
    let dist = weight_distribution(state);
    let n = dist.n();
    let limit = 4.0 * epsilon * epsilon + MASS_TOL;
    let lo = dist.lower_median();
    let hi = dist.upper_median();
    let k_above = (0..=n.saturating_sub(lo)).rev().find(|&k| dist.above(lo + k) > limit);
    let k_below = (0..=hi).rev().find(|&k| dist.below(hi - k) > limit);
    let lower_bound = k_above.max(k_below).map_or(0, |k| k + 1);
    Ok(ConcentrationBound { epsilon, lower_median: lo, upper_median: hi, k_above, k_below, lower_bound })
}

/// Concentration bound in both the computational and the Hadamard basis.
pub fn state_degree_lb(state: &QuantumState, epsilon: f64) -> Result<usize> {
    let z = concentration_violation_degree_lb(state, epsilon)?;
    let x = concentration_violation_degree_lb(&state.hadamard_transform(), epsilon)?;
    Ok(z.lower_bound.max(x.lower_bound))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementBasis {
    Computational,
    Hadamard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationBranch {
    pub basis: MeasurementBasis,
    pub w0: f64,
    pub w1: f64,
    /// `max(w₁√w₀, w₀√w₁)`, a lower bound on `‖φ − R‖` for `deg R < D`.
    pub value: f64,
    /// `‖Π₀φΠ₁‖ = √(w₀w₁)` for a pure state.
    pub block_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    pub distance: usize,
    pub delta: f64,
    pub branches: Vec<SeparationBranch>,
    /// `D` when some branch value exceeds `δ`, else zero.
    pub lower_bound: usize,
}

impl SeparationReport {
    pub fn best_value(&self) -> f64 {
        self.branches.iter().fold(0.0, |m, b| m.max(b.value))
    }
}

/// Degree lower bound from two string sets at Hamming distance `D`:
/// every `R` of degree below `D` has `Π₀RΠ₁ = 0`.
pub fn separation_degree_lb(state: &QuantumState, b0: &[u64], b1: &[u64], delta: f64) -> Result<SeparationReport> {
    if b0.is_empty() || b1.is_empty() {
        return Err(Error::Invalid("separation needs two nonempty string sets".into()));
    }
    if !state.is_pure() {
        return Err(Error::Invalid("the separation bound needs a pure state".into()));
    }
    let dim = 1u64 << state.n();
    if b0.iter().chain(b1).any(|&x| x >= dim) {
        return Err(Error::OutOfRange("string outside the register".into()));
    }
    let distance = b0
        .iter()
        .flat_map(|x| b1.iter().map(move |y| (x ^ y).count_ones() as usize))
        .min()
        .unwrap_or(0);
    let mut branches = Vec::with_capacity(2);
    for (basis, s) in [
        (MeasurementBasis::Computational, state.clone()),
        (MeasurementBasis::Hadamard, state.hadamard_transform()),
    ] {
        let p = s.probabilities();
        let mass = |set: &[u64]| {
            let mut seen: Vec<u64> = set.to_vec();
            seen.sort_unstable();
            seen.dedup();
            seen.iter().map(|&x| p[x as usize]).sum::<f64>()
        };
        let (w0, w1) = (mass(b0), mass(b1));
        let value = (w1 * w0.sqrt()).max(w0 * w1.sqrt());
        branches.push(SeparationBranch { basis, w0, w1, value, block_norm: (w0 * w1).sqrt() });
    }
    let certified = distance > 0 && branches.iter().any(|b| b.value > delta);
    Ok(SeparationReport { distance, delta, branches, lower_bound: if certified { distance } else { 0 } })
}

/// `min_R max_{(x,y)∈E} |φ_xy − R_xy|` over real operators `R` of degree at
/// most `degree`, with `E` the entries supported on the state's diagonal.
///
/// Since every entry is bounded by the spectral norm, a value above `δ` means
/// no degree-`degree` operator lies within `δ` of a real `φ`.
pub fn entrywise_distance_lower_bound(state: &QuantumState, degree: usize) -> Result<f64> {
    let n = state.n();
    if n > LP_CHECK_LIMIT {
        return Err(Error::DenseLimit { n, limit: LP_CHECK_LIMIT });
    }
    let rho = state.density()?;
    if rho.data().iter().any(|z| z.im.abs() > 1e-12) {
        return Err(Error::Invalid("the LP check handles real states only".into()));
    }
    let support: Vec<usize> = (0..rho.rows()).filter(|&x| rho[(x, x)].re > 1e-14).collect();
    let entries: Vec<(usize, usize)> = support.iter().flat_map(|&x| support.iter().map(move |&y| (x, y))).collect();
    let shifts: Vec<u64> = {
        let mut s: Vec<u64> = entries.iter().map(|&(x, y)| (x ^ y) as u64).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    // real basis i^{#Y}·P for strings of weight ≤ degree that reach some entry
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &xm in &shifts {
        for zm in 0..1u64 << n {
            let p = PauliString::new(n, xm, zm)?;
            if p.weight() > degree {
                continue;
            }
            let ys = (xm & zm).count_ones();
            let fix = match ys % 4 {
                0 => ONE,
                1 => C64::new(0.0, 1.0),
                2 => -ONE,
                _ => C64::new(0.0, -1.0),
            };
            let mut col = Vec::with_capacity(entries.len());
            for &(x, y) in &entries {
                let (row, phase) = p.column_entry(y as u64);
                col.push(if row as usize == x { (phase * fix).re } else { 0.0 });
            }
            if col.iter().any(|v| *v != 0.0) {
                basis.push(col);
            }
        }
    }
    let values: Vec<f64> = entries.iter().map(|&(x, y)| rho[(x, y)].re).collect();
    minimax_shifted(&values, &basis)
}

/// `min_c max_p |v_p − Σ_j c_j B_j[p]|` through the slack-feasible LP with
/// `t = T₀ + a − b` and `T₀ = max|v|`.
fn minimax_shifted(values: &[f64], basis: &[Vec<f64>]) -> Result<f64> {
    let t0 = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let k = basis.len();
    let vars = 2 * k + 2;
    let mut objective = vec![0.0; vars];
    objective[2 * k] = -1.0;
    objective[2 * k + 1] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for (p, &v) in values.iter().enumerate() {
        let mut up = vec![0.0; vars];
        let mut down = vec![0.0; vars];
        for (j, b) in basis.iter().enumerate() {
            up[2 * j] = b[p];
            up[2 * j + 1] = -b[p];
            down[2 * j] = -b[p];
            down[2 * j + 1] = b[p];
        }
        for row in [&mut up, &mut down] {
            row[2 * k] = -1.0;
            row[2 * k + 1] = 1.0;
        }
        lp.push_row(up, v + t0);
        lp.push_row(down, t0 - v);
    }
    let sol = lp.solve()?;
    Ok((t0 - sol.objective).max(0.0))
}

/// Reduction of a nekomata state to a scaled cat state.
#[derive(Clone, Debug, PartialEq)]
pub struct NekomataReduction {
    pub n: usize,
    /// `⟨ψ₀|ψ₁⟩` after the phase rotation; real and nonnegative.
    pub overlap: f64,
    /// `|1 + ⟨ψ₀|ψ₁⟩|² / Tr M`.
    pub scale: f64,
    /// `max |ν̃ − scale·Cat_n|` entrywise.
    pub residual: f64,
    pub epsilon: f64,
    /// `deg_{ε/scale}(Cat_n)` from the concentration bound, which lower-bounds `deg_ε(ν)`.
    pub lower_bound: usize,
}

/// Traces the tail of `ν` against `M/Tr M`, with
/// `M = (|ψ₀⟩ + |ψ₁⟩)(⟨ψ₀| + ⟨ψ₁|)`, after rotating `ψ₁` so the overlap is
/// nonnegative. Post-selection does not increase degree or spectral error.
pub fn nekomata_reduction(n: usize, psi0: &[C64], psi1: &[C64], epsilon: f64) -> Result<NekomataReduction> {
    let c = linalg::inner(psi0, psi1);
    let phase = if c.norm() > 1e-15 { c.conj() / c.norm() } else { ONE };
    let psi1: Vec<C64> = psi1.iter().map(|z| z * phase).collect();
    let nu = make_nekomata(n, psi0, &psi1)?;
    let sum: Vec<C64> = psi0.iter().zip(&psi1).map(|(a, b)| a + b).collect();
    let m = Matrix::outer(&sum, &sum);
    let tr = m.trace().re;
    if tr < 1e-12 {
        return Err(Error::Invalid("tail states are antipodal; the reduction degenerates".into()));
    }
    let sigma = PauliOperator::expand_with_tolerance(&m.scale(C64::new(1.0 / tr, 0.0)), 1e-14)?;
    let reduced = nu.to_pauli()?.trace_against_state(&sigma)?.to_dense()?;
    let overlap = linalg::inner(psi0, &psi1).re;
    let scale = (1.0 + overlap).powi(2) / tr;
    let cat = make_cat(n)?;
    let residual = reduced.max_abs_diff(&cat.density()?.scale(C64::new(scale, 0.0)));
    let lower_bound = concentration_violation_degree_lb(&cat, epsilon / scale)?.lower_bound;
    Ok(NekomataReduction { n, overlap, scale, residual, epsilon, lower_bound })
}

/// Result of the purification lemma on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Purification {
    /// Leading Schmidt vector on the ancilla side.
    pub nu: Vec<C64>,
    /// Leading Schmidt weight `s₁`.
    pub schmidt_weight: f64,
    /// `‖φ − Tr_anc ψ‖`.
    pub measured_epsilon: f64,
    /// The `ε` the bound is checked against.
    pub epsilon: f64,
    /// `‖φ⊗ν − ψ‖`.
    pub distance: f64,
    pub bound: f64,
    pub bound_ok: bool,
    pub schmidt_ok: bool,
}

/// Leading Schmidt vector of `ψ` on its last `a` qubits, checked against
/// `‖φ⊗ν − ψ‖ ≤ 5√ε` and `s₁ ≥ 1 − ε`. With `epsilon = None` the measured
/// distance is used.
pub fn purify_near_product(psi: &[C64], phi: &[C64], epsilon: Option<f64>) -> Result<Purification> {
    let total = linalg::qubits_for_dim(psi.len())?;
    let n = linalg::qubits_for_dim(phi.len())?;
    if n > total {
        return Err(Error::QubitMismatch { expected: total, found: n });
    }
    check_dense(total)?;
    let dim_s = phi.len();
    let dim_a = psi.len() / dim_s;
    let reduced_sys = Matrix::from_fn(dim_s, dim_s, |i, j| {
        (0..dim_a).map(|a| psi[i * dim_a + a] * psi[j * dim_a + a].conj()).sum()
    });
    let reduced_anc = Matrix::from_fn(dim_a, dim_a, |a, b| {
        (0..dim_s).map(|i| psi[i * dim_a + a] * psi[i * dim_a + b].conj()).sum()
    });
    let measured_epsilon = linalg::spectral_norm(&Matrix::outer(phi, phi).sub(&reduced_sys))?;
    let epsilon = match epsilon {
        Some(e) if e + 1e-12 < measured_epsilon => {
            return Err(Error::Invalid(format!(
                "supplied epsilon {e} is below the measured distance {measured_epsilon}"
            )))
        }
        Some(e) => e,
        None => measured_epsilon,
    };
    let (values, vecs) = linalg::hermitian_eigen(&reduced_anc)?;
    let top = dim_a - 1;
    let nu: Vec<C64> = (0..dim_a).map(|r| vecs[(r, top)]).collect();
    let schmidt_weight = values[top];
    let product: Vec<C64> = phi.iter().flat_map(|p| nu.iter().map(move |v| p * v)).collect();
    let distance = linalg::pure_state_distance(&product, psi);
    let bound = 5.0 * epsilon.sqrt();
    Ok(Purification {
        nu,
        schmidt_weight,
        measured_epsilon,
        epsilon,
        distance,
        bound,
        bound_ok: distance <= bound + 1e-12,
        schmidt_ok: schmidt_weight >= 1.0 - epsilon - 1e-12,
    })
}

fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    let (values, vecs) = linalg::hermitian_eigen(m)?;
    let dim = m.rows();
    Ok(Matrix::from_fn(dim, dim, |i, j| {
        (0..dim).map(|c| vecs[(i, c)] * vecs[(j, c)].conj() * values[c].max(0.0).sqrt()).sum()
    }))
}

/// `F(ρ, σ) = Tr √(√ρ σ √ρ)`.
pub fn fidelity(rho: &Matrix, sigma: &Matrix) -> Result<f64> {
    let s = psd_sqrt(rho)?;
    let inner = s.mul(sigma).mul(&s);
    let herm = inner.add(&inner.adjoint()).scale(C64::new(0.5, 0.0));
    Ok(linalg::hermitian_eigenvalues(&herm)?.iter().map(|v| v.max(0.0).sqrt()).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelitySandwich {
    pub fidelity: f64,
    /// `‖ρ − σ‖₁`.
    pub trace_distance: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `2 − 2F ≤ ‖ρ − σ‖₁ ≤ 2√(1 − F²)`.
pub fn fidelity_sandwich(rho: &Matrix, sigma: &Matrix) -> Result<FidelitySandwich> {
    let f = fidelity(rho, sigma)?;
    let td = linalg::trace_norm(&rho.sub(sigma))?;
    let lower = 2.0 - 2.0 * f;
    let upper = 2.0 * (1.0 - f * f).max(0.0).sqrt();
    Ok(FidelitySandwich {
        fidelity: f,
        trace_distance: td,
        lower,
        upper,
        holds: lower <= td + 1e-9 && td <= upper + 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisRow {
    pub r: f64,
    pub ledger_degree: usize,
    /// Ledger error of the evolved zero-state approximant.
    pub ledger_epsilon: f64,
    /// `10δ^{1/4}` plus the ledger error.
    pub effective_epsilon: f64,
    pub lower_bound: usize,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisReport {
    pub n: usize,
    pub ancillae: usize,
    pub depth: usize,
    pub delta: f64,
    pub zero_state_degree: usize,
    pub zero_state_error: f64,
    pub delta0: f64,
    pub below_delta0: bool,
    /// `(n+a)^{1−3^{−d}/2}`, without the hidden polylog factor.
    pub asymptotic_degree: f64,
    pub default_r: f64,
    pub rows: Vec<SynthesisRow>,
    pub verdict: Verdict,
}

/// Synthesis requirement with the computational-basis concentration bound of
/// the target. Pass [`state_degree_lb`] to [`synthesis_requirement_with`] to
/// add the Hadamard-basis branch.
pub fn synthesis_requirement(target: &QuantumState, a: usize, d: usize, delta: f64) -> Result<SynthesisReport> {
    synthesis_requirement_with(target.n(), a, d, delta, |eps| {
        Ok(concentration_violation_degree_lb(target, eps)?.lower_bound)
    })
}

/// Compares the ledger degree of `U|0^{n+a}⟩⟨0^{n+a}|U†` over all depth-`d`
/// shapes against `lower_bound(ε)` at `ε = 10δ^{1/4} + ε_ledger`.
/// The `|0^{n+a}⟩` approximant is the smallest-degree one with error `1/(n+a)`.
pub fn synthesis_requirement_with(
    n: usize,
    a: usize,
    d: usize,
    delta: f64,
    lower_bound: impl Fn(f64) -> Result<usize>,
) -> Result<SynthesisReport> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange(format!("delta {delta} outside [0, 1]")));
    }
    let total = n + a;
    if n == 0 {
        return Err(Error::OutOfRange("target on zero qubits".into()));
    }
    let rho = smallest_rho_for(total, 1.0 / total as f64).unwrap_or(total);
    let zero_state_error = chebyshev_top_projector(total, rho)?.error();
    let slack = 10.0 * delta.powf(0.25);
    let mut rows = Vec::new();
    for r in r_grid(total) {
        let shape = shape_ledger(total, d, rho, r)?;
        let ledger_epsilon = shape.heisenberg_epsilon(zero_state_error);
        let effective_epsilon = slack + ledger_epsilon;
        let ledger_degree = shape.degree.min(n);
        let (lb, verdict) = if effective_epsilon >= 1.0 {
            (0, Verdict::Vacuous)
        } else {
            let lb = lower_bound(effective_epsilon)?;
            (lb, if lb > ledger_degree { Verdict::Incompatible } else { Verdict::Consistent })
        };
        rows.push(SynthesisRow { r, ledger_degree, ledger_epsilon, effective_epsilon, lower_bound: lb, verdict });
    }
    let verdict = if rows.iter().any(|r| r.verdict == Verdict::Incompatible) {
        Verdict::Incompatible
    } else if rows.iter().all(|r| r.verdict == Verdict::Vacuous) {
        Verdict::Vacuous
    } else {
        Verdict::Consistent
    };
    let e = 3f64.powi(-(d as i32));
    Ok(SynthesisReport {
        n,
        ancillae: a,
        depth: d,
        delta,
        zero_state_degree: rho,
        zero_state_error,
        delta0: SYNTHESIS_DELTA0,
        below_delta0: delta < SYNTHESIS_DELTA0,
        asymptotic_degree: (total as f64).powf(1.0 - e / 2.0),
        default_r: default_r(total),
        rows,
        verdict,
    })
}

/// `ε` ceiling of the low-energy lemma for a CSS code with `m_x`, `m_z`
/// local terms: `(1/(400c₁))·(min(m_x, m_z)/n)·min(((k−1)/(4n))², δ₀, c₂/2)`.
/// The code constants are inputs; nothing here checks them against a code.
pub fn code_parameter_epsilon(n: usize, k: usize, m_x: usize, m_z: usize, c1: f64, c2: f64, delta0: f64) -> Result<f64> {
    if n == 0 || k == 0 || !(c1 > 0.0) {
        return Err(Error::OutOfRange("need n, k ≥ 1 and c₁ > 0".into()));
    }
    let nf = n as f64;
    let code = ((k as f64 - 1.0) / (4.0 * nf)).powi(2).min(delta0).min(c2 / 2.0);
    Ok(code * (m_x.min(m_z) as f64 / nf) / (400.0 * c1))
}

/// `a_k = √(C(n,k)(1−1/n)ⁿ/(n−1)^k)`: total amplitude of the weight-`k`
/// shell of `ρ⁰`.
pub fn shell_amplitude(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let mut log = nf * (1.0 - 1.0 / nf).ln() - (k as f64) * (nf - 1.0).ln();
    for i in 0..k {
        log += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (0.5 * log).exp()
}

/// `ρ⁰ = (√(1−1/n)|0⟩ + √(1/n)|1⟩)^{⊗n}` and `ρ¹`, which differs from it by
/// the sign of the `|0ⁿ⟩` amplitude.
pub fn longrange_states(n: usize) -> Result<(QuantumState, QuantumState)> {
    if n < 2 {
        return Err(Error::OutOfRange("long-range states need at least two qubits".into()));
    }
    let rho0 = QuantumState::product(n, 1.0 / n as f64)?;
    let mut v = rho0.amplitudes().expect("product states are pure").to_vec();
    v[0] = -v[0];
    Ok((rho0, QuantumState::Pure { n, amplitudes: v }))
}

/// `⟨Π⁰_S Π¹_T⟩ − ⟨Π⁰_S⟩⟨Π¹_T⟩`, where `Π⁰_S = |0^S⟩⟨0^S|` and
/// `Π¹_T = ½|χ⟩⟨χ|` with `|χ⟩ = |0^T⟩ + |T|^{−1/2} Σ_{|x_T|=1} |x_T⟩`.
pub fn correlation(state: &QuantumState, s: &[usize], t: &[usize]) -> Result<f64> {
    let n = state.n();
    let v = state.amplitudes().ok_or_else(|| Error::Invalid("correlation needs a pure state".into()))?;
    if s.is_empty() || t.is_empty() {
        return Err(Error::Invalid("empty region".into()));
    }
    if s.iter().chain(t).any(|&q| q >= n) {
        return Err(Error::OutOfRange("region outside the register".into()));
    }
    if s.iter().any(|q| t.contains(q)) {
        return Err(Error::Invalid("regions overlap".into()));
    }
    let bit = |q: usize| 1usize << (n - 1 - q);
    let s_mask: usize = s.iter().map(|&q| bit(q)).sum();
    let t_mask: usize = t.iter().map(|&q| bit(q)).sum();
    let project_s = |v: &[C64]| -> Vec<C64> {
        v.iter().enumerate().map(|(x, z)| if x & s_mask == 0 { *z } else { ZERO }).collect()
    };
    let amp = 1.0 / (t.len() as f64).sqrt();
    let chi = |x: usize| -> f64 {
        match (x & t_mask).count_ones() {
            0 => 1.0,
            1 => amp,
            _ => 0.0,
        }
    };
    let project_t = |v: &[C64]| -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        let mut seen = vec![false; v.len()];
        for x in 0..v.len() {
            let base = x & !t_mask;
            if seen[base] {
                continue;
            }
            seen[base] = true;
            let mut overlap = ZERO;
            let mut sub = base;
            // enumerate the subsets of t_mask
            loop {
                overlap += v[base | sub] * chi(sub);
                if sub == t_mask {
                    break;
                }
                sub = (sub.wrapping_sub(t_mask)) & t_mask;
            }
            let mut sub = 0usize;
            loop {
                out[base | sub] = overlap * chi(sub) * 0.5;
                if sub == t_mask {
                    break;
                }
                sub = (sub.wrapping_sub(t_mask)) & t_mask;
            }
        }
        out
    };
    let ps = project_s(v);
    let pt = project_t(v);
    let both = project_t(&ps);
    let e_s = linalg::inner(v, &ps).re;
    let e_t = linalg::inner(v, &pt).re;
    let e_st = linalg::inner(v, &both).re;
    Ok(e_st - e_s * e_t)
}

/// `−C₁ = 2a₀a₁(√((n−|S|)/n)·√(|T|/n) − √(|S|/n)(1−1/n)^{|S|})`.
pub fn closed_form_minus_c1(n: usize, s: usize, t: usize) -> f64 {
    let nf = n as f64;
    let a0 = shell_amplitude(n, 0);
    let a1 = shell_amplitude(n, 1);
    2.0 * a0
        * a1
        * (((nf - s as f64) / nf).sqrt() * (t as f64 / nf).sqrt()
            - (s as f64 / nf).sqrt() * (1.0 - 1.0 / nf).powi(s as i32))
}

/// `−C₁` worked out directly from the amplitudes: only the `|0ⁿ⟩` sign flip
/// separates `ρ¹` from the product state, which leaves
/// `2a₀a₁√(|T|/n)(1 − (1−1/n)^{|S|})`.
pub fn derived_minus_c1(n: usize, s: usize, t: usize) -> f64 {
    let nf = n as f64;
    2.0 * shell_amplitude(n, 0) * shell_amplitude(n, 1) * (t as f64 / nf).sqrt() * (1.0 - (1.0 - 1.0 / nf).powi(s as i32))
}

/// Certificate for `2^{−k}Φ_{U,ψ}`: the `k` normalized EPR pairs on outputs
/// and references are approximated, pulled back through `1_k ⊗ Ū`, and
/// post-selected on the conjugated ancilla state. `epr_target` defaults to
/// `1/(n+a)`.
pub fn channel_degree_bound(
    circuit: &QacCircuit,
    k: usize,
    epr_target: Option<f64>,
    r: Option<f64>,
) -> Result<ApproxCertificate> {
    circuit.validate()?;
    let n_in = circuit.n_inputs;
    let total = circuit.n_qubits();
    if k == 0 || k > n_in {
        return Err(Error::OutOfRange(format!("{k} outputs for {n_in} inputs")));
    }
    let reg = k + total;
    let mut v = QacCircuit::new(k + n_in, circuit.n_ancillae);
    let map: Vec<usize> = (0..total).map(|q| k + q).collect();
    v.embed(&circuit.conjugated(), &map, 0)?;
    // keep the layer count so the ledger sees the circuit's full depth
    while v.depth() < circuit.depth() {
        v.push_cz_layer(Vec::new())?;
    }
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let block = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
    let layout: Vec<usize> = (0..k).flat_map(|t| [t, k + t]).collect();
    let target = epr_target.unwrap_or(1.0 / total as f64);
    let rho = smallest_rho_for(k, target).unwrap_or(k);
    let epr = approx_product_state_on(&block, k, rho as f64, layout, reg)?;
    let mut cert = heisenberg_degree_bound(&v, &epr, r)?;
    if circuit.n_ancillae > 0 {
        let state = circuit.ancilla.density(circuit.n_ancillae)?.conj();
        cert = post_select(&cert, &PauliOperator::expand_with_tolerance(&state, 1e-14)?)?;
    }
    cert.target = format!("2^-{k} Choi matrix of a depth-{} circuit on {n_in}+{} qubits", circuit.depth(), circuit.n_ancillae);
    Ok(cert)
}

/// `2^{−k}Φ_{U,ψ}` computed directly.
pub fn normalized_choi(circuit: &QacCircuit, k: usize) -> Result<Matrix> {
    let choi = circuit.choi(k)?;
    Ok(choi.matrix.scale(C64::new(0.5f64.powi(k as i32), 0.0)))
}

/// Sampled comparison of `‖Φ − Φ′‖` with the completely bounded norm of the
/// channel difference.
#[derive(Clone, Debug, PartialEq)]
pub struct CbNormCheck {
    pub choi_distance: f64,
    /// `max ‖((E − E′) ⊗ 1)(X)‖` over the sampled `‖X‖ ≤ 1`; a lower bound on the cb norm.
    pub cb_lower_estimate: f64,
    /// `choi_distance ≤ cb_lower_estimate`, which settles the inequality for this pair.
    pub confirmed: bool,
}

/// Applies `(E ⊗ 1)` to `X` on `(input, reference)` given the Choi matrix of `E`.
fn apply_with_reference(choi: &Matrix, k: usize, n_in: usize, x: &Matrix) -> Matrix {
    let (dim_o, dim_i) = (1usize << k, 1usize << n_in);
    let dim_r = dim_i;
    Matrix::from_fn(dim_o * dim_r, dim_o * dim_r, |row, col| {
        let (o, r) = (row / dim_r, row % dim_r);
        let (o2, r2) = (col / dim_r, col % dim_r);
        let mut s = ZERO;
        for i in 0..dim_i {
            for j in 0..dim_i {
                let xv = x[(i * dim_r + r, j * dim_r + r2)];
                if xv != ZERO {
                    s += choi[(o * dim_i + i, o2 * dim_i + j)] * xv;
                }
            }
        }
        s
    })
}

fn random_unitary(dim: usize, uniform: &mut dyn FnMut() -> f64) -> Result<Matrix> {
    let raw = Matrix::from_fn(dim, dim, |_, _| C64::new(uniform() - 0.5, uniform() - 0.5));
    let h = raw.add(&raw.adjoint());
    let (_, vecs) = linalg::hermitian_eigen(&h)?;
    let phases: Vec<C64> = (0..dim).map(|_| C64::from_polar(1.0, uniform() * core::f64::consts::TAU)).collect();
    Ok(Matrix::from_fn(dim, dim, |i, j| (0..dim).map(|c| vecs[(i, c)] * phases[c] * vecs[(j, c)].conj()).sum()))
}

pub fn cb_norm_check(
    first: &QacCircuit,
    second: &QacCircuit,
    k: usize,
    samples: usize,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<CbNormCheck> {
    if first.n_inputs != second.n_inputs {
        return Err(Error::QubitMismatch { expected: first.n_inputs, found: second.n_inputs });
    }
    let n_in = first.n_inputs;
    check_dense(2 * n_in)?;
    let diff = first.choi(k)?.matrix.sub(&second.choi(k)?.matrix);
    let choi_distance = linalg::spectral_norm(&diff)?;
    let dim = 1usize << (2 * n_in);
    // reflection about the normalized maximally entangled vector
    let mut omega = vec![ZERO; dim];
    let side = 1usize << n_in;
    for x in 0..side {
        omega[x * side + x] = C64::new(1.0 / (side as f64).sqrt(), 0.0);
    }
    let reflection = Matrix::outer(&omega, &omega).scale(C64::new(2.0, 0.0)).sub(&Matrix::identity(dim));
    let mut best = linalg::spectral_norm(&apply_with_reference(&diff, k, n_in, &reflection))?;
    for _ in 0..samples {
        let u = random_unitary(dim, uniform)?;
        best = best.max(linalg::spectral_norm(&apply_with_reference(&diff, k, n_in, &u))?);
    }
    Ok(CbNormCheck { choi_distance, cb_lower_estimate: best, confirmed: choi_distance <= best + 1e-9 })
}

/// Ancilla state from a list of amplitudes, for callers building channels.
pub fn ancilla_from_state(state: &QuantumState) -> AncillaState {
    match state {
        QuantumState::Pure { amplitudes, .. } => AncillaState::Pure(amplitudes.clone()),
        QuantumState::Mixed { density, .. } => AncillaState::Mixed(density.clone()),
    }
}

/// Depth-0 circuit acting as the identity on `n_inputs` qubits.
pub fn identity_circuit(n_inputs: usize) -> QacCircuit {
    let mut c = QacCircuit::new(n_inputs, 0);
    for q in 0..n_inputs {
        c.push_local_gate(SingleQubitGate::new(q, [ONE, ZERO, ZERO, ONE]));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;
    use crate::lowdeg::verify_certificate_dense;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn cat_and_weights() {
        let c = make_cat(2).unwrap();
        let v = c.amplitudes().unwrap();
        assert!((v[0].re - v[3].re).abs() < 1e-15 && v[1] == ZERO && v[2] == ZERO);
        let w = weight_distribution(&make_cat(5).unwrap());
        assert!((w.probs[0] - 0.5).abs() < 1e-15 && (w.probs[5] - 0.5).abs() < 1e-15);
        let z = weight_distribution(&QuantumState::basis(4, 0).unwrap());
        assert_eq!(z.probs[0], 1.0);
    }

    #[test]
    fn product_state_is_binomial() {
        let (n, p) = (7, 0.3f64);
        let w = weight_distribution(&QuantumState::product(n, p).unwrap());
        let mut binom = 1.0;
        for k in 0..=n {
            let expect = binom * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            assert!((w.probs[k] - expect).abs() < 1e-12);
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
    }

    #[test]
    fn nekomata_with_equal_tails_is_cat_times_zero() {
        let zero = [ONE, ZERO];
        let nk = make_nekomata(3, &zero, &zero).unwrap();
        let cat = make_cat(3).unwrap();
        let expect: Vec<C64> = cat.amplitudes().unwrap().iter().flat_map(|z| [*z, ZERO]).collect();
        assert_eq!(nk.amplitudes().unwrap(), &expect[..]);
    }

    #[test]
    fn concentration_bounds() {
        let eps = 0.9 / (4.0 * 2f64.sqrt());
        for n in 1..=8 {
            let b = concentration_violation_degree_lb(&make_cat(n).unwrap(), eps).unwrap();
            assert_eq!(b.lower_bound, n);
        }
        let b = concentration_violation_degree_lb(&QuantumState::basis(5, 0).unwrap(), 0.1).unwrap();
        assert_eq!(b.lower_bound, 0);
    }

    #[test]
    fn nekomata_reduction_scalar() {
        let psi0 = [C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        let psi1 = [C64::new(0.0, 0.6), C64::new(0.0, -0.8)];
        let red = nekomata_reduction(4, &psi0, &psi1, 0.1).unwrap();
        assert!(red.residual < 1e-12, "{red:?}");
        assert!(red.overlap >= 0.0);
        assert!((red.scale - (1.0 + red.overlap) / 2.0).abs() < 1e-12);
        assert_eq!(red.lower_bound, 4);
    }

    #[test]
    fn cat_separation() {
        let n = 6;
        let cat = make_cat(n).unwrap();
        let rep = separation_degree_lb(&cat, &[0], &[(1 << n) - 1], 0.35).unwrap();
        assert_eq!(rep.lower_bound, n);
        assert!((rep.branches[0].value - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-12);
        let lp = entrywise_distance_lower_bound(&make_cat(4).unwrap(), 3).unwrap();
        assert!((lp - 0.5).abs() < 1e-9, "{lp}");
        let prod = QuantumState::basis(10, 0).unwrap();
        assert_eq!(separation_degree_lb(&prod, &[0], &[1023], 0.01).unwrap().lower_bound, 0);
    }

    #[test]
    fn synthetic_shells_hit_one_over_eight_thousand() {
        let n = 8;
        let mut v = vec![ZERO; 1 << n];
        v[0] = C64::new((1.0f64 / 400.0).sqrt(), 0.0);
        v[0b1111_0000] = C64::new((1.0f64 / 400.0).sqrt(), 0.0);
        v[0b1100_1100] = C64::new((398.0f64 / 400.0).sqrt(), 0.0);
        let s = QuantumState::pure(v).unwrap();
        let rep = separation_degree_lb(&s, &[0], &[0b1111_0000], 1.0 / 8000.0 - 1e-9).unwrap();
        assert_eq!(rep.lower_bound, n / 2);
        assert!((rep.branches[0].value - 1.0 / 8000.0).abs() < 1e-15);
    }

    #[test]
    fn purification_examples() {
        let eps = 0.01f64;
        let phi = [ONE, ZERO];
        let psi = [C64::new((1.0 - eps).sqrt(), 0.0), ZERO, ZERO, C64::new(eps.sqrt(), 0.0)];
        let p = purify_near_product(&psi, &phi, None).unwrap();
        assert!(p.distance <= 0.5 && p.bound_ok && p.schmidt_ok, "{p:?}");
        let exact = [C64::new(0.6, 0.0), C64::new(0.8, 0.0), ZERO, ZERO];
        let p = purify_near_product(&exact, &phi, None).unwrap();
        assert!(p.distance < 1e-12);
        assert!((p.nu[0].norm() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn fidelity_sandwich_on_pure_pair() {
        let a = Matrix::outer(&[ONE, ZERO], &[ONE, ZERO]);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let b = Matrix::outer(&[C64::new(h, 0.0); 2], &[C64::new(h, 0.0); 2]);
        let s = fidelity_sandwich(&a, &b).unwrap();
        assert!((s.fidelity - h).abs() < 1e-12);
        assert!(s.holds);
    }

    #[test]
    fn longrange_closed_form_at_four() {
        assert!((shell_amplitude(4, 0) - 0.5625).abs() < 1e-12);
        assert!((shell_amplitude(4, 1) - 0.649_519).abs() < 1e-6);
        assert!((closed_form_minus_c1(4, 1, 2) - 0.1735).abs() < 1e-4);
        let (rho0, _) = longrange_states(4).unwrap();
        assert!(correlation(&rho0, &[0], &[1, 2]).unwrap().abs() < 1e-12);
        assert!(correlation(&rho0, &[0], &[0, 1]).is_err());
        for n in [4, 6, 8] {
            let (_, rho1) = longrange_states(n).unwrap();
            let s: Vec<usize> = (0..n / 4).collect();
            let t: Vec<usize> = (n / 4..n / 2).collect();
            let dense = -correlation(&rho1, &s, &t).unwrap();
            assert!((dense - derived_minus_c1(n, s.len(), t.len())).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesis_trivial_and_cat() {
        let zero = QuantumState::basis(4, 0).unwrap();
        let rep = synthesis_requirement(&zero, 4, 1, 1e-9).unwrap();
        assert!(rep.rows.iter().all(|r| r.lower_bound == 0));
        assert_ne!(rep.verdict, Verdict::Incompatible);
        let cat = synthesis_requirement(&make_cat(6).unwrap(), 2, 1, 1e-9).unwrap();
        assert!(cat.below_delta0);
        assert!(cat.rows.iter().any(|r| r.lower_bound == 6));
    }

    #[test]
    fn channel_identity_is_one_epr_pair() {
        let c = identity_circuit(1);
        let cert = channel_degree_bound(&c, 1, None, None).unwrap();
        assert_eq!(cert.degree, 2);
        let rep = verify_certificate_dense(&cert, &normalized_choi(&c, 1).unwrap()).unwrap();
        assert!(rep.passed() && rep.distance < 1e-12, "{rep:?}");
    }

    #[test]
    fn channel_certificate_on_random_circuit() {
        let mut u = lcg(17);
        for _ in 0..3 {
            let c = random_circuit(2, 1, 2, 3, &mut u);
            let cert = channel_degree_bound(&c, 1, None, None).unwrap();
            let rep = verify_certificate_dense(&cert, &normalized_choi(&c, 1).unwrap()).unwrap();
            assert!(rep.distance <= rep.ledger_epsilon + 1e-9, "{rep:?}");
            assert!(c.choi(1).unwrap().spectral_norm().unwrap() <= 2.0 + 1e-9);
        }
    }
}
