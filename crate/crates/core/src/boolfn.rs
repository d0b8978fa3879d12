//! Boolean functions on `{0,1}ⁿ`, their Fourier spectra, an LP oracle for
//! approximate degree, and the degree-based hardness evaluators.
//!
//! Input `x` is an integer whose bit `n−1−i` is `xᵢ`, matching the qubit
//! order used by [`crate::circuit`]. Characters are `χ_S(x) = (−1)^{|S∧x|}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once a dependency enables num-traits/std
use num_traits::Float;

use crate::circuit::QacCircuit;
use crate::linalg::{fwht_real, C64};
use crate::lowdeg::{default_r, heisenberg_degree_bound, post_select, shape_ledger, ApproxCertificate};
use crate::lp::LinearProgram;
use crate::pauli::{PauliOperator, PauliString};
use crate::{Error, Result};

/// Largest arity accepted by the general LP route.
pub const GENERAL_LP_LIMIT: usize = 10;
/// Largest arity accepted by the symmetric route.
pub const SYMMETRIC_LIMIT: usize = 64;
/// Largest arity with a stored truth table.
pub const TABLE_LIMIT: usize = 20;
/// A degree is accepted when its best error is within this of `ε`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Smallest gap between `ε` and the best error one degree lower that counts
/// as a certified infeasibility.
pub const CERTIFIED_MARGIN: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedFunction {
    Parity,
    Majority,
    /// `1` iff `Σxᵢ mod k ≠ 0`.
    Mod(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BooleanFunction {
    n: usize,
    table: Vec<f64>,
    fourier: Vec<f64>,
}

impl BooleanFunction {
    /// Table entries are `Pr[output = 1]` and must lie in `[0, 1]`.
    pub fn new(n: usize, table: Vec<f64>) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::OutOfRange(format!("arity {n} exceeds {TABLE_LIMIT}")));
        }
        if table.len() != 1 << n {
            return Err(Error::Invalid(format!("table has {} entries, expected {}", table.len(), 1u64 << n)));
        }
        if let Some(v) = table.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::OutOfRange(format!("table value {v} outside [0, 1]")));
        }
        let mut fourier = table.clone();
        fwht_real(&mut fourier);
        let scale = 1.0 / table.len() as f64;
        fourier.iter_mut().for_each(|c| *c *= scale);
        Ok(BooleanFunction { n, table, fourier })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> f64) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::OutOfRange(format!("arity {n} exceeds {TABLE_LIMIT}")));
        }
        Self::new(n, (0..1u64 << n).map(f).collect())
    }

    /// Function depending only on the Hamming weight.
    pub fn symmetric(n: usize, by_weight: &[f64]) -> Result<Self> {
        if by_weight.len() != n + 1 {
            return Err(Error::Invalid("need one value per weight".into()));
        }
        Self::from_fn(n, |x| by_weight[x.count_ones() as usize])
    }

    pub fn named(name: NamedFunction, n: usize) -> Result<Self> {
        Self::symmetric(n, &named_profile(name, n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn value(&self, x: u64) -> f64 {
        self.table[x as usize]
    }

    /// `f̂(S)` indexed by the mask of `S`.
    pub fn fourier(&self) -> &[f64] {
        &self.fourier
    }

    pub fn is_decision(&self) -> bool {
        self.table.iter().all(|v| *v == 0.0 || *v == 1.0)
    }

    /// Values by weight when `f` is symmetric.
    pub fn symmetric_profile(&self) -> Option<Vec<f64>> {
        let mut prof = vec![None; self.n + 1];
        for (x, v) in self.table.iter().enumerate() {
            let w = x.count_ones() as usize;
            match prof[w] {
                None => prof[w] = Some(*v),
                Some(p) if p != *v => return None,
                _ => {}
            }
        }
        prof.into_iter().collect()
    }

    /// `W^{=k}[f]` for `k = 0..=n`, in the 0/1 form.
    pub fn level_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n + 1];
        for (s, c) in self.fourier.iter().enumerate() {
            w[s.count_ones() as usize] += c * c;
        }
        w
    }

    /// `W^{=k}[g]` for `g = 2f − 1`.
    pub fn signed_level_weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.level_weights().iter().map(|v| 4.0 * v).collect();
        let c0 = self.fourier[0];
        w[0] = (2.0 * c0 - 1.0) * (2.0 * c0 - 1.0);
        w
    }

    /// `W^{>k}[f]`.
    pub fn weight_above(&self, k: usize) -> f64 {
        self.level_weights().iter().skip(k + 1).sum()
    }

    /// `W^{>k}[2f − 1]`.
    pub fn signed_weight_above(&self, k: usize) -> f64 {
        self.signed_level_weights().iter().skip(k + 1).sum()
    }

    /// `E[f²]`, equal to `Σ f̂(S)²`.
    pub fn second_moment(&self) -> f64 {
        self.table.iter().map(|v| v * v).sum::<f64>() / self.table.len() as f64
    }
}

/// Truth values by Hamming weight.
pub fn named_profile(name: NamedFunction, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::OutOfRange("arity must be at least 1".into()));
    }
    let rule: &dyn Fn(usize) -> bool = match name {
        NamedFunction::Parity => &|w| w % 2 == 1,
        NamedFunction::Majority => {
            if n % 2 == 0 {
                return Err(Error::OutOfRange(format!("majority needs odd arity, got {n}")));
            }
            &|w| 2 * w >= n
        }
        NamedFunction::Mod(k) => {
            if k < 2 || k > n {
                return Err(Error::OutOfRange(format!("modulus {k} outside [2, {n}]")));
            }
            return Ok((0..=n).map(|w| if w % k != 0 { 1.0 } else { 0.0 }).collect());
        }
    };
    Ok((0..=n).map(|w| if rule(w) { 1.0 } else { 0.0 }).collect())
}

/// `M_f = Σ_x f(x)|x⟩⟨x|`, whose `Z_S` coefficient is `f̂(S)`.
pub fn embed_as_operator(f: &BooleanFunction) -> Result<PauliOperator> {
    let n = f.n;
    if n > crate::pauli::DIAGONAL_ROUTE_LIMIT.min(12) {
        return Err(Error::OutOfRange(format!("arity {n} too large to embed")));
    }
    let mut terms = Vec::new();
    for (s, c) in f.fourier.iter().enumerate() {
        if *c != 0.0 {
            terms.push((PauliString::new(n, 0, s as u64)?, C64::new(*c, 0.0)));
        }
    }
    PauliOperator::from_terms(n, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeRoute {
    General,
    Symmetric,
}

/// A polynomial achieving the reported error.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `Σ_S c_S χ_S` over the listed masks.
    Multilinear { n: usize, coefficients: Vec<(u64, f64)> },
    /// A univariate polynomial of the given degree in `|x|`, stored by its
    /// value at each Hamming weight.
    Symmetric { n: usize, degree: usize, by_weight: Vec<f64> },
}

impl Witness {
    pub fn eval(&self, x: u64) -> f64 {
        match self {
            Witness::Multilinear { coefficients, .. } => coefficients
                .iter()
                .map(|(s, c)| if (s & x).count_ones() % 2 == 0 { *c } else { -*c })
                .sum(),
            Witness::Symmetric { by_weight, .. } => by_weight[x.count_ones() as usize],
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Witness::Multilinear { coefficients, .. } => coefficients
                .iter()
                .filter(|(_, c)| c.abs() > 1e-12)
                .map(|(s, _)| s.count_ones() as usize)
                .max()
                .unwrap_or(0),
            Witness::Symmetric { degree, .. } => *degree,
        }
    }

    /// `max_x |f(x) − g(x)|` over all inputs.
    pub fn max_deviation(&self, f: &BooleanFunction) -> f64 {
        (0..1u64 << f.n).map(|x| (f.value(x) - self.eval(x)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeQuery {
    pub epsilon: f64,
    pub degree: usize,
    pub route: DegreeRoute,
    /// Best error achievable at `degree`.
    pub best_error: f64,
    /// Best error one degree lower, when `degree > 0`.
    pub error_below: Option<f64>,
    /// `error_below − ε`; infeasibility below is certified when this is at
    /// least [`CERTIFIED_MARGIN`].
    pub margin: Option<f64>,
    pub certified: bool,
    pub witness: Option<Witness>,
}

/// Best uniform error of a degree-`d` approximation, and its witness.
pub fn best_error(f: &BooleanFunction, d: usize) -> Result<(f64, Witness)> {
    match f.symmetric_profile() {
        Some(profile) => best_error_symmetric(&profile, d),
        None => best_error_general(f, d),
    }
}

/// Best error at every degree `0..=n`.
pub fn error_profile(f: &BooleanFunction) -> Result<Vec<f64>> {
    (0..=f.n).map(|d| best_error(f, d).map(|(e, _)| e)).collect()
}

/// Minimise `t` subject to `|F(p) − Σ_j c_j B_j(p)| ≤ t` at each point, with
/// `F ∈ [0, 1]` and `B_0 ≡ 1`. The constant coefficient is shifted by one
/// and `t = 1 + a − b`, which keeps every right-hand side nonnegative.
fn minimax(values: &[f64], basis: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
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
        up[2 * k] = -1.0;
        up[2 * k + 1] = 1.0;
        down[2 * k] = -1.0;
        down[2 * k + 1] = 1.0;
        lp.push_row(up, v);
        lp.push_row(down, 2.0 - v);
    }
    let sol = lp.solve()?;
    let mut coeffs: Vec<f64> = (0..k).map(|j| sol.x[2 * j] - sol.x[2 * j + 1]).collect();
    // basis[0] is constant; undo the unit shift that keeps the origin feasible
    coeffs[0] += 1.0 / basis[0][0];
    // recompute the error from the coefficients rather than trusting the tableau
    let err = values
        .iter()
        .enumerate()
        .map(|(p, v)| (v - basis.iter().zip(&coeffs).map(|(b, c)| b[p] * c).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    Ok((err, coeffs))
}

/// Best error by the LP over all multilinear monomials of degree at most
/// `d`, ignoring any symmetry of `f`.
pub fn best_error_general(f: &BooleanFunction, d: usize) -> Result<(f64, Witness)> {
    let n = f.n;
    if n > GENERAL_LP_LIMIT {
        return Err(Error::OutOfRange(format!("general route is limited to {GENERAL_LP_LIMIT} inputs")));
    }
    let masks: Vec<u64> = (0..1u64 << n).filter(|s| s.count_ones() as usize <= d).collect();
    let basis: Vec<Vec<f64>> = masks
        .iter()
        .map(|s| (0..1u64 << n).map(|x| if (s & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect())
        .collect();
    let (err, coeffs) = minimax(&f.table, &basis)?;
    Ok((err, Witness::Multilinear { n, coefficients: masks.into_iter().zip(coeffs).collect() }))
}

fn best_error_symmetric(profile: &[f64], d: usize) -> Result<(f64, Witness)> {
    let n = profile.len() - 1;
    if n > SYMMETRIC_LIMIT {
        return Err(Error::OutOfRange(format!("symmetric route is limited to {SYMMETRIC_LIMIT} inputs")));
    }
    let d = d.min(n);
    let basis = grid_orthonormal_basis(n, d);
    let (err, coeffs) = minimax(profile, &basis)?;
    let by_weight = (0..=n).map(|w| basis.iter().zip(&coeffs).map(|(b, c)| b[w] * c).sum()).collect();
    Ok((err, Witness::Symmetric { n, degree: d, by_weight }))
}

/// Polynomials of degree `0..=d` in the weight, orthonormal over the grid
/// `w = 0..=n`. Monomial or Chebyshev columns on an equispaced grid lose
/// rank in double precision long before `n = 64`; this basis does not.
fn grid_orthonormal_basis(n: usize, d: usize) -> Vec<Vec<f64>> {
    let m: Vec<f64> = (0..=n).map(|w| if n == 0 { 0.0 } else { 2.0 * w as f64 / n as f64 - 1.0 }).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis = vec![vec![1.0 / ((n + 1) as f64).sqrt(); n + 1]];
    while basis.len() <= d {
        let last = &basis[basis.len() - 1];
        let mut next: Vec<f64> = last.iter().zip(&m).map(|(q, x)| q * x).collect();
        // Stieltjes step with full reorthogonalization, done twice
        for _ in 0..2 {
            for q in &basis {
                let h = dot(&next, q);
                next.iter_mut().zip(q).for_each(|(v, qi)| *v -= h * qi);
            }
        }
        let norm = dot(&next, &next).sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        basis.push(next);
    }
    basis
}

/// Smallest degree whose best uniform error is at most `epsilon`.
pub fn approx_degree(f: &BooleanFunction, epsilon: f64) -> Result<DegreeQuery> {
    match f.symmetric_profile() {
        Some(profile) => approx_degree_by_weight(&profile, epsilon),
        None => bisect_degree(f.n, epsilon, DegreeRoute::General, |d| best_error_general(f, d)),
    }
}

/// [`approx_degree`] for a symmetric function given by its values on each
/// Hamming weight, so arities past the truth-table limit stay reachable.
pub fn approx_degree_by_weight(by_weight: &[f64], epsilon: f64) -> Result<DegreeQuery> {
    check_profile(by_weight)?;
    bisect_degree(by_weight.len() - 1, epsilon, DegreeRoute::Symmetric, |d| best_error_symmetric(by_weight, d))
}

/// Best error at every degree `0..=n` for a symmetric function.
pub fn error_profile_by_weight(by_weight: &[f64]) -> Result<Vec<f64>> {
    check_profile(by_weight)?;
    let mut best = f64::INFINITY;
    (0..by_weight.len())
        .map(|d| {
            // a degree-(d−1) witness is also a degree-d one, so keep the running minimum
            best = best.min(best_error_symmetric(by_weight, d)?.0);
            Ok(best)
        })
        .collect()
}

fn check_profile(by_weight: &[f64]) -> Result<()> {
    if by_weight.is_empty() {
        return Err(Error::Invalid("need one value per weight".into()));
    }
    if by_weight.len() - 1 > SYMMETRIC_LIMIT {
        return Err(Error::OutOfRange(format!("arity {} exceeds {SYMMETRIC_LIMIT}", by_weight.len() - 1)));
    }
    if let Some(v) = by_weight.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::OutOfRange(format!("value {v} outside [0, 1]")));
    }
    Ok(())
}

fn bisect_degree(
    n: usize,
    epsilon: f64,
    route: DegreeRoute,
    best: impl Fn(usize) -> Result<(f64, Witness)>,
) -> Result<DegreeQuery> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let accept = |e: f64| e <= epsilon + FEASIBILITY_TOL;
    // E_d is nonincreasing in d and E_n = 0, so bisect for the first accepted d
    let (mut lo, mut hi) = (0usize, n);
    let mut at_hi = best(hi)?;
    if !accept(at_hi.0) {
        return Err(Error::Solver(format!("full-degree error {} exceeds epsilon", at_hi.0)));
    }
    let mut below: Option<f64> = None;
    let at_zero = best(0)?;
    if accept(at_zero.0) {
        hi = 0;
        at_hi = at_zero;
    } else {
        below = Some(at_zero.0);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let r = best(mid)?;
            if accept(r.0) {
                hi = mid;
                at_hi = r;
            } else {
                lo = mid;
                below = Some(r.0);
            }
        }
    }
    let error_below = if hi == 0 {
        None
    } else if lo + 1 == hi {
        below
    } else {
        Some(best(hi - 1)?.0)
    };
    let margin = error_below.map(|e| e - epsilon);
    Ok(DegreeQuery {
        epsilon,
        degree: hi,
        route,
        best_error: at_hi.0,
        error_below,
        margin,
        certified: margin.map_or(true, |m| m >= CERTIFIED_MARGIN),
        witness: Some(at_hi.1),
    })
}

/// Approximate degree of `2f − 1` at `epsilon`, i.e. of `f` at `epsilon / 2`.
pub fn approx_degree_signed(f: &BooleanFunction, epsilon: f64) -> Result<DegreeQuery> {
    let mut q = approx_degree(f, epsilon / 2.0)?;
    q.epsilon = epsilon;
    Ok(q)
}

/// Both conventions of the average-case bound.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageCaseReport {
    pub k: usize,
    pub epsilon: f64,
    /// `W^{>k}[f]` in the 0/1 form.
    pub weight_above: f64,
    /// `W^{>k}[2f − 1]`.
    pub signed_weight_above: f64,
    /// `1/2 + √(W^{≤k}[g])/2 + ε√(W^{>k}[g])`.
    pub chain_value: f64,
    /// `1/2 + √(1 − 4W^{>k}[f])/2 + ε`, before capping.
    pub final_raw: f64,
    /// `min(final_raw, 1)`.
    pub value: f64,
}

pub fn average_case_report(f: &BooleanFunction, k: usize, epsilon: f64) -> Result<AverageCaseReport> {
    if k > f.n {
        return Err(Error::OutOfRange(format!("k = {k} exceeds arity {}", f.n)));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::OutOfRange(format!("slack {epsilon} is negative")));
    }
    let signed = f.signed_level_weights();
    let w_low: f64 = signed.iter().take(k + 1).sum();
    let w_high: f64 = signed.iter().skip(k + 1).sum();
    let weight_above = f.weight_above(k);
    let chain_value = 0.5 + 0.5 * w_low.sqrt() + epsilon * w_high.sqrt();
    let final_raw = 0.5 + 0.5 * (1.0 - 4.0 * weight_above).max(0.0).sqrt() + epsilon;
    Ok(AverageCaseReport {
        k,
        epsilon,
        weight_above,
        signed_weight_above: w_high,
        chain_value,
        final_raw,
        value: final_raw.min(1.0),
    })
}

/// Upper bound on the average-case success of any circuit whose acceptance
/// probability is within `epsilon` of a degree-`k` function.
pub fn average_case_bound(f: &BooleanFunction, k: usize, epsilon: f64) -> Result<f64> {
    Ok(average_case_report(f, k, epsilon)?.value)
}

/// Best average agreement `E[p f + (1 − p)(1 − f)]` over degree-≤`k`
/// predictors with `0 ≤ p ≤ 1`, by LP. Cross-checks the bound at `ε = 0`.
pub fn best_low_degree_agreement(f: &BooleanFunction, k: usize) -> Result<f64> {
    let n = f.n;
    if n > GENERAL_LP_LIMIT {
        return Err(Error::OutOfRange(format!("limited to {GENERAL_LP_LIMIT} inputs")));
    }
    let masks: Vec<u64> = (0..1u64 << n).filter(|s| s.count_ones() as usize <= k).collect();
    // p = 1/2 + Σ c_S χ_S; agreement = 1/2 + Σ_S c_S ĝ(S) with ĝ(S) = 2 f̂(S) − [S = ∅]
    let g_hat = |s: u64| 2.0 * f.fourier[s as usize] - if s == 0 { 1.0 } else { 0.0 };
    let mut objective = Vec::with_capacity(2 * masks.len());
    for &s in &masks {
        objective.push(g_hat(s) / 2.0);
        objective.push(-g_hat(s) / 2.0);
    }
    let mut lp = LinearProgram::new(objective);
    for x in 0..1u64 << n {
        let row: Vec<f64> = masks
            .iter()
            .flat_map(|s| {
                let chi = if (s & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                [chi, -chi]
            })
            .collect();
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        lp.push_row(row, 0.5);
        lp.push_row(neg, 0.5);
    }
    let sol = lp.solve()?;
    Ok(0.5 + sol.objective)
}

/// Verdict of comparing an exact degree with a circuit's degree ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// `δ + ε′ ≥ 1/2`: the constant `1/2` already meets the requirement.
    Vacuous,
    /// Exact degree exceeds the ledger degree: no such circuit exists.
    Incompatible,
    /// The ledger degree is large enough; nothing follows.
    Consistent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequirementRow {
    pub r: f64,
    pub ledger_degree: usize,
    /// `ε′` of the approximated, post-selected output observable.
    pub circuit_epsilon: f64,
    /// `δ + ε′`.
    pub effective_epsilon: f64,
    pub exact_degree: Option<usize>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequirementReport {
    pub label: String,
    pub n: usize,
    pub ancillae: usize,
    pub depth: usize,
    pub seed_degree: usize,
    pub delta: f64,
    pub default_r: f64,
    pub rows: Vec<RequirementRow>,
    pub verdict: Verdict,
}

impl RequirementReport {
    /// Row for the default `r`.
    pub fn default_row(&self) -> &RequirementRow {
        self.rows.iter().find(|r| r.r == self.default_r).unwrap_or(&self.rows[0])
    }
}

/// `r` values tried: powers of `√2` strictly inside `(1, N)`, then the default.
pub fn r_grid(total: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 1;
    loop {
        let r = 2f64.powf(j as f64 / 2.0);
        if r >= total as f64 {
            break;
        }
        out.push(r);
        j += 1;
    }
    out.push(default_r(total));
    out
}

fn degree_at(profile: &[f64], eps: f64) -> usize {
    profile.iter().position(|e| *e <= eps + FEASIBILITY_TOL).unwrap_or(profile.len() - 1)
}

fn overall(rows: &[RequirementRow]) -> Verdict {
    if rows.iter().any(|r| r.verdict == Verdict::Incompatible) {
        Verdict::Incompatible
    } else if rows.iter().all(|r| r.verdict == Verdict::Vacuous) {
        Verdict::Vacuous
    } else {
        Verdict::Consistent
    }
}

fn compare(profile: &[f64], r: f64, ledger_degree: usize, circuit_epsilon: f64, delta: f64) -> RequirementRow {
    let effective_epsilon = delta + circuit_epsilon;
    let (exact_degree, verdict) = if effective_epsilon >= 0.5 {
        (None, Verdict::Vacuous)
    } else {
        let e = degree_at(profile, effective_epsilon);
        (Some(e), if e > ledger_degree { Verdict::Incompatible } else { Verdict::Consistent })
    };
    RequirementRow { r, ledger_degree, circuit_epsilon, effective_epsilon, exact_degree, verdict }
}

/// Worst-case requirement for `f` against every depth-`d` circuit shape on
/// `n + a` qubits, with a degree-`ell` post-processing observable.
pub fn postprocessing_requirement(
    f: &BooleanFunction,
    n: usize,
    a: usize,
    d: usize,
    ell: usize,
    delta: f64,
) -> Result<RequirementReport> {
    if f.n != n {
        return Err(Error::QubitMismatch { expected: n, found: f.n });
    }
    let profile = match f.symmetric_profile() {
        Some(by_weight) => error_profile_by_weight(&by_weight)?,
        None => error_profile(f)?,
    };
    requirement_from_errors(&profile, a, d, ell, delta)
}

/// [`postprocessing_requirement`] for a symmetric function on
/// `by_weight.len() − 1` inputs.
pub fn postprocessing_requirement_by_weight(
    by_weight: &[f64],
    a: usize,
    d: usize,
    ell: usize,
    delta: f64,
) -> Result<RequirementReport> {
    requirement_from_errors(&error_profile_by_weight(by_weight)?, a, d, ell, delta)
}

/// `errors[k]` is the best error at degree `k`, for `k = 0..=n`.
fn requirement_from_errors(errors: &[f64], a: usize, d: usize, ell: usize, delta: f64) -> Result<RequirementReport> {
    if ell == 0 {
        return Err(Error::OutOfRange("post-processing degree must be at least 1".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::OutOfRange(format!("delta {delta} is negative")));
    }
    let n = errors.len() - 1;
    let total = n + a;
    let mut rows = Vec::new();
    for r in r_grid(total) {
        let shape = shape_ledger(total, d, ell, r)?;
        rows.push(compare(errors, r, shape.degree, shape.heisenberg_epsilon(0.0), delta));
    }
    let verdict = if delta >= 0.5 { Verdict::Vacuous } else { overall(&rows) };
    Ok(RequirementReport {
        label: format!("depth-{d} shapes on {n}+{a} qubits, seed degree {ell}"),
        n,
        ancillae: a,
        depth: d,
        seed_degree: ell,
        delta,
        default_r: default_r(total),
        rows,
        verdict,
    })
}

pub fn worst_case_requirement(f: &BooleanFunction, n: usize, a: usize, d: usize, delta: f64) -> Result<RequirementReport> {
    let mut rep = postprocessing_requirement(f, n, a, d, 1, delta)?;
    rep.label = format!("depth-{d} shapes on {n}+{a} qubits");
    Ok(rep)
}

/// [`worst_case_requirement`] for a symmetric function.
pub fn worst_case_requirement_by_weight(by_weight: &[f64], a: usize, d: usize, delta: f64) -> Result<RequirementReport> {
    let mut rep = postprocessing_requirement_by_weight(by_weight, a, d, 1, delta)?;
    rep.label = format!("depth-{d} shapes on {}+{a} qubits", rep.n);
    Ok(rep)
}

/// Requirement against one concrete circuit: the output projector is pulled
/// back through the approximated circuit and post-selected on the ancillae.
pub fn circuit_requirement(f: &BooleanFunction, circuit: &QacCircuit, delta: f64, r: Option<f64>) -> Result<(RequirementRow, ApproxCertificate)> {
    if f.n != circuit.n_inputs {
        return Err(Error::QubitMismatch { expected: circuit.n_inputs, found: f.n });
    }
    let n = circuit.n_qubits();
    let a = PauliOperator::projector_one(n, circuit.output)?;
    let a_cert = ApproxCertificate::exact("|1><1| on the output qubit", a);
    let evolved = heisenberg_degree_bound(circuit, &a_cert, r)?;
    let cert = if circuit.n_ancillae > 0 {
        let state = circuit.ancilla.density(circuit.n_ancillae)?;
        let phi = PauliOperator::expand_with_tolerance(&state, 1e-14)?;
        post_select(&evolved, &phi)?
    } else {
        evolved
    };
    let profile = error_profile(f)?;
    let r_used = r.unwrap_or_else(|| default_r(n));
    Ok((compare(&profile, r_used, cert.degree, cert.ledger.epsilon, delta), cert))
}

/// Separation verdicts for the named functions at `n` inputs.
pub fn postprocessing_separations(n: usize, a: usize, d: usize, ell: usize, delta: f64) -> Result<Vec<(String, RequirementReport)>> {
    let mut out = Vec::new();
    let mut names = vec![(String::from("PARITY"), NamedFunction::Parity)];
    if n % 2 == 1 {
        names.push((String::from("MAJ"), NamedFunction::Majority));
    }
    if n >= 3 {
        names.push((String::from("MOD_3"), NamedFunction::Mod(3)));
    }
    for (label, name) in names {
        out.push((label, postprocessing_requirement_by_weight(&named_profile(name, n)?, a, d, ell, delta)?));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgnosticReport {
    pub depth: usize,
    pub n: usize,
    pub r: f64,
    pub ledger_degree: usize,
    /// `log₂` of the runtime: `deg · log₂ n`, the size of the degree-≤deg monomial basis.
    pub exponent: f64,
    /// `n^{1−3^{−d}}`, the leading term of the asymptotic exponent.
    pub asymptotic_exponent: f64,
    pub formula: String,
}

pub fn agnostic_runtime(depth: usize, n: usize) -> Result<AgnosticReport> {
    if n == 0 {
        return Err(Error::OutOfRange("arity must be positive".into()));
    }
    let r = default_r(n);
    let shape = shape_ledger(n, depth, 1, r)?;
    let deg = shape.degree;
    let exponent = deg as f64 * (n as f64).log2();
    let asymptotic_exponent = (n as f64).powf(1.0 - 3f64.powi(-(depth as i32)));
    Ok(AgnosticReport {
        depth,
        n,
        r,
        ledger_degree: deg,
        exponent,
        asymptotic_exponent,
        formula: format!("2^({deg} * log2 {n}) = 2^{exponent:.4}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_tables() {
        let p = BooleanFunction::named(NamedFunction::Parity, 2).unwrap();
        assert_eq!(p.table(), &[0.0, 1.0, 1.0, 0.0]);
        let m = BooleanFunction::named(NamedFunction::Majority, 3).unwrap();
        for x in 0..8u64 {
            assert_eq!(m.value(x), if x.count_ones() >= 2 { 1.0 } else { 0.0 });
        }
        for n in 2..=6 {
            let a = BooleanFunction::named(NamedFunction::Mod(2), n).unwrap();
            let b = BooleanFunction::named(NamedFunction::Parity, n).unwrap();
            assert_eq!(a, b);
        }
        assert!(BooleanFunction::named(NamedFunction::Majority, 4).is_err());
        assert!(BooleanFunction::named(NamedFunction::Mod(5), 4).is_err());
    }

    #[test]
    fn parity_embedding() {
        let p = BooleanFunction::named(NamedFunction::Parity, 1).unwrap();
        let op = embed_as_operator(&p).unwrap();
        let expect = PauliOperator::from_labels(&[("I", 0.5), ("Z", -0.5)]).unwrap();
        assert!(op.sub(&expect).unwrap().pruned(1e-15).is_empty());
    }

    #[test]
    fn parity_three_needs_full_degree() {
        let p = BooleanFunction::named(NamedFunction::Parity, 3).unwrap();
        let q = approx_degree(&p, 1.0 / 3.0).unwrap();
        assert_eq!(q.degree, 3);
        assert!(q.certified);
        let general = best_error_general(&p, 2).unwrap().0;
        assert!((general - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_witness_when_epsilon_is_large() {
        let f = BooleanFunction::new(2, vec![0.0, 0.2, 0.9, 1.0]).unwrap();
        let q = approx_degree(&f, 0.5).unwrap();
        assert_eq!(q.degree, 0);
        assert!(q.witness.unwrap().max_deviation(&f) <= 0.5 + 1e-9);
    }

    #[test]
    fn average_case_parity() {
        let p = BooleanFunction::named(NamedFunction::Parity, 5).unwrap();
        assert!((average_case_bound(&p, 4, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((average_case_bound(&p, 5, 0.1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn majority_lp_agreement_below_bound() {
        let m = BooleanFunction::named(NamedFunction::Majority, 5).unwrap();
        let lp = best_low_degree_agreement(&m, 1).unwrap();
        let rep = average_case_report(&m, 1, 0.0).unwrap();
        assert!(lp <= rep.chain_value + 1e-9);
        assert!(rep.chain_value <= rep.value + 1e-12);
    }

    #[test]
    fn wide_parity_has_full_degree() {
        let profile = named_profile(NamedFunction::Parity, 64).unwrap();
        let q = approx_degree_by_weight(&profile, 0.4).unwrap();
        assert_eq!(q.degree, 64);
        assert!(q.best_error <= 1e-9);
        assert!((q.error_below.unwrap() - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn by_weight_route_matches_table_route() {
        let f = BooleanFunction::named(NamedFunction::Majority, 9).unwrap();
        let by_weight = error_profile_by_weight(&named_profile(NamedFunction::Majority, 9).unwrap()).unwrap();
        for (a, b) in error_profile(&f).unwrap().iter().zip(&by_weight) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn wide_profiles_are_nonincreasing() {
        let errors = error_profile_by_weight(&named_profile(NamedFunction::Mod(3), 64).unwrap()).unwrap();
        assert!(errors.windows(2).all(|w| w[1] <= w[0]));
        assert!(errors[64] <= 1e-9);
    }

    #[test]
    fn wide_tables_are_refused() {
        assert!(matches!(BooleanFunction::from_fn(TABLE_LIMIT + 1, |_| 0.0), Err(Error::OutOfRange(_))));
        assert!(matches!(BooleanFunction::named(NamedFunction::Parity, 60), Err(Error::OutOfRange(_))));
        assert!(approx_degree_by_weight(&[0.0; SYMMETRIC_LIMIT + 2], 0.1).is_err());
    }

    #[test]
    fn majority_five_baseline() {
        let m = BooleanFunction::named(NamedFunction::Majority, 5).unwrap();
        // (w − 1)/3 alternates at w = 0, 2, 3, 5, so degree 1 reaches exactly 1/3
        let want = [0.5, 1.0 / 3.0, 1.0 / 3.0, 0.1875, 0.1875, 0.0];
        for (d, w) in want.iter().enumerate() {
            assert!((best_error(&m, d).unwrap().0 - w).abs() < 1e-9, "d = {d}");
        }
        assert_eq!(approx_degree(&m, 1.0 / 3.0).unwrap().degree, 1);
        assert_eq!(approx_degree(&m, 0.3).unwrap().degree, 3);
    }

    #[test]
    fn agnostic_exponent_grows_with_depth() {
        for n in [4usize, 16, 64, 256] {
            let exps: Vec<f64> = (0..=4).map(|d| agnostic_runtime(d, n).unwrap().exponent).collect();
            assert!(exps.windows(2).all(|w| w[0] <= w[1]), "n = {n}: {exps:?}");
        }
    }

    #[test]
    fn parity_gadget_requirement() {
        let c = crate::circuit::parity_gadget(3, 1.0).unwrap();
        let p = BooleanFunction::named(NamedFunction::Parity, 3).unwrap();
        let (row, cert) = circuit_requirement(&p, &c, 0.0, None).unwrap();
        assert_eq!(row.verdict, Verdict::Consistent);
        let m = cert.materialize_dense().unwrap();
        for x in 0..8usize {
            assert!((m[(x, x)].re - p.table()[x]).abs() <= cert.ledger.epsilon + 1e-9);
        }
    }
}
