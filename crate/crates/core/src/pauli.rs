//! Pauli strings, sparse Pauli expansions and the spectral-error ledger.
//!
//! Qubit `i` of an `n`-qubit string maps to bit `n − 1 − i` of the two masks,
//! so qubit 0 is the most significant bit of a computational-basis index.
//! A string with masks `(x, z)` denotes `i^{|x∧z|} X^x Z^z`, which is
//! Hermitian and squares to the identity.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::limits::check_dense;
use crate::linalg::{self, fwht, Matrix, C64, I, ONE, ZERO};
use crate::{Error, Result};

/// Absolute threshold below which expansion coefficients are dropped.
pub const ZERO_TOL: f64 = 1e-12;

/// Largest qubit count for the diagonal Walsh–Hadamard norm route.
pub const DIAGONAL_ROUTE_LIMIT: usize = 26;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > 64 {
            return Err(Error::OutOfRange(format!("{n} qubits exceeds the 64-qubit mask width")));
        }
        let mask = full_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::OutOfRange(format!("mask has bits beyond qubit count {n}")));
        }
        Ok(PauliString { n: n as u8, x, z })
    }

    pub fn identity(n: usize) -> Self {
        PauliString { n: n as u8, x: 0, z: 0 }
    }

    /// Single-qubit factor `sym` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, sym: char) -> Result<Self> {
        let bit = 1u64 << (n - 1 - qubit);
        let (x, z) = match sym {
            'I' => (0, 0),
            'X' => (bit, 0),
            'Y' => (bit, bit),
            'Z' => (0, bit),
            other => return Err(Error::Invalid(format!("unknown Pauli symbol {other:?}"))),
        };
        PauliString::new(n, x, z)
    }

    /// Parse a string over `I`, `X`, `Y`, `Z`.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let (mut x, mut z) = (0u64, 0u64);
        for (i, ch) in s.chars().enumerate() {
            let bit = 1u64 << (n - 1 - i);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit
                }
                'Z' => z |= bit,
                other => return Err(Error::Invalid(format!("unknown Pauli symbol {other:?}"))),
            }
        }
        PauliString::new(n, x, z)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn symbol(&self, qubit: usize) -> char {
        let bit = 1u64 << (self.n() - 1 - qubit);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    /// `self · other = i^k · result`; returns `(k mod 4, result)`.
    pub fn product(&self, other: &PauliString) -> (u8, PauliString) {
        let x3 = self.x ^ other.x;
        let z3 = self.z ^ other.z;
        let k = (self.x & self.z).count_ones() as i64 + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x3 & z3).count_ones() as i64;
        (k.rem_euclid(4) as u8, PauliString { n: self.n, x: x3, z: z3 })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Nonzero entry in column `col`: `(row, value)`.
    pub fn column_entry(&self, col: u64) -> (u64, C64) {
        (col ^ self.x, phase_entry(self.x, self.z, col))
    }

    /// Split into the leading `n − k` qubits and the trailing `k` qubits.
    pub fn split(&self, k: usize) -> (PauliString, PauliString) {
        let low = full_mask(k);
        let head = PauliString { n: (self.n() - k) as u8, x: self.x >> k, z: self.z >> k };
        let tail = PauliString { n: k as u8, x: self.x & low, z: self.z & low };
        (head, tail)
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let k = other.n();
        PauliString {
            n: (self.n() + k) as u8,
            x: (self.x << k) | other.x,
            z: (self.z << k) | other.z,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.symbol(q))?;
        }
        Ok(())
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

#[inline]
fn phase_entry(x: u64, z: u64, col: u64) -> C64 {
    let base = i_pow((x & z).count_ones());
    if (z & col).count_ones() % 2 == 1 {
        -base
    } else {
        base
    }
}

/// Sparse Pauli expansion `A = Σ_σ Â(σ) σ` on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    n: usize,
    terms: BTreeMap<PauliString, C64>,
}

impl PauliOperator {
    pub fn zero(n: usize) -> Self {
        PauliOperator { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, ONE)
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        let mut op = Self::zero(n);
        op.add_term(PauliString::identity(n), c);
        op
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (PauliString, C64)>) -> Result<Self> {
        let mut op = Self::zero(n);
        for (s, c) in terms {
            if s.n() != n {
                return Err(Error::QubitMismatch { expected: n, found: s.n() });
            }
            op.add_term(s, c);
        }
        Ok(op)
    }

    /// Convenience for tests and examples: `[("ZI", 0.5), …]` with real coefficients.
    pub fn from_labels(labels: &[(&str, f64)]) -> Result<Self> {
        let n = labels.first().map(|(s, _)| s.len()).unwrap_or(0);
        let terms = labels
            .iter()
            .map(|(s, c)| PauliString::parse(s).map(|p| (p, C64::new(*c, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, terms)
    }

    /// `|1⟩⟨1|` on one qubit: `(I − Z_q)/2`.
    pub fn projector_one(n: usize, qubit: usize) -> Result<Self> {
        if qubit >= n {
            return Err(Error::OutOfRange(format!("qubit {qubit} of {n}")));
        }
        Self::from_terms(
            n,
            [
                (PauliString::identity(n), C64::new(0.5, 0.0)),
                (PauliString::single(n, qubit, 'Z')?, C64::new(-0.5, 0.0)),
            ],
        )
    }

    /// Accumulate `c·σ`, dropping the entry if it cancels exactly.
    pub fn add_term(&mut self, s: PauliString, c: C64) {
        if c == ZERO {
            return;
        }
        let entry = self.terms.entry(s).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(&s);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> C64 {
        self.terms.get(s).copied().unwrap_or(ZERO)
    }

    /// Drop coefficients with modulus at or below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        PauliOperator {
            n: self.n,
            terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(s, c)| (*s, *c)).collect(),
        }
    }

    /// Pauli coefficients of a dense `2ⁿ×2ⁿ` matrix, `Â(σ) = Tr[σ†A]/2ⁿ`.
    pub fn expand_from_dense(m: &Matrix) -> Result<Self> {
        Self::expand_with_tolerance(m, ZERO_TOL)
    }

    pub fn expand_with_tolerance(m: &Matrix, tol: f64) -> Result<Self> {
        let mut op = None;
        for_each_coefficient(m, |s, c| {
            if c.norm() > tol {
                op.get_or_insert_with(|| PauliOperator::zero(s.n())).terms.insert(s, c);
            }
        })?;
        Ok(op.unwrap_or_else(|| PauliOperator::zero(linalg::qubits_for_dim(m.rows()).unwrap_or(0))))
    }

    /// Exact Kronecker reconstruction.
    pub fn to_dense(&self) -> Result<Matrix> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut out = Matrix::zeros(dim, dim);
        let mut group: Vec<(u64, C64)> = Vec::new();
        let mut current_x = None;
        let flush = |x: u64, group: &mut Vec<(u64, C64)>, out: &mut Matrix| {
            if group.is_empty() {
                return;
            }
            if group.len() > self.n + 1 {
                let mut v = vec![ZERO; dim];
                for &(z, c) in group.iter() {
                    v[z as usize] += c * i_pow((x & z).count_ones());
                }
                fwht(&mut v);
                for (k, val) in v.into_iter().enumerate() {
                    out[((k as u64 ^ x) as usize, k)] += val;
                }
            } else {
                for &(z, c) in group.iter() {
                    for k in 0..dim as u64 {
                        out[((k ^ x) as usize, k as usize)] += c * phase_entry(x, z, k);
                    }
                }
            }
            group.clear();
        };
        for (s, c) in &self.terms {
            if current_x != Some(s.x) {
                if let Some(x) = current_x {
                    flush(x, &mut group, &mut out);
                }
                current_x = Some(s.x);
            }
            group.push((s.z, *c));
        }
        if let Some(x) = current_x {
            flush(x, &mut group, &mut out);
        }
        Ok(out)
    }

    /// `max |σ|` over stored strings; 0 for multiples of the identity.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|s| s.weight()).max().unwrap_or(0)
    }

    /// `Σ_{|σ|=k} |Â(σ)|²`.
    pub fn weight_at_level(&self, k: usize) -> Result<f64> {
        if k > self.n {
            return Err(Error::OutOfRange(format!("level {k} exceeds {} qubits", self.n)));
        }
        Ok(self.terms.iter().filter(|(s, _)| s.weight() == k).map(|(_, c)| c.norm_sqr()).sum())
    }

    /// Level weights for `k = 0..=n`.
    pub fn level_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n + 1];
        for (s, c) in &self.terms {
            w[s.weight()] += c.norm_sqr();
        }
        w
    }

    /// Normalized Frobenius norm squared, `Tr[A†A]/2ⁿ`.
    pub fn normalized_frobenius_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|s| s.is_diagonal())
    }

    /// Diagonal of a `{I, Z}`-only operator, computed by one Walsh–Hadamard
    /// transform of the coefficients.
    pub fn diagonal_values(&self) -> Result<Vec<C64>> {
        if !self.is_diagonal() {
            return Err(Error::Invalid("operator has X or Y components".into()));
        }
        if self.n > DIAGONAL_ROUTE_LIMIT {
            return Err(Error::NoRoute(format!("diagonal of {} qubits", self.n)));
        }
        let mut v = vec![ZERO; 1usize << self.n];
        for (s, c) in &self.terms {
            v[s.z as usize] += *c;
        }
        fwht(&mut v);
        Ok(v)
    }

    /// Largest singular value. Diagonal operators use the exact
    /// Walsh–Hadamard route; everything else goes dense.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.is_diagonal() && self.n <= DIAGONAL_ROUTE_LIMIT {
            return Ok(self.diagonal_values()?.iter().fold(0.0, |m, z| m.max(z.norm())));
        }
        if self.n > crate::dense_limit() {
            return Err(Error::NoRoute(format!(
                "spectral norm of a non-diagonal {}-qubit operator",
                self.n
            )));
        }
        linalg::spectral_norm(&self.to_dense()?)
    }

    /// Terms built only from `I` and `Z`.
    pub fn diagonal_part(&self) -> Self {
        PauliOperator {
            n: self.n,
            terms: self.terms.iter().filter(|(s, _)| s.is_diagonal()).map(|(s, c)| (*s, *c)).collect(),
        }
    }

    /// `Tr_{last k}[(1 ⊗ φ) A]` for a density operator `φ` on the last `k` qubits.
    pub fn trace_against_state(&self, state: &PauliOperator) -> Result<Self> {
        let k = state.n;
        if k > self.n {
            return Err(Error::QubitMismatch { expected: self.n, found: k });
        }
        validate_density(state)?;
        let scale = (1u64 << k) as f64;
        let mut out = PauliOperator::zero(self.n - k);
        for (s, c) in &self.terms {
            let (head, tail) = s.split(k);
            let t = state.coefficient(&tail);
            if t != ZERO {
                out.add_term(head, c * t * scale);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = PauliOperator::zero(self.n);
        for (p, c) in &self.terms {
            out.add_term(*p, c * s);
        }
        out
    }

    pub fn add(&self, other: &PauliOperator) -> Result<Self> {
        self.same_size(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PauliOperator) -> Result<Self> {
        self.same_size(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, -c);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &PauliOperator) -> Result<Self> {
        self.same_size(other)?;
        let mut out = PauliOperator::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (k, s) = a.product(b);
                out.add_term(s, ca * cb * i_pow(k as u32));
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        PauliOperator { n: self.n, terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect() }
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &PauliOperator) -> Self {
        let mut out = PauliOperator::zero(self.n + other.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.tensor(b), ca * cb);
            }
        }
        out
    }

    fn same_size(&self, other: &PauliOperator) -> Result<()> {
        if self.n != other.n {
            Err(Error::QubitMismatch { expected: self.n, found: other.n })
        } else {
            Ok(())
        }
    }
}

/// Visit every Pauli coefficient of a dense matrix, including zeros.
pub fn for_each_coefficient(m: &Matrix, mut f: impl FnMut(PauliString, C64)) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = linalg::qubits_for_dim(m.rows())?;
    check_dense(n)?;
    let dim = 1usize << n;
    let inv = 1.0 / dim as f64;
    let mut v = vec![ZERO; dim];
    for x in 0..dim {
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = m[(k ^ x, k)];
        }
        fwht(&mut v);
        for (z, val) in v.iter().enumerate() {
            let phase = i_pow(4 - ((x & z) as u64).count_ones() % 4);
            f(PauliString { n: n as u8, x: x as u64, z: z as u64 }, phase * val * inv);
        }
    }
    Ok(())
}

/// Pauli degree of a dense matrix: largest weight whose coefficient exceeds `tol`.
pub fn dense_pauli_degree(m: &Matrix, tol: f64) -> Result<usize> {
    let mut deg = 0;
    for_each_coefficient(m, |s, c| {
        if c.norm() > tol {
            deg = deg.max(s.weight());
        }
    })?;
    Ok(deg)
}

/// Check Hermitian, unit trace and positive semidefinite.
pub fn validate_density(state: &PauliOperator) -> Result<()> {
    if !state.is_hermitian(1e-10) {
        return Err(Error::NotDensity("coefficients are not real".into()));
    }
    let trace = state.coefficient(&PauliString::identity(state.n)).re * (1u64 << state.n) as f64;
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::NotDensity(format!("trace {trace}")));
    }
    let min_eig = if state.is_diagonal() && state.n <= DIAGONAL_ROUTE_LIMIT {
        state.diagonal_values()?.iter().fold(f64::INFINITY, |m, z| m.min(z.re))
    } else {
        check_dense(state.n)?;
        linalg::hermitian_eigenvalues(&state.to_dense()?)?.first().copied().unwrap_or(0.0)
    };
    if min_eig < -1e-9 {
        return Err(Error::NotDensity(format!("negative eigenvalue {min_eig}")));
    }
    Ok(())
}

/// Spectral-error record. `epsilon` bounds `‖A − Ã‖`; `provenance` lists the
/// composition steps that produced it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ErrorLedger {
    pub epsilon: f64,
    pub provenance: Vec<String>,
}

impl ErrorLedger {
    pub fn exact() -> Self {
        ErrorLedger { epsilon: 0.0, provenance: Vec::new() }
    }

    pub fn new(epsilon: f64, label: impl Into<String>) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::NegativeError(epsilon));
        }
        Ok(ErrorLedger { epsilon, provenance: vec![label.into()] })
    }

    /// `(1 + ε₀)(1 + ε₁) − 1`.
    pub fn compose(&self, other: &ErrorLedger) -> ErrorLedger {
        let mut provenance = self.provenance.clone();
        provenance.extend(other.provenance.iter().cloned());
        ErrorLedger { epsilon: compose_epsilon(self.epsilon, other.epsilon), provenance }
    }

    pub fn with_step(mut self, label: impl ToString) -> Self {
        self.provenance.push(label.to_string());
        self
    }
}

/// Error of a product of two norm-≤1 factors: `ε₀ + ε₁ + ε₀ε₁`.
pub fn compose_epsilon(e0: f64, e1: f64) -> f64 {
    e0 + e1 + e0 * e1
}

/// Checked form of [`ErrorLedger::compose`].
pub fn compose_error(a: &ErrorLedger, b: &ErrorLedger) -> Result<ErrorLedger> {
    for e in [a.epsilon, b.epsilon] {
        if !(e >= 0.0) {
            return Err(Error::NegativeError(e));
        }
    }
    Ok(a.compose(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cz2() -> Matrix {
        Matrix::from_diagonal(&[ONE, ONE, ONE, -ONE])
    }

    #[test]
    fn product_phases_match_matrices() {
        let labels = ["X", "Y", "Z", "I"];
        for a in labels {
            for b in labels {
                let pa = PauliOperator::from_labels(&[(a, 1.0)]).unwrap();
                let pb = PauliOperator::from_labels(&[(b, 1.0)]).unwrap();
                let prod = pa.mul(&pb).unwrap().to_dense().unwrap();
                let dense = pa.to_dense().unwrap().mul(&pb.to_dense().unwrap());
                assert!(prod.max_abs_diff(&dense) < 1e-15, "{a}{b}");
            }
        }
    }

    #[test]
    fn cz_expansion() {
        let op = PauliOperator::expand_from_dense(&cz2()).unwrap();
        let want = PauliOperator::from_labels(&[("II", 0.5), ("ZI", 0.5), ("IZ", 0.5), ("ZZ", -0.5)]).unwrap();
        assert_eq!(op.len(), 4);
        assert!(op.sub(&want).unwrap().pruned(1e-15).is_empty());
        assert_eq!(op.degree(), 2);
        assert!((op.spectral_norm().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(op.diagonal_part(), op);
    }

    #[test]
    fn string_symbols_round_trip() {
        let s = PauliString::parse("IXYZ").unwrap();
        assert_eq!(s.to_string(), "IXYZ");
        assert_eq!(s.weight(), 3);
        let (head, tail) = s.split(1);
        assert_eq!((head.to_string().as_str(), tail.to_string().as_str()), ("IXY", "Z"));
        assert_eq!(head.tensor(&tail), s);
    }

    #[test]
    fn y_is_hermitian_in_this_convention() {
        let y = PauliOperator::from_labels(&[("Y", 1.0)]).unwrap().to_dense().unwrap();
        assert!(y.is_hermitian(0.0));
        assert_eq!(y[(0, 1)], -I);
    }

    #[test]
    fn ledger_composition() {
        let a = ErrorLedger::new(0.1, "a").unwrap();
        let b = ErrorLedger::new(0.2, "b").unwrap();
        assert!((compose_error(&a, &b).unwrap().epsilon - 0.32).abs() < 1e-15);
        assert_eq!(compose_error(&ErrorLedger::exact(), &ErrorLedger::exact()).unwrap().epsilon, 0.0);
        assert!(ErrorLedger::new(-0.1, "neg").is_err());
    }

    #[test]
    fn trace_cz_against_zero() {
        let cz = PauliOperator::expand_from_dense(&cz2()).unwrap();
        let zero = PauliOperator::from_labels(&[("I", 0.5), ("Z", 0.5)]).unwrap();
        let reduced = cz.trace_against_state(&zero).unwrap();
        assert!(reduced.sub(&PauliOperator::identity(1)).unwrap().pruned(1e-15).is_empty());
        let mixed = PauliOperator::from_labels(&[("I", 0.5)]).unwrap();
        let zz = PauliOperator::from_labels(&[("ZZ", 1.0)]).unwrap();
        assert!(zz.trace_against_state(&mixed).unwrap().is_empty());
        let not_psd = PauliOperator::from_labels(&[("I", 0.5), ("Z", 0.9)]).unwrap();
        assert!(zz.trace_against_state(&not_psd).is_err());
    }
}
