//! Layered QAC⁰ circuits: `U = L_d M_d ⋯ M_1 L_0`, where each `L` holds
//! single-qubit unitaries on disjoint qubits and each `M` holds multi-qubit CZ
//! gates on disjoint supports.
//!
//! Inputs occupy qubits `0..n_inputs`; ancillae follow. Qubit 0 is the most
//! significant bit of a basis index, matching [`crate::pauli`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt::Write as _;

#[allow(unused_imports)] // inherent once a dependency enables num-traits/std
use num_traits::Float;

use crate::limits::check_dense;
use crate::linalg::{self, Matrix, C64, ONE, ZERO};
use crate::{Error, PauliOperator, Result};

/// Largest register simulated as a state vector.
pub const STATEVECTOR_LIMIT: usize = 24;

/// Unitarity tolerance for 2×2 gate matrices.
pub const UNITARY_TOL: f64 = 1e-10;

/// A 2×2 unitary `[[a, b], [c, d]]` acting on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitGate {
    pub target: usize,
    pub matrix: [C64; 4],
}

impl SingleQubitGate {
    pub fn new(target: usize, matrix: [C64; 4]) -> Self {
        SingleQubitGate { target, matrix }
    }

    pub fn h(target: usize) -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(target, [s, s, s, -s])
    }

    pub fn x(target: usize) -> Self {
        Self::new(target, [ZERO, ONE, ONE, ZERO])
    }

    pub fn z(target: usize) -> Self {
        Self::new(target, [ONE, ZERO, ZERO, -ONE])
    }

    pub fn t(target: usize) -> Self {
        Self::new(target, [ONE, ZERO, ZERO, C64::from_polar(1.0, core::f64::consts::FRAC_PI_4)])
    }

    /// `exp(−iθY/2)`.
    pub fn ry(target: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new(target, [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)])
    }

    /// `exp(−iθZ/2)`.
    pub fn rz(target: usize, theta: f64) -> Self {
        Self::new(
            target,
            [C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0)],
        )
    }

    /// Shortcut lookup used by the text format.
    pub fn named(name: &str, target: usize) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "H" => Ok(Self::h(target)),
            "X" => Ok(Self::x(target)),
            "Z" => Ok(Self::z(target)),
            "T" => Ok(Self::t(target)),
            "I" => Ok(Self::new(target, [ONE, ZERO, ZERO, ONE])),
            other => Err(Error::Invalid(format!("unknown gate name {other:?}"))),
        }
    }

    /// `self` applied after `earlier`.
    pub fn after(&self, earlier: &SingleQubitGate) -> SingleQubitGate {
        let [a, b, c, d] = self.matrix;
        let [e, f, g, h] = earlier.matrix;
        Self::new(self.target, [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    pub fn adjoint(&self) -> SingleQubitGate {
        let [a, b, c, d] = self.matrix;
        Self::new(self.target, [a.conj(), c.conj(), b.conj(), d.conj()])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> SingleQubitGate {
        Self::new(self.target, self.matrix.map(|z| z.conj()))
    }

    /// `max |G†G − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().after(self).matrix;
        let id = [ONE, ZERO, ZERO, ONE];
        p.iter().zip(id.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(2, 2, self.matrix.to_vec()).expect("2x2")
    }
}

/// Multi-qubit CZ: `1 − 2|1…1⟩⟨1…1|` on the listed qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CzGate {
    pub qubits: Vec<usize>,
}

impl CzGate {
    pub fn new(qubits: impl Into<Vec<usize>>) -> Self {
        CzGate { qubits: qubits.into() }
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    /// Bit mask of the support in an `n`-qubit register.
    pub fn mask(&self, n: usize) -> u64 {
        self.qubits.iter().fold(0, |m, &q| m | (1u64 << (n - 1 - q)))
    }
}

/// Initial state of the ancilla register.
#[derive(Clone, Debug, PartialEq)]
pub enum AncillaState {
    Zero,
    Pure(Vec<C64>),
    Mixed(Matrix),
}

impl AncillaState {
    /// Basis state from a bit string such as `"010"`.
    pub fn basis(bits: &str) -> Result<Self> {
        if bits.chars().all(|c| c == '0') {
            return Ok(AncillaState::Zero);
        }
        let mut index = 0usize;
        for c in bits.chars() {
            index = index * 2
                + match c {
                    '0' => 0,
                    '1' => 1,
                    other => return Err(Error::Invalid(format!("bad ancilla bit {other:?}"))),
                };
        }
        let mut v = vec![ZERO; 1usize << bits.len()];
        v[index] = ONE;
        Ok(AncillaState::Pure(v))
    }

    /// Pure components `(weight, vector)` of the state on `a` qubits.
    pub fn ensemble(&self, a: usize) -> Result<Vec<(f64, Vec<C64>)>> {
        match self {
            AncillaState::Zero => {
                let mut v = vec![ZERO; 1usize << a];
                v[0] = ONE;
                Ok(vec![(1.0, v)])
            }
            AncillaState::Pure(v) => Ok(vec![(1.0, v.clone())]),
            AncillaState::Mixed(rho) => {
                let (values, vecs) = linalg::hermitian_eigen(rho)?;
                let dim = rho.rows();
                Ok(values
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-14)
                    .map(|(c, &w)| (w, (0..dim).map(|r| vecs[(r, c)]).collect()))
                    .collect())
            }
        }
    }

    /// Density matrix on `a` qubits.
    pub fn density(&self, a: usize) -> Result<Matrix> {
        match self {
            AncillaState::Mixed(rho) => Ok(rho.clone()),
            _ => {
                let (_, v) = self.ensemble(a)?.remove(0);
                Ok(Matrix::outer(&v, &v))
            }
        }
    }

    /// `self ⊗ other`, where `self` covers `a` qubits and `other` covers `b`.
    pub fn tensor(&self, a: usize, other: &AncillaState, b: usize) -> Result<AncillaState> {
        Ok(match (self, other) {
            (AncillaState::Zero, AncillaState::Zero) => AncillaState::Zero,
            (AncillaState::Mixed(_), _) | (_, AncillaState::Mixed(_)) => {
                AncillaState::Mixed(self.density(a)?.kron(&other.density(b)?))
            }
            _ => {
                let (_, u) = self.ensemble(a)?.remove(0);
                let (_, v) = other.ensemble(b)?.remove(0);
                let mut out = Vec::with_capacity(u.len() * v.len());
                for x in &u {
                    for y in &v {
                        out.push(x * y);
                    }
                }
                AncillaState::Pure(out)
            }
        })
    }

    fn validate(&self, a: usize) -> Result<()> {
        let dim = 1usize << a;
        match self {
            AncillaState::Zero => Ok(()),
            AncillaState::Pure(v) => {
                if v.len() != dim {
                    return Err(Error::InvalidCircuit(format!(
                        "ancilla vector has {} entries, expected {dim}",
                        v.len()
                    )));
                }
                let nrm = linalg::norm(v);
                if (nrm - 1.0).abs() > 1e-9 {
                    return Err(Error::NotDensity(format!("ancilla vector norm {nrm}")));
                }
                Ok(())
            }
            AncillaState::Mixed(rho) => {
                if rho.rows() != dim || !rho.is_square() {
                    return Err(Error::InvalidCircuit(format!(
                        "ancilla density is {}x{}, expected {dim}x{dim}",
                        rho.rows(),
                        rho.cols()
                    )));
                }
                if !rho.is_hermitian(1e-10) {
                    return Err(Error::NotDensity("ancilla density is not Hermitian".into()));
                }
                let tr = rho.trace().re;
                if (tr - 1.0).abs() > 1e-9 {
                    return Err(Error::NotDensity(format!("ancilla trace {tr}")));
                }
                let min = linalg::hermitian_eigenvalues(rho)?.first().copied().unwrap_or(0.0);
                if min < -1e-9 {
                    return Err(Error::NotDensity(format!("ancilla eigenvalue {min}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QacCircuit {
    pub n_inputs: usize,
    pub n_ancillae: usize,
    pub ancilla: AncillaState,
    /// `L_0 … L_d`; always one longer than `cz_layers`.
    pub local_layers: Vec<Vec<SingleQubitGate>>,
    /// `M_1 … M_d`.
    pub cz_layers: Vec<Vec<CzGate>>,
    /// Qubit measured for the classical output.
    pub output: usize,
}

impl QacCircuit {
    pub fn new(n_inputs: usize, n_ancillae: usize) -> Self {
        QacCircuit {
            n_inputs,
            n_ancillae,
            ancilla: AncillaState::Zero,
            local_layers: vec![Vec::new()],
            cz_layers: Vec::new(),
            output: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_inputs + self.n_ancillae
    }

    pub fn depth(&self) -> usize {
        self.cz_layers.len()
    }

    pub fn with_ancilla(mut self, state: AncillaState) -> Self {
        self.ancilla = state;
        self
    }

    /// Add a gate to the last local layer. A gate already sitting on the same
    /// qubit is multiplied in, the new one acting second.
    pub fn push_local_gate(&mut self, gate: SingleQubitGate) {
        let layer = self.local_layers.len() - 1;
        self.push_local_gate_at(layer, gate);
    }

    pub fn push_local_gate_at(&mut self, layer: usize, gate: SingleQubitGate) {
        while self.local_layers.len() <= layer {
            self.local_layers.push(Vec::new());
            if self.local_layers.len() > self.cz_layers.len() + 1 {
                self.cz_layers.push(Vec::new());
            }
        }
        let slot = &mut self.local_layers[layer];
        match slot.iter_mut().find(|g| g.target == gate.target) {
            Some(existing) => *existing = gate.after(existing),
            None => slot.push(gate),
        }
    }

    /// Append `M_{d+1}` together with an empty `L_{d+1}`.
    pub fn push_cz_layer(&mut self, gates: Vec<CzGate>) -> Result<()> {
        check_disjoint(gates.iter().flat_map(|g| g.qubits.iter().copied()), self.n_qubits())?;
        self.cz_layers.push(gates);
        self.local_layers.push(Vec::new());
        Ok(())
    }

    /// Add a CZ gate to the existing layer `M_{layer+1}`.
    pub fn push_cz_gate_at(&mut self, layer: usize, gate: CzGate) -> Result<()> {
        while self.cz_layers.len() <= layer {
            self.cz_layers.push(Vec::new());
            self.local_layers.push(Vec::new());
        }
        let slot = &mut self.cz_layers[layer];
        check_disjoint(
            slot.iter().flat_map(|g| g.qubits.iter().copied()).chain(gate.qubits.iter().copied()),
            self.n_inputs + self.n_ancillae,
        )?;
        slot.push(gate);
        Ok(())
    }

    /// CNOT (or a generalized Toffoli when several controls are given) as a
    /// new CZ layer conjugated by Hadamards on the target.
    pub fn push_controlled_x(&mut self, controls: &[usize], target: usize) -> Result<()> {
        self.push_local_gate(SingleQubitGate::h(target));
        let mut qubits = controls.to_vec();
        qubits.push(target);
        self.push_cz_layer(vec![CzGate::new(qubits)])?;
        self.push_local_gate(SingleQubitGate::h(target));
        Ok(())
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if n == 0 {
            return Err(Error::InvalidCircuit("circuit has no qubits".into()));
        }
        if n > 64 {
            return Err(Error::InvalidCircuit(format!("{n} qubits exceeds 64")));
        }
        if self.local_layers.len() != self.cz_layers.len() + 1 {
            return Err(Error::InvalidCircuit(format!(
                "{} local layers for {} CZ layers",
                self.local_layers.len(),
                self.cz_layers.len()
            )));
        }
        if self.output >= n {
            return Err(Error::InvalidCircuit(format!("output qubit {} out of range", self.output)));
        }
        for layer in &self.local_layers {
            check_disjoint(layer.iter().map(|g| g.target), n)?;
            for g in layer {
                let dev = g.unitarity_deviation();
                if !(dev <= UNITARY_TOL) {
                    return Err(Error::NonUnitary { qubit: g.target, deviation: dev });
                }
            }
        }
        for layer in &self.cz_layers {
            check_disjoint(layer.iter().flat_map(|g| g.qubits.iter().copied()), n)?;
            if layer.iter().any(|g| g.qubits.is_empty()) {
                return Err(Error::InvalidCircuit("CZ gate with empty support".into()));
            }
        }
        self.ancilla.validate(self.n_ancillae)
    }

    /// Apply the circuit to a full-register state vector.
    pub fn apply(&self, state: &mut [C64]) -> Result<()> {
        let n = self.n_qubits();
        if state.len() != 1usize << n {
            return Err(Error::QubitMismatch { expected: n, found: state.len().trailing_zeros() as usize });
        }
        for (i, layer) in self.local_layers.iter().enumerate() {
            if i > 0 {
                for g in &self.cz_layers[i - 1] {
                    apply_cz(state, g.mask(n));
                }
            }
            for g in layer {
                apply_single(state, n, g);
            }
        }
        Ok(())
    }

    /// `U(|ψ⟩)` for a full-register input vector.
    pub fn simulate(&self, input: &[C64]) -> Result<Vec<C64>> {
        self.check_statevector()?;
        let mut v = input.to_vec();
        self.apply(&mut v)?;
        Ok(v)
    }

    /// `U(|x⟩ ⊗ |A⟩)` for a pure ancilla state.
    pub fn simulate_basis(&self, x: u64) -> Result<Vec<C64>> {
        let anc = match &self.ancilla {
            AncillaState::Mixed(_) => {
                return Err(Error::NoRoute("mixed ancilla needs simulate_ensemble".into()))
            }
            other => other.ensemble(self.n_ancillae)?.remove(0).1,
        };
        self.simulate(&self.prepare(x, &anc)?)
    }

    /// Final pure components `(weight, U(|x⟩ ⊗ |a_i⟩))` of the ancilla ensemble.
    pub fn simulate_ensemble(&self, x: u64) -> Result<Vec<(f64, Vec<C64>)>> {
        self.check_statevector()?;
        self.ancilla
            .ensemble(self.n_ancillae)?
            .into_iter()
            .map(|(w, anc)| {
                let mut v = self.prepare(x, &anc)?;
                self.apply(&mut v)?;
                Ok((w, v))
            })
            .collect()
    }

    /// Probability of reading 1 on the output qubit for input string `x`.
    pub fn output_probability(&self, x: u64) -> Result<f64> {
        let n = self.n_qubits();
        let bit = 1usize << (n - 1 - self.output);
        let mut p = 0.0;
        for (w, v) in self.simulate_ensemble(x)? {
            p += w * v.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum::<f64>();
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// `p(x)` for every input string, index `x` with qubit 0 as the top bit.
    pub fn output_table(&self) -> Result<Vec<f64>> {
        (0..1u64 << self.n_inputs).map(|x| self.output_probability(x)).collect()
    }

    /// Dense `2^N × 2^N` unitary.
    pub fn unitary(&self) -> Result<Matrix> {
        let n = self.n_qubits();
        check_dense(n)?;
        let dim = 1usize << n;
        let mut u = Matrix::zeros(dim, dim);
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[j] = ONE;
            self.apply(&mut col)?;
            for (i, z) in col.iter().enumerate() {
                u[(i, j)] = *z;
            }
        }
        Ok(u)
    }

    /// `U†AU` as a dense matrix.
    pub fn heisenberg_dense(&self, a: &Matrix) -> Result<Matrix> {
        let n = self.n_qubits();
        check_dense(n)?;
        if a.rows() != 1usize << n || !a.is_square() {
            return Err(Error::QubitMismatch { expected: n, found: linalg::qubits_for_dim(a.rows())? });
        }
        let mut x = a.clone();
        for i in (0..self.local_layers.len()).rev() {
            for g in &self.local_layers[i] {
                conjugate_single(&mut x, n, g);
            }
            if i > 0 {
                let diag = layer_diagonal(n, &self.cz_layers[i - 1], |_, _, all| if all { -1.0 } else { 1.0 });
                conjugate_diagonal(&mut x, &diag);
            }
        }
        Ok(x)
    }

    /// Heisenberg-evolved observable `U†AU`, expanded back into Pauli form.
    pub fn heisenberg(&self, a: &PauliOperator) -> Result<PauliOperator> {
        if a.n() != self.n_qubits() {
            return Err(Error::QubitMismatch { expected: self.n_qubits(), found: a.n() });
        }
        PauliOperator::expand_from_dense(&self.heisenberg_dense(&a.to_dense()?)?)
    }

    /// Copy of the circuit with every gate entrywise conjugated, i.e. `Ū`.
    pub fn conjugated(&self) -> QacCircuit {
        let mut out = self.clone();
        for layer in out.local_layers.iter_mut() {
            for g in layer.iter_mut() {
                *g = g.conj();
            }
        }
        out
    }

    /// Choi matrix of the channel `ρ ↦ Tr_{[k]^c}[U(ρ ⊗ ψ)U†]`.
    pub fn choi(&self, k: usize) -> Result<ChoiMatrix> {
        let n = self.n_qubits();
        if k == 0 || k > self.n_inputs {
            return Err(Error::OutOfRange(format!("{k} outputs for {} inputs", self.n_inputs)));
        }
        check_dense(k + self.n_inputs)?;
        self.check_statevector()?;
        let n_in = self.n_inputs;
        let dim_o = 1usize << k;
        let dim_r = 1usize << (n - k);
        let dim_i = 1usize << n_in;
        let mut phi = Matrix::zeros(dim_o * dim_i, dim_o * dim_i);
        for (w, anc) in self.ancilla.ensemble(self.n_ancillae)? {
            let mut outs = Vec::with_capacity(dim_i);
            for i in 0..dim_i as u64 {
                let mut v = self.prepare(i, &anc)?;
                self.apply(&mut v)?;
                outs.push(v);
            }
            for i in 0..dim_i {
                for j in 0..dim_i {
                    for o in 0..dim_o {
                        for o2 in 0..dim_o {
                            let mut s = ZERO;
                            for r in 0..dim_r {
                                s += outs[i][o * dim_r + r] * outs[j][o2 * dim_r + r].conj();
                            }
                            phi[(o * dim_i + i, o2 * dim_i + j)] += s * w;
                        }
                    }
                }
            }
        }
        Ok(ChoiMatrix { k, n_inputs: n_in, matrix: phi })
    }

    /// Largest entrywise gap between [`QacCircuit::choi`] and the route
    /// through the ancilla-free Choi matrix `Φ_U`, contracted with the
    /// conjugated ancilla state.
    pub fn choi_identity_residual(&self, k: usize) -> Result<f64> {
        let direct = self.choi(k)?;
        let n = self.n_qubits();
        check_dense(k + n)?;
        let full = choi_from_unitary(&self.unitary()?, k)?;
        let rho = self.ancilla.density(self.n_ancillae)?;
        let dim_a = 1usize << self.n_ancillae;
        let dim_i = 1usize << self.n_inputs;
        let dim_o = 1usize << k;
        let mut worst: f64 = 0.0;
        for row in 0..dim_o * dim_i {
            for col in 0..dim_o * dim_i {
                let mut s = ZERO;
                for a in 0..dim_a {
                    for b in 0..dim_a {
                        s += rho[(a, b)] * full[(row * dim_a + a, col * dim_a + b)];
                    }
                }
                worst = worst.max((s - direct.matrix[(row, col)]).norm());
            }
        }
        Ok(worst)
    }

    fn prepare(&self, x: u64, anc: &[C64]) -> Result<Vec<C64>> {
        if x >> self.n_inputs != 0 {
            return Err(Error::OutOfRange(format!("input {x} has more than {} bits", self.n_inputs)));
        }
        let dim_a = 1usize << self.n_ancillae;
        if anc.len() != dim_a {
            return Err(Error::QubitMismatch {
                expected: self.n_ancillae,
                found: anc.len().trailing_zeros() as usize,
            });
        }
        let mut v = vec![ZERO; dim_a << self.n_inputs];
        let base = (x as usize) * dim_a;
        v[base..base + dim_a].copy_from_slice(anc);
        Ok(v)
    }

    fn check_statevector(&self) -> Result<()> {
        let n = self.n_qubits();
        if n > STATEVECTOR_LIMIT {
            Err(Error::DenseLimit { n, limit: STATEVECTOR_LIMIT })
        } else {
            Ok(())
        }
    }

    /// Copy `other` into this circuit, with `other`'s qubit `q` landing on
    /// `map[q]` and its layer `i` landing on layer `offset + i`.
    pub fn embed(&mut self, other: &QacCircuit, map: &[usize], offset: usize) -> Result<()> {
        if map.len() != other.n_qubits() {
            return Err(Error::QubitMismatch { expected: other.n_qubits(), found: map.len() });
        }
        for (i, layer) in other.local_layers.iter().enumerate() {
            for g in layer {
                self.push_local_gate_at(offset + i, SingleQubitGate::new(map[g.target], g.matrix));
            }
        }
        for (i, layer) in other.cz_layers.iter().enumerate() {
            for g in layer {
                let qubits: Vec<usize> = g.qubits.iter().map(|&q| map[q]).collect();
                self.push_cz_gate_at(offset + i, CzGate::new(qubits))?;
            }
        }
        Ok(())
    }

    /// Line-oriented text form; see [`parse_circuit`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qubits {} {}", self.n_inputs, self.n_ancillae);
        match &self.ancilla {
            AncillaState::Zero => {
                let _ = writeln!(s, "anc |{}>", "0".repeat(self.n_ancillae));
            }
            AncillaState::Pure(v) => {
                let _ = writeln!(s, "anc pure {}", join_complex(v));
            }
            AncillaState::Mixed(m) => {
                let _ = writeln!(s, "anc density {}", join_complex(m.data()));
            }
        }
        if self.output != 0 {
            let _ = writeln!(s, "output {}", self.output);
        }
        for (i, layer) in self.local_layers.iter().enumerate() {
            if i > 0 {
                let gates: Vec<String> = self.cz_layers[i - 1]
                    .iter()
                    .map(|g| {
                        let qs: Vec<String> = g.qubits.iter().map(|q| q.to_string()).collect();
                        format!("CZ@{}", qs.join(","))
                    })
                    .collect();
                let _ = writeln!(s, "layer M: {}", gates.join(";"));
            }
            let gates: Vec<String> = layer
                .iter()
                .map(|g| format!("g([{}])@{}", join_complex(&g.matrix), g.target))
                .collect();
            let _ = writeln!(s, "layer L: {}", gates.join(" "));
        }
        s
    }
}

fn join_complex(v: &[C64]) -> String {
    let parts: Vec<String> = v.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
    parts.join(",")
}

fn check_disjoint(qubits: impl Iterator<Item = usize>, n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for q in qubits {
        if q >= n {
            return Err(Error::InvalidCircuit(format!("qubit {q} out of range for {n} qubits")));
        }
        if core::mem::replace(&mut seen[q], true) {
            return Err(Error::OverlappingSupport(q));
        }
    }
    Ok(())
}

/// Parse the text format:
///
/// ```text
/// qubits 2 1
/// anc |0>
/// layer L: g(H)@0 g([1,0,0,0,0,0,1,0])@1
/// layer M: CZ@0,1,2
/// layer M: CNOT@0,1
/// layer L: g(T)@2
/// ```
///
/// `anc` also accepts `pure` and `density` followed by comma-separated
/// `re,im` pairs, or `mixed <file>`/`pure-file <file>`, which are handed to
/// `resolve`. `CNOT@c,t` and `CCZ`-style `TOFFOLI@c1,…,t` become a CZ with
/// Hadamards on the target.
pub fn parse_circuit(
    text: &str,
    mut resolve: impl FnMut(&str, &str) -> Result<AncillaState>,
) -> Result<QacCircuit> {
    let mut circuit: Option<QacCircuit> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Invalid(format!("line {}: {msg}", lineno + 1));
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if head == "qubits" {
            let nums: Vec<usize> = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err("bad qubit count")))
                .collect::<Result<_>>()?;
            let [n_in, n_anc] = nums[..] else { return Err(err("expected `qubits <n_in> <n_anc>`")) };
            circuit = Some(QacCircuit::new(n_in, n_anc));
            continue;
        }
        let c = circuit.as_mut().ok_or_else(|| err("`qubits` line must come first"))?;
        match head {
            "anc" => {
                c.ancilla = parse_ancilla(rest, c.n_ancillae, &mut resolve).map_err(|e| err(&e.to_string()))?;
            }
            "output" => c.output = rest.parse().map_err(|_| err("bad output qubit"))?,
            "layer" => {
                let (kind, body) = rest.split_once(':').ok_or_else(|| err("expected `layer L:` or `layer M:`"))?;
                match kind.trim() {
                    "L" => {
                        for tok in body.split_whitespace() {
                            let gate = parse_local_gate(tok).map_err(|e| err(&e.to_string()))?;
                            c.push_local_gate(gate);
                        }
                    }
                    "M" => {
                        c.push_cz_layer(Vec::new()).map_err(|e| err(&e.to_string()))?;
                        let layer = c.depth() - 1;
                        for tok in body.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                            let (name, args) = tok.split_once('@').ok_or_else(|| err("gate needs `@qubits`"))?;
                            let qubits: Vec<usize> = args
                                .split(',')
                                .map(|q| q.trim().parse().map_err(|_| err("bad qubit index")))
                                .collect::<Result<_>>()?;
                            match name.trim().to_ascii_uppercase().as_str() {
                                "CZ" => {}
                                "CNOT" | "CX" | "TOFFOLI" => {
                                    let &target = qubits.last().ok_or_else(|| err("missing target"))?;
                                    c.push_local_gate_at(layer, SingleQubitGate::h(target));
                                    c.push_local_gate_at(layer + 1, SingleQubitGate::h(target));
                                }
                                other => return Err(err(&format!("unknown multi-qubit gate {other:?}"))),
                            }
                            c.push_cz_gate_at(layer, CzGate::new(qubits)).map_err(|e| err(&e.to_string()))?;
                        }
                    }
                    other => return Err(err(&format!("unknown layer kind {other:?}"))),
                }
            }
            other => return Err(err(&format!("unknown directive {other:?}"))),
        }
    }
    let c = circuit.ok_or_else(|| Error::Invalid("empty circuit description".into()))?;
    c.validate()?;
    Ok(c)
}

fn parse_ancilla(
    rest: &str,
    a: usize,
    resolve: &mut impl FnMut(&str, &str) -> Result<AncillaState>,
) -> Result<AncillaState> {
    if let Some(bits) = rest.strip_prefix('|').and_then(|r| r.strip_suffix('>')) {
        if bits.len() != a {
            return Err(Error::Invalid(format!("ancilla ket has {} bits, expected {a}", bits.len())));
        }
        return AncillaState::basis(bits);
    }
    let (kind, body) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    match kind {
        "pure" => Ok(AncillaState::Pure(parse_complex_list(body)?)),
        "density" => {
            let data = parse_complex_list(body)?;
            let dim = 1usize << a;
            Ok(AncillaState::Mixed(Matrix::from_vec(dim, dim, data)?))
        }
        "mixed" | "pure-file" => resolve(kind, body.trim()),
        other => Err(Error::Invalid(format!("unknown ancilla form {other:?}"))),
    }
}

fn parse_complex_list(body: &str) -> Result<Vec<C64>> {
    let reals: Vec<f64> = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Invalid(format!("bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if reals.len() % 2 != 0 {
        return Err(Error::Invalid("complex list needs re,im pairs".into()));
    }
    Ok(reals.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
}

fn parse_local_gate(tok: &str) -> Result<SingleQubitGate> {
    let (spec, q) = tok.rsplit_once('@').ok_or_else(|| Error::Invalid(format!("gate {tok:?} needs @qubit")))?;
    let target: usize = q.parse().map_err(|_| Error::Invalid(format!("bad qubit in {tok:?}")))?;
    let inner = spec
        .strip_prefix("g(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Invalid(format!("gate {tok:?} should look like g(H)@0")))?;
    if let Some(list) = inner.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let m = parse_complex_list(list)?;
        let m: [C64; 4] = m.try_into().map_err(|_| Error::Invalid("gate matrix needs 4 complex entries".into()))?;
        return Ok(SingleQubitGate::new(target, m));
    }
    if let Some(angle) = inner.strip_prefix("RY:").or_else(|| inner.strip_prefix("ry:")) {
        let theta = angle.parse().map_err(|_| Error::Invalid(format!("bad angle {angle:?}")))?;
        return Ok(SingleQubitGate::ry(target, theta));
    }
    if let Some(angle) = inner.strip_prefix("RZ:").or_else(|| inner.strip_prefix("rz:")) {
        let theta = angle.parse().map_err(|_| Error::Invalid(format!("bad angle {angle:?}")))?;
        return Ok(SingleQubitGate::rz(target, theta));
    }
    SingleQubitGate::named(inner, target)
}

pub(crate) fn apply_single(state: &mut [C64], n: usize, g: &SingleQubitGate) {
    let bit = 1usize << (n - 1 - g.target);
    let [a, b, c, d] = g.matrix;
    for i in 0..state.len() {
        if i & bit == 0 {
            let (s0, s1) = (state[i], state[i | bit]);
            state[i] = a * s0 + b * s1;
            state[i | bit] = c * s0 + d * s1;
        }
    }
}

fn apply_cz(state: &mut [C64], mask: u64) {
    let mask = mask as usize;
    for (i, s) in state.iter_mut().enumerate() {
        if i & mask == mask {
            *s = -*s;
        }
    }
}

/// `X ← G†XG` for a single-qubit gate.
pub fn conjugate_single(x: &mut Matrix, n: usize, g: &SingleQubitGate) {
    let bit = 1usize << (n - 1 - g.target);
    let dim = x.rows();
    let [g00, g01, g10, g11] = g.matrix;
    let (b00, b01, b10, b11) = (g00.conj(), g10.conj(), g01.conj(), g11.conj());
    for i in 0..dim {
        if i & bit != 0 {
            continue;
        }
        for j in 0..dim {
            let (r0, r1) = (x[(i, j)], x[(i | bit, j)]);
            x[(i, j)] = b00 * r0 + b01 * r1;
            x[(i | bit, j)] = b10 * r0 + b11 * r1;
        }
    }
    for r in 0..dim {
        let row = x.row_mut(r);
        for j in 0..dim {
            if j & bit != 0 {
                continue;
            }
            let (c0, c1) = (row[j], row[j | bit]);
            row[j] = c0 * g00 + c1 * g10;
            row[j | bit] = c0 * g01 + c1 * g11;
        }
    }
}

/// `X ← DXD` for a real diagonal `D`.
pub fn conjugate_diagonal(x: &mut Matrix, diag: &[f64]) {
    for (i, di) in diag.iter().enumerate() {
        let row = x.row_mut(i);
        for (j, dj) in diag.iter().enumerate() {
            row[j] *= di * dj;
        }
    }
}

/// Diagonal of a product of commuting diagonal gates on `n` qubits. For each
/// basis index and gate, `value(gate_index, weight_on_support, all_ones)`
/// gives that gate's factor.
pub fn layer_diagonal(
    n: usize,
    gates: &[CzGate],
    value: impl Fn(usize, usize, bool) -> f64,
) -> Vec<f64> {
    let masks: Vec<u64> = gates.iter().map(|g| g.mask(n)).collect();
    (0..1u64 << n)
        .map(|i| {
            masks.iter().enumerate().fold(1.0, |acc, (gi, &m)| {
                let w = (i & m).count_ones() as usize;
                acc * value(gi, w, w == gates[gi].arity())
            })
        })
        .collect()
}

/// Choi matrix `(E ⊗ 1)(EPR)`, unnormalized so that its trace is `2^{n_inputs}`.
/// Rows are indexed by `(output, reference)` with the `k` outputs leading.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub k: usize,
    pub n_inputs: usize,
    pub matrix: Matrix,
}

impl ChoiMatrix {
    pub fn n_qubits(&self) -> usize {
        self.k + self.n_inputs
    }

    pub fn to_pauli(&self) -> Result<PauliOperator> {
        PauliOperator::expand_from_dense(&self.matrix)
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        linalg::spectral_norm(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.matrix)?.first().copied().unwrap_or(0.0))
    }
}

/// `Φ_U = (1 ⊗ Uᵀ)(EPR_k ⊗ 1)(1 ⊗ Ū)` on `k + N` qubits, where the EPR pairs
/// join output `t` with reference qubit `t`.
pub fn choi_from_unitary(u: &Matrix, k: usize) -> Result<Matrix> {
    let n = linalg::qubits_for_dim(u.rows())?;
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("{k} outputs for {n} qubits")));
    }
    check_dense(k + n)?;
    let epr = epr_pairs(k);
    let mid = epr.kron(&Matrix::identity(1usize << (n - k)));
    let left = Matrix::identity(1usize << k).kron(&u.transpose());
    let right = Matrix::identity(1usize << k).kron(&u.conj());
    Ok(left.mul(&mid).mul(&right))
}

/// Unnormalized `EPR_k` on `2k` qubits, pairing qubit `t` with qubit `k + t`.
pub fn epr_pairs(k: usize) -> Matrix {
    let dim = 1usize << k;
    let mut v = vec![ZERO; dim * dim];
    for x in 0..dim {
        v[x * dim + x] = ONE;
    }
    Matrix::outer(&v, &v)
}

/// Random circuit of the given depth. `uniform` must return samples from
/// `[0, 1)`. Each CZ layer partitions a random subset of qubits into gates
/// of arity at most `max_arity`.
pub fn random_circuit(
    n_inputs: usize,
    n_ancillae: usize,
    depth: usize,
    max_arity: usize,
    uniform: &mut impl FnMut() -> f64,
) -> QacCircuit {
    let n = n_inputs + n_ancillae;
    let mut c = QacCircuit::new(n_inputs, n_ancillae);
    let locals = |c: &mut QacCircuit, uniform: &mut dyn FnMut() -> f64| {
        for q in 0..n {
            c.push_local_gate(random_single(q, uniform));
        }
    };
    locals(&mut c, uniform);
    for _ in 0..depth {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = ((uniform() * (i + 1) as f64) as usize).min(i);
            order.swap(i, j);
        }
        let mut gates = Vec::new();
        let mut pos = 0;
        while pos < n {
            let arity = 1 + ((uniform() * max_arity.max(1) as f64) as usize).min(max_arity.max(1) - 1);
            let end = (pos + arity).min(n);
            if uniform() < 0.8 {
                gates.push(CzGate::new(order[pos..end].to_vec()));
            }
            pos = end;
        }
        c.push_cz_layer(gates).expect("disjoint by construction");
        locals(&mut c, uniform);
    }
    c
}

/// Random single-qubit unitary from Euler angles and a global phase.
pub fn random_single(target: usize, uniform: &mut dyn FnMut() -> f64) -> SingleQubitGate {
    let tau = core::f64::consts::TAU;
    let (a, b, g, p) = (uniform() * tau, uniform() * tau, uniform() * tau, uniform() * tau);
    let m = SingleQubitGate::rz(target, a)
        .after(&SingleQubitGate::ry(target, b))
        .after(&SingleQubitGate::rz(target, g));
    let phase = C64::from_polar(1.0, p);
    SingleQubitGate::new(target, m.matrix.map(|z| z * phase))
}

/// `H` on qubit 0 followed by a CNOT chain, preparing `(|0ⁿ⟩ + |1ⁿ⟩)/√2`.
pub fn cat_preparation(n: usize) -> QacCircuit {
    let mut c = QacCircuit::new(n, 0);
    c.push_local_gate(SingleQubitGate::h(0));
    for q in 1..n {
        c.push_controlled_x(&[q - 1], q).expect("chain gates are disjoint");
    }
    c
}

/// Parity of `n` inputs onto qubit 0 through a chain of CNOTs (depth `n − 1`),
/// then `RY(θ)` with `cos θ = δ`, so every input is answered correctly with
/// probability exactly `(1 + δ)/2`.
pub fn parity_gadget(n: usize, delta: f64) -> Result<QacCircuit> {
    if n == 0 {
        return Err(Error::OutOfRange("parity of zero bits".into()));
    }
    if !(-1.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange(format!("bias {delta} outside [-1, 1]")));
    }
    let mut c = QacCircuit::new(n, 0);
    for q in 1..n {
        c.push_controlled_x(&[q], 0)?;
    }
    if delta < 1.0 {
        c.push_local_gate(SingleQubitGate::ry(0, delta.acos()));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PauliString;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn cz_flips_all_ones() {
        let mut c = QacCircuit::new(2, 0);
        c.push_cz_layer(vec![CzGate::new([0, 1])]).unwrap();
        let out = c.simulate_basis(0b11).unwrap();
        assert!((out[3] + ONE).norm() < 1e-12);
    }

    #[test]
    fn hadamard_conjugated_cz_is_cnot() {
        let mut c = QacCircuit::new(2, 0);
        c.push_controlled_x(&[0], 1).unwrap();
        let out = c.simulate_basis(0b10).unwrap();
        assert!((out[0b11] - ONE).norm() < 1e-12);
    }

    #[test]
    fn cat_state_fidelity() {
        let out = cat_preparation(3).simulate_basis(0).unwrap();
        let f = (out[0] + out[7]).norm() * FRAC_1_SQRT_2;
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_gadget_tables() {
        let c = parity_gadget(2, 1.0).unwrap();
        let t = c.output_table().unwrap();
        for (x, p) in t.iter().enumerate() {
            assert!((p - (x.count_ones() % 2) as f64).abs() < 1e-12);
        }
        let c = parity_gadget(3, 0.6).unwrap();
        for (x, p) in c.output_table().unwrap().iter().enumerate() {
            let correct = if x.count_ones() % 2 == 1 { *p } else { 1.0 - p };
            assert!((correct - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_circuit_outputs_first_bit() {
        let c = QacCircuit::new(3, 0);
        for (x, p) in c.output_table().unwrap().iter().enumerate() {
            assert_eq!(*p, ((x >> 2) & 1) as f64);
        }
    }

    #[test]
    fn heisenberg_stabilizer_rules() {
        let mut c = QacCircuit::new(2, 0);
        c.push_cz_layer(vec![CzGate::new([0, 1])]).unwrap();
        let z = PauliOperator::from_labels(&[("ZI", 1.0)]).unwrap();
        assert_eq!(c.heisenberg(&z).unwrap().pruned(1e-12), z);
        let x = PauliOperator::from_labels(&[("XI", 1.0)]).unwrap();
        let out = c.heisenberg(&x).unwrap().pruned(1e-12);
        assert_eq!(out, PauliOperator::from_labels(&[("XZ", 1.0)]).unwrap());
    }

    #[test]
    fn heisenberg_matches_unitary_product() {
        let c = random_circuit(3, 1, 2, 3, &mut lcg(7));
        let a = PauliOperator::from_terms(4, [(PauliString::parse("XZIY").unwrap(), ONE)]).unwrap();
        let u = c.unitary().unwrap();
        let expected = u.adjoint().mul(&a.to_dense().unwrap()).mul(&u);
        let got = c.heisenberg_dense(&a.to_dense().unwrap()).unwrap();
        assert!(got.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn choi_of_identity_is_epr() {
        let c = QacCircuit::new(1, 0);
        let phi = c.choi(1).unwrap();
        assert!(phi.matrix.max_abs_diff(&epr_pairs(1)) < 1e-14);
        let mut x = QacCircuit::new(1, 0);
        x.push_local_gate(SingleQubitGate::x(0));
        let phi = x.choi(1).unwrap();
        let xi = SingleQubitGate::x(0).to_matrix().kron(&Matrix::identity(2));
        assert!(phi.matrix.max_abs_diff(&xi.mul(&epr_pairs(1)).mul(&xi)) < 1e-14);
    }

    #[test]
    fn choi_identity_with_pure_and_mixed_ancilla() {
        let mut rng = lcg(11);
        let mut c = random_circuit(2, 1, 2, 3, &mut rng);
        c.ancilla = AncillaState::Pure(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        for k in 1..=2 {
            assert!(c.choi_identity_residual(k).unwrap() < 1e-10);
        }
        let rho = Matrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.7, 0.0),
            (1, 1) => C64::new(0.3, 0.0),
            (0, 1) => C64::new(0.1, 0.2),
            _ => C64::new(0.1, -0.2),
        });
        c.ancilla = AncillaState::Mixed(rho);
        assert!(c.choi_identity_residual(1).unwrap() < 1e-10);
        let phi = c.choi(1).unwrap();
        assert!((phi.matrix.trace().re - 4.0).abs() < 1e-10);
        assert!(phi.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn text_round_trip_and_rejections() {
        let text = "qubits 2 0\nlayer L: g(H)@0\nlayer M: CZ@0,1\n";
        let c = parse_circuit(text, |_, _| unreachable!()).unwrap();
        assert_eq!(c.depth(), 1);
        let bad = "qubits 3 0\nlayer M: CZ@0,1;CZ@1,2\n";
        assert!(matches!(parse_circuit(bad, |_, _| unreachable!()), Err(Error::Invalid(_))));
        let nonunitary = "qubits 1 0\nlayer L: g([1,0,1,0,0,0,1,0])@0\n";
        assert!(matches!(parse_circuit(nonunitary, |_, _| unreachable!()), Err(Error::NonUnitary { .. })));

        let mut fig = QacCircuit::new(4, 0);
        fig.push_local_gate(SingleQubitGate::h(0));
        fig.push_cz_layer(vec![CzGate::new([0, 1, 2]), CzGate::new([3])]).unwrap();
        fig.push_local_gate(SingleQubitGate::t(2));
        fig.push_cz_layer(vec![CzGate::new([1, 3])]).unwrap();
        let back = parse_circuit(&fig.to_text(), |_, _| unreachable!()).unwrap();
        assert_eq!(back, fig);
    }

    #[test]
    fn cnot_keyword_expands() {
        let text = "qubits 2 0\nlayer M: CNOT@0,1\n";
        let c = parse_circuit(text, |_, _| unreachable!()).unwrap();
        let out = c.simulate_basis(0b10).unwrap();
        assert!((out[0b11] - ONE).norm() < 1e-12);
    }
}
