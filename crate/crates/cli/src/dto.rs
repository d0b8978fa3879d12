//! JSON shapes for everything the CLI reads or writes.

use pauli_lens_core::boolfn::{BooleanFunction, DegreeQuery, DegreeRoute, Witness};
use pauli_lens_core::boost::{BoostPlan, CircuitSpec, Margin};
use pauli_lens_core::circuit::{AncillaState, CzGate, QacCircuit, SingleQubitGate};
use pauli_lens_core::lowdeg::{ApproxCertificate, CertificateForm, WeightPolynomial};
use pauli_lens_core::states::QuantumState;
use pauli_lens_core::{Matrix, PauliOperator, PauliString, C64};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

pub type Complex = [f64; 2];

fn complex(z: &C64) -> Complex {
    [z.re, z.im]
}

fn from_complex(p: &Complex) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub n: usize,
    pub terms: Vec<TermDoc>,
}

impl OperatorDoc {
    pub fn from_operator(op: &PauliOperator) -> Self {
        let mut terms: Vec<TermDoc> = op
            .terms()
            .map(|(s, c)| TermDoc { pauli: s.to_string(), re: c.re, im: c.im })
            .collect();
        terms.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        OperatorDoc { n: op.n(), terms }
    }

    pub fn to_operator(&self) -> CliResult<PauliOperator> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let s = PauliString::parse(&t.pauli)?;
            if s.n() != self.n {
                return Err(usage(format!("Pauli string {:?} does not have {} qubits", t.pauli, self.n)));
            }
            terms.push((s, C64::new(t.re, t.im)));
        }
        Ok(PauliOperator::from_terms(self.n, terms)?)
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &Matrix) -> Self {
        MatrixDoc {
            rows: m.rows(),
            cols: m.cols(),
            re: m.data().iter().map(|z| z.re).collect(),
            im: m.data().iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> CliResult<Matrix> {
        if self.re.len() != self.rows * self.cols || self.im.len() != self.re.len() {
            return Err(usage("matrix entry count does not match rows × cols"));
        }
        let data = self.re.iter().zip(&self.im).map(|(r, i)| C64::new(*r, *i)).collect();
        Ok(Matrix::from_vec(self.rows, self.cols, data)?)
    }
}

/// A state as an amplitude list, or a density matrix for mixed states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateDoc {
    Pure { n: usize, amplitudes: Vec<Complex> },
    Mixed { n: usize, density: MatrixDoc },
    Bare(Vec<Complex>),
}

impl StateDoc {
    pub fn from_state(s: &QuantumState) -> Self {
        match s {
            QuantumState::Pure { n, amplitudes } => {
                StateDoc::Pure { n: *n, amplitudes: amplitudes.iter().map(complex).collect() }
            }
            QuantumState::Mixed { n, density } => StateDoc::Mixed { n: *n, density: MatrixDoc::from_matrix(density) },
        }
    }

    pub fn to_state(&self) -> CliResult<QuantumState> {
        let s = match self {
            StateDoc::Pure { amplitudes, .. } | StateDoc::Bare(amplitudes) => {
                QuantumState::pure(amplitudes.iter().map(from_complex).collect())?
            }
            StateDoc::Mixed { density, .. } => QuantumState::mixed(density.to_matrix()?)?,
        };
        if let StateDoc::Pure { n, .. } | StateDoc::Mixed { n, .. } = self {
            if *n != s.n() {
                return Err(usage(format!("state declares {n} qubits but holds {}", s.n())));
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub n: usize,
    pub table: Vec<f64>,
}

impl FunctionDoc {
    pub fn to_function(&self) -> CliResult<BooleanFunction> {
        Ok(BooleanFunction::new(self.n, self.table.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDoc {
    pub target: usize,
    pub matrix: [Complex; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AncillaDoc {
    Zero,
    Pure { amplitudes: Vec<Complex> },
    Mixed { density: MatrixDoc },
}

/// JSON mirror of the circuit text format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub n_inputs: usize,
    pub n_ancillae: usize,
    #[serde(default)]
    pub output: usize,
    pub ancilla: AncillaDoc,
    pub local_layers: Vec<Vec<GateDoc>>,
    pub cz_layers: Vec<Vec<Vec<usize>>>,
}

impl CircuitDoc {
    pub fn from_circuit(c: &QacCircuit) -> Self {
        CircuitDoc {
            n_inputs: c.n_inputs,
            n_ancillae: c.n_ancillae,
            output: c.output,
            ancilla: match &c.ancilla {
                AncillaState::Zero => AncillaDoc::Zero,
                AncillaState::Pure(v) => AncillaDoc::Pure { amplitudes: v.iter().map(complex).collect() },
                AncillaState::Mixed(m) => AncillaDoc::Mixed { density: MatrixDoc::from_matrix(m) },
            },
            local_layers: c
                .local_layers
                .iter()
                .map(|l| l.iter().map(|g| GateDoc { target: g.target, matrix: g.matrix.map(|z| complex(&z)) }).collect())
                .collect(),
            cz_layers: c.cz_layers.iter().map(|l| l.iter().map(|g| g.qubits.clone()).collect()).collect(),
        }
    }

    pub fn to_circuit(&self) -> CliResult<QacCircuit> {
        let mut c = QacCircuit::new(self.n_inputs, self.n_ancillae);
        c.output = self.output;
        c.ancilla = match &self.ancilla {
            AncillaDoc::Zero => AncillaState::Zero,
            AncillaDoc::Pure { amplitudes } => AncillaState::Pure(amplitudes.iter().map(from_complex).collect()),
            AncillaDoc::Mixed { density } => AncillaState::Mixed(density.to_matrix()?),
        };
        if self.local_layers.len() != self.cz_layers.len() + 1 {
            return Err(usage("a circuit needs exactly one more local layer than CZ layers"));
        }
        for (i, layer) in self.cz_layers.iter().enumerate() {
            c.push_cz_layer(layer.iter().map(|q| CzGate::new(q.clone())).collect())?;
            debug_assert_eq!(c.depth(), i + 1);
        }
        for (i, layer) in self.local_layers.iter().enumerate() {
            for g in layer {
                c.push_local_gate_at(i, SingleQubitGate::new(g.target, g.matrix.map(|p| from_complex(&p))));
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDoc {
    pub role: String,
    pub n: usize,
    pub rho: usize,
    pub error: f64,
    /// `Δᵏq(0)`, so `q(w) = Σ_k Δᵏq(0)·C(w, k)`.
    pub newton: Vec<f64>,
}

impl PolynomialDoc {
    fn new(role: String, p: &WeightPolynomial) -> Self {
        PolynomialDoc { role, n: p.n(), rho: p.rho(), error: p.error(), newton: p.newton_coefficients() }
    }
}

fn collect_polynomials(form: &CertificateForm, prefix: &str, out: &mut Vec<PolynomialDoc>) {
    let plans = |plans: &[Vec<Option<WeightPolynomial>>], out: &mut Vec<PolynomialDoc>| {
        for (i, layer) in plans.iter().enumerate() {
            for (j, p) in layer.iter().enumerate() {
                if let Some(p) = p {
                    out.push(PolynomialDoc::new(format!("{prefix}layer {} gate {j}", i + 1), p));
                }
            }
        }
    };
    match form {
        CertificateForm::Explicit(_) => {}
        CertificateForm::ProductState { poly, .. } => out.push(PolynomialDoc::new(format!("{prefix}product state"), poly)),
        CertificateForm::Cz { poly, .. } => out.push(PolynomialDoc::new(format!("{prefix}cz"), poly)),
        CertificateForm::Layer { plan, .. } => plans(std::slice::from_ref(plan), out),
        CertificateForm::Circuit { plans: p, .. } => plans(p, out),
        CertificateForm::Heisenberg { plans: p, observable, .. } => {
            collect_polynomials(&observable.form, &format!("{prefix}observable "), out);
            plans(p, out);
        }
        CertificateForm::PostSelected { inner, .. } => collect_polynomials(&inner.form, prefix, out),
    }
}

/// JSON has no NaN or infinity; non-finite values travel as `null`.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// How to rebuild a certificate; `verify` re-runs it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    /// With `r` set the degree came from `⌈√(nr)⌉` and the closed-form
    /// bounds apply.
    Cz {
        arity: usize,
        rho: usize,
        #[serde(default)]
        r: Option<f64>,
    },
    ProductState { block: Vec<Complex>, count: usize, rho: usize },
    Circuit { circuit: CircuitDoc, ell: usize, r: f64 },
    Heisenberg { circuit: CircuitDoc, observable: OperatorDoc, r: f64 },
    Choi { circuit: CircuitDoc, k: usize, epr_target: f64, r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub target: String,
    pub n: usize,
    pub degree: usize,
    pub input_degree: Option<usize>,
    pub epsilon: f64,
    pub provenance: Vec<String>,
    #[serde(with = "nullable")]
    pub closed_form_degree: f64,
    #[serde(with = "nullable")]
    pub closed_form_error: f64,
    pub closed_forms_apply: bool,
    pub flags: Vec<String>,
    pub polynomials: Vec<PolynomialDoc>,
    pub recipe: Recipe,
    /// Pauli expansion of the approximant, present for small registers.
    pub approximant: Option<OperatorDoc>,
}

/// Registers up to this size carry their explicit approximant.
pub const EXPLICIT_LIMIT: usize = 8;

impl CertificateDoc {
    pub fn new(cert: &ApproxCertificate, recipe: Recipe) -> Self {
        let mut polynomials = Vec::new();
        collect_polynomials(&cert.form, "", &mut polynomials);
        let approximant = (cert.n <= EXPLICIT_LIMIT)
            .then(|| cert.explicit_operator().ok())
            .flatten()
            .map(|op| OperatorDoc::from_operator(&op.pruned(1e-14)));
        CertificateDoc {
            target: cert.target.clone(),
            n: cert.n,
            degree: cert.degree,
            input_degree: cert.input_degree,
            epsilon: cert.ledger.epsilon,
            provenance: cert.ledger.provenance.clone(),
            closed_form_degree: cert.closed_form_degree,
            closed_form_error: cert.closed_form_error,
            closed_forms_apply: cert.closed_forms_apply,
            flags: cert.flags.clone(),
            polynomials,
            recipe,
            approximant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessDoc {
    Multilinear { n: usize, coefficients: Vec<(u64, f64)> },
    Symmetric { n: usize, degree: usize, by_weight: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeDoc {
    pub epsilon: f64,
    pub degree: usize,
    pub route: String,
    pub best_error: f64,
    pub error_below: Option<f64>,
    pub margin: Option<f64>,
    pub certified: bool,
    pub witness: Option<WitnessDoc>,
}

impl DegreeDoc {
    pub fn new(q: &DegreeQuery) -> Self {
        DegreeDoc {
            epsilon: q.epsilon,
            degree: q.degree,
            route: match q.route {
                DegreeRoute::General => "general".into(),
                DegreeRoute::Symmetric => "symmetric".into(),
            },
            best_error: q.best_error,
            error_below: q.error_below,
            margin: q.margin,
            certified: q.certified,
            witness: q.witness.as_ref().map(|w| match w {
                Witness::Multilinear { n, coefficients } => {
                    WitnessDoc::Multilinear { n: *n, coefficients: coefficients.clone() }
                }
                Witness::Symmetric { n, degree, by_weight } => {
                    WitnessDoc::Symmetric { n: *n, degree: *degree, by_weight: by_weight.clone() }
                }
            }),
        }
    }
}

/// Integers are decimal strings so arbitrarily large specs survive JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecDoc {
    pub depth: u64,
    pub inputs: String,
    pub ancillae: String,
    /// `"delta^e"` or a decimal value.
    pub margin: String,
}

impl SpecDoc {
    pub fn new(s: &CircuitSpec) -> Self {
        SpecDoc {
            depth: s.depth,
            inputs: s.inputs.to_string(),
            ancillae: s.ancillae.to_string(),
            margin: match &s.margin {
                Margin::Power(e) => format!("delta^{e}"),
                Margin::Value(v) => format!("{v}"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub lemma: String,
    pub parameters: String,
    pub top: SpecDoc,
    pub bottom: SpecDoc,
    pub composed: SpecDoc,
    pub claimed: SpecDoc,
    pub audit_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckDoc {
    pub name: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub label: String,
    pub base: SpecDoc,
    pub steps: Vec<StepDoc>,
    pub final_spec: SpecDoc,
    pub flags: Vec<String>,
    pub checks: Vec<CheckDoc>,
    pub audit_ok: bool,
    pub tree: String,
}

impl PlanDoc {
    pub fn new(p: &BoostPlan) -> Self {
        PlanDoc {
            label: p.label.clone(),
            base: SpecDoc::new(&p.base),
            steps: p
                .steps
                .iter()
                .map(|s| StepDoc {
                    lemma: s.lemma.clone(),
                    parameters: s.parameters.clone(),
                    top: SpecDoc::new(&s.top),
                    bottom: SpecDoc::new(&s.bottom),
                    composed: SpecDoc::new(&s.composed),
                    claimed: SpecDoc::new(&s.claimed),
                    audit_ok: s.audit_ok,
                })
                .collect(),
            final_spec: SpecDoc::new(&p.final_spec),
            flags: p.flags.clone(),
            checks: p.checks.iter().map(|(name, ok)| CheckDoc { name: name.clone(), ok: *ok }).collect(),
            audit_ok: p.audit_ok(),
            tree: p.render_tree(),
        }
    }
}
