use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pauli_lens_core::circuit::{random_circuit, QacCircuit};
use pauli_lens_core::lowdeg::{
    approx_circuit, approx_cz, approx_cz_with_degree, approx_product_state, default_r,
    heisenberg_degree_bound, smallest_rho_for, verify_certificate_dense, ApproxCertificate, CertificateForm,
    VerificationReport,
};
use pauli_lens_core::states::{channel_degree_bound, normalized_choi};
use pauli_lens_core::{Matrix, PauliOperator, PauliString, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dense, check_epsilon, check_r, uniform, Context};
use crate::cells;
use crate::dto::{CertificateDoc, CircuitDoc, Complex, Recipe, StateDoc};
use crate::error::{usage, CliResult};
use crate::io::{load_circuit, read_json, Report, Table};

/// Most circuits one `--random` sweep will generate.
const RANDOM_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ApproxTarget {
    Cz,
    Circuit,
    State,
    Choi,
}

#[derive(Args, Debug)]
pub struct ApproxArgs {
    pub target: ApproxTarget,
    /// CZ arity, register size for `state`, or input count for `--random`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree parameter `r`; circuit targets default to 2^8(1 + 2 log2 N).
    #[arg(long)]
    pub r: Option<f64>,
    /// Chebyshev degree, overriding `--r` for CZ and state targets.
    #[arg(long)]
    pub rho: Option<usize>,
    /// Target error for state approximants and the EPR pairs of `choi`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Circuit file (text or JSON) for `circuit` and `choi`.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Observable to pull back through the circuit.
    #[arg(long)]
    pub observable: Option<PathBuf>,
    /// Degree of the observables the circuit certificate must cover.
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    /// Output qubits of the channel.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Single-block state file for product-state targets.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Number of block copies.
    #[arg(long)]
    pub count: Option<usize>,
    /// Sweep this many seeded random circuits instead of one file.
    #[arg(long)]
    pub random: Option<usize>,
    /// Depth of the random circuits in a sweep.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Ancillae of the random circuits in a sweep.
    #[arg(long, default_value_t = 0)]
    pub ancillae: usize,
    /// Largest CZ arity in a sweep; defaults to the register size.
    #[arg(long)]
    pub max_arity: Option<usize>,
    /// Check against the exact object densely.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationDoc {
    pub distance: f64,
    pub ledger_epsilon: f64,
    pub measured_degree: usize,
    pub certified_degree: usize,
    pub distance_ok: bool,
    pub degree_ok: bool,
    pub passed: bool,
}

impl VerificationDoc {
    pub fn new(r: &VerificationReport) -> Self {
        VerificationDoc {
            distance: r.distance,
            ledger_epsilon: r.ledger_epsilon,
            measured_degree: r.measured_degree,
            certified_degree: r.certified_degree,
            distance_ok: r.distance_ok,
            degree_ok: r.degree_ok,
            passed: r.passed(),
        }
    }
}

#[derive(Serialize)]
struct ApproxReport {
    seed: u64,
    certificate: CertificateDoc,
    verification: Option<VerificationDoc>,
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    n_qubits: usize,
    depth: usize,
    observable: String,
    certified_degree: usize,
    measured_degree: usize,
    ledger_epsilon: f64,
    distance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SweepReport {
    seed: u64,
    workers: usize,
    n_inputs: usize,
    ancillae: usize,
    depth: usize,
    r: Option<f64>,
    rows: Vec<SweepRow>,
    all_passed: bool,
}

pub fn run(ctx: &Context, args: ApproxArgs) -> CliResult<Report> {
    if let Some(count) = args.random {
        if count > RANDOM_LIMIT {
            return Err(usage(format!("--random {count} is above {RANDOM_LIMIT}")));
        }
        return sweep(ctx, &args, count);
    }
    let recipe = recipe_for(&args)?;
    let cert = rebuild(&recipe)?;
    let verification = if args.verify {
        Some(VerificationDoc::new(&verify_certificate_dense(&cert, &exact_for(&recipe)?)?))
    } else {
        None
    };
    let doc = CertificateDoc::new(&cert, recipe);
    let mut table = Table::new(&["role", "n", "rho", "error"]);
    for p in &doc.polynomials {
        table.push(cells![p.role, p.n, p.rho, p.error]);
    }
    let text = format!("{}: degree {}, epsilon {:.6e}", doc.target, doc.degree, doc.epsilon);
    let failure = verification
        .as_ref()
        .filter(|v| !v.passed)
        .map(|v| format!("distance {:.3e} vs ledger {:.3e}, degree {} vs {}", v.distance, v.ledger_epsilon, v.measured_degree, v.certified_degree));
    let mut report = Report::new(&ApproxReport { seed: ctx.seed, certificate: doc, verification })?
        .with_table(table)
        .with_text(text);
    report.failure = failure;
    Ok(report)
}

fn recipe_for(args: &ApproxArgs) -> CliResult<Recipe> {
    match args.target {
        ApproxTarget::Cz => {
            let arity = args.n.ok_or_else(|| usage("cz needs --n"))?;
            if arity == 0 {
                return Err(usage("--n must be positive"));
            }
            match (args.rho, args.r) {
                (Some(rho), _) => Ok(Recipe::Cz { arity, rho, r: None }),
                (None, Some(r)) => {
                    let r = check_r(r)?;
                    match approx_cz(arity, r)?.form {
                        CertificateForm::Cz { poly, .. } => Ok(Recipe::Cz { arity, rho: poly.rho(), r: Some(r) }),
                        _ => unreachable!("approx_cz returns the CZ form"),
                    }
                }
                (None, None) => Err(usage("cz needs --r or --rho")),
            }
        }
        ApproxTarget::State => {
            let (block, count): (Vec<C64>, usize) = match &args.state {
                Some(path) => {
                    let s = read_json::<StateDoc>(path)?.to_state()?;
                    let v = s.amplitudes().ok_or_else(|| usage("the block state must be pure"))?.to_vec();
                    (v, args.count.unwrap_or(1))
                }
                None => (vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], args.n.ok_or_else(|| usage("state needs --n or --state"))?),
            };
            if count == 0 {
                return Err(usage("--count must be positive"));
            }
            let rho = match (args.rho, args.eps) {
                (Some(rho), _) => rho,
                (None, Some(eps)) => smallest_rho_for(count, check_epsilon(eps)?).unwrap_or(count),
                (None, None) => smallest_rho_for(count, 1.0 / count as f64).unwrap_or(count),
            };
            Ok(Recipe::ProductState { block: block.iter().map(|z| [z.re, z.im]).collect(), count, rho })
        }
        ApproxTarget::Circuit => {
            let c = load_circuit(args.circuit.as_ref().ok_or_else(|| usage("circuit needs --circuit"))?)?;
            let r = check_r(args.r.unwrap_or_else(|| default_r(c.n_qubits())))?;
            let circuit = CircuitDoc::from_circuit(&c);
            match &args.observable {
                Some(path) => Ok(Recipe::Heisenberg { circuit, observable: read_json(path)?, r }),
                None => {
                    if args.ell == 0 {
                        return Err(usage("--ell must be positive"));
                    }
                    Ok(Recipe::Circuit { circuit, ell: args.ell, r })
                }
            }
        }
        ApproxTarget::Choi => {
            let c = load_circuit(args.circuit.as_ref().ok_or_else(|| usage("choi needs --circuit"))?)?;
            let r = check_r(args.r.unwrap_or_else(|| default_r(args.k + c.n_qubits())))?;
            let epr_target = check_epsilon(args.eps.unwrap_or(1.0 / c.n_qubits() as f64))?;
            Ok(Recipe::Choi { circuit: CircuitDoc::from_circuit(&c), k: args.k, epr_target, r })
        }
    }
}

fn block_vector(block: &[Complex]) -> Vec<C64> {
    block.iter().map(|p| C64::new(p[0], p[1])).collect()
}

/// Re-run the construction a recipe describes.
pub fn rebuild(recipe: &Recipe) -> CliResult<ApproxCertificate> {
    Ok(match recipe {
        Recipe::Cz { arity, rho, r: None } => approx_cz_with_degree(*arity, *rho)?,
        Recipe::Cz { arity, rho, r: Some(r) } => {
            let cert = approx_cz(*arity, *r)?;
            if cert.degree != *rho {
                return Err(usage(format!("recipe degree {rho} does not match r = {r}")));
            }
            cert
        }
        Recipe::ProductState { block, count, rho } => {
            if *rho == 0 {
                return Err(usage("rho must be positive"));
            }
            approx_product_state(&block_vector(block), *count, *rho as f64)?
        }
        Recipe::Circuit { circuit, ell, r } => approx_circuit(&circuit.to_circuit()?, *ell, *r)?,
        Recipe::Heisenberg { circuit, observable, r } => {
            let a = ApproxCertificate::exact("observable", observable.to_operator()?);
            heisenberg_degree_bound(&circuit.to_circuit()?, &a, Some(*r))?
        }
        Recipe::Choi { circuit, k, epr_target, r } => {
            channel_degree_bound(&circuit.to_circuit()?, *k, Some(*epr_target), Some(*r))?
        }
    })
}

/// The exact object a recipe approximates.
pub fn exact_for(recipe: &Recipe) -> CliResult<Matrix> {
    Ok(match recipe {
        Recipe::Cz { arity, .. } => {
            check_dense(*arity)?;
            let top = (1u64 << arity) - 1;
            let diag: Vec<C64> = (0..=top).map(|x| C64::new(if x == top { -1.0 } else { 1.0 }, 0.0)).collect();
            Matrix::from_diagonal(&diag)
        }
        Recipe::ProductState { block, count, .. } => {
            let b = block_vector(block);
            let n = pauli_lens_core::linalg::qubits_for_dim(b.len())? * count;
            check_dense(n)?;
            let mut v = vec![C64::new(1.0, 0.0)];
            for _ in 0..*count {
                v = v.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
            }
            Matrix::outer(&v, &v)
        }
        Recipe::Circuit { circuit, .. } => circuit.to_circuit()?.unitary()?,
        Recipe::Heisenberg { circuit, observable, .. } => {
            circuit.to_circuit()?.heisenberg_dense(&observable.to_operator()?.to_dense()?)?
        }
        Recipe::Choi { circuit, k, .. } => normalized_choi(&circuit.to_circuit()?, *k)?,
    })
}

fn sweep(ctx: &Context, args: &ApproxArgs, count: usize) -> CliResult<Report> {
    let n_in = args.n.ok_or_else(|| usage("--random needs --n"))?;
    let total = n_in + args.ancillae;
    if n_in == 0 {
        return Err(usage("--n must be positive"));
    }
    check_dense(total)?;
    let max_arity = args.max_arity.unwrap_or(total).max(1);
    if let Some(r) = args.r {
        check_r(r)?;
    }
    let rows: Vec<CliResult<SweepRow>> = ctx.pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.rng(i as u64);
                let mut u = uniform(&mut rng);
                let c: QacCircuit = random_circuit(n_in, args.ancillae, args.depth, max_arity, &mut u);
                let q = (u() * total as f64) as usize % total;
                let sym = if u() < 0.5 { 'X' } else { 'Z' };
                let s = PauliString::single(total, q, sym)?;
                let a = PauliOperator::from_terms(total, [(s, C64::new(1.0, 0.0))])?;
                let cert = heisenberg_degree_bound(&c, &ApproxCertificate::exact("observable", a.clone()), args.r)?;
                let exact = c.heisenberg_dense(&a.to_dense()?)?;
                let rep = verify_certificate_dense(&cert, &exact)?;
                Ok(SweepRow {
                    index: i,
                    n_qubits: total,
                    depth: args.depth,
                    observable: s.to_string(),
                    certified_degree: rep.certified_degree,
                    measured_degree: rep.measured_degree,
                    ledger_epsilon: rep.ledger_epsilon,
                    distance: rep.distance,
                    passed: rep.passed(),
                })
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["index", "n_qubits", "depth", "certified_degree", "measured_degree", "ledger_epsilon", "distance", "passed"]);
    for r in &rows {
        table.push(cells![r.index, r.n_qubits, r.depth, r.certified_degree, r.measured_degree, r.ledger_epsilon, r.distance, r.passed]);
    }
    let all_passed = rows.iter().all(|r| r.passed);
    let failed = rows.iter().filter(|r| !r.passed).count();
    let text = format!("{} random circuits, {} failed", rows.len(), failed);
    let mut report = Report::new(&SweepReport {
        seed: ctx.seed,
        workers: ctx.workers,
        n_inputs: n_in,
        ancillae: args.ancillae,
        depth: args.depth,
        r: args.r,
        rows,
        all_passed,
    })?
    .with_table(table)
    .with_text(text);
    if !all_passed {
        report.failure = Some(format!("{failed} certificates failed dense verification"));
    }
    Ok(report)
}
