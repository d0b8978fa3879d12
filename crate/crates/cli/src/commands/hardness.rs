use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pauli_lens_core::boolfn::{
    average_case_report, best_low_degree_agreement, circuit_requirement, postprocessing_requirement,
    postprocessing_requirement_by_weight, postprocessing_separations, worst_case_requirement,
    worst_case_requirement_by_weight, RequirementReport, RequirementRow, Verdict, GENERAL_LP_LIMIT,
};
use pauli_lens_core::lowdeg::verify_certificate_dense;
use pauli_lens_core::states::{
    cb_norm_check, channel_degree_bound, concentration_violation_degree_lb, make_cat, normalized_choi,
    state_degree_lb, synthesis_requirement, synthesis_requirement_with, QuantumState, SynthesisReport,
};
use serde::Serialize;

use super::{check_epsilon, check_r, load_function, uniform, wide_named, Context};
use crate::cells;
use crate::dto::{CertificateDoc, CircuitDoc, Recipe, StateDoc, EXPLICIT_LIMIT};
use crate::error::{usage, CliResult};
use crate::io::{load_circuit, read_json, Report, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HardnessKind {
    Worst,
    Average,
    Postproc,
    Synthesis,
    Channel,
}

#[derive(Args, Debug)]
pub struct HardnessArgs {
    pub kind: HardnessKind,
    /// parity, majority or mod<k>.
    #[arg(long)]
    pub named: Option<String>,
    /// Input count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Truth-table JSON file.
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Allowed worst-case (or synthesis) error of the circuit.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Ancilla count of the circuit shape.
    #[arg(long, default_value_t = 0)]
    pub ancillae: usize,
    /// Depth of the circuit shape.
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    /// Degree of the post-processing observable.
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    /// Degree cutoff for the average-case bound.
    #[arg(long)]
    pub k: Option<usize>,
    /// Slack for `average`, EPR target for `channel`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Degree parameter `r` for the circuit ledger.
    #[arg(long)]
    pub r: Option<f64>,
    /// Analyze this concrete circuit instead of all shapes.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Second circuit for the channel-distance check.
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Target state file for `synthesis`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Use the n-qubit cat state as the synthesis target.
    #[arg(long)]
    pub cat: Option<usize>,
    /// Also use the Hadamard-basis concentration branch.
    #[arg(long)]
    pub hadamard: bool,
    /// Random operators sampled by the channel-distance check.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Vacuous => "vacuous",
        Verdict::Incompatible => "incompatible",
        Verdict::Consistent => "consistent",
    }
}

#[derive(Serialize)]
struct RowDoc {
    r: f64,
    ledger_degree: usize,
    circuit_epsilon: f64,
    effective_epsilon: f64,
    exact_degree: Option<usize>,
    verdict: &'static str,
}

impl RowDoc {
    fn new(r: &RequirementRow) -> Self {
        RowDoc {
            r: r.r,
            ledger_degree: r.ledger_degree,
            circuit_epsilon: r.circuit_epsilon,
            effective_epsilon: r.effective_epsilon,
            exact_degree: r.exact_degree,
            verdict: verdict_name(r.verdict),
        }
    }
}

#[derive(Serialize)]
struct RequirementDoc {
    label: String,
    n: usize,
    ancillae: usize,
    depth: usize,
    seed_degree: usize,
    delta: f64,
    default_r: f64,
    rows: Vec<RowDoc>,
    verdict: &'static str,
}

impl RequirementDoc {
    fn new(r: &RequirementReport) -> Self {
        RequirementDoc {
            label: r.label.clone(),
            n: r.n,
            ancillae: r.ancillae,
            depth: r.depth,
            seed_degree: r.seed_degree,
            delta: r.delta,
            default_r: r.default_r,
            rows: r.rows.iter().map(RowDoc::new).collect(),
            verdict: verdict_name(r.verdict),
        }
    }
}

fn requirement_table(reports: &[(String, &RequirementReport)]) -> Table {
    let mut t = Table::new(&["function", "r", "ledger_degree", "circuit_epsilon", "effective_epsilon", "exact_degree", "verdict"]);
    for (label, rep) in reports {
        for row in &rep.rows {
            t.push(cells![
                label,
                row.r,
                row.ledger_degree,
                row.circuit_epsilon,
                row.effective_epsilon,
                row.exact_degree.map(|d| d.to_string()).unwrap_or_default(),
                verdict_name(row.verdict)
            ]);
        }
    }
    t
}

fn check_delta(delta: f64) -> CliResult<f64> {
    if (0.0..=1.0).contains(&delta) {
        Ok(delta)
    } else {
        Err(usage(format!("--delta {delta} outside [0, 1]")))
    }
}

pub fn run(ctx: &Context, args: HardnessArgs) -> CliResult<Report> {
    check_delta(args.delta)?;
    match args.kind {
        HardnessKind::Worst => worst(&args),
        HardnessKind::Average => average(&args),
        HardnessKind::Postproc => postproc(&args),
        HardnessKind::Synthesis => synthesis(&args),
        HardnessKind::Channel => channel(ctx, &args),
    }
}

#[derive(Serialize)]
struct CircuitRequirementDoc {
    row: RowDoc,
    certificate: CertificateDoc,
}

fn worst(args: &HardnessArgs) -> CliResult<Report> {
    if let (Some(by_weight), None, None) = (wide_named(args.named.as_deref(), args.n)?, &args.circuit, &args.function) {
        let rep = worst_case_requirement_by_weight(&by_weight, args.ancillae, args.depth, args.delta)?;
        let text = summary(&rep);
        return Ok(Report::new(&RequirementDoc::new(&rep))?
            .with_table(requirement_table(&[(String::from("f"), &rep)]))
            .with_text(text));
    }
    let f = load_function(args.named.as_deref(), args.n, args.function.as_ref())?;
    if let Some(path) = &args.circuit {
        let c = load_circuit(path)?;
        let r = args.r.map(check_r).transpose()?;
        let (row, cert) = circuit_requirement(&f, &c, args.delta, r)?;
        let recipe_r = row.r;
        let text = format!("degree {} vs ledger {}: {}", show(row.exact_degree), row.ledger_degree, verdict_name(row.verdict));
        let mut table = Table::new(&["r", "ledger_degree", "effective_epsilon", "exact_degree", "verdict"]);
        table.push(cells![row.r, row.ledger_degree, row.effective_epsilon, show(row.exact_degree), verdict_name(row.verdict)]);
        let certificate = CertificateDoc::new(
            &cert,
            Recipe::Heisenberg {
                circuit: CircuitDoc::from_circuit(&c),
                observable: crate::dto::OperatorDoc::from_operator(&pauli_lens_core::PauliOperator::projector_one(
                    c.n_qubits(),
                    c.output,
                )?),
                r: recipe_r,
            },
        );
        return Ok(Report::new(&CircuitRequirementDoc { row: RowDoc::new(&row), certificate })?
            .with_table(table)
            .with_text(text));
    }
    let rep = worst_case_requirement(&f, f.n(), args.ancillae, args.depth, args.delta)?;
    let text = summary(&rep);
    Ok(Report::new(&RequirementDoc::new(&rep))?
        .with_table(requirement_table(&[(String::from("f"), &rep)]))
        .with_text(text))
}

fn show(d: Option<usize>) -> String {
    d.map(|d| d.to_string()).unwrap_or_else(|| "-".into())
}

fn summary(rep: &RequirementReport) -> String {
    let row = rep.default_row();
    format!(
        "{}: {} (default r: ledger degree {}, exact degree {})",
        rep.label,
        verdict_name(rep.verdict),
        row.ledger_degree,
        show(row.exact_degree)
    )
}

#[derive(Serialize)]
struct AverageDoc {
    n: usize,
    k: usize,
    epsilon: f64,
    weight_above: f64,
    signed_weight_above: f64,
    chain_value: f64,
    final_raw: f64,
    value: f64,
    /// LP optimum over degree-k predictors; present for small `n`.
    best_agreement: Option<f64>,
}

fn average(args: &HardnessArgs) -> CliResult<Report> {
    let f = load_function(args.named.as_deref(), args.n, args.function.as_ref())?;
    let k = args.k.ok_or_else(|| usage("average needs --k"))?;
    let eps = check_epsilon(args.eps.unwrap_or(0.0))?;
    let rep = average_case_report(&f, k, eps)?;
    let best_agreement = if f.n() <= GENERAL_LP_LIMIT { Some(best_low_degree_agreement(&f, k)?) } else { None };
    let mut table = Table::new(&["degree", "weight_01", "weight_signed"]);
    for (d, (w, s)) in f.level_weights().iter().zip(f.signed_level_weights()).enumerate() {
        table.push(cells![d, w, s]);
    }
    let text = format!("average-case success at most {:.6} (W^>k = {:.6})", rep.value, rep.weight_above);
    Ok(Report::new(&AverageDoc {
        n: f.n(),
        k,
        epsilon: eps,
        weight_above: rep.weight_above,
        signed_weight_above: rep.signed_weight_above,
        chain_value: rep.chain_value,
        final_raw: rep.final_raw,
        value: rep.value,
        best_agreement,
    })?
    .with_table(table)
    .with_text(text))
}

fn postproc(args: &HardnessArgs) -> CliResult<Report> {
    if let (Some(by_weight), None) = (wide_named(args.named.as_deref(), args.n)?, &args.function) {
        let rep = postprocessing_requirement_by_weight(&by_weight, args.ancillae, args.depth, args.ell, args.delta)?;
        let text = summary(&rep);
        return Ok(Report::new(&RequirementDoc::new(&rep))?
            .with_table(requirement_table(&[(String::from("f"), &rep)]))
            .with_text(text));
    }
    if args.named.is_some() || args.function.is_some() {
        let f = load_function(args.named.as_deref(), args.n, args.function.as_ref())?;
        let rep = postprocessing_requirement(&f, f.n(), args.ancillae, args.depth, args.ell, args.delta)?;
        let text = summary(&rep);
        return Ok(Report::new(&RequirementDoc::new(&rep))?
            .with_table(requirement_table(&[(String::from("f"), &rep)]))
            .with_text(text));
    }
    let n = args.n.ok_or_else(|| usage("postproc needs --n or a function"))?;
    let reps = postprocessing_separations(n, args.ancillae, args.depth, args.ell, args.delta)?;
    let docs: Vec<_> = reps.iter().map(|(l, r)| (l.clone(), RequirementDoc::new(r))).collect();
    let table = requirement_table(&reps.iter().map(|(l, r)| (l.clone(), r)).collect::<Vec<_>>());
    let text = reps.iter().map(|(_, r)| summary(r)).collect::<Vec<_>>().join("\n");
    Ok(Report::new(&docs)?.with_table(table).with_text(text))
}

#[derive(Serialize)]
struct SynthesisRowDoc {
    r: f64,
    ledger_degree: usize,
    ledger_epsilon: f64,
    effective_epsilon: f64,
    lower_bound: usize,
    verdict: &'static str,
}

#[derive(Serialize)]
struct SynthesisDoc {
    n: usize,
    ancillae: usize,
    depth: usize,
    delta: f64,
    hadamard_branch: bool,
    /// The target itself, for registers up to the explicit limit.
    target: Option<StateDoc>,
    zero_state_degree: usize,
    zero_state_error: f64,
    delta0: f64,
    below_delta0: bool,
    asymptotic_degree: f64,
    default_r: f64,
    rows: Vec<SynthesisRowDoc>,
    verdict: &'static str,
}

impl SynthesisDoc {
    fn new(s: &SynthesisReport, hadamard_branch: bool, target: &QuantumState) -> Self {
        SynthesisDoc {
            n: s.n,
            ancillae: s.ancillae,
            depth: s.depth,
            delta: s.delta,
            hadamard_branch,
            target: (target.n() <= EXPLICIT_LIMIT).then(|| StateDoc::from_state(target)),
            zero_state_degree: s.zero_state_degree,
            zero_state_error: s.zero_state_error,
            delta0: s.delta0,
            below_delta0: s.below_delta0,
            asymptotic_degree: s.asymptotic_degree,
            default_r: s.default_r,
            rows: s
                .rows
                .iter()
                .map(|r| SynthesisRowDoc {
                    r: r.r,
                    ledger_degree: r.ledger_degree,
                    ledger_epsilon: r.ledger_epsilon,
                    effective_epsilon: r.effective_epsilon,
                    lower_bound: r.lower_bound,
                    verdict: verdict_name(r.verdict),
                })
                .collect(),
            verdict: verdict_name(s.verdict),
        }
    }
}

fn synthesis(args: &HardnessArgs) -> CliResult<Report> {
    let target: QuantumState = match (&args.state, args.cat) {
        (Some(path), None) => read_json::<StateDoc>(path)?.to_state()?,
        (None, Some(n)) => make_cat(n)?,
        (Some(_), Some(_)) => return Err(usage("give either --state or --cat, not both")),
        (None, None) => return Err(usage("synthesis needs --state or --cat")),
    };
    if !target.is_pure() {
        return Err(usage("synthesis targets must be pure"));
    }
    let rep = if args.hadamard {
        synthesis_requirement_with(target.n(), args.ancillae, args.depth, args.delta, |eps| state_degree_lb(&target, eps))?
    } else {
        synthesis_requirement(&target, args.ancillae, args.depth, args.delta)?
    };
    let mut table = Table::new(&["r", "ledger_degree", "ledger_epsilon", "effective_epsilon", "lower_bound", "verdict"]);
    for r in &rep.rows {
        table.push(cells![r.r, r.ledger_degree, r.ledger_epsilon, r.effective_epsilon, r.lower_bound, verdict_name(r.verdict)]);
    }
    let lb0 = concentration_violation_degree_lb(&target, 0.0)?.lower_bound;
    let text = format!(
        "synthesis of a {}-qubit target at depth {}: {} (exact-state degree bound {})",
        rep.n,
        rep.depth,
        verdict_name(rep.verdict),
        lb0
    );
    Ok(Report::new(&SynthesisDoc::new(&rep, args.hadamard, &target))?.with_table(table).with_text(text))
}

#[derive(Serialize)]
struct ChannelDoc {
    seed: u64,
    certificate: CertificateDoc,
    choi_distance: Option<f64>,
    verified: Option<bool>,
    cb_check: Option<CbDoc>,
}

#[derive(Serialize)]
struct CbDoc {
    samples: usize,
    choi_distance: f64,
    cb_lower_estimate: f64,
    confirmed: bool,
}

fn channel(ctx: &Context, args: &HardnessArgs) -> CliResult<Report> {
    let path = args.circuit.as_ref().ok_or_else(|| usage("channel needs --circuit"))?;
    let c = load_circuit(path)?;
    let k = args.k.unwrap_or(1);
    let r = check_r(args.r.unwrap_or_else(|| pauli_lens_core::lowdeg::default_r(k + c.n_qubits())))?;
    let epr_target = check_epsilon(args.eps.unwrap_or(1.0 / c.n_qubits() as f64))?;
    let cert = channel_degree_bound(&c, k, Some(epr_target), Some(r))?;
    let dense_ok = k + c.n_qubits() <= pauli_lens_core::dense_limit();
    let (choi_distance, verified) = if dense_ok {
        let rep = verify_certificate_dense(&cert, &normalized_choi(&c, k)?)?;
        (Some(rep.distance), Some(rep.passed()))
    } else {
        (None, None)
    };
    let cb_check = match &args.other {
        Some(p) => {
            let other = load_circuit(p)?;
            let mut rng = ctx.rng(0);
            let chk = cb_norm_check(&c, &other, k, args.samples, &mut uniform(&mut rng))?;
            Some(CbDoc {
                samples: args.samples,
                choi_distance: chk.choi_distance,
                cb_lower_estimate: chk.cb_lower_estimate,
                confirmed: chk.confirmed,
            })
        }
        None => None,
    };
    let mut table = Table::new(&["k", "degree", "epsilon", "choi_distance"]);
    table.push(cells![k, cert.degree, cert.ledger.epsilon, choi_distance.map(|d| d.to_string()).unwrap_or_default()]);
    let text = format!("normalized Choi matrix: degree {} within {:.4e}", cert.degree, cert.ledger.epsilon);
    let certificate =
        CertificateDoc::new(&cert, Recipe::Choi { circuit: CircuitDoc::from_circuit(&c), k, epr_target, r });
    let failure = (verified == Some(false)).then(|| String::from("Choi certificate failed dense verification"));
    let mut report = Report::new(&ChannelDoc { seed: ctx.seed, certificate, choi_distance, verified, cb_check })?
        .with_table(table)
        .with_text(text);
    report.failure = failure;
    Ok(report)
}
