use clap::{Args, ValueEnum};
use pauli_lens_core::boost::{
    build_composed_circuit, compose_specs, depth_inequality_sweep, full_plan, parity_success_table, spec_of,
    step1_plan, step2_plan, threshold_report, BoostPlan, Growth,
};
use pauli_lens_core::circuit::parity_gadget;
use serde::Serialize;

use super::{check_dense, Context};
use crate::cells;
use crate::dto::{PlanDoc, SpecDoc};
use crate::error::{usage, CliResult};
use crate::io::{Report, Table};

/// Composed parity circuits are checked to this absolute tolerance.
const SUCCESS_TOL: f64 = 1e-9;

/// `--sweep` checks bound³ triples, so keep it to a few seconds.
const SWEEP_LIMIT: u64 = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoostKind {
    Compose,
    Step1,
    Step2,
    Full,
    Threshold,
}

#[derive(Args, Debug)]
pub struct BoostArgs {
    pub kind: BoostKind,
    /// Base circuit depth.
    #[arg(long)]
    pub d: Option<u64>,
    /// Base circuit inputs.
    #[arg(long)]
    pub n: Option<u64>,
    /// Ancilla exponent, `a = n^c`.
    #[arg(long)]
    pub c: Option<u64>,
    /// Number of bottom copies in step 2.
    #[arg(long)]
    pub k: Option<u64>,
    /// Ladder height `K` of the full plan.
    #[arg(long)]
    pub big_k: Option<u64>,
    /// Smallest input count the full plan must reach.
    #[arg(long, default_value_t = 1)]
    pub n0: u64,
    /// Top gadget inputs for `compose`.
    #[arg(long, default_value_t = 2)]
    pub top_n: usize,
    /// Bottom gadget inputs for `compose`.
    #[arg(long, default_value_t = 2)]
    pub bottom_n: usize,
    /// Top gadget margin.
    #[arg(long, default_value_t = 1.0)]
    pub delta_t: f64,
    /// Bottom gadget margin.
    #[arg(long, default_value_t = 1.0)]
    pub delta_b: f64,
    /// log2, ln, pow:<p> or const:<c>.
    #[arg(long, default_value = "log2")]
    pub growth: String,
    /// Depth `D` for the threshold search.
    #[arg(long)]
    pub big_d: Option<u64>,
    /// Give up on the threshold search above this `K`.
    #[arg(long, default_value_t = 1 << 40)]
    pub k_max: u64,
    /// Also check the depth inequality for all K, c, d up to this bound.
    #[arg(long)]
    pub sweep: Option<u64>,
}

#[derive(Serialize)]
struct ComposeReport {
    top_n: usize,
    bottom_n: usize,
    delta_t: f64,
    delta_b: f64,
    spec: SpecDoc,
    built_depth: usize,
    built_ancillae: usize,
    predicted_success: f64,
    measured_worst_success: f64,
    deviation: f64,
    ok: bool,
}

#[derive(Serialize)]
struct PlanReport {
    plan: PlanDoc,
    /// First `(K, c, d)` violating the depth inequality, if a sweep ran.
    sweep_max: Option<u64>,
    sweep_violation: Option<(u64, u64, u64)>,
}

#[derive(Serialize)]
struct ThresholdDoc {
    growth: String,
    big_d: u64,
    k_max: u64,
    k: Option<u64>,
    ratio: Option<f64>,
    exponents: Option<(f64, f64, f64)>,
    note: String,
}

fn need(v: Option<u64>, flag: &str) -> CliResult<u64> {
    v.ok_or_else(|| usage(format!("this plan needs --{flag}")))
}

pub fn run(_ctx: &Context, args: BoostArgs) -> CliResult<Report> {
    match args.kind {
        BoostKind::Compose => compose(&args),
        BoostKind::Step1 => plan(step1_plan(need(args.d, "d")?, need(args.n, "n")?, need(args.c, "c")?)?, None),
        BoostKind::Step2 => plan(step2_plan(need(args.d, "d")?, need(args.n, "n")?, need(args.k, "k")?)?, None),
        BoostKind::Full => plan(
            full_plan(need(args.d, "d")?, need(args.c, "c")?, need(args.big_k, "big-k")?, args.n0)?,
            args.sweep,
        ),
        BoostKind::Threshold => threshold(&args),
    }
}

fn plan(p: BoostPlan, sweep: Option<u64>) -> CliResult<Report> {
    if let Some(max) = sweep.filter(|m| *m > SWEEP_LIMIT) {
        return Err(usage(format!("--sweep {max} is above {SWEEP_LIMIT}")));
    }
    let doc = PlanDoc::new(&p);
    let mut table = Table::new(&["step", "lemma", "depth", "inputs", "ancillae", "margin", "audit_ok"]);
    for (i, s) in doc.steps.iter().enumerate() {
        table.push(cells![i, s.lemma, s.composed.depth, s.composed.inputs, s.composed.ancillae, s.composed.margin, s.audit_ok]);
    }
    let violation = sweep.and_then(depth_inequality_sweep);
    let mut failure = (!doc.audit_ok).then(|| format!("plan audit failed: {}", doc.label));
    if let Some((k, c, d)) = violation {
        failure = Some(format!("depth inequality fails at K = {k}, c = {c}, d = {d}"));
    }
    let text = doc.tree.clone();
    let mut report = Report::new(&PlanReport { plan: doc, sweep_max: sweep, sweep_violation: violation })?
        .with_table(table)
        .with_text(text);
    report.failure = failure;
    Ok(report)
}

fn compose(args: &BoostArgs) -> CliResult<Report> {
    let (n_t, n_b) = (args.top_n, args.bottom_n);
    if n_t == 0 || n_b == 0 {
        return Err(usage("--top-n and --bottom-n must be positive"));
    }
    for d in [args.delta_t, args.delta_b] {
        if !(0.0..=1.0).contains(&d) {
            return Err(usage(format!("bias {d} outside [0, 1]")));
        }
    }
    let top = parity_gadget(n_t, args.delta_t)?;
    let bottom = parity_gadget(n_b, args.delta_b)?;
    let n = n_t * n_b;
    check_dense(n + n_t * (bottom.n_ancillae + 1) + top.n_ancillae)?;
    let built = build_composed_circuit(&top, &bottom, n_t, n_b)?;
    let spec = compose_specs(&spec_of(&top, args.delta_t)?, &spec_of(&bottom, args.delta_b)?);
    let table_vals = parity_success_table(&built)?;
    let worst = table_vals.iter().copied().fold(1.0, f64::min);
    let predicted = (1.0 + args.delta_b.powi(n_t as i32) * args.delta_t) / 2.0;
    let deviation = (worst - predicted).abs();
    let ok = deviation <= SUCCESS_TOL;
    let mut table = Table::new(&["input", "success"]);
    for (x, p) in table_vals.iter().enumerate() {
        table.push(cells![x, p]);
    }
    let text = format!("worst-case success {worst:.12} vs predicted {predicted:.12}");
    let mut report = Report::new(&ComposeReport {
        top_n: n_t,
        bottom_n: n_b,
        delta_t: args.delta_t,
        delta_b: args.delta_b,
        spec: SpecDoc::new(&spec),
        built_depth: built.depth(),
        built_ancillae: built.n_ancillae,
        predicted_success: predicted,
        measured_worst_success: worst,
        deviation,
        ok,
    })?
    .with_table(table)
    .with_text(text);
    if !ok {
        report.failure = Some(format!("composed success off by {deviation:.3e}"));
    }
    Ok(report)
}

fn parse_growth(s: &str) -> CliResult<Growth> {
    let num = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("bad number in --growth {s:?}")));
    match s.split_once(':') {
        None if s == "log2" => Ok(Growth::Log2),
        None if s == "ln" => Ok(Growth::Ln),
        Some(("pow", p)) => {
            let p = num(p)?;
            if p > 0.0 {
                Ok(Growth::Power(p))
            } else {
                Err(usage("pow exponent must be positive"))
            }
        }
        Some(("const", c)) => Ok(Growth::Constant(num(c)?)),
        _ => Err(usage(format!("unknown growth {s:?}; use log2, ln, pow:<p> or const:<c>"))),
    }
}

fn threshold(args: &BoostArgs) -> CliResult<Report> {
    let growth = parse_growth(&args.growth)?;
    let big_d = need(args.big_d, "big-d")?;
    if big_d == 0 || args.k_max == 0 {
        return Err(usage("--big-d and --k-max must be positive"));
    }
    let t = threshold_report(growth, big_d, args.k_max);
    let mut table = Table::new(&["big_d", "k", "ratio"]);
    table.push(cells![
        big_d,
        t.k.map(|k| k.to_string()).unwrap_or_default(),
        t.ratio.map(|r| r.to_string()).unwrap_or_default()
    ]);
    let text = t.note.clone();
    Ok(Report::new(&ThresholdDoc {
        growth: args.growth.clone(),
        big_d,
        k_max: args.k_max,
        k: t.k,
        ratio: t.ratio,
        exponents: t.exponents,
        note: t.note,
    })?
    .with_table(table)
    .with_text(text))
}
