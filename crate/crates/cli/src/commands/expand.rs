use std::path::PathBuf;

use clap::Args;
use pauli_lens_core::boolfn::embed_as_operator;
use pauli_lens_core::PauliOperator;
use serde::Serialize;

use super::Context;
use crate::cells;
use crate::dto::{FunctionDoc, MatrixDoc, OperatorDoc, StateDoc};
use crate::error::{usage, CliError, CliResult};
use crate::io::{load_circuit, looks_like_json, read_json, read_text, Report, Table};

#[derive(Args, Debug)]
pub struct ExpandArgs {
    /// Circuit (text or JSON), matrix, state or function file.
    pub input: PathBuf,
    /// Expand `U†AU` for this observable instead of `U` itself.
    #[arg(long)]
    pub observable: Option<PathBuf>,
    /// Drop coefficients with modulus at or below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Serialize)]
struct ExpandReport {
    source: String,
    degree: usize,
    level_weights: Vec<f64>,
    operator: OperatorDoc,
}

pub fn run(_ctx: &Context, args: ExpandArgs) -> CliResult<Report> {
    let text = read_text(&args.input)?;
    let (source, op) = if looks_like_json(&text) {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|source| CliError::Json { path: args.input.clone(), source })?;
        let has = |k: &str| value.get(k).is_some();
        if has("n_inputs") {
            circuit_operator(&args)?
        } else if has("rows") {
            let m: MatrixDoc = read_json(&args.input)?;
            ("matrix".into(), PauliOperator::expand_with_tolerance(&m.to_matrix()?, args.tol)?)
        } else if has("table") {
            let f: FunctionDoc = read_json(&args.input)?;
            ("boolean function".into(), embed_as_operator(&f.to_function()?)?)
        } else {
            let s: StateDoc = read_json(&args.input)?;
            ("state".into(), s.to_state()?.to_pauli()?)
        }
    } else {
        circuit_operator(&args)?
    };
    let op = op.pruned(args.tol);
    let mut table = Table::new(&["pauli", "re", "im", "weight"]);
    let doc = OperatorDoc::from_operator(&op);
    for t in &doc.terms {
        let weight = t.pauli.chars().filter(|c| *c != 'I').count();
        table.push(cells![t.pauli, t.re, t.im, weight]);
    }
    let report = ExpandReport { source, degree: op.degree(), level_weights: op.level_weights(), operator: doc };
    Ok(Report::new(&report)?.with_table(table))
}

fn circuit_operator(args: &ExpandArgs) -> CliResult<(String, PauliOperator)> {
    let c = load_circuit(&args.input)?;
    match &args.observable {
        None => {
            let u = c.unitary()?;
            Ok(("circuit unitary".into(), PauliOperator::expand_with_tolerance(&u, args.tol)?))
        }
        Some(path) => {
            let a = read_json::<OperatorDoc>(path)?.to_operator()?;
            if a.n() != c.n_qubits() {
                return Err(usage(format!("observable has {} qubits, circuit has {}", a.n(), c.n_qubits())));
            }
            Ok(("Heisenberg-evolved observable".into(), c.heisenberg(&a)?))
        }
    }
}
