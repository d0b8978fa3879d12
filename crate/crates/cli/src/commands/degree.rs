use std::path::PathBuf;

use clap::Args;
use pauli_lens_core::boolfn::{
    approx_degree, approx_degree_by_weight, approx_degree_signed, error_profile, error_profile_by_weight,
};
use serde::Serialize;

use super::{check_epsilon, load_function, wide_named, Context};
use crate::cells;
use crate::dto::DegreeDoc;
use crate::error::CliResult;
use crate::io::{Report, Table};

#[derive(Args, Debug)]
pub struct DegreeArgs {
    /// parity, majority or mod<k>.
    #[arg(long)]
    pub named: Option<String>,
    /// Arity for `--named`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Truth-table JSON file.
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Error budget.
    #[arg(long)]
    pub eps: f64,
    /// Measure the error on the ±1 form `2f − 1`.
    #[arg(long)]
    pub signed: bool,
}

#[derive(Serialize)]
struct DegreeReport {
    n: usize,
    signed: bool,
    query: DegreeDoc,
    /// Best error of the 0/1 form at each degree.
    error_profile: Vec<f64>,
}

pub fn run(_ctx: &Context, args: DegreeArgs) -> CliResult<Report> {
    let eps = check_epsilon(args.eps)?;
    let (n, q, profile) = match wide_named(args.named.as_deref(), args.n)? {
        Some(by_weight) if args.function.is_none() => {
            let mut q = approx_degree_by_weight(&by_weight, if args.signed { eps / 2.0 } else { eps })?;
            q.epsilon = eps;
            (by_weight.len() - 1, q, error_profile_by_weight(&by_weight)?)
        }
        _ => {
            let f = load_function(args.named.as_deref(), args.n, args.function.as_ref())?;
            let q = if args.signed { approx_degree_signed(&f, eps)? } else { approx_degree(&f, eps)? };
            (f.n(), q, error_profile(&f)?)
        }
    };
    let mut table = Table::new(&["degree", "best_error"]);
    for (d, e) in profile.iter().enumerate() {
        table.push(cells![d, e]);
    }
    let text = format!(
        "approximate degree {} at eps {} ({}certified)",
        q.degree,
        eps,
        if q.certified { "" } else { "not " }
    );
    Ok(Report::new(&DegreeReport { n, signed: args.signed, query: DegreeDoc::new(&q), error_profile: profile })?
        .with_table(table)
        .with_text(text))
}
