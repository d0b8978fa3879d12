use std::path::PathBuf;

use clap::Args;
use pauli_lens_core::linalg::spectral_norm;
use pauli_lens_core::lowdeg::{verify_certificate_dense, VERIFY_TOL};
use pauli_lens_core::{Matrix, PauliOperator};
use serde::Serialize;
use serde_json::Value;

use super::approx::{exact_for, rebuild, VerificationDoc};
use super::{check_dense, Context};
use crate::cells;
use crate::dto::{CertificateDoc, MatrixDoc, OperatorDoc};
use crate::error::{CliError, CliResult};
use crate::io::{read_json, Report, Table};

/// Relative slack when comparing stored numbers with a rebuild.
const CLAIM_TOL: f64 = 1e-9;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Certificate JSON, bare or as written by `approx`.
    pub certificate: PathBuf,
    /// Exact object (matrix or Pauli operator JSON). Defaults to the one the
    /// recipe describes.
    #[arg(long)]
    pub exact: Option<PathBuf>,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    target: String,
    checks: Vec<Check>,
    rebuilt: VerificationDoc,
    /// Distance from the stored approximant to the exact object.
    stored_distance: Option<f64>,
    passed: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLAIM_TOL * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= 1e-15
}

fn load_exact(path: &PathBuf) -> CliResult<Matrix> {
    let v: Value = read_json(path)?;
    let json = |source| CliError::Json { path: path.clone(), source };
    if v.get("rows").is_some() {
        serde_json::from_value::<MatrixDoc>(v).map_err(json)?.to_matrix()
    } else {
        let op = serde_json::from_value::<OperatorDoc>(v).map_err(json)?.to_operator()?;
        check_dense(op.n())?;
        Ok(op.to_dense()?)
    }
}

pub fn run(_ctx: &Context, args: VerifyArgs) -> CliResult<Report> {
    let mut v: Value = read_json(&args.certificate)?;
    if let Some(inner) = v.get_mut("certificate") {
        v = inner.take();
    }
    let doc: CertificateDoc =
        serde_json::from_value(v).map_err(|source| CliError::Json { path: args.certificate.clone(), source })?;
    let cert = rebuild(&doc.recipe)?;
    check_dense(cert.n)?;
    let exact = match &args.exact {
        Some(p) => load_exact(p)?,
        None => exact_for(&doc.recipe)?,
    };
    let mut checks = vec![
        Check { name: "qubits", ok: cert.n == doc.n, detail: format!("stored {} rebuilt {}", doc.n, cert.n) },
        Check {
            name: "degree_claim",
            ok: cert.degree == doc.degree,
            detail: format!("stored {} rebuilt {}", doc.degree, cert.degree),
        },
        Check {
            name: "epsilon_claim",
            ok: close(cert.ledger.epsilon, doc.epsilon),
            detail: format!("stored {:e} rebuilt {:e}", doc.epsilon, cert.ledger.epsilon),
        },
    ];
    let same = |a: f64, b: f64| (a.is_nan() && !b.is_finite()) || (!a.is_finite() && b.is_nan()) || a == b || close(a, b);
    checks.push(Check {
        name: "closed_form_bounds",
        ok: same(doc.closed_form_degree, cert.closed_form_degree)
            && same(doc.closed_form_error, cert.closed_form_error)
            && doc.closed_forms_apply == cert.closed_forms_apply,
        detail: format!(
            "stored ({}, {}) rebuilt ({}, {})",
            doc.closed_form_degree, doc.closed_form_error, cert.closed_form_degree, cert.closed_form_error
        ),
    });
    let rep = verify_certificate_dense(&cert, &exact)?;
    checks.push(Check {
        name: "distance",
        ok: rep.distance <= doc.epsilon + VERIFY_TOL,
        detail: format!("{:e} vs claimed {:e}", rep.distance, doc.epsilon),
    });
    checks.push(Check {
        name: "measured_degree",
        ok: rep.measured_degree <= doc.degree,
        detail: format!("{} vs claimed {}", rep.measured_degree, doc.degree),
    });
    let mut stored_distance = None;
    if let Some(stored) = &doc.approximant {
        let op: PauliOperator = stored.to_operator()?;
        let diff = op.sub(&cert.explicit_operator()?)?;
        let worst = diff.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        checks.push(Check { name: "stored_approximant", ok: worst <= CLAIM_TOL, detail: format!("max coefficient gap {worst:e}") });
        if op.n() == exact.rows().trailing_zeros() as usize {
            let d = spectral_norm(&op.to_dense()?.sub(&exact))?;
            stored_distance = Some(d);
            checks.push(Check {
                name: "stored_distance",
                ok: d <= doc.epsilon + VERIFY_TOL,
                detail: format!("{d:e} vs claimed {:e}", doc.epsilon),
            });
        }
    }
    let passed = checks.iter().all(|c| c.ok);
    let mut table = Table::new(&["check", "ok", "detail"]);
    for c in &checks {
        table.push(cells![c.name, c.ok, c.detail]);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name).collect();
    let text = if passed { format!("{}: all {} checks pass", doc.target, checks.len()) } else { format!("failed: {}", failed.join(", ")) };
    let failure = (!passed).then(|| failed.join(", "));
    let mut report = Report::new(&VerifyReport {
        target: doc.target.clone(),
        checks,
        rebuilt: VerificationDoc::new(&rep),
        stored_distance,
        passed,
    })?
    .with_table(table)
    .with_text(text);
    report.failure = failure;
    Ok(report)
}
