//! File ingestion and report emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pauli_lens_core::circuit::{parse_circuit, AncillaState, QacCircuit};
use pauli_lens_core::Error as CoreError;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dto::{CircuitDoc, MatrixDoc, StateDoc};
use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn looks_like_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('{') | Some('['))
}

/// Circuit from either the text format or its JSON mirror. Ancilla files
/// named in the text are resolved relative to the circuit file.
pub fn load_circuit(path: &Path) -> CliResult<QacCircuit> {
    let text = read_text(path)?;
    if looks_like_json(&text) {
        let doc: CircuitDoc =
            serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
        return doc.to_circuit();
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |kind: &str, file: &str| -> pauli_lens_core::Result<AncillaState> {
        let full = dir.join(file);
        let fail = |e: CliError| CoreError::Invalid(e.to_string());
        match kind {
            "mixed" => {
                let doc: MatrixDoc = read_json(&full).map_err(fail)?;
                Ok(AncillaState::Mixed(doc.to_matrix().map_err(fail)?))
            }
            _ => {
                let doc: StateDoc = read_json(&full).map_err(fail)?;
                match doc.to_state().map_err(fail)? {
                    pauli_lens_core::states::QuantumState::Pure { amplitudes, .. } => Ok(AncillaState::Pure(amplitudes)),
                    pauli_lens_core::states::QuantumState::Mixed { density, .. } => Ok(AncillaState::Mixed(density)),
                }
            }
        }
    };
    Ok(parse_circuit(&text, resolve)?)
}

/// Plot-ready numeric table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        Ok(())
    }
}

/// Shorthand for table cells.
#[macro_export]
macro_rules! cells {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

/// What a command produced.
pub struct Report {
    pub json: serde_json::Value,
    pub table: Option<Table>,
    /// Human-readable extra, printed to stderr.
    pub text: Option<String>,
    /// Set when the command checked something and it did not hold.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(value: &impl Serialize) -> CliResult<Self> {
        let json = serde_json::to_value(value).map_err(|source| CliError::Json { path: PathBuf::from("<report>"), source })?;
        Ok(Report { json, table: None, text: None, failure: None })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }
}

pub struct Sink {
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub quiet: bool,
}

impl Sink {
    pub fn emit(&self, report: &Report) -> CliResult<()> {
        let pretty = serde_json::to_string_pretty(&report.json)
            .map_err(|source| CliError::Json { path: PathBuf::from("<report>"), source })?;
        match &self.out {
            Some(path) => fs::write(path, pretty + "\n").map_err(|source| CliError::Write { path: path.clone(), source })?,
            None => {
                let mut stdout = std::io::stdout().lock();
                writeln!(stdout, "{pretty}").map_err(|source| CliError::Write { path: PathBuf::from("<stdout>"), source })?;
            }
        }
        if let Some(table) = &report.table {
            let csv_path = self.csv.clone().or_else(|| self.out.as_ref().map(|p| p.with_extension("csv")));
            if let Some(path) = csv_path {
                table.write_csv(&path)?;
            }
        }
        if let (Some(text), false) = (&report.text, self.quiet) {
            eprintln!("{text}");
        }
        Ok(())
    }
}
