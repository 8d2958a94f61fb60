use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Cell, Command, Format, RunConfig};
use crate::error::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoClosedForm,
    SolverFail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoClosedForm => "no_closed_form",
            Status::SolverFail => "solver_fail",
        }
    }
}

/// What the `x` of a trace point is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// `x = δ`, value = quotient of `u_δ`.
    Delta,
    /// `x = h`, value = strip energy `I_h`.
    H,
    /// `x = θ`, value = minimizer.
    Profile,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Delta => "delta",
            TraceKind::H => "h",
            TraceKind::Profile => "profile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub command: Command,
    pub d: usize,
    pub k: usize,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub cone: String,
    pub mesh: usize,
    /// The Hardy exponent `H`.
    pub h: f64,
    pub closed_form: Option<f64>,
    pub closed_form_source: Option<String>,
    #[serde(rename = "numeric_M")]
    pub numeric_m: Option<f64>,
    pub lambda: Option<f64>,
    /// `numeric_m − closed_form`, present iff both are.
    pub gap: Option<f64>,
    pub trace_kind: Option<TraceKind>,
    pub quotient_trace: Vec<TracePoint>,
    pub extrapolated: Option<f64>,
    pub observed_order: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub checks_passed: Option<bool>,
    pub status: Status,
    pub message: Option<String>,
}

impl ReportRow {
    pub fn new(command: Command, cell: &Cell, mesh: usize) -> Self {
        let p = &cell.params;
        Self {
            command,
            d: p.d(),
            k: p.k(),
            p: p.p(),
            a: p.a(),
            b: p.b(),
            cone: cell.cone.to_string(),
            mesh,
            h: hardy_core::hardy_exponent(p).h,
            closed_form: None,
            closed_form_source: None,
            numeric_m: None,
            lambda: None,
            gap: None,
            trace_kind: None,
            quotient_trace: Vec::new(),
            extrapolated: None,
            observed_order: None,
            fitted_rate: None,
            checks_passed: None,
            status: Status::Ok,
            message: None,
        }
    }

    /// Failed rows, failed checks, and gaps beyond `tol · max(1, |closed|)`.
    pub fn is_failure(&self, tol: f64) -> bool {
        if self.status == Status::SolverFail || self.checks_passed == Some(false) {
            return true;
        }
        match (self.gap, self.closed_form) {
            (Some(gap), Some(closed)) => !(gap.abs() <= tol * closed.abs().max(1.0)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub config: RunConfig,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(config: RunConfig, rows: Vec<ReportRow>) -> Self {
        Self {
            schema: SCHEMA,
            config,
            rows,
        }
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| !r.is_failure(self.config.tol))
    }

    pub fn render(&self) -> Result<Vec<u8>, CliError> {
        match self.config.format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self).map_err(|e| CliError::Encode(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => render_csv(&self.rows),
        }
    }

    /// Writes to the configured path via a temporary file in the same
    /// directory and a rename, or to stdout.
    pub fn write(&self) -> Result<(), CliError> {
        let bytes = self.render()?;
        match &self.config.output_path {
            Some(path) => write_atomic(path, &bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes)
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Io {
                        path: "<stdout>".into(),
                        source,
                    })
            }
        }
    }
}

pub const CSV_HEADER: [&str; 22] = [
    "command",
    "d",
    "k",
    "p",
    "a",
    "b",
    "cone",
    "mesh",
    "h",
    "closed_form",
    "closed_form_source",
    "numeric_M",
    "lambda",
    "gap",
    "trace_kind",
    "trace",
    "extrapolated",
    "observed_order",
    "fitted_rate",
    "checks_passed",
    "status",
    "message",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_csv(rows: &[ReportRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let encode = |e: csv::Error| CliError::Encode(e.to_string());
    w.write_record(CSV_HEADER).map_err(encode)?;
    for r in rows {
        let trace = r
            .quotient_trace
            .iter()
            .map(|t| format!("{}:{}", t.x, t.value))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.command.as_str().to_string(),
            r.d.to_string(),
            r.k.to_string(),
            r.p.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.cone.clone(),
            r.mesh.to_string(),
            r.h.to_string(),
            opt(r.closed_form),
            r.closed_form_source.clone().unwrap_or_default(),
            opt(r.numeric_m),
            opt(r.lambda),
            opt(r.gap),
            r.trace_kind.map(|t| t.as_str().to_string()).unwrap_or_default(),
            trace,
            opt(r.extrapolated),
            opt(r.observed_order),
            opt(r.fitted_rate),
            r.checks_passed.map(|c| c.to_string()).unwrap_or_default(),
            r.status.as_str().to_string(),
            r.message.clone().unwrap_or_default(),
        ])
        .map_err(encode)?;
    }
    w.into_inner().map_err(|e| CliError::Encode(e.to_string()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardy_core::{ConeSpec, HardyParams};

    fn row() -> ReportRow {
        let cell = Cell {
            params: HardyParams::new(3, 1, 2.0, 0.0, 0.0).unwrap(),
            cone: ConeSpec::ComplementSigma0,
        };
        ReportRow::new(Command::Constant, &cell, 8)
    }

    #[test]
    fn failure_rules() {
        let mut r = row();
        assert!(!r.is_failure(1e-3));
        r.closed_form = Some(2.25);
        r.gap = Some(2e-3);
        assert!(!r.is_failure(1e-3));
        r.gap = Some(3e-3);
        assert!(r.is_failure(1e-3));
        r.gap = Some(f64::NAN);
        assert!(r.is_failure(1e-3));
        let mut r = row();
        r.checks_passed = Some(false);
        assert!(r.is_failure(1.0));
        let mut r = row();
        r.status = Status::NoClosedForm;
        assert!(!r.is_failure(1e-3));
        r.status = Status::SolverFail;
        assert!(r.is_failure(1e-3));
    }

    #[test]
    fn csv_escapes_messages() {
        let mut r = row();
        r.message = Some("a, \"b\"\nc".into());
        let text = String::from_utf8(render_csv(&[r]).unwrap()).unwrap();
        assert!(text.contains("\"a, \"\"b\"\"\nc\""));
    }
}
