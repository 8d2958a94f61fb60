use hardy_core::{
    closed_form_constant, cutoff_decay, log_log_slope, richardson_delta2, solve_m, verify_inequality, HardyError,
    RadialProfile, SeparatedTestFunction, SpectralResult,
};
use rayon::prelude::*;

use crate::config::{Cell, Command, RunConfig};
use crate::error::CliError;
use crate::report::{ReportRow, Status, TraceKind, TracePoint};

/// Radial support of the model function in the cutoff energies.
const CUTOFF_SUPPORT: (f64, f64) = (0.5, 2.0);

/// Evaluates every cell, at most `jobs` at a time. Row order follows the
/// cell order whatever the scheduling.
pub fn run(config: &RunConfig) -> Result<Vec<ReportRow>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", config.jobs)))?;
    let rows: Vec<Vec<ReportRow>> = pool.install(|| {
        config
            .cells
            .par_iter()
            .map(|cell| match config.command {
                Command::Constant | Command::Sweep | Command::Table => {
                    vec![constant_row(config.command, cell, config.mesh_size)]
                }
                Command::Spectrum => vec![spectrum_row(cell, config.mesh_size)],
                Command::Verify => verify_rows(cell, config),
            })
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

fn fail(mut row: ReportRow, e: &HardyError) -> ReportRow {
    row.status = Status::SolverFail;
    row.message = Some(e.to_string());
    row
}

/// Fills the closed form, the numeric minimum and their gap.
fn base_row(command: Command, cell: &Cell, mesh: usize) -> (ReportRow, Option<SpectralResult>) {
    let mut row = ReportRow::new(command, cell, mesh);
    match closed_form_constant(&cell.params, &cell.cone) {
        Ok(Some(form)) => {
            row.closed_form = Some(form.value);
            row.closed_form_source = Some(form.source.to_string());
        }
        Ok(None) => row.status = Status::NoClosedForm,
        Err(e) => return (fail(row, &e), None),
    }
    match solve_m(&cell.params, &cell.cone, mesh) {
        Ok(res) => {
            row.numeric_m = Some(res.m);
            row.lambda = res.lambda;
            row.gap = row.closed_form.map(|c| res.m - c);
            (row, Some(res))
        }
        Err(e) => (fail(row, &e), None),
    }
}

pub fn constant_row(command: Command, cell: &Cell, mesh: usize) -> ReportRow {
    base_row(command, cell, mesh).0
}

pub fn spectrum_row(cell: &Cell, mesh: usize) -> ReportRow {
    let (mut row, res) = base_row(Command::Spectrum, cell, mesh);
    if let Some(res) = res {
        row.trace_kind = Some(TraceKind::Profile);
        row.quotient_trace = res
            .minimizer
            .mesh
            .iter()
            .zip(&res.minimizer.values)
            .map(|(&x, &value)| TracePoint { x, value })
            .collect();
    }
    row
}

/// A `u_δ` row, and a strip-energy row when cutoff levels are requested.
pub fn verify_rows(cell: &Cell, config: &RunConfig) -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(2);
    let (mut row, res) = base_row(Command::Verify, cell, config.mesh_size);
    row.trace_kind = Some(TraceKind::Delta);
    if let Some(res) = res {
        let reference = row.closed_form.unwrap_or(res.m);
        let slack = config.tol * reference.abs().max(1.0);
        let trace: Result<Vec<TracePoint>, HardyError> = config
            .delta_list
            .iter()
            .map(|&delta| {
                let tf = SeparatedTestFunction {
                    radial: RadialProfile::PowerLawSplit { delta },
                    angular: res.minimizer.clone(),
                };
                verify_inequality(&cell.params, &cell.cone, &tf).map(|ev| TracePoint {
                    x: delta,
                    value: ev.quotient,
                })
            })
            .collect();
        match trace {
            Ok(trace) => {
                let mut passed = trace.iter().all(|t| t.value >= reference - slack);
                if trace.len() >= 2 {
                    let xs: Vec<f64> = trace.iter().map(|t| t.x).collect();
                    let ys: Vec<f64> = trace.iter().map(|t| t.value).collect();
                    match richardson_delta2(&xs, &ys) {
                        Ok(ex) => {
                            row.extrapolated = Some(ex.limit);
                            row.observed_order = ex.observed_order;
                            passed &= (ex.limit - reference).abs() <= slack;
                        }
                        Err(e) => {
                            row.message = Some(e.to_string());
                            passed = false;
                        }
                    }
                }
                row.quotient_trace = trace;
                row.checks_passed = Some(passed);
            }
            Err(e) => row = fail(row, &e),
        }
    }
    rows.push(row);

    if !config.h_list.is_empty() {
        rows.push(strip_row(cell, config));
    }
    rows
}

/// `I_h` over the cutoff levels. At `k + a = p` the products `I_h h^{p−1}`
/// must stay within a factor 2; beyond it they must strictly decrease.
fn strip_row(cell: &Cell, config: &RunConfig) -> ReportRow {
    let mut row = ReportRow::new(Command::Verify, cell, config.mesh_size);
    row.trace_kind = Some(TraceKind::H);
    let energies: Result<Vec<_>, _> = config
        .h_list
        .iter()
        .map(|&h| cutoff_decay(&cell.params, CUTOFF_SUPPORT, h))
        .collect();
    let energies = match energies {
        Ok(e) => e,
        Err(e) => return fail(row, &e),
    };
    row.quotient_trace = energies
        .iter()
        .map(|e| TracePoint {
            x: e.h as f64,
            value: e.value,
        })
        .collect();
    if energies.len() >= 2 {
        let xs: Vec<f64> = energies.iter().map(|e| e.h as f64).collect();
        let ys: Vec<f64> = energies.iter().map(|e| e.value).collect();
        row.fitted_rate = log_log_slope(&xs, &ys).ok();
    }
    let mut sorted = energies.clone();
    sorted.sort_by_key(|e| e.h);
    let params = &cell.params;
    let threshold = (params.k_plus_a() - params.p()).abs() <= 1e-12 * params.p();
    let passed = if threshold {
        let (lo, hi) = sorted
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, u), e| (l.min(e.scaled), u.max(e.scaled)));
        lo > 0.0 && hi <= 2.0 * lo
    } else {
        sorted.iter().all(|e| e.scaled > 0.0)
            && sorted.windows(2).all(|w| w[0].h == w[1].h || w[1].scaled < w[0].scaled)
    };
    row.checks_passed = Some(passed);
    row
}
