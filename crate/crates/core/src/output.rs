//! Trace persistence.
//!
//! | file             | columns / format                                                      |
//! |------------------|-----------------------------------------------------------------------|
//! | `states.csv`     | `t,agent_id,role,x,r,delta_r,rbar_T,tracking_error`                   |
//! | `metrics.csv`    | `t,y,e,omega,max_tracking_error`                                      |
//! | `emissions.csv`  | `t,sender,receiver,value`                                             |
//! | `properties.csv` | one row per round of transition-matrix checks                        |
//! | `bounds.txt`     | `key=value` lines                                                     |
//! | `matrices.txt`   | optional; one matrix per round followed by its property summary      |
//! | `tracking.svg`   | optional; state curves, trusted reference average, adversary values  |

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::analysis::{trace_metrics, BoundReport, PropertyReport, TransitionRecord};
use crate::consensus::SimulationTrace;

pub const STATES_HEADER: [&str; 8] = [
    "t",
    "agent_id",
    "role",
    "x",
    "r",
    "delta_r",
    "rbar_T",
    "tracking_error",
];
pub const EMISSIONS_HEADER: [&str; 4] = ["t", "sender", "receiver", "value"];
pub const METRICS_HEADER: [&str; 5] = ["t", "y", "e", "omega", "max_tracking_error"];
pub const PROPERTIES_HEADER: [&str; 9] = [
    "t",
    "min_entry",
    "a1_row_slack",
    "a2_support_mismatches",
    "a3_min_weight",
    "b1_column_slack",
    "residual",
    "lambda_excess",
    "passed",
];

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFiles {
    pub states: PathBuf,
    pub metrics: PathBuf,
    pub emissions: PathBuf,
    pub bounds: PathBuf,
    pub properties: PathBuf,
    pub matrices: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_states(path: &Path, trace: &SimulationTrace) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(STATES_HEADER).map_err(csv_err)?;
    let topo = &trace.topology;
    for t in 1..=trace.horizon {
        let target = trace.trusted_reference_mean(t - 1);
        for id in topo.good() {
            let x = trace.state(t, id);
            let r = trace.reference(t, id);
            let dr = r - trace.reference(t - 1, id);
            w.serialize((
                t,
                id.0,
                topo.role(id).as_str(),
                x,
                r,
                dr,
                target,
                (x - target).abs(),
            ))
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

pub fn write_emissions(path: &Path, trace: &SimulationTrace) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(EMISSIONS_HEADER).map_err(csv_err)?;
    for record in &trace.rounds {
        for (sender, receiver, value) in record.adversary_emissions(&trace.topology) {
            w.serialize((record.t, sender.0, receiver.0, value))
                .map_err(csv_err)?;
        }
    }
    w.flush()
}

pub fn write_metrics(path: &Path, trace: &SimulationTrace, bounds: &BoundReport) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for (m, omega) in trace_metrics(trace).iter().zip(&bounds.omega) {
        w.serialize((m.t, m.spread, m.offset, omega, m.max_tracking_error()))
            .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_properties(path: &Path, reports: &[PropertyReport]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(PROPERTIES_HEADER).map_err(csv_err)?;
    for r in reports {
        w.serialize((
            r.t,
            r.nonnegative.measured,
            r.row_sums.measured,
            r.support.measured as u64,
            r.min_weight.measured,
            r.trusted_columns.measured,
            r.residual.measured,
            r.lambda_range.measured,
            r.all_passed(),
        ))
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_matrices(
    path: &Path,
    records: &[(TransitionRecord, PropertyReport)],
) -> io::Result<()> {
    let mut out = String::new();
    for (rec, report) in records {
        let _ = writeln!(out, "# t={}", rec.t);
        for row in rec.matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        let _ = writeln!(out, "# properties: {}", report.summary());
    }
    fs::write(path, out)
}

/// Writes every trace file into `dir`, creating it if needed.
pub fn write_trace_files(
    dir: &Path,
    trace: &SimulationTrace,
    bounds: &BoundReport,
    transitions: &[(TransitionRecord, PropertyReport)],
    emit_matrices: bool,
    emit_plots: bool,
) -> io::Result<TraceFiles> {
    fs::create_dir_all(dir)?;
    let files = TraceFiles {
        states: dir.join("states.csv"),
        metrics: dir.join("metrics.csv"),
        emissions: dir.join("emissions.csv"),
        bounds: dir.join("bounds.txt"),
        properties: dir.join("properties.csv"),
        matrices: emit_matrices.then(|| dir.join("matrices.txt")),
        plot: emit_plots.then(|| dir.join("tracking.svg")),
    };
    write_states(&files.states, trace)?;
    write_metrics(&files.metrics, trace, bounds)?;
    write_emissions(&files.emissions, trace)?;
    fs::write(&files.bounds, bounds.to_key_values())?;
    let reports: Vec<PropertyReport> = transitions.iter().map(|(_, r)| r.clone()).collect();
    write_properties(&files.properties, &reports)?;
    if let Some(path) = &files.matrices {
        write_matrices(path, transitions)?;
    }
    if let Some(path) = &files.plot {
        crate::plot::tracking_plot(path, trace).map_err(|e| io::Error::other(e.to_string()))?;
    }
    Ok(files)
}
