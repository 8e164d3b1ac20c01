//! Run execution: propagate, measure, and write output files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use rydgate_core::analysis::{
    entangling_phase, find_cpr_time, full_gate_report, run_sweep, stirap_infidelity, SweepAxis,
    SweepResult,
};
use rydgate_core::dynamics::{
    propagate, PropagationOptions, PropagationResult, QuantumState, TimeDependentHamiltonian,
};
use rydgate_core::models::{build_full_two_qubit, build_h3, build_h4, ManifoldDrive};
use rydgate_core::pulses::Envelope;
use rydgate_core::CoreError;

use crate::config::{
    validate, Diagnostics, EnvelopeConfig, ExperimentConfig, ModelKind, ReportKind,
};

/// Failures of a run, split by exit-code category: configuration
/// problems exit 2, numerical or I/O problems exit 3.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

/// Summary of a completed run; the resolved config echo is sufficient to
/// reproduce the run bit-identically.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub artifact_version: String,
    pub wall_clock_seconds: f64,
    pub resolved_config: ExperimentConfig,
    pub results: Value,
}

/// A finished run: summary plus the files written.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits: enough to reproduce the f64 bit pattern.
    format!("{x:.16e}")
}

/// Build the Hamiltonian a config describes, with the given channel set
/// (normally `config.resolve().envelopes`).
pub fn build_model(
    config: &ExperimentConfig,
    envelopes: &BTreeMap<String, EnvelopeConfig>,
) -> Result<TimeDependentHamiltonian, RunError> {
    let env = |name: &str| -> Result<Envelope, RunError> {
        envelopes
            .get(name)
            .ok_or_else(|| RunError::Config(format!("missing envelope channel {name:?}")))?
            .build()
            .map_err(|e| RunError::Config(e.to_string()))
    };
    let param = |name: &str| -> Result<f64, RunError> {
        config
            .resolve()
            .parameters
            .get(name)
            .copied()
            .ok_or_else(|| RunError::Config(format!("missing parameter {name:?}")))
    };
    match config.model {
        ModelKind::H3 => Ok(build_h3(env("pump")?, env("stokes")?, param("delta_e")?)),
        ModelKind::H4 => Ok(build_h4(
            env("pump")?,
            env("stokes")?,
            env("microwave")?,
            param("delta_e")?,
            env("detuning_rr")?,
        )),
        ModelKind::Ryd4 => {
            let drive = ManifoldDrive {
                microwave: env("microwave")?,
                detuning_rr: env("detuning_rr")?,
                v0: param("v0")?,
            };
            Ok(drive.hamiltonian())
        }
        ModelKind::Full16 => {
            let schedule = config.build_schedule().map_err(RunError::Config)?;
            Ok(build_full_two_qubit(&schedule)?)
        }
    }
}

fn write_trajectory_csv(
    path: &Path,
    result: &PropagationResult,
    tracked: &str,
) -> Result<(), RunError> {
    let space = result.final_state().space().clone();
    let tracked_idx = space
        .index_of(tracked)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let mut out = String::new();
    out.push_str("t_ns");
    for label in space.labels() {
        let _ = write!(out, ",p_{label}");
    }
    let _ = write!(out, ",re_{tracked},im_{tracked}");
    out.push('\n');
    for (t, state) in result.times().iter().zip(result.trajectory()) {
        out.push_str(&fmt_f64(*t));
        for c in state.amplitudes() {
            out.push(',');
            out.push_str(&fmt_f64(c.norm_sqr()));
        }
        let c = state.amplitudes()[tracked_idx];
        out.push(',');
        out.push_str(&fmt_f64(c.re));
        out.push(',');
        out.push_str(&fmt_f64(c.im));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<(), RunError> {
    let axis_names: Vec<&str> = sweep.axes.iter().map(|a| a.parameter.as_str()).collect();
    let mut value_keys: Vec<String> = Vec::new();
    for p in &sweep.points {
        for k in p.values.keys() {
            if !value_keys.contains(k) {
                value_keys.push(k.clone());
            }
        }
    }
    value_keys.sort();
    let mut out = String::new();
    out.push_str(&axis_names.join(","));
    for k in &value_keys {
        let _ = write!(out, ",{k}");
    }
    out.push_str(",error\n");
    for p in &sweep.points {
        let row: Vec<String> = axis_names
            .iter()
            .map(|n| fmt_f64(p.params.get(*n).copied().unwrap_or(f64::NAN)))
            .collect();
        out.push_str(&row.join(","));
        for k in &value_keys {
            out.push(',');
            if let Some(v) = p.values.get(k) {
                out.push_str(&fmt_f64(*v));
            }
        }
        out.push(',');
        if let Some(e) = &p.error {
            let _ = write!(out, "{:?}", e);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn population_stats(result: &PropagationResult) -> (Value, Value) {
    let space = result.final_state().space().clone();
    let mut max_map = serde_json::Map::new();
    let mut final_map = serde_json::Map::new();
    for (i, label) in space.labels().iter().enumerate() {
        let series: Vec<f64> = result
            .trajectory()
            .iter()
            .map(|s| s.amplitudes()[i].norm_sqr())
            .collect();
        let max = series.iter().cloned().fold(0.0, f64::max);
        max_map.insert(label.clone(), json!(max));
        final_map.insert(label.clone(), json!(series.last().copied().unwrap_or(0.0)));
    }
    (Value::Object(max_map), Value::Object(final_map))
}

fn trajectory_results(result: &PropagationResult, tracked: &str) -> Result<Value, RunError> {
    let (max_p, final_p) = population_stats(result);
    let (population, phase) = result
        .final_state()
        .observe(tracked)
        .map_err(|e| RunError::Config(e.to_string()))?;
    Ok(json!({
        "max_populations": max_p,
        "final_populations": final_p,
        "final_norm": result.final_state().norm(),
        "max_norm_drift": result.max_norm_drift(),
        "tracked": { "label": tracked, "population": population, "phase": phase },
    }))
}

/// Execute a validated config, writing outputs under `outdir`.
pub fn execute(config: &ExperimentConfig, outdir: &Path) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let diagnostics: Diagnostics = validate(config);
    if !diagnostics.errors.is_empty() {
        return Err(RunError::Config(diagnostics.errors.join("; ")));
    }
    fs::create_dir_all(outdir).map_err(|e| RunError::Io(format!("{}: {e}", outdir.display())))?;

    let resolved = config.resolve();
    let opts = PropagationOptions {
        tol: config.tolerance,
        sample_dt: config.sample_dt,
    };
    let mut files = Vec::new();
    let tracked = config.tracked_label().to_string();

    let mut results: Value = match &resolved.report {
        ReportKind::Trajectory | ReportKind::StirapInfidelity | ReportKind::FullGate
        | ReportKind::CprSearch { .. } | ReportKind::EntanglingPhase { .. } => {
            let (t0, t1) = resolved
                .effective_window()
                .ok_or_else(|| RunError::Config("missing window".into()))?;
            match &resolved.report {
                ReportKind::FullGate => {
                    let schedule = resolved.build_schedule().map_err(RunError::Config)?;
                    let outcome = full_gate_report(&schedule, &opts)?;
                    let mut results = trajectory_results(&outcome.main, &tracked)?;
                    let r = &outcome.report;
                    results["gate"] = json!({
                        "gate_time": r.gate_time,
                        "f_return": r.return_fidelity,
                        "phi_ent": r.entangling_phase,
                        "phi_loc": r.local_phase,
                        "peak_p_e": r.peak_intermediate_population,
                        "residual_rydberg": r.residual_rydberg_population,
                    });
                    if let Some(csv) = &resolved.outputs.trajectory_csv {
                        let path = outdir.join(csv);
                        write_trajectory_csv(&path, &outcome.main, &tracked)?;
                        files.push(path);
                    }
                    results
                }
                ReportKind::CprSearch { window, threshold } => {
                    let drive = manifold_drive_from(&resolved)?;
                    let found = find_cpr_time(&drive, t0, *window, *threshold, &opts)?;
                    let mut results = json!({
                        "gate_time": found.gate_time,
                        "p_return": found.p_return,
                        "above_threshold": found.above_threshold,
                    });
                    if let Some(EnvelopeConfig::ChirpedDetuning { period, .. }) =
                        resolved.envelopes.get("detuning_rr")
                    {
                        results["gate_time_over_period"] =
                            json!((found.gate_time - t0) / period);
                    }
                    let h = drive.hamiltonian();
                    let psi0 = QuantumState::basis_state(h.space(), resolved.initial_label())?;
                    let run = propagate(&h, &psi0, t0, t1, &opts)?;
                    if let Some(csv) = &resolved.outputs.trajectory_csv {
                        let path = outdir.join(csv);
                        write_trajectory_csv(&path, &run, &tracked)?;
                        files.push(path);
                    }
                    results["trajectory"] = trajectory_results(&run, &tracked)?;
                    results
                }
                ReportKind::EntanglingPhase { gate_time, threshold } => {
                    let drive = manifold_drive_from(&resolved)?;
                    let m = entangling_phase(&drive, t0, *gate_time, *threshold, &opts)?;
                    json!({
                        "phi_ent": m.entangling_phase,
                        "p_return": m.p_return,
                        "p_return_reference": m.p_return_reference,
                        "gate_time": gate_time,
                    })
                }
                ReportKind::StirapInfidelity => {
                    let pump = resolved.envelopes["pump"]
                        .build()
                        .map_err(|e| RunError::Config(e.to_string()))?;
                    let stokes = resolved.envelopes["stokes"]
                        .build()
                        .map_err(|e| RunError::Config(e.to_string()))?;
                    let delta = resolved.parameters["delta_e"];
                    let infidelity = stirap_infidelity(&pump, &stokes, delta, (t0, t1), &opts)?;
                    let h = build_model(&resolved, &resolved.envelopes)?;
                    let psi0 = QuantumState::basis_state(h.space(), resolved.initial_label())?;
                    let run = propagate(&h, &psi0, t0, t1, &opts)?;
                    if let Some(csv) = &resolved.outputs.trajectory_csv {
                        let path = outdir.join(csv);
                        write_trajectory_csv(&path, &run, &tracked)?;
                        files.push(path);
                    }
                    let mut results = trajectory_results(&run, &tracked)?;
                    results["infidelity"] = json!(infidelity);
                    results
                }
                ReportKind::Trajectory => {
                    let h = build_model(&resolved, &resolved.envelopes)?;
                    let psi0 = QuantumState::basis_state(h.space(), resolved.initial_label())?;
                    let run = propagate(&h, &psi0, t0, t1, &opts)?;
                    if let Some(csv) = &resolved.outputs.trajectory_csv {
                        let path = outdir.join(csv);
                        write_trajectory_csv(&path, &run, &tracked)?;
                        files.push(path);
                    }
                    trajectory_results(&run, &tracked)?
                }
                ReportKind::Sweep { .. } => unreachable!(),
            }
        }
        ReportKind::Sweep {
            evaluator,
            axes,
            base,
        } => {
            let axes: Vec<SweepAxis> = axes
                .iter()
                .map(|a| {
                    Ok(SweepAxis {
                        parameter: a.parameter.clone(),
                        values: a.grid().map_err(RunError::Config)?,
                    })
                })
                .collect::<Result<_, RunError>>()?;
            let sweep = run_sweep(evaluator, base, &axes)?;
            let n_failed = sweep.points.iter().filter(|p| p.error.is_some()).count();
            let csv = resolved
                .outputs
                .sweep_csv
                .as_ref()
                .ok_or_else(|| RunError::Config("sweep needs outputs.sweep_csv".into()))?;
            let path = outdir.join(csv);
            write_sweep_csv(&path, &sweep)?;
            files.push(path.clone());
            json!({
                "evaluator": evaluator,
                "n_points": sweep.points.len(),
                "n_failed": n_failed,
                "sweep_csv": csv,
            })
        }
    };

    // Optional reference twin with selected channels forced to zero.
    if let Some(reference) = &resolved.reference {
        let mut ref_envelopes = resolved.envelopes.clone();
        for ch in &reference.zero_channels {
            ref_envelopes.insert(ch.clone(), EnvelopeConfig::Zero);
        }
        let (t0, t1) = resolved
            .effective_window()
            .ok_or_else(|| RunError::Config("missing window".into()))?;
        let h = build_model(&resolved, &ref_envelopes)?;
        let psi0 = QuantumState::basis_state(h.space(), resolved.initial_label())?;
        let run = propagate(&h, &psi0, t0, t1, &opts)?;
        if let Some(csv) = &resolved.outputs.trajectory_csv {
            let ref_csv = match csv.strip_suffix(".csv") {
                Some(stem) => format!("{stem}-ref.csv"),
                None => format!("{csv}-ref"),
            };
            let path = outdir.join(ref_csv);
            write_trajectory_csv(&path, &run, &tracked)?;
            files.push(path);
        }
        results["reference"] = trajectory_results(&run, &tracked)?;
        results["reference_zero_channels"] = json!(reference.zero_channels);
    }

    if !diagnostics.warnings.is_empty() {
        results["warnings"] = json!(diagnostics.warnings);
    }

    let summary = RunSummary {
        name: resolved.name.clone(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        resolved_config: resolved.clone(),
        results,
    };
    let path = outdir.join(&resolved.outputs.summary_json);
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| RunError::Io(e.to_string()))?;
    fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);

    Ok(RunOutcome { summary, files })
}

fn manifold_drive_from(resolved: &ExperimentConfig) -> Result<ManifoldDrive, RunError> {
    let env = |name: &str| -> Result<Envelope, RunError> {
        resolved.envelopes[name]
            .build()
            .map_err(|e| RunError::Config(e.to_string()))
    };
    Ok(ManifoldDrive {
        microwave: env("microwave")?,
        detuning_rr: env("detuning_rr")?,
        v0: resolved.parameters["v0"],
    })
}
