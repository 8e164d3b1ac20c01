//! Gate-level quantities: population-return times, entangling phase,
//! return fidelity, STIRAP transfer infidelity, and parameter sweeps.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::dynamics::{
    propagate, PropagationOptions, PropagationResult, QuantumState,
};
use crate::models::{
    build_full_two_qubit, build_h3, two_ion_space, GateSchedule, ManifoldDrive,
};
use crate::pulses::{self, Envelope};
use crate::{CoreError, Result};

/// Wrap a phase to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Summary of one full gate run.
#[derive(Clone, Debug)]
pub struct GateReport {
    /// Total gate time in ns.
    pub gate_time: f64,
    /// Round-trip fidelity `|⟨ψ(t_i)|ψ(τ_g)⟩|²` against the initial state.
    pub return_fidelity: f64,
    /// Exchange-induced phase on the return amplitude, relative to the
    /// zero-interaction reference run; wrapped to `(-π, π]`.
    pub entangling_phase: f64,
    /// Residual single-ion phase of the return amplitude after removing
    /// the entangling part. Diagnostic only.
    pub local_phase: f64,
    /// Peak intermediate-state population, summed over both ions.
    pub peak_intermediate_population: f64,
    /// Population left in the Rydberg manifold (either ion in rS or rP)
    /// at the end of the gate.
    pub residual_rydberg_population: f64,
}

/// `V_R ∫ P_rr dt` by trapezoidal quadrature over a sampled trajectory.
pub fn perturbative_phase(times: &[f64], p_rr: &[f64], v_r: f64) -> Result<f64> {
    if times.is_empty() || p_rr.is_empty() {
        return Err(CoreError::InvalidParameter(
            "perturbative phase needs a non-empty trajectory".into(),
        ));
    }
    if times.len() != p_rr.len() {
        return Err(CoreError::DimensionMismatch {
            expected: times.len(),
            actual: p_rr.len(),
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidParameter(
            "trajectory times must be strictly increasing".into(),
        ));
    }
    let mut integral = 0.0;
    for i in 1..times.len() {
        integral += 0.5 * (p_rr[i] + p_rr[i - 1]) * (times[i] - times[i - 1]);
    }
    Ok(v_r * integral)
}

/// Gate time of the perturbative maximally entangling π-phase gate,
/// `τ = 8π / (3 V_R)`.
pub fn perturbative_gate_time(v_r: f64) -> Result<f64> {
    if v_r <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "perturbative gate time needs V_R > 0, got {v_r}"
        )));
    }
    Ok(8.0 * PI / (3.0 * v_r))
}

/// Microwave Rabi frequency that permits complete population return for
/// a given chirp floor: `Ω_mw = (√15 / 2) Δ₀`.
pub fn cpr_rabi_for_detuning(delta0: f64) -> Result<f64> {
    if delta0 <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "CPR Rabi relation needs Δ₀ > 0, got {delta0}"
        )));
    }
    Ok(15.0_f64.sqrt() / 2.0 * delta0)
}

/// Gate-time drift compensation: the population-return time shrinks with
/// interaction strength approximately as `τ_g = τ_g0 · cos(V₀ / (6 Δ₀))`.
pub fn drift_compensated_gate_time(tau_g0: f64, v0: f64, delta0: f64) -> Result<f64> {
    if delta0 <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "drift compensation needs Δ₀ > 0, got {delta0}"
        )));
    }
    Ok(tau_g0 * (v0 / (6.0 * delta0)).cos())
}

/// Result of a population-return search.
#[derive(Clone, Copy, Debug)]
pub struct CprSearch {
    /// Time of maximum return population, refined to 0.01 ns.
    pub gate_time: f64,
    /// Return population at that time.
    pub p_return: f64,
    /// Whether the maximum clears the acceptance threshold.
    pub above_threshold: bool,
}

fn cubic_interp(ts: &[f64], ps: &[f64], t: f64) -> f64 {
    // Catmull-Rom on the uniform sample grid; clamps at the ends.
    let n = ts.len();
    let dt = ts[1] - ts[0];
    let x = (t - ts[0]) / dt;
    let i = (x.floor() as isize).clamp(0, n as isize - 2) as usize;
    let u = x - i as f64;
    let pm1 = ps[i.saturating_sub(1)];
    let p0 = ps[i];
    let p1 = ps[i + 1];
    let p2 = ps[(i + 2).min(n - 1)];
    let a = 0.5 * (-pm1 + 3.0 * p0 - 3.0 * p1 + p2);
    let b = pm1 - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
    let c = 0.5 * (p1 - pm1);
    ((a * u + b) * u + c) * u + p0
}

/// Find the time inside `window` that maximizes the `|rSrS⟩` return
/// population of the manifold drive started from `|rSrS⟩` at `t_start`.
///
/// The search takes the best trajectory sample and refines it by
/// golden-section search on a cubic interpolation of the sampled
/// population, to 0.01 ns. A maximum below `threshold` is reported, not
/// an error.
pub fn find_cpr_time(
    drive: &ManifoldDrive,
    t_start: f64,
    window: (f64, f64),
    threshold: f64,
    opts: &PropagationOptions,
) -> Result<CprSearch> {
    if !(window.0 < window.1) {
        return Err(CoreError::InvalidParameter(format!(
            "CPR search window is empty: {:?}",
            window
        )));
    }
    if window.0 < t_start {
        return Err(CoreError::InvalidParameter(
            "CPR search window starts before the drive".into(),
        ));
    }
    let h = drive.hamiltonian();
    let psi0 = QuantumState::basis_state(h.space(), "rSrS")?;
    let result = propagate(&h, &psi0, t_start, window.1, opts)?;
    let times = result.times();
    let pops = result.population_series("rSrS")?;

    let lo = times.partition_point(|&t| t < window.0 - 1e-12);
    let (mut best_i, mut best_p) = (lo, pops[lo]);
    for (i, &p) in pops.iter().enumerate().skip(lo) {
        if p > best_p + 1e-15 {
            best_i = i;
            best_p = p;
        }
    }

    // Refine only when the sampled maximum is a genuine interior peak.
    let mut gate_time = times[best_i];
    let mut p_return = best_p;
    if best_i > 0 && best_i + 1 < times.len() {
        let flat = (pops[best_i] - pops[best_i - 1]).abs() < 1e-15
            && (pops[best_i] - pops[best_i + 1]).abs() < 1e-15;
        if !flat {
            let mut a = times[best_i - 1].max(window.0);
            let mut b = times[best_i + 1].min(window.1);
            let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
            let mut c = b - inv_phi * (b - a);
            let mut d = a + inv_phi * (b - a);
            let mut fc = cubic_interp(times, &pops, c);
            let mut fd = cubic_interp(times, &pops, d);
            while b - a > 0.01 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - inv_phi * (b - a);
                    fc = cubic_interp(times, &pops, c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + inv_phi * (b - a);
                    fd = cubic_interp(times, &pops, d);
                }
            }
            gate_time = 0.5 * (a + b);
            p_return = cubic_interp(times, &pops, gate_time).min(1.0);
        }
    }

    Ok(CprSearch {
        gate_time,
        p_return,
        above_threshold: p_return >= threshold,
    })
}

/// Entangling phase of the manifold run at `gate_time`, measured against
/// a zero-interaction reference run over the same interval:
/// `wrap(arg⟨rSrS|ψ_V₀⟩ - arg⟨rSrS|ψ_0⟩)`.
///
/// Errors if the return population in either run falls below
/// `threshold`, naming the failing run.
pub fn entangling_phase(
    drive: &ManifoldDrive,
    t_start: f64,
    gate_time: f64,
    threshold: f64,
    opts: &PropagationOptions,
) -> Result<PhaseMeasurement> {
    if !(gate_time > t_start) {
        return Err(CoreError::InvalidParameter(
            "gate time must lie after the drive start".into(),
        ));
    }
    let run = |v0: f64| -> Result<(f64, f64)> {
        let d = drive.with_v0(v0);
        let h = d.hamiltonian();
        let psi0 = QuantumState::basis_state(h.space(), "rSrS")?;
        let res = propagate(&h, &psi0, t_start, gate_time, opts)?;
        let (population, phase) = res.final_state().observe("rSrS")?;
        Ok((population, phase))
    };
    let (p_main, arg_main) = run(drive.v0)?;
    let (p_ref, arg_ref) = run(0.0)?;
    if p_main < threshold {
        return Err(CoreError::InsufficientReturn {
            which: "interacting",
            population: p_main,
            threshold,
        });
    }
    if p_ref < threshold {
        return Err(CoreError::InsufficientReturn {
            which: "reference",
            population: p_ref,
            threshold,
        });
    }
    Ok(PhaseMeasurement {
        entangling_phase: wrap_phase(arg_main - arg_ref),
        p_return: p_main,
        p_return_reference: p_ref,
    })
}

/// Outcome of an entangling-phase measurement.
#[derive(Clone, Copy, Debug)]
pub struct PhaseMeasurement {
    pub entangling_phase: f64,
    pub p_return: f64,
    pub p_return_reference: f64,
}

/// Transfer infidelity `1 - P_rS(final)` of a STIRAP pulse pair applied
/// to `|0⟩` over `window`.
pub fn stirap_infidelity(
    pump: &Envelope,
    stokes: &Envelope,
    delta: f64,
    window: (f64, f64),
    opts: &PropagationOptions,
) -> Result<f64> {
    let h = build_h3(pump.clone(), stokes.clone(), delta);
    let psi0 = QuantumState::basis_state(h.space(), "0")?;
    let res = propagate(&h, &psi0, window.0, window.1, opts)?;
    Ok(1.0 - res.final_state().population("rS")?)
}

/// A full gate run plus its zero-interaction reference trajectory.
#[derive(Debug)]
pub struct FullGateOutcome {
    pub report: GateReport,
    pub main: PropagationResult,
    pub reference: PropagationResult,
}

/// Propagate `|00⟩` through the 16-dimensional two-qubit model across
/// all three stages and extract the gate report. The entangling phase is
/// referenced to an identical run with `V₀ = 0`.
pub fn full_gate_report(schedule: &GateSchedule, opts: &PropagationOptions) -> Result<FullGateOutcome> {
    schedule.validate()?;
    let space = two_ion_space();
    let psi0 = QuantumState::basis_state(&space, "00")?;
    let (t0, t1) = schedule.span();

    let h_main = build_full_two_qubit(schedule)?;
    let main = propagate(&h_main, &psi0, t0, t1, opts)?;
    let h_ref = build_full_two_qubit(&schedule.with_v0(0.0))?;
    let reference = propagate(&h_ref, &psi0, t0, t1, opts)?;

    let (p00, arg_main) = main.final_state().observe("00")?;
    let (_, arg_ref) = reference.final_state().observe("00")?;
    let entangling_phase = wrap_phase(arg_main - arg_ref);
    let local_phase = wrap_phase(arg_main - entangling_phase);

    // Intermediate-state population summed over both ions.
    let labels = space.labels();
    let e_first: Vec<usize> = (0..16).filter(|i| labels[*i].starts_with('e')).collect();
    let e_second: Vec<usize> = (0..16).filter(|i| labels[*i].ends_with('e')).collect();
    let mut peak_e = 0.0_f64;
    for state in main.trajectory() {
        let amp = state.amplitudes();
        let p: f64 = e_first.iter().map(|&i| amp[i].norm_sqr()).sum::<f64>()
            + e_second.iter().map(|&i| amp[i].norm_sqr()).sum::<f64>();
        peak_e = peak_e.max(p);
    }

    let rydberg: Vec<usize> = (0..16)
        .filter(|&i| {
            let l = &labels[i];
            l.contains("rS") || l.contains("rP")
        })
        .collect();
    let final_amp = main.final_state().amplitudes();
    let residual: f64 = rydberg.iter().map(|&i| final_amp[i].norm_sqr()).sum();

    Ok(FullGateOutcome {
        report: GateReport {
            gate_time: schedule.gate_time(),
            return_fidelity: p00,
            entangling_phase,
            local_phase,
            peak_intermediate_population: peak_e,
            residual_rydberg_population: residual,
        },
        main,
        reference,
    })
}

// ---------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------

/// One swept parameter and its grid.
#[derive(Clone, Debug)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Scalar inputs of one sweep point (all in rad/ns and ns).
pub type ParamMap = BTreeMap<String, f64>;

/// Outputs of one sweep point; failures are recorded per point.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub params: ParamMap,
    pub values: BTreeMap<String, f64>,
    pub error: Option<String>,
}

/// Dense grid evaluation of a named evaluator.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub evaluator: String,
    pub axes: Vec<SweepAxis>,
    /// Row-major over the axes, in the order given.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Values of one output across all points (NaN where a point failed
    /// or the key is absent).
    pub fn series(&self, key: &str) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.values.get(key).copied().unwrap_or(f64::NAN))
            .collect()
    }
}

/// Names of the registered per-point evaluators.
pub fn evaluator_names() -> &'static [&'static str] {
    &["stirap-infidelity", "cpr-time", "ent-phase", "full-gate"]
}

fn require(params: &ParamMap, evaluator: &'static str, key: &'static str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or(CoreError::MissingParameter {
            evaluator,
            parameter: key,
        })
}

fn opt(params: &ParamMap, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn propagation_options(params: &ParamMap) -> PropagationOptions {
    PropagationOptions {
        tol: opt(params, "tol", 1e-10),
        sample_dt: opt(params, "sample_dt", 0.1),
    }
}

fn ddp_envelopes(params: &ParamMap, ev: &'static str) -> Result<(Envelope, Envelope)> {
    let amplitude = require(params, ev, "amplitude")?;
    let steepness = opt(params, "steepness", 3.0);
    let logistic_time = require(params, ev, "logistic_time")?;
    let mask_width = require(params, ev, "mask_width")?;
    let mask_exponent = require(params, ev, "mask_exponent")?.round() as u32;
    let center = require(params, ev, "center")?;
    let (mut pump, mut stokes) = pulses::ddp_pair(
        amplitude,
        logistic_time,
        steepness,
        mask_width,
        mask_exponent,
        center,
    )?;
    if let (Some(&on), Some(&off)) = (params.get("ttl_on"), params.get("ttl_off")) {
        pump = pulses::ttl_truncate(pump, on, off)?;
        stokes = pulses::ttl_truncate(stokes, on, off)?;
    }
    Ok((pump, stokes))
}

fn manifold_drive(params: &ParamMap, ev: &'static str) -> Result<ManifoldDrive> {
    let delta0 = require(params, ev, "delta0")?;
    let omega_mw = if opt(params, "omega_mw_from_delta0", 0.0) != 0.0 {
        cpr_rabi_for_detuning(delta0)?
    } else {
        require(params, ev, "omega_mw")?
    };
    let period = require(params, ev, "chirp_period")?;
    let phase = opt(params, "chirp_phase", 0.0);
    let start = opt(params, "t_start", 0.0);
    Ok(ManifoldDrive {
        microwave: pulses::constant(omega_mw),
        detuning_rr: pulses::chirped_detuning_from(delta0, period, phase, start)?,
        v0: opt(params, "v0", 0.0),
    })
}

fn evaluate_point(evaluator: &str, params: &ParamMap) -> Result<BTreeMap<String, f64>> {
    let opts = propagation_options(params);
    let mut out = BTreeMap::new();
    match evaluator {
        "stirap-infidelity" => {
            const EV: &str = "stirap-infidelity";
            let (pump, stokes) = ddp_envelopes(params, EV)?;
            let delta = require(params, EV, "delta_e")?;
            let window = (
                require(params, EV, "window_start")?,
                require(params, EV, "window_end")?,
            );
            let infidelity = stirap_infidelity(&pump, &stokes, delta, window, &opts)?;
            out.insert("infidelity".into(), infidelity);
        }
        "cpr-time" => {
            const EV: &str = "cpr-time";
            let drive = manifold_drive(params, EV)?;
            let t_start = opt(params, "t_start", 0.0);
            let window = (
                require(params, EV, "window_start")?,
                require(params, EV, "window_end")?,
            );
            let threshold = opt(params, "threshold", 0.99);
            let found = find_cpr_time(&drive, t_start, window, threshold, &opts)?;
            out.insert("gate_time".into(), found.gate_time);
            out.insert("p_return".into(), found.p_return);
            out.insert(
                "above_threshold".into(),
                if found.above_threshold { 1.0 } else { 0.0 },
            );
            if let Some(&period) = params.get("chirp_period") {
                out.insert(
                    "gate_time_over_period".into(),
                    (found.gate_time - t_start) / period,
                );
            }
        }
        "ent-phase" => {
            const EV: &str = "ent-phase";
            let drive = manifold_drive(params, EV)?;
            let t_start = opt(params, "t_start", 0.0);
            let threshold = opt(params, "threshold", 0.9);
            let gate_time = if let Some(&tau0) = params.get("tau_g0") {
                let delta0 = require(params, EV, "delta0")?;
                t_start + drift_compensated_gate_time(tau0, drive.v0, delta0)?
            } else {
                require(params, EV, "gate_time")?
            };
            let m = entangling_phase(&drive, t_start, gate_time, threshold, &opts)?;
            out.insert("phi_ent".into(), m.entangling_phase);
            out.insert("p_return".into(), m.p_return);
            out.insert("p_return_reference".into(), m.p_return_reference);
            out.insert("gate_time".into(), gate_time);
        }
        "full-gate" => {
            const EV: &str = "full-gate";
            let schedule = schedule_from_params(params, EV)?;
            let outcome = full_gate_report(&schedule, &opts)?;
            out.insert("f_return".into(), outcome.report.return_fidelity);
            out.insert("phi_ent".into(), outcome.report.entangling_phase);
            out.insert("phi_loc".into(), outcome.report.local_phase);
            out.insert(
                "peak_p_e".into(),
                outcome.report.peak_intermediate_population,
            );
            out.insert(
                "residual_rydberg".into(),
                outcome.report.residual_rydberg_population,
            );
            out.insert("gate_time".into(), outcome.report.gate_time);
        }
        other => {
            return Err(CoreError::UnknownEvaluator {
                name: other.to_string(),
            })
        }
    }
    Ok(out)
}

fn schedule_from_params(params: &ParamMap, ev: &'static str) -> Result<GateSchedule> {
    let up = (
        require(params, ev, "up_start")?,
        require(params, ev, "up_end")?,
    );
    let dip = (up.1, require(params, ev, "dipole_end")?);
    let down = (dip.1, require(params, ev, "down_end")?);
    let amplitude = require(params, ev, "amplitude")?;
    let steepness = opt(params, "steepness", 3.0);
    let logistic_time = require(params, ev, "logistic_time")?;
    let mask_width = require(params, ev, "mask_width")?;
    let mask_exponent = require(params, ev, "mask_exponent")?.round() as u32;
    let (pump_up, stokes_up) = pulses::ddp_pair(
        amplitude,
        logistic_time,
        steepness,
        mask_width,
        mask_exponent,
        0.5 * (up.0 + up.1),
    )?;
    let (pump_down, stokes_down) = pulses::ddp_pair_mirrored(
        amplitude,
        logistic_time,
        steepness,
        mask_width,
        mask_exponent,
        0.5 * (down.0 + down.1),
    )?;
    let delta0 = require(params, ev, "delta0")?;
    let omega_mw = if opt(params, "omega_mw_from_delta0", 0.0) != 0.0 {
        cpr_rabi_for_detuning(delta0)?
    } else {
        require(params, ev, "omega_mw")?
    };
    Ok(GateSchedule {
        stirap_up: up,
        dipole: dip,
        stirap_down: down,
        pump_up,
        stokes_up,
        pump_down,
        stokes_down,
        microwave: pulses::constant(omega_mw),
        detuning_rr: pulses::chirped_detuning_from(
            delta0,
            require(params, ev, "chirp_period")?,
            opt(params, "chirp_phase", 0.0),
            dip.0,
        )?,
        delta_e: require(params, ev, "delta_e")?,
        v0: opt(params, "v0", 0.0),
    })
}

/// Evaluate `evaluator` on the dense grid spanned by `axes`, starting
/// from the `base` parameter set. Points run concurrently; the output
/// ordering is row-major over the axes and bit-reproducible.
pub fn run_sweep(evaluator: &str, base: &ParamMap, axes: &[SweepAxis]) -> Result<SweepResult> {
    if !evaluator_names().contains(&evaluator) {
        return Err(CoreError::UnknownEvaluator {
            name: evaluator.to_string(),
        });
    }
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(CoreError::InvalidParameter(
            "sweep needs at least one axis with a non-empty grid".into(),
        ));
    }

    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let param_sets: Vec<ParamMap> = (0..total)
        .map(|flat| {
            let mut params = base.clone();
            let mut rem = flat;
            for axis in axes.iter().rev() {
                let n = axis.values.len();
                params.insert(axis.parameter.clone(), axis.values[rem % n]);
                rem /= n;
            }
            params
        })
        .collect();

    let points: Vec<SweepPoint> = param_sets
        .into_par_iter()
        .map(|params| match evaluate_point(evaluator, &params) {
            Ok(values) => SweepPoint {
                params,
                values,
                error: None,
            },
            Err(e) => SweepPoint {
                params,
                values: BTreeMap::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();

    Ok(SweepResult {
        evaluator: evaluator.to_string(),
        axes: axes.to_vec(),
        points,
    })
}

/// Least-squares line fit `y ≈ slope·x + intercept`; returns
/// `(slope, intercept, max_abs_residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(CoreError::InvalidParameter(
            "linear fit needs two equal-length samples".into(),
        ));
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(CoreError::InvalidParameter(
            "linear fit is degenerate (constant abscissa)".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_resid = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, max_resid))
}

/// Unwrap a phase series assumed continuous in its parameter: each value
/// is shifted by a multiple of 2π to sit closest to its predecessor.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev: f64 = out[i - 1];
            let mut candidate = p + offset;
            while candidate - prev > PI {
                offset -= TAU;
                candidate = p + offset;
            }
            while candidate - prev < -PI {
                offset += TAU;
                candidate = p + offset;
            }
        }
        out.push(p + offset);
    }
    out
}
