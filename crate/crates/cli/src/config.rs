//! Experiment configuration schema.
//!
//! Configs are JSON with strict parsing: unknown keys anywhere are
//! rejected. The mandatory `units` declaration states the convention of
//! every frequency-valued number in the file; times are always ns and
//! phases always rad. Resolved configs (everything converted to rad/ns)
//! are echoed into run summaries and can be re-run bit-identically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use rydgate_core::models::{
    rotated_manifold_space, rydberg_manifold_space, single_ion_space, three_level_space,
    two_ion_space, GateSchedule,
};
use rydgate_core::pulses::{self, Envelope};
use rydgate_core::units::mhz_to_rad_per_ns;
use rydgate_core::{analysis, dynamics::StateSpace};

/// Frequency convention of the numbers in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitSystem {
    /// Frequencies are quoted as `f = Ω/2π` in MHz (the usual
    /// experimental convention).
    #[serde(rename = "MHz-over-2pi")]
    MhzOver2Pi,
    /// Frequencies are angular, in rad/ns.
    #[serde(rename = "rad-per-ns")]
    RadPerNs,
}

/// Which Hamiltonian the run propagates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Three-level single-ion ladder.
    H3,
    /// Four-level single-ion ladder with microwave dressing.
    H4,
    /// Two-ion Rydberg exchange manifold.
    Ryd4,
    /// Full 16-dimensional two-qubit model.
    Full16,
}

impl ModelKind {
    pub fn space(self) -> StateSpace {
        match self {
            ModelKind::H3 => three_level_space(),
            ModelKind::H4 => single_ion_space(),
            ModelKind::Ryd4 => rydberg_manifold_space(),
            ModelKind::Full16 => two_ion_space(),
        }
    }

    pub fn default_initial_state(self) -> &'static str {
        match self {
            ModelKind::H3 | ModelKind::H4 => "0",
            ModelKind::Ryd4 => "rSrS",
            ModelKind::Full16 => "00",
        }
    }

    /// Envelope channels the model requires, in canonical order.
    pub fn channels(self) -> &'static [&'static str] {
        match self {
            ModelKind::H3 => &["pump", "stokes"],
            ModelKind::H4 => &["pump", "stokes", "microwave", "detuning_rr"],
            ModelKind::Ryd4 => &["microwave", "detuning_rr"],
            ModelKind::Full16 => &[
                "pump_up",
                "stokes_up",
                "pump_down",
                "stokes_down",
                "microwave",
                "detuning_rr",
            ],
        }
    }

    /// Scalar parameters the model requires.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ModelKind::H3 | ModelKind::H4 => &["delta_e"],
            ModelKind::Ryd4 => &["v0"],
            ModelKind::Full16 => &["delta_e", "v0"],
        }
    }
}

/// Envelope definition: kind plus named, typed parameters.
/// Frequency-valued fields (`value`, `peak`, `amplitude`, `base`) follow
/// the config's unit declaration; all other fields are ns, rad, or
/// dimensionless.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Zero,
    Constant {
        value: f64,
    },
    Gaussian {
        peak: f64,
        center: f64,
        width: f64,
    },
    DdpPump {
        amplitude: f64,
        steepness: f64,
        logistic_time: f64,
        mask_width: f64,
        mask_exponent: u32,
        center: f64,
    },
    DdpStokes {
        amplitude: f64,
        steepness: f64,
        logistic_time: f64,
        mask_width: f64,
        mask_exponent: u32,
        center: f64,
    },
    TtlWindowed {
        inner: Box<EnvelopeConfig>,
        t_on: f64,
        t_off: f64,
    },
    ChirpedDetuning {
        base: f64,
        period: f64,
        phase: f64,
        #[serde(default)]
        start: f64,
    },
}

impl EnvelopeConfig {
    /// Convert every frequency-valued field with `f`.
    fn map_frequencies(&self, f: &dyn Fn(f64) -> f64) -> EnvelopeConfig {
        match self {
            EnvelopeConfig::Zero => EnvelopeConfig::Zero,
            EnvelopeConfig::Constant { value } => EnvelopeConfig::Constant { value: f(*value) },
            EnvelopeConfig::Gaussian {
                peak,
                center,
                width,
            } => EnvelopeConfig::Gaussian {
                peak: f(*peak),
                center: *center,
                width: *width,
            },
            EnvelopeConfig::DdpPump {
                amplitude,
                steepness,
                logistic_time,
                mask_width,
                mask_exponent,
                center,
            } => EnvelopeConfig::DdpPump {
                amplitude: f(*amplitude),
                steepness: *steepness,
                logistic_time: *logistic_time,
                mask_width: *mask_width,
                mask_exponent: *mask_exponent,
                center: *center,
            },
            EnvelopeConfig::DdpStokes {
                amplitude,
                steepness,
                logistic_time,
                mask_width,
                mask_exponent,
                center,
            } => EnvelopeConfig::DdpStokes {
                amplitude: f(*amplitude),
                steepness: *steepness,
                logistic_time: *logistic_time,
                mask_width: *mask_width,
                mask_exponent: *mask_exponent,
                center: *center,
            },
            EnvelopeConfig::TtlWindowed { inner, t_on, t_off } => EnvelopeConfig::TtlWindowed {
                inner: Box::new(inner.map_frequencies(f)),
                t_on: *t_on,
                t_off: *t_off,
            },
            EnvelopeConfig::ChirpedDetuning {
                base,
                period,
                phase,
                start,
            } => EnvelopeConfig::ChirpedDetuning {
                base: f(*base),
                period: *period,
                phase: *phase,
                start: *start,
            },
        }
    }

    /// Build the runtime envelope; amplitudes must already be in rad/ns.
    pub fn build(&self) -> Result<Envelope, rydgate_core::CoreError> {
        match self {
            EnvelopeConfig::Zero => Ok(Envelope::Zero),
            EnvelopeConfig::Constant { value } => Ok(pulses::constant(*value)),
            EnvelopeConfig::Gaussian {
                peak,
                center,
                width,
            } => pulses::gaussian(*peak, *center, *width),
            EnvelopeConfig::DdpPump {
                amplitude,
                steepness,
                logistic_time,
                mask_width,
                mask_exponent,
                center,
            } => pulses::ddp_pair(
                *amplitude,
                *logistic_time,
                *steepness,
                *mask_width,
                *mask_exponent,
                *center,
            )
            .map(|(pump, _)| pump),
            EnvelopeConfig::DdpStokes {
                amplitude,
                steepness,
                logistic_time,
                mask_width,
                mask_exponent,
                center,
            } => pulses::ddp_pair(
                *amplitude,
                *logistic_time,
                *steepness,
                *mask_width,
                *mask_exponent,
                *center,
            )
            .map(|(_, stokes)| stokes),
            EnvelopeConfig::TtlWindowed { inner, t_on, t_off } => {
                pulses::ttl_truncate(inner.build()?, *t_on, *t_off)
            }
            EnvelopeConfig::ChirpedDetuning {
                base,
                period,
                phase,
                start,
            } => pulses::chirped_detuning_from(*base, *period, *phase, *start),
        }
    }

    /// Constant amplitude, if the envelope (possibly TTL-windowed) is
    /// constant inside its window.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            EnvelopeConfig::Constant { value } => Some(*value),
            EnvelopeConfig::TtlWindowed { inner, .. } => inner.constant_value(),
            _ => None,
        }
    }

    /// Chirp floor, if the envelope is a chirped detuning.
    pub fn chirp_base(&self) -> Option<f64> {
        match self {
            EnvelopeConfig::ChirpedDetuning { base, .. } => Some(*base),
            EnvelopeConfig::TtlWindowed { inner, .. } => inner.chirp_base(),
            _ => None,
        }
    }
}

/// Stage boundaries of the full two-qubit schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesConfig {
    pub stirap_up: (f64, f64),
    pub dipole: (f64, f64),
    pub stirap_down: (f64, f64),
}

/// One swept axis: explicit values, or a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxisConfig {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<(f64, f64, usize)>,
}

impl SweepAxisConfig {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        match (&self.values, &self.linspace) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some((lo, hi, n))) => {
                let (lo, hi, n) = (*lo, *hi, *n);
                if n < 1 {
                    return Err(format!("axis {:?}: linspace needs n >= 1", self.parameter));
                }
                if n == 1 {
                    return Ok(vec![lo]);
                }
                Ok((0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect())
            }
            _ => Err(format!(
                "axis {:?}: give exactly one of `values` or `linspace`",
                self.parameter
            )),
        }
    }
}

/// What the run computes and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReportKind {
    /// Propagate and write the trajectory only.
    Trajectory,
    /// Transfer infidelity `1 - P_rS` at the end of the window (h3).
    StirapInfidelity,
    /// Search for the complete-population-return time (ryd4).
    CprSearch { window: (f64, f64), threshold: f64 },
    /// Entangling phase against the zero-interaction reference (ryd4).
    EntanglingPhase { gate_time: f64, threshold: f64 },
    /// Full two-qubit gate report (full16).
    FullGate,
    /// Grid sweep of a named evaluator; `base` scalars follow the same
    /// unit rules as `parameters`.
    Sweep {
        evaluator: String,
        axes: Vec<SweepAxisConfig>,
        base: BTreeMap<String, f64>,
    },
}

/// Output file names, relative to the run's output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_csv: Option<String>,
    pub summary_json: String,
}

/// A reference twin run with some channels forced to zero, for
/// comparison summaries (e.g. the microwave-off counterpart).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub zero_channels: Vec<String>,
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_sample_dt() -> f64 {
    0.1
}

/// A complete experiment definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub units: UnitSystem,
    pub model: ModelKind,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Propagation window (ns); for `full16` it defaults to the stage span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub envelopes: BTreeMap<String, EnvelopeConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<StagesConfig>,
    pub report: ReportKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    pub outputs: OutputsConfig,
}

/// Scalar keys that carry frequency units (everything else in
/// `parameters` and sweep maps is ns, rad, a count, or a flag).
pub const FREQUENCY_KEYS: &[&str] = &["delta_e", "v0", "omega_mw", "delta0", "amplitude", "v_r"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config with every frequency converted to rad/ns. Resolving an
    /// already-resolved config is the identity, so echoed configs re-run
    /// bit-identically.
    pub fn resolve(&self) -> ExperimentConfig {
        let mut resolved = self.clone();
        if self.units == UnitSystem::RadPerNs {
            return resolved;
        }
        let conv: &dyn Fn(f64) -> f64 = &mhz_to_rad_per_ns;
        resolved.units = UnitSystem::RadPerNs;
        resolved.envelopes = self
            .envelopes
            .iter()
            .map(|(k, v)| (k.clone(), v.map_frequencies(conv)))
            .collect();
        resolved.parameters = self
            .parameters
            .iter()
            .map(|(k, v)| {
                let v = if FREQUENCY_KEYS.contains(&k.as_str()) {
                    conv(*v)
                } else {
                    *v
                };
                (k.clone(), v)
            })
            .collect();
        if let ReportKind::Sweep {
            evaluator,
            axes,
            base,
        } = &self.report
        {
            let base = base
                .iter()
                .map(|(k, v)| {
                    let v = if FREQUENCY_KEYS.contains(&k.as_str()) {
                        conv(*v)
                    } else {
                        *v
                    };
                    (k.clone(), v)
                })
                .collect();
            let axes = axes
                .iter()
                .map(|a| {
                    if FREQUENCY_KEYS.contains(&a.parameter.as_str()) {
                        SweepAxisConfig {
                            parameter: a.parameter.clone(),
                            values: a.values.as_ref().map(|v| v.iter().map(|x| conv(*x)).collect()),
                            linspace: a.linspace.map(|(lo, hi, n)| (conv(lo), conv(hi), n)),
                        }
                    } else {
                        a.clone()
                    }
                })
                .collect();
            resolved.report = ReportKind::Sweep {
                evaluator: evaluator.clone(),
                axes,
                base,
            };
        }
        resolved
    }

    pub fn initial_label(&self) -> &str {
        self.initial_state
            .as_deref()
            .unwrap_or_else(|| self.model.default_initial_state())
    }

    pub fn tracked_label(&self) -> &str {
        self.track_label.as_deref().unwrap_or_else(|| self.initial_label())
    }

    /// Propagation window; for full16 the stage span when not given.
    pub fn effective_window(&self) -> Option<(f64, f64)> {
        self.window.or_else(|| {
            self.stages
                .map(|s| (s.stirap_up.0, s.stirap_down.1))
        })
    }

    /// Build the gate schedule (full16 only; callers check the model).
    pub fn build_schedule(&self) -> Result<GateSchedule, String> {
        let resolved = self.resolve();
        let stages = resolved
            .stages
            .ok_or_else(|| "full16 model requires `stages`".to_string())?;
        let env = |name: &str| -> Result<Envelope, String> {
            resolved
                .envelopes
                .get(name)
                .ok_or_else(|| format!("missing envelope channel {name:?}"))?
                .build()
                .map_err(|e| e.to_string())
        };
        let param = |name: &str| -> Result<f64, String> {
            resolved
                .parameters
                .get(name)
                .copied()
                .ok_or_else(|| format!("missing parameter {name:?}"))
        };
        Ok(GateSchedule {
            stirap_up: stages.stirap_up,
            dipole: stages.dipole,
            stirap_down: stages.stirap_down,
            pump_up: env("pump_up")?,
            stokes_up: env("stokes_up")?,
            pump_down: env("pump_down")?,
            stokes_down: env("stokes_down")?,
            microwave: env("microwave")?,
            detuning_rr: env("detuning_rr")?,
            delta_e: param("delta_e")?,
            v0: param("v0")?,
        })
    }
}

/// Validation output: errors block a run, warnings do not.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

/// Full schema and physics validation, without running anything.
pub fn validate(config: &ExperimentConfig) -> Diagnostics {
    let mut d = Diagnostics::default();
    let err = |d: &mut Diagnostics, m: String| d.errors.push(m);

    if !(1e-14..=1e-6).contains(&config.tolerance) {
        err(
            &mut d,
            format!(
                "tolerance must lie in [1e-14, 1e-6], got {:e}",
                config.tolerance
            ),
        );
    }
    if !(config.sample_dt > 0.0) {
        err(&mut d, "sample_dt must be positive".into());
    }

    let space = config.model.space();
    if space.index_of(config.initial_label()).is_err() {
        err(
            &mut d,
            format!(
                "initial state {:?} is not a basis label of model {:?}",
                config.initial_label(),
                config.model
            ),
        );
    }
    if space.index_of(config.tracked_label()).is_err() {
        err(
            &mut d,
            format!("track label {:?} is not a basis label", config.tracked_label()),
        );
    }

    let is_sweep = matches!(config.report, ReportKind::Sweep { .. });
    if is_sweep {
        if !config.envelopes.is_empty() || !config.parameters.is_empty() {
            err(
                &mut d,
                "sweep configs define inputs in report.base, not in envelopes/parameters".into(),
            );
        }
    } else {
        // Channel set must match the model exactly.
        for ch in config.model.channels() {
            if !config.envelopes.contains_key(*ch) {
                err(&mut d, format!("model {:?} needs envelope channel {ch:?}", config.model));
            }
        }
        for key in config.envelopes.keys() {
            if !config.model.channels().contains(&key.as_str()) {
                err(&mut d, format!("unknown envelope channel {key:?} for model {:?}", config.model));
            }
        }
        for p in config.model.parameters() {
            if !config.parameters.contains_key(*p) {
                err(&mut d, format!("model {:?} needs parameter {p:?}", config.model));
            }
        }
        for key in config.parameters.keys() {
            if !config.model.parameters().contains(&key.as_str()) {
                err(&mut d, format!("unknown parameter {key:?} for model {:?}", config.model));
            }
        }
        if config.effective_window().is_none() {
            err(&mut d, "config needs a `window` (or stages for full16)".into());
        } else if let Some((t0, t1)) = config.effective_window() {
            if !(t1 > t0) {
                err(&mut d, format!("window must be increasing, got {t0}..{t1}"));
            }
        }
        // Envelope parameter validity.
        let resolved = config.resolve();
        for (name, env) in &resolved.envelopes {
            if let Err(e) = env.build() {
                err(&mut d, format!("envelope {name:?}: {e}"));
            }
        }
    }

    match (&config.model, &config.stages) {
        (ModelKind::Full16, Some(_)) => {
            if let Ok(schedule) = config.build_schedule() {
                if let Err(e) = schedule.validate() {
                    err(&mut d, e.to_string());
                }
            } else if let Err(e) = config.build_schedule() {
                err(&mut d, e);
            }
        }
        (ModelKind::Full16, None) => err(&mut d, "full16 model requires `stages`".into()),
        (_, Some(_)) => err(&mut d, "`stages` is only meaningful for full16".into()),
        _ => {}
    }

    match &config.report {
        ReportKind::StirapInfidelity if config.model != ModelKind::H3 => {
            err(&mut d, "stirap-infidelity report requires the h3 model".into());
        }
        ReportKind::CprSearch { window, threshold } => {
            if config.model != ModelKind::Ryd4 {
                err(&mut d, "cpr-search report requires the ryd4 model".into());
            }
            if !(window.0 < window.1) {
                err(&mut d, "cpr-search window is empty".into());
            }
            if let Some((t0, t1)) = config.effective_window() {
                if window.0 < t0 || window.1 > t1 {
                    err(&mut d, "cpr-search window must lie inside the simulated span".into());
                }
            }
            if !(0.0..=1.0).contains(threshold) {
                err(&mut d, "cpr-search threshold must lie in [0, 1]".into());
            }
        }
        ReportKind::EntanglingPhase { gate_time, .. } => {
            if config.model != ModelKind::Ryd4 {
                err(&mut d, "entangling-phase report requires the ryd4 model".into());
            }
            if let Some((t0, _)) = config.effective_window() {
                if *gate_time <= t0 {
                    err(&mut d, "gate_time must lie after the window start".into());
                }
            }
        }
        ReportKind::FullGate if config.model != ModelKind::Full16 => {
            err(&mut d, "full-gate report requires the full16 model".into());
        }
        ReportKind::Sweep { evaluator, axes, .. } => {
            if !analysis::evaluator_names().contains(&evaluator.as_str()) {
                err(
                    &mut d,
                    format!(
                        "unknown sweep evaluator {evaluator:?} (known: {})",
                        analysis::evaluator_names().join(", ")
                    ),
                );
            }
            if axes.is_empty() {
                err(&mut d, "sweep needs at least one axis".into());
            }
            for axis in axes {
                match axis.grid() {
                    Ok(g) if g.is_empty() => {
                        err(&mut d, format!("axis {:?} has an empty grid", axis.parameter))
                    }
                    Err(e) => err(&mut d, e),
                    _ => {}
                }
            }
            if config.outputs.sweep_csv.is_none() {
                err(&mut d, "sweep configs need outputs.sweep_csv".into());
            }
        }
        _ => {}
    }

    if let Some(reference) = &config.reference {
        for ch in &reference.zero_channels {
            if !config.model.channels().contains(&ch.as_str()) {
                err(&mut d, format!("reference.zero_channels names unknown channel {ch:?}"));
            }
        }
        if is_sweep {
            err(&mut d, "reference runs are not supported for sweeps".into());
        }
    }

    // Microwave/chirp consistency: complete population return in the
    // dipole stage requires Ω_mw = (√15/2)·Δ₀ to about a percent.
    if matches!(config.model, ModelKind::Ryd4 | ModelKind::Full16) && !is_sweep {
        let resolved = config.resolve();
        let mw = resolved
            .envelopes
            .get("microwave")
            .and_then(|e| e.constant_value());
        let base = resolved
            .envelopes
            .get("detuning_rr")
            .and_then(|e| e.chirp_base());
        if let (Some(omega_mw), Some(delta0)) = (mw, base) {
            if delta0 > 0.0 {
                let target = 15.0_f64.sqrt() / 2.0 * delta0;
                let mismatch = (omega_mw - target).abs() / delta0;
                if mismatch > 0.01 {
                    d.warnings.push(format!(
                        "microwave Rabi deviates from the return condition (sqrt(15)/2)*delta0 \
                         by {:.1}% of delta0; population return will be degraded",
                        mismatch * 100.0
                    ));
                }
            }
        }
    }

    // The rotated-manifold basis is internal; nothing configures it, but
    // keep the label set alive for documentation purposes.
    debug_assert_eq!(rotated_manifold_space().dim(), 4);

    d
}
