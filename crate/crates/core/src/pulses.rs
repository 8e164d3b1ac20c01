//! Waveforms for drive amplitudes and detunings.
//!
//! All envelopes are pure functions of time: amplitudes in rad/ns, times
//! in ns. Repeated evaluation at the same `t` is bit-identical.

use crate::{CoreError, Result};

/// Parameters of one DDP-optimized pulse (pump or Stokes).
///
/// With `s = t - center`, the pair is
///
/// ```text
/// pump(t)   = Ω₀ · F(s) · sin(π f(s) / 2)
/// stokes(t) = Ω₀ · F(s) · cos(π f(s) / 2)
/// f(s) = 1 / (1 + exp(-λ s / T))        logistic mixing
/// F(s) = exp(-(s / T₀)^(2n))            hypergaussian mask
/// ```
///
/// so that `√(pump² + stokes²) = Ω₀ F(s)` identically: the rms Rabi
/// frequency follows the mask alone, which is what suppresses the
/// nonadiabatic transition points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdpParams {
    /// Peak scale Ω₀ in rad/ns.
    pub amplitude: f64,
    /// Dimensionless logistic steepness λ.
    pub steepness: f64,
    /// Logistic timescale T in ns.
    pub logistic_time: f64,
    /// Hypergaussian mask width T₀ in ns.
    pub mask_width: f64,
    /// Mask exponent n (the mask is `exp(-(s/T₀)^(2n))`).
    pub mask_exponent: u32,
    /// Common pulse center in ns.
    pub center: f64,
}

impl DdpParams {
    fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 {
            return Err(CoreError::InvalidParameter(
                "DDP amplitude must be nonnegative".into(),
            ));
        }
        if !(self.logistic_time > 0.0) || !(self.mask_width > 0.0) {
            return Err(CoreError::InvalidParameter(
                "DDP timescales must be positive".into(),
            ));
        }
        if self.mask_exponent < 1 {
            return Err(CoreError::InvalidParameter(
                "DDP mask exponent must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn mixing(&self, s: f64) -> f64 {
        1.0 / (1.0 + (-self.steepness * s / self.logistic_time).exp())
    }

    fn mask(&self, s: f64) -> f64 {
        (-(s / self.mask_width).powi(2 * self.mask_exponent as i32)).exp()
    }

    /// `Ω₀ F(s)`, the rms Rabi frequency of the pair.
    pub fn rms(&self, t: f64) -> f64 {
        let s = t - self.center;
        self.amplitude * self.mask(s)
    }
}

/// A named, parameterized real-valued function of time — drive envelope
/// or detuning waveform.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    /// Identically zero.
    Zero,
    /// Constant value (rad/ns).
    Constant { value: f64 },
    /// `peak · exp(-(t - center)² / width²)`
    Gaussian { peak: f64, center: f64, width: f64 },
    /// Pump member of a DDP pair.
    DdpPump(DdpParams),
    /// Stokes member of a DDP pair.
    DdpStokes(DdpParams),
    /// Hard gate: `inner` inside `[t_on, t_off]`, exactly zero outside.
    /// Edge discontinuities are intentional — this models a TTL-gated AOM.
    TtlWindowed {
        inner: Box<Envelope>,
        t_on: f64,
        t_off: f64,
    },
    /// `base · (1 + sin(π (t - start) / period + phase)⁴)`
    ChirpedDetuning {
        base: f64,
        period: f64,
        phase: f64,
        start: f64,
    },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::Constant { value } => *value,
            Envelope::Gaussian {
                peak,
                center,
                width,
            } => peak * (-((t - center) / width).powi(2)).exp(),
            Envelope::DdpPump(p) => {
                let s = t - p.center;
                p.amplitude * p.mask(s) * (std::f64::consts::FRAC_PI_2 * p.mixing(s)).sin()
            }
            Envelope::DdpStokes(p) => {
                let s = t - p.center;
                p.amplitude * p.mask(s) * (std::f64::consts::FRAC_PI_2 * p.mixing(s)).cos()
            }
            Envelope::TtlWindowed { inner, t_on, t_off } => {
                if t >= *t_on && t <= *t_off {
                    inner.value(t)
                } else {
                    0.0
                }
            }
            Envelope::ChirpedDetuning {
                base,
                period,
                phase,
                start,
            } => {
                let x = (t - start) * std::f64::consts::PI / period + phase;
                base * (1.0 + x.sin().powi(4))
            }
        }
    }
}

/// Constant drive.
pub fn constant(value: f64) -> Envelope {
    Envelope::Constant { value }
}

/// Gaussian pulse `peak · exp(-(t - center)²/width²)`.
pub fn gaussian(peak: f64, center: f64, width: f64) -> Result<Envelope> {
    if width <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "Gaussian width must be positive".into(),
        ));
    }
    if peak < 0.0 {
        return Err(CoreError::InvalidParameter(
            "Gaussian peak must be nonnegative".into(),
        ));
    }
    Ok(Envelope::Gaussian {
        peak,
        center,
        width,
    })
}

/// DDP-optimized pump/Stokes pair.
///
/// The Stokes field precedes the pump (counter-intuitive STIRAP
/// ordering): as `s → -∞` the mixing function `f → 0`, so the pump
/// vanishes faster than the Stokes.
pub fn ddp_pair(
    amplitude: f64,
    logistic_time: f64,
    steepness: f64,
    mask_width: f64,
    mask_exponent: u32,
    center: f64,
) -> Result<(Envelope, Envelope)> {
    let params = DdpParams {
        amplitude,
        steepness,
        logistic_time,
        mask_width,
        mask_exponent,
        center,
    };
    params.validate()?;
    Ok((Envelope::DdpPump(params), Envelope::DdpStokes(params)))
}

/// The mirror-image DDP pair for the downward transfer.
///
/// Mirroring a logistic pair in time swaps the pump and Stokes shapes
/// (`f(-s) = 1 - f(s)`), so the "pump" channel of the down leg is the
/// Stokes waveform re-centered, and vice versa.
pub fn ddp_pair_mirrored(
    amplitude: f64,
    logistic_time: f64,
    steepness: f64,
    mask_width: f64,
    mask_exponent: u32,
    center: f64,
) -> Result<(Envelope, Envelope)> {
    let (pump, stokes) = ddp_pair(
        amplitude,
        logistic_time,
        steepness,
        mask_width,
        mask_exponent,
        center,
    )?;
    Ok((stokes, pump))
}

/// Hard TTL truncation of `inner` to `[t_on, t_off]`.
pub fn ttl_truncate(inner: Envelope, t_on: f64, t_off: f64) -> Result<Envelope> {
    if t_on >= t_off {
        return Err(CoreError::InvalidParameter(format!(
            "TTL window must have t_on < t_off (got {t_on}..{t_off})"
        )));
    }
    Ok(Envelope::TtlWindowed {
        inner: Box::new(inner),
        t_on,
        t_off,
    })
}

/// Quartic-sine chirped detuning `Δ₀(1 + sin(tπ/T + φ)⁴)`, ranging over
/// `[Δ₀, 2Δ₀]`.
pub fn chirped_detuning(base: f64, period: f64, phase: f64) -> Result<Envelope> {
    chirped_detuning_from(base, period, phase, 0.0)
}

/// Same waveform referenced to `t = start`.
pub fn chirped_detuning_from(base: f64, period: f64, phase: f64, start: f64) -> Result<Envelope> {
    if period <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "chirp period must be positive".into(),
        ));
    }
    Ok(Envelope::ChirpedDetuning {
        base,
        period,
        phase,
        start,
    })
}
