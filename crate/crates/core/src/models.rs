//! Hamiltonian builders for the trapped Rydberg-ion gate.
//!
//! Level scheme per ion: metastable qubit state `|0⟩`, intermediate
//! `|e⟩` (detuned by Δ), Rydberg `|rS⟩`, and microwave-coupled `|rP⟩`
//! (detuned by Δ_rr). The second qubit state `|1⟩` never couples to any
//! drive and is left out of the simulated space. Two-ion dynamics adds
//! the microwave-induced dipole-dipole exchange `|rSrP⟩ ↔ |rPrS⟩`.
//!
//! Basis orderings are fixed constants, never configurable.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{array, Array2};

use crate::dynamics::{QuantumState, StateSpace, TimeDependentHamiltonian};
use crate::linalg::C64;
use crate::pulses::Envelope;
use crate::{CoreError, Result};

/// Three-level ladder basis `["0", "e", "rS"]`.
pub fn three_level_space() -> StateSpace {
    StateSpace::new(["0", "e", "rS"]).expect("fixed basis")
}

/// Single-ion basis `["0", "e", "rS", "rP"]`.
pub fn single_ion_space() -> StateSpace {
    StateSpace::new(["0", "e", "rS", "rP"]).expect("fixed basis")
}

/// Two-ion Rydberg manifold basis `["rSrS", "rSrP", "rPrS", "rPrP"]`.
pub fn rydberg_manifold_space() -> StateSpace {
    StateSpace::new(["rSrS", "rSrP", "rPrS", "rPrP"]).expect("fixed basis")
}

/// Full two-ion basis: tensor product of two single-ion bases,
/// first-ion index major (`"0e"` means ion 1 in `|0⟩`, ion 2 in `|e⟩`).
pub fn two_ion_space() -> StateSpace {
    let s = single_ion_space();
    s.product(&s)
}

/// Basis of the π/4-rotated Rydberg manifold (bright/dark split of the
/// exchange interaction).
pub fn rotated_manifold_space() -> StateSpace {
    StateSpace::new(["rSrS+rPrP", "rSrP+rPrS", "rPrS-rSrP", "rPrP-rSrS"]).expect("fixed basis")
}

/// Mixing angles of the adiabatic (bright/dark) basis.
#[derive(Clone, Copy, Debug)]
pub struct MixingAngles {
    /// Pump/Stokes mixing angle with `tan θ = Ω_p/Ω_s`; in `[0, π/2]`
    /// for nonnegative couplings. This is the convention under which
    /// `cos θ |0⟩ - sin θ |rS⟩` is annihilated by the drive Hamiltonian.
    pub theta: f64,
    /// Bright-state mixing angle `φ = ½ atan2(Ω_rms, Δ)`.
    pub phi_mix: f64,
    /// Detuning angle entering the dressed four-level couplings; equal
    /// to `φ` on the branch used here (`γ = ½ acot(Δ/Ω_rms)` continued
    /// through Δ ≤ 0 via atan2).
    pub gamma: f64,
    /// `√(Ω_s² + Ω_p²)` in rad/ns.
    pub omega_rms: f64,
}

/// Instantaneous adiabatic decomposition of the three-level ladder.
#[derive(Clone, Debug)]
pub struct AdiabaticDecomposition {
    /// Unitary whose columns are `(bright1, dark, bright2)`, so
    /// `transform† · H₃ · transform = diag(λ₊, 0, λ₋)`.
    pub transform: Array2<C64>,
    /// `λ₊ = ½(Δ + √(Δ² + Ω_rms²))`.
    pub lambda_plus: f64,
    /// `λ₋ = ½(Δ - √(Δ² + Ω_rms²))`.
    pub lambda_minus: f64,
    pub bright1: QuantumState,
    pub bright2: QuantumState,
    pub dark: QuantumState,
}

/// Mixing angles for instantaneous couplings.
pub fn mixing_angles(omega_p: f64, omega_s: f64, delta: f64) -> Result<MixingAngles> {
    let omega_rms = (omega_p * omega_p + omega_s * omega_s).sqrt();
    if omega_rms == 0.0 {
        return Err(CoreError::MixingAngleUndefined);
    }
    let theta = omega_p.atan2(omega_s);
    let phi_mix = 0.5 * omega_rms.atan2(delta);
    Ok(MixingAngles {
        theta,
        phi_mix,
        gamma: phi_mix,
        omega_rms,
    })
}

/// Bright/dark decomposition of the three-level ladder at fixed
/// couplings.
pub fn adiabatic_decompose3(
    omega_p: f64,
    omega_s: f64,
    delta: f64,
) -> Result<(MixingAngles, AdiabaticDecomposition)> {
    let angles = mixing_angles(omega_p, omega_s, delta)?;
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.phi_mix.sin_cos();
    let root = (delta * delta + angles.omega_rms * angles.omega_rms).sqrt();
    let lambda_plus = 0.5 * (delta + root);
    let lambda_minus = 0.5 * (delta - root);

    let space = three_level_space();
    let b1 = [st * sp, cp, ct * sp];
    let d = [ct, 0.0, -st];
    let b2 = [st * cp, -sp, ct * cp];

    let transform = array![
        [
            C64::new(b1[0], 0.0),
            C64::new(d[0], 0.0),
            C64::new(b2[0], 0.0)
        ],
        [
            C64::new(b1[1], 0.0),
            C64::new(d[1], 0.0),
            C64::new(b2[1], 0.0)
        ],
        [
            C64::new(b1[2], 0.0),
            C64::new(d[2], 0.0),
            C64::new(b2[2], 0.0)
        ],
    ];

    let mk = |v: [f64; 3]| {
        QuantumState::from_amplitudes(
            &space,
            ndarray::Array1::from_iter(v.iter().map(|&x| C64::new(x, 0.0))),
        )
        .expect("adiabatic states are normalized by construction")
    };

    Ok((
        angles,
        AdiabaticDecomposition {
            transform,
            lambda_plus,
            lambda_minus,
            bright1: mk(b1),
            bright2: mk(b2),
            dark: mk(d),
        },
    ))
}

/// Three-level ladder Hamiltonian over `["0", "e", "rS"]`:
/// `Δ|e⟩⟨e| + (Ω_p/2)(|0⟩⟨e| + h.c.) + (Ω_s/2)(|e⟩⟨rS| + h.c.)`.
pub fn build_h3(pump: Envelope, stokes: Envelope, delta: f64) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(three_level_space(), move |t, m| {
        let wp = 0.5 * pump.value(t);
        let ws = 0.5 * stokes.value(t);
        m[[1, 1]] = C64::new(delta, 0.0);
        m[[0, 1]] = C64::new(wp, 0.0);
        m[[1, 0]] = C64::new(wp, 0.0);
        m[[1, 2]] = C64::new(ws, 0.0);
        m[[2, 1]] = C64::new(ws, 0.0);
    })
}

/// Four-level single-ion Hamiltonian over `["0", "e", "rS", "rP"]`: the
/// ladder of [`build_h3`] plus `(Ω_mw/2)(|rS⟩⟨rP| + h.c.) + Δ_rr|rP⟩⟨rP|`.
pub fn build_h4(
    pump: Envelope,
    stokes: Envelope,
    microwave: Envelope,
    delta: f64,
    delta_rr: Envelope,
) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(single_ion_space(), move |t, m| {
        write_h4(
            m,
            pump.value(t),
            stokes.value(t),
            microwave.value(t),
            delta,
            delta_rr.value(t),
        );
    })
}

fn write_h4(m: &mut Array2<C64>, wp: f64, ws: f64, wmw: f64, delta: f64, drr: f64) {
    m[[1, 1]] = C64::new(delta, 0.0);
    m[[3, 3]] = C64::new(drr, 0.0);
    let hp = C64::new(0.5 * wp, 0.0);
    let hs = C64::new(0.5 * ws, 0.0);
    let hm = C64::new(0.5 * wmw, 0.0);
    m[[0, 1]] = hp;
    m[[1, 0]] = hp;
    m[[1, 2]] = hs;
    m[[2, 1]] = hs;
    m[[2, 3]] = hm;
    m[[3, 2]] = hm;
}

/// Dressed four-level Hamiltonian in the adiabatic basis
/// `(bright1, dark, bright2, rP)`, in closed form.
///
/// The dark row couples to `|rP⟩` with strength `-Ω_mw Ω_p / (2 Ω_rms)`:
/// the pump and microwave drives together open a two-photon channel out
/// of what used to be the dark state.
pub fn adiabatic_transform4(
    omega_p: f64,
    omega_s: f64,
    omega_mw: f64,
    delta: f64,
    delta_rr: f64,
) -> Result<Array2<C64>> {
    let angles = mixing_angles(omega_p, omega_s, delta)?;
    let root = (delta * delta + angles.omega_rms * angles.omega_rms).sqrt();
    let lambda_plus = 0.5 * (delta + root);
    let lambda_minus = 0.5 * (delta - root);
    let q = omega_mw * omega_s / (2.0 * angles.omega_rms);
    let dark_coupling = -omega_mw * omega_p / (2.0 * angles.omega_rms);
    let (sg, cg) = angles.gamma.sin_cos();

    let mut m = Array2::zeros((4, 4));
    m[[0, 0]] = C64::new(lambda_plus, 0.0);
    m[[2, 2]] = C64::new(lambda_minus, 0.0);
    m[[3, 3]] = C64::new(delta_rr, 0.0);
    m[[0, 3]] = C64::new(q * sg, 0.0);
    m[[3, 0]] = C64::new(q * sg, 0.0);
    m[[1, 3]] = C64::new(dark_coupling, 0.0);
    m[[3, 1]] = C64::new(dark_coupling, 0.0);
    m[[2, 3]] = C64::new(q * cg, 0.0);
    m[[3, 2]] = C64::new(q * cg, 0.0);
    Ok(m)
}

/// Microwave-induced dipole-dipole strength
/// `V = V₀ · Ω_mw² / (Ω_mw² + Δ_rr²)`, in `[0, V₀]` for `V₀ ≥ 0`.
pub fn dd_strength(v0: f64, omega_mw: f64, delta_rr: f64) -> Result<f64> {
    if omega_mw == 0.0 && delta_rr == 0.0 {
        return Err(CoreError::DipoleStrengthUndefined);
    }
    Ok(dd_strength_or_zero(v0, omega_mw, delta_rr))
}

/// Same prefactor with the convention `V = 0` when the microwave drive
/// is off — no drive means no induced dipoles, regardless of detuning.
/// Used by the schedule-driven builders where both drives vanish outside
/// the dipole-dipole stage.
pub fn dd_strength_or_zero(v0: f64, omega_mw: f64, delta_rr: f64) -> f64 {
    if omega_mw == 0.0 {
        return 0.0;
    }
    let w2 = omega_mw * omega_mw;
    v0 * w2 / (w2 + delta_rr * delta_rr)
}

/// Two-ion Rydberg-manifold Hamiltonian over
/// `["rSrS", "rSrP", "rPrS", "rPrP"]` with an explicit exchange-strength
/// envelope:
///
/// ```text
///      1 ⎡ 0    Ω    Ω    0   ⎤
/// H =  — ⎢ Ω   2Δrr 2V    Ω   ⎥ ,  Ω = Ω_mw(t)
///      2 ⎢ Ω   2V   2Δrr  Ω   ⎥
///        ⎣ 0    Ω    Ω   4Δrr ⎦
/// ```
pub fn build_h2q_ryd(
    microwave: Envelope,
    delta_rr: Envelope,
    exchange: Envelope,
) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(rydberg_manifold_space(), move |t, m| {
        write_manifold(
            m,
            microwave.value(t),
            delta_rr.value(t),
            exchange.value(t),
        );
    })
}

fn write_manifold(m: &mut Array2<C64>, wmw: f64, drr: f64, v: f64) {
    let half = C64::new(0.5 * wmw, 0.0);
    for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        m[[i, j]] = half;
        m[[j, i]] = half;
    }
    m[[1, 1]] = C64::new(drr, 0.0);
    m[[2, 2]] = C64::new(drr, 0.0);
    m[[3, 3]] = C64::new(2.0 * drr, 0.0);
    m[[1, 2]] = C64::new(v, 0.0);
    m[[2, 1]] = C64::new(v, 0.0);
}

/// Drive parameters of the dipole-dipole stage acting on the Rydberg
/// manifold alone. The exchange strength is derived per-time from the
/// instantaneous microwave amplitude and detuning.
#[derive(Clone, Debug)]
pub struct ManifoldDrive {
    pub microwave: Envelope,
    pub detuning_rr: Envelope,
    /// Peak (resonant) dipole-dipole strength in rad/ns.
    pub v0: f64,
}

impl ManifoldDrive {
    pub fn hamiltonian(&self) -> TimeDependentHamiltonian {
        let mw = self.microwave.clone();
        let drr = self.detuning_rr.clone();
        let v0 = self.v0;
        TimeDependentHamiltonian::new(rydberg_manifold_space(), move |t, m| {
            let w = mw.value(t);
            let d = drr.value(t);
            write_manifold(m, w, d, dd_strength_or_zero(v0, w, d));
        })
    }

    pub fn with_v0(&self, v0: f64) -> ManifoldDrive {
        ManifoldDrive {
            microwave: self.microwave.clone(),
            detuning_rr: self.detuning_rr.clone(),
            v0,
        }
    }
}

/// Closed-form `⟨rSrS| U(t) |rSrS⟩` for constant resonant microwave
/// drive (`Δ_rr = 0`) and constant exchange strength `V₀`, under the
/// solver convention `U = exp(-i H t)`:
///
/// ```text
/// U₁₁(t) = ½ (1 + e^{-i V₀ t / 2} (cos x + i V₀ sin x / w)),
/// w = √(4 Ω_mw² + V₀²),  x = w t / 2
/// ```
///
/// `|U₁₁| = 1` (complete population return) requires `sin x = 0` and the
/// accumulated phases to cancel; with `V₀ t = 2kπ` and
/// `Ω_mw = ½ V₀ √(c₀² - 1)` that happens exactly when `k (1 + c₀)` is
/// even. `Re U₁₁ ≥ 0` always, so the element can never reach -1: a
/// π phase on `|rSrS⟩` is unreachable on resonance.
pub fn resonant_u11(omega_mw: f64, v0: f64, t: f64) -> C64 {
    let w = (4.0 * omega_mw * omega_mw + v0 * v0).sqrt();
    let x = 0.5 * w * t;
    let inner = if w == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        C64::new(x.cos(), v0 * x.sin() / w)
    };
    let rot = C64::from_polar(1.0, -0.5 * v0 * t);
    0.5 * (C64::new(1.0, 0.0) + rot * inner)
}

/// The π/4-rotated manifold basis change: columns express
/// `(|rSrS⟩+|rPrP⟩, |rSrP⟩+|rPrS⟩, |rPrS⟩-|rSrP⟩, |rPrP⟩-|rSrS⟩)/√2`
/// in the unrotated manifold basis.
pub fn manifold_rotation() -> Array2<C64> {
    let h = FRAC_1_SQRT_2;
    let z = 0.0;
    array![
        [h, z, z, -h],
        [z, h, -h, z],
        [z, h, h, z],
        [h, z, z, h],
    ]
    .mapv(|x| C64::new(x, 0.0))
}

/// Resonant manifold Hamiltonian in the rotated basis: a driven two-level
/// bright block `[[0, Ω_mw(t)], [Ω_mw(t), V₀]]` plus two decoupled dark
/// states at `-V₀` and `0`. Valid on resonance (`Δ_rr ≡ 0`), where the
/// exchange strength is the constant `V₀`.
pub fn rotated_basis_hamiltonian(microwave: Envelope, v0: f64) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::new(rotated_manifold_space(), move |t, m| {
        let w = C64::new(microwave.value(t), 0.0);
        m[[0, 1]] = w;
        m[[1, 0]] = w;
        m[[1, 1]] = C64::new(v0, 0.0);
        m[[2, 2]] = C64::new(-v0, 0.0);
    })
}

/// Full timing plan of the gate: STIRAP up, dipole-dipole stage, STIRAP
/// down, with per-channel envelopes. Both ions are driven identically.
///
/// Channels are hard-windowed to their own stage: pump/Stokes vanish
/// inside the dipole-dipole stage, microwave and chirp vanish outside it.
#[derive(Clone, Debug)]
pub struct GateSchedule {
    pub stirap_up: (f64, f64),
    pub dipole: (f64, f64),
    pub stirap_down: (f64, f64),
    pub pump_up: Envelope,
    pub stokes_up: Envelope,
    pub pump_down: Envelope,
    pub stokes_down: Envelope,
    pub microwave: Envelope,
    pub detuning_rr: Envelope,
    /// Intermediate-state detuning Δ (constant).
    pub delta_e: f64,
    /// Peak dipole-dipole strength V₀.
    pub v0: f64,
}

impl GateSchedule {
    pub fn validate(&self) -> Result<()> {
        let ((u0, u1), (d0, d1), (w0, w1)) = (self.stirap_up, self.dipole, self.stirap_down);
        if !(u0 < u1) {
            return Err(CoreError::InvalidSchedule(
                "STIRAP-up stage must have positive duration".into(),
            ));
        }
        if d1 < d0 {
            return Err(CoreError::InvalidSchedule(
                "dipole-dipole stage must have nonnegative duration".into(),
            ));
        }
        if !(w0 < w1) {
            return Err(CoreError::InvalidSchedule(
                "STIRAP-down stage must have positive duration".into(),
            ));
        }
        let tol = 1e-9;
        if (u1 - d0).abs() > tol || (d1 - w0).abs() > tol {
            return Err(CoreError::InvalidSchedule(format!(
                "stages must be contiguous and non-overlapping: up ends {u1}, dipole {d0}..{d1}, down starts {w0}"
            )));
        }
        for v in [self.delta_e, self.v0] {
            if !v.is_finite() {
                return Err(CoreError::InvalidSchedule(
                    "delta_e and v0 must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> (f64, f64) {
        (self.stirap_up.0, self.stirap_down.1)
    }

    /// Total gate time.
    pub fn gate_time(&self) -> f64 {
        self.stirap_down.1 - self.stirap_up.0
    }

    fn in_dipole(&self, t: f64) -> bool {
        t >= self.dipole.0 && t < self.dipole.1
    }

    pub fn pump(&self, t: f64) -> f64 {
        if t < self.stirap_up.1 {
            self.pump_up.value(t)
        } else if self.in_dipole(t) {
            0.0
        } else if t <= self.stirap_down.1 {
            self.pump_down.value(t)
        } else {
            0.0
        }
    }

    pub fn stokes(&self, t: f64) -> f64 {
        if t < self.stirap_up.1 {
            self.stokes_up.value(t)
        } else if self.in_dipole(t) {
            0.0
        } else if t <= self.stirap_down.1 {
            self.stokes_down.value(t)
        } else {
            0.0
        }
    }

    pub fn microwave_at(&self, t: f64) -> f64 {
        if self.in_dipole(t) {
            self.microwave.value(t)
        } else {
            0.0
        }
    }

    pub fn detuning_rr_at(&self, t: f64) -> f64 {
        if self.in_dipole(t) {
            self.detuning_rr.value(t)
        } else {
            0.0
        }
    }

    /// Instantaneous exchange strength.
    pub fn exchange_at(&self, t: f64) -> f64 {
        dd_strength_or_zero(self.v0, self.microwave_at(t), self.detuning_rr_at(t))
    }

    /// The same schedule with a different peak dipole-dipole strength.
    pub fn with_v0(&self, v0: f64) -> GateSchedule {
        GateSchedule {
            v0,
            ..self.clone()
        }
    }

    /// The dipole-dipole stage alone, as a manifold drive (envelopes
    /// unwindowed: the caller propagates over the stage interval).
    pub fn manifold_drive(&self) -> ManifoldDrive {
        ManifoldDrive {
            microwave: self.microwave.clone(),
            detuning_rr: self.detuning_rr.clone(),
            v0: self.v0,
        }
    }
}

/// Full 16-dimensional two-qubit Hamiltonian
/// `H₁⊗1 + 1⊗H₂ + V(t)(|rSrP⟩⟨rPrS| + h.c.)` with both single-ion parts
/// driven by the same schedule.
pub fn build_full_two_qubit(schedule: &GateSchedule) -> Result<TimeDependentHamiltonian> {
    schedule.validate()?;
    let schedule = schedule.clone();
    let space = two_ion_space();
    let i_srps = space.index_of("rSrP").expect("fixed basis");
    let i_psrs = space.index_of("rPrS").expect("fixed basis");
    Ok(TimeDependentHamiltonian::new(space, move |t, m| {
        let mut h1 = Array2::zeros((4, 4));
        write_h4(
            &mut h1,
            schedule.pump(t),
            schedule.stokes(t),
            schedule.microwave_at(t),
            schedule.delta_e,
            schedule.detuning_rr_at(t),
        );
        for i1 in 0..4 {
            for j1 in 0..4 {
                let v = h1[[i1, j1]];
                if v != C64::new(0.0, 0.0) {
                    for k in 0..4 {
                        m[[4 * i1 + k, 4 * j1 + k]] += v; // H₁ ⊗ 1
                        m[[4 * k + i1, 4 * k + j1]] += v; // 1 ⊗ H₂
                    }
                }
            }
        }
        let v = C64::new(schedule.exchange_at(t), 0.0);
        m[[i_srps, i_psrs]] += v;
        m[[i_psrs, i_srps]] += v;
    }))
}
