//! States, time-dependent Hamiltonians, and Schrödinger propagation.
//!
//! The working equation is `i ψ̇ = H(t) ψ` with `ħ = 1`, `H` in rad/ns and
//! `t` in ns, so the exact propagator of a constant Hamiltonian is
//! `exp(-i H t)`. Global phase is never normalized away: entangling-phase
//! extraction downstream depends on retaining it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::linalg::{self, C64};
use crate::{CoreError, Result};

/// An ordered set of unique basis-state labels shared by every object
/// built on it.
///
/// Cheap to clone; the label table is reference-counted.
#[derive(Clone)]
pub struct StateSpace {
    labels: Arc<Vec<String>>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(CoreError::InvalidStateSpace(format!(
                "need at least 2 basis states, got {}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(CoreError::InvalidStateSpace(format!(
                    "duplicate basis label {l:?}"
                )));
            }
        }
        Ok(Self {
            labels: Arc::new(labels),
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CoreError::UnknownLabel {
                label: label.to_string(),
            })
    }

    /// Tensor-product space; product labels are the concatenated factor
    /// labels, ordered with the left factor index major.
    pub fn product(&self, other: &StateSpace) -> StateSpace {
        let labels: Vec<String> = self
            .labels
            .iter()
            .flat_map(|a| other.labels.iter().map(move |b| format!("{a}{b}")))
            .collect();
        StateSpace {
            labels: Arc::new(labels),
        }
    }

    pub fn same_as(&self, other: &StateSpace) -> bool {
        Arc::ptr_eq(&self.labels, &other.labels) || *self.labels == *other.labels
    }

    fn describe(&self) -> String {
        format!("dim {} [{}]", self.dim(), self.labels.join(","))
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateSpace({})", self.describe())
    }
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// A normalized complex amplitude vector over a labeled basis.
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: StateSpace,
    amplitudes: Array1<C64>,
}

impl QuantumState {
    /// State concentrated on a single basis label, with amplitude 1.
    pub fn basis_state(space: &StateSpace, label: &str) -> Result<Self> {
        let idx = space.index_of(label)?;
        let mut amplitudes = Array1::zeros(space.dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Build from explicit amplitudes, which must already be normalized
    /// to within 1e-6.
    pub fn from_amplitudes(space: &StateSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: space.dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(CoreError::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Normalized superposition of weighted basis labels.
    pub fn superposition(space: &StateSpace, terms: &[(&str, C64)]) -> Result<Self> {
        let mut amplitudes: Array1<C64> = Array1::zeros(space.dim());
        for (label, weight) in terms {
            let idx = space.index_of(label)?;
            amplitudes[idx] += *weight;
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CoreError::InvalidParameter(
                "superposition weights sum to zero".into(),
            ));
        }
        amplitudes.mapv_inplace(|z| z / norm);
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: &str) -> Result<C64> {
        Ok(self.amplitudes[self.space.index_of(label)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Population `|c|²` and phase `arg(c) ∈ (-π, π]` of one basis label.
    pub fn observe(&self, label: &str) -> Result<(f64, f64)> {
        let c = self.amplitude(label)?;
        let mut phase = c.arg();
        if phase <= -PI {
            phase += 2.0 * PI;
        }
        Ok((c.norm_sqr(), phase))
    }

    pub fn population(&self, label: &str) -> Result<f64> {
        Ok(self.observe(label)?.0)
    }
}

/// `⟨a|b⟩` including global phase.
pub fn inner_product(a: &QuantumState, b: &QuantumState) -> Result<C64> {
    if !a.space.same_as(&b.space) {
        return Err(CoreError::SpaceMismatch {
            left: a.space.describe(),
            right: b.space.describe(),
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(b.amplitudes.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Overlap fidelity `|⟨a|b⟩|²`, symmetric in its arguments.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr())
}

type Evaluator = dyn Fn(f64, &mut Array2<C64>) + Send + Sync;

/// A labeled basis plus an evaluator `t ↦ H(t)` producing a Hermitian
/// matrix in rad/ns.
///
/// Hermiticity is enforced at every evaluation during propagation; a
/// defect above 1e-12 rad/ns is a hard error.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    space: StateSpace,
    evaluator: Arc<Evaluator>,
}

impl TimeDependentHamiltonian {
    pub fn new<F>(space: StateSpace, evaluator: F) -> Self
    where
        F: Fn(f64, &mut Array2<C64>) + Send + Sync + 'static,
    {
        Self {
            space,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Evaluate into a caller-provided buffer (zeroed first).
    pub fn evaluate_into(&self, t: f64, buffer: &mut Array2<C64>) {
        buffer.fill(C64::new(0.0, 0.0));
        (self.evaluator)(t, buffer);
    }

    pub fn evaluate(&self, t: f64) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim(), self.dim()));
        self.evaluate_into(t, &mut m);
        m
    }

    fn evaluate_checked(&self, t: f64, buffer: &mut Array2<C64>) -> Result<()> {
        self.evaluate_into(t, buffer);
        let defect = linalg::hermiticity_defect(buffer);
        if defect > HERMITICITY_TOL {
            return Err(CoreError::NonHermitian { t, defect });
        }
        Ok(())
    }

    /// The Hamiltonian whose forward propagation undoes this one:
    /// `H'(t) = conj(H(t0 + t1 - t))`. Used by time-reversal checks.
    pub fn time_mirrored_conjugate(&self, t0: f64, t1: f64) -> TimeDependentHamiltonian {
        let inner = self.clone();
        TimeDependentHamiltonian::new(self.space.clone(), move |t, m| {
            inner.evaluate_into(t0 + t1 - t, m);
            m.mapv_inplace(|z| z.conj());
        })
    }
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeDependentHamiltonian({})", self.space.describe())
    }
}

const HERMITICITY_TOL: f64 = 1e-12;

/// Sparsely sampled trajectory of a single propagation.
#[derive(Clone, Debug)]
pub struct PropagationResult {
    times: Vec<f64>,
    trajectory: Vec<QuantumState>,
}

impl PropagationResult {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn trajectory(&self) -> &[QuantumState] {
        &self.trajectory
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &QuantumState {
        self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Population of one label at every sample time.
    pub fn population_series(&self, label: &str) -> Result<Vec<f64>> {
        let idx = self.trajectory[0].space.index_of(label)?;
        Ok(self
            .trajectory
            .iter()
            .map(|s| s.amplitudes[idx].norm_sqr())
            .collect())
    }

    /// Largest norm deviation `|‖ψ‖ - 1|` along the trajectory.
    pub fn max_norm_drift(&self) -> f64 {
        self.trajectory
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Tolerance and sampling controls for [`propagate`].
#[derive(Clone, Copy, Debug)]
pub struct PropagationOptions {
    /// Relative local-error tolerance of the adaptive stepper.
    /// Must lie in `[1e-14, 1e-6]`.
    pub tol: f64,
    /// Trajectory sample spacing in ns.
    pub sample_dt: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            sample_dt: 0.1,
        }
    }
}

impl PropagationOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// b - b* (error estimator weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Rhs<'a> {
    h: &'a TimeDependentHamiltonian,
    buffer: Array2<C64>,
    evals: usize,
}

impl<'a> Rhs<'a> {
    fn new(h: &'a TimeDependentHamiltonian) -> Self {
        let n = h.dim();
        Self {
            h,
            buffer: Array2::zeros((n, n)),
            evals: 0,
        }
    }

    /// `dψ/dt = -i H(t) ψ`
    fn eval(&mut self, t: f64, y: &Array1<C64>, dy: &mut Array1<C64>) -> Result<()> {
        self.h.evaluate_checked(t, &mut self.buffer)?;
        self.evals += 1;
        let n = y.len();
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.buffer[[i, j]] * y[j];
            }
            dy[i] = -C64::i() * acc;
        }
        Ok(())
    }
}

fn sample_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = (span / dt).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
    let last = *grid.last().unwrap();
    if t1 - last > 1e-9 * span.max(1.0) {
        grid.push(t1);
    } else {
        *grid.last_mut().unwrap() = t1;
    }
    grid
}

/// Solve `i ψ̇ = H(t) ψ` from `t0` to `t1` with an adaptive embedded
/// Dormand-Prince 5(4) pair, sampling the trajectory on a uniform grid.
///
/// The final norm is guaranteed to stay within `10·tol` of 1 (up to a
/// small floating-point floor); violations are reported as errors rather
/// than silently renormalized.
pub fn propagate(
    h: &TimeDependentHamiltonian,
    psi0: &QuantumState,
    t0: f64,
    t1: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult> {
    if !psi0.space.same_as(&h.space) {
        return Err(CoreError::SpaceMismatch {
            left: psi0.space.describe(),
            right: h.space.describe(),
        });
    }
    if !(t1 > t0) {
        return Err(CoreError::InvalidParameter(format!(
            "propagation interval must have t1 > t0 (got {t0}..{t1})"
        )));
    }
    if !(1e-14..=1e-6).contains(&opts.tol) {
        return Err(CoreError::InvalidParameter(format!(
            "tol must lie in [1e-14, 1e-6], got {:e}",
            opts.tol
        )));
    }
    if !(opts.sample_dt > 0.0) {
        return Err(CoreError::InvalidParameter(
            "sample_dt must be positive".into(),
        ));
    }
    let deviation = (psi0.norm() - 1.0).abs();
    if deviation > 1e-6 {
        return Err(CoreError::NotNormalized { deviation });
    }

    let n = h.dim();
    let span = t1 - t0;
    let grid = sample_grid(t0, t1, opts.sample_dt);
    let mut rhs = Rhs::new(h);

    let atol = opts.tol * 1e-3;
    let rtol = opts.tol;

    let mut t = t0;
    let mut y = psi0.amplitudes.clone();
    let mut k: Vec<Array1<C64>> = (0..7).map(|_| Array1::zeros(n)).collect();
    let mut y_stage: Array1<C64> = Array1::zeros(n);
    let mut y_new: Array1<C64> = Array1::zeros(n);

    let mut times = Vec::with_capacity(grid.len());
    let mut trajectory = Vec::with_capacity(grid.len());
    times.push(t0);
    trajectory.push(psi0.clone());

    let mut k1 = {
        let mut dy = Array1::zeros(n);
        rhs.eval(t, &y, &mut dy)?;
        dy
    };

    let mut h_step = (opts.sample_dt.min(span / 10.0)).clamp(1e-6, 1.0);
    let h_floor = 1e-14 * span.max(1.0);
    let mut next_sample = 1usize;

    while next_sample < grid.len() {
        let target = grid[next_sample];
        let mut clamped = false;
        let mut h_try = h_step;
        if t + h_try >= target {
            h_try = target - t;
            clamped = true;
        }
        if h_try < h_floor {
            return Err(CoreError::StepSizeUnderflow { t, h: h_try });
        }

        // Stage evaluations.
        k[0].assign(&k1);
        for i in 0..n {
            y_stage[i] = y[i] + h_try * A21 * k[0][i];
        }
        rhs.eval(t + C2 * h_try, &y_stage, &mut k[1])?;
        for i in 0..n {
            y_stage[i] = y[i] + h_try * (A31 * k[0][i] + A32 * k[1][i]);
        }
        rhs.eval(t + C3 * h_try, &y_stage, &mut k[2])?;
        for i in 0..n {
            y_stage[i] = y[i] + h_try * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        rhs.eval(t + C4 * h_try, &y_stage, &mut k[3])?;
        for i in 0..n {
            y_stage[i] = y[i]
                + h_try * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        rhs.eval(t + C5 * h_try, &y_stage, &mut k[4])?;
        for i in 0..n {
            y_stage[i] = y[i]
                + h_try
                    * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i]
                        + A65 * k[4][i]);
        }
        rhs.eval(t + h_try, &y_stage, &mut k[5])?;
        for i in 0..n {
            y_new[i] = y[i]
                + h_try
                    * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i]
                        + B6 * k[5][i]);
        }
        rhs.eval(t + h_try, &y_new, &mut k[6])?;

        // Embedded error estimate.
        let mut err_acc = 0.0_f64;
        for i in 0..n {
            let e = h_try
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
            err_acc += (e.norm() / scale).powi(2);
        }
        let err = (err_acc / n as f64).sqrt();

        if !err.is_finite() {
            return Err(CoreError::NumericalFailure {
                t,
                message: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            t += h_try;
            std::mem::swap(&mut y, &mut y_new);
            k1.assign(&k[6]); // FSAL
            if clamped {
                t = target;
                times.push(t);
                trajectory.push(QuantumState {
                    space: psi0.space.clone(),
                    amplitudes: y.clone(),
                });
                next_sample += 1;
            }
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h_step = (h_try * factor).min(span);
    }

    let result = PropagationResult { times, trajectory };
    let final_norm_dev = (result.final_state().norm() - 1.0).abs();
    let norm_budget = (10.0 * opts.tol).max(5e-13);
    if final_norm_dev > norm_budget {
        return Err(CoreError::NumericalFailure {
            t: t1,
            message: format!(
                "final norm drifted by {final_norm_dev:.3e} (budget {norm_budget:.3e})"
            ),
        });
    }
    Ok(result)
}

/// Fixed-step midpoint-exponential propagator:
/// `ψ(t+dt) = exp(-i H(t+dt/2) dt) ψ(t)`.
///
/// Second-order accurate. Kept as an independent cross-check of
/// [`propagate`]; the two integrators share no stepping code.
pub fn propagate_expmid(
    h: &TimeDependentHamiltonian,
    psi0: &QuantumState,
    t0: f64,
    t1: f64,
    dt: f64,
    sample_dt: f64,
) -> Result<PropagationResult> {
    if !psi0.space.same_as(&h.space) {
        return Err(CoreError::SpaceMismatch {
            left: psi0.space.describe(),
            right: h.space.describe(),
        });
    }
    if !(t1 > t0) || !(dt > 0.0) || !(sample_dt > 0.0) {
        return Err(CoreError::InvalidParameter(
            "expmid propagation needs t1 > t0 and positive steps".into(),
        ));
    }

    let grid = sample_grid(t0, t1, sample_dt);
    let n = h.dim();
    let mut buffer = Array2::zeros((n, n));
    let mut y = psi0.amplitudes.clone();

    let mut times = Vec::with_capacity(grid.len());
    let mut trajectory = Vec::with_capacity(grid.len());
    times.push(t0);
    trajectory.push(psi0.clone());

    for window in grid.windows(2) {
        let (a, b) = (window[0], window[1]);
        let steps = ((b - a) / dt).ceil().max(1.0) as usize;
        let h_step = (b - a) / steps as f64;
        for s in 0..steps {
            let mid = a + (s as f64 + 0.5) * h_step;
            h.evaluate_checked(mid, &mut buffer)?;
            let u = linalg::expm_minus_i_h_dt(&buffer, h_step);
            y = u.dot(&y);
        }
        times.push(b);
        trajectory.push(QuantumState {
            space: psi0.space.clone(),
            amplitudes: y.clone(),
        });
    }

    Ok(PropagationResult { times, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_level() -> StateSpace {
        StateSpace::new(["0", "e"]).unwrap()
    }

    #[test]
    fn state_space_rejects_duplicates_and_small_dims() {
        assert!(StateSpace::new(["a", "a"]).is_err());
        assert!(StateSpace::new(["a"]).is_err());
        assert!(StateSpace::new(["0", "e", "rS", "rP"]).is_ok());
    }

    #[test]
    fn product_space_labels() {
        let s = StateSpace::new(["rS", "rP"]).unwrap();
        let p = s.product(&s);
        assert_eq!(p.labels(), ["rSrS", "rSrP", "rPrS", "rPrP"]);
    }

    #[test]
    fn observe_reports_population_and_phase() {
        let space = two_level();
        // (|0⟩ + i|e⟩)/√2 → population 0.5, phase π/2 on "e"
        let s = QuantumState::superposition(
            &space,
            &[("0", C64::new(1.0, 0.0)), ("e", C64::new(0.0, 1.0))],
        )
        .unwrap();
        let (p, phase) = s.observe("e").unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((phase - PI / 2.0).abs() < 1e-15);
        assert!(s.observe("nope").is_err());
    }

    #[test]
    fn observe_phase_convention_is_half_open() {
        let space = two_level();
        let s = QuantumState::from_amplitudes(
            &space,
            array![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        let (_, phase) = s.observe("0").unwrap();
        assert_eq!(phase, PI);
    }

    #[test]
    fn fidelity_examples() {
        let space = two_level();
        let zero = QuantumState::basis_state(&space, "0").unwrap();
        let e = QuantumState::basis_state(&space, "e").unwrap();
        let plus = QuantumState::superposition(
            &space,
            &[("0", C64::new(1.0, 0.0)), ("e", C64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&zero, &e).unwrap() < 1e-30);
        assert!((fidelity(&plus, &zero).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (fidelity(&plus, &zero).unwrap() - fidelity(&zero, &plus).unwrap()).abs() < 1e-15
        );
    }

    #[test]
    fn fidelity_rejects_mismatched_spaces() {
        let a = QuantumState::basis_state(&two_level(), "0").unwrap();
        let other = StateSpace::new(["x", "y", "z"]).unwrap();
        let b = QuantumState::basis_state(&other, "x").unwrap();
        assert!(fidelity(&a, &b).is_err());
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |_, _| {});
        let psi0 = QuantumState::superposition(
            &space,
            &[("0", C64::new(0.6, 0.0)), ("e", C64::new(0.0, 0.8))],
        )
        .unwrap();
        let res = propagate(&h, &psi0, 0.0, 17.3, &PropagationOptions::default()).unwrap();
        for (a, b) in res
            .final_state()
            .amplitudes()
            .iter()
            .zip(psi0.amplitudes().iter())
        {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn resonant_pi_pulse_inverts_population() {
        let space = two_level();
        let omega = 0.25; // rad/ns
        let h = TimeDependentHamiltonian::new(space.clone(), move |_, m| {
            m[[0, 1]] = C64::new(omega / 2.0, 0.0);
            m[[1, 0]] = C64::new(omega / 2.0, 0.0);
        });
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        let t1 = PI / omega; // Ω·t = π
        let res = propagate(&h, &psi0, 0.0, t1, &PropagationOptions::default()).unwrap();
        let p_e = res.final_state().population("e").unwrap();
        assert!((p_e - 1.0).abs() < 1e-9, "P_e = {p_e}");
    }

    #[test]
    fn propagate_validates_inputs() {
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |_, _| {});
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        assert!(propagate(&h, &psi0, 1.0, 1.0, &PropagationOptions::default()).is_err());
        assert!(propagate(&h, &psi0, 0.0, 1.0, &PropagationOptions::with_tol(1e-4)).is_err());
        assert!(propagate(&h, &psi0, 0.0, 1.0, &PropagationOptions::with_tol(1e-15)).is_err());
    }

    #[test]
    fn absurd_stiffness_reports_step_underflow_with_time() {
        // A drive far beyond any resolvable frequency forces the step
        // controller below its floor; the error carries the time reached.
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |_, m| {
            m[[0, 1]] = C64::new(1e18, 0.0);
            m[[1, 0]] = C64::new(1e18, 0.0);
        });
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        let err = propagate(&h, &psi0, 0.0, 10.0, &PropagationOptions::default()).unwrap_err();
        match err {
            CoreError::StepSizeUnderflow { t, .. } => assert!((0.0..10.0).contains(&t)),
            other => panic!("expected step-size underflow, got {other}"),
        }
    }

    #[test]
    fn non_hermitian_evaluator_is_a_hard_error() {
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |_, m| {
            m[[0, 1]] = C64::new(1.0, 0.0);
            m[[1, 0]] = C64::new(0.5, 0.0);
        });
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        let err = propagate(&h, &psi0, 0.0, 1.0, &PropagationOptions::default()).unwrap_err();
        assert!(matches!(err, CoreError::NonHermitian { .. }));
    }

    #[test]
    fn expmid_matches_adaptive_on_driven_two_level() {
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |t: f64, m| {
            let w = 0.2 * (-((t - 5.0) / 3.0).powi(2)).exp();
            m[[0, 1]] = C64::new(w / 2.0, 0.0);
            m[[1, 0]] = C64::new(w / 2.0, 0.0);
            m[[1, 1]] = C64::new(0.05, 0.0);
        });
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        let a = propagate(&h, &psi0, 0.0, 10.0, &PropagationOptions::default()).unwrap();
        let b = propagate_expmid(&h, &psi0, 0.0, 10.0, 5e-4, 0.5).unwrap();
        let diff: f64 = a
            .final_state()
            .amplitudes()
            .iter()
            .zip(b.final_state().amplitudes().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "integrators disagree by {diff:.3e}");
    }

    #[test]
    fn trajectory_grid_is_strictly_increasing_and_ends_at_t1() {
        let space = two_level();
        let h = TimeDependentHamiltonian::new(space.clone(), |_, _| {});
        let psi0 = QuantumState::basis_state(&space, "0").unwrap();
        let res = propagate(
            &h,
            &psi0,
            0.0,
            1.05,
            &PropagationOptions {
                tol: 1e-10,
                sample_dt: 0.1,
            },
        )
        .unwrap();
        let times = res.times();
        for w in times.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(*times.last().unwrap(), 1.05);
        assert_eq!(res.len(), res.trajectory().len());
    }
}
