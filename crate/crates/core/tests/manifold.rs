//! Two-ion manifold oracles: resonant no-go structure, the rotated-basis
//! reduction, embedding consistency, and spectra of the full model.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use rydgate_core::dynamics::{propagate, PropagationOptions, QuantumState};
use rydgate_core::linalg::eigh;
use rydgate_core::models::{
    build_full_two_qubit, build_h2q_ryd, build_h4, manifold_rotation, resonant_u11,
    rotated_basis_hamiltonian, rotated_manifold_space, rydberg_manifold_space, two_ion_space,
    GateSchedule,
};
use rydgate_core::pulses::{self, Envelope};
use rydgate_core::units::mhz_to_rad_per_ns as mhz;

#[test]
fn resonant_return_is_complete_only_at_quantized_points() {
    // Dense scan: |U₁₁| reaches 1 only where the quantization conditions
    // hold, and the element never approaches -1 (no π phase with return).
    let mut min_dist_to_minus_one = f64::INFINITY;
    let mut spurious_returns = 0u32;
    for i in 1..=40 {
        let omega = 0.015 * i as f64;
        for j in 1..=40 {
            let v0 = 0.012 * j as f64;
            for k in 1..=200 {
                let t = 1.5 * k as f64;
                let u = resonant_u11(omega, v0, t);
                min_dist_to_minus_one =
                    min_dist_to_minus_one.min((u + C64::new(1.0, 0.0)).norm());
                if (u.norm() - 1.0).abs() < 1e-10 {
                    // must satisfy both quantization conditions
                    let w = (4.0 * omega * omega + v0 * v0).sqrt();
                    let m = w * t / (2.0 * std::f64::consts::PI);
                    let k_v = v0 * t / (2.0 * std::f64::consts::PI);
                    let near_int = |x: f64| (x - x.round()).abs() < 1e-6;
                    if !(near_int(m) && near_int(k_v)) {
                        spurious_returns += 1;
                    }
                }
            }
        }
    }
    assert_eq!(spurious_returns, 0);
    assert!(
        min_dist_to_minus_one > 1e-3,
        "found U11 within {min_dist_to_minus_one:.3e} of -1"
    );
}

#[test]
fn rotated_reduction_matches_direct_conjugation_with_time_dependence() {
    let mw = pulses::gaussian(0.4, 50.0, 20.0).unwrap();
    let v0 = 0.13;
    let manifold = build_h2q_ryd(mw.clone(), Envelope::Zero, pulses::constant(v0));
    let rotated = rotated_basis_hamiltonian(mw, v0);
    let r = manifold_rotation();
    for &t in &[0.0, 25.0, 50.0, 77.7] {
        let conj = r.t().mapv(|z: C64| z.conj()).dot(&manifold.evaluate(t)).dot(&r);
        let target = rotated.evaluate(t);
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (conj[[i, j]] - target[[i, j]]).norm() < 1e-12,
                    "t={t}, entry ({i},{j})"
                );
            }
        }
    }
}

#[test]
fn rotated_propagation_reproduces_return_element() {
    // Propagate in the rotated basis, rotate back, and compare the
    // |rSrS⟩ amplitude to the closed form: ⟨rSrS|U|rSrS⟩ = (1 + a)/2
    // where a is the bright-block element.
    let omega = 0.27;
    let v0 = 0.11;
    let h_rot = rotated_basis_hamiltonian(pulses::constant(omega), v0);
    let space = rotated_manifold_space();
    // |rSrS⟩ = (u1 - u4)/√2 in the rotated basis
    let psi0 = QuantumState::superposition(
        &space,
        &[
            ("rSrS+rPrP", C64::new(1.0, 0.0)),
            ("rPrP-rSrS", C64::new(-1.0, 0.0)),
        ],
    )
    .unwrap();
    let opts = PropagationOptions {
        tol: 1e-12,
        sample_dt: 0.5,
    };
    let res = propagate(&h_rot, &psi0, 0.0, 60.0, &opts).unwrap();
    let i1 = space.index_of("rSrS+rPrP").unwrap();
    let i4 = space.index_of("rPrP-rSrS").unwrap();
    for (t, state) in res.times().iter().zip(res.trajectory()) {
        let amp = state.amplitudes();
        // ⟨rSrS| in the rotated basis is (⟨u1| - ⟨u4|)/√2
        let overlap = (amp[i1] - amp[i4]) / 2.0_f64.sqrt();
        let predicted = resonant_u11(omega, v0, *t);
        assert!(
            (overlap - predicted).norm() < 1e-8,
            "t={t}: rotated-basis element {overlap} vs closed form {predicted}"
        );
    }
}

#[test]
fn manifold_embeds_in_full_two_qubit_model() {
    // With pump and Stokes off, the 16-dim model restricted to the
    // Rydberg manifold reproduces the 4-dim manifold dynamics.
    let opts = PropagationOptions::default();
    let delta0 = mhz(25.0);
    let mw = pulses::constant(15.0_f64.sqrt() / 2.0 * delta0);
    let chirp = pulses::chirped_detuning(delta0, 200.0, 0.0).unwrap();
    let v0 = mhz(14.72);

    let schedule = GateSchedule {
        stirap_up: (-1.0, 0.0),
        dipole: (0.0, 180.0),
        stirap_down: (180.0, 181.0),
        pump_up: Envelope::Zero,
        stokes_up: Envelope::Zero,
        pump_down: Envelope::Zero,
        stokes_down: Envelope::Zero,
        microwave: mw.clone(),
        detuning_rr: chirp.clone(),
        delta_e: mhz(20.0),
        v0,
    };
    let h_full = build_full_two_qubit(&schedule).unwrap();
    let full_space = two_ion_space();
    let psi_full = QuantumState::basis_state(&full_space, "rSrS").unwrap();
    let full = propagate(&h_full, &psi_full, 0.0, 180.0, &opts).unwrap();

    let drive = rydgate_core::models::ManifoldDrive {
        microwave: mw,
        detuning_rr: chirp,
        v0,
    };
    let h_manifold = drive.hamiltonian();
    let manifold_space = rydberg_manifold_space();
    let psi_m = QuantumState::basis_state(&manifold_space, "rSrS").unwrap();
    let manifold = propagate(&h_manifold, &psi_m, 0.0, 180.0, &opts).unwrap();

    for label in ["rSrS", "rSrP", "rPrS", "rPrP"] {
        let pf = full.population_series(label).unwrap();
        let pm = manifold.population_series(label).unwrap();
        let worst = pf
            .iter()
            .zip(&pm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{label}: embedding differs by {worst:.3e}");
    }
}

#[test]
fn noninteracting_spectrum_is_the_pairwise_sum() {
    // V₀ = 0, identical ions: the 16-dim spectrum is the Minkowski sum
    // of the single-ion spectra.
    let pump = pulses::gaussian(0.3, 60.0, 25.0).unwrap();
    let stokes = pulses::gaussian(0.25, 40.0, 25.0).unwrap();
    let mw = pulses::constant(0.2);
    let drr = pulses::constant(0.11);
    let delta = 0.13;

    let schedule = GateSchedule {
        stirap_up: (0.0, 100.0),
        dipole: (100.0, 100.0),
        stirap_down: (100.0, 200.0),
        pump_up: pump.clone(),
        stokes_up: stokes.clone(),
        pump_down: pump.clone(),
        stokes_down: stokes.clone(),
        microwave: mw,
        detuning_rr: drr,
        delta_e: delta,
        v0: 0.0,
    };
    let h_full = build_full_two_qubit(&schedule).unwrap();

    for &t in &[10.0, 45.0, 80.0] {
        let h1 = build_h4(
            pump.clone(),
            stokes.clone(),
            Envelope::Zero,
            delta,
            Envelope::Zero,
        )
        .evaluate(t);
        let (single, _) = eigh(&h1).unwrap();
        let mut expected: Vec<f64> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| single[i] + single[j])
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (full, _) = eigh(&h_full.evaluate(t)).unwrap();
        for (a, b) in full.iter().zip(expected) {
            assert!((a - b).abs() < 1e-11, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn full_hamiltonian_commutes_with_ion_swap() {
    let (pump_up, stokes_up) = pulses::ddp_pair(mhz(44.07), 51.375, 3.0, 56.44, 4, 60.0).unwrap();
    let (pump_down, stokes_down) =
        pulses::ddp_pair_mirrored(mhz(44.07), 51.375, 3.0, 56.44, 4, 343.27).unwrap();
    let schedule = GateSchedule {
        stirap_up: (0.0, 120.0),
        dipole: (120.0, 283.27),
        stirap_down: (283.27, 403.27),
        pump_up,
        stokes_up,
        pump_down,
        stokes_down,
        microwave: pulses::constant(mhz(48.412)),
        detuning_rr: pulses::chirped_detuning_from(mhz(25.0), 200.0, 0.0, 120.0).unwrap(),
        delta_e: mhz(20.0),
        v0: mhz(14.72),
    };
    let h = build_full_two_qubit(&schedule).unwrap();
    // P: (i1, i2) -> (i2, i1)
    let mut perm: Array2<C64> = Array2::zeros((16, 16));
    for i1 in 0..4 {
        for i2 in 0..4 {
            perm[[4 * i2 + i1, 4 * i1 + i2]] = C64::new(1.0, 0.0);
        }
    }
    for &t in &[30.0, 119.9, 150.0, 283.0, 350.0] {
        let m = h.evaluate(t);
        let comm = perm.dot(&m) - m.dot(&perm);
        let worst = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "t={t}: [H, P] = {worst:.3e}");
    }
}
