use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use opengrape::algebra::PauliSum;
use opengrape::numerics::expm;
use opengrape::propagation::{ControlSequence, OpenModel};
use opengrape::relaxation::RelaxationModel;
use opengrape::systems::*;
use opengrape::trotter::*;
use opengrape::{CMat, RMat};

fn pauli(s: &str) -> PauliSum {
    s.parse().unwrap()
}

fn evolve(h: &CMat, t: f64) -> CMat {
    expm(&(h * Complex64::new(0.0, -2.0 * PI * t))).unwrap()
}

#[test]
fn first_order_convergence() {
    let sys = system_ii(PRESET_J_XX, 1.0).unwrap();
    let errors: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&n| trotter_reduce(&sys, 0, 0.125, n).unwrap().error)
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }
    assert!(trotter_reduce(&sys, 0, 0.125, 64).unwrap().fidelity >= 0.99);
    assert!(trotter_reduce(&sys, 0, 0.125, 0).is_err());
    assert!(trotter_reduce(&sys, 5, 0.125, 4).is_err());
}

#[test]
fn commuting_halves_are_exact() {
    let sys = ControlSystem::from_pauli("toy", &pauli("x1 + 1x"), &[pauli("z1")]).unwrap();
    let minus = pi_conjugated_drift(&sys, 0).unwrap();
    let expected = ControlSystem::from_pauli("toy", &pauli("-1 * x1 + 1x"), &[pauli("z1")]).unwrap().drift;
    assert!((&minus - &expected).norm() < 1e-12);
    let r = trotter_reduce(&sys, 0, 0.3, 1).unwrap();
    assert!(r.error < 1e-12);
    assert!((r.fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn pi_conjugation_flips_only_flip_flop_terms() {
    let sys = system_ii(PRESET_J_XX, 1.0).unwrap();
    let minus = pi_conjugated_drift(&sys, 0).unwrap();
    let diff = (&sys.drift - &minus) * Complex64::new(0.5, 0.0);
    let expected = ControlSystem::from_pauli("d", &pauli("1xx1 + 1yy1"), &[]).unwrap().drift;
    assert!((&diff - &expected).norm() < 1e-12);
}

#[test]
fn quasi_period_of_a_single_spin() {
    // e^{−iπtσ_z} equals −e^{iπσ_z/4} at t = 0.75 and +e^{iπσ_z/4} at t = 1.75.
    let h = ControlSystem::from_pauli("z", &pauli("z"), &[]).unwrap().drift;
    let target = evolve(&h, -0.25);
    let hits = quasi_period_search(&h, &target, 0.0, 2.0, 0.05).unwrap();
    assert_eq!(hits.len(), 41);
    assert!((hits[0].t - 0.75).abs() < 1e-9 && (hits[1].t - 1.75).abs() < 1e-9);
    assert!((hits[0].fidelity - 1.0).abs() < 1e-12);
    assert!((hits[0].overlap + 1.0).abs() < 1e-12);
    assert!((hits[1].overlap - 1.0).abs() < 1e-12);
    for w in hits.windows(2) {
        assert!(w[0].fidelity >= w[1].fidelity);
    }
    assert!(quasi_period_search(&h, &target, 0.0, 1.0, 0.0).is_err());
    assert!(quasi_period_search(&h, &target, 1.0, 0.0, 0.1).is_err());
    assert!(quasi_period_search(&h, &CMat::identity(4, 4), 0.0, 1.0, 0.1).is_err());
}

#[test]
fn no_early_recurrence_for_generic_coupling() {
    let sys = system_ii(2.0, 1.0).unwrap();
    let target = evolve(&sys.drift, -0.25);
    let hits = quasi_period_search(&sys.drift, &target, 0.0, 30.0, 1e-3).unwrap();
    assert!(hits[0].fidelity < 1.0 - 1e-6, "{:?}", hits[0]);
}

#[test]
fn control_power_of_simple_sequences() {
    assert_eq!(control_power(&ControlSequence::zeros(10, 2, 0.05).unwrap()), 0.0);
    let one = ControlSequence::new(0.05, RMat::from_row_slice(1, 2, &[-50.0, 20.0])).unwrap();
    assert_eq!(control_power(&one), 50.0);
}

fn small_plan() -> TrotterPlan {
    TrotterPlan {
        name: "small".into(),
        n1: 1,
        n2: 1,
        pulse_amplitude: 5.0e5,
        dt: 2.5e-7,
        items: vec![
            PlanItem::Free { duration: 1.0e-6 },
            PlanItem::Pulse { angles: vec![PI, 0.0], role: PulseRole::Decouple },
            PlanItem::Free { duration: 5.0e-7 },
            PlanItem::Pulse { angles: vec![PI / 2.0, -PI / 2.0], role: PulseRole::Refocus },
        ],
    }
}

#[test]
fn compiled_program_round_trip() {
    let plan = small_plan();
    assert!((plan.duration() - 3.0e-6).abs() < 1e-15);
    assert_eq!(plan.n_pulses(), 2);
    let prog = compile_trotter_cnot(&plan, plan.dt, false).unwrap();
    assert_eq!(prog.n_slots(), 12);
    assert_eq!(prog.control_power(), 5.0e5);
    assert!(!prog.has_ideal_pulses());
    let seq = prog.to_sequence(100).unwrap();
    assert_eq!(seq.n_slots(), 12);
    assert_eq!(PulseProgram::from_sequence(&seq), prog);
    assert!(prog.to_sequence(5).is_err());

    let ideal = compile_trotter_cnot(&plan, plan.dt, true).unwrap();
    assert!(ideal.has_ideal_pulses());
    assert_eq!(ideal.n_slots(), 6);
    assert!(ideal.to_sequence(100).is_err());

    for p in [&prog, &ideal] {
        let text = p.to_string();
        assert_eq!(text.parse::<PulseProgram>().unwrap(), *p);
    }
    assert!("dt=1 controls=2 steps=1\nrun 3 1.0\n".parse::<PulseProgram>().is_err());
    assert!("dt=1 controls=1 steps=2\nrun 3 1.0\n".parse::<PulseProgram>().is_err());
    assert!("dt=1 controls=1\njump 1.0\n".parse::<PulseProgram>().is_err());
}

#[test]
fn program_propagation_matches_sequence_propagation() {
    let sys = system_ii(PRESET_J_XX, 1.0).unwrap();
    let enc = bell_encoding();
    let (_, ft) = lift_logical_gate(&cnot(), &enc).unwrap();
    let open = sys.with_relaxation(Arc::new(RelaxationModel::full().unwrap())).unwrap();
    let model = OpenModel::new(&open, &ft, Some(&enc.basis)).unwrap();
    let prog = compile_trotter_cnot(&small_plan(), 2.5e-7, false).unwrap();
    let seq = prog.to_sequence(100).unwrap();
    assert!((prog.fidelity(&model).unwrap() - model.fidelity(&seq).unwrap()).abs() < 1e-12);
}

#[test]
fn plan_serialises() {
    let plan = small_plan();
    let json = serde_json::to_string(&plan).unwrap();
    assert!(json.contains("\"kind\":\"free\""));
    let back: TrotterPlan = serde_json::from_str(&json).unwrap();
    assert_eq!(back, plan);
}

#[test]
fn incommensurate_step_is_rejected() {
    let plan = small_plan();
    assert!(compile_trotter_cnot(&plan, 3.0e-7, false).is_err());
    assert!(TrotterPlan { dt: 3.0e-7, ..plan }.check().is_err());
}

#[test]
fn preset_cnot_in_the_closed_system() {
    let enc = bell_encoding();
    let sys = system_ii(PRESET_J_XX, 1.0).unwrap();
    let drift = logical_drift(&sys, &enc).unwrap();
    assert!((drift.z[0] - PRESET_J_XX).abs() < 1e-12 && (drift.z[1] - PRESET_J_XX).abs() < 1e-12);
    assert!((drift.xx + 0.5).abs() < 1e-12);

    let plan = TrotterPlan::preset(&sys, &enc).unwrap();
    assert_eq!((plan.n1, plan.n2), (PRESET_N1, PRESET_N2));
    plan.check().unwrap();
    let (_, ft) = lift_logical_gate(&cnot(), &enc).unwrap();
    let model = OpenModel::new(&sys, &ft, Some(&enc.basis)).unwrap();
    let finite = compile_trotter_cnot(&plan, plan.dt, false).unwrap();
    let ideal = compile_trotter_cnot(&plan, plan.dt, true).unwrap();
    let (ff, fi) = (finite.fidelity(&model).unwrap(), ideal.fidelity(&model).unwrap());
    assert!(ff >= 0.90, "{ff}");
    assert!((ff - fi).abs() < 0.01);
    assert!((finite.duration() - plan.duration()).abs() < 1e-6);
    assert_eq!(finite.control_power(), PRESET_PULSE_AMPLITUDE);
}
