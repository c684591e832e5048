use std::sync::Arc;

use num_complex::Complex64;
use opengrape::algebra::{adj_superop, Pauli, PauliSum};
use opengrape::experiments::*;
use opengrape::grape::{optimize, ClosedObjective, OpenObjective, OptimizerConfig};
use opengrape::propagation::OpenModel;
use opengrape::relaxation::{RelaxationModel, RelaxationTerm};
use opengrape::systems::ControlSystem;

fn toy() -> ControlSystem {
    let drift: PauliSum = "0 * z".parse().unwrap();
    let controls: Vec<PauliSum> = ["x", "y"].iter().map(|s| s.parse().unwrap()).collect();
    ControlSystem::from_pauli("toy", &drift, &controls).unwrap()
}

fn config(iterations: usize) -> OptimizerConfig {
    OptimizerConfig {
        max_iterations: iterations,
        u0: 0.5,
        u_max: Some(1.0),
        seed: 11,
        ..Default::default()
    }
}

fn depolarizing(w: f64) -> RelaxationModel {
    let terms = [Pauli::X, Pauli::Y, Pauli::Z]
        .iter()
        .map(|p| RelaxationTerm {
            operator: p.matrix::<f64>() * Complex64::new(0.5, 0.0),
            weight: w,
            label: format!("{p:?}"),
        })
        .collect();
    RelaxationModel::from_terms("depolarizing", 1, terms).unwrap()
}

#[test]
fn reachability_transition_and_monotone_max() {
    let x = Pauli::X.matrix::<f64>();
    let obj = ClosedObjective::new(&toy(), &x, true).unwrap();
    let curve = top_curve(&obj, &[1.0, 0.1, 0.2], 0.05, 3, &config(200)).unwrap();
    let ts: Vec<f64> = curve.entries.iter().map(|e| e.t).collect();
    assert_eq!(ts, vec![0.1, 0.2, 1.0]);
    // With |u| ≤ 1 Hz a π rotation needs 0.5 s.
    assert!(curve.entries[0].stats.mean < 0.2);
    assert!(curve.entries[2].stats.mean >= 0.99);
    for w in curve.entries.windows(2) {
        assert!(w[1].stats.max >= w[0].stats.max - 0.01);
    }
    for e in &curve.entries {
        assert_eq!(e.members.len(), 3);
        assert!(e.stats.rmsd.is_some());
        let s = FamilyStats::from_values(&e.fidelities()).unwrap();
        assert_eq!(s, e.stats);
    }
}

#[test]
fn single_member_family_is_optimize() {
    let x = Pauli::X.matrix::<f64>();
    let obj = ClosedObjective::new(&toy(), &x, true).unwrap();
    let cfg = config(30);
    let e = family(&obj, 0.4, 0.05, 2, 1, &cfg).unwrap();
    let seed = e.members[0].seed;
    let r = optimize(&obj, 8, 0.05, &OptimizerConfig { seed, ..cfg }).unwrap();
    assert_eq!(e.stats.mean.to_bits(), r.best_fidelity.to_bits());
    assert_eq!(e.stats.rmsd, None);
    assert_eq!(e.members[0].sequence, r.best);
}

#[test]
fn deterministic_families() {
    let x = Pauli::X.matrix::<f64>();
    let obj = ClosedObjective::new(&toy(), &x, true).unwrap();
    let a = family(&obj, 0.3, 0.05, 0, 3, &config(5)).unwrap();
    let b = family(&obj, 0.3, 0.05, 0, 3, &config(5)).unwrap();
    for (p, q) in a.members.iter().zip(&b.members) {
        assert_eq!(p.fidelity.to_bits(), q.fidelity.to_bits());
        assert_eq!(p.sequence, q.sequence);
    }
    assert!(top_curve(&obj, &[], 0.05, 3, &config(5)).is_err());
    assert!(family(&obj, 0.33, 0.05, 0, 3, &config(5)).is_err());
}

#[test]
fn cross_evaluation_without_relaxation_matches_closed() {
    let x = Pauli::X.matrix::<f64>();
    let closed = toy();
    let obj = ClosedObjective::new(&closed, &x, true).unwrap();
    let e = family(&obj, 0.3, 0.05, 0, 4, &config(3)).unwrap();
    let open = closed.with_relaxation(Arc::new(RelaxationModel::zero(1).unwrap())).unwrap();
    let model = OpenModel::new(&open, &adj_superop(&x).unwrap(), None).unwrap();
    let c = cross_evaluate(&e, &model).unwrap();
    for r in &c.rows {
        assert!((r.open_fidelity - r.closed_fidelity).abs() < 1e-10);
    }
    assert!((c.open.mean - c.closed.mean).abs() < 1e-10);
    assert!((c.open.rmsd.unwrap() - c.closed.rmsd.unwrap()).abs() < 1e-10);
}

#[test]
fn uniform_decay_is_affine() {
    let x = Pauli::X.matrix::<f64>();
    let closed = toy();
    let obj = ClosedObjective::new(&closed, &x, true).unwrap();
    let e = family(&obj, 0.3, 0.05, 0, 4, &config(3)).unwrap();
    let w = 0.4;
    let open = closed.with_relaxation(Arc::new(depolarizing(w))).unwrap();
    let model = OpenModel::new(&open, &adj_superop(&x).unwrap(), None).unwrap();
    let c = cross_evaluate(&e, &model).unwrap();
    // Γ acts as 2w on traceless operators and commutes with every ad_H.
    let k = (-2.0 * w * 0.3f64).exp();
    for r in &c.rows {
        let expected = 0.25 + k * (r.closed_fidelity - 0.25);
        assert!((r.open_fidelity - expected).abs() < 1e-10);
    }
    assert!((c.open.rmsd.unwrap() - k * c.closed.rmsd.unwrap()).abs() < 1e-10);
}

#[test]
fn comparison_without_relaxation_shows_no_advantage() {
    let x = Pauli::X.matrix::<f64>();
    let sys = toy().with_relaxation(Arc::new(RelaxationModel::zero(1).unwrap())).unwrap();
    let target = adj_superop(&x).unwrap();
    let open = OpenObjective::from_system(&sys, &target, None).unwrap();
    let model = OpenModel::new(&sys, &target, None).unwrap();
    let closed = ClosedObjective::new(&sys, &x, true).unwrap();
    let c = compare_open_vs_time_optimal(&open, &model, &closed, 0.2, 0.05, 3, &config(200)).unwrap();
    // Both objectives saturate at the same clipped optimum.
    assert!((c.open_fidelity - c.family.open.mean).abs() < 1e-6);
    assert!((c.open_fidelity - c.family.open.max).abs() < 1e-6);
}
