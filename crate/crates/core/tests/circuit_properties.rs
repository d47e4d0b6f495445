//! Property tests for the simulator and circuit evaluation.

use ensemble_vqc_core::circuits::{
    apply_ansatz_layer, run_depth1_circuit, run_reference_circuit, AnsatzConfig, Topology,
};
use ensemble_vqc_core::statevector::{Gate, Observable, StateVector};
use proptest::prelude::*;

fn build_gate(n: usize, kind: usize, a: usize, b: usize, angle: f64) -> Gate {
    match kind {
        0 => Gate::Rx { target: a, angle },
        1 => Gate::Ry { target: a, angle },
        2 => Gate::Rz { target: a, angle },
        _ => {
            if n == 1 || a == b {
                Gate::Rx { target: a, angle }
            } else {
                Gate::Cnot {
                    control: a,
                    target: b,
                }
            }
        }
    }
}

fn gate_sequences() -> impl Strategy<Value = (usize, Vec<(usize, usize, usize, f64)>)> {
    (1usize..=5).prop_flat_map(|n| {
        let gates = prop::collection::vec((0usize..4, 0..n, 0..n, -10.0f64..10.0), 0..64);
        (Just(n), gates)
    })
}

proptest! {
    #[test]
    fn norm_preserved_by_random_sequences((n, seq) in gate_sequences()) {
        let mut state = StateVector::zero(n).unwrap();
        for (kind, a, b, angle) in seq {
            state.apply(build_gate(n, kind, a, b, angle)).unwrap();
        }
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_invert((n, seq) in gate_sequences(), kind in 0usize..4, a_raw in 0usize..5, b_raw in 0usize..5, angle in -10.0f64..10.0) {
        let mut state = StateVector::zero(n).unwrap();
        for (k, a, b, t) in seq {
            state.apply(build_gate(n, k, a, b, t)).unwrap();
        }
        let before = state.clone();
        let gate = build_gate(n, kind, a_raw % n, b_raw % n, angle);
        let inverse = match gate {
            Gate::Rx { target, angle } => Gate::Rx { target, angle: -angle },
            Gate::Ry { target, angle } => Gate::Ry { target, angle: -angle },
            Gate::Rz { target, angle } => Gate::Rz { target, angle: -angle },
            cnot @ Gate::Cnot { .. } => cnot,
        };
        state.apply(gate).unwrap();
        state.apply(inverse).unwrap();
        for (x, y) in state.amplitudes().iter().zip(before.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn expectations_stay_in_unit_interval((n, seq) in gate_sequences()) {
        let mut state = StateVector::zero(n).unwrap();
        for (kind, a, b, angle) in seq {
            state.apply(build_gate(n, kind, a, b, angle)).unwrap();
        }
        for q in 0..n {
            let e = state.expect(Observable::LocalProjector(q)).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
        }
        let e = state.expect(Observable::GlobalProjector).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
        for y in state.measure_all_local() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&y));
        }
    }
}

fn small_circuit() -> impl Strategy<Value = (AnsatzConfig, Vec<f64>, Vec<f64>)> {
    (1usize..=4, 1usize..=3, prop::bool::ANY).prop_flat_map(|(n, depth, all_pairs)| {
        let topology = if all_pairs {
            Topology::AllPairs
        } else {
            Topology::NearestNeighbor
        };
        let config = AnsatzConfig::new(n, depth, topology, Observable::LocalProjector(0)).unwrap();
        let theta = prop::collection::vec(-6.0f64..6.0, config.param_count());
        let x = prop::collection::vec(-3.0f64..3.0, n);
        (Just(config), theta, x)
    })
}

proptest! {
    #[test]
    fn trainable_angles_are_4pi_periodic((config, theta, x) in small_circuit(), k_raw in 0usize..32) {
        let base = run_reference_circuit(&config, &theta, &x).unwrap();
        let mut shifted = theta.clone();
        let k = k_raw % theta.len();
        shifted[k] += 4.0 * std::f64::consts::PI;
        let moved = run_reference_circuit(&config, &shifted, &x).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_inputs_are_2pi_periodic((config, theta, x) in small_circuit(), j_raw in 0usize..8) {
        let base = run_reference_circuit(&config, &theta, &x).unwrap();
        let mut shifted = x.clone();
        let j = j_raw % x.len();
        shifted[j] += 2.0 * std::f64::consts::PI;
        let moved = run_reference_circuit(&config, &theta, &shifted).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_one_run_matches_reference((config, theta, x) in small_circuit()) {
        let depth1 = config.with_depth(1);
        let layer = &theta[..config.layer_param_count()];
        let a = run_depth1_circuit(&config, layer, &x).unwrap();
        let b = run_reference_circuit(&depth1, layer, &x).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// Relabeling the two qubits of a nearest-neighbor layer (swapping the input
/// angles, the per-qubit trainable blocks, and the CNOT direction) permutes
/// the outputs. Checked by building the relabeled circuit gate by gate.
#[test]
fn two_qubit_layer_permutation_covariance() {
    let x = [0.37, -1.21];
    let theta = [0.52, -0.88, 1.95, 0.11];

    let mut original = StateVector::zero(2).unwrap();
    apply_ansatz_layer(&mut original, &x, &theta, Topology::NearestNeighbor).unwrap();
    let original_out = original.measure_all_local();

    let mut relabeled = StateVector::zero(2).unwrap();
    for (qubit, &xj) in [x[1], x[0]].iter().enumerate() {
        relabeled
            .apply(Gate::Ry {
                target: qubit,
                angle: 2.0 * xj,
            })
            .unwrap();
    }
    for (qubit, block) in [[theta[2], theta[3]], [theta[0], theta[1]]]
        .iter()
        .enumerate()
    {
        relabeled
            .apply(Gate::Ry {
                target: qubit,
                angle: block[0],
            })
            .unwrap();
        relabeled
            .apply(Gate::Rz {
                target: qubit,
                angle: block[1],
            })
            .unwrap();
    }
    relabeled
        .apply(Gate::Cnot {
            control: 1,
            target: 0,
        })
        .unwrap();
    let relabeled_out = relabeled.measure_all_local();

    assert!((original_out[0] - relabeled_out[1]).abs() < 1e-12);
    assert!((original_out[1] - relabeled_out[0]).abs() < 1e-12);
}
