//! Parameterized circuit construction and evaluation.
//!
//! One ansatz layer applies, in order:
//!
//! 1. the encoding block: `RY(2 x_j)` on each qubit j, preparing the
//!    product state `cos(x_j)|0> + sin(x_j)|1>` per qubit when starting
//!    from |0...0>;
//! 2. the trainable block: `RY(theta[2j])` then `RZ(theta[2j+1])` on each
//!    qubit j (two trainable angles per qubit per layer);
//! 3. the entangler: nearest-neighbor `CNOT(j, j+1)` for j = 0..n-2, or
//!    all-pairs `CNOT(i, j)` for every i < j in lexicographic order.
//!
//! The reference circuit stacks `depth` such layers, re-encoding the same
//! input in every layer (data re-uploading). The depth-1 evaluation used by
//! ensemble models is the single-layer special case.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::statevector::{Gate, Observable, StateVector, MAX_QUBITS};

/// CNOT placement within a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    NearestNeighbor,
    AllPairs,
}

/// Width, depth, entangler topology, and output observable of a circuit
/// family. A config fully determines the circuit up to its parameter values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub depth: usize,
    pub topology: Topology,
    pub observable: Observable,
}

impl AnsatzConfig {
    pub fn new(
        n_qubits: usize,
        depth: usize,
        topology: Topology,
        observable: Observable,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(alloc::format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if depth == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "depth must be at least 1",
            )));
        }
        if let Observable::LocalProjector(q) = observable {
            if q >= n_qubits {
                return Err(Error::QubitIndex { index: q, n_qubits });
            }
        }
        Ok(AnsatzConfig {
            n_qubits,
            depth,
            topology,
            observable,
        })
    }

    /// Same family with a different depth.
    pub fn with_depth(&self, depth: usize) -> Self {
        AnsatzConfig { depth, ..*self }
    }

    /// Trainable angles per layer: two per qubit.
    pub fn layer_param_count(&self) -> usize {
        2 * self.n_qubits
    }

    /// Total trainable angles: depth * 2 * n_qubits.
    pub fn param_count(&self) -> usize {
        self.depth * self.layer_param_count()
    }

    /// Entangler CNOTs as (control, target) pairs, in application order.
    pub fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for_each_entangler_pair(self.n_qubits, self.topology, |c, t| {
            pairs.push((c, t));
            Ok(())
        })
        .expect("collecting pairs cannot fail");
        pairs
    }
}

/// Single source of the entangler gate order: nearest-neighbor CNOT(j, j+1)
/// for ascending j, or all-pairs CNOT(i, j) for i < j in lexicographic order.
pub(crate) fn for_each_entangler_pair(
    n_qubits: usize,
    topology: Topology,
    mut f: impl FnMut(usize, usize) -> Result<()>,
) -> Result<()> {
    match topology {
        Topology::NearestNeighbor => {
            for j in 0..n_qubits.saturating_sub(1) {
                f(j, j + 1)?;
            }
        }
        Topology::AllPairs => {
            for i in 0..n_qubits {
                for j in i + 1..n_qubits {
                    f(i, j)?;
                }
            }
        }
    }
    Ok(())
}

/// Prepares the qubit-encoded product state from |0...0>:
/// each component x_j becomes `cos(x_j)|0> + sin(x_j)|1>` on qubit j.
pub fn qubit_encode(x: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(x.len())?;
    for (j, &xj) in x.iter().enumerate() {
        state.apply(Gate::Ry {
            target: j,
            angle: 2.0 * xj,
        })?;
    }
    Ok(state)
}

/// Normalizes `x` into the amplitudes of an `n_qubits` state, zero-padded up
/// to 2^n. Provided for completeness; the models in this crate use
/// [`qubit_encode`].
pub fn amplitude_encode(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    let dim = 1usize
        .checked_shl(n_qubits as u32)
        .filter(|_| n_qubits <= MAX_QUBITS)
        .unwrap_or(0);
    if dim == 0 || x.len() > dim {
        return Err(Error::Config(alloc::format!(
            "cannot amplitude-encode {} values into {n_qubits} qubits",
            x.len()
        )));
    }
    let norm_sqr: f64 = x.iter().map(|v| v * v).sum();
    if norm_sqr == 0.0 {
        return Err(Error::DegenerateInput("all-zero amplitude vector"));
    }
    let norm = norm_sqr.sqrt();
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); dim];
    for (slot, &v) in amps.iter_mut().zip(x.iter()) {
        *slot = num_complex::Complex64::new(v / norm, 0.0);
    }
    StateVector::from_amplitudes(n_qubits, amps)
}

/// Shift applied to one encoding-gate angle, identified by the layer that
/// re-uploads it and the qubit it acts on. Used by the parameter-shift rule
/// for input gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncShift {
    pub layer: usize,
    pub qubit: usize,
    pub delta: f64,
}

fn apply_layer_shifted(
    state: &mut StateVector,
    x: &[f64],
    theta_layer: &[f64],
    topology: Topology,
    enc_delta: Option<(usize, f64)>,
) -> Result<()> {
    let n = state.n_qubits();
    if x.len() != n {
        return Err(Error::Shape {
            what: "encoding input",
            expected: n,
            got: x.len(),
        });
    }
    if theta_layer.len() != 2 * n {
        return Err(Error::Shape {
            what: "layer parameters",
            expected: 2 * n,
            got: theta_layer.len(),
        });
    }
    for (j, &xj) in x.iter().enumerate() {
        let mut angle = 2.0 * xj;
        if let Some((q, delta)) = enc_delta {
            if q == j {
                angle += delta;
            }
        }
        state.apply(Gate::Ry { target: j, angle })?;
    }
    for j in 0..n {
        state.apply(Gate::Ry {
            target: j,
            angle: theta_layer[2 * j],
        })?;
        state.apply(Gate::Rz {
            target: j,
            angle: theta_layer[2 * j + 1],
        })?;
    }
    for_each_entangler_pair(n, topology, |control, target| {
        state.apply(Gate::Cnot { control, target })
    })?;
    Ok(())
}

/// Applies one ansatz layer (encode, trainable block, entangler) in place.
pub fn apply_ansatz_layer(
    state: &mut StateVector,
    x: &[f64],
    theta_layer: &[f64],
    topology: Topology,
) -> Result<()> {
    apply_layer_shifted(state, x, theta_layer, topology, None)
}

/// Final state of the depth-L reference circuit, with an optional shift of
/// one encoding occurrence.
pub fn reference_state_shifted(
    config: &AnsatzConfig,
    theta: &[f64],
    x: &[f64],
    shift: Option<EncShift>,
) -> Result<StateVector> {
    if theta.len() != config.param_count() {
        return Err(Error::Shape {
            what: "circuit parameters",
            expected: config.param_count(),
            got: theta.len(),
        });
    }
    let per_layer = config.layer_param_count();
    let mut state = StateVector::zero(config.n_qubits)?;
    for layer in 0..config.depth {
        let enc_delta = match shift {
            Some(s) if s.layer == layer => Some((s.qubit, s.delta)),
            _ => None,
        };
        apply_layer_shifted(
            &mut state,
            x,
            &theta[layer * per_layer..(layer + 1) * per_layer],
            config.topology,
            enc_delta,
        )?;
    }
    Ok(state)
}

/// Final state of the depth-L reference circuit with data re-uploading.
pub fn reference_state(config: &AnsatzConfig, theta: &[f64], x: &[f64]) -> Result<StateVector> {
    reference_state_shifted(config, theta, x, None)
}

/// Runs the depth-L reference circuit from |0...0> and returns the per-qubit
/// |0><0| expectations.
pub fn run_reference_circuit(config: &AnsatzConfig, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    Ok(reference_state(config, theta, x)?.measure_all_local())
}

/// Runs a single depth-1 circuit (one ensemble member). `theta_layer` holds
/// the 2n angles of the one layer; `config.depth` is ignored.
pub fn run_depth1_circuit(
    config: &AnsatzConfig,
    theta_layer: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    run_reference_circuit(&config.with_depth(1), theta_layer, x)
}
