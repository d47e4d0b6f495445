//! Exact analytic gradients via the parameter-shift rule.
//!
//! For the RX/RY/RZ rotations used here, the derivative of a projector
//! expectation with respect to an angle t is exactly
//! `(f(t + pi/2) - f(t - pi/2)) / 2`.
//!
//! Encoding inputs are re-uploaded once per layer: the gate angle of input
//! x_j is `2 x_j` in every layer, so d(output)/d(x_j) is the sum of the
//! shift-rule contributions over all occurrences, times the chain factor 2.
//!
//! All evaluations are pure; results do not depend on scheduling. The
//! central-difference oracle [`finite_diff`] is kept alongside for tests.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::FRAC_PI_2;

use crate::circuits::{run_reference_circuit, AnsatzConfig, EncShift};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Jacobians of the circuit output (n per-qubit expectations) with respect
/// to trainable parameters and encoding inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumJacobians {
    /// n_outputs x n_params.
    pub d_theta: Mat,
    /// n_outputs x n_inputs.
    pub d_input: Mat,
}

/// Parameter-shift derivative of `eval` with respect to parameter `k`.
///
/// `eval` must be a circuit expectation whose `k`-th parameter enters through
/// a Pauli-half-generated rotation (true for all gates in this crate).
pub fn param_shift<F>(eval: F, theta: &[f64], k: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if k >= theta.len() {
        return Err(Error::ParamIndex {
            index: k,
            len: theta.len(),
        });
    }
    let mut shifted = theta.to_vec();
    shifted[k] = theta[k] + FRAC_PI_2;
    let plus = eval(&shifted);
    shifted[k] = theta[k] - FRAC_PI_2;
    let minus = eval(&shifted);
    Ok(0.5 * (plus - minus))
}

/// Central finite difference `(f(t_k + h) - f(t_k - h)) / 2h`; testing oracle.
pub fn finite_diff<F>(eval: F, theta: &[f64], k: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut shifted = theta.to_vec();
    shifted[k] = theta[k] + h;
    let plus = eval(&shifted);
    shifted[k] = theta[k] - h;
    let minus = eval(&shifted);
    (plus - minus) / (2.0 * h)
}

/// Derivative of every output component with respect to encoding input
/// `x[j]`, summing the shift-rule contribution of each re-uploading
/// occurrence and applying the chain factor 2 for the angle `2 x_j`.
pub fn input_grad(config: &AnsatzConfig, theta: &[f64], x: &[f64], j: usize) -> Result<Vec<f64>> {
    if j >= config.n_qubits {
        return Err(Error::QubitIndex {
            index: j,
            n_qubits: config.n_qubits,
        });
    }
    let n = config.n_qubits;
    let mut total = vec![0.0; n];
    for layer in 0..config.depth {
        let plus = measure_shifted(config, theta, x, layer, j, FRAC_PI_2)?;
        let minus = measure_shifted(config, theta, x, layer, j, -FRAC_PI_2)?;
        for (slot, (p, m)) in total.iter_mut().zip(plus.iter().zip(minus.iter())) {
            *slot += 0.5 * (p - m);
        }
    }
    for g in &mut total {
        *g *= 2.0;
    }
    Ok(total)
}

fn measure_shifted(
    config: &AnsatzConfig,
    theta: &[f64],
    x: &[f64],
    layer: usize,
    qubit: usize,
    delta: f64,
) -> Result<Vec<f64>> {
    let state = crate::circuits::reference_state_shifted(
        config,
        theta,
        x,
        Some(EncShift {
            layer,
            qubit,
            delta,
        }),
    )?;
    Ok(state.measure_all_local())
}

/// Full Jacobians of one circuit evaluation. Costs `2 P` circuit runs for the
/// parameter block plus `2 L` runs per encoding input; every run yields all n
/// output components at once.
pub fn quantum_jacobians(
    config: &AnsatzConfig,
    theta: &[f64],
    x: &[f64],
) -> Result<QuantumJacobians> {
    let n = config.n_qubits;
    let p = theta.len();
    if p != config.param_count() {
        return Err(Error::Shape {
            what: "circuit parameters",
            expected: config.param_count(),
            got: p,
        });
    }
    let mut d_theta = Mat::zeros(n, p);
    let mut shifted = theta.to_vec();
    for k in 0..p {
        shifted[k] = theta[k] + FRAC_PI_2;
        let plus = run_reference_circuit(config, &shifted, x)?;
        shifted[k] = theta[k] - FRAC_PI_2;
        let minus = run_reference_circuit(config, &shifted, x)?;
        shifted[k] = theta[k];
        for o in 0..n {
            d_theta[(o, k)] = 0.5 * (plus[o] - minus[o]);
        }
    }
    let mut d_input = Mat::zeros(n, n);
    for j in 0..n {
        let col = input_grad(config, theta, x, j)?;
        for o in 0..n {
            d_input[(o, j)] = col[o];
        }
    }
    Ok(QuantumJacobians { d_theta, d_input })
}
