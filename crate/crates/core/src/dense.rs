//! Full-matrix reference evaluation.
//!
//! Builds explicit 2^n x 2^n unitaries from Kronecker products and matrix
//! products, then applies them to |0...0>. This is exponentially slower than
//! the stride-indexed simulator in [`crate::statevector`] and exists as an
//! independent route for cross-checking it; keep n small (<= 6 or so).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::circuits::{AnsatzConfig, Topology};
use crate::error::{Error, Result};
use crate::statevector::Gate;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut m = DenseMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        };
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        DenseMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = DenseMatrix {
            dim: d,
            data: vec![Complex64::new(0.0, 0.0); d * d],
        };
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        out
    }

    /// Kronecker product; `self` occupies the most significant index bits,
    /// matching the big-endian qubit convention.
    pub fn kron(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut out = DenseMatrix {
            dim: d,
            data: vec![Complex64::new(0.0, 0.0); d * d],
        };
        for ra in 0..da {
            for ca in 0..da {
                let a = self.data[ra * da + ca];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        out.data[(ra * db + rb) * d + (ca * db + cb)] = a * rhs.data[rb * db + cb];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, vc) in v.iter().enumerate() {
                acc += self.data[r * d + c] * vc;
            }
            *slot = acc;
        }
        out
    }
}

fn single_qubit_matrix(gate: Gate) -> DenseMatrix {
    let (a, b, c, d) = match gate {
        Gate::Ry { angle, .. } => {
            let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
            (
                Complex64::new(co, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(co, 0.0),
            )
        }
        Gate::Rx { angle, .. } => {
            let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
            (
                Complex64::new(co, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(co, 0.0),
            )
        }
        Gate::Rz { angle, .. } => (
            Complex64::from_polar(1.0, -angle / 2.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, angle / 2.0),
        ),
        Gate::Cnot { .. } => unreachable!("cnot is not a single-qubit gate"),
    };
    DenseMatrix::from_rows(2, vec![a, b, c, d])
}

/// Embeds `gate` into the full 2^n unitary.
pub fn gate_matrix(n_qubits: usize, gate: Gate) -> DenseMatrix {
    let dim = 1 << n_qubits;
    match gate {
        Gate::Cnot { control, target } => {
            // permutation matrix: flip the target bit where the control is set
            let mc = 1 << (n_qubits - 1 - control);
            let mt = 1 << (n_qubits - 1 - target);
            let mut m = DenseMatrix {
                dim,
                data: vec![Complex64::new(0.0, 0.0); dim * dim],
            };
            for col in 0..dim {
                let row = if col & mc != 0 { col ^ mt } else { col };
                m.data[row * dim + col] = Complex64::new(1.0, 0.0);
            }
            m
        }
        Gate::Rx { target, .. } | Gate::Ry { target, .. } | Gate::Rz { target, .. } => {
            let left = DenseMatrix::identity(1 << target);
            let right = DenseMatrix::identity(1 << (n_qubits - 1 - target));
            left.kron(&single_qubit_matrix(gate)).kron(&right)
        }
    }
}

/// Full unitary of one ansatz layer (encode, trainable block, entangler).
pub fn layer_matrix(
    n_qubits: usize,
    x: &[f64],
    theta_layer: &[f64],
    topology: Topology,
) -> DenseMatrix {
    let mut u = DenseMatrix::identity(1 << n_qubits);
    let mut push = |gate: Gate| {
        u = gate_matrix(n_qubits, gate).mul(&u);
    };
    for (j, &xj) in x.iter().enumerate() {
        push(Gate::Ry {
            target: j,
            angle: 2.0 * xj,
        });
    }
    for j in 0..n_qubits {
        push(Gate::Ry {
            target: j,
            angle: theta_layer[2 * j],
        });
        push(Gate::Rz {
            target: j,
            angle: theta_layer[2 * j + 1],
        });
    }
    crate::circuits::for_each_entangler_pair(n_qubits, topology, |control, target| {
        push(Gate::Cnot { control, target });
        Ok(())
    })
    .expect("pair iteration cannot fail");
    u
}

/// Full unitary of the depth-L reference circuit with data re-uploading.
pub fn reference_matrix(config: &AnsatzConfig, theta: &[f64], x: &[f64]) -> Result<DenseMatrix> {
    if theta.len() != config.param_count() {
        return Err(Error::Shape {
            what: "circuit parameters",
            expected: config.param_count(),
            got: theta.len(),
        });
    }
    if x.len() != config.n_qubits {
        return Err(Error::Shape {
            what: "encoding input",
            expected: config.n_qubits,
            got: x.len(),
        });
    }
    let per_layer = config.layer_param_count();
    let mut u = DenseMatrix::identity(1 << config.n_qubits);
    for layer in 0..config.depth {
        let lm = layer_matrix(
            config.n_qubits,
            x,
            &theta[layer * per_layer..(layer + 1) * per_layer],
            config.topology,
        );
        u = lm.mul(&u);
    }
    Ok(u)
}

/// Runs the reference circuit through the full-matrix route and returns the
/// per-qubit |0><0| expectations.
pub fn run_reference_dense(config: &AnsatzConfig, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let u = reference_matrix(config, theta, x)?;
    let n = config.n_qubits;
    let dim = 1 << n;
    // |psi> = U |0...0> is the first column of U
    let mut out = vec![0.0; n];
    for i in 0..dim {
        let p = u.get(i, 0).norm_sqr();
        for (q, slot) in out.iter_mut().enumerate() {
            if i & (1 << (n - 1 - q)) == 0 {
                *slot += p;
            }
        }
    }
    Ok(out)
}
