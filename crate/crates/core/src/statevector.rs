//! Dense complex statevector simulation.
//!
//! A [`StateVector`] holds the 2^n amplitudes of an n-qubit register. Basis
//! indices are read big-endian: qubit 0 is the most significant bit, so for
//! two qubits the amplitude order is |00>, |01>, |10>, |11>.
//!
//! Gates are applied in place by stride-indexed amplitude-pair updates; no
//! gate matrix is materialized. All expectation values are exact (no shot
//! sampling).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest supported register; 2^12 = 4096 amplitudes.
pub const MAX_QUBITS: usize = 12;

/// Single gate acting on a statevector.
///
/// Rotation conventions (half-angle form):
///
/// ```text
/// RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
/// RX(t) = [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]]
/// RZ(t) = diag(exp(-i t/2), exp(+i t/2))
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

/// Projector observable measured on a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// |0><0| on one qubit, tensored with identity elsewhere.
    LocalProjector(usize),
    /// |0...0><0...0| on the full register.
    GlobalProjector,
}

/// Complex amplitudes over the 2^n computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros state |0...0>.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(alloc::format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a state from explicit amplitudes; the caller is responsible
    /// for normalization.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(alloc::format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::Shape {
                what: "amplitude vector",
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Basis-index bit mask for `qubit` (big-endian: qubit 0 is the MSB).
    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies `gate` in place. Norm is preserved to within 1e-12.
    pub fn apply(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::Ry { target, angle } => {
                let m = self.mask(target)?;
                let c = (angle / 2.0).cos();
                let s = (angle / 2.0).sin();
                self.update_pairs(m, |a, b| (c * a - s * b, s * a + c * b));
            }
            Gate::Rx { target, angle } => {
                let m = self.mask(target)?;
                let c = (angle / 2.0).cos();
                let is = Complex64::new(0.0, (angle / 2.0).sin());
                self.update_pairs(m, |a, b| (c * a - is * b, c * b - is * a));
            }
            Gate::Rz { target, angle } => {
                let m = self.mask(target)?;
                let phase0 = Complex64::from_polar(1.0, -angle / 2.0);
                let phase1 = Complex64::from_polar(1.0, angle / 2.0);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if i & m == 0 { phase0 } else { phase1 };
                }
            }
            Gate::Cnot { control, target } => {
                let mc = self.mask(control)?;
                let mt = self.mask(target)?;
                if control == target {
                    return Err(Error::Config(alloc::string::String::from(
                        "cnot control and target must differ",
                    )));
                }
                for i in 0..self.amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
        }
        Ok(())
    }

    /// Runs `(a, b) -> (a', b')` over every amplitude pair split by `mask`.
    fn update_pairs(
        &mut self,
        mask: usize,
        f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
    ) {
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for offset in 0..mask {
                let i = base + offset;
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                let (a2, b2) = f(a, b);
                self.amps[i] = a2;
                self.amps[j] = b2;
            }
            base += 2 * mask;
        }
    }

    /// Expectation value of `obs`; lies in [0, 1] for a normalized state.
    pub fn expect(&self, obs: Observable) -> Result<f64> {
        match obs {
            Observable::LocalProjector(q) => {
                let m = self.mask(q)?;
                Ok(self
                    .amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i & m == 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum())
            }
            Observable::GlobalProjector => Ok(self.amps[0].norm_sqr()),
        }
    }

    /// Per-qubit expectation of |0><0|; component q equals
    /// `expect(LocalProjector(q))`. These are independent marginals: they do
    /// not sum to anything in particular.
    pub fn measure_all_local(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut out = vec![0.0; n];
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (q, slot) in out.iter_mut().enumerate() {
                if i & (1 << (n - 1 - q)) == 0 {
                    *slot += p;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    const EPS: f64 = 1e-12;

    fn approx(a: f64, b: f64) {
        assert!((a - b).abs() < EPS, "{a} != {b}");
    }

    #[test]
    fn zero_state_amplitudes() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));

        let s = StateVector::zero(2).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        approx(s.amplitudes()[0].re, 1.0);
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn qubit_count_bounds() {
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::zero(13).is_err());
        assert!(StateVector::zero(12).is_ok());
    }

    #[test]
    fn ry_pi_flips_qubit() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: PI,
        })
        .unwrap();
        approx(s.amplitudes()[0].norm_sqr(), 0.0);
        approx(s.amplitudes()[1].re, 1.0);
    }

    #[test]
    fn cnot_truth_table() {
        // |10> (qubit 0 set, big-endian index 0b10) -> |11>
        let mut s = StateVector::zero(2).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: PI,
        })
        .unwrap();
        approx(s.amplitudes()[0b10].norm_sqr(), 1.0);
        s.apply(Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        approx(s.amplitudes()[0b11].norm_sqr(), 1.0);

        // control clear: |01> unchanged
        let mut s = StateVector::zero(2).unwrap();
        s.apply(Gate::Ry {
            target: 1,
            angle: PI,
        })
        .unwrap();
        s.apply(Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        approx(s.amplitudes()[0b01].norm_sqr(), 1.0);
    }

    #[test]
    fn rz_is_global_phase_on_basis_state() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(Gate::Rz {
            target: 0,
            angle: 0.7,
        })
        .unwrap();
        let expected = Complex64::from_polar(1.0, -0.35);
        assert!((s.amplitudes()[0] - expected).norm() < EPS);
        approx(s.expect(Observable::LocalProjector(0)).unwrap(), 1.0);
    }

    #[test]
    fn expectation_examples() {
        // (|0> + |1>)/sqrt(2)
        let mut s = StateVector::zero(1).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: FRAC_PI_2,
        })
        .unwrap();
        approx(s.expect(Observable::LocalProjector(0)).unwrap(), 0.5);

        // |10>
        let mut s = StateVector::zero(2).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: PI,
        })
        .unwrap();
        approx(s.expect(Observable::LocalProjector(0)).unwrap(), 0.0);
        approx(s.expect(Observable::LocalProjector(1)).unwrap(), 1.0);

        let s = StateVector::zero(4).unwrap();
        approx(s.expect(Observable::GlobalProjector).unwrap(), 1.0);
    }

    #[test]
    fn measure_all_local_examples() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(s.measure_all_local(), vec![1.0, 1.0]);

        let mut s = StateVector::zero(2).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: PI,
        })
        .unwrap();
        s.apply(Gate::Ry {
            target: 1,
            angle: PI,
        })
        .unwrap();
        let m = s.measure_all_local();
        approx(m[0], 0.0);
        approx(m[1], 0.0);

        // Bell state (|00> + |11>)/sqrt(2)
        let mut s = StateVector::zero(2).unwrap();
        s.apply(Gate::Ry {
            target: 0,
            angle: FRAC_PI_2,
        })
        .unwrap();
        s.apply(Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        let m = s.measure_all_local();
        approx(m[0], 0.5);
        approx(m[1], 0.5);
    }

    #[test]
    fn invalid_indices_error() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(
            s.apply(Gate::Ry {
                target: 2,
                angle: 0.1
            }),
            Err(Error::QubitIndex { index: 2, .. })
        ));
        assert!(s
            .apply(Gate::Cnot {
                control: 1,
                target: 1
            })
            .is_err());
        assert!(s.expect(Observable::LocalProjector(5)).is_err());
    }
}
