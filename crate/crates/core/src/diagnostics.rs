//! Monte-Carlo diagnostics: barren-plateau gradient statistics,
//! cost-function concentration, and t=1 expressibility.
//!
//! All samplers draw circuit parameters uniformly from [0, 2pi) per angle,
//! fix the encoding input at x = 0 (so the sampled randomness comes only
//! from the trainable angles), and derive each sample's angles from a
//! counter-indexed stream of the seed: results are bit-identical for a given
//! `(config, samples, seed)` regardless of evaluation order.
//!
//! The t=1 expressibility compares the sampled average of `U|0..0><0..0|U^t`
//! against its Haar value, the maximally mixed state `I/d`:
//! `A = || I/d - mean_s |psi_s><psi_s| ||_F`. Together with the
//! Hilbert-Schmidt norm of the observable it bounds how far the mean cost
//! can sit from `Tr[O]/d`; [`verify_bound`] checks that bound empirically.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::TAU;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::circuits::{reference_state, AnsatzConfig, Topology};
use crate::error::{Error, Result};
use crate::gradients::param_shift;
use crate::rng::substream;
use crate::statevector::{Observable, StateVector};

/// Largest register for which the d x d averaged density matrix is formed.
pub const MAX_DIAGNOSTIC_QUBITS: usize = 8;

/// Sample statistics of one partial derivative over uniformly drawn angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientStats {
    pub parameter_index: usize,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean: sqrt(variance / samples).
    pub std_error: f64,
}

/// One row of a barren-plateau scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpRow {
    pub n_qubits: usize,
    pub stats: GradientStats,
}

/// Concentration summary of the cost `f = <O>` over uniformly drawn angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationStats {
    pub samples: usize,
    pub mean_f: f64,
    pub var_f: f64,
    /// Standard error of `mean_f`.
    pub std_error: f64,
    /// Exact Haar mean `Tr[O]/d`.
    pub target: f64,
    /// |mean_f - target|.
    pub deviation: f64,
    /// t=1 expressibility norm of the sampled family.
    pub expressibility: f64,
    /// Jackknife standard error of the expressibility estimate.
    pub expressibility_se: f64,
    /// `||O||_F * expressibility`, the concentration bound.
    pub bound_rhs: f64,
}

/// Empirical check of the concentration bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// |mean_f - Tr[O]/d|.
    pub lhs: f64,
    /// ||O||_F * expressibility.
    pub rhs: f64,
    /// Combined Monte-Carlo standard error of lhs and rhs.
    pub std_error: f64,
    /// lhs <= rhs + 3 * std_error.
    pub holds: bool,
}

/// Expectation of `obs` after the circuit runs on the zero encoding input.
fn eval_f(config: &AnsatzConfig, theta: &[f64], obs: Observable, x0: &[f64]) -> Result<f64> {
    reference_state(config, theta, x0)?.expect(obs)
}

fn validate_obs(config: &AnsatzConfig, obs: Observable) -> Result<()> {
    if let Observable::LocalProjector(q) = obs {
        if q >= config.n_qubits {
            return Err(Error::QubitIndex {
                index: q,
                n_qubits: config.n_qubits,
            });
        }
    }
    Ok(())
}

fn draw_theta(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// Exact Haar mean of the observable: `Tr[O]/d`.
pub fn haar_target(obs: Observable, n_qubits: usize) -> f64 {
    match obs {
        Observable::LocalProjector(_) => 0.5,
        Observable::GlobalProjector => 1.0 / (1u64 << n_qubits) as f64,
    }
}

/// Hilbert-Schmidt (Frobenius) norm of the observable.
pub fn observable_hs_norm(obs: Observable, n_qubits: usize) -> f64 {
    match obs {
        // projector of rank 2^(n-1)
        Observable::LocalProjector(_) => ((1u64 << (n_qubits - 1)) as f64).sqrt(),
        Observable::GlobalProjector => 1.0,
    }
}

/// Monte-Carlo mean and variance of `d f / d theta_k` over `samples` uniform
/// parameter draws.
pub fn gradient_stats(
    config: &AnsatzConfig,
    obs: Observable,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<GradientStats> {
    let p = config.param_count();
    if k >= p {
        return Err(Error::ParamIndex { index: k, len: p });
    }
    validate_obs(config, obs)?;
    if samples < 2 {
        return Err(Error::Config(alloc::string::String::from(
            "need at least 2 samples for gradient statistics",
        )));
    }
    let x0 = vec![0.0; config.n_qubits];
    let eval = |theta: &[f64]| eval_f(config, theta, obs, &x0).expect("validated configuration");

    let mut grads = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = substream(seed, s as u64);
        let theta = draw_theta(&mut rng, p);
        grads.push(param_shift(eval, &theta, k)?);
    }
    let mean = grads.iter().sum::<f64>() / samples as f64;
    let variance =
        grads.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (samples as f64 - 1.0);
    Ok(GradientStats {
        parameter_index: k,
        samples,
        mean,
        variance,
        std_error: (variance / samples as f64).sqrt(),
    })
}

/// Gradient variance of the first trainable angle (an RY in layer 1) for
/// each qubit count in `n_range`, holding depth and topology fixed.
pub fn bp_scan(
    topology: Topology,
    obs: Observable,
    n_range: &[usize],
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<BpRow>> {
    if n_range.iter().any(|&n| !(2..=8).contains(&n)) {
        return Err(Error::Config(alloc::string::String::from(
            "barren-plateau scans support qubit counts 2..=8",
        )));
    }
    let mut rows = Vec::with_capacity(n_range.len());
    for &n in n_range {
        let config = AnsatzConfig::new(n, depth, topology, obs)?;
        let stats = gradient_stats(&config, obs, 0, samples, seed)?;
        rows.push(BpRow { n_qubits: n, stats });
    }
    Ok(rows)
}

/// `|| I/d - mean_s |psi_s><psi_s| ||_F` for an explicit list of states.
pub fn expressibility_from_states(states: &[StateVector]) -> Result<f64> {
    let (m, dim) = mean_density(states)?;
    Ok(a_norm(&m, dim, 1.0, None))
}

/// Averaged pure-state density matrix, row-major.
fn mean_density(states: &[StateVector]) -> Result<(Vec<Complex64>, usize)> {
    let first = states.first().ok_or_else(|| {
        Error::Config(alloc::string::String::from(
            "need at least one sampled state",
        ))
    })?;
    let n = first.n_qubits();
    if n > MAX_DIAGNOSTIC_QUBITS {
        return Err(Error::Config(alloc::format!(
            "expressibility supports up to {MAX_DIAGNOSTIC_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1 << n;
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for state in states {
        if state.n_qubits() != n {
            return Err(Error::Shape {
                what: "sampled state width",
                expected: n,
                got: state.n_qubits(),
            });
        }
        let amps = state.amplitudes();
        for r in 0..dim {
            let ar = amps[r];
            for c in 0..dim {
                m[r * dim + c] += ar * amps[c].conj();
            }
        }
    }
    let scale = 1.0 / states.len() as f64;
    for v in &mut m {
        *v *= scale;
    }
    Ok((m, dim))
}

/// Frobenius norm of `I/d - rho` where `rho = (scale * M) - leave_out`.
/// With `leave_out = Some((psi, w))` the state's outer product is removed
/// with weight `w` before rescaling (used by the jackknife).
fn a_norm(m: &[Complex64], dim: usize, scale: f64, leave_out: Option<(&[Complex64], f64)>) -> f64 {
    let inv_d = 1.0 / dim as f64;
    let mut sum = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let mut rho = m[r * dim + c] * scale;
            if let Some((amps, w)) = leave_out {
                rho -= amps[r] * amps[c].conj() * w;
            }
            let target = if r == c {
                Complex64::new(inv_d, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            sum += (target - rho).norm_sqr();
        }
    }
    sum.sqrt()
}

fn sampled_states(config: &AnsatzConfig, samples: usize, seed: u64) -> Result<Vec<StateVector>> {
    if samples == 0 {
        return Err(Error::Config(alloc::string::String::from(
            "need at least one sample",
        )));
    }
    let p = config.param_count();
    let x0 = vec![0.0; config.n_qubits];
    let mut states = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = substream(seed, s as u64);
        let theta = draw_theta(&mut rng, p);
        states.push(reference_state(config, &theta, &x0)?);
    }
    Ok(states)
}

/// t=1 expressibility norm of the circuit family: smaller means the sampled
/// states cover the Hilbert sphere more evenly (more expressive).
pub fn expressibility_t1(config: &AnsatzConfig, samples: usize, seed: u64) -> Result<f64> {
    expressibility_from_states(&sampled_states(config, samples, seed)?)
}

/// Point estimate of the t=1 expressibility with a jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpressibilityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub fn expressibility_t1_stats(
    config: &AnsatzConfig,
    samples: usize,
    seed: u64,
) -> Result<ExpressibilityEstimate> {
    let states = sampled_states(config, samples, seed)?;
    let (value, std_error) = expressibility_with_se(&states)?;
    Ok(ExpressibilityEstimate {
        value,
        std_error,
        samples,
    })
}

/// Expressibility with its jackknife standard error.
fn expressibility_with_se(states: &[StateVector]) -> Result<(f64, f64)> {
    let (m, dim) = mean_density(states)?;
    let s = states.len();
    let a_hat = a_norm(&m, dim, 1.0, None);
    if s < 2 {
        return Ok((a_hat, 0.0));
    }
    // leave-one-out replicates: rho_(-i) = (S*M - P_i) / (S-1)
    let sf = s as f64;
    let scale = sf / (sf - 1.0);
    let w = 1.0 / (sf - 1.0);
    let mut reps = Vec::with_capacity(s);
    for state in states {
        reps.push(a_norm(&m, dim, scale, Some((state.amplitudes(), w))));
    }
    let mean_rep = reps.iter().sum::<f64>() / sf;
    let var = reps
        .iter()
        .map(|r| (r - mean_rep) * (r - mean_rep))
        .sum::<f64>()
        * (sf - 1.0)
        / sf;
    Ok((a_hat, var.sqrt()))
}

/// Samples the cost over uniform angles and summarizes its concentration
/// around the Haar mean `Tr[O]/d`, together with the expressibility norm and
/// the concentration bound's right-hand side.
pub fn concentration_stats(
    config: &AnsatzConfig,
    obs: Observable,
    samples: usize,
    seed: u64,
) -> Result<ConcentrationStats> {
    validate_obs(config, obs)?;
    if samples < 2 {
        return Err(Error::Config(alloc::string::String::from(
            "need at least 2 samples for concentration statistics",
        )));
    }
    let states = sampled_states(config, samples, seed)?;
    let fs: Vec<f64> = states
        .iter()
        .map(|state| state.expect(obs))
        .collect::<Result<_>>()?;
    let sf = samples as f64;
    let mean_f = fs.iter().sum::<f64>() / sf;
    let var_f = fs.iter().map(|f| (f - mean_f) * (f - mean_f)).sum::<f64>() / (sf - 1.0);
    let std_error = (var_f / sf).sqrt();
    let target = haar_target(obs, config.n_qubits);
    let (expressibility, expressibility_se) = expressibility_with_se(&states)?;
    let bound_rhs = observable_hs_norm(obs, config.n_qubits) * expressibility;
    Ok(ConcentrationStats {
        samples,
        mean_f,
        var_f,
        std_error,
        target,
        deviation: (mean_f - target).abs(),
        expressibility,
        expressibility_se,
        bound_rhs,
    })
}

/// Checks `|E[f] - Tr[O]/d| <= ||O||_F * A` on `samples` draws, allowing
/// three combined standard errors of slack for the Monte-Carlo noise.
pub fn verify_bound(
    config: &AnsatzConfig,
    obs: Observable,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    let stats = concentration_stats(config, obs, samples, seed)?;
    let hs = observable_hs_norm(obs, config.n_qubits);
    let std_error = (stats.std_error * stats.std_error
        + hs * hs * stats.expressibility_se * stats.expressibility_se)
        .sqrt();
    let lhs = stats.deviation;
    let rhs = stats.bound_rhs;
    Ok(BoundReport {
        lhs,
        rhs,
        std_error,
        holds: lhs <= rhs + 3.0 * std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::Gate;

    fn cfg(n: usize, depth: usize, topology: Topology) -> AnsatzConfig {
        AnsatzConfig::new(n, depth, topology, Observable::LocalProjector(0)).unwrap()
    }

    #[test]
    fn gradient_stats_is_deterministic() {
        let c = cfg(1, 1, Topology::NearestNeighbor);
        let a = gradient_stats(&c, Observable::LocalProjector(0), 0, 2, 42).unwrap();
        let b = gradient_stats(&c, Observable::LocalProjector(0), 0, 2, 42).unwrap();
        assert_eq!(a, b);
        let c2 = gradient_stats(&c, Observable::LocalProjector(0), 0, 2, 43).unwrap();
        assert_ne!(a.mean, c2.mean);
    }

    #[test]
    fn gradient_stats_validates_inputs() {
        let c = cfg(2, 1, Topology::NearestNeighbor);
        assert!(gradient_stats(&c, Observable::LocalProjector(0), 4, 10, 0).is_err());
        assert!(gradient_stats(&c, Observable::LocalProjector(3), 0, 10, 0).is_err());
        assert!(gradient_stats(&c, Observable::LocalProjector(0), 0, 1, 0).is_err());
    }

    #[test]
    fn single_qubit_gradient_moments_match_analytic_values() {
        // f = cos^2(theta_0 / 2): d f / d theta_0 = -sin(theta_0)/2,
        // which has mean 0 and variance E[sin^2]/4 = 1/8 over uniform angles.
        let c = cfg(1, 1, Topology::NearestNeighbor);
        let stats = gradient_stats(&c, Observable::LocalProjector(0), 0, 10000, 7).unwrap();
        assert!(stats.mean.abs() < 3.0 * stats.std_error);
        assert!((stats.variance - 0.125).abs() < 0.125 * 0.05);
    }

    #[test]
    fn bp_scan_single_row() {
        let rows = bp_scan(
            Topology::NearestNeighbor,
            Observable::LocalProjector(0),
            &[2],
            1,
            50,
            3,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_qubits, 2);
        assert!(rows[0].stats.variance >= 0.0);
        assert!(bp_scan(
            Topology::NearestNeighbor,
            Observable::LocalProjector(0),
            &[1],
            1,
            50,
            3
        )
        .is_err());
    }

    #[test]
    fn frozen_identity_family_expressibility() {
        // all samples are |0>: A = || I/2 - |0><0| ||_F = sqrt(1/2)
        let states = vec![StateVector::zero(1).unwrap(); 4];
        let a = expressibility_from_states(&states).unwrap();
        assert!((a - 0.5f64.sqrt()).abs() < 1e-12);

        // n=2 frozen family: || I/4 - |00><00| ||_F = sqrt(12)/4
        let states = vec![StateVector::zero(2).unwrap(); 4];
        let a = expressibility_from_states(&states).unwrap();
        assert!((a - 12f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn expressibility_single_sample_is_deterministic() {
        let c = cfg(2, 1, Topology::NearestNeighbor);
        let a = expressibility_t1(&c, 1, 5).unwrap();
        let b = expressibility_t1(&c, 1, 5).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 2f64.sqrt());
    }

    #[test]
    fn expressibility_decreases_with_sampling_noise_floor() {
        // a uniformly-covering family leaves only Monte-Carlo noise, far
        // below the single-point family's norm
        let c = cfg(2, 2, Topology::AllPairs);
        let sampled = expressibility_t1(&c, 400, 11).unwrap();
        let frozen = expressibility_from_states(&vec![StateVector::zero(2).unwrap(); 400]).unwrap();
        assert!(sampled < frozen / 2.0);
    }

    #[test]
    fn expressibility_nonincreasing_in_depth_within_noise() {
        let mut prev: Option<ExpressibilityEstimate> = None;
        for depth in [1usize, 2, 4, 8] {
            let c = cfg(3, depth, Topology::AllPairs);
            let est = expressibility_t1_stats(&c, 2000, 13).unwrap();
            if let Some(p) = prev {
                let slack =
                    2.0 * (p.std_error * p.std_error + est.std_error * est.std_error).sqrt();
                assert!(
                    est.value < p.value + slack,
                    "depth {depth}: {} vs previous {} (slack {slack})",
                    est.value,
                    p.value
                );
            }
            prev = Some(est);
        }
    }

    #[test]
    fn deep_all_pairs_family_is_at_least_as_expressive_as_shallow_chain() {
        let shallow = cfg(4, 1, Topology::NearestNeighbor);
        let deep = cfg(4, 8, Topology::AllPairs);
        let a_shallow = expressibility_t1(&shallow, 2000, 40).unwrap();
        let a_deep = expressibility_t1(&deep, 2000, 40).unwrap();
        assert!(
            a_deep < a_shallow,
            "deep all-pairs {a_deep} vs shallow chain {a_shallow}"
        );
    }

    #[test]
    fn concentration_targets() {
        let c = cfg(3, 1, Topology::NearestNeighbor);
        let stats = concentration_stats(&c, Observable::LocalProjector(0), 50, 1).unwrap();
        assert_eq!(stats.target, 0.5);
        let stats = concentration_stats(&c, Observable::GlobalProjector, 50, 1).unwrap();
        assert_eq!(stats.target, 0.125);
        assert!(stats.mean_f >= 0.0 && stats.mean_f <= 1.0);
    }

    #[test]
    fn frozen_identity_bound_values() {
        // lhs = |1 - 0.5| = 0.5 vs rhs = 1 * sqrt(1/2): the bound holds
        let states = vec![StateVector::zero(1).unwrap(); 8];
        let a = expressibility_from_states(&states).unwrap();
        let lhs = (1.0f64 - 0.5).abs();
        let rhs = observable_hs_norm(Observable::LocalProjector(0), 1) * a;
        assert!((rhs - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(lhs <= rhs);

        // global projector, n=2: lhs = 0.75, rhs = sqrt(12)/4
        let states = vec![StateVector::zero(2).unwrap(); 8];
        let a = expressibility_from_states(&states).unwrap();
        let lhs = (1.0f64 - 0.25).abs();
        let rhs = observable_hs_norm(Observable::GlobalProjector, 2) * a;
        assert!((rhs - 12f64.sqrt() / 4.0).abs() < 1e-12);
        assert!(lhs <= rhs);
    }

    #[test]
    fn sampled_bound_holds() {
        for topology in [Topology::NearestNeighbor, Topology::AllPairs] {
            let c = cfg(3, 2, topology);
            for obs in [Observable::LocalProjector(0), Observable::GlobalProjector] {
                let report = verify_bound(&c, obs, 400, 17).unwrap();
                assert!(
                    report.holds,
                    "bound violated: lhs={} rhs={} se={}",
                    report.lhs, report.rhs, report.std_error
                );
            }
        }
    }

    #[test]
    fn mean_density_rejects_mixed_widths() {
        let states = vec![StateVector::zero(1).unwrap(), StateVector::zero(2).unwrap()];
        assert!(expressibility_from_states(&states).is_err());
        let mut big = StateVector::zero(9).unwrap();
        big.apply(Gate::Ry {
            target: 0,
            angle: 0.3,
        })
        .unwrap();
        assert!(expressibility_from_states(&[big]).is_err());
    }
}
