//! The DGD iteration in its two equivalent forms.
//!
//! The penalized-gradient form updates every agent by
//!
//! ```text
//! x_i <- x_i - eta * ( grad f_i(x_i) + rho * sum_j a_ij (x_i - x_j) )
//! ```
//!
//! which is exactly one gradient step on the penalized objective. The
//! classical mixing form first averages neighbor states with a stochastic
//! matrix and then takes a local gradient step:
//!
//! ```text
//! x_i <- sum_j w_ij x_j - eta * grad f_i(x_i),
//! w_ij = eta * rho * a_ij (i != j),   w_ii = 1 - eta * rho * sum_{j != i} a_ij.
//! ```
//!
//! The two coincide (`W = I - eta rho L`), provided `eta * rho` is small
//! enough that every self weight stays nonnegative; [`mixing_weights`]
//! rejects the mapping otherwise. With `eta <= 1 / (beta + rho lambda_n)`
//! each step contracts the squared distance to the penalized minimizer by at
//! least `1 - eta * alpha`.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use open_dgd::function::QuadraticFunction;
//! use open_dgd::network::Network;
//! use open_dgd::objective::{ProblemInstance, StackedState};
//! use open_dgd::dgd;
//!
//! let f1 = QuadraticFunction::new(DMatrix::identity(1, 1), DVector::from_element(1, -1.0))?;
//! let f2 = QuadraticFunction::new(DMatrix::identity(1, 1), DVector::from_element(1, 1.0))?;
//! let net = Network::complete(2, 1.0, 1.0)?;
//! let inst = ProblemInstance::new(vec![f1, f2], net, 2.0, None)?;
//!
//! // One step from the origin lands on the penalized minimizer here.
//! let x1 = dgd::dgd_step(&inst, &StackedState::zeros(2, 1))?;
//! assert_eq!(x1.as_vector().as_slice(), &[-0.2, 0.2]);
//! let x2 = dgd::dgd_step(&inst, &x1)?;
//! assert_eq!(x1, x2);
//! # Ok::<(), open_dgd::Error>(())
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function::QuadraticFunction;
use crate::network::Network;
use crate::objective::{ProblemInstance, StackedState};

/// One penalized gradient step over an explicit function set. This is the
/// single arithmetic path used by both the fixed iteration and the
/// open-system simulator, so their traces agree bitwise when no functions
/// change.
pub(crate) fn gradient_step(
    functions: &[QuadraticFunction],
    network: &Network,
    rho: f64,
    eta: f64,
    x: &StackedState,
) -> Result<StackedState> {
    let d = x.block_dim();
    let mut next = network.apply(x.as_vector(), d)? * (-eta * rho);
    next += x.as_vector();
    for (i, f) in functions.iter().enumerate() {
        let gi = f.gradient(&x.block_owned(i))?;
        let mut rows = next.rows_mut(i * d, d);
        rows -= gi * eta;
    }
    StackedState::new(next, x.agents(), d)
}

/// One DGD step in penalized-gradient form: `x - eta * grad F_rho(x)`.
pub fn dgd_step(inst: &ProblemInstance, x: &StackedState) -> Result<StackedState> {
    check_state(inst, x)?;
    gradient_step(inst.functions(), inst.network(), inst.rho(), inst.eta(), x)
}

/// The stochastic mixing matrix `W = I - eta * rho * L`.
///
/// Off-diagonal entries are `eta * rho * a_ij`; self weights are one minus
/// the scaled off-diagonal row sum. Every row sums exactly to one by
/// construction; the entries are nonnegative only when `eta * rho` is small
/// enough, and a negative self weight is rejected.
pub fn mixing_weights(inst: &ProblemInstance) -> Result<DMatrix<f64>> {
    let n = inst.agent_count();
    let a = inst.network().adjacency();
    let scale = inst.eta() * inst.rho();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off_diagonal = 0.0;
        for j in 0..n {
            if j != i {
                let wij = scale * a[(i, j)];
                w[(i, j)] = wij;
                off_diagonal += a[(i, j)];
            }
        }
        let self_weight = 1.0 - scale * off_diagonal;
        if self_weight < 0.0 {
            return Err(Error::MixingNotStochastic { agent: i });
        }
        w[(i, i)] = self_weight;
    }
    Ok(w)
}

/// One DGD step in mixing form: neighbor averaging with [`mixing_weights`]
/// followed by a local gradient step. Agrees with [`dgd_step`] to 1e-12 per
/// coordinate whenever the mixing matrix exists.
pub fn dgd_step_mixing(inst: &ProblemInstance, x: &StackedState) -> Result<StackedState> {
    check_state(inst, x)?;
    let w = mixing_weights(inst)?;
    let n = inst.agent_count();
    let d = inst.dimension();
    let mut next = DVector::zeros(n * d);
    for i in 0..n {
        let mut block = DVector::zeros(d);
        for j in 0..n {
            let wij = w[(i, j)];
            if wij != 0.0 {
                block += x.block(j) * wij;
            }
        }
        block -= inst.functions()[i].gradient(&x.block_owned(i))? * inst.eta();
        next.rows_mut(i * d, d).copy_from(&block);
    }
    StackedState::new(next, n, d)
}

/// Scalar summary of one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    /// Norm of the stacked state.
    pub state_norm: f64,
    /// Distance to the exact penalized minimizer.
    pub distance_to_minimizer: f64,
    /// Penalized objective value.
    pub penalized_value: f64,
    /// Consensus residual `x' (L kron I) x`.
    pub consensus_residual: f64,
}

/// Trace of a fixed-objective run. Per-step storage is O(1) scalars; full
/// iterates are kept only when requested.
#[derive(Debug, Clone)]
pub struct DgdTrace {
    pub records: Vec<StepRecord>,
    pub final_state: StackedState,
    /// Exact minimizer the distances refer to.
    pub minimizer: StackedState,
    /// Gradient norm at the final state.
    pub terminal_gradient_norm: f64,
    /// Whether the step size was within the contractive range; runs with a
    /// larger step size are produced anyway.
    pub step_size_valid: bool,
    pub iterates: Option<Vec<StackedState>>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep every iterate (memory scales with `iterations * n * d`).
    pub store_iterates: bool,
}

/// Runs `iterations` DGD steps from `x0`, recording one [`StepRecord`] per
/// iterate including the initial one (`iterations + 1` records).
pub fn run(
    inst: &ProblemInstance,
    x0: &StackedState,
    iterations: usize,
    options: &RunOptions,
) -> Result<DgdTrace> {
    check_state(inst, x0)?;
    let minimizer = inst.minimizer()?;
    let mut records = Vec::with_capacity(iterations + 1);
    let mut iterates = options.store_iterates.then(Vec::new);
    let mut x = x0.clone();
    for k in 0..=iterations {
        records.push(StepRecord {
            iteration: k,
            state_norm: x.norm(),
            distance_to_minimizer: (x.as_vector() - minimizer.as_vector()).norm(),
            penalized_value: inst.penalized_value(&x)?,
            consensus_residual: inst.consensus_residual(&x)?,
        });
        if let Some(store) = iterates.as_mut() {
            store.push(x.clone());
        }
        if k < iterations {
            x = dgd_step(inst, &x)?;
        }
    }
    let terminal_gradient_norm = inst.penalized_gradient(&x)?.norm();
    Ok(DgdTrace {
        records,
        final_state: x,
        minimizer,
        terminal_gradient_norm,
        step_size_valid: inst.step_size_valid(),
        iterates,
    })
}

impl DgdTrace {
    /// CSV rendering with columns `k,norm_x,dist_to_min,F_rho,consensus_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,norm_x,dist_to_min,F_rho,consensus_residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                r.state_norm,
                r.distance_to_minimizer,
                r.penalized_value,
                r.consensus_residual
            ));
        }
        out
    }
}

fn check_state(inst: &ProblemInstance, x: &StackedState) -> Result<()> {
    if x.agents() != inst.agent_count() || x.block_dim() != inst.dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.agent_count() * inst.dimension(),
            actual: x.agents() * x.block_dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionClassParams;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(h: f64, c: f64) -> QuadraticFunction {
        QuadraticFunction::new(
            DMatrix::from_element(1, 1, h),
            DVector::from_element(1, c),
        )
        .unwrap()
    }

    fn two_agent(rho: f64) -> ProblemInstance {
        let net = Network::complete(2, 1.0, 1.0).unwrap();
        ProblemInstance::new(vec![scalar(1.0, -1.0), scalar(1.0, 1.0)], net, rho, None).unwrap()
    }

    fn random_instance(
        n: usize,
        d: usize,
        kappa: f64,
        rho: f64,
        rng: &mut ChaCha8Rng,
    ) -> ProblemInstance {
        let params = FunctionClassParams::new(1.0, kappa, d).unwrap();
        let functions: Vec<_> = (0..n)
            .map(|_| QuadraticFunction::sample(&params, rng))
            .collect();
        let net = Network::complete(n, 1.0, 1.0).unwrap();
        ProblemInstance::new(functions, net, rho, None).unwrap()
    }

    #[test]
    fn single_agent_unit_step_is_exact_newton() {
        let net = Network::complete(1, 1.0, 1.0).unwrap();
        let inst = ProblemInstance::new(vec![scalar(1.0, 0.0)], net, 1.0, None).unwrap();
        assert_eq!(inst.eta(), 1.0); // lambda_n = 0, beta = 1
        let x = StackedState::new(DVector::from_element(1, 1.0), 1, 1).unwrap();
        let next = dgd_step(&inst, &x).unwrap();
        assert_eq!(next.as_vector()[0], 0.0);
    }

    #[test]
    fn step_from_origin_reaches_the_two_agent_minimizer() {
        let inst = two_agent(2.0);
        let x1 = dgd_step(&inst, &StackedState::zeros(2, 1)).unwrap();
        assert_eq!(x1.as_vector().as_slice(), &[-0.2, 0.2]);
        // The minimizer is a fixed point.
        let fixed = inst.minimizer().unwrap();
        let moved = dgd_step(&inst, &fixed).unwrap();
        assert!((moved.as_vector() - fixed.as_vector()).norm() < 1e-15);
    }

    #[test]
    fn step_equals_explicit_penalized_gradient_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_instance(4, 2, 10.0, 1.0, &mut rng);
        let x = StackedState::new(crate::linalg::normal_vector(8, &mut rng), 4, 2).unwrap();
        let step = dgd_step(&inst, &x).unwrap();
        let explicit = x.as_vector()
            - inst.penalized_gradient(&x).unwrap().into_vector() * inst.eta();
        assert!((step.as_vector() - explicit).norm() <= 1e-12);
    }

    #[test]
    fn mixing_weights_of_the_two_agent_instance() {
        let inst = two_agent(2.0).with_step_size(0.1).unwrap();
        let w = mixing_weights(&inst).unwrap();
        assert_relative_eq!(w[(0, 1)], 0.2, epsilon = 1e-15);
        assert_relative_eq!(w[(0, 0)], 0.8, epsilon = 1e-15);
        for i in 0..2 {
            assert_relative_eq!(w.row(i).sum(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn mixing_rejects_large_eta_rho() {
        let inst = two_agent(2.0).with_step_size(1.0).unwrap();
        assert!(matches!(
            mixing_weights(&inst),
            Err(Error::MixingNotStochastic { .. })
        ));
        assert!(dgd_step_mixing(&inst, &StackedState::zeros(2, 1)).is_err());
    }

    #[test]
    fn zero_penalty_mixing_is_pure_local_descent() {
        let inst = two_agent(0.0);
        let w = mixing_weights(&inst).unwrap();
        assert_eq!(w, DMatrix::identity(2, 2));
        let x = StackedState::new(DVector::from_row_slice(&[0.3, -0.8]), 2, 1).unwrap();
        let a = dgd_step(&inst, &x).unwrap();
        let b = dgd_step_mixing(&inst, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forms_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let n = rng.random_range(2..6);
            let d = rng.random_range(1..4);
            let kappa = [1.0, 10.0, 100.0][rng.random_range(0..3)];
            let rho = rng.random::<f64>() * 3.0;
            let inst = random_instance(n, d, kappa, rho, &mut rng);
            let x = StackedState::new(
                crate::linalg::normal_vector(n * d, &mut rng) * 5.0,
                n,
                d,
            )
            .unwrap();
            let a = dgd_step(&inst, &x).unwrap();
            let b = dgd_step_mixing(&inst, &x).unwrap();
            let max_diff = (a.as_vector() - b.as_vector()).abs().max();
            assert!(max_diff <= 1e-12, "max coordinate difference {max_diff}");
        }
    }

    #[test]
    fn consensus_with_identical_functions_stays_in_consensus() {
        let f = scalar(2.0, 0.5);
        let net = Network::complete(3, 1.0, 1.0).unwrap();
        let inst =
            ProblemInstance::new(vec![f.clone(), f.clone(), f], net, 1.0, None).unwrap();
        let mut x = StackedState::consensus(3, &DVector::from_element(1, -0.7)).unwrap();
        for _ in 0..10 {
            let via_mixing = dgd_step_mixing(&inst, &x).unwrap();
            x = dgd_step(&inst, &x).unwrap();
            assert_eq!(x.block_spread(), 0.0);
            assert!((via_mixing.as_vector() - x.as_vector()).norm() <= 1e-12);
        }
    }

    #[test]
    fn per_step_contraction_toward_the_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..20 {
            let n = rng.random_range(2..5);
            let inst = random_instance(n, 2, 10.0, 1.0, &mut rng);
            let alpha = inst.params().alpha();
            let eta = inst.eta();
            let minimizer = inst.minimizer().unwrap();
            let mut x = StackedState::new(
                crate::linalg::normal_vector(n * 2, &mut rng) * 10.0,
                n,
                2,
            )
            .unwrap();
            for _ in 0..50 {
                let next = dgd_step(&inst, &x).unwrap();
                let before = (x.as_vector() - minimizer.as_vector()).norm_squared();
                let after = (next.as_vector() - minimizer.as_vector()).norm_squared();
                assert!(after <= (1.0 - eta * alpha) * before + 1e-12);
                x = next;
            }
        }
    }

    #[test]
    fn run_produces_the_requested_trace_length_and_contraction() {
        let inst = two_agent(2.0);
        let x0 = StackedState::new(DVector::from_row_slice(&[3.0, -4.0]), 2, 1).unwrap();
        let trace = run(&inst, &x0, 200, &RunOptions::default()).unwrap();
        assert_eq!(trace.records.len(), 201);
        assert!(trace.step_size_valid);
        // Geometric decay with ratio at most sqrt(1 - eta * alpha) = sqrt(0.8).
        let ratio = (1.0 - inst.eta() * inst.params().alpha()).sqrt();
        for pair in trace.records.windows(2) {
            assert!(
                pair[1].distance_to_minimizer
                    <= ratio * pair[0].distance_to_minimizer + 1e-12
            );
        }
        assert!(trace.terminal_gradient_norm < 1e-9);
    }

    #[test]
    fn run_from_minimizer_is_constant() {
        let inst = two_agent(2.0);
        let x0 = inst.minimizer().unwrap();
        let trace = run(&inst, &x0, 20, &RunOptions { store_iterates: true }).unwrap();
        for r in &trace.records {
            assert_relative_eq!(r.distance_to_minimizer, 0.0, epsilon = 1e-12);
        }
        let iterates = trace.iterates.unwrap();
        assert_eq!(iterates.len(), 21);
        assert!(iterates.iter().all(|x| (x.as_vector() - x0.as_vector()).norm() < 1e-12));
    }

    #[test]
    fn long_run_converges_to_the_exact_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = random_instance(10, 2, 10.0, 1.0, &mut rng);
        let x0 = StackedState::zeros(10, 2);
        let trace = run(&inst, &x0, 4000, &RunOptions::default()).unwrap();
        assert!(trace.terminal_gradient_norm <= 1e-8, "{}", trace.terminal_gradient_norm);
        assert!(trace.records.last().unwrap().distance_to_minimizer < 1e-8);
    }

    #[test]
    fn eta_grid_stays_inside_the_endpoint_ball() {
        // If both x and the full step x - (1/beta_rho) grad stay inside a
        // ball around the origin, every intermediate step size does too.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let inst = random_instance(3, 2, 50.0, 2.0, &mut rng);
            let full = inst.default_step_size();
            let x = StackedState::new(
                crate::linalg::normal_vector(6, &mut rng) * 8.0,
                3,
                2,
            )
            .unwrap();
            let grad = inst.penalized_gradient(&x).unwrap().into_vector();
            let endpoint = x.as_vector() - &grad * full;
            let radius = x.norm().max(endpoint.norm());
            for i in 0..=10 {
                let eta = full * (i as f64) / 10.0;
                let point = x.as_vector() - &grad * eta;
                assert!(point.norm() <= radius + 1e-12);
            }
        }
    }

    #[test]
    fn csv_rendering_has_exact_header_and_row_count() {
        let inst = two_agent(2.0);
        let trace = run(&inst, &StackedState::zeros(2, 1), 3, &RunOptions::default()).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,norm_x,dist_to_min,F_rho,consensus_residual"
        );
        assert_eq!(lines.count(), 4);
    }
}
