//! Stacked states, the penalized objective, and exact minimizers.
//!
//! With `x` the stack of the agents' decision vectors, the separable
//! objective and its penalized form are
//!
//! ```text
//! F(x)     = sum_i f_i(x_i)
//! F_rho(x) = F(x) + rho/2 * x' (L kron I_d) x
//! ```
//!
//! For members of the `[alpha, beta]` class, `F_rho` is `alpha`-strongly
//! convex and `(beta + rho * lambda_n)`-smooth, and the plain sum
//! `f(x) = sum_i f_i(x)` (all agents sharing one variable) is
//! `n alpha`-strongly convex and `n beta`-smooth. Those constants fix the
//! admissible DGD step size and the penalized condition number
//! `kappa_rho = (beta + rho lambda_n) / alpha`.
//!
//! Because every local objective is quadratic, both minimizers are linear
//! solves, done here to near machine precision so they can serve as ground
//! truth for every bound check:
//!
//! * `argmin F_rho` solves `(blockdiag(H_i) + rho (L kron I_d)) x = (H_i c_i)_i`;
//! * `argmin f` solves `(sum_i H_i) x = sum_i H_i c_i`.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use open_dgd::function::QuadraticFunction;
//! use open_dgd::network::Network;
//! use open_dgd::objective::ProblemInstance;
//!
//! // Two scalar agents pulling toward -1 and +1 across one unit edge.
//! let f1 = QuadraticFunction::new(DMatrix::identity(1, 1), DVector::from_element(1, -1.0))?;
//! let f2 = QuadraticFunction::new(DMatrix::identity(1, 1), DVector::from_element(1, 1.0))?;
//! let net = Network::complete(2, 1.0, 1.0)?;
//! let inst = ProblemInstance::new(vec![f1, f2], net, 2.0, None)?;
//!
//! let x = inst.minimizer()?;
//! assert!((x.as_vector()[0] - (-0.2)).abs() < 1e-12);
//! assert!((x.as_vector()[1] - 0.2).abs() < 1e-12);
//! # Ok::<(), open_dgd::Error>(())
//! ```

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::function::{
    validate_membership, FunctionClassParams, MembershipReport, QuadraticFunction,
};
use crate::linalg;
use crate::network::Network;

/// Tolerance scale for gradient stationarity of exact minimizers,
/// `1e-9 * (1 + |x|)`, used consistently across the crate.
pub fn stationarity_tolerance(x_norm: f64) -> f64 {
    1e-9 * (1.0 + x_norm)
}

/// The stack of `n` agent vectors of dimension `d`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    data: DVector<f64>,
    agents: usize,
    block_dim: usize,
}

impl StackedState {
    pub fn new(data: DVector<f64>, agents: usize, block_dim: usize) -> Result<Self> {
        if agents == 0 || block_dim == 0 || data.len() != agents * block_dim {
            return Err(Error::DimensionMismatch {
                expected: agents * block_dim,
                actual: data.len(),
            });
        }
        Ok(Self { data, agents, block_dim })
    }

    pub fn zeros(agents: usize, block_dim: usize) -> Self {
        Self {
            data: DVector::zeros(agents * block_dim),
            agents,
            block_dim,
        }
    }

    pub fn from_blocks(blocks: &[DVector<f64>]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInstance("no blocks given".into()));
        }
        let d = blocks[0].len();
        let mut data = DVector::zeros(blocks.len() * d);
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: b.len() });
            }
            data.rows_mut(i * d, d).copy_from(b);
        }
        Self::new(data, blocks.len(), d)
    }

    /// All agents at the same point `point`.
    pub fn consensus(agents: usize, point: &DVector<f64>) -> Result<Self> {
        let d = point.len();
        let mut data = DVector::zeros(agents * d);
        for i in 0..agents {
            data.rows_mut(i * d, d).copy_from(point);
        }
        Self::new(data, agents, d)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn block(&self, i: usize) -> DVectorView<'_, f64> {
        self.data.rows(i * self.block_dim, self.block_dim)
    }

    pub fn block_owned(&self, i: usize) -> DVector<f64> {
        self.block(i).into_owned()
    }

    pub fn set_block(&mut self, i: usize, value: &DVector<f64>) {
        self.data
            .rows_mut(i * self.block_dim, self.block_dim)
            .copy_from(value);
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Largest pairwise distance between blocks; zero exactly at consensus.
    pub fn block_spread(&self) -> f64 {
        let mut spread: f64 = 0.0;
        for i in 0..self.agents {
            for j in (i + 1)..self.agents {
                spread = spread.max((self.block(i) - self.block(j)).norm());
            }
        }
        spread
    }
}

/// One DGD problem: `n` class members, a network, a penalty weight, and a
/// step size. The class parameters `(alpha, beta)` are the tightest interval
/// containing every Hessian spectrum, so the derived condition numbers are
/// the exact ones of the instance.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    functions: Vec<QuadraticFunction>,
    network: Network,
    rho: f64,
    eta: f64,
    params: FunctionClassParams,
}

impl ProblemInstance {
    /// Builds an instance. `eta = None` selects the largest step size with a
    /// contraction guarantee, `1 / (beta + rho * lambda_n)`.
    ///
    /// Functions must all share a dimension and match the network size;
    /// `rho` must be nonnegative. Minimizers outside the unit ball are not
    /// rejected here (the membership checks in [`crate::bounds`] report
    /// them), but the derived class parameters always cover the spectra.
    pub fn new(
        functions: Vec<QuadraticFunction>,
        network: Network,
        rho: f64,
        eta: Option<f64>,
    ) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidInstance("instance needs at least one function".into()));
        }
        if functions.len() != network.agent_count() {
            return Err(Error::InvalidInstance(format!(
                "{} functions for a network of {} agents",
                functions.len(),
                network.agent_count()
            )));
        }
        let d = functions[0].dimension();
        if functions.iter().any(|f| f.dimension() != d) {
            return Err(Error::InvalidInstance("functions must share one dimension".into()));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidInstance(format!("rho must be nonnegative, got {rho}")));
        }

        let mut alpha = f64::INFINITY;
        let mut beta: f64 = 0.0;
        for f in &functions {
            let (lo, hi) = f.eigenvalue_range();
            alpha = alpha.min(lo);
            beta = beta.max(hi);
        }
        let params = FunctionClassParams::new(alpha, beta, d)?;

        let default_eta = 1.0 / (beta + rho * network.lambda_max());
        let eta = eta.unwrap_or(default_eta);
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidInstance(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { functions, network, rho, eta, params })
    }

    pub fn functions(&self) -> &[QuadraticFunction] {
        &self.functions
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Tightest class parameters covering all Hessian spectra.
    pub fn params(&self) -> &FunctionClassParams {
        &self.params
    }

    pub fn agent_count(&self) -> usize {
        self.functions.len()
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension()
    }

    /// Smoothness constant of the penalized objective, `beta + rho * lambda_n`.
    pub fn penalized_smoothness(&self) -> f64 {
        self.params.beta() + self.rho * self.network.lambda_max()
    }

    /// Penalized condition number `kappa_rho = (beta + rho lambda_n) / alpha`.
    pub fn penalized_condition(&self) -> f64 {
        self.penalized_smoothness() / self.params.alpha()
    }

    /// Largest step size with a per-step contraction guarantee.
    pub fn default_step_size(&self) -> f64 {
        1.0 / self.penalized_smoothness()
    }

    /// Whether the configured step size is within the contractive range.
    pub fn step_size_valid(&self) -> bool {
        self.eta <= self.default_step_size() * (1.0 + 1e-12)
    }

    /// Same instance with a different step size.
    pub fn with_step_size(mut self, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidInstance(format!("eta must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Same functions and network with a different penalty; the step size is
    /// re-derived as the contractive default.
    pub fn with_penalty(self, rho: f64) -> Result<Self> {
        Self::new(self.functions, self.network, rho, None)
    }

    /// Per-function membership reports against the instance parameters.
    pub fn membership_reports(&self) -> Vec<MembershipReport> {
        self.functions
            .iter()
            .map(|f| validate_membership(f, &self.params))
            .collect()
    }

    fn check_state(&self, x: &StackedState) -> Result<()> {
        if x.agents() != self.agent_count() || x.block_dim() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.agent_count() * self.dimension(),
                actual: x.agents() * x.block_dim(),
            });
        }
        Ok(())
    }

    /// `F(x) = sum_i f_i(x_i)`; nonnegative.
    pub fn value(&self, x: &StackedState) -> Result<f64> {
        self.check_state(x)?;
        let mut total = 0.0;
        for (i, f) in self.functions.iter().enumerate() {
            total += f.evaluate(&x.block_owned(i))?;
        }
        Ok(total)
    }

    /// `F_rho(x) = F(x) + rho/2 x' (L kron I) x`; at least `F(x)`.
    pub fn penalized_value(&self, x: &StackedState) -> Result<f64> {
        let base = self.value(x)?;
        let penalty = self.network.quadratic_form(x.as_vector(), self.dimension())?;
        Ok(base + 0.5 * self.rho * penalty)
    }

    /// Consensus residual `x' (L kron I) x`.
    pub fn consensus_residual(&self, x: &StackedState) -> Result<f64> {
        self.check_state(x)?;
        self.network.quadratic_form(x.as_vector(), self.dimension())
    }

    /// Gradient of the penalized objective: block `i` is
    /// `grad f_i(x_i) + rho * sum_j a_ij (x_i - x_j)`.
    pub fn penalized_gradient(&self, x: &StackedState) -> Result<StackedState> {
        self.check_state(x)?;
        let d = self.dimension();
        let mut grad = self.network.apply(x.as_vector(), d)? * self.rho;
        for (i, f) in self.functions.iter().enumerate() {
            let gi = f.gradient(&x.block_owned(i))?;
            let mut rows = grad.rows_mut(i * d, d);
            rows += gi;
        }
        StackedState::new(grad, self.agent_count(), d)
    }

    /// Exact minimizer of the penalized objective by an SPD solve of
    /// `(blockdiag(H_i) + rho (L kron I_d)) x = (H_1 c_1, ..., H_n c_n)`.
    ///
    /// The result is certified: its gradient norm must be at most
    /// `1e-9 (1 + |x|)`, otherwise this is an error.
    pub fn minimizer(&self) -> Result<StackedState> {
        let n = self.agent_count();
        let d = self.dimension();
        let mut system = self.network.kron_laplacian(d) * self.rho;
        let mut rhs = DVector::zeros(n * d);
        for (i, f) in self.functions.iter().enumerate() {
            let h = f.hessian();
            for r in 0..d {
                for c in 0..d {
                    system[(i * d + r, i * d + c)] += h[(r, c)];
                }
            }
            rhs.rows_mut(i * d, d).copy_from(&(h * f.minimizer()));
        }
        let solution = linalg::spd_solve(&system, &rhs)?;
        let state = StackedState::new(solution, n, d)?;
        let residual = self.penalized_gradient(&state)?.norm();
        if residual > stationarity_tolerance(state.norm()) {
            return Err(Error::SolveFailed(format!(
                "penalized minimizer residual {residual} exceeds tolerance"
            )));
        }
        Ok(state)
    }
}

/// Exact minimizer of the plain sum `f(x) = sum_i f_i(x)` over a single
/// shared variable: solves `(sum_i H_i) x = sum_i H_i c_i` and certifies the
/// gradient of the sum at the result.
pub fn sum_minimizer(functions: &[QuadraticFunction]) -> Result<DVector<f64>> {
    if functions.is_empty() {
        return Err(Error::InvalidInstance("empty function list".into()));
    }
    let d = functions[0].dimension();
    let mut system = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for f in functions {
        if f.dimension() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: f.dimension() });
        }
        system += f.hessian();
        rhs += f.hessian() * f.minimizer();
    }
    let x = linalg::spd_solve(&system, &rhs)?;
    let grad_norm = sum_gradient(functions, &x)?.norm();
    if grad_norm > stationarity_tolerance(x.norm()) {
        return Err(Error::SolveFailed(format!(
            "sum minimizer residual {grad_norm} exceeds tolerance"
        )));
    }
    Ok(x)
}

/// `f(x) = sum_i f_i(x)` at a shared point.
pub fn sum_value(functions: &[QuadraticFunction], x: &DVector<f64>) -> Result<f64> {
    functions.iter().try_fold(0.0, |acc, f| Ok(acc + f.evaluate(x)?))
}

/// Gradient of the plain sum at a shared point.
pub fn sum_gradient(functions: &[QuadraticFunction], x: &DVector<f64>) -> Result<DVector<f64>> {
    if functions.is_empty() {
        return Err(Error::InvalidInstance("empty function list".into()));
    }
    let mut grad = DVector::zeros(x.len());
    for f in functions {
        grad += f.gradient(x)?;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::extremal_pair;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(h: f64, c: f64) -> QuadraticFunction {
        QuadraticFunction::new(
            DMatrix::from_element(1, 1, h),
            DVector::from_element(1, c),
        )
        .unwrap()
    }

    /// Two scalar agents, f1 = (x+1)^2/2 and f2 = (x-1)^2/2, one unit edge.
    fn two_agent(rho: f64) -> ProblemInstance {
        let net = Network::complete(2, 1.0, 1.0).unwrap();
        ProblemInstance::new(vec![scalar(1.0, -1.0), scalar(1.0, 1.0)], net, rho, None).unwrap()
    }

    #[test]
    fn values_on_the_two_agent_instance() {
        let inst = two_agent(2.0);
        assert_eq!(inst.eta(), 0.2); // 1 / (1 + 2 * 2)

        // Both agents at their own minimizers, rho = 0: everything vanishes.
        let free = two_agent(0.0);
        let at_minimizers = StackedState::new(DVector::from_row_slice(&[-1.0, 1.0]), 2, 1).unwrap();
        assert_eq!(free.penalized_value(&at_minimizers).unwrap(), 0.0);

        // Consensus at zero kills the penalty: F = F_rho = 1.
        let origin = StackedState::zeros(2, 1);
        assert_eq!(inst.value(&origin).unwrap(), 1.0);
        assert_eq!(inst.penalized_value(&origin).unwrap(), 1.0);

        // At (-1, 1): F = 0, penalty = (rho/2) * |x1 - x2|^2 = 4.
        assert_eq!(inst.value(&at_minimizers).unwrap(), 0.0);
        assert_eq!(inst.penalized_value(&at_minimizers).unwrap(), 4.0);

        // Gradient blocks at the origin: (1, -1).
        let grad = inst.penalized_gradient(&origin).unwrap();
        assert_eq!(grad.as_vector().as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn exact_minimizer_of_the_two_agent_instance() {
        // Stationarity: x1 + 1 + 2(x1 - x2) = 0, x2 - 1 + 2(x2 - x1) = 0
        // has the solution (-0.2, 0.2).
        let inst = two_agent(2.0);
        let x = inst.minimizer().unwrap();
        assert_relative_eq!(x.as_vector()[0], -0.2, epsilon = 1e-12);
        assert_relative_eq!(x.as_vector()[1], 0.2, epsilon = 1e-12);
        let grad = inst.penalized_gradient(&x).unwrap();
        assert!(grad.norm() <= stationarity_tolerance(x.norm()));
    }

    #[test]
    fn zero_penalty_decouples_the_minimizer() {
        let inst = two_agent(0.0);
        let x = inst.minimizer().unwrap();
        assert_relative_eq!(x.as_vector()[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(x.as_vector()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn large_penalty_forces_consensus_at_the_sum_minimizer() {
        let inst = two_agent(1e6);
        let x = inst.minimizer().unwrap();
        assert!(x.block_spread() < 1e-5);
        let shared = sum_minimizer(inst.functions()).unwrap();
        assert!((x.block_owned(0) - &shared).norm() < 1e-5);
        assert_relative_eq!(shared[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn penalized_minimizer_approaches_consensus_stack_as_rho_grows() {
        let pair = extremal_pair(10.0).unwrap();
        let shared = sum_minimizer(&[pair.left.clone(), pair.right.clone()]).unwrap();
        let target = StackedState::consensus(2, &shared).unwrap();
        let mut previous_spread = f64::INFINITY;
        for rho in [1e2, 1e4, 1e6] {
            let net = Network::complete(2, 1.0, 1.0).unwrap();
            let inst = ProblemInstance::new(
                vec![pair.left.clone(), pair.right.clone()],
                net,
                rho,
                None,
            )
            .unwrap();
            let x = inst.minimizer().unwrap();
            let spread = x.block_spread();
            assert!(spread < previous_spread);
            previous_spread = spread;
            let distance = (x.as_vector() - target.as_vector()).norm();
            assert!(distance < 10.0 / rho.sqrt(), "rho {rho}: distance {distance}");
        }
    }

    #[test]
    fn sum_minimizer_of_the_extremal_pair() {
        // kappa = 100: argmin(left + right) = (0, 99/20) and swapping in the
        // replacement recenters the sum at the origin.
        let pair = extremal_pair(100.0).unwrap();
        let x = sum_minimizer(&[pair.left.clone(), pair.right.clone()]).unwrap();
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 4.95, epsilon = 1e-9);

        let y = sum_minimizer(&[pair.left.clone(), pair.replacement.clone()]).unwrap();
        assert!(y.norm() < 1e-9, "norm {}", y.norm());
    }

    #[test]
    fn sum_minimizer_of_identical_functions_is_their_shared_minimizer() {
        let f = scalar(3.0, 0.25);
        let x = sum_minimizer(&[f.clone(), f.clone(), f]).unwrap();
        assert_relative_eq!(x[0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn penalized_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let params = FunctionClassParams::new(1.0, 20.0, 2).unwrap();
        let net = Network::cycle(4, 1.0, 1.0).unwrap();
        let functions: Vec<_> = (0..4)
            .map(|_| QuadraticFunction::sample(&params, &mut rng))
            .collect();
        let inst = ProblemInstance::new(functions, net, 1.5, None).unwrap();
        let h = 1e-5;
        for _ in 0..20 {
            let x = StackedState::new(crate::linalg::normal_vector(8, &mut rng) * 2.0, 4, 2)
                .unwrap();
            let grad = inst.penalized_gradient(&x).unwrap();
            let mut fd = DVector::zeros(8);
            for i in 0..8 {
                let mut pv = x.as_vector().clone();
                pv[i] += h;
                let mut mv = x.as_vector().clone();
                mv[i] -= h;
                let plus = StackedState::new(pv, 4, 2).unwrap();
                let minus = StackedState::new(mv, 4, 2).unwrap();
                fd[i] = (inst.penalized_value(&plus).unwrap()
                    - inst.penalized_value(&minus).unwrap())
                    / (2.0 * h);
            }
            let rel = (&fd - grad.as_vector()).norm() / grad.norm().max(1.0);
            assert!(rel <= 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn penalized_objective_constants_hold_on_samples() {
        // F_rho is alpha-strongly convex and (beta + rho lambda_n)-smooth;
        // the plain sum is n*alpha-strongly convex and n*beta-smooth.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = FunctionClassParams::new(0.8, 15.0, 2).unwrap();
        let net = Network::complete(5, 1.0, 1.0).unwrap();
        let functions: Vec<_> = (0..5)
            .map(|_| QuadraticFunction::sample(&params, &mut rng))
            .collect();
        let inst = ProblemInstance::new(functions.clone(), net, 0.7, None).unwrap();
        let smooth = inst.penalized_smoothness();
        let alpha = inst.params().alpha();
        let n = 5.0;
        for _ in 0..120 {
            let x = StackedState::new(crate::linalg::normal_vector(10, &mut rng) * 3.0, 5, 2)
                .unwrap();
            let y = StackedState::new(crate::linalg::normal_vector(10, &mut rng) * 3.0, 5, 2)
                .unwrap();
            let dx = x.as_vector() - y.as_vector();
            let dg = inst.penalized_gradient(&x).unwrap().into_vector()
                - inst.penalized_gradient(&y).unwrap().into_vector();
            assert!(dg.norm() <= smooth * dx.norm() * (1.0 + 1e-10));
            assert!(dg.dot(&dx) >= alpha * dx.norm_squared() - 1e-9);

            let p = crate::linalg::normal_vector(2, &mut rng) * 3.0;
            let q = crate::linalg::normal_vector(2, &mut rng) * 3.0;
            let dp = &p - &q;
            let dps = sum_gradient(&functions, &p).unwrap() - sum_gradient(&functions, &q).unwrap();
            assert!(dps.norm() <= n * inst.params().beta() * dp.norm() * (1.0 + 1e-10));
            assert!(dps.dot(&dp) >= n * alpha * dp.norm_squared() - 1e-9);
        }
    }

    #[test]
    fn penalized_values_dominate_plain_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = FunctionClassParams::new(1.0, 8.0, 3).unwrap();
        let net = Network::path(3, 1.0, 1.0).unwrap();
        let functions: Vec<_> = (0..3)
            .map(|_| QuadraticFunction::sample(&params, &mut rng))
            .collect();
        let inst = ProblemInstance::new(functions, net, 2.5, None).unwrap();
        for _ in 0..50 {
            let x = StackedState::new(crate::linalg::normal_vector(9, &mut rng) * 2.0, 3, 3)
                .unwrap();
            let f = inst.value(&x).unwrap();
            let frho = inst.penalized_value(&x).unwrap();
            assert!(f >= 0.0);
            assert!(frho >= f - 1e-12);
        }
    }

    #[test]
    fn instance_validation_errors() {
        let net = Network::complete(2, 1.0, 1.0).unwrap();
        // Wrong function count.
        assert!(ProblemInstance::new(vec![scalar(1.0, 0.0)], net.clone(), 1.0, None).is_err());
        // Mixed dimensions.
        let f2 = QuadraticFunction::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert!(
            ProblemInstance::new(vec![scalar(1.0, 0.0), f2], net.clone(), 1.0, None).is_err()
        );
        // Negative penalty or step size.
        assert!(ProblemInstance::new(
            vec![scalar(1.0, 0.0), scalar(1.0, 0.0)],
            net.clone(),
            -1.0,
            None
        )
        .is_err());
        assert!(ProblemInstance::new(
            vec![scalar(1.0, 0.0), scalar(1.0, 0.0)],
            net,
            1.0,
            Some(0.0)
        )
        .is_err());
    }

    #[test]
    fn derived_class_params_are_the_tightest_cover() {
        let net = Network::complete(2, 1.0, 1.0).unwrap();
        let inst = ProblemInstance::new(
            vec![scalar(2.0, 0.0), scalar(5.0, 0.1)],
            net,
            1.0,
            None,
        )
        .unwrap();
        assert_relative_eq!(inst.params().alpha(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(inst.params().beta(), 5.0, max_relative = 1e-12);
        assert_relative_eq!(inst.penalized_smoothness(), 5.0 + 2.0, max_relative = 1e-12);
        assert_relative_eq!(inst.penalized_condition(), 3.5, max_relative = 1e-12);
    }

    #[test]
    fn stacked_state_block_access() {
        let x = StackedState::from_blocks(&[
            DVector::from_row_slice(&[1.0, 2.0]),
            DVector::from_row_slice(&[3.0, 4.0]),
        ])
        .unwrap();
        assert_eq!(x.agents(), 2);
        assert_eq!(x.block_dim(), 2);
        assert_eq!(x.block_owned(1).as_slice(), &[3.0, 4.0]);
        assert!(StackedState::new(DVector::zeros(5), 2, 2).is_err());
    }
}
