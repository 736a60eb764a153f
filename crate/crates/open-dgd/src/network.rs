//! Communication graphs, their Laplacians, and the stacked Laplacian action.
//!
//! A [`Network`] wraps a weighted adjacency matrix `A` that must be
//! symmetric, have strictly positive diagonal entries, and describe a
//! connected graph. The graph Laplacian `L = D - A` (with `D` the diagonal
//! weighted-degree matrix) then satisfies
//!
//! ```text
//! x' (L kron I_d) x = sum_i sum_{j>i} a_ij |x_i - x_j|^2   >= 0,
//! ```
//!
//! with eigenvalues `0 = lambda_1 < lambda_2 <= ... <= lambda_n`. The
//! algebraic connectivity `lambda_2` being positive is equivalent to
//! connectivity, and the largest eigenvalue `lambda_n` enters both the step
//! size and the stability radius of the DGD iteration, so the spectrum is
//! computed exactly by a dense symmetric eigensolve at construction.
//!
//! Self-loop weights `a_ii` are required to be positive but cancel out of
//! `L`, so they never affect the penalty or the dynamics.
//!
//! ```
//! use open_dgd::network::Network;
//!
//! let net = Network::complete(3, 1.0, 1.0)?;
//! let eigs = net.eigenvalues();
//! assert!(eigs[0].abs() < 1e-9);
//! assert!((eigs[1] - 3.0).abs() < 1e-9);
//! assert!((net.lambda_max() - 3.0).abs() < 1e-9);
//! # Ok::<(), open_dgd::Error>(())
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// A validated communication graph with precomputed Laplacian and spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Network {
    /// Validates an adjacency matrix and computes the Laplacian spectrum.
    ///
    /// Rejects non-square or non-symmetric matrices, negative or non-finite
    /// weights, zero diagonal entries, and disconnected graphs (checked by
    /// traversal of the positive off-diagonal pattern).
    pub fn build(adjacency: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = adjacency.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        if n == 0 {
            return Err(Error::InvalidInstance("network must have at least one agent".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidWeight { i, j });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[(i, j)] != adjacency[(j, i)] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        for i in 0..n {
            if adjacency[(i, i)] <= 0.0 {
                return Err(Error::ZeroDiagonal(i));
            }
        }
        if !connected(&adjacency) {
            return Err(Error::Disconnected);
        }

        let mut laplacian = -adjacency.clone();
        for i in 0..n {
            let degree: f64 = adjacency.row(i).sum();
            laplacian[(i, i)] += degree;
        }
        let eigenvalues = linalg::sorted_eigenvalues(&laplacian);
        Ok(Self { adjacency, laplacian, eigenvalues })
    }

    /// Complete graph on `n` agents.
    pub fn complete(n: usize, edge_weight: f64, self_weight: f64) -> Result<Self> {
        let mut a = DMatrix::from_element(n, n, edge_weight);
        for i in 0..n {
            a[(i, i)] = self_weight;
        }
        Self::build(a)
    }

    /// Path graph `0 - 1 - ... - n-1`.
    pub fn path(n: usize, edge_weight: f64, self_weight: f64) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self_weight;
        }
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = edge_weight;
            a[(i + 1, i)] = edge_weight;
        }
        Self::build(a)
    }

    /// Cycle graph. A two-agent cycle degenerates to a single edge.
    pub fn cycle(n: usize, edge_weight: f64, self_weight: f64) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self_weight;
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if i != j {
                a[(i, j)] = edge_weight;
                a[(j, i)] = edge_weight;
            }
        }
        Self::build(a)
    }

    /// Erdos-Renyi graph with edge probability `p`, resampled until
    /// connected (deterministic given the seed).
    pub fn erdos_renyi(
        n: usize,
        p: f64,
        edge_weight: f64,
        self_weight: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInstance(format!(
                "edge probability must be in [0, 1], got {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = self_weight;
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        a[(i, j)] = edge_weight;
                        a[(j, i)] = edge_weight;
                    }
                }
            }
            if connected(&a) {
                return Self::build(a);
            }
        }
        Err(Error::Disconnected)
    }

    pub fn agent_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Algebraic connectivity `lambda_2`; `None` for a single agent.
    pub fn lambda_2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    /// Largest Laplacian eigenvalue `lambda_n` (zero for a single agent).
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("network has at least one agent")
    }

    /// The penalty quadratic form `x' (L kron I_d) x`, evaluated as the
    /// pairwise double sum `sum_i sum_{j>i} a_ij |x_i - x_j|^2` over
    /// `d`-dimensional blocks of `x`.
    ///
    /// [`Network::apply`] provides an independent route to the same value
    /// through `<x, (L kron I_d) x>`; the two must agree to 1e-10 relative.
    pub fn quadratic_form(&self, x: &DVector<f64>, d: usize) -> Result<f64> {
        self.check_stacked(x, d)?;
        let n = self.agent_count();
        let mut total = 0.0;
        for i in 0..n {
            let xi = x.rows(i * d, d);
            for j in (i + 1)..n {
                let w = self.adjacency[(i, j)];
                if w > 0.0 {
                    let xj = x.rows(j * d, d);
                    total += w * (xi - xj).norm_squared();
                }
            }
        }
        Ok(total)
    }

    /// The stacked Laplacian action `(L kron I_d) x`: block `i` of the
    /// result is `sum_j a_ij (x_i - x_j)`.
    pub fn apply(&self, x: &DVector<f64>, d: usize) -> Result<DVector<f64>> {
        self.check_stacked(x, d)?;
        let n = self.agent_count();
        let mut y = DVector::zeros(n * d);
        for i in 0..n {
            let xi = x.rows(i * d, d);
            let mut block = DVector::zeros(d);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let w = self.adjacency[(i, j)];
                if w > 0.0 {
                    let xj = x.rows(j * d, d);
                    block += (xi - xj) * w;
                }
            }
            y.rows_mut(i * d, d).copy_from(&block);
        }
        Ok(y)
    }

    /// Dense `L kron I_d`, used for exact penalized minimizer solves and as
    /// an independent oracle in tests.
    pub fn kron_laplacian(&self, d: usize) -> DMatrix<f64> {
        let n = self.agent_count();
        let mut m = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                let lij = self.laplacian[(i, j)];
                if lij != 0.0 {
                    for k in 0..d {
                        m[(i * d + k, j * d + k)] = lij;
                    }
                }
            }
        }
        m
    }

    fn check_stacked(&self, x: &DVector<f64>, d: usize) -> Result<()> {
        let expected = self.agent_count() * d;
        if d == 0 || x.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: x.len() });
        }
        Ok(())
    }
}

/// Connectivity of the positive off-diagonal pattern by depth-first search.
fn connected(adjacency: &DMatrix<f64>) -> bool {
    let n = adjacency.nrows();
    if n <= 1 {
        return true;
    }
    let mut visited = vec![false; n];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        for j in 0..n {
            if j != i && adjacency[(i, j)] > 0.0 && !visited[j] {
                stack.push(j);
            }
        }
    }
    visited.into_iter().all(|v| v)
}
