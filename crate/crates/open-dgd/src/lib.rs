//! Decentralized gradient descent on a penalized consensus objective, with
//! open-system simulation and worst-case bound verification.
//!
//! `n` agents each hold a smooth, strongly convex local objective with
//! minimizer in the unit ball, and communicate over a weighted undirected
//! graph. Decentralized gradient descent (DGD) is the gradient method
//! applied to the penalized objective
//!
//! ```text
//! F_rho(x) = sum_i f_i(x_i) + rho/2 * x' (L kron I_d) x
//! ```
//!
//! where `L` is the graph Laplacian and `rho` trades consensus against local
//! minimization. Everything in this crate is built so that the closed-form
//! guarantees about that iteration (where the minimizers can live, how far a
//! single function swap can move them, and which ball the iterates can never
//! leave even under per-step adversarial objective changes) can be checked
//! against exactly solvable quadratic instances.
//!
//! The crate splits along those lines:
//!
//! * [`function`] - the quadratic function class and its extremal examples;
//! * [`network`] - communication graphs, Laplacians, spectra;
//! * [`objective`] - stacked states, penalized objectives, exact minimizers;
//! * [`dgd`] - the iteration in penalized-gradient and mixing form;
//! * [`open_system`] - scheduled and adversarial function replacement,
//!   stability radii;
//! * [`bounds`] - every closed-form bound, checked with pass/fail margins;
//! * [`search`] - derivative-free worst-case search over rotated quadratics;
//! * [`descriptor`] - JSON descriptors for functions, networks, instances,
//!   and schedules.
//!
//! A complete round trip:
//!
//! ```
//! use nalgebra::DVector;
//! use open_dgd::function::extremal_pair;
//! use open_dgd::network::Network;
//! use open_dgd::objective::{ProblemInstance, StackedState};
//! use open_dgd::dgd;
//!
//! let pair = extremal_pair(100.0)?;
//! let net = Network::complete(2, 1.0, 1.0)?;
//! let inst = ProblemInstance::new(vec![pair.left, pair.right], net, 2.0, None)?;
//!
//! let x0 = StackedState::zeros(2, 2);
//! let trace = dgd::run(&inst, &x0, 5000, &dgd::RunOptions::default())?;
//!
//! // Monotone contraction toward the penalized minimizer.
//! assert!(trace.records.last().unwrap().distance_to_minimizer < 1e-8);
//! # Ok::<(), open_dgd::Error>(())
//! ```

pub mod bounds;
pub mod descriptor;
pub mod dgd;
mod error;
pub mod function;
pub mod linalg;
pub mod network;
pub mod objective;
pub mod open_system;
pub mod search;

pub use error::{Error, Result};
