//! The function class and its quadratic members.
//!
//! Every local objective handled by this crate belongs to the class of
//! continuously differentiable functions that are `alpha`-strongly convex,
//! `beta`-smooth, attain a minimum value of exactly zero, and have their
//! minimizer inside the unit ball. The condition number `kappa = beta /
//! alpha` drives every bound in the crate.
//!
//! Only quadratic members are implemented:
//!
//! ```text
//! f(x) = 1/2 (x - c)' H (x - c),   eigenvalues of H in [alpha, beta],  |c| <= 1
//! ```
//!
//! Quadratics admit exact minimizer computation by a linear solve, which is
//! what makes every bound in [`crate::bounds`] checkable against ground
//! truth instead of against another iterative method. The bounds themselves
//! are stated for the whole class, so verifying them on quadratics is sound;
//! the extremal examples that make them (almost) tight are quadratic anyway.
//!
//! [`ExtremalPair`] constructs those examples: two mirrored elongated
//! quadratics whose sum has its minimizer a distance `(kappa-1)/(2
//! sqrt(kappa))` from the origin even though both minimizers lie on the unit
//! sphere, plus a slightly rotated replacement that snaps the sum's
//! minimizer back to the origin.
//!
//! ```
//! use open_dgd::function::{extremal_pair, validate_membership, FunctionClassParams};
//!
//! let pair = extremal_pair(100.0).unwrap();
//! let params = FunctionClassParams::new(1.0, 100.0, 2).unwrap();
//! assert!(validate_membership(&pair.left, &params).is_member());
//!
//! // Both minimizers sit on the unit sphere...
//! assert!((pair.left.minimizer().norm() - 1.0).abs() < 1e-12);
//! // ...and each function is zero at its own minimizer.
//! assert!(pair.left.evaluate(pair.left.minimizer()).unwrap() < 1e-15);
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Slack applied to the `[alpha, beta]` eigenvalue check so that
/// floating-point rotation error cannot fail a genuine member.
const MEMBERSHIP_RELATIVE_SLACK: f64 = 1e-9;

/// Class parameters: strong convexity `alpha`, smoothness `beta`, dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionClassParams {
    alpha: f64,
    beta: f64,
    dimension: usize,
}

impl FunctionClassParams {
    /// Requires `alpha > 0`, `beta >= alpha`, and a positive dimension.
    pub fn new(alpha: f64, beta: f64, dimension: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidClassParams(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(beta >= alpha) || !beta.is_finite() {
            return Err(Error::InvalidClassParams(format!(
                "beta must satisfy beta >= alpha, got alpha={alpha}, beta={beta}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidClassParams("dimension must be positive".into()));
        }
        Ok(Self { alpha, beta, dimension })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Condition number `beta / alpha`, always at least one.
    pub fn kappa(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// A quadratic `f(x) = 1/2 (x - c)' H (x - c)` with symmetric
/// positive-definite `H` and minimizer `c`.
///
/// Construction checks structure (symmetry, positive definiteness); whether
/// the function belongs to a particular `[alpha, beta]` class is a separate
/// question answered by [`validate_membership`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    hessian: DMatrix<f64>,
    minimizer: DVector<f64>,
}

impl QuadraticFunction {
    pub fn new(hessian: DMatrix<f64>, minimizer: DVector<f64>) -> Result<Self> {
        let (rows, cols) = hessian.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if minimizer.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, actual: minimizer.len() });
        }
        let scale = hessian.norm().max(1.0);
        for i in 0..rows {
            for j in (i + 1)..rows {
                if (hessian[(i, j)] - hessian[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        // Store the exactly symmetric part so downstream eigensolves and
        // Cholesky factorizations see a clean symmetric matrix.
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        if hessian.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { hessian, minimizer })
    }

    /// Isotropic quadratic `scale/2 |x - c|^2`. The departure placeholder in
    /// open-system schedules is `isotropic(alpha, 0)`.
    pub fn isotropic(scale: f64, minimizer: DVector<f64>) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidClassParams(format!(
                "isotropic scale must be positive, got {scale}"
            )));
        }
        let dim = minimizer.len();
        Self::new(DMatrix::identity(dim, dim) * scale, minimizer)
    }

    pub fn dimension(&self) -> usize {
        self.minimizer.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    /// `1/2 (x - c)' H (x - c)`; nonnegative, zero exactly at `c`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let diff = x - &self.minimizer;
        Ok(0.5 * diff.dot(&(&self.hessian * &diff)))
    }

    /// `H (x - c)`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(&self.hessian * (x - &self.minimizer))
    }

    /// Smallest and largest eigenvalue of the Hessian.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        let eigs = linalg::sorted_eigenvalues(&self.hessian);
        (eigs[0], eigs[eigs.len() - 1])
    }

    /// Random class member: Hessian `Q diag(lambda) Q'` with `Q` Haar
    /// orthogonal and each `lambda` log-uniform on `[alpha, beta]`, minimizer
    /// uniform in the unit ball. This sampling spans the class boundary
    /// where the bounds bind.
    pub fn sample<R: Rng + ?Sized>(params: &FunctionClassParams, rng: &mut R) -> Self {
        let d = params.dimension();
        let log_lo = params.alpha().ln();
        let log_hi = params.beta().ln();
        let eigenvalues: Vec<f64> = (0..d)
            .map(|_| (log_lo + (log_hi - log_lo) * rng.random::<f64>()).exp())
            .collect();
        let hessian = if d == 1 {
            DMatrix::from_element(1, 1, eigenvalues[0])
        } else {
            let q = linalg::random_orthogonal(d, rng);
            let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues));
            let h = &q * lambda * q.transpose();
            (&h + h.transpose()) * 0.5
        };
        let minimizer = linalg::uniform_in_unit_ball(d, rng);
        Self { hessian, minimizer }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), actual: x.len() });
        }
        Ok(())
    }
}

/// Rotation direction for [`RotatedQuadratic2D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSign {
    Positive,
    Negative,
}

impl RotationSign {
    pub fn as_f64(self) -> f64 {
        match self {
            RotationSign::Positive => 1.0,
            RotationSign::Negative => -1.0,
        }
    }

    /// Parses `+1` / `-1`.
    pub fn from_i8(sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(RotationSign::Positive),
            -1 => Ok(RotationSign::Negative),
            other => Err(Error::Descriptor(format!("sign must be +1 or -1, got {other}"))),
        }
    }
}

/// A two-dimensional quadratic given by rotating the axis-aligned Hessian
/// `diag(beta, alpha)` through the angle `sign * phi` and translating the
/// minimizer to `c`:
///
/// ```text
/// H = R(sign * phi) diag(beta, alpha) R(sign * phi)'
/// ```
///
/// Eigenvalues are exactly `{alpha, beta}`, so a rotated quadratic with `c`
/// in the unit ball is always a class member. The worst-case search space
/// and the extremal examples are parameterized this way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedQuadratic2D {
    pub phi: f64,
    pub sign: RotationSign,
    pub minimizer: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
}

impl RotatedQuadratic2D {
    pub fn new(
        phi: f64,
        sign: RotationSign,
        minimizer: [f64; 2],
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        FunctionClassParams::new(alpha, beta, 2)?;
        if !phi.is_finite() || !minimizer.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidClassParams(
                "rotated quadratic parameters must be finite".into(),
            ));
        }
        Ok(Self { phi, sign, minimizer, alpha, beta })
    }

    /// Dense expansion. The Hessian is assembled entrywise from the closed
    /// form of `R diag(beta, alpha) R'`, so it is exactly symmetric.
    pub fn expand(&self) -> QuadraticFunction {
        let theta = self.sign.as_f64() * self.phi;
        let (s, c) = theta.sin_cos();
        let (a, b) = (self.alpha, self.beta);
        let hessian = DMatrix::from_row_slice(
            2,
            2,
            &[
                b * c * c + a * s * s,
                (b - a) * c * s,
                (b - a) * c * s,
                b * s * s + a * c * c,
            ],
        );
        QuadraticFunction {
            hessian,
            minimizer: DVector::from_row_slice(&self.minimizer),
        }
    }
}

/// Membership report for a quadratic against `[alpha, beta]` class
/// parameters. A report, not an error: failing functions are constructible,
/// they just fall outside the class the bounds are stated for.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    /// All Hessian eigenvalues within `[alpha, beta]` (relative slack 1e-9).
    /// Also false when the function dimension disagrees with the parameters.
    pub eigenvalues_in_range: bool,
    /// Minimizer norm at most one (same slack).
    pub minimizer_in_unit_ball: bool,
    /// The minimum value is zero. Structurally true for the quadratic
    /// representation; reported for uniformity.
    pub zero_minimum: bool,
    /// Observed `(lambda_min, lambda_max)` of the Hessian.
    pub eigenvalue_bounds: (f64, f64),
    /// Observed minimizer norm.
    pub minimizer_norm: f64,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.eigenvalues_in_range && self.minimizer_in_unit_ball && self.zero_minimum
    }
}

/// Checks a quadratic against class parameters: eigenvalue range inside
/// `[alpha, beta]`, minimizer inside the unit ball, zero minimum value.
pub fn validate_membership(
    f: &QuadraticFunction,
    params: &FunctionClassParams,
) -> MembershipReport {
    let (lo, hi) = f.eigenvalue_range();
    let dim_ok = f.dimension() == params.dimension();
    let alpha_ok = lo >= params.alpha() * (1.0 - MEMBERSHIP_RELATIVE_SLACK);
    let beta_ok = hi <= params.beta() * (1.0 + MEMBERSHIP_RELATIVE_SLACK);
    let norm = f.minimizer().norm();
    MembershipReport {
        eigenvalues_in_range: dim_ok && alpha_ok && beta_ok,
        minimizer_in_unit_ball: norm <= 1.0 + MEMBERSHIP_RELATIVE_SLACK,
        zero_minimum: true,
        eigenvalue_bounds: (lo, hi),
        minimizer_norm: norm,
    }
}

/// The extremal two-dimensional example family at condition number `kappa`
/// (`alpha` normalized to one, `beta = kappa`).
///
/// With `phi = atan(1 / sqrt(kappa))`:
///
/// * [`left`](Self::left) is rotated through `-phi` and centered at `(-1, 0)`;
/// * [`right`](Self::right) is its mirror image, rotated through `+phi` and
///   centered at `(1, 0)`;
/// * [`replacement`](Self::replacement) is `right` with its curvature axes
///   rotated through twice the complementary angle `atan(sqrt(kappa))` about
///   its own minimizer. Because the level-set ellipse has period pi, that
///   large-looking angle is equivalent to a rotation by only about
///   `2 / sqrt(kappa)` radians, yet it aligns the axes with `left`'s.
///
/// The minimizer of `left + right` sits at `(0, (kappa-1)/(2 sqrt(kappa)))`,
/// at distance about `sqrt(kappa)/2` from the origin, while the minimizer of
/// `left + replacement` is exactly the origin. Swapping `right` for
/// `replacement` therefore moves the minimizer of the sum by
/// `(kappa-1)/(2 sqrt(kappa))` even though the swap is a tiny rotation.
#[derive(Debug, Clone)]
pub struct ExtremalPair {
    pub left: QuadraticFunction,
    pub right: QuadraticFunction,
    pub replacement: QuadraticFunction,
}

impl ExtremalPair {
    /// The minimizer displacement `(kappa-1)/(2 sqrt(kappa))` realized by
    /// swapping `right` for `replacement`.
    pub fn minimizer_jump(kappa: f64) -> f64 {
        (kappa - 1.0) / (2.0 * kappa.sqrt())
    }
}

/// Builds the extremal example family for `kappa >= 1`. See [`ExtremalPair`].
pub fn extremal_pair(kappa: f64) -> Result<ExtremalPair> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidClassParams(format!(
            "kappa must be at least 1, got {kappa}"
        )));
    }
    let phi = (1.0 / kappa.sqrt()).atan();
    let left = RotatedQuadratic2D::new(phi, RotationSign::Negative, [-1.0, 0.0], 1.0, kappa)?;
    let right = RotatedQuadratic2D::new(phi, RotationSign::Positive, [1.0, 0.0], 1.0, kappa)?;
    // Rotating `right`'s Hessian through 2 * atan(sqrt(kappa)) lands, modulo
    // the pi-periodicity of the quadratic form, on `left`'s orientation.
    let replacement = RotatedQuadratic2D::new(phi, RotationSign::Negative, [1.0, 0.0], 1.0, kappa)?;
    Ok(ExtremalPair {
        left: left.expand(),
        right: right.expand(),
        replacement: replacement.expand(),
    })
}
