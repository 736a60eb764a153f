//! Every closed-form bound, checked against exactly computed quantities.
//!
//! Each check produces a [`BoundCheck`] row: the observed quantity, the
//! analytic bound, the margin `bound - observed`, and a pass flag. A check
//! passes when `observed <= bound + 1e-9 * (1 + |bound|)`; the slack absorbs
//! solver round-off, margins are reported in absolute terms.
//!
//! The bounds, for `n` class members with condition number `kappa`:
//!
//! * **Localization.** The minimizer of the sum lies in the ball of radius
//!   `R_kappa = 1 + sqrt(kappa)`, and every block of the penalized
//!   minimizer lies in the same ball, for any penalty and network.
//! * **Swap sensitivity.** Replacing one summand moves the minimizer of the
//!   sum by at most
//!   `min(4 + 4 sqrt(k), (4 sqrt(k) + 2k) / sqrt(n-1), (4k + 2k^1.5) / n)`.
//! * **Removal sensitivity.** Adding one member to a sum of `n - 1` moves
//!   the minimizer by at most half the swap bound (exactly half, term by
//!   term: the swap bound is proved by going through the common-part
//!   minimizer twice), namely
//!   `min(2 + 2 sqrt(k), (2 sqrt(k) + k) / sqrt(n-1), (2k + k^1.5) / n)`.
//! * **Two-function bound.** For `g_1, g_2` strongly convex and smooth with
//!   constants `(alpha_i, beta_i)` and minimizers in balls of radii `R_i`,
//!   the minimizer of the sum satisfies
//!   `|x* - x_1*| <= beta_2 (R_1 + R_2) / (alpha_1 + alpha_2)`.
//! * **Stability envelope.** Once an open-system trajectory enters the ball
//!   of radius `R`, it never leaves it (see [`crate::open_system`]).
//!
//! ```
//! use open_dgd::bounds::{localization_radius, swap_bound, removal_bound};
//!
//! assert_eq!(localization_radius(100.0), 11.0);
//! // kappa = 1, n = 2: min(8, 6, 3) = 3.
//! assert_eq!(swap_bound(2, 1.0), 3.0);
//! // The swap bound is exactly twice the removal bound.
//! assert_eq!(swap_bound(2, 1.0), 2.0 * removal_bound(2, 1.0));
//! ```

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{validate_membership, FunctionClassParams, QuadraticFunction};
use crate::linalg;
use crate::network::Network;
use crate::objective::{sum_minimizer, ProblemInstance};
use crate::open_system::OpenSummary;

/// Pass rule shared by every check: relative slack `1e-9 * (1 + |bound|)`.
pub fn bound_holds(observed: f64, bound: f64) -> bool {
    observed <= bound + 1e-9 * (1.0 + bound.abs())
}

/// One verified bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    /// `bound - observed`, in absolute terms.
    pub margin: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            margin: bound - observed,
            pass: bound_holds(observed, bound),
        }
    }
}

/// A batch of checks, optionally fingerprinted by the instance descriptor
/// that produced them.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundsReport {
    pub checks: Vec<BoundCheck>,
    /// FNV-1a hash of the canonical instance JSON, when one applies.
    pub fingerprint: Option<String>,
}

impl BoundsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fingerprint(json: &str) -> Self {
        Self {
            checks: Vec::new(),
            fingerprint: Some(linalg::fingerprint(json.as_bytes())),
        }
    }

    pub fn push(&mut self, check: BoundCheck) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = BoundCheck>) {
        self.checks.extend(checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// CSV rendering with columns `check,observed,bound,margin,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,observed,bound,margin,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.name, c.observed, c.bound, c.margin, c.pass
            ));
        }
        out
    }
}

/// The localization radius `R_kappa = 1 + sqrt(kappa)`.
pub fn localization_radius(kappa: f64) -> f64 {
    1.0 + kappa.sqrt()
}

/// Bound on how far swapping one of `n` summands can move the minimizer of
/// the sum: `min(4 + 4 sqrt(k), (4 sqrt(k) + 2k)/sqrt(n-1), (4k + 2k^1.5)/n)`.
///
/// Requires `n >= 2`. Written so that it is bitwise exactly twice
/// [`removal_bound`]: every term doubles a removal term, and doubling
/// commutes with rounding in binary floating point.
pub fn swap_bound(n: usize, kappa: f64) -> f64 {
    debug_assert!(n >= 2);
    let s = kappa.sqrt();
    let free = 4.0 + 4.0 * s;
    let root = (4.0 * s + 2.0 * kappa) / (((n - 1) as f64).sqrt());
    let linear = (4.0 * kappa + 2.0 * kappa * s) / n as f64;
    free.min(root).min(linear)
}

/// Bound on how far adding one member to a sum of `n - 1` moves the
/// minimizer: `min(2 + 2 sqrt(k), (2 sqrt(k) + k)/sqrt(n-1), (2k + k^1.5)/n)`.
pub fn removal_bound(n: usize, kappa: f64) -> f64 {
    debug_assert!(n >= 2);
    let s = kappa.sqrt();
    let free = 2.0 + 2.0 * s;
    let root = (2.0 * s + kappa) / (((n - 1) as f64).sqrt());
    let linear = (2.0 * kappa + kappa * s) / n as f64;
    free.min(root).min(linear)
}

/// The two-function bound `beta_2 (R_1 + R_2) / (alpha_1 + alpha_2)`.
pub fn two_function_bound(alpha1: f64, alpha2: f64, beta2: f64, r1: f64, r2: f64) -> f64 {
    beta2 * (r1 + r2) / (alpha1 + alpha2)
}

/// Localization checks for an instance: the norm of the sum minimizer, and
/// the largest block norm of the penalized minimizer, both against
/// `R_kappa`.
pub fn check_localization(inst: &ProblemInstance) -> Result<Vec<BoundCheck>> {
    let radius = localization_radius(inst.params().kappa());
    let shared = sum_minimizer(inst.functions())?;
    let penalized = inst.minimizer()?;
    let worst_block = (0..inst.agent_count())
        .map(|i| penalized.block(i).norm())
        .fold(0.0, f64::max);
    Ok(vec![
        BoundCheck::new("localization:sum_minimizer", shared.norm(), radius),
        BoundCheck::new("localization:penalized_blocks", worst_block, radius),
    ])
}

/// Localization of the sum minimizer alone, for a bare function list.
pub fn check_sum_localization(
    functions: &[QuadraticFunction],
    params: &FunctionClassParams,
) -> Result<BoundCheck> {
    let shared = sum_minimizer(functions)?;
    Ok(BoundCheck::new(
        "localization:sum_minimizer",
        shared.norm(),
        localization_radius(params.kappa()),
    ))
}

/// Sensitivity checks for swapping `fa` against `fb` on top of the common
/// members: the swap bound on `|x_a - x_b|`, the removal bound on each of
/// `|x_a - x_minus|` and `|x_b - x_minus|`, and the triangle inequality
/// tying them together. `n` is `common.len() + 1`.
///
/// All functions must be class members for `params`.
pub fn check_sensitivity(
    common: &[QuadraticFunction],
    fa: &QuadraticFunction,
    fb: &QuadraticFunction,
    params: &FunctionClassParams,
) -> Result<Vec<BoundCheck>> {
    if common.is_empty() {
        return Err(Error::InvalidInstance(
            "sensitivity checks need at least one common function".into(),
        ));
    }
    for (what, f) in std::iter::once(("fa", fa))
        .chain(std::iter::once(("fb", fb)))
        .chain(common.iter().map(|f| ("common", f)))
    {
        if !validate_membership(f, params).is_member() {
            return Err(Error::InvalidInstance(format!(
                "{what} function is outside the class"
            )));
        }
    }
    let n = common.len() + 1;
    let kappa = params.kappa();

    let x_minus = sum_minimizer(common)?;
    let mut with_a = common.to_vec();
    with_a.push(fa.clone());
    let x_a = sum_minimizer(&with_a)?;
    let mut with_b = common.to_vec();
    with_b.push(fb.clone());
    let x_b = sum_minimizer(&with_b)?;

    let swap_observed = (&x_a - &x_b).norm();
    let removal_a = (&x_a - &x_minus).norm();
    let removal_b = (&x_b - &x_minus).norm();
    Ok(vec![
        BoundCheck::new("sensitivity:swap", swap_observed, swap_bound(n, kappa)),
        BoundCheck::new("sensitivity:removal_a", removal_a, removal_bound(n, kappa)),
        BoundCheck::new("sensitivity:removal_b", removal_b, removal_bound(n, kappa)),
        BoundCheck::new("sensitivity:triangle", swap_observed, removal_a + removal_b),
    ])
}

/// Per-function constants for [`check_two_function`]: strong convexity,
/// smoothness, and the radius of the ball containing the minimizer.
#[derive(Debug, Clone, Copy)]
pub struct FunctionConstants {
    pub alpha: f64,
    pub beta: f64,
    pub radius: f64,
}

/// The two-function bound on `|argmin(g1 + g2) - argmin(g1)|`. Each
/// function must actually satisfy its stated constants and ball radius;
/// inconsistencies are errors, not failed checks.
pub fn check_two_function(
    g1: &QuadraticFunction,
    c1: FunctionConstants,
    g2: &QuadraticFunction,
    c2: FunctionConstants,
) -> Result<BoundCheck> {
    if g1.dimension() != g2.dimension() {
        return Err(Error::DimensionMismatch {
            expected: g1.dimension(),
            actual: g2.dimension(),
        });
    }
    for (g, c, what) in [(g1, c1, "g1"), (g2, c2, "g2")] {
        let (lo, hi) = g.eigenvalue_range();
        let slack = 1e-9;
        if lo < c.alpha * (1.0 - slack) || hi > c.beta * (1.0 + slack) {
            return Err(Error::InvalidInstance(format!(
                "{what}: eigenvalue range [{lo}, {hi}] is outside stated [{}, {}]",
                c.alpha, c.beta
            )));
        }
        if g.minimizer().norm() > c.radius * (1.0 + slack) {
            return Err(Error::InvalidInstance(format!(
                "{what}: minimizer norm {} exceeds stated radius {}",
                g.minimizer().norm(),
                c.radius
            )));
        }
    }
    let joint = sum_minimizer(&[g1.clone(), g2.clone()])?;
    let observed = (&joint - g1.minimizer()).norm();
    let bound = two_function_bound(c1.alpha, c2.alpha, c2.beta, c1.radius, c2.radius);
    Ok(BoundCheck::new("two_function", observed, bound))
}

/// Latched ball invariance of an open-system run: the largest post-entry
/// norm against the stability radius. Trivially passes when the trajectory
/// never entered the ball.
pub fn check_stability_envelope(summary: &OpenSummary) -> BoundCheck {
    BoundCheck::new(
        "stability:ball_invariance",
        summary.max_norm_after_entry,
        summary.envelope.radius,
    )
}

/// `n` random class members.
pub fn sample_functions<R: Rng + ?Sized>(
    n: usize,
    params: &FunctionClassParams,
    rng: &mut R,
) -> Vec<QuadraticFunction> {
    (0..n).map(|_| QuadraticFunction::sample(params, rng)).collect()
}

/// A random instance on the complete unit-weight graph: `n` members of the
/// `[1, kappa]` class in dimension `d`, penalty `rho`, contractive default
/// step size.
pub fn sample_instance<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    kappa: f64,
    rho: f64,
    rng: &mut R,
) -> Result<ProblemInstance> {
    let params = FunctionClassParams::new(1.0, kappa, d)?;
    let functions = sample_functions(n, &params, rng);
    let net = Network::complete(n, 1.0, 1.0)?;
    ProblemInstance::new(functions, net, rho, None)
}
