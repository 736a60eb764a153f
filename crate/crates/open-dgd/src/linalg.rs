//! Small dense helpers shared across the crate: sorted symmetric spectra,
//! SPD solves with iterative refinement, and seeded random orthogonal matrices.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, sorted ascending.
///
/// The input is symmetrized first so that accumulated round-off in callers
/// cannot push the eigensolver off the symmetric path.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Solve `a x = b` for symmetric positive-definite `a` by Cholesky
/// factorization, with iterative refinement until the relative residual
/// drops below 1e-12 (at most three refinement rounds).
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SolveFailed("matrix is not positive definite".into()))?;
    let mut x = chol.solve(b);
    let scale = 1.0 + b.norm();
    for _ in 0..3 {
        let residual = b - a * &x;
        if residual.norm() <= 1e-12 * scale {
            break;
        }
        x += chol.solve(&residual);
    }
    Ok(x)
}

/// A standard normal draw via Box-Muller, so that only a uniform source is
/// needed and streams stay reproducible across platforms.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A vector of independent standard normal entries.
pub fn normal_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| standard_normal(rng))
}

/// Point drawn uniformly from the closed unit ball in `dim` dimensions.
pub fn uniform_in_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    let direction = loop {
        let g = normal_vector(dim, rng);
        let norm = g.norm();
        if norm > 1e-12 {
            break g / norm;
        }
    };
    let radius: f64 = rng.random::<f64>().powf(1.0 / dim as f64);
    direction * radius
}

/// Random orthogonal matrix, Haar-distributed: QR of a Gaussian matrix with
/// the sign of each column fixed so `diag(R) > 0`. Dimensions one and two
/// take cheap direct routes.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    match dim {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::from_element(1, 1, 1.0),
        2 => {
            let theta = (rng.random::<f64>() - 0.5) * std::f64::consts::TAU;
            rotation2(theta)
        }
        _ => {
            let g = DMatrix::from_fn(dim, dim, |_, _| standard_normal(rng));
            let qr = g.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..dim {
                if r[(j, j)] < 0.0 {
                    for i in 0..dim {
                        q[(i, j)] = -q[(i, j)];
                    }
                }
            }
            q
        }
    }
}

/// The 2x2 rotation matrix of angle `theta`.
pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// FNV-1a hash of a byte string, rendered as 16 hex digits. Used to
/// fingerprint instance descriptors in reports; not cryptographic.
pub fn fingerprint(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
