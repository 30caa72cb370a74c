//! Small complex linear-algebra helpers shared by the radar and link models.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Plain (non-conjugating) bilinear product `aᵀ·b`.
pub fn dot_t(a: &CVector, b: &CVector) -> C64 {
    a.dot(b)
}

/// Hermitian inner product `aᴴ·b`.
pub fn dot_h(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

pub fn norm_sqr(a: &CVector) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Outer product `a·bᴴ`.
pub fn outer_h(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite `M = L·Lᴴ`.
///
/// Only the lower triangle of `M` is read. Fails when a pivot is not strictly
/// positive, which nalgebra's complex factorisation does not check.
pub fn hpd_cholesky(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::invalid("m", "matrix must be square"));
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L·Lᴴ·z = b` given the lower factor from [`hpd_cholesky`].
pub fn cholesky_solve(l: &CMatrix, b: &CVector) -> CVector {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Solves `M·z = b` for Hermitian positive-definite `M`.
pub fn hpd_solve(m: &CMatrix, b: &CVector) -> Result<CVector> {
    Ok(cholesky_solve(&hpd_cholesky(m)?, b))
}

/// Draws one standard circularly-symmetric complex Gaussian, CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Maximum absolute deviation of `m` from its own conjugate transpose.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
