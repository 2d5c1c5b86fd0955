//! Dense linear-algebra helpers shared by the analysis modules and the
//! integrator.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, LU};

use crate::error::{GarkError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Pivots smaller than this multiple of the largest matrix entry are treated
/// as zero.
pub const SINGULAR_RTOL: f64 = 1e-13;

/// LU factorization with partial pivoting that rejects numerically singular
/// matrices.
pub fn lu_checked<T>(m: DMatrix<T>, what: &str) -> Result<LU<T, Dyn, Dyn>>
where
    T: ComplexField<RealField = f64>,
{
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.clone().modulus()));
    if !scale.is_finite() {
        return Err(GarkError::NonFinite(what.to_string()));
    }
    let lu = m.lu();
    let u = lu.u();
    let min_pivot = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, x| acc.min(x.clone().modulus()));
    if scale == 0.0 || min_pivot < SINGULAR_RTOL * scale {
        return Err(GarkError::Singular(format!(
            "{what} (min pivot {min_pivot:e}, scale {scale:e})"
        )));
    }
    Ok(lu)
}

pub fn solve_checked<T>(m: DMatrix<T>, rhs: &DVector<T>, what: &str) -> Result<DVector<T>>
where
    T: ComplexField<RealField = f64>,
{
    let lu = lu_checked(m, what)?;
    lu.solve(rhs).ok_or_else(|| GarkError::Singular(what.to_string()))
}

/// Componentwise power of a vector.
pub fn powi(v: &Vector, k: i32) -> Vector {
    v.map(|x| x.powi(k))
}

pub fn ones(n: usize) -> Vector {
    Vector::from_element(n, 1.0)
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
