//! Absolute monotonicity of GARK schemes.
//!
//! With the composite coefficients `A`, `b` the scheme is written through
//! `Â = [[A, 0], [b^T, 0]]` and `R̂ = diag(r^q I_{s^q}, 1)`. It is absolutely
//! monotonic at `r` when `Â >= 0` and both
//! `alpha(r) = (I + ÂR̂)^{-1} 1` and `beta(r) = I - (I + ÂR̂)^{-1}` are
//! entrywise non-negative.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GarkError, Result};
use crate::linalg::{lu_checked, ones, Matrix, Vector};
use crate::output::{fmt_float, write_csv};
use crate::stability::{linspace, CompositeTableau};
use crate::tableau::GarkTableau;

/// Default entrywise tolerance.
pub const DEFAULT_AM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HatSystem {
    pub a_hat: Matrix,
    /// Component of each of the first `s` rows.
    stage_components: Vec<usize>,
    n_components: usize,
}

impl HatSystem {
    pub fn new(t: &GarkTableau) -> Self {
        let comp = CompositeTableau::new(t);
        let s = comp.s;
        let mut a_hat = Matrix::zeros(s + 1, s + 1);
        a_hat.view_mut((0, 0), (s, s)).copy_from(&comp.big_a);
        a_hat.view_mut((s, 0), (1, s)).copy_from(&comp.big_b.transpose());
        Self {
            a_hat,
            stage_components: comp.stage_components(),
            n_components: t.n_components(),
        }
    }

    /// Diagonal of `R̂` for the given per-component `r`.
    pub fn r_hat(&self, r: &[f64]) -> Vector {
        let mut d: Vec<f64> = self.stage_components.iter().map(|&q| r[q]).collect();
        d.push(1.0);
        Vector::from_vec(d)
    }

    pub fn a_hat_nonneg(&self, tol: f64) -> bool {
        self.a_hat.iter().all(|&x| x >= -tol)
    }

    fn check_r(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.n_components || r.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(GarkError::InvalidArgument(format!(
                "r must hold {} finite non-negative values, got {r:?}",
                self.n_components
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmEvaluation {
    pub monotone: bool,
    pub alpha: Vector,
    pub beta: Matrix,
    pub alpha_min: f64,
    pub beta_min: f64,
    pub a_hat_nonneg: bool,
    /// Set when `I + ÂR̂` is singular; `alpha` and `beta` are then NaN.
    pub diagnostic: Option<String>,
}

/// Evaluates `alpha(r)`, `beta(r)` and the monotonicity test at one point.
pub fn absolute_monotonicity_at(t: &GarkTableau, r: &[f64], tol: f64) -> Result<AmEvaluation> {
    let hat = HatSystem::new(t);
    hat.check_r(r)?;
    Ok(evaluate(&hat, r, tol))
}

fn evaluate(hat: &HatSystem, r: &[f64], tol: f64) -> AmEvaluation {
    let n = hat.a_hat.nrows();
    let a_hat_nonneg = hat.a_hat_nonneg(tol);
    let scaled = &hat.a_hat * Matrix::from_diagonal(&hat.r_hat(r));
    let inverse = lu_checked(Matrix::identity(n, n) + scaled, "I + ÂR̂").and_then(|lu| {
        lu.try_inverse()
            .ok_or_else(|| GarkError::Singular("I + ÂR̂".into()))
    });
    match inverse {
        Ok(inv) => {
            let alpha = &inv * ones(n);
            let beta = Matrix::identity(n, n) - inv;
            let alpha_min = alpha.min();
            let beta_min = beta.min();
            AmEvaluation {
                monotone: a_hat_nonneg && alpha_min >= -tol && beta_min >= -tol,
                alpha,
                beta,
                alpha_min,
                beta_min,
                a_hat_nonneg,
                diagnostic: None,
            }
        }
        Err(e) => AmEvaluation {
            monotone: false,
            alpha: Vector::from_element(n, f64::NAN),
            beta: Matrix::from_element(n, n, f64::NAN),
            alpha_min: f64::NAN,
            beta_min: f64::NAN,
            a_hat_nonneg,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Tensor grid over `[0, r_max^1] x ... x [0, r_max^N]`, flattened with the
/// last component varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityGrid {
    pub axes: Vec<Vec<f64>>,
    /// Pointwise absolute monotonicity.
    pub flags: Vec<bool>,
    /// Points whose whole box `[0, r]` (at grid resolution) is monotone.
    pub region: Vec<bool>,
    pub alpha_min: Vec<f64>,
    pub beta_min: Vec<f64>,
    pub a_hat_nonneg: bool,
}

impl MonotonicityGrid {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Multi-index of a flattened position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            idx[k] = flat % self.axes[k].len();
            flat /= self.axes[k].len();
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axes[k][i])
            .collect()
    }

    pub fn region_count(&self) -> usize {
        self.region.iter().filter(|&&x| x).count()
    }

    pub fn pointwise_count(&self) -> usize {
        self.flags.iter().filter(|&&x| x).count()
    }

    /// Grid points inside the box-closed region.
    pub fn region_points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).filter(|&k| self.region[k]).map(|k| self.point(k))
    }

    /// Largest in-region value for a single-component grid.
    pub fn endpoint_1d(&self) -> Option<f64> {
        if self.axes.len() != 1 {
            return None;
        }
        self.region_points().map(|p| p[0]).reduce(f64::max)
    }

    /// Columns `r1, ..., rN, am_pointwise, am_region, alpha_min, beta_min`.
    pub fn to_csv(&self) -> Result<String> {
        let mut header: Vec<String> = (1..=self.axes.len()).map(|q| format!("r{q}")).collect();
        header.extend(["am_pointwise", "am_region", "alpha_min", "beta_min"].map(String::from));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(
            &header,
            (0..self.len()).map(|k| {
                let mut row: Vec<String> = self.point(k).into_iter().map(fmt_float).collect();
                row.push(u8::from(self.flags[k]).to_string());
                row.push(u8::from(self.region[k]).to_string());
                row.push(fmt_float(self.alpha_min[k]));
                row.push(fmt_float(self.beta_min[k]));
                row
            }),
        )
    }
}

/// Scans the monotonicity test on a uniform grid and box-closes the result:
/// a point is in the region iff it and every grid point it dominates are
/// pointwise monotone.
pub fn scan_region(t: &GarkTableau, r_max: &[f64], n_points: usize, tol: f64) -> Result<MonotonicityGrid> {
    let n = t.n_components();
    if r_max.len() != n || r_max.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(GarkError::InvalidArgument(format!(
            "r_max must hold {n} positive values, got {r_max:?}"
        )));
    }
    if n_points < 2 {
        return Err(GarkError::InvalidArgument(format!(
            "need at least 2 points per axis, got {n_points}"
        )));
    }
    let hat = HatSystem::new(t);
    let axes: Vec<Vec<f64>> = r_max.iter().map(|&m| linspace(0.0, m, n_points)).collect();
    let total = n_points.pow(n as u32);
    let mut grid = MonotonicityGrid {
        axes,
        flags: Vec::new(),
        region: Vec::new(),
        alpha_min: Vec::new(),
        beta_min: Vec::new(),
        a_hat_nonneg: hat.a_hat_nonneg(tol),
    };
    let evals: Vec<AmEvaluation> = (0..total)
        .into_par_iter()
        .map(|k| evaluate(&hat, &grid.point(k), tol))
        .collect();
    grid.flags = evals.iter().map(|e| e.monotone).collect();
    grid.alpha_min = evals.iter().map(|e| e.alpha_min).collect();
    grid.beta_min = evals.iter().map(|e| e.beta_min).collect();
    // Row-major order visits every dominated neighbour first.
    let strides: Vec<usize> = (0..n).map(|k| n_points.pow((n - 1 - k) as u32)).collect();
    let mut region = vec![false; total];
    for k in 0..total {
        let idx = grid.multi_index(k);
        region[k] = grid.flags[k] && (0..n).all(|d| idx[d] == 0 || region[k - strides[d]]);
    }
    grid.region = region;
    Ok(grid)
}

/// `h_max = min_q r^q rho^q`, where `rho^q` are the forward-Euler
/// monotonicity radii of the components.
pub fn monotone_step_bound(t: &GarkTableau, r: &[f64], rho: &[f64]) -> Result<f64> {
    let n = t.n_components();
    if r.len() != n || rho.len() != n {
        return Err(GarkError::InvalidArgument(format!(
            "expected {n} values of r and rho, got {} and {}",
            r.len(),
            rho.len()
        )));
    }
    if r.iter().any(|&x| !(x >= 0.0)) || rho.iter().any(|&x| !(x > 0.0)) {
        return Err(GarkError::InvalidArgument("need r >= 0 and rho > 0".into()));
    }
    Ok(r.iter()
        .zip(rho)
        .map(|(a, b)| a * b)
        .fold(f64::INFINITY, f64::min))
}
