//! Linear stability function, algebraic stability matrix and conditional
//! stability radii.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{GarkError, Result};
use crate::linalg::{lu_checked, max_abs, min_symmetric_eigenvalue, norm_inf, Matrix, Vector};
use crate::output::{fmt_float, write_csv};
use crate::tableau::GarkTableau;

/// Default PSD tolerance, relative to `1 + ||P||_inf`.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// All blocks of a tableau assembled into one `s x s` matrix with stacked
/// weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeTableau {
    pub big_a: Matrix,
    pub big_b: Vector,
    pub s: usize,
    pub offsets: Vec<usize>,
}

impl CompositeTableau {
    pub fn new(t: &GarkTableau) -> Self {
        let stages = t.stage_counts();
        let mut offsets = Vec::with_capacity(stages.len());
        let mut s = 0;
        for &k in stages {
            offsets.push(s);
            s += k;
        }
        let mut big_a = Matrix::zeros(s, s);
        let mut big_b = Vector::zeros(s);
        for q in 0..stages.len() {
            for m in 0..stages.len() {
                big_a
                    .view_mut((offsets[q], offsets[m]), (stages[q], stages[m]))
                    .copy_from(t.block(q, m));
            }
            big_b.rows_mut(offsets[q], stages[q]).copy_from(t.weights(q));
        }
        Self {
            big_a,
            big_b,
            s,
            offsets,
        }
    }

    /// Component owning each composite stage.
    pub fn stage_components(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.s);
        for (q, &start) in self.offsets.iter().enumerate() {
            let end = self.offsets.get(q + 1).copied().unwrap_or(self.s);
            out.extend(std::iter::repeat_n(q, end - start));
        }
        out
    }
}

/// `R(z) = 1 + b^T Z (I - A Z)^{-1} 1` with `Z` holding `z^q` on the stages of
/// component `q`. A pole is reported as [`GarkError::Singular`].
pub fn stability_function(t: &GarkTableau, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != t.n_components() {
        return Err(GarkError::InvalidArgument(format!(
            "{} arguments for a tableau with {} components",
            z.len(),
            t.n_components()
        )));
    }
    let comp = CompositeTableau::new(t);
    stability_function_composite(&comp, &expand(&comp, z))
}

fn expand(comp: &CompositeTableau, z: &[Complex64]) -> Vec<Complex64> {
    comp.stage_components().into_iter().map(|q| z[q]).collect()
}

fn stability_function_composite(comp: &CompositeTableau, zs: &[Complex64]) -> Result<Complex64> {
    let s = comp.s;
    let m = DMatrix::from_fn(s, s, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - Complex64::new(comp.big_a[(i, j)], 0.0) * zs[j]
    });
    let lu = lu_checked(m, "I - A Z (pole of the stability function)")?;
    let x = lu
        .solve(&nalgebra::DVector::from_element(s, Complex64::new(1.0, 0.0)))
        .ok_or_else(|| GarkError::Singular("I - A Z".into()))?;
    let sum: Complex64 = (0..s).map(|i| comp.big_b[i] * zs[i] * x[i]).sum();
    Ok(Complex64::new(1.0, 0.0) + sum)
}

/// `P` with blocks `P^{m,l} = (A^{l,m})^T B^l + B^m A^{m,l} - b^m (b^l)^T`,
/// where `B^m = diag(b^m)`. The lower blocks are mirrored from the upper
/// ones so the result is exactly symmetric.
pub fn coupling_matrix_p(t: &GarkTableau) -> Matrix {
    let comp = CompositeTableau::new(t);
    let n = t.n_components();
    let stages = t.stage_counts();
    let mut p = Matrix::zeros(comp.s, comp.s);
    for m in 0..n {
        for l in m..n {
            let (bm, bl) = (t.weights(m), t.weights(l));
            let block = Matrix::from_fn(stages[m], stages[l], |i, j| {
                t.block(l, m)[(j, i)] * bl[j] + bm[i] * t.block(m, l)[(i, j)] - bm[i] * bl[j]
            });
            p.view_mut((comp.offsets[m], comp.offsets[l]), (stages[m], stages[l]))
                .copy_from(&block);
            if l != m {
                p.view_mut((comp.offsets[l], comp.offsets[m]), (stages[l], stages[m]))
                    .copy_from(&block.transpose());
            }
        }
    }
    p
}

/// Block `P^{m,l}` of a full `P`.
pub fn p_block(t: &GarkTableau, p: &Matrix, m: usize, l: usize) -> Matrix {
    let comp = CompositeTableau::new(t);
    let stages = t.stage_counts();
    p.view((comp.offsets[m], comp.offsets[l]), (stages[m], stages[l]))
        .into_owned()
}

fn is_psd(p: &Matrix, psd_tol: f64) -> (bool, f64) {
    let lambda = min_symmetric_eigenvalue(p);
    (lambda >= -psd_tol * (1.0 + norm_inf(p)), lambda)
}

fn serialize_matrix<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub tableau: String,
    #[serde(serialize_with = "serialize_matrix")]
    pub p_matrix: Matrix,
    pub min_eigenvalue: f64,
    pub algebraically_stable: bool,
    pub nonneg_weights: bool,
    pub decoupled: bool,
    /// Largest entry magnitude over all off-diagonal blocks of `P`.
    pub max_offdiagonal: f64,
    /// Minimum eigenvalue of each diagonal block `P^{m,m}`.
    pub block_min_eigenvalues: Vec<f64>,
    pub psd_tol: f64,
}

impl StabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn analyze_algebraic_stability(t: &GarkTableau, psd_tol: f64) -> Result<StabilityReport> {
    if !(psd_tol > 0.0) {
        return Err(GarkError::InvalidArgument(format!(
            "psd_tol must be positive, got {psd_tol}"
        )));
    }
    let n = t.n_components();
    let p = coupling_matrix_p(t);
    let nonneg_weights = t.all_weights().iter().all(|b| b.iter().all(|&x| x >= -psd_tol));
    let (psd, min_eigenvalue) = is_psd(&p, psd_tol);
    let mut max_offdiagonal = 0.0_f64;
    for m in 0..n {
        for l in 0..n {
            if m != l {
                max_offdiagonal = max_offdiagonal.max(max_abs(&p_block(t, &p, m, l)));
            }
        }
    }
    let block_min_eigenvalues = (0..n)
        .map(|m| min_symmetric_eigenvalue(&p_block(t, &p, m, m)))
        .collect();
    Ok(StabilityReport {
        tableau: t.name().to_string(),
        p_matrix: p,
        min_eigenvalue,
        algebraically_stable: nonneg_weights && psd,
        nonneg_weights,
        decoupled: max_offdiagonal <= psd_tol,
        max_offdiagonal,
        block_min_eigenvalues,
        psd_tol,
    })
}

/// Result of the uniform-multiplier search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusReport {
    /// Smallest uniform multiplier found (upper end of the final bracket).
    pub rho: f64,
    /// Components that receive the multiplier.
    pub mask: Vec<bool>,
    /// `r^m = rho` on masked components, `0` elsewhere.
    pub radii: Vec<f64>,
    pub min_eigenvalue: f64,
}

fn shifted(t: &GarkTableau, p: &Matrix, r: &[f64]) -> Matrix {
    let comp = CompositeTableau::new(t);
    let mut out = p.clone();
    for (q, &rq) in r.iter().enumerate() {
        for (i, &b) in t.weights(q).iter().enumerate() {
            let k = comp.offsets[q] + i;
            out[(k, k)] += rq * b;
        }
    }
    out
}

fn check_nonneg_weights(t: &GarkTableau, psd_tol: f64) -> Result<()> {
    for (q, b) in t.all_weights().iter().enumerate() {
        if b.iter().any(|&x| x < -psd_tol) {
            return Err(GarkError::InvalidArgument(format!(
                "weights of component {q} have a negative entry; conditional stability needs b >= 0"
            )));
        }
    }
    Ok(())
}

/// Checks whether `P + diag(r^m B^m)` is positive semidefinite.
pub fn verify_radii(t: &GarkTableau, r: &[f64], psd_tol: f64) -> Result<bool> {
    if r.len() != t.n_components() || r.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(GarkError::InvalidArgument(format!(
            "expected {} finite non-negative radii, got {r:?}",
            t.n_components()
        )));
    }
    check_nonneg_weights(t, psd_tol)?;
    Ok(is_psd(&shifted(t, &coupling_matrix_p(t), r), psd_tol).0)
}

/// Bisection for the smallest `rho` in `[0, search_max]` such that
/// `P + rho diag(mask_m B^m)` is positive semidefinite. The mask selects
/// the components whose diagonal block `P^{m,m}` is not semidefinite (all
/// components if every diagonal block is). This is a conservative uniform
/// search, not an optimization over independent radii.
pub fn conditional_stability_radii(t: &GarkTableau, search_max: f64, psd_tol: f64) -> Result<RadiusReport> {
    if !(search_max > 0.0 && search_max.is_finite()) {
        return Err(GarkError::InvalidArgument(format!(
            "search_max must be positive, got {search_max}"
        )));
    }
    check_nonneg_weights(t, psd_tol)?;
    let n = t.n_components();
    let p = coupling_matrix_p(t);
    let (psd, lambda0) = is_psd(&p, psd_tol);
    if psd {
        return Ok(RadiusReport {
            rho: 0.0,
            mask: vec![false; n],
            radii: vec![0.0; n],
            min_eigenvalue: lambda0,
        });
    }
    let mut mask: Vec<bool> = (0..n)
        .map(|m| !is_psd(&p_block(t, &p, m, m), psd_tol).0)
        .collect();
    if !mask.iter().any(|&x| x) {
        mask = vec![true; n];
    }
    let radii_for = |rho: f64| -> Vec<f64> { mask.iter().map(|&on| if on { rho } else { 0.0 }).collect() };
    let test = |rho: f64| is_psd(&shifted(t, &p, &radii_for(rho)), psd_tol);
    let (ok, lambda_max) = test(search_max);
    if !ok {
        return Err(GarkError::RadiusNotFound {
            search_max,
            min_eigenvalue: lambda_max,
        });
    }
    let (mut lo, mut hi, mut lambda_hi) = (0.0, search_max, lambda_max);
    while hi - lo > 1e-12 * search_max {
        let mid = 0.5 * (lo + hi);
        let (ok, lambda) = test(mid);
        if ok {
            hi = mid;
            lambda_hi = lambda;
        } else {
            lo = mid;
        }
    }
    Ok(RadiusReport {
        rho: hi,
        radii: radii_for(hi),
        mask,
        min_eigenvalue: lambda_hi,
    })
}

/// `h_max = min_m (-2 mu^m / r^m)`; components with `r^m = 0` impose no
/// bound.
pub fn step_bound(radii: &[f64], mu: &[f64]) -> Result<f64> {
    if radii.len() != mu.len() {
        return Err(GarkError::InvalidArgument(format!(
            "{} radii for {} coercivity constants",
            radii.len(),
            mu.len()
        )));
    }
    if mu.iter().any(|&m| !(m < 0.0)) {
        return Err(GarkError::InvalidArgument(format!(
            "coercivity constants must be negative, got {mu:?}"
        )));
    }
    Ok(radii
        .iter()
        .zip(mu)
        .filter(|(&r, _)| r > 0.0)
        .map(|(&r, &m)| -2.0 * m / r)
        .fold(f64::INFINITY, f64::min))
}

/// Evenly spaced samples of a complex rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexAxis {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

impl ComplexAxis {
    pub fn points(&self) -> Vec<Complex64> {
        let re = linspace(self.re.0, self.re.1, self.re.2);
        let im = linspace(self.im.0, self.im.1, self.im.2);
        re.iter()
            .flat_map(|&x| im.iter().map(move |&y| Complex64::new(x, y)))
            .collect()
    }
}

impl std::str::FromStr for ComplexAxis {
    type Err = GarkError;

    /// `re=lo:hi:n,im=lo:hi:n`; a missing part defaults to the single value 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| GarkError::InvalidArgument(format!("grid spec '{s}': {msg}"));
        let mut re = None;
        let mut im = None;
        for part in s.split(',') {
            let (key, range) = part.split_once('=').ok_or_else(|| bad("expected key=lo:hi:n"))?;
            let fields: Vec<&str> = range.split(':').collect();
            if fields.len() != 3 {
                return Err(bad("expected lo:hi:n"));
            }
            let lo: f64 = fields[0].trim().parse().map_err(|_| bad("invalid lower bound"))?;
            let hi: f64 = fields[1].trim().parse().map_err(|_| bad("invalid upper bound"))?;
            let n: usize = fields[2].trim().parse().map_err(|_| bad("invalid count"))?;
            if !lo.is_finite() || !hi.is_finite() || n == 0 || hi < lo {
                return Err(bad("need finite lo <= hi and n >= 1"));
            }
            match key.trim() {
                "re" => re = Some((lo, hi, n)),
                "im" => im = Some((lo, hi, n)),
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        Ok(Self {
            re: re.unwrap_or((0.0, 0.0, 1)),
            im: im.unwrap_or((0.0, 0.0, 1)),
        })
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// How grid arguments are assigned to the components.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// The same `z` for every component.
    Shared(ComplexAxis),
    /// Tensor product of one axis per component.
    PerComponent(Vec<ComplexAxis>),
}

/// `|R|` sampled on a grid; poles are stored as `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityGrid {
    pub points: Vec<Vec<Complex64>>,
    pub abs_r: Vec<f64>,
}

pub fn stability_grid(t: &GarkTableau, spec: &GridSpec) -> Result<StabilityGrid> {
    let n = t.n_components();
    let points: Vec<Vec<Complex64>> = match spec {
        GridSpec::Shared(axis) => axis.points().into_iter().map(|z| vec![z; n]).collect(),
        GridSpec::PerComponent(axes) => {
            if axes.len() != n {
                return Err(GarkError::InvalidArgument(format!(
                    "{} grid axes for {n} components",
                    axes.len()
                )));
            }
            axes.iter().fold(vec![Vec::new()], |acc, axis| {
                let pts = axis.points();
                acc.iter()
                    .flat_map(|prefix| {
                        pts.iter().map(move |&z| {
                            let mut v = prefix.clone();
                            v.push(z);
                            v
                        })
                    })
                    .collect()
            })
        }
    };
    let comp = CompositeTableau::new(t);
    let abs_r = points
        .par_iter()
        .map(|z| match stability_function_composite(&comp, &expand(&comp, z)) {
            Ok(r) => Ok(r.norm()),
            Err(GarkError::Singular(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityGrid { points, abs_r })
}

impl StabilityGrid {
    /// Columns `re_z1, im_z1, ..., re_zN, im_zN, abs_R`.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.points.first().map_or(0, Vec::len);
        let mut header = Vec::new();
        for q in 1..=n {
            header.push(format!("re_z{q}"));
            header.push(format!("im_z{q}"));
        }
        header.push("abs_R".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(
            &header,
            self.points.iter().zip(&self.abs_r).map(|(z, &r)| {
                let mut row: Vec<String> = z
                    .iter()
                    .flat_map(|z| [fmt_float(z.re), fmt_float(z.im)])
                    .collect();
                row.push(fmt_float(r));
                row
            }),
        )
    }
}
