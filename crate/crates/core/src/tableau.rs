//! The generalized Butcher tableau and its structural predicates.
//!
//! A GARK tableau for an `N`-way additive splitting `y' = f^0(y) + ... +
//! f^{N-1}(y)` carries one coefficient block `A^{q,m}` (shape `s^q x s^m`)
//! for every ordered pair of components and one weight vector `b^q` per
//! component. Block `(q,m)` couples the stages of component `q` to the
//! function values of component `m`. Component indices are zero-based
//! throughout the crate.
//!
//! Abscissae `c^{q,m} = A^{q,m} 1` are always derived from the blocks and are
//! never stored.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{GarkError, Result};
use crate::linalg::{Matrix, Vector};

/// Free-form parameter record attached to a tableau (for instance the free
/// coefficients a registry entry was built with).
pub type Metadata = BTreeMap<String, serde_json::Value>;

/// Default tolerance used by the structural predicates.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GarkTableau {
    name: String,
    stages: Vec<usize>,
    a: Vec<Vec<Matrix>>,
    b: Vec<Vector>,
    metadata: Metadata,
}

impl GarkTableau {
    /// Builds a tableau from its coupling blocks `a[q][m]` and weights `b[q]`.
    ///
    /// Stage counts are taken from the weight vectors; every block must have
    /// the matching shape and all coefficients must be finite.
    pub fn new(name: impl Into<String>, a: Vec<Vec<Matrix>>, b: Vec<Vector>) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(GarkError::Shape("a tableau needs at least one component".into()));
        }
        if a.len() != n {
            return Err(GarkError::Shape(format!(
                "{} block rows for {} weight vectors",
                a.len(),
                n
            )));
        }
        let stages: Vec<usize> = b.iter().map(|v| v.len()).collect();
        if let Some(q) = stages.iter().position(|&s| s == 0) {
            return Err(GarkError::Shape(format!("component {q} has no stages")));
        }
        for (q, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(GarkError::Shape(format!(
                    "block row {q} has {} blocks, expected {n}",
                    row.len()
                )));
            }
            for (m, block) in row.iter().enumerate() {
                if block.shape() != (stages[q], stages[m]) {
                    return Err(GarkError::Shape(format!(
                        "block ({q},{m}) is {}x{}, expected {}x{}",
                        block.nrows(),
                        block.ncols(),
                        stages[q],
                        stages[m]
                    )));
                }
                if block.iter().any(|x| !x.is_finite()) {
                    return Err(GarkError::NonFinite(format!("block ({q},{m})")));
                }
            }
        }
        for (q, w) in b.iter().enumerate() {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(GarkError::NonFinite(format!("weights of component {q}")));
            }
        }
        Ok(Self {
            name: name.into(),
            stages,
            a,
            b,
            metadata: Metadata::new(),
        })
    }

    /// A classical (single-component) Runge-Kutta method.
    pub fn single(name: impl Into<String>, a: Matrix, b: Vector) -> Result<Self> {
        Self::new(name, vec![vec![a]], vec![b])
    }

    /// Classical IMEX embedding: `A^{IE} = A^{EE} = A^E`, `A^{EI} = A^{II} = A^I`.
    ///
    /// Component 0 is the explicit method, component 1 the implicit one.
    pub fn classical_imex(
        name: impl Into<String>,
        ae: &Matrix,
        be: &Vector,
        ai: &Matrix,
        bi: &Vector,
    ) -> Result<Self> {
        check_imex_pair(ae, be, ai, bi)?;
        Self::new(
            name,
            vec![vec![ae.clone(), ai.clone()], vec![ae.clone(), ai.clone()]],
            vec![be.clone(), bi.clone()],
        )
    }

    /// Transposed IMEX embedding: `A^{EI} = A^{EE} = A^E`, `A^{IE} = A^{II} = A^I`.
    pub fn transposed_imex(
        name: impl Into<String>,
        ae: &Matrix,
        be: &Vector,
        ai: &Matrix,
        bi: &Vector,
    ) -> Result<Self> {
        check_imex_pair(ae, be, ai, bi)?;
        Self::new(
            name,
            vec![vec![ae.clone(), ae.clone()], vec![ai.clone(), ai.clone()]],
            vec![be.clone(), bi.clone()],
        )
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn n_components(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_counts(&self) -> &[usize] {
        &self.stages
    }

    pub fn total_stages(&self) -> usize {
        self.stages.iter().sum()
    }

    /// Block `A^{q,m}`. Panics on out-of-range indices.
    pub fn block(&self, q: usize, m: usize) -> &Matrix {
        &self.a[q][m]
    }

    /// Weights `b^q`. Panics on out-of-range indices.
    pub fn weights(&self, q: usize) -> &Vector {
        &self.b[q]
    }

    pub fn blocks(&self) -> &[Vec<Matrix>] {
        &self.a
    }

    pub fn all_weights(&self) -> &[Vector] {
        &self.b
    }

    /// Returns a copy with one coefficient `a^{q,m}_{i,j}` replaced.
    pub fn with_coefficient(&self, q: usize, m: usize, i: usize, j: usize, value: f64) -> Result<Self> {
        self.check_component(q)?;
        self.check_component(m)?;
        if i >= self.stages[q] || j >= self.stages[m] {
            return Err(GarkError::InvalidArgument(format!(
                "entry ({i},{j}) outside block ({q},{m})"
            )));
        }
        let mut a = self.a.clone();
        a[q][m][(i, j)] = value;
        Ok(Self::new(self.name.clone(), a, self.b.clone())?.with_metadata(self.metadata.clone()))
    }

    fn check_component(&self, q: usize) -> Result<()> {
        if q < self.n_components() {
            Ok(())
        } else {
            Err(GarkError::ComponentOutOfRange {
                index: q,
                n: self.n_components(),
            })
        }
    }

    /// Row sums `c^{q,m} = A^{q,m} 1`.
    pub fn abscissae(&self, q: usize, m: usize) -> Result<Vector> {
        self.check_component(q)?;
        self.check_component(m)?;
        Ok(self.c(q, m))
    }

    pub(crate) fn c(&self, q: usize, m: usize) -> Vector {
        let block = &self.a[q][m];
        Vector::from_iterator(block.nrows(), block.row_iter().map(|r| r.iter().sum::<f64>()))
    }

    /// Checks that for every stage of every component all `N` row sums agree.
    pub fn internal_consistency(&self, tol: f64) -> Consistency {
        let n = self.n_components();
        let mut max_discrepancy = 0.0_f64;
        for q in 0..n {
            let sums: Vec<Vector> = (0..n).map(|m| self.c(q, m)).collect();
            for i in 0..self.stages[q] {
                let (lo, hi) = sums
                    .iter()
                    .map(|c| c[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                max_discrepancy = max_discrepancy.max(hi - lo);
            }
        }
        Consistency {
            consistent: max_discrepancy <= tol,
            max_discrepancy,
        }
    }

    /// Stiff accuracy with respect to component `q`: the last row of every
    /// block `A^{q,m}` reproduces `b^m`.
    pub fn is_stiffly_accurate(&self, q: usize, tol: f64) -> Result<bool> {
        self.check_component(q)?;
        let last = self.stages[q] - 1;
        Ok((0..self.n_components()).all(|m| {
            let row = self.a[q][m].row(last);
            row.iter()
                .zip(self.b[m].iter())
                .all(|(a, b)| (a - b).abs() <= tol)
        }))
    }

    /// `A^{q,q}` is lower triangular.
    pub fn is_diagonally_implicit(&self, q: usize) -> bool {
        is_lower_triangular(&self.a[q][q], false)
    }

    /// `A^{q,q}` is strictly lower triangular.
    pub fn is_explicit(&self, q: usize) -> bool {
        is_lower_triangular(&self.a[q][q], true)
    }

    pub fn structure_flags(&self, tol: f64) -> StructureFlags {
        let n = self.n_components();
        StructureFlags {
            internal_consistency: self.internal_consistency(tol),
            stiffly_accurate_wrt: (0..n)
                .filter(|&q| self.is_stiffly_accurate(q, tol).unwrap_or(false))
                .collect(),
            diagonally_implicit: (0..n).map(|q| self.is_diagonally_implicit(q)).collect(),
            explicit: (0..n).map(|q| self.is_explicit(q)).collect(),
            schedulable: crate::integrator::schedule_stages(self).is_ok(),
        }
    }
}

fn is_lower_triangular(m: &Matrix, strict: bool) -> bool {
    let (rows, cols) = m.shape();
    (0..rows).all(|i| {
        (0..cols)
            .filter(|&j| if strict { j >= i } else { j > i })
            .all(|j| m[(i, j)] == 0.0)
    })
}

fn check_imex_pair(ae: &Matrix, be: &Vector, ai: &Matrix, bi: &Vector) -> Result<()> {
    let s = be.len();
    if ae.shape() != (s, s) || ai.shape() != (s, s) || bi.len() != s {
        return Err(GarkError::Shape(format!(
            "IMEX pair needs square blocks of equal size: A^E {}x{}, b^E {}, A^I {}x{}, b^I {}",
            ae.nrows(),
            ae.ncols(),
            be.len(),
            ai.nrows(),
            ai.ncols(),
            bi.len()
        )));
    }
    if !is_lower_triangular(ae, true) {
        return Err(GarkError::Triangularity(
            "explicit matrix must be strictly lower triangular".into(),
        ));
    }
    if !is_lower_triangular(ai, false) {
        return Err(GarkError::Triangularity(
            "implicit matrix must be lower triangular".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub consistent: bool,
    pub max_discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureFlags {
    pub internal_consistency: Consistency,
    pub stiffly_accurate_wrt: Vec<usize>,
    pub diagonally_implicit: Vec<bool>,
    pub explicit: Vec<bool>,
    pub schedulable: bool,
}

impl StructureFlags {
    /// Short tags, e.g. `internally-consistent`, `stiffly-accurate(1)`.
    pub fn tags(&self) -> Vec<String> {
        let mut tags = Vec::new();
        if self.internal_consistency.consistent {
            tags.push("internally-consistent".to_string());
        }
        for q in &self.stiffly_accurate_wrt {
            tags.push(format!("stiffly-accurate({q})"));
        }
        let kinds: Vec<&str> = self
            .explicit
            .iter()
            .zip(&self.diagonally_implicit)
            .map(|(&e, &d)| match (e, d) {
                (true, _) => "ex",
                (false, true) => "dirk",
                _ => "full",
            })
            .collect();
        tags.push(format!("kinds({})", kinds.join(",")));
        if !self.schedulable {
            tags.push("not-schedulable".to_string());
        }
        tags
    }
}
