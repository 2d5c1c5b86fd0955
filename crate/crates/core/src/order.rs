//! Order conditions through order four in elementwise form, the IMEX
//! coupling subsets, and the stiff Prothero-Robinson / semi-linear
//! conditions.
//!
//! All vector products are componentwise: `c^2` means `c .* c`.

use std::fmt;

use serde::Serialize;

use crate::error::{GarkError, Result};
use crate::linalg::{lu_checked, ones, powi, Matrix, Vector};
use crate::output::{fmt_float, write_csv};
use crate::tableau::{GarkTableau, STRUCTURE_TOL};

/// Default absolute tolerance for certifying a condition.
pub const DEFAULT_TOL: f64 = 1e-10;

const E: usize = 0;
const I: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConditionId {
    O1,
    O2,
    O3a,
    O3b,
    O4a,
    O4b,
    O4c,
    O4d,
    /// Prothero-Robinson condition, time carried by the explicit component.
    #[serde(rename = "PR")]
    Pr,
    /// Prothero-Robinson condition, time carried by the implicit component.
    #[serde(rename = "PR-it")]
    PrImplicitTime,
    #[serde(rename = "SL-a")]
    SlA,
    #[serde(rename = "SL-b")]
    SlB,
    /// Order-4 IMEX coupling under internal consistency.
    #[serde(rename = "C4")]
    C4,
    /// Order-4 IMEX coupling with equal weights and abscissae.
    #[serde(rename = "C4-reduced")]
    C4Reduced,
    /// Order-4 IMEX coupling with `A^{IE} = A^{EI}`.
    #[serde(rename = "C4-equal")]
    C4Equal,
    /// Classical conditions a coupling method must satisfy on its own.
    #[serde(rename = "C4-own")]
    C4Own,
}

impl ConditionId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::O1 => "O1",
            ConditionId::O2 => "O2",
            ConditionId::O3a => "O3a",
            ConditionId::O3b => "O3b",
            ConditionId::O4a => "O4a",
            ConditionId::O4b => "O4b",
            ConditionId::O4c => "O4c",
            ConditionId::O4d => "O4d",
            ConditionId::Pr => "PR",
            ConditionId::PrImplicitTime => "PR-it",
            ConditionId::SlA => "SL-a",
            ConditionId::SlB => "SL-b",
            ConditionId::C4 => "C4",
            ConditionId::C4Reduced => "C4-reduced",
            ConditionId::C4Equal => "C4-equal",
            ConditionId::C4Own => "C4-own",
        }
    }

    /// Families indexed by `k` rather than by colors.
    pub fn is_stiff_family(self) -> bool {
        matches!(
            self,
            ConditionId::Pr | ConditionId::PrImplicitTime | ConditionId::SlA | ConditionId::SlB
        )
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResidual {
    pub id: ConditionId,
    /// Color multi-index; `[k]` for the PR and SL families.
    pub index: Vec<usize>,
    pub order: usize,
    pub lhs: f64,
    pub target: f64,
    pub residual: f64,
    /// Human-readable form for conditions not identified by colors alone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ConditionResidual {
    fn new(id: ConditionId, index: Vec<usize>, order: usize, lhs: f64, target: f64) -> Self {
        Self {
            id,
            index,
            order,
            lhs,
            target,
            residual: (lhs - target).abs(),
            label: None,
        }
    }

    fn labeled(mut self, label: String) -> Self {
        self.label = Some(label);
        self
    }

    /// `(0,1,1)` for colors, `k=2` for the stiff families.
    pub fn index_text(&self) -> String {
        if self.id.is_stiff_family() {
            format!("k={}", self.index[0])
        } else {
            let parts: Vec<String> = self.index.iter().map(|i| i.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub residuals: Vec<ConditionResidual>,
    pub certified_order: usize,
    pub tol: f64,
    pub max_order: usize,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn new(residuals: Vec<ConditionResidual>, max_order: usize, tol: f64, notes: Vec<String>) -> Self {
        let certified_order = certify(&residuals, max_order, tol);
        Self {
            residuals,
            certified_order,
            tol,
            max_order,
            notes,
        }
    }

    /// Recomputes the certified order under a different tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.certified_order = certify(&self.residuals, self.max_order, tol);
        self
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |acc, r| acc.max(r.residual))
    }

    pub fn count(&self, id: ConditionId) -> usize {
        self.residuals.iter().filter(|r| r.id == id).count()
    }

    pub fn find(&self, id: ConditionId, index: &[usize]) -> Option<&ConditionResidual> {
        self.residuals.iter().find(|r| r.id == id && r.index == index)
    }

    pub fn failing(&self) -> impl Iterator<Item = &ConditionResidual> {
        self.residuals.iter().filter(move |r| r.residual > self.tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `condition_id, color_index, lhs, target, residual`.
    pub fn to_csv(&self) -> Result<String> {
        write_csv(
            &["condition_id", "color_index", "lhs", "target", "residual"],
            self.residuals.iter().map(|r| {
                vec![
                    r.id.to_string(),
                    r.index_text(),
                    fmt_float(r.lhs),
                    fmt_float(r.target),
                    fmt_float(r.residual),
                ]
            }),
        )
    }
}

fn certify(residuals: &[ConditionResidual], max_order: usize, tol: f64) -> usize {
    let mut certified = 0;
    for p in 1..=max_order {
        if residuals
            .iter()
            .filter(|r| r.order == p)
            .all(|r| r.residual <= tol)
        {
            certified = p;
        } else {
            break;
        }
    }
    certified
}

/// Abscissae `c^{q,m}` for all pairs.
struct Abscissae(Vec<Vec<Vector>>);

impl Abscissae {
    fn of(t: &GarkTableau) -> Self {
        let n = t.n_components();
        Self((0..n).map(|q| (0..n).map(|m| t.c(q, m)).collect()).collect())
    }

    fn get(&self, q: usize, m: usize) -> &Vector {
        &self.0[q][m]
    }
}

fn check_order(max_order: usize, allowed: std::ops::RangeInclusive<usize>) -> Result<()> {
    if allowed.contains(&max_order) {
        Ok(())
    } else {
        Err(GarkError::InvalidArgument(format!(
            "order must be in {}..={}, got {max_order}",
            allowed.start(),
            allowed.end()
        )))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(GarkError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

fn hadamard(a: &Vector, b: &Vector) -> Vector {
    a.component_mul(b)
}

// Individual families. Arguments are colors in the order of the multi-index.

fn o1(t: &GarkTableau, s: usize) -> f64 {
    t.weights(s).sum()
}

fn o2(t: &GarkTableau, c: &Abscissae, s: usize, v: usize) -> f64 {
    t.weights(s).dot(c.get(s, v))
}

fn o3a(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, m: usize) -> f64 {
    t.weights(s).dot(&hadamard(c.get(s, v), c.get(s, m)))
}

fn o3b(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, m: usize) -> f64 {
    t.weights(s).dot(&(t.block(s, v) * c.get(v, m)))
}

fn o4a(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, l: usize, m: usize) -> f64 {
    t.weights(s)
        .dot(&hadamard(&hadamard(c.get(s, v), c.get(s, l)), c.get(s, m)))
}

fn o4b(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, l: usize, m: usize) -> f64 {
    t.weights(s)
        .dot(&hadamard(&(t.block(s, v) * c.get(v, l)), c.get(s, m)))
}

fn o4c(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, l: usize, m: usize) -> f64 {
    t.weights(s)
        .dot(&(t.block(s, v) * hadamard(c.get(v, l), c.get(v, m))))
}

fn o4d(t: &GarkTableau, c: &Abscissae, s: usize, v: usize, l: usize, m: usize) -> f64 {
    t.weights(s).dot(&(t.block(s, v) * (t.block(v, l) * c.get(l, m))))
}

/// Evaluates every order condition up to `max_order` over all color
/// multi-indices: `N`, `N^2`, `2N^3` and `4N^4` conditions at orders 1-4.
pub fn assess_order(t: &GarkTableau, max_order: usize, tol: f64) -> Result<ConditionReport> {
    check_order(max_order, 1..=4)?;
    check_tol(tol)?;
    let n = t.n_components();
    let c = Abscissae::of(t);
    let mut out = Vec::new();
    for s in 0..n {
        out.push(ConditionResidual::new(ConditionId::O1, vec![s], 1, o1(t, s), 1.0));
    }
    if max_order >= 2 {
        for s in 0..n {
            for v in 0..n {
                out.push(ConditionResidual::new(
                    ConditionId::O2,
                    vec![s, v],
                    2,
                    o2(t, &c, s, v),
                    0.5,
                ));
            }
        }
    }
    if max_order >= 3 {
        let triples = || (0..n).flat_map(move |s| (0..n).flat_map(move |v| (0..n).map(move |m| (s, v, m))));
        for (s, v, m) in triples() {
            out.push(ConditionResidual::new(
                ConditionId::O3a,
                vec![s, v, m],
                3,
                o3a(t, &c, s, v, m),
                1.0 / 3.0,
            ));
        }
        for (s, v, m) in triples() {
            out.push(ConditionResidual::new(
                ConditionId::O3b,
                vec![s, v, m],
                3,
                o3b(t, &c, s, v, m),
                1.0 / 6.0,
            ));
        }
    }
    if max_order >= 4 {
        let quads: Vec<[usize; 4]> = (0..n)
            .flat_map(|s| {
                (0..n).flat_map(move |v| (0..n).flat_map(move |l| (0..n).map(move |m| [s, v, l, m])))
            })
            .collect();
        type Family = fn(&GarkTableau, &Abscissae, usize, usize, usize, usize) -> f64;
        let families: [(ConditionId, Family, f64); 4] = [
            (ConditionId::O4a, o4a, 0.25),
            (ConditionId::O4b, o4b, 0.125),
            (ConditionId::O4c, o4c, 1.0 / 12.0),
            (ConditionId::O4d, o4d, 1.0 / 24.0),
        ];
        for (id, f, target) in families {
            for &[s, v, l, m] in &quads {
                out.push(ConditionResidual::new(
                    id,
                    vec![s, v, l, m],
                    4,
                    f(t, &c, s, v, l, m),
                    target,
                ));
            }
        }
    }
    Ok(ConditionReport::new(out, max_order, tol, Vec::new()))
}

/// Which order-4 coupling list to apply; each assumes more structure than the
/// previous one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order4Variant {
    /// 2 compatibility and 16 coupling conditions under internal consistency.
    #[default]
    General,
    /// Equal weights and abscissae: 12 coupling conditions plus fourth order
    /// of both coupling methods.
    Reduced,
    /// Additionally `A^{IE} = A^{EI}`: 6 coupling conditions plus fourth order
    /// of the common coupling method.
    EqualCoupling,
}

impl std::str::FromStr for Order4Variant {
    type Err = GarkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Order4Variant::General),
            "reduced" => Ok(Order4Variant::Reduced),
            "equal-coupling" => Ok(Order4Variant::EqualCoupling),
            _ => Err(GarkError::InvalidArgument(format!(
                "unknown order-4 variant '{s}' (expected general, reduced or equal-coupling)"
            ))),
        }
    }
}

const MIXED_TRIPLES: [[usize; 3]; 6] = [[E, E, I], [E, I, E], [E, I, I], [I, E, E], [I, E, I], [I, I, E]];

fn color(q: usize) -> &'static str {
    if q == E {
        "E"
    } else {
        "I"
    }
}

fn block_name(q: usize, m: usize) -> String {
    format!("A^{}{}", color(q), color(m))
}

/// Evaluates the IMEX coupling conditions up to `order` (cumulative: the
/// order-2 and order-3 couplings are included at order 4). Component 0 is the
/// explicit one. The order-2 and order-3 couplings are the mixed-color
/// members of the general families and carry the same ids and indices.
pub fn assess_imex_coupling(
    t: &GarkTableau,
    order: usize,
    variant: Order4Variant,
) -> Result<ConditionReport> {
    if t.n_components() != 2 {
        return Err(GarkError::NotTwoComponent(t.n_components()));
    }
    check_order(order, 2..=4)?;
    let c = Abscissae::of(t);
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for (s, v) in [(E, I), (I, E)] {
        out.push(ConditionResidual::new(
            ConditionId::O2,
            vec![s, v],
            2,
            o2(t, &c, s, v),
            0.5,
        ));
    }
    if order >= 3 {
        for [s, v, m] in MIXED_TRIPLES {
            out.push(ConditionResidual::new(
                ConditionId::O3a,
                vec![s, v, m],
                3,
                o3a(t, &c, s, v, m),
                1.0 / 3.0,
            ));
            out.push(ConditionResidual::new(
                ConditionId::O3b,
                vec![s, v, m],
                3,
                o3b(t, &c, s, v, m),
                1.0 / 6.0,
            ));
        }
    }
    if order == 4 {
        if t.stage_counts()[E] != t.stage_counts()[I] {
            return Err(GarkError::Shape(format!(
                "order-4 IMEX coupling lists need equal stage counts, got {:?}",
                t.stage_counts()
            )));
        }
        let consistency = t.internal_consistency(STRUCTURE_TOL);
        if !consistency.consistent {
            notes.push(format!(
                "internal consistency does not hold (max row-sum discrepancy {:e}); order-4 lists assume it",
                consistency.max_discrepancy
            ));
        }
        match variant {
            Order4Variant::General => order4_general(t, &mut out),
            Order4Variant::Reduced => order4_reduced(t, &mut out, &mut notes),
            Order4Variant::EqualCoupling => order4_equal(t, &mut out, &mut notes),
        }
    }
    Ok(ConditionReport::new(out, order, DEFAULT_TOL, notes))
}

fn order4_general(t: &GarkTableau, out: &mut Vec<ConditionResidual>) {
    // c^E = c^{EE}, c^I = c^{II}.
    let cc = [t.c(E, E), t.c(I, I)];
    let chain = |[s, v, l, m]: [usize; 4]| {
        let lhs = t.weights(s).dot(&(t.block(s, v) * (t.block(l, m) * &cc[l])));
        ConditionResidual::new(ConditionId::C4, vec![s, v, l, m], 4, lhs, 1.0 / 24.0).labeled(format!(
            "b^{}.{}.{}.c^{}",
            color(s),
            block_name(s, v),
            block_name(l, m),
            color(l)
        ))
    };
    let bush = |s: usize, v: usize| {
        let lhs = hadamard(t.weights(s), &cc[s]).dot(&(t.block(s, v) * &cc[v]));
        ConditionResidual::new(ConditionId::C4, vec![s, v], 4, lhs, 0.125).labeled(format!(
            "(b^{}c^{}).{}.c^{}",
            color(s),
            color(s),
            block_name(s, v),
            color(v)
        ))
    };
    let square = |s: usize, v: usize| {
        let lhs = t.weights(s).dot(&(t.block(s, v) * hadamard(&cc[v], &cc[v])));
        ConditionResidual::new(ConditionId::C4, vec![s, v], 4, lhs, 1.0 / 12.0).labeled(format!(
            "b^{}.{}.(c^{}c^{})",
            color(s),
            block_name(s, v),
            color(v),
            color(v)
        ))
    };
    // Compatibility of the two base methods, then the coupling terms.
    out.push(chain([E, E, I, I]));
    out.push(chain([I, I, E, E]));
    out.push(chain([E, E, I, E]));
    out.push(chain([E, E, E, I]));
    out.push(bush(E, I));
    out.push(square(E, I));
    for idx in [[E, I, E, E], [E, I, I, E], [E, I, E, I], [E, I, I, I]] {
        out.push(chain(idx));
    }
    out.push(bush(I, E));
    out.push(square(I, E));
    for idx in [
        [I, E, E, E],
        [I, E, I, E],
        [I, E, E, I],
        [I, E, I, I],
        [I, I, I, E],
        [I, I, E, I],
    ] {
        out.push(chain(idx));
    }
}

/// The eight classical conditions through order four for `(A, b)` with
/// `c = A 1`.
fn classical_conditions(a: &Matrix, b: &Vector) -> Vec<(usize, &'static str, f64, f64)> {
    let c = a * ones(a.ncols());
    let c2 = hadamard(&c, &c);
    let ac = a * &c;
    vec![
        (1, "b.1", b.sum(), 1.0),
        (2, "b.c", b.dot(&c), 0.5),
        (3, "b.c^2", b.dot(&c2), 1.0 / 3.0),
        (3, "b.A.c", b.dot(&ac), 1.0 / 6.0),
        (4, "b.c^3", b.dot(&hadamard(&c2, &c)), 0.25),
        (4, "(bc).A.c", hadamard(b, &c).dot(&ac), 0.125),
        (4, "b.A.c^2", b.dot(&(a * &c2)), 1.0 / 12.0),
        (4, "b.A.A.c", b.dot(&(a * &ac)), 1.0 / 24.0),
    ]
}

fn own_conditions(name: &str, a: &Matrix, b: &Vector, item: usize, out: &mut Vec<ConditionResidual>) {
    for (j, (order, text, lhs, target)) in classical_conditions(a, b).into_iter().enumerate() {
        out.push(
            ConditionResidual::new(ConditionId::C4Own, vec![item, j], order, lhs, target)
                .labeled(format!("{name}: {text}")),
        );
    }
}

fn reduced_chain(
    t: &GarkTableau,
    id: ConditionId,
    item: usize,
    x: (&str, &Matrix),
    y: (&str, &Matrix),
) -> ConditionResidual {
    let b = t.weights(E);
    let c = t.c(E, E);
    let lhs = b.dot(&(x.1 * (y.1 * c)));
    ConditionResidual::new(id, vec![item], 4, lhs, 1.0 / 24.0).labeled(format!("b.{}.{}.c", x.0, y.0))
}

fn note_equal_weights(t: &GarkTableau, notes: &mut Vec<String>) {
    let db = (t.weights(E) - t.weights(I)).amax();
    let dc = (t.c(E, E) - t.c(I, I)).amax();
    if db > STRUCTURE_TOL || dc > STRUCTURE_TOL {
        notes.push(format!(
            "equal weights/abscissae assumption does not hold (|b^E-b^I| = {db:e}, |c^E-c^I| = {dc:e}); b^E and c^E are used"
        ));
    }
}

fn order4_reduced(t: &GarkTableau, out: &mut Vec<ConditionResidual>, notes: &mut Vec<String>) {
    note_equal_weights(t, notes);
    let b = t.weights(E);
    let named = |q: usize, m: usize| (block_name(q, m), t.block(q, m));
    let pairs = [
        ((E, E), (I, I)),
        ((E, E), (I, E)),
        ((E, E), (E, I)),
        ((I, I), (I, E)),
        ((I, I), (E, I)),
        ((I, I), (E, E)),
        ((E, I), (E, E)),
        ((E, I), (I, E)),
        ((E, I), (I, I)),
        ((I, E), (E, E)),
        ((I, E), (E, I)),
        ((I, E), (I, I)),
    ];
    for (item, (x, y)) in pairs.into_iter().enumerate() {
        let (xn, xa) = named(x.0, x.1);
        let (yn, ya) = named(y.0, y.1);
        out.push(reduced_chain(
            t,
            ConditionId::C4Reduced,
            item,
            (&xn, xa),
            (&yn, ya),
        ));
    }
    own_conditions("A^IE", t.block(I, E), b, 0, out);
    own_conditions("A^EI", t.block(E, I), b, 1, out);
}

fn order4_equal(t: &GarkTableau, out: &mut Vec<ConditionResidual>, notes: &mut Vec<String>) {
    note_equal_weights(t, notes);
    let d = (t.block(I, E) - t.block(E, I)).amax();
    if d > STRUCTURE_TOL {
        notes.push(format!(
            "A^IE and A^EI differ (max {d:e}); A^IE is used as the coupling matrix"
        ));
    }
    let b = t.weights(E);
    let ee = ("A^EE", t.block(E, E));
    let ii = ("A^II", t.block(I, I));
    let cpl = ("A^cpl", t.block(I, E));
    let pairs = [(ee, ii), (ee, cpl), (ii, ee), (ii, cpl), (cpl, ee), (cpl, ii)];
    for (item, (x, y)) in pairs.into_iter().enumerate() {
        out.push(reduced_chain(t, ConditionId::C4Equal, item, x, y));
    }
    own_conditions("A^cpl", cpl.1, b, 0, out);
}

/// `w^T = b^{I T} (A^{II})^{-1}`.
fn implicit_weights(t: &GarkTableau) -> Result<Vector> {
    if t.n_components() != 2 {
        return Err(GarkError::NotTwoComponent(t.n_components()));
    }
    let lu = lu_checked(t.block(I, I).transpose(), "implicit block A^II")?;
    lu.solve(t.weights(I))
        .ok_or_else(|| GarkError::Singular("implicit block A^II".into()))
}

/// Prothero-Robinson conditions for `k = 1..=q`, both with time in the
/// explicit component (`PR`) and in the implicit component (`PR-it`).
pub fn check_pr_conditions(t: &GarkTableau, q: usize) -> Result<ConditionReport> {
    if q == 0 {
        return Err(GarkError::InvalidArgument("q must be at least 1".into()));
    }
    let w = implicit_weights(t)?;
    let wa = t.block(I, E).tr_mul(&w);
    let (c_ee, c_ie, c_ei, c_ii) = (t.c(E, E), t.c(I, E), t.c(E, I), t.c(I, I));
    let mut out = Vec::new();
    for k in 1..=q {
        let kf = k as f64;
        let p = k as i32;
        out.push(ConditionResidual::new(
            ConditionId::Pr,
            vec![k],
            k,
            kf * wa.dot(&powi(&c_ee, p - 1)),
            w.dot(&powi(&c_ie, p)),
        ));
    }
    for k in 1..=q {
        let kf = k as f64;
        let p = k as i32;
        out.push(ConditionResidual::new(
            ConditionId::PrImplicitTime,
            vec![k],
            k,
            kf * wa.dot(&powi(&c_ei, p - 1)),
            w.dot(&powi(&c_ii, p)),
        ));
    }
    Ok(ConditionReport::new(out, q, DEFAULT_TOL, Vec::new()))
}

/// Semi-linear conditions for `k = 1..=q`. Internal consistency is a
/// hypothesis of the corresponding convergence result; it is reported in
/// the notes, not enforced.
pub fn check_sl_conditions(t: &GarkTableau, q: usize) -> Result<ConditionReport> {
    if q == 0 {
        return Err(GarkError::InvalidArgument("q must be at least 1".into()));
    }
    let w = implicit_weights(t)?;
    let wa = t.block(I, E).tr_mul(&w);
    let (c_e, c_i) = (t.c(E, E), t.c(I, I));
    let mut out = Vec::new();
    for k in 1..=q {
        out.push(ConditionResidual::new(
            ConditionId::SlA,
            vec![k],
            k,
            w.dot(&powi(&c_i, k as i32)),
            1.0,
        ));
    }
    for k in 1..=q {
        out.push(ConditionResidual::new(
            ConditionId::SlB,
            vec![k],
            k,
            wa.dot(&powi(&c_e, k as i32 - 1)),
            1.0 / k as f64,
        ));
    }
    let consistency = t.internal_consistency(STRUCTURE_TOL);
    let note = if consistency.consistent {
        "internally consistent".to_string()
    } else {
        format!(
            "not internally consistent (max row-sum discrepancy {:e})",
            consistency.max_discrepancy
        )
    };
    Ok(ConditionReport::new(out, q, DEFAULT_TOL, vec![note]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn forward_euler_is_first_order() {
        let r = assess_order(&registry::get("euler").unwrap(), 4, DEFAULT_TOL).unwrap();
        assert_eq!(r.certified_order, 1);
        assert_eq!(r.find(ConditionId::O2, &[0, 0]).unwrap().residual, 0.5);
    }

    #[test]
    fn condition_counts() {
        for name in ["rk4", "imex-sd2"] {
            let t = registry::get(name).unwrap();
            let n = t.n_components();
            let r = assess_order(&t, 4, DEFAULT_TOL).unwrap();
            let count = |o: usize| r.residuals.iter().filter(|x| x.order == o).count();
            assert_eq!(count(1), n);
            assert_eq!(count(2), n * n);
            assert_eq!(count(3), 2 * n.pow(3));
            assert_eq!(count(4), 4 * n.pow(4));
        }
    }

    #[test]
    fn registry_orders() {
        for (name, order) in [
            ("imex-tr3", 3),
            ("imex-tr4", 4),
            ("imex-sd2", 2),
            ("imex-mono2", 2),
            ("imim-dirk2", 2),
            ("rk4", 4),
            ("ssp-rk2", 2),
            ("implicit-euler", 1),
        ] {
            let r = assess_order(&registry::get(name).unwrap(), 4, DEFAULT_TOL).unwrap();
            assert_eq!(r.certified_order, order, "{name}");
        }
    }

    #[test]
    fn perturbed_imim_drops_below_two() {
        let t = registry::get("imim-dirk2").unwrap();
        let base = t.block(0, 1)[(1, 0)];
        let t = t.with_coefficient(0, 1, 1, 0, base + 1e-3).unwrap();
        let r = assess_order(&t, 4, DEFAULT_TOL).unwrap();
        assert!(r.certified_order < 2);
        assert!(r
            .residuals
            .iter()
            .any(|x| x.id == ConditionId::O2 && x.residual >= 1e-4));
    }

    #[test]
    fn coupling_counts() {
        let t = registry::get("imex-tr4").unwrap();
        let r = assess_imex_coupling(&t, 3, Order4Variant::General).unwrap();
        assert_eq!(r.residuals.len(), 14);
        let r = assess_imex_coupling(&t, 4, Order4Variant::General).unwrap();
        assert_eq!(r.count(ConditionId::C4), 18);
        let r = assess_imex_coupling(&t, 4, Order4Variant::Reduced).unwrap();
        assert_eq!(r.count(ConditionId::C4Reduced), 12);
        assert_eq!(r.count(ConditionId::C4Own), 16);
        let r = assess_imex_coupling(&t, 4, Order4Variant::EqualCoupling).unwrap();
        assert_eq!(r.count(ConditionId::C4Equal), 6);
        assert_eq!(r.count(ConditionId::C4Own), 8);
    }

    #[test]
    fn tr4_general_coupling_exact() {
        let r = assess_imex_coupling(&registry::get("imex-tr4").unwrap(), 4, Order4Variant::General).unwrap();
        assert!(r.max_residual() <= 1e-12, "{}", r.max_residual());
        assert_eq!(r.certified_order, 4);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn sd2_order_two_couplings() {
        let r = assess_imex_coupling(&registry::get("imex-sd2").unwrap(), 2, Order4Variant::General).unwrap();
        assert_eq!(r.residuals.len(), 2);
        assert!(r.max_residual() <= 1e-12);
    }

    #[test]
    fn euler_pair_coupling_fails() {
        let fe = Matrix::zeros(1, 1);
        let be = Matrix::identity(1, 1);
        let t = GarkTableau::classical_imex("euler-pair", &fe, &ones(1), &be, &ones(1)).unwrap();
        let r = assess_imex_coupling(&t, 2, Order4Variant::General).unwrap();
        let ei = r.find(ConditionId::O2, &[0, 1]).unwrap();
        assert_eq!(ei.lhs, 1.0);
        assert_eq!(r.certified_order, 1);
    }

    #[test]
    fn coupling_rejects_single_component() {
        assert!(matches!(
            assess_imex_coupling(&registry::get("rk4").unwrap(), 2, Order4Variant::General),
            Err(GarkError::NotTwoComponent(1))
        ));
    }

    #[test]
    fn stiffly_accurate_mono2_satisfies_pr_and_sl() {
        let t = registry::get("imex-mono2").unwrap();
        let pr = check_pr_conditions(&t, 2).unwrap();
        assert!(pr.max_residual() <= 1e-12, "{:?}", pr.residuals);
        let sl = check_sl_conditions(&t, 2).unwrap();
        assert!(sl.max_residual() <= 1e-12, "{:?}", sl.residuals);
        assert_eq!(sl.notes, vec!["internally consistent".to_string()]);
    }

    #[test]
    fn sd2_pr_matches_direct_solve() {
        let t = registry::get("imex-sd2").unwrap();
        let r = check_pr_conditions(&t, 2).unwrap();
        let aii = t.block(1, 1).clone();
        let bi = t.weights(1);
        for k in 1..=2 {
            let rhs = t.block(1, 0) * powi(&t.c(0, 0), k - 1) * k as f64;
            let x = aii.clone().lu().solve(&rhs).unwrap();
            let y = aii.clone().lu().solve(&powi(&t.c(1, 0), k)).unwrap();
            let pr = r.find(ConditionId::Pr, &[k as usize]).unwrap();
            assert!((pr.lhs - bi.dot(&x)).abs() < 1e-13);
            assert!((pr.target - bi.dot(&y)).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_implicit_block_rejected() {
        let t = GarkTableau::classical_imex(
            "x",
            &Matrix::zeros(1, 1),
            &ones(1),
            &Matrix::zeros(1, 1),
            &ones(1),
        )
        .unwrap();
        assert!(matches!(check_pr_conditions(&t, 1), Err(GarkError::Singular(_))));
        assert!(matches!(
            check_sl_conditions(&registry::get("imex-tr3").unwrap(), 2),
            Err(GarkError::Singular(_))
        ));
    }

    #[test]
    fn transposed_euler_pair_sl() {
        let t = GarkTableau::transposed_imex(
            "x",
            &Matrix::zeros(1, 1),
            &ones(1),
            &Matrix::identity(1, 1),
            &ones(1),
        )
        .unwrap();
        let r = check_sl_conditions(&t, 1).unwrap();
        assert_eq!(r.find(ConditionId::SlA, &[1]).unwrap().residual, 0.0);
    }

    #[test]
    fn csv_columns() {
        let r = assess_order(&registry::get("euler").unwrap(), 2, DEFAULT_TOL).unwrap();
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("condition_id,color_index,lhs,target,residual"));
        assert_eq!(lines.next(), Some("O1,(0),1,1,0"));
        assert_eq!(lines.next(), Some("O2,\"(0,0)\",0,0.5,0.5"));
    }

    #[test]
    fn certified_order_monotone_in_tol() {
        let t = registry::get("imex-sd2").unwrap();
        let r = assess_order(&t, 4, 1e-14).unwrap();
        let loose = r.clone().with_tol(1.0);
        assert!(loose.certified_order >= r.certified_order);
        assert_eq!(loose.certified_order, 4);
    }
}
