//! Fixed-step integration of additively split ODEs with a GARK tableau.
//!
//! Stages are executed in a dependency order computed from the nonzero
//! pattern of the tableau. A stage with a nonzero diagonal entry
//! `a^{q,q}_{i,i}` is solved by Newton's method on
//! `G(Y) = Y - h a^{q,q}_{i,i} f^q(Y) - known`, where `known` collects all
//! terms from previously computed stages. Systems are autonomous;
//! time-dependent problems carry `t` in the state.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::error::{GarkError, Result};
use crate::linalg::{lu_checked, Matrix, Vector};
use crate::output::{fmt_float, write_csv};
use crate::tableau::GarkTableau;

pub type RhsFn = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type JacobianFn = Box<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type ExactFn = Box<dyn Fn(f64) -> Vector + Send + Sync>;

/// `y' = f^0(y) + ... + f^{N-1}(y)` with analytic Jacobians and optional
/// metadata used by the stability experiments.
pub struct SplitOde {
    pub name: String,
    pub dimension: usize,
    components: Vec<RhsFn>,
    jacobians: Vec<JacobianFn>,
    pub exact_solution: Option<ExactFn>,
    /// Forward-Euler monotonicity radii `rho^m`.
    pub monotonicity_radii: Option<Vec<f64>>,
    /// One-sided Lipschitz constants `nu^m`.
    pub dispersion_constants: Option<Vec<f64>>,
    /// Coercivity constants `mu^m`.
    pub coercivity_constants: Option<Vec<f64>>,
}

impl SplitOde {
    pub fn new(name: impl Into<String>, dimension: usize) -> Self {
        Self {
            name: name.into(),
            dimension,
            components: Vec::new(),
            jacobians: Vec::new(),
            exact_solution: None,
            monotonicity_radii: None,
            dispersion_constants: None,
            coercivity_constants: None,
        }
    }

    pub fn with_component<F, J>(mut self, f: F, jacobian: J) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
        J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.components.push(Box::new(f));
        self.jacobians.push(Box::new(jacobian));
        self
    }

    pub fn with_exact_solution<F>(mut self, exact: F) -> Self
    where
        F: Fn(f64) -> Vector + Send + Sync + 'static,
    {
        self.exact_solution = Some(Box::new(exact));
        self
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `f^m(y)`, with the output length checked.
    pub fn eval(&self, m: usize, y: &Vector) -> Result<Vector> {
        let f = self.components.get(m).ok_or(GarkError::ComponentOutOfRange {
            index: m,
            n: self.components.len(),
        })?;
        let out = f(y);
        if out.len() != self.dimension {
            return Err(GarkError::Shape(format!(
                "component {m} of '{}' returned length {}, expected {}",
                self.name,
                out.len(),
                self.dimension
            )));
        }
        Ok(out)
    }

    pub fn jacobian(&self, m: usize, y: &Vector) -> Result<Matrix> {
        let j = self.jacobians.get(m).ok_or(GarkError::ComponentOutOfRange {
            index: m,
            n: self.jacobians.len(),
        })?;
        let out = j(y);
        if out.shape() != (self.dimension, self.dimension) {
            return Err(GarkError::Shape(format!(
                "Jacobian {m} of '{}' is {}x{}, expected {d}x{d}",
                self.name,
                out.nrows(),
                out.ncols(),
                d = self.dimension
            )));
        }
        Ok(out)
    }

    /// Sum of all components.
    pub fn eval_total(&self, y: &Vector) -> Result<Vector> {
        let mut total = Vector::zeros(self.dimension);
        for m in 0..self.n_components() {
            total += self.eval(m, y)?;
        }
        Ok(total)
    }

    pub fn exact(&self, t: f64) -> Option<Vector> {
        self.exact_solution.as_ref().map(|f| f(t))
    }
}

impl std::fmt::Debug for SplitOde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitOde")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("components", &self.components.len())
            .field("has_exact_solution", &self.exact_solution.is_some())
            .field("monotonicity_radii", &self.monotonicity_radii)
            .field("dispersion_constants", &self.dispersion_constants)
            .field("coercivity_constants", &self.coercivity_constants)
            .finish()
    }
}

/// Execution order of the stage nodes `(component, stage)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageSchedule {
    pub order: Vec<(usize, usize)>,
    /// `implicit_mask[k]` is true when `order[k]` has a nonzero diagonal entry.
    pub implicit_mask: Vec<bool>,
}

/// Topological order of the stage dependency graph. Ties are broken by
/// lowest component, then lowest stage index.
pub fn schedule_stages(t: &GarkTableau) -> Result<StageSchedule> {
    let n = t.n_components();
    let stages = t.stage_counts();
    let offsets: Vec<usize> = stages
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();
    let total = t.total_stages();
    let node = |q: usize, i: usize| offsets[q] + i;
    let mut successors = vec![Vec::new(); total];
    let mut indegree = vec![0usize; total];
    for q in 0..n {
        for m in 0..n {
            let block = t.block(q, m);
            for i in 0..stages[q] {
                for j in 0..stages[m] {
                    if block[(i, j)] != 0.0 && (q, i) != (m, j) {
                        successors[node(m, j)].push((q, i));
                        indegree[node(q, i)] += 1;
                    }
                }
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .flat_map(|q| (0..stages[q]).map(move |i| (q, i)))
        .filter(|&(q, i)| indegree[node(q, i)] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(total);
    while let Some(Reverse((m, j))) = ready.pop() {
        order.push((m, j));
        for &(q, i) in &successors[node(m, j)] {
            let d = &mut indegree[node(q, i)];
            *d -= 1;
            if *d == 0 {
                ready.push(Reverse((q, i)));
            }
        }
    }
    if order.len() < total {
        return Err(GarkError::CyclicDependency(total - order.len()));
    }
    let implicit_mask = order.iter().map(|&(q, i)| t.block(q, q)[(i, i)] != 0.0).collect();
    Ok(StageSchedule { order, implicit_mask })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianRefresh {
    /// Full Newton: re-evaluate and refactor at every iterate.
    #[default]
    EveryIteration,
    /// Simplified Newton: one factorization per stage.
    PerStage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictor {
    /// `y_n` plus all already known stage contributions.
    #[default]
    KnownSum,
    /// The previous step value `y_n`.
    PreviousStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub h: f64,
    /// Bound on the 2-norm of the Newton residual.
    pub newton_tol: f64,
    /// Maximum number of Newton updates per stage.
    pub newton_max_iters: usize,
    pub jacobian_refresh: JacobianRefresh,
    pub predictor: Predictor,
    pub record_stages: bool,
}

impl SolverConfig {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            newton_tol: 1e-12,
            newton_max_iters: 25,
            jacobian_refresh: JacobianRefresh::default(),
            predictor: Predictor::default(),
            record_stages: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(GarkError::InvalidArgument(format!(
                "step size must be positive, got {}",
                self.h
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(GarkError::InvalidArgument(format!(
                "Newton tolerance must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iters == 0 {
            return Err(GarkError::InvalidArgument(
                "newton_max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub y: Vector,
    /// `stages[q][i] = Y^q_i`.
    pub stages: Vec<Vec<Vector>>,
    /// Newton updates used by each implicit stage, in schedule order.
    pub newton_iterations: Vec<usize>,
}

fn check_compatible(t: &GarkTableau, ode: &SplitOde, y: &Vector) -> Result<()> {
    if ode.n_components() != t.n_components() {
        return Err(GarkError::InvalidArgument(format!(
            "tableau '{}' has {} components, problem '{}' has {}",
            t.name(),
            t.n_components(),
            ode.name,
            ode.n_components()
        )));
    }
    if y.len() != ode.dimension {
        return Err(GarkError::Shape(format!(
            "state has length {}, problem dimension is {}",
            y.len(),
            ode.dimension
        )));
    }
    Ok(())
}

/// Advances `y_n` by one step of size `cfg.h`.
pub fn step(
    t: &GarkTableau,
    sched: &StageSchedule,
    ode: &SplitOde,
    y_n: &Vector,
    cfg: &SolverConfig,
) -> Result<StepOutput> {
    check_compatible(t, ode, y_n)?;
    let h = cfg.h;
    let stages = t.stage_counts();
    let mut values: Vec<Vec<Option<Vector>>> = stages.iter().map(|&s| vec![None; s]).collect();
    let mut fvals: Vec<Vec<Option<Vector>>> = values.clone();
    let mut newton_iterations = Vec::new();

    for (&(q, i), &implicit) in sched.order.iter().zip(&sched.implicit_mask) {
        let mut known = y_n.clone();
        for (m, fm) in fvals.iter().enumerate() {
            let row = t.block(q, m).row(i);
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 || (m, j) == (q, i) {
                    continue;
                }
                let f = fm[j].as_ref().ok_or_else(|| {
                    GarkError::InvalidArgument(format!(
                        "schedule computes stage ({q},{i}) before its dependency ({m},{j})"
                    ))
                })?;
                known.axpy(h * a, f, 1.0);
            }
        }
        let (y, f) = if implicit {
            let (y, f, iters) = newton_solve(ode, q, i, h * t.block(q, q)[(i, i)], &known, y_n, cfg)?;
            newton_iterations.push(iters);
            (y, f)
        } else {
            let f = ode.eval(q, &known)?;
            (known, f)
        };
        values[q][i] = Some(y);
        fvals[q][i] = Some(f);
    }

    let mut y = y_n.clone();
    for (q, fq) in fvals.iter().enumerate() {
        for (i, &b) in t.weights(q).iter().enumerate() {
            if b != 0.0 {
                let f = fq[i]
                    .as_ref()
                    .ok_or_else(|| GarkError::InvalidArgument(format!("schedule misses stage ({q},{i})")))?;
                y.axpy(h * b, f, 1.0);
            }
        }
    }
    let stages = values
        .into_iter()
        .enumerate()
        .map(|(q, v)| {
            v.into_iter()
                .enumerate()
                .map(|(i, y)| {
                    y.ok_or_else(|| GarkError::InvalidArgument(format!("schedule misses stage ({q},{i})")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepOutput {
        y,
        stages,
        newton_iterations,
    })
}

/// Solves `Y - ha f^q(Y) = known`; returns the stage, `f^q` at the stage and
/// the number of updates.
fn newton_solve(
    ode: &SplitOde,
    q: usize,
    i: usize,
    ha: f64,
    known: &Vector,
    y_n: &Vector,
    cfg: &SolverConfig,
) -> Result<(Vector, Vector, usize)> {
    let mut y = match cfg.predictor {
        Predictor::KnownSum => known.clone(),
        Predictor::PreviousStep => y_n.clone(),
    };
    let d = y.len();
    let mut lu = None;
    let mut iters = 0;
    loop {
        let fy = ode.eval(q, &y)?;
        let g = &y - &fy * ha - known;
        let residual = g.norm();
        let diverged = |iterations, residual| GarkError::NewtonDivergence {
            component: q,
            stage: i,
            iterations,
            residual,
        };
        if !residual.is_finite() {
            return Err(diverged(iters, residual));
        }
        if residual <= cfg.newton_tol {
            return Ok((y, fy, iters));
        }
        if iters >= cfg.newton_max_iters {
            return Err(diverged(iters, residual));
        }
        if lu.is_none() || cfg.jacobian_refresh == JacobianRefresh::EveryIteration {
            let jac = Matrix::identity(d, d) - ode.jacobian(q, &y)? * ha;
            lu = Some(lu_checked(jac, &format!("Newton matrix of stage ({q},{i})"))?);
        }
        let delta = lu
            .as_ref()
            .and_then(|lu| lu.solve(&(-g)))
            .ok_or_else(|| GarkError::Singular(format!("Newton matrix of stage ({q},{i})")))?;
        y += &delta;
        iters += 1;
        if !y.iter().all(|x| x.is_finite()) {
            return Err(diverged(iters, f64::INFINITY));
        }
        // The residual of a stiff stage cannot drop below roundoff times the
        // size of h a f; an update at roundoff level means the iterate is as
        // good as it gets.
        if delta.norm() <= 4.0 * f64::EPSILON * (1.0 + y.norm()) {
            let fy = ode.eval(q, &y)?;
            return Ok((y, fy, iters));
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NewtonStats {
    /// Number of implicit stage solves.
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// Number of solves that used a given number of updates.
    pub histogram: BTreeMap<usize, usize>,
}

impl NewtonStats {
    fn record(&mut self, iterations: &[usize]) {
        for &k in iterations {
            self.solves += 1;
            self.total_iterations += k;
            self.max_iterations = self.max_iterations.max(k);
            *self.histogram.entry(k).or_default() += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// Per step, the stage values `Y^q_i` (only with `record_stages`).
    pub stage_log: Option<Vec<Vec<Vec<Vector>>>>,
    pub newton: NewtonStats,
    pub schedule: StageSchedule,
    /// The last step was shortened to land on `t_end`.
    pub truncated_final_step: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &Vector {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    /// States as a `(steps+1) x d` matrix.
    pub fn states_matrix(&self) -> Matrix {
        let d = self.states[0].len();
        Matrix::from_fn(self.states.len(), d, |k, j| self.states[k][j])
    }

    /// Maximum over recorded times of the max-norm error.
    pub fn max_error(&self, exact: impl Fn(f64) -> Vector) -> f64 {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, y)| (y - exact(t)).amax())
            .fold(0.0, f64::max)
    }

    /// Columns `t, y1, ..., yd`.
    pub fn to_csv(&self) -> Result<String> {
        let d = self.states[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|j| format!("y{j}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(
            &header,
            self.times.iter().zip(&self.states).map(|(&t, y)| {
                std::iter::once(fmt_float(t))
                    .chain(y.iter().map(|&x| fmt_float(x)))
                    .collect::<Vec<_>>()
            }),
        )
    }

    pub fn stats_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Stats<'a> {
            version: &'static str,
            steps: usize,
            newton: &'a NewtonStats,
            schedule: &'a StageSchedule,
            truncated_final_step: bool,
        }
        Ok(serde_json::to_string_pretty(&Stats {
            version: env!("CARGO_PKG_VERSION"),
            steps: self.steps(),
            newton: &self.newton,
            schedule: &self.schedule,
            truncated_final_step: self.truncated_final_step,
        })?)
    }
}

/// Integrates from `t0` to `t_end` with fixed steps. If the interval is not
/// an integer multiple of `h` the final step is shortened and flagged.
pub fn integrate(
    t: &GarkTableau,
    ode: &SplitOde,
    y0: &Vector,
    t0: f64,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_compatible(t, ode, y0)?;
    if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(GarkError::InvalidArgument(format!(
            "integration interval [{t0}, {t_end}] is empty or not finite"
        )));
    }
    let schedule = schedule_stages(t)?;
    let ratio = (t_end - t0) / cfg.h;
    let rounded = ratio.round();
    let (full_steps, truncated) = if (ratio - rounded).abs() <= 8.0 * f64::EPSILON * ratio.max(1.0) {
        (rounded as usize, false)
    } else {
        (ratio.floor() as usize, true)
    };
    let total = full_steps + usize::from(truncated);
    let mut times = Vec::with_capacity(total + 1);
    let mut states = Vec::with_capacity(total + 1);
    let mut stage_log = cfg.record_stages.then(Vec::new);
    let mut newton = NewtonStats::default();
    times.push(t0);
    states.push(y0.clone());
    let mut step_cfg = *cfg;
    for k in 0..total {
        let t_next = if k + 1 == total {
            t_end
        } else {
            t0 + (k + 1) as f64 * cfg.h
        };
        if truncated && k + 1 == total {
            step_cfg.h = t_end - times[k];
        }
        let out = step(t, &schedule, ode, &states[k], &step_cfg).map_err(|e| GarkError::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        newton.record(&out.newton_iterations);
        if let Some(log) = stage_log.as_mut() {
            log.push(out.stages);
        }
        times.push(t_next);
        states.push(out.y);
    }
    Ok(Trajectory {
        times,
        states,
        stage_log,
        newton,
        schedule,
        truncated_final_step: truncated,
    })
}

/// Integrates two initial values with the same configuration and returns
/// `||y^a_n - y^b_n||_2` for every recorded step.
pub fn contraction_experiment(
    t: &GarkTableau,
    ode: &SplitOde,
    y0_a: &Vector,
    y0_b: &Vector,
    t0: f64,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if ode.dispersion_constants.is_none() && ode.coercivity_constants.is_none() {
        return Err(GarkError::InvalidArgument(format!(
            "problem '{}' is neither dispersive nor coercive",
            ode.name
        )));
    }
    let (a, b) = rayon::join(
        || integrate(t, ode, y0_a, t0, t_end, cfg),
        || integrate(t, ode, y0_b, t0, t_end, cfg),
    );
    let (a, b) = (a?, b?);
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (x - y).norm())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    fn decay(rates: &[f64]) -> SplitOde {
        rates.iter().fold(SplitOde::new("decay", 1), |ode, &l| {
            ode.with_component(move |y| y * l, move |_| Matrix::from_element(1, 1, l))
        })
    }

    fn one(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    #[test]
    fn imim_schedule_interleaves() {
        let s = schedule_stages(&registry::get("imim-dirk2").unwrap()).unwrap();
        assert_eq!(s.order, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert!(s.implicit_mask.iter().all(|&x| x));
    }

    #[test]
    fn classical_euler_pair_schedule() {
        let t = GarkTableau::classical_imex(
            "euler-pair",
            &Matrix::zeros(1, 1),
            &Vector::from_element(1, 1.0),
            &Matrix::identity(1, 1),
            &Vector::from_element(1, 1.0),
        )
        .unwrap();
        let s = schedule_stages(&t).unwrap();
        assert_eq!(s.order, vec![(1, 0), (0, 0)]);
        assert_eq!(s.implicit_mask, vec![true, false]);
    }

    #[test]
    fn dense_mutual_coupling_is_cyclic() {
        let full = Matrix::from_element(2, 2, 0.25);
        let w = Vector::from_element(2, 0.5);
        let t = GarkTableau::new(
            "dense",
            vec![
                vec![Matrix::zeros(2, 2), full.clone()],
                vec![full, Matrix::zeros(2, 2)],
            ],
            vec![w.clone(), w],
        )
        .unwrap();
        assert!(matches!(schedule_stages(&t), Err(GarkError::CyclicDependency(_))));
    }

    #[test]
    fn euler_steps() {
        let ode = decay(&[-1.0]);
        let cfg = SolverConfig::new(0.1);
        let fe = registry::get("euler").unwrap();
        let s = schedule_stages(&fe).unwrap();
        assert_eq!(step(&fe, &s, &ode, &one(1.0), &cfg).unwrap().y[0], 0.9);
        let be = registry::get("implicit-euler").unwrap();
        let s = schedule_stages(&be).unwrap();
        let out = step(&be, &s, &ode, &one(1.0), &cfg).unwrap();
        assert!((out.y[0] - 1.0 / 1.1).abs() < 1e-15);
        assert!(out.newton_iterations[0] <= 2);
    }

    #[test]
    fn ten_euler_steps() {
        let traj = integrate(
            &registry::get("euler").unwrap(),
            &decay(&[-1.0]),
            &one(1.0),
            0.0,
            1.0,
            &SolverConfig::new(0.1),
        )
        .unwrap();
        assert_eq!(traj.steps(), 10);
        assert!(!traj.truncated_final_step);
        assert!((traj.final_state()[0] - 0.3486784401).abs() < 1e-14);
    }

    #[test]
    fn truncated_final_step_is_flagged() {
        let traj = integrate(
            &registry::get("euler").unwrap(),
            &decay(&[-1.0]),
            &one(1.0),
            0.0,
            0.25,
            &SolverConfig::new(0.1),
        )
        .unwrap();
        assert!(traj.truncated_final_step);
        assert_eq!(traj.times.len(), 4);
        assert_eq!(*traj.times.last().unwrap(), 0.25);
        assert!((traj.final_state()[0] - 0.9 * 0.9 * 0.95).abs() < 1e-15);
    }

    #[test]
    fn predictors_agree() {
        let t = registry::get("imim-dirk2").unwrap();
        let ode = SplitOde::new("cubic", 1)
            .with_component(
                |y| y.map(|x| -x * x * x - x),
                |y| Matrix::from_element(1, 1, -3.0 * y[0] * y[0] - 1.0),
            )
            .with_component(|y| y * -2.0, |_| Matrix::from_element(1, 1, -2.0));
        let s = schedule_stages(&t).unwrap();
        let mut cfg = SolverConfig::new(0.5);
        let a = step(&t, &s, &ode, &one(1.5), &cfg).unwrap();
        cfg.predictor = Predictor::PreviousStep;
        let b = step(&t, &s, &ode, &one(1.5), &cfg).unwrap();
        assert!((a.y[0] - b.y[0]).abs() <= 10.0 * cfg.newton_tol);
    }

    #[test]
    fn per_stage_refresh_on_linear_problem() {
        let t = registry::get("imim-dirk2").unwrap();
        let s = schedule_stages(&t).unwrap();
        let ode = decay(&[-1.0, -2.0]);
        let mut cfg = SolverConfig::new(0.1);
        let a = step(&t, &s, &ode, &one(1.0), &cfg).unwrap();
        cfg.jacobian_refresh = JacobianRefresh::PerStage;
        let b = step(&t, &s, &ode, &one(1.0), &cfg).unwrap();
        assert!((a.y[0] - b.y[0]).abs() <= 1e-15);
        assert!(b.newton_iterations.iter().all(|&k| k <= 2));
    }

    #[test]
    fn step_errors_carry_index() {
        let ode = SplitOde::new("blowup", 1)
            .with_component(|y| y.map(|x| x.exp()), |y| Matrix::from_element(1, 1, y[0].exp()));
        let mut cfg = SolverConfig::new(10.0);
        cfg.newton_max_iters = 3;
        let err = integrate(
            &registry::get("implicit-euler").unwrap(),
            &ode,
            &one(1.0),
            0.0,
            20.0,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, GarkError::StepFailed { step: 0, .. }), "{err}");
    }

    #[test]
    fn contraction_needs_metadata() {
        let cfg = SolverConfig::new(0.1);
        let t = registry::get("euler").unwrap();
        assert!(contraction_experiment(&t, &decay(&[-1.0]), &one(1.0), &one(-1.0), 0.0, 1.0, &cfg).is_err());
        let mut ode = decay(&[-1.0]);
        ode.dispersion_constants = Some(vec![-1.0]);
        let mut cfg = SolverConfig::new(3.0);
        let norms = contraction_experiment(&t, &ode, &one(1.0), &one(-1.0), 0.0, 15.0, &cfg).unwrap();
        assert!(norms.windows(2).all(|w| w[1] > w[0]));
        cfg.h = 0.5;
        let norms = contraction_experiment(&t, &ode, &one(1.0), &one(-1.0), 0.0, 5.0, &cfg).unwrap();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn trajectory_csv_and_stats() {
        let traj = integrate(
            &registry::get("implicit-euler").unwrap(),
            &decay(&[-1.0]),
            &one(1.0),
            0.0,
            0.5,
            &SolverConfig::new(0.25),
        )
        .unwrap();
        let csv = traj.to_csv().unwrap();
        assert!(csv.starts_with("t,y1\n0,1\n0.25,0.8\n"));
        let stats: serde_json::Value = serde_json::from_str(&traj.stats_json().unwrap()).unwrap();
        assert_eq!(stats["newton"]["solves"], 2);
        assert_eq!(stats["schedule"]["order"][0], serde_json::json!([0, 0]));
    }

    #[test]
    fn rejects_bad_config() {
        let t = registry::get("euler").unwrap();
        let ode = decay(&[-1.0]);
        for h in [0.0, -1.0, f64::NAN] {
            assert!(integrate(&t, &ode, &one(1.0), 0.0, 1.0, &SolverConfig::new(h)).is_err());
        }
        let mut cfg = SolverConfig::new(0.1);
        cfg.newton_max_iters = 0;
        assert!(integrate(&t, &ode, &one(1.0), 0.0, 1.0, &cfg).is_err());
        assert!(integrate(
            &t,
            &decay(&[-1.0, -2.0]),
            &one(1.0),
            0.0,
            1.0,
            &SolverConfig::new(0.1)
        )
        .is_err());
    }
}
