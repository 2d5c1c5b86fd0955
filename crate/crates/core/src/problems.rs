//! Split test problems with exact solutions and stability metadata.
//!
//! Component 0 is the nonstiff part and component 1 the stiff part, matching
//! the explicit/implicit convention of the IMEX tableaus. Time-dependent
//! problems append `t` to the state.

use std::str::FromStr;

use crate::error::{GarkError, Result};
use crate::integrator::SplitOde;
use crate::linalg::{Matrix, Vector};

/// Smooth function `phi` followed by the Prothero-Robinson solution.
///
/// Derivative bounds on `[0, 1]` (a proxy for the Lipschitz constant of the
/// nonstiff forcing): `sin` 1, `exp-decay` 1, `poly3` 3.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmoothProfile {
    #[default]
    Sin,
    ExpDecay,
    Poly3,
}

impl SmoothProfile {
    pub const ALL: [SmoothProfile; 3] = [SmoothProfile::Sin, SmoothProfile::ExpDecay, SmoothProfile::Poly3];

    pub fn name(self) -> &'static str {
        match self {
            SmoothProfile::Sin => "sin",
            SmoothProfile::ExpDecay => "exp-decay",
            SmoothProfile::Poly3 => "poly3",
        }
    }

    pub fn phi(self, t: f64) -> f64 {
        match self {
            SmoothProfile::Sin => t.sin(),
            SmoothProfile::ExpDecay => (-t).exp(),
            SmoothProfile::Poly3 => t * t * t - t,
        }
    }

    pub fn dphi(self, t: f64) -> f64 {
        match self {
            SmoothProfile::Sin => t.cos(),
            SmoothProfile::ExpDecay => -(-t).exp(),
            SmoothProfile::Poly3 => 3.0 * t * t - 1.0,
        }
    }

    pub fn d2phi(self, t: f64) -> f64 {
        match self {
            SmoothProfile::Sin => -t.sin(),
            SmoothProfile::ExpDecay => (-t).exp(),
            SmoothProfile::Poly3 => 6.0 * t,
        }
    }
}

impl FromStr for SmoothProfile {
    type Err = GarkError;

    fn from_str(s: &str) -> Result<Self> {
        SmoothProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                GarkError::InvalidArgument(format!("unknown profile '{s}' (sin, exp-decay, poly3)"))
            })
    }
}

fn require_negative(label: &str, x: f64) -> Result<()> {
    if x < 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(GarkError::InvalidArgument(format!(
            "{label} must be negative, got {x}"
        )))
    }
}

fn require_positive(label: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(GarkError::InvalidArgument(format!(
            "{label} must be positive, got {x}"
        )))
    }
}

fn v(x: &[f64]) -> Vector {
    Vector::from_row_slice(x)
}

fn m(rows: usize, x: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, x.len() / rows, x)
}

/// `y' = mu (y - phi(t)) + phi'(t)` on the state `[y, t]`, with time advanced
/// by the nonstiff component: `f = [phi'(t), 1]`, `g = [mu (y - phi(t)), 0]`.
pub fn prothero_robinson(mu: f64, profile: SmoothProfile) -> Result<SplitOde> {
    require_negative("mu", mu)?;
    let p = profile;
    Ok(SplitOde::new(format!("pr({mu}, {})", p.name()), 2)
        .with_component(
            move |y| v(&[p.dphi(y[1]), 1.0]),
            move |y| m(2, &[0.0, p.d2phi(y[1]), 0.0, 0.0]),
        )
        .with_component(
            move |y| v(&[mu * (y[0] - p.phi(y[1])), 0.0]),
            move |y| m(2, &[mu, -mu * p.dphi(y[1]), 0.0, 0.0]),
        )
        .with_exact_solution(move |t| v(&[p.phi(t), t])))
}

/// Prothero-Robinson with time advanced by the stiff component:
/// `f = [phi'(t), 0]`, `g = [mu (y - phi(t)), 1]`.
pub fn prothero_robinson_implicit_time(mu: f64, profile: SmoothProfile) -> Result<SplitOde> {
    require_negative("mu", mu)?;
    let p = profile;
    Ok(SplitOde::new(format!("pr-implicit-time({mu}, {})", p.name()), 2)
        .with_component(
            move |y| v(&[p.dphi(y[1]), 0.0]),
            move |y| m(2, &[0.0, p.d2phi(y[1]), 0.0, 0.0]),
        )
        .with_component(
            move |y| v(&[mu * (y[0] - p.phi(y[1])), 1.0]),
            move |y| m(2, &[mu, -mu * p.dphi(y[1]), 0.0, 0.0]),
        )
        .with_exact_solution(move |t| v(&[p.phi(t), t])))
}

/// State `[y, w, t]` with `g = [mu (y - w), 0, 0]`, `f = [phi', phi', 1]`.
pub fn modified_prothero_robinson(mu: f64, profile: SmoothProfile) -> Result<SplitOde> {
    require_negative("mu", mu)?;
    let p = profile;
    Ok(SplitOde::new(format!("mpr({mu}, {})", p.name()), 3)
        .with_component(
            move |y| v(&[p.dphi(y[2]), p.dphi(y[2]), 1.0]),
            move |y| {
                let d2 = p.d2phi(y[2]);
                m(3, &[0.0, 0.0, d2, 0.0, 0.0, d2, 0.0, 0.0, 0.0])
            },
        )
        .with_component(
            move |y| v(&[mu * (y[0] - y[1]), 0.0, 0.0]),
            move |_| m(3, &[mu, -mu, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        )
        .with_exact_solution(move |t| v(&[p.phi(t), p.phi(t), t])))
}

/// `y' = mu y + cos t` on `[y, t]`; stiff part `g = [mu y, 0]`, nonstiff part
/// `f = [cos t, 1]`. The exact solution `(sin t - mu cos t) / (1 + mu^2)` has
/// no transient.
pub fn semi_linear(mu: f64) -> Result<SplitOde> {
    require_negative("mu", mu)?;
    Ok(SplitOde::new(format!("sl({mu})"), 2)
        .with_component(|y| v(&[y[1].cos(), 1.0]), |y| m(2, &[0.0, -y[1].sin(), 0.0, 0.0]))
        .with_component(move |y| v(&[mu * y[0], 0.0]), move |_| m(2, &[mu, 0.0, 0.0, 0.0]))
        .with_exact_solution(move |t| v(&[(t.sin() - mu * t.cos()) / (1.0 + mu * mu), t])))
}

/// Scalar `f^0 = -y^3 - y` (`nu = -1`) and `f^1 = -2y` (`nu = -2`).
pub fn dispersive_pair() -> SplitOde {
    let mut ode = SplitOde::new("dispersive-pair", 1)
        .with_component(
            |y| y.map(|x| -x * x * x - x),
            |y| Matrix::from_element(1, 1, -3.0 * y[0] * y[0] - 1.0),
        )
        .with_component(|y| y * -2.0, |_| Matrix::from_element(1, 1, -2.0));
    ode.dispersion_constants = Some(vec![-1.0, -2.0]);
    ode
}

/// Scalar linear split `f^m = lambda^m y`.
pub fn linear_split(rates: &[f64]) -> SplitOde {
    let name = format!("linear{rates:?}");
    rates.iter().fold(SplitOde::new(name, 1), |ode, &l| {
        ode.with_component(move |y| y * l, move |_| Matrix::from_element(1, 1, l))
    })
}

/// `f^0 = -c1 y`, `f^1 = -c2 y` with forward-Euler radii `rho^m = 2 / c_m`.
pub fn monotone_linear_split(c1: f64, c2: f64) -> Result<SplitOde> {
    require_positive("c1", c1)?;
    require_positive("c2", c2)?;
    let mut ode = linear_split(&[-c1, -c2]);
    ode.name = format!("monotone-linear({c1}, {c2})");
    ode.monotonicity_radii = Some(vec![2.0 / c1, 2.0 / c2]);
    Ok(ode)
}

/// Scalar linear components with coercivity constants `mu_e`, `mu_i`. A
/// linear map `lambda y` is coercive with `mu = 1 / lambda`, so the rates are
/// `1 / mu_e` and `1 / mu_i`.
pub fn coercive_linear(mu_e: f64, mu_i: f64) -> Result<SplitOde> {
    require_negative("mu_e", mu_e)?;
    require_negative("mu_i", mu_i)?;
    let mut ode = linear_split(&[1.0 / mu_e, 1.0 / mu_i]);
    ode.name = format!("coercive-linear({mu_e}, {mu_i})");
    ode.coercivity_constants = Some(vec![mu_e, mu_i]);
    Ok(ode)
}

/// Problems available to convergence sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Pr,
    PrImplicitTime,
    Mpr,
    Sl,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Pr => "pr",
            ProblemKind::PrImplicitTime => "pr-implicit-time",
            ProblemKind::Mpr => "mpr",
            ProblemKind::Sl => "sl",
        }
    }

    pub fn build(self, mu: f64, profile: SmoothProfile) -> Result<SplitOde> {
        match self {
            ProblemKind::Pr => prothero_robinson(mu, profile),
            ProblemKind::PrImplicitTime => prothero_robinson_implicit_time(mu, profile),
            ProblemKind::Mpr => modified_prothero_robinson(mu, profile),
            ProblemKind::Sl => semi_linear(mu),
        }
    }
}

impl FromStr for ProblemKind {
    type Err = GarkError;

    fn from_str(s: &str) -> Result<Self> {
        [
            ProblemKind::Pr,
            ProblemKind::PrImplicitTime,
            ProblemKind::Mpr,
            ProblemKind::Sl,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| {
            GarkError::InvalidArgument(format!("unknown problem '{s}' (pr, pr-implicit-time, mpr, sl)"))
        })
    }
}
