//! Step-halving convergence sweeps against an exact solution.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GarkError, Result};
use crate::integrator::{integrate, SolverConfig, SplitOde};
use crate::output::{fmt_float, write_csv};
use crate::tableau::GarkTableau;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub tableau: String,
    pub problem: String,
    pub t_end: f64,
    /// Step sizes `h0, h0/2, ...`.
    pub h: Vec<f64>,
    /// Max-norm error over all recorded steps.
    pub errors: Vec<f64>,
    /// `log2(e_{2h} / e_h)` for consecutive levels.
    pub observed_orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log h` over the finest three
    /// levels.
    pub slope: f64,
}

impl ConvergenceTable {
    /// Columns `level, h, error, observed_order` (empty for the first level).
    pub fn to_csv(&self) -> Result<String> {
        write_csv(
            &["level", "h", "error", "observed_order"],
            (0..self.h.len()).map(|k| {
                vec![
                    k.to_string(),
                    fmt_float(self.h[k]),
                    fmt_float(self.errors[k]),
                    if k == 0 {
                        String::new()
                    } else {
                        fmt_float(self.observed_orders[k - 1])
                    },
                ]
            }),
        )
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs `levels` integrations on `[0, t_end]` with `h = h0 / 2^k`, starting
/// from the exact solution. Levels run in parallel; `base` supplies the
/// Newton settings.
pub fn convergence_sweep(
    t: &GarkTableau,
    ode: &SplitOde,
    t_end: f64,
    h0: f64,
    levels: usize,
    base: &SolverConfig,
) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(GarkError::InvalidArgument(format!(
            "need at least 3 levels, got {levels}"
        )));
    }
    let exact = ode
        .exact_solution
        .as_ref()
        .ok_or_else(|| GarkError::InvalidArgument(format!("problem '{}' has no exact solution", ode.name)))?;
    let y0 = exact(0.0);
    let h: Vec<f64> = (0..levels).map(|k| h0 / f64::powi(2.0, k as i32)).collect();
    let errors = h
        .par_iter()
        .enumerate()
        .map(|(level, &hk)| {
            let cfg = SolverConfig { h: hk, ..*base };
            integrate(t, ode, &y0, 0.0, t_end, &cfg)
                .map(|traj| traj.max_error(exact))
                .map_err(|e| GarkError::LevelFailed {
                    level,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let observed_orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let tail = levels - 3;
    let lx: Vec<f64> = h[tail..].iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors[tail..].iter().map(|x| x.ln()).collect();
    Ok(ConvergenceTable {
        tableau: t.name().to_string(),
        problem: ode.name.clone(),
        t_end,
        h,
        errors,
        observed_orders,
        slope: ls_slope(&lx, &ly),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{prothero_robinson, SmoothProfile};
    use crate::registry;

    #[test]
    fn slope_of_exact_power_law() {
        let x: Vec<f64> = [1.0_f64, 0.5, 0.25].iter().map(|h| h.ln()).collect();
        let y: Vec<f64> = [1.0_f64, 0.125, 0.015625].iter().map(|e| e.ln()).collect();
        assert!((ls_slope(&x, &y) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tr4_on_pr() {
        let t = registry::get("imex-tr4").unwrap();
        let ode = prothero_robinson(-1.0, SmoothProfile::Sin).unwrap();
        let table = convergence_sweep(&t, &ode, 1.0, 0.1, 4, &SolverConfig::new(0.1)).unwrap();
        assert_eq!(table.h.len(), 4);
        assert!((table.slope - 4.0).abs() < 0.3, "{table:?}");
        let csv = table.to_csv().unwrap();
        assert!(csv.starts_with("level,h,error,observed_order\n0,0.1,"));
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn needs_three_levels() {
        let t = registry::get("imex-tr4").unwrap();
        let ode = prothero_robinson(-1.0, SmoothProfile::Sin).unwrap();
        assert!(convergence_sweep(&t, &ode, 1.0, 0.1, 2, &SolverConfig::new(0.1)).is_err());
    }
}
