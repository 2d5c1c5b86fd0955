use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use gark::monotonicity::{scan_region, DEFAULT_AM_TOL};
use gark::order::{assess_imex_coupling, DEFAULT_TOL};
use gark::output::fmt_float;
use gark::problems::{ProblemKind, SmoothProfile};
use gark::registry::{self, RegistryParams};
use gark::stability::{
    analyze_algebraic_stability, conditional_stability_radii, stability_grid, ComplexAxis, GridSpec,
};
use gark::{
    assess_order, convergence_sweep, format, ConditionReport, GarkError, GarkTableau, Order4Variant,
    SolverConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::{Common, Params, TableauArgs};

const EXIT_CRITERION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Upper end of the conditional-radius search.
const RADIUS_SEARCH_MAX: f64 = 1e3;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<GarkError> for Failure {
    fn from(e: GarkError) -> Self {
        let code = match e {
            GarkError::Singular(_)
            | GarkError::CyclicDependency(_)
            | GarkError::NewtonDivergence { .. }
            | GarkError::StepFailed { .. }
            | GarkError::LevelFailed { .. }
            | GarkError::RadiusNotFound { .. } => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn load_tableau(c: &Common, args: &TableauArgs) -> Result<GarkTableau, Failure> {
    let p = &args.params;
    let params = RegistryParams {
        alpha: p.alpha,
        beta: p.beta,
        gamma: p.gamma,
    };
    match (&c.file, &args.name) {
        (Some(_), Some(name)) => Err(usage(format!(
            "give either a tableau name or --file, not both (got '{name}')"
        ))),
        (Some(path), None) => {
            if p.alpha.is_some() || p.beta.is_some() || p.gamma.is_some() {
                return Err(usage("--alpha/--beta/--gamma apply to registry tableaus only"));
            }
            Ok(format::load(path)?)
        }
        (None, Some(name)) => Ok(registry::get_with(name, &params)?),
        (None, None) => Err(usage("missing tableau name (or --file)")),
    }
}

fn emit(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            std::fs::write(p, content).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn json_text<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(GarkError::from)?;
    s.push('\n');
    Ok(s)
}

fn report_text(name: &str, r: &ConditionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{name}: certified order {} (tol {})",
        r.certified_order,
        fmt_float(r.tol)
    );
    let _ = writeln!(
        s,
        "{:<11} {:<10} {:>22} {:>22} {:>10}",
        "condition", "index", "lhs", "target", "residual"
    );
    for x in &r.residuals {
        let mark = if x.residual > r.tol { "  fail" } else { "" };
        let _ = writeln!(
            s,
            "{:<11} {:<10} {:>22} {:>22} {:>10.2e}{mark}",
            x.id.as_str(),
            x.index_text(),
            fmt_float(x.lhs),
            fmt_float(x.target),
            x.residual
        );
        if let Some(label) = &x.label {
            let _ = writeln!(s, "{:<11} {label}", "");
        }
    }
    for note in &r.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

pub fn check(
    c: &Common,
    args: &TableauArgs,
    order: usize,
    tol: f64,
    csv: bool,
    coupling: Option<Order4Variant>,
) -> CmdResult {
    if !(1..=4).contains(&order) {
        return Err(usage(format!("--order must be between 1 and 4, got {order}")));
    }
    let t = load_tableau(c, args)?;
    let report = match coupling {
        Some(variant) => assess_imex_coupling(&t, order.max(2), variant)?.with_tol(tol),
        None => assess_order(&t, 4, tol)?,
    };
    let text = if c.json {
        report.to_json()? + "\n"
    } else if csv {
        report.to_csv()?
    } else {
        report_text(t.name(), &report)
    };
    emit(c.out.as_deref(), &text)?;
    Ok(if report.certified_order >= order {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CRITERION)
    })
}

#[allow(clippy::too_many_arguments)]
pub fn converge(
    c: &Common,
    positional: &[String],
    params: Params,
    mu: f64,
    h0: f64,
    levels: usize,
    t_end: f64,
    profile: SmoothProfile,
    newton_max_iters: usize,
) -> CmdResult {
    let (name, problem) = match positional {
        [problem] => (None, problem),
        [name, problem] => (Some(name.clone()), problem),
        _ => return Err(usage("expected [TABLEAU] PROBLEM")),
    };
    let problem: ProblemKind = problem.parse()?;
    let t = load_tableau(c, &TableauArgs { name, params })?;
    let ode = problem.build(mu, profile)?;
    let cfg = SolverConfig {
        newton_max_iters,
        ..SolverConfig::new(h0)
    };
    cfg.validate()?;
    let table = convergence_sweep(&t, &ode, t_end, h0, levels, &cfg)?;
    let text = if c.json {
        json_text(&table)?
    } else {
        table.to_csv()?
    };
    emit(c.out.as_deref(), &text)?;
    eprintln!(
        "{} on {}: least-squares slope {:.3} over the finest 3 levels (h mu = {} at the finest level)",
        table.tableau,
        table.problem,
        table.slope,
        fmt_float(table.h[levels - 1] * mu)
    );
    Ok(ExitCode::SUCCESS)
}

pub fn stability(
    c: &Common,
    args: &TableauArgs,
    grid: &[ComplexAxis],
    report_path: Option<&Path>,
    psd_tol: f64,
) -> CmdResult {
    let t = load_tableau(c, args)?;
    let report = analyze_algebraic_stability(&t, psd_tol)?;
    let mut value = serde_json::to_value(&report).map_err(GarkError::from)?;
    value["version"] = json!(env!("CARGO_PKG_VERSION"));
    if !report.algebraically_stable {
        value["conditional_radii"] = match conditional_stability_radii(&t, RADIUS_SEARCH_MAX, psd_tol) {
            Ok(r) => serde_json::to_value(r).map_err(GarkError::from)?,
            Err(GarkError::RadiusNotFound { .. }) => serde_json::Value::Null,
            Err(e) => return Err(e.into()),
        };
    }
    let report_json = json_text(&value)?;
    if grid.is_empty() {
        return emit(c.out.as_deref(), &report_json).map(|_| ExitCode::SUCCESS);
    }
    let n = t.n_components();
    let spec = match grid.len() {
        1 => GridSpec::Shared(grid[0]),
        k if k == n => GridSpec::PerComponent(grid.to_vec()),
        k => return Err(usage(format!("give --grid once or {n} times, got {k}"))),
    };
    let csv = stability_grid(&t, &spec)?.to_csv()?;
    emit(c.out.as_deref(), &csv)?;
    match (report_path, &c.out) {
        (Some(p), _) => emit(Some(p), &report_json)?,
        (None, Some(_)) => emit(None, &report_json)?,
        (None, None) => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), Failure> {
    let bad = || usage(format!("expected lo:hi:n, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !(lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

pub fn monotonicity(
    c: &Common,
    args: &TableauArgs,
    rmax: f64,
    points: usize,
    sweep_alpha: Option<&str>,
) -> CmdResult {
    if !(rmax > 0.0) || points < 2 {
        return Err(usage("need --rmax > 0 and --points >= 2"));
    }
    if let Some(range) = sweep_alpha {
        if c.file.is_some() || args.name.as_deref() != Some("imex-mono2") || args.params.alpha.is_some() {
            return Err(usage("--sweep-alpha applies to imex-mono2 without --alpha"));
        }
        let (lo, hi, n) = parse_range(range)?;
        let gamma = args.params.gamma.unwrap_or_else(registry::default_gamma);
        let mut rows = Vec::new();
        for alpha in gark::stability::linspace(lo, hi, n) {
            let t = registry::imex_mono2(alpha, gamma)?;
            let g = scan_region(&t, &[rmax, rmax], points, DEFAULT_AM_TOL)?;
            rows.push(vec![
                fmt_float(alpha),
                g.region_count().to_string(),
                g.pointwise_count().to_string(),
            ]);
        }
        let csv = gark::output::write_csv(&["alpha", "region_cells", "pointwise_cells"], rows)?;
        return emit(c.out.as_deref(), &csv).map(|_| ExitCode::SUCCESS);
    }
    let t = load_tableau(c, args)?;
    let g = scan_region(&t, &vec![rmax; t.n_components()], points, DEFAULT_AM_TOL)?;
    let summary = json!({
        "tableau": t.name(),
        "a_hat_nonneg": g.a_hat_nonneg,
        "cells": g.len(),
        "region_cells": g.region_count(),
        "pointwise_cells": g.pointwise_count(),
        "endpoint_1d": g.endpoint_1d(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    if c.json {
        if c.out.is_some() {
            emit(c.out.as_deref(), &g.to_csv()?)?;
        }
        emit(None, &json_text(&summary)?)?;
    } else {
        emit(c.out.as_deref(), &g.to_csv()?)?;
        let mut line = format!(
            "{}: {} of {} cells in region",
            t.name(),
            g.region_count(),
            g.len()
        );
        if let Some(end) = g.endpoint_1d() {
            let _ = write!(line, ", endpoint {}", fmt_float(end));
        }
        if !g.a_hat_nonneg {
            line.push_str(" (coefficient matrix has negative entries; region is empty)");
        }
        eprintln!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ListEntry {
    name: String,
    source: String,
    n_components: usize,
    stages: Vec<usize>,
    order: usize,
    tags: Vec<String>,
    flags: gark::StructureFlags,
}

fn entry(t: &GarkTableau, source: String) -> Result<ListEntry, Failure> {
    let flags = t.structure_flags(gark::tableau::STRUCTURE_TOL);
    Ok(ListEntry {
        name: t.name().to_string(),
        source,
        n_components: t.n_components(),
        stages: t.stage_counts().to_vec(),
        order: assess_order(t, 4, DEFAULT_TOL)?.certified_order,
        tags: flags.tags(),
        flags,
    })
}

pub fn list(c: &Common, dir: Option<&Path>) -> CmdResult {
    let mut entries = Vec::new();
    for name in registry::names() {
        entries.push(entry(&registry::get(name)?, "builtin".into())?);
    }
    if let Some(dir) = dir {
        let read =
            std::fs::read_dir(dir).map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let t = format::load(&p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            entries.push(entry(&t, p.display().to_string())?);
        }
    }
    let text = if c.json {
        json_text(&entries)?
    } else {
        let mut s = String::new();
        for e in &entries {
            let stages: Vec<String> = e.stages.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(
                s,
                "{} | N={} | s=({}) | order {} | {}",
                e.name,
                e.n_components,
                stages.join(","),
                e.order,
                e.tags.join(" | ")
            );
        }
        s
    };
    emit(c.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
