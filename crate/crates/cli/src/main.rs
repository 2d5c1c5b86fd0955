// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "gark",
    version,
    about = "Analyze and run generalized additive Runge-Kutta methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Load the tableau from a JSON file instead of the registry.
    #[arg(long, global = true)]
    pub file: Option<PathBuf>,

    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write the primary output to this path instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Reserved; all commands are deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct TableauArgs {
    /// Registry name (omit when --file is given).
    pub name: Option<String>,

    #[command(flatten)]
    pub params: Params,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Params {
    /// Coupling parameter of imex-mono2.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Free parameter of imex-sd2.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,

    /// Diagonal of the implicit part of imex-mono2.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Order-condition report; exits 1 when the requested order is not met.
    Check {
        #[command(flatten)]
        tableau: TableauArgs,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = gark::order::DEFAULT_TOL)]
        tol: f64,
        /// CSV residual table.
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        /// Report only the two-component IMEX coupling conditions, with the
        /// given order-4 list (general, reduced, equal-coupling).
        #[arg(long)]
        coupling: Option<gark::Order4Variant>,
    },
    /// Step-halving convergence study against the exact solution.
    Converge {
        /// `[TABLEAU] PROBLEM`; the problem is one of pr, pr-implicit-time,
        /// mpr, sl. Omit the tableau when --file is given.
        #[arg(num_args = 1..=2, required = true, value_names = ["TABLEAU", "PROBLEM"])]
        positional: Vec<String>,
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        h0: f64,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// sin, exp-decay or poly3.
        #[arg(long, default_value = "sin")]
        profile: gark::problems::SmoothProfile,
        #[arg(long, default_value_t = 25)]
        newton_max_iters: usize,
    },
    /// Algebraic stability report, or |R| on a grid with --grid.
    Stability {
        #[command(flatten)]
        tableau: TableauArgs,
        /// `re=lo:hi:n,im=lo:hi:n`. Given once, every component shares z;
        /// given once per component, the tensor product is sampled.
        #[arg(long, allow_hyphen_values = true)]
        grid: Vec<gark::stability::ComplexAxis>,
        /// Where to write the JSON report when the grid goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = gark::stability::DEFAULT_PSD_TOL)]
        psd_tol: f64,
    },
    /// Absolute monotonicity region on [0, rmax]^N.
    Monotonicity {
        #[command(flatten)]
        tableau: TableauArgs,
        #[arg(long, default_value_t = 2.0)]
        rmax: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Sweep the imex-mono2 coupling parameter over `lo:hi:n` and report
        /// the in-region cell count for each value.
        #[arg(long)]
        sweep_alpha: Option<String>,
    },
    /// Built-in tableaus with order and structure flags.
    List {
        /// Directory of additional JSON tableaus.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let result = match cli.command {
        Command::Check {
            tableau,
            order,
            tol,
            csv,
            coupling,
        } => commands::check(c, &tableau, order, tol, csv, coupling),
        Command::Converge {
            positional,
            params,
            mu,
            h0,
            levels,
            t_end,
            profile,
            newton_max_iters,
        } => commands::converge(
            c,
            &positional,
            params,
            mu,
            h0,
            levels,
            t_end,
            profile,
            newton_max_iters,
        ),
        Command::Stability {
            tableau,
            grid,
            report,
            psd_tol,
        } => commands::stability(c, &tableau, &grid, report.as_deref(), psd_tol),
        Command::Monotonicity {
            tableau,
            rmax,
            points,
            sweep_alpha,
        } => commands::monotonicity(c, &tableau, rmax, points, sweep_alpha.as_deref()),
        Command::List { registry } => commands::list(c, registry.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
