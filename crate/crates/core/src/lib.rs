//! Generalized additive Runge-Kutta (GARK) methods.
//!
//! A GARK method treats each term of an additively split ODE
//! `y' = f^0(y) + ... + f^{N-1}(y)` with its own Runge-Kutta stages, coupled
//! through off-diagonal coefficient blocks. This crate provides
//!
//! - [`GarkTableau`] and a small [`registry`] of methods,
//! - order-condition residuals through order four ([`order`]),
//! - linear and algebraic stability analysis ([`stability`]),
//! - absolute monotonicity regions ([`monotonicity`]),
//! - a fixed-step integrator for DIRK-type couplings ([`integrator`]),
//! - test problems with exact solutions ([`problems`]) and convergence
//!   sweeps ([`convergence`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod format;
pub mod integrator;
pub mod linalg;
pub mod monotonicity;
pub mod order;
pub mod output;
pub mod problems;
pub mod registry;
pub mod stability;
pub mod tableau;

pub use convergence::{convergence_sweep, ConvergenceTable};
pub use error::{GarkError, Result};
pub use integrator::{integrate, schedule_stages, SolverConfig, SplitOde, StageSchedule, Trajectory};
pub use linalg::{Matrix, Vector};
pub use monotonicity::{HatSystem, MonotonicityGrid};
pub use order::{assess_order, ConditionId, ConditionReport, ConditionResidual, Order4Variant};
pub use stability::{CompositeTableau, StabilityReport};
pub use tableau::{GarkTableau, StructureFlags};

pub use num_complex::Complex64;
