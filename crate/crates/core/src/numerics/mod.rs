//! Numerical building blocks shared by the stability modules.

mod contour;
mod newton;
mod ode;

pub use contour::{
    refine_contour, winding_number, Contour, ContourKind, ContourSample, DEFAULT_MAX_DEPTH,
    MAX_WINDING_PHASE_STEP, MIN_NODES,
};
pub use newton::{fd_step, newton_root, newton_root_counted};
pub use ode::{
    integrate_adaptive, integrate_with_observer, FnField, OdeField, SolveStats, SolverOptions,
    DEFAULT_TOL, EVALS_PER_STEP,
};
