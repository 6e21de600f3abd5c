//! Numerical solution of initial value problems for Hilfer fractional
//! differential equations D^{α,β} x = f(t, x), I^{1-γ} x(0⁺) = x₀, with
//! 0 < α < 1, 0 ≤ β ≤ 1 and γ = α + β − αβ.
//!
//! The problem is solved through its Volterra integral form on graded grids
//! by product integration, window by window, with a blow-up monitor and
//! a priori bounds from the singular Gronwall inequality.

pub mod analysis;
pub mod continuation;
pub mod error;
pub mod exec;
pub mod fracops;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use analysis::{
    gronwall_bound, growth_certificate, uniqueness_certificate, Certificate, CertificateKind, ValidHorizon,
};
pub use continuation::{
    blow_up_monitor, extend_window, history_term, solve_global, BlowUpStatus, BlowUpVerdict, ContinuationPolicy,
    WindowLength,
};
pub use error::{HilferError, NotConvergedInfo, Result};
pub use exec::Execution;
pub use fracops::{hilfer_derivative, power_rule, rl_derivative, rl_integral, PowerFunction};
pub use model::{
    make_graded_grid, make_order, GradedGrid, GrowthEnvelope, HilferOrder, IvpSpec, Lipschitz, SolveReport,
    SolveStatus, SystemIvpSpec, WeightedTrajectory,
};
pub use quadrature::Rule;
pub use solver::{
    local_window_length, picard_solve, residual, solve_system, step_solve, Method, SolverConfig, WindowParams,
};
pub use special::{gamma_fn, mittag_leffler, MlParams};
