//! Grid-refinement studies against closed forms and β sweeps between the
//! Riemann–Liouville and Caputo ends.

use hilfer_core::exec::map_indices;
use hilfer_core::solver::solve_window;
use hilfer_core::special::ml;
use hilfer_core::{gamma_fn, make_graded_grid, Execution, IvpSpec, Result as CoreResult, WeightedTrajectory};

use crate::problem::{Problem, RhsKind};
use crate::CliError;

/// Errors below this are rounding noise; no order is reported against them.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// Endpoint rows of a β sweep must match their reference to this.
pub const ENDPOINT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub weighted_error: f64,
    /// log2 of the error ratio to the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub beta: f64,
    pub gamma: f64,
    pub x_end: f64,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
}

impl LimitRow {
    pub fn verified(&self) -> Option<bool> {
        self.abs_error.map(|e| e <= ENDPOINT_TOL)
    }
}

/// Weighted closed-form solution t^{1-γ} x(t), when the kind has one.
pub fn weighted_oracle(problem: &Problem, beta: f64) -> Option<Box<dyn Fn(f64) -> CoreResult<f64> + Send + Sync>> {
    let alpha = problem.alpha;
    let gamma = alpha + beta - alpha * beta;
    let x0 = problem.x0;
    let y0 = x0 / gamma_fn(gamma).ok()?;
    match problem.rhs {
        RhsKind::Zero => Some(Box::new(move |_| Ok(y0))),
        RhsKind::Linear { lambda } => Some(Box::new(move |t: f64| Ok(x0 * ml(alpha, gamma, lambda * t.powf(alpha))?))),
        RhsKind::PowerForcing { c, p } => {
            let k = c * gamma_fn(p + 1.0).ok()? / gamma_fn(p + 1.0 + alpha).ok()?;
            Some(Box::new(move |t: f64| Ok(y0 + k * t.powf(1.0 - gamma + p + alpha))))
        }
        RhsKind::PowerNonlinear { .. } => None,
    }
}

fn single_window(problem: &Problem, ivp: &IvpSpec, n: usize) -> CoreResult<WeightedTrajectory> {
    let r = problem.grading.unwrap_or_else(|| ivp.order.default_grading());
    let grid = make_graded_grid(0.0, ivp.horizon, n, r)?;
    solve_window(ivp, &grid, &problem.config(), None).map(|(traj, _)| traj)
}

pub fn convergence_study(problem: &Problem, grids: &[usize]) -> Result<Vec<StudyRow>, CliError> {
    let oracle = weighted_oracle(problem, problem.beta)
        .ok_or_else(|| CliError::Unsupported(format!("no closed-form oracle for kind {}", problem.rhs.name())))?;
    let ivp = problem.ivp()?;
    let errors = map_indices(Execution::Auto, grids.len(), |i| -> CoreResult<f64> {
        let traj = single_window(problem, &ivp, grids[i])?;
        let mut worst = 0.0_f64;
        for (&t, &y) in traj.nodes().iter().zip(traj.weighted_values()) {
            worst = worst.max((y - oracle(t)?).abs());
        }
        Ok(worst)
    });
    let mut rows: Vec<StudyRow> = Vec::with_capacity(grids.len());
    for (&n, err) in grids.iter().zip(errors) {
        let err = err?;
        let observed_order = rows.last().and_then(|prev| {
            let (e0, e1) = (prev.weighted_error, err);
            (e0 > ROUNDING_FLOOR && e1 > ROUNDING_FLOOR)
                .then(|| (e0 / e1).log2() / (n as f64 / prev.n as f64).log2())
        });
        rows.push(StudyRow {
            n,
            weighted_error: err,
            observed_order,
        });
    }
    Ok(rows)
}

pub fn limit_comparison(problem: &Problem, betas: &[f64]) -> Result<Vec<LimitRow>, CliError> {
    let RhsKind::Linear { lambda } = problem.rhs else {
        return Err(CliError::Unsupported(format!(
            "beta sweep needs a linear right-hand side, got {}",
            problem.rhs.name()
        )));
    };
    let (alpha, x0, t) = (problem.alpha, problem.x0, problem.horizon);
    let z = lambda * t.powf(alpha);
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let ivp = problem.ivp_with_beta(beta)?;
        let traj = single_window(problem, &ivp, problem.intervals)?;
        let x_end = traj.raw(traj.len() - 1);
        let reference = if beta == 0.0 {
            Some(x0 * t.powf(alpha - 1.0) * ml(alpha, alpha, z)?)
        } else if beta == 1.0 {
            Some(x0 * ml(alpha, 1.0, z)?)
        } else {
            None
        };
        rows.push(LimitRow {
            beta,
            gamma: ivp.order.gamma(),
            x_end,
            reference,
            abs_error: reference.map(|r| (x_end - r).abs()),
        });
    }
    Ok(rows)
}
