//! Window-by-window continuation with a blow-up monitor.

use crate::error::{HilferError, Result};
use crate::exec::{map_indices, Execution};
use crate::model::{make_graded_grid, GradedGrid, IvpSpec, SolveReport, SolveStatus, WeightedTrajectory};
use crate::quadrature::{dot, Rule};
use crate::solver::{estimate_m_bound, local_window_length, solve_window, volterra_rule, SolverConfig, WindowParams};
use crate::special::gamma_pos;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowLength {
    /// First window from the ball estimate, later ones from the extension estimate.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationPolicy {
    pub window_length: WindowLength,
    pub max_windows: usize,
    /// Threshold on |M(t)| = (t² + x(t)²)^{1/2}.
    pub blow_up_threshold: f64,
    pub shrink_factor: f64,
    pub min_window: f64,
    /// Ball radius b used by the automatic window estimates.
    pub b_radius: f64,
    /// Intervals per window.
    pub intervals: usize,
    /// Grading of the first window; `None` picks the order's default.
    pub grading: Option<f64>,
}

impl ContinuationPolicy {
    pub const DEFAULT_THRESHOLD: f64 = 1e8;

    pub fn for_horizon(horizon: f64) -> Self {
        Self {
            window_length: WindowLength::Auto,
            max_windows: 1000,
            blow_up_threshold: Self::DEFAULT_THRESHOLD,
            shrink_factor: 0.5,
            min_window: 1e-6 * horizon,
            b_radius: 1.0,
            intervals: 1024,
            grading: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_windows == 0 {
            return Err(HilferError::domain("max_windows", "must be at least 1"));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(HilferError::domain("shrink_factor", "must lie in (0, 1)"));
        }
        if !(self.blow_up_threshold > 0.0) {
            return Err(HilferError::domain("blow_up_threshold", "must be > 0"));
        }
        if !(self.min_window > 0.0) {
            return Err(HilferError::domain("min_window", "must be > 0"));
        }
        if !(self.b_radius > 0.0) {
            return Err(HilferError::domain("b_radius", "must be > 0"));
        }
        if self.intervals == 0 {
            return Err(HilferError::domain("N", "must be at least 1"));
        }
        if let WindowLength::Fixed(h) = self.window_length {
            if !(h > 0.0) || !h.is_finite() {
                return Err(HilferError::domain("window", format!("must be > 0, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlowUpStatus {
    NoBlowUp,
    BlowUpSuspected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpVerdict {
    pub status: BlowUpStatus,
    pub nu_hat: Option<f64>,
    pub max_norm_seen: f64,
}

/// |M(t_j)| = (t_j² + x(t_j)²)^{1/2} on raw values. The origin is skipped when
/// x is unbounded there (γ < 1); non-finite values count as a crossing.
pub fn blow_up_monitor(segment: &WeightedTrajectory, threshold: f64) -> BlowUpVerdict {
    let skip_origin = segment.order().gamma() < 1.0;
    let mut max_seen = 0.0_f64;
    let mut crossing = None;
    for (j, &t) in segment.nodes().iter().enumerate() {
        if t == 0.0 && skip_origin {
            continue;
        }
        let x = segment.raw(j);
        let m = if x.is_finite() { t.hypot(x) } else { f64::INFINITY };
        max_seen = max_seen.max(m);
        if crossing.is_none() && m > threshold {
            crossing = Some(t);
        }
    }
    BlowUpVerdict {
        status: if crossing.is_some() {
            BlowUpStatus::BlowUpSuspected
        } else {
            BlowUpStatus::NoBlowUp
        },
        nu_hat: crossing,
        max_norm_seen: max_seen,
    }
}

/// x₁(t) = x₀ t^{γ-1}/Γ(γ) + (1/Γ(α)) ∫₀^ν (t − s)^{α-1} f(s, x(s)) ds
/// at nodes beyond the end ν of an anchored history.
pub fn history_term(history: &WeightedTrajectory, ivp: &IvpSpec, new_nodes: &[f64]) -> Result<Vec<f64>> {
    if !history.is_anchored() || history.len() < 2 {
        return Err(HilferError::Contract("history must start at t = 0".into()));
    }
    let nu = history.end();
    if let Some(&t) = new_nodes.iter().find(|&&t| !(t > nu) || !t.is_finite()) {
        return Err(HilferError::Contract(format!("node {t} is not beyond the history end {nu}")));
    }
    let nodes = history.nodes();
    let mut g = vec![0.0; nodes.len()];
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        *gk = ivp.f(nodes[k], history.raw(k));
    }
    let q = volterra_rule(&ivp.order, Rule::Trapezoid);
    let gamma = ivp.order.gamma();
    let c = ivp.x0 / gamma_pos(gamma);
    Ok(map_indices(Execution::Auto, new_nodes.len(), |i| {
        let t = new_nodes[i];
        c * t.powf(gamma - 1.0) + dot(&q.tail(nodes, t), &g)
    }))
}

/// Solves the next window [ν, ν + h] on `intervals` uniform cells against
/// the full stored history.
pub fn extend_window(
    state: &SolveReport,
    ivp: &IvpSpec,
    h: f64,
    intervals: usize,
    cfg: &SolverConfig,
) -> Result<WeightedTrajectory> {
    let history = state
        .trajectory()
        .ok_or_else(|| HilferError::Contract("no converged segment to extend".into()))?;
    extend_from(&history, ivp, h, intervals, cfg).map(|(t, _)| t)
}

fn extend_from(
    history: &WeightedTrajectory,
    ivp: &IvpSpec,
    h: f64,
    intervals: usize,
    cfg: &SolverConfig,
) -> Result<(WeightedTrajectory, usize)> {
    let nu = history.end();
    let grid = GradedGrid::new(nu, nu + h, intervals, 1.0)?;
    solve_window(ivp, &grid, cfg, Some(history))
}

/// Window estimate away from the origin: min{1, (Γ(α+1) b / m)^{1/α}}.
pub fn extension_window_length(alpha: f64, b: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    (gamma_pos(alpha + 1.0) * b / m).powf(1.0 / alpha).min(1.0)
}

/// sup |f(t, x)| over t ∈ [ν, ν + 1], |x| ≤ |x(ν)| + b on a 32×32 lattice.
pub fn estimate_extension_m(ivp: &IvpSpec, nu: f64, x_nu: f64, b: f64) -> f64 {
    let r = x_nu.abs() + b;
    let mut m = 0.0_f64;
    for i in 0..32 {
        let t = nu + i as f64 / 31.0;
        for j in 0..32 {
            let x = -r + 2.0 * r * j as f64 / 31.0;
            let v = ivp.f(t, x).abs();
            if v.is_finite() {
                m = m.max(v);
            }
        }
    }
    m
}

fn escalating(norms: &[f64], threshold: f64) -> bool {
    match norms {
        [.., prev, last] => last > prev || (*prev >= threshold && *last >= threshold),
        _ => false,
    }
}

// |M| at the last node of a trajectory.
fn end_norm(traj: &WeightedTrajectory) -> f64 {
    let x = traj.raw(traj.len() - 1);
    traj.end().hypot(x)
}

/// Drives the window loop from t = 0 to the horizon.
///
/// A failed window is shrunk by `shrink_factor`; once it would drop below
/// `min_window` the run ends as `BlowUpSuspected` if the failed iterates'
/// raw sup escalated across the last two attempts, and `NotConverged`
/// otherwise. A converged window that crosses the threshold while growing
/// past its junction value ends the run as `BlowUpSuspected`.
pub fn solve_global(ivp: &IvpSpec, policy: &ContinuationPolicy, cfg: &SolverConfig) -> Result<SolveReport> {
    policy.validate()?;
    cfg.validate()?;
    let horizon = ivp.horizon;
    let order = ivp.order;
    let grading = policy.grading.unwrap_or_else(|| order.default_grading());
    let end_slack = 1e-12 * horizon;
    let mut report = SolveReport {
        segments: Vec::new(),
        status: SolveStatus::HorizonReached,
        blow_up_estimate: None,
        iterations: Vec::new(),
        apriori_bound: None,
        max_norm_seen: 0.0,
    };
    let mut history: Option<WeightedTrajectory> = None;
    let mut nu = 0.0_f64;
    while horizon - nu > end_slack {
        if report.segments.len() >= policy.max_windows {
            report.status = SolveStatus::NotConverged;
            return Ok(report);
        }
        let remaining = horizon - nu;
        let proposed = match (policy.window_length, &history) {
            (WindowLength::Fixed(h), _) => h,
            (WindowLength::Auto, None) => {
                let m = estimate_m_bound(ivp, policy.b_radius, horizon);
                local_window_length(&WindowParams::new(policy.b_radius, m)?, &order, ivp.delta, horizon)?
            }
            (WindowLength::Auto, Some(hist)) => {
                let m = estimate_extension_m(ivp, nu, hist.raw(hist.len() - 1), policy.b_radius);
                extension_window_length(order.alpha(), policy.b_radius, m)
            }
        };
        let mut h = proposed.max(policy.min_window).min(remaining);
        if remaining - h < end_slack {
            h = remaining;
        }
        let mut failed_norms: Vec<f64> = Vec::new();
        let (segment, iterations) = loop {
            let attempt = match &history {
                None => {
                    let end = if h == remaining { horizon } else { h };
                    let grid = make_graded_grid(0.0, end, policy.intervals, grading)?;
                    solve_window(ivp, &grid, cfg, None)
                }
                Some(hist) => {
                    let end = if h == remaining { horizon } else { nu + h };
                    extend_from(hist, ivp, end - nu, policy.intervals, cfg)
                }
            };
            match attempt {
                Ok(ok) => break ok,
                Err(HilferError::NotConverged(info)) => {
                    failed_norms.push(info.last_iterate.raw_sup());
                    let last_h = h;
                    h *= policy.shrink_factor;
                    if h < policy.min_window {
                        if escalating(&failed_norms, policy.blow_up_threshold) {
                            report.status = SolveStatus::BlowUpSuspected;
                            report.blow_up_estimate = Some(nu + last_h);
                        } else {
                            report.status = SolveStatus::NotConverged;
                        }
                        return Ok(report);
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let verdict = blow_up_monitor(&segment, policy.blow_up_threshold);
        report.max_norm_seen = report.max_norm_seen.max(verdict.max_norm_seen);
        let growing = history
            .as_ref()
            .map(|hist| verdict.max_norm_seen > end_norm(hist))
            .unwrap_or(false);
        let glued = match &history {
            None => segment.clone(),
            Some(hist) => hist.glue(&segment)?,
        };
        nu = segment.end();
        report.segments.push(segment);
        report.iterations.push(iterations);
        if verdict.status == BlowUpStatus::BlowUpSuspected && growing {
            report.status = SolveStatus::BlowUpSuspected;
            report.blow_up_estimate = verdict.nu_hat;
            return Ok(report);
        }
        history = Some(glued);
    }
    Ok(report)
}
