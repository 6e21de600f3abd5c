//! Single-window solvers for the Volterra form of the Hilfer problem
//!
//!   x(t) = x₀ t^{γ-1}/Γ(γ) + (1/Γ(α)) ∫₀ᵗ (t − s)^{α-1} f(s, x(s)) ds.
//!
//! A window is the grid [a, b]. The first window is anchored at 0. Later
//! windows start at the last node of a stored history, whose contribution
//! to every new node is computed once and then frozen.

use crate::error::{HilferError, NotConvergedInfo, Result};
use crate::exec::{map_indices, map_range, Execution};
use crate::fracops::integrate_samples;
use crate::model::{from_weighted, to_weighted, GradedGrid, HilferOrder, IvpSpec, SystemIvpSpec, WeightedTrajectory};
use crate::quadrature::{dot, HeadCell, ProductRule, Rule};
use crate::special::gamma_pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Picard,
    ImplicitStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub rule: Rule,
    /// Stopping threshold on the update norm, scaled by max(1, ‖iterate‖).
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor ω in (0, 1]: y ← (1 − ω) y + ω B(y).
    pub damping: f64,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Picard,
            rule: Rule::Trapezoid,
            tol: 1e-10,
            max_iter: 500,
            damping: 1.0,
            execution: Execution::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(HilferError::domain("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(HilferError::domain("max_iter", "must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(HilferError::domain(
                "damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        Ok(())
    }
}

/// Ball radius b and bound M with t^δ|f(t, x)| ≤ M on the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    pub b_radius: f64,
    pub m_bound: f64,
}

impl WindowParams {
    pub fn new(b_radius: f64, m_bound: f64) -> Result<Self> {
        if !(b_radius > 0.0) || !b_radius.is_finite() {
            return Err(HilferError::domain("b_radius", format!("must be > 0, got {b_radius}")));
        }
        if !(m_bound >= 0.0) {
            return Err(HilferError::domain("M_bound", format!("must be >= 0, got {m_bound}")));
        }
        Ok(Self { b_radius, m_bound })
    }
}

/// h = min{(b Γ(α−δ+1) / (M Γ(1−δ)))^{1/(α−δ)}, T}.
pub fn local_window_length(wp: &WindowParams, order: &HilferOrder, delta: f64, horizon: f64) -> Result<f64> {
    let alpha = order.alpha();
    if !(0.0..1.0).contains(&delta) || !(delta < alpha) {
        return Err(HilferError::domain(
            "delta",
            format!("must lie in [0, alpha = {alpha}), got {delta}"),
        ));
    }
    if !(horizon > 0.0) {
        return Err(HilferError::domain("T", format!("must be > 0, got {horizon}")));
    }
    if wp.m_bound == 0.0 {
        return Ok(horizon);
    }
    let e = alpha - delta;
    let base = wp.b_radius * gamma_pos(e + 1.0) / (wp.m_bound * gamma_pos(1.0 - delta));
    Ok(base.powf(1.0 / e).min(horizon))
}

/// Minimum of the per-component window lengths.
pub fn local_window_length_system(
    params: &[WindowParams],
    order: &HilferOrder,
    deltas: &[f64],
    horizon: f64,
) -> Result<f64> {
    if params.is_empty() || params.len() != deltas.len() {
        return Err(HilferError::domain("b_i, M_i", "one (b, M, delta) triple per component"));
    }
    params
        .iter()
        .zip(deltas)
        .try_fold(horizon, |h, (wp, &d)| Ok(h.min(local_window_length(wp, order, d, horizon)?)))
}

const LATTICE: usize = 32;
const M_SAFETY: f64 = 1.25;

/// Estimates sup t^δ|f(t, x)| over t ∈ (0, T], |t^{1-γ}x − x₀/Γ(γ)| ≤ b on a
/// 32×32 lattice, times a safety factor of 1.25. Non-finite samples are skipped.
pub fn estimate_m_bound(ivp: &IvpSpec, b: f64, horizon: f64) -> f64 {
    let g = ivp.order.gamma();
    let y0 = ivp.initial_weighted();
    let mut m = 0.0_f64;
    for i in 1..=LATTICE {
        let t = horizon * i as f64 / LATTICE as f64;
        let td = t.powf(ivp.delta);
        for j in 0..LATTICE {
            let y = y0 - b + 2.0 * b * j as f64 / (LATTICE - 1) as f64;
            let v = td * ivp.f(t, from_weighted(t, g, y)).abs();
            if v.is_finite() {
                m = m.max(v);
            }
        }
    }
    M_SAFETY * m
}

struct Window {
    /// Global nodes from 0 through the window end.
    nodes: Vec<f64>,
    /// Index of the window's first node.
    m: usize,
    y0: f64,
    y_start: f64,
    anchored: bool,
    /// Frozen contribution of nodes 0..=m to each new node (raw units).
    known: Vec<f64>,
    /// local[i][k]: weight of node m+1+k at new node m+1+i.
    local: Vec<Vec<f64>>,
    /// t^{1-γ} and t^{γ-1} at the new nodes.
    wt: Vec<f64>,
    xt: Vec<f64>,
}

impl Window {
    fn len(&self) -> usize {
        self.local.len()
    }

    fn t(&self, i: usize) -> f64 {
        self.nodes[self.m + 1 + i]
    }

    fn trajectory(&self, order: HilferOrder, y: &[f64]) -> WeightedTrajectory {
        let nodes = self.nodes[self.m..self.m + 1 + y.len()].to_vec();
        let mut vals = Vec::with_capacity(y.len() + 1);
        vals.push(self.y_start);
        vals.extend_from_slice(y);
        if vals.iter().all(|v| v.is_finite()) {
            WeightedTrajectory::new(nodes, order, vals)
        } else {
            WeightedTrajectory::truncated(nodes, order, vals)
        }
        .expect("window nodes are increasing by construction")
    }

    // Norm used for the stopping test: weighted on anchored windows, plain otherwise.
    fn update_norm(&self, prev: &[f64], next: &[f64]) -> f64 {
        prev.iter()
            .zip(next)
            .enumerate()
            .map(|(i, (a, b))| {
                let d = (b - a).abs();
                if self.anchored {
                    d
                } else {
                    d * self.xt[i]
                }
            })
            .fold(0.0, f64::max)
    }

    fn scale(&self, y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, v)| if self.anchored { v.abs() } else { (v * self.xt[i]).abs() })
            .fold(1.0, f64::max)
    }
}

fn window_nodes(grid: &GradedGrid, history: Option<&WeightedTrajectory>) -> Result<(Vec<f64>, usize)> {
    match history {
        None => {
            if grid.a() != 0.0 {
                return Err(HilferError::Contract(format!(
                    "a window starting at {} needs a history",
                    grid.a()
                )));
            }
            Ok((grid.nodes().to_vec(), 0))
        }
        Some(h) => {
            if !h.is_anchored() || h.len() < 2 {
                return Err(HilferError::Contract("history must start at t = 0".into()));
            }
            if h.end() != grid.a() {
                return Err(HilferError::Contract(format!(
                    "history ends at {} but the window starts at {}",
                    h.end(),
                    grid.a()
                )));
            }
            let mut nodes = h.nodes().to_vec();
            nodes.extend_from_slice(&grid.nodes()[1..]);
            Ok((nodes, h.len() - 1))
        }
    }
}

pub(crate) fn volterra_rule(order: &HilferOrder, rule: Rule) -> ProductRule {
    ProductRule::new(
        order.alpha() - 1.0,
        rule,
        HeadCell::Origin { mu: order.gamma() - 1.0 },
        1.0 / gamma_pos(order.alpha()),
    )
}

fn build_window(
    order: &HilferOrder,
    y0: f64,
    nodes: Vec<f64>,
    m: usize,
    g_hist: &[f64],
    y_start: f64,
    cfg: &SolverConfig,
) -> Window {
    let q = volterra_rule(order, cfg.rule);
    let gamma = order.gamma();
    let rows: Vec<(f64, Vec<f64>)> = map_range(cfg.execution, m + 1, nodes.len(), |n| {
        let mut row = q.row(&nodes, n);
        let known = dot(&row[..=m], g_hist);
        (known, row.split_off(m + 1))
    });
    let (known, local): (Vec<f64>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let new = &nodes[m + 1..];
    let wt = new.iter().map(|&t| to_weighted(t, gamma, 1.0)).collect();
    let xt = new.iter().map(|&t| from_weighted(t, gamma, 1.0)).collect();
    Window {
        anchored: m == 0,
        nodes,
        m,
        y0,
        y_start,
        known,
        local,
        wt,
        xt,
    }
}

fn prepare(ivp: &IvpSpec, grid: &GradedGrid, cfg: &SolverConfig, history: Option<&WeightedTrajectory>) -> Result<Window> {
    cfg.validate()?;
    if let Some(h) = history {
        if h.order() != ivp.order {
            return Err(HilferError::Contract("history has a different order".into()));
        }
    }
    let (nodes, m) = window_nodes(grid, history)?;
    let y0 = ivp.initial_weighted();
    let (g_hist, y_start) = match history {
        None => (vec![0.0], y0),
        Some(h) => {
            let mut g = vec![0.0; m + 1];
            for (k, gk) in g.iter_mut().enumerate().skip(1) {
                *gk = ivp.f(nodes[k], h.raw(k));
            }
            (g, h.last_weighted())
        }
    };
    Ok(build_window(&ivp.order, y0, nodes, m, &g_hist, y_start, cfg))
}

const DIVERGENCE_LIMIT: f64 = 1e200;

fn diverged(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

fn not_converged(
    last: WeightedTrajectory,
    contraction: f64,
    iterations: usize,
    at: Option<f64>,
    diverged: bool,
) -> HilferError {
    HilferError::NotConverged(Box::new(NotConvergedInfo {
        last_iterate: last,
        contraction,
        iterations,
        at,
        component: None,
        diverged,
    }))
}

/// Picard iteration y ← weighted(B x) from the constant seed.
///
/// The seed is x₀/Γ(γ) on the first window and the junction value on later
/// windows. Returns the converged window and the number of sweeps.
pub fn picard_solve(
    ivp: &IvpSpec,
    grid: &GradedGrid,
    cfg: &SolverConfig,
    history: Option<&WeightedTrajectory>,
) -> Result<(WeightedTrajectory, usize)> {
    picard_solve_observed(ivp, grid, cfg, history, |_, _| {})
}

/// [`picard_solve`] calling `observer(sweep, weighted window values)` after every sweep.
pub fn picard_solve_observed<F>(
    ivp: &IvpSpec,
    grid: &GradedGrid,
    cfg: &SolverConfig,
    history: Option<&WeightedTrajectory>,
    mut observer: F,
) -> Result<(WeightedTrajectory, usize)>
where
    F: FnMut(usize, &[f64]),
{
    let w = prepare(ivp, grid, cfg, history)?;
    let n = w.len();
    let mut y = vec![w.y_start; n];
    let mut prev_delta = f64::NAN;
    let mut contraction = f64::NAN;
    let omega = cfg.damping;
    let mut full = vec![w.y_start; n + 1];
    for sweep in 1..=cfg.max_iter {
        let g: Vec<f64> = map_indices(cfg.execution, n, |i| ivp.f(w.t(i), w.xt[i] * y[i]));
        let b: Vec<f64> = map_indices(cfg.execution, n, |i| {
            w.y0 + w.wt[i] * (w.known[i] + dot(&w.local[i], &g[..=i]))
        });
        let next: Vec<f64> = if omega == 1.0 {
            b
        } else {
            y.iter().zip(&b).map(|(a, b)| (1.0 - omega) * a + omega * b).collect()
        };
        if diverged(&next) {
            return Err(not_converged(w.trajectory(ivp.order, &y), contraction, sweep, None, true));
        }
        let delta = w.update_norm(&y, &next);
        if prev_delta > 0.0 {
            contraction = delta / prev_delta;
        }
        y = next;
        full[1..].copy_from_slice(&y);
        observer(sweep, &full);
        if delta < cfg.tol * w.scale(&y) {
            return Ok((w.trajectory(ivp.order, &y), sweep));
        }
        prev_delta = delta;
    }
    Err(not_converged(w.trajectory(ivp.order, &y), contraction, cfg.max_iter, None, false))
}

/// Per-node bookkeeping of the marching solver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepStats {
    pub inner_iterations: Vec<usize>,
    /// Largest observed ratio of successive inner updates.
    pub max_contraction: f64,
}

impl StepStats {
    pub fn total(&self) -> usize {
        self.inner_iterations.iter().sum()
    }

    pub fn max_inner(&self) -> usize {
        self.inner_iterations.iter().copied().max().unwrap_or(0)
    }
}

/// Node-by-node implicit product integration; each node solves a damped
/// scalar fixed point with at most `cfg.max_iter` iterations.
pub fn step_solve(
    ivp: &IvpSpec,
    grid: &GradedGrid,
    cfg: &SolverConfig,
    history: Option<&WeightedTrajectory>,
) -> Result<WeightedTrajectory> {
    step_solve_with_stats(ivp, grid, cfg, history).map(|(t, _)| t)
}

pub fn step_solve_with_stats(
    ivp: &IvpSpec,
    grid: &GradedGrid,
    cfg: &SolverConfig,
    history: Option<&WeightedTrajectory>,
) -> Result<(WeightedTrajectory, StepStats)> {
    let w = prepare(ivp, grid, cfg, history)?;
    let n = w.len();
    let omega = cfg.damping;
    let mut y: Vec<f64> = Vec::with_capacity(n);
    let mut g: Vec<f64> = Vec::with_capacity(n);
    let mut stats = StepStats::default();
    for i in 0..n {
        let t = w.t(i);
        let row = &w.local[i];
        let known = w.known[i] + dot(&row[..i], &g);
        let wnn = row[i];
        let mut cur = y.last().copied().unwrap_or(w.y_start);
        let weight = if w.anchored { 1.0 } else { w.xt[i] };
        let mut prev_delta = f64::NAN;
        let mut done = false;
        let mut iters = 0;
        for k in 1..=cfg.max_iter {
            iters = k;
            let phi = w.y0 + w.wt[i] * (known + wnn * ivp.f(t, w.xt[i] * cur));
            let next = (1.0 - omega) * cur + omega * phi;
            if !next.is_finite() || next.abs() > DIVERGENCE_LIMIT {
                return Err(not_converged(w.trajectory(ivp.order, &y), prev_delta, k, Some(t), true));
            }
            let delta = (next - cur).abs() * weight;
            if prev_delta > 0.0 {
                stats.max_contraction = stats.max_contraction.max(delta / prev_delta);
            }
            cur = next;
            if delta < cfg.tol * (cur.abs() * weight).max(1.0) {
                done = true;
                break;
            }
            prev_delta = delta;
        }
        if !done {
            let mut partial = y.clone();
            partial.push(cur);
            return Err(not_converged(
                w.trajectory(ivp.order, &partial),
                stats.max_contraction,
                iters,
                Some(t),
                false,
            ));
        }
        stats.inner_iterations.push(iters);
        g.push(ivp.f(t, w.xt[i] * cur));
        y.push(cur);
    }
    Ok((w.trajectory(ivp.order, &y), stats))
}

/// Runs the configured method. Iterations are Picard sweeps, or the total
/// number of inner iterations for the marching method.
pub fn solve_window(
    ivp: &IvpSpec,
    grid: &GradedGrid,
    cfg: &SolverConfig,
    history: Option<&WeightedTrajectory>,
) -> Result<(WeightedTrajectory, usize)> {
    match cfg.method {
        Method::Picard => picard_solve(ivp, grid, cfg, history),
        Method::ImplicitStep => step_solve_with_stats(ivp, grid, cfg, history).map(|(t, s)| (t, s.total())),
    }
}

/// max_j |y_j − x₀/Γ(γ) − t_j^{1-γ} I^α f(·, x)(t_j)| for a trajectory from 0.
///
/// Returns NaN when the trajectory does not start at 0.
pub fn residual(ivp: &IvpSpec, traj: &WeightedTrajectory) -> f64 {
    residual_profile(ivp, traj)
        .map(|r| r.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Pointwise absolute weighted residuals.
pub fn residual_profile(ivp: &IvpSpec, traj: &WeightedTrajectory) -> Option<Vec<f64>> {
    if !traj.is_anchored() {
        return None;
    }
    let order = ivp.order;
    let gamma = order.gamma();
    let nodes = traj.nodes();
    let mut g = vec![0.0; nodes.len()];
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        *gk = ivp.f(nodes[k], traj.raw(k));
    }
    let integral = integrate_samples(
        order.alpha(),
        nodes,
        &g,
        HeadCell::Weighted { mu: gamma - 1.0 },
        Rule::Trapezoid,
        Execution::Auto,
    );
    let y0 = ivp.initial_weighted();
    let y = traj.weighted_values();
    Some(
        (0..nodes.len())
            .map(|j| {
                let model = if j == 0 { y0 } else { y0 + to_weighted(nodes[j], gamma, integral[j]) };
                (y[j] - model).abs()
            })
            .collect(),
    )
}

/// Jacobi–Picard sweeps for a system on one anchored grid.
pub fn solve_system(sys: &SystemIvpSpec, grid: &GradedGrid, cfg: &SolverConfig) -> Result<Vec<WeightedTrajectory>> {
    cfg.validate()?;
    let (nodes, _) = window_nodes(grid, None)?;
    let order = sys.order;
    let dim = sys.dim();
    let y0: Vec<f64> = sys.x0.iter().map(|&x| order.initial_weighted(x)).collect();
    let w = build_window(&order, 0.0, nodes, 0, &[0.0], 0.0, cfg);
    let n = w.len();
    let mut y: Vec<Vec<f64>> = y0.iter().map(|&v| vec![v; n]).collect();
    let omega = cfg.damping;
    let to_traj = |c: usize, vals: &[f64]| {
        let mut v = vec![y0[c]];
        v.extend_from_slice(vals);
        WeightedTrajectory::new(w.nodes.clone(), order, v.clone())
            .or_else(|_| WeightedTrajectory::truncated(w.nodes.clone(), order, v))
            .expect("grid is increasing")
    };
    let mut prev = vec![f64::NAN; dim];
    let mut contraction = vec![f64::NAN; dim];
    for sweep in 1..=cfg.max_iter {
        // g[i][c] = f_c(t_i, x(t_i))
        let g: Vec<Vec<f64>> = map_indices(cfg.execution, n, |i| {
            let x: Vec<f64> = (0..dim).map(|c| w.xt[i] * y[c][i]).collect();
            let mut out = vec![0.0; dim];
            sys.rhs.eval(w.t(i), &x, &mut out);
            out
        });
        let gc: Vec<Vec<f64>> = (0..dim).map(|c| g.iter().map(|r| r[c]).collect()).collect();
        let rows: Vec<Vec<f64>> = map_indices(cfg.execution, n, |i| {
            (0..dim)
                .map(|c| y0[c] + w.wt[i] * dot(&w.local[i], &gc[c][..=i]))
                .collect()
        });
        let mut all_done = true;
        let mut first_bad = None;
        for c in 0..dim {
            let next: Vec<f64> = (0..n)
                .map(|i| (1.0 - omega) * y[c][i] + omega * rows[i][c])
                .collect();
            if diverged(&next) {
                return Err(HilferError::NotConverged(Box::new(NotConvergedInfo {
                    last_iterate: to_traj(c, &y[c]),
                    contraction: contraction[c],
                    iterations: sweep,
                    at: None,
                    component: Some(c),
                    diverged: true,
                })));
            }
            let delta = w.update_norm(&y[c], &next);
            if prev[c] > 0.0 {
                contraction[c] = delta / prev[c];
            }
            prev[c] = delta;
            let scale = w.scale(&next);
            if delta >= cfg.tol * scale {
                all_done = false;
                first_bad.get_or_insert(c);
            }
            y[c] = next;
        }
        if all_done {
            return Ok((0..dim).map(|c| to_traj(c, &y[c])).collect());
        }
        if sweep == cfg.max_iter {
            let c = first_bad.unwrap_or(0);
            return Err(HilferError::NotConverged(Box::new(NotConvergedInfo {
                last_iterate: to_traj(c, &y[c]),
                contraction: contraction[c],
                iterations: sweep,
                at: None,
                component: Some(c),
                diverged: false,
            })));
        }
    }
    unreachable!("loop returns on its last sweep")
}
