//! Orders, grids, weighted trajectories, problem descriptions and reports.
//!
//! Solutions of Hilfer problems behave like `t^(γ-1)` at the origin, so
//! everything downstream works with the weighted unknown
//! `y(t) = t^(1-γ) x(t)`, which is continuous on the closed interval.
//! Raw values are only recovered at nodes with `t > 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{HilferError, Result};
use crate::special::gamma_pos;

/// The pair (α, β) of a Hilfer derivative together with the type γ = α + β − αβ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilferOrder {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl HilferOrder {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(HilferError::domain(
                "alpha",
                format!("must lie in (0, 1), got {alpha}"),
            ));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(HilferError::domain(
                "beta",
                format!("must lie in [0, 1], got {beta}"),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            gamma: alpha + beta - alpha * beta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exponent of the weight `t^(1-γ)`.
    pub fn weight_exponent(&self) -> f64 {
        1.0 - self.gamma
    }

    /// Grading exponent r = min(4, max(1, 2/γ)) used when none is configured.
    pub fn default_grading(&self) -> f64 {
        (2.0 / self.gamma).clamp(1.0, 4.0)
    }

    /// Weighted value of the pure power solution, x₀/Γ(γ).
    pub fn initial_weighted(&self, x0: f64) -> f64 {
        x0 / gamma_pos(self.gamma)
    }

    /// Same (α, β) structure with a different β.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.alpha, beta)
    }
}

pub fn make_order(alpha: f64, beta: f64) -> Result<HilferOrder> {
    HilferOrder::new(alpha, beta)
}

/// `t^(1-γ) x`; the caller guarantees `t > 0`.
#[inline]
pub fn to_weighted(t: f64, gamma: f64, x: f64) -> f64 {
    if gamma == 1.0 {
        x
    } else {
        t.powf(1.0 - gamma) * x
    }
}

/// `t^(γ-1) y`, the inverse of [`to_weighted`] for `t > 0`.
#[inline]
pub fn from_weighted(t: f64, gamma: f64, y: f64) -> f64 {
    if gamma == 1.0 {
        y
    } else {
        t.powf(gamma - 1.0) * y
    }
}

/// Discretization of a window [a, b]; graded toward the origin when a = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedGrid {
    a: f64,
    b: f64,
    grading: f64,
    nodes: Vec<f64>,
}

impl GradedGrid {
    pub fn new(a: f64, b: f64, intervals: usize, grading: f64) -> Result<Self> {
        if intervals == 0 {
            return Err(HilferError::domain("N", "need at least one interval"));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(HilferError::domain("a", format!("must be >= 0, got {a}")));
        }
        if !(b > a) || !b.is_finite() {
            return Err(HilferError::domain("b", format!("must exceed a = {a}, got {b}")));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(HilferError::domain("r", format!("must be >= 1, got {grading}")));
        }
        let n = intervals as f64;
        let grading = if a > 0.0 { 1.0 } else { grading };
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|j| {
                let frac = j as f64 / n;
                if a == 0.0 {
                    if grading == 1.0 {
                        b * frac
                    } else {
                        b * frac.powf(grading)
                    }
                } else {
                    a + j as f64 * (b - a) / n
                }
            })
            .collect();
        nodes[0] = a;
        nodes[intervals] = b;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HilferError::domain(
                "N",
                "grid nodes collapse in floating point; reduce N or the grading",
            ));
        }
        Ok(Self {
            a,
            b,
            grading,
            nodes,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<f64> {
        self.nodes
    }
}

pub fn make_graded_grid(a: f64, b: f64, intervals: usize, grading: f64) -> Result<GradedGrid> {
    GradedGrid::new(a, b, intervals, grading)
}

/// Samples of the weighted unknown `y_j = t_j^(1-γ) x(t_j)` on a node set.
///
/// At `t = 0` the stored value is the limit of the weighted function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTrajectory {
    nodes: Vec<f64>,
    order: HilferOrder,
    weighted: Vec<f64>,
    truncated: bool,
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(HilferError::Contract("trajectory needs at least one node".into()));
    }
    if nodes[0] < 0.0 {
        return Err(HilferError::Contract("nodes must be nonnegative".into()));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HilferError::Contract("nodes must be strictly increasing".into()));
    }
    Ok(())
}

impl WeightedTrajectory {
    pub fn new(nodes: Vec<f64>, order: HilferOrder, weighted: Vec<f64>) -> Result<Self> {
        check_nodes(&nodes)?;
        if nodes.len() != weighted.len() {
            return Err(HilferError::Contract(format!(
                "{} nodes but {} values",
                nodes.len(),
                weighted.len()
            )));
        }
        if weighted.iter().any(|v| !v.is_finite()) {
            return Err(HilferError::Contract(
                "non-finite weighted value in an untruncated trajectory".into(),
            ));
        }
        Ok(Self {
            nodes,
            order,
            weighted,
            truncated: false,
        })
    }

    /// Trajectory cut short by a blow-up; non-finite values are allowed.
    pub fn truncated(nodes: Vec<f64>, order: HilferOrder, weighted: Vec<f64>) -> Result<Self> {
        check_nodes(&nodes)?;
        if nodes.len() != weighted.len() {
            return Err(HilferError::Contract("length mismatch".into()));
        }
        Ok(Self {
            nodes,
            order,
            weighted,
            truncated: true,
        })
    }

    pub fn from_grid(grid: &GradedGrid, order: HilferOrder, weighted: Vec<f64>) -> Result<Self> {
        Self::new(grid.nodes().to_vec(), order, weighted)
    }

    /// Samples a weighted function `y(t)`, which must be defined at `t = 0`.
    pub fn from_weighted_fn(
        nodes: &[f64],
        order: HilferOrder,
        y: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new(nodes.to_vec(), order, nodes.iter().map(|&t| y(t)).collect())
    }

    /// Samples a raw function `x(t)` at `t > 0`; `y_at_origin` supplies the
    /// weighted limit when the first node is 0.
    pub fn from_raw_fn(
        nodes: &[f64],
        order: HilferOrder,
        x: impl Fn(f64) -> f64,
        y_at_origin: f64,
    ) -> Result<Self> {
        let g = order.gamma();
        let vals = nodes
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    y_at_origin
                } else {
                    to_weighted(t, g, x(t))
                }
            })
            .collect();
        Self::new(nodes.to_vec(), order, vals)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn order(&self) -> HilferOrder {
        self.order
    }

    pub fn weighted_values(&self) -> &[f64] {
        &self.weighted
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn last_weighted(&self) -> f64 {
        self.weighted[self.weighted.len() - 1]
    }

    pub fn is_anchored(&self) -> bool {
        self.nodes[0] == 0.0
    }

    /// Raw value x(t_j). At t = 0 this is y₀ when γ = 1, otherwise ±∞
    /// (NaN when y₀ = 0).
    pub fn raw(&self, j: usize) -> f64 {
        let t = self.nodes[j];
        let y = self.weighted[j];
        let g = self.order.gamma();
        if t > 0.0 || g == 1.0 {
            from_weighted(t, g, y)
        } else if y == 0.0 {
            f64::NAN
        } else {
            y.signum() * f64::INFINITY
        }
    }

    pub fn raw_values(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.raw(j)).collect()
    }

    /// Discrete C_{1-γ} norm: max_j |y_j|.
    pub fn weighted_norm(&self) -> f64 {
        self.weighted.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Max_j |x(t_j)| over nodes with t > 0 (or all nodes when γ = 1).
    pub fn raw_sup(&self) -> f64 {
        (0..self.len())
            .filter(|&j| self.nodes[j] > 0.0 || self.order.gamma() == 1.0)
            .map(|j| self.raw(j).abs())
            .fold(0.0_f64, f64::max)
    }

    /// Appends `next`, which must start at this trajectory's last node with the
    /// same junction value. The junction node is kept once.
    pub fn glue(&self, next: &WeightedTrajectory) -> Result<Self> {
        if next.order != self.order {
            return Err(HilferError::Contract("cannot glue trajectories of different order".into()));
        }
        if next.start() != self.end() {
            return Err(HilferError::Contract(format!(
                "junction mismatch: {} vs {}",
                self.end(),
                next.start()
            )));
        }
        if next.weighted[0] != self.last_weighted() {
            return Err(HilferError::Contract(format!(
                "junction values differ: {} vs {}",
                self.last_weighted(),
                next.weighted[0]
            )));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&next.nodes[1..]);
        let mut weighted = self.weighted.clone();
        weighted.extend_from_slice(&next.weighted[1..]);
        Ok(Self {
            nodes,
            order: self.order,
            weighted,
            truncated: self.truncated || next.truncated,
        })
    }

    /// Glues a contiguous sequence of segments.
    pub fn concat(segments: &[WeightedTrajectory]) -> Result<Self> {
        let (first, rest) = segments
            .split_first()
            .ok_or_else(|| HilferError::Contract("no segments to concatenate".into()))?;
        rest.iter().try_fold(first.clone(), |acc, s| acc.glue(s))
    }
}

/// Scalar right-hand side f(t, x).
pub trait RightHandSide: Send + Sync {
    fn eval(&self, t: f64, x: f64) -> f64;
}

impl<F> RightHandSide for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, x: f64) -> f64 {
        self(t, x)
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Lipschitz data for f in x: constant L or a continuous l(t).
#[derive(Clone)]
pub enum Lipschitz {
    Constant(f64),
    Function(ScalarFn),
}

impl Lipschitz {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Lipschitz::Constant(l) => *l,
            Lipschitz::Function(f) => f(t),
        }
    }

    /// Max of l over [a, b], sampled at 257 points (exact for constants).
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        match self {
            Lipschitz::Constant(l) => *l,
            Lipschitz::Function(f) => (0..=256)
                .map(|i| f(a + (b - a) * i as f64 / 256.0))
                .fold(0.0_f64, f64::max),
        }
    }
}

impl fmt::Debug for Lipschitz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lipschitz::Constant(l) => write!(f, "Lipschitz::Constant({l})"),
            Lipschitz::Function(_) => write!(f, "Lipschitz::Function(..)"),
        }
    }
}

/// Growth envelope |f(t, x)| ≤ l(t) m(|x|) + p(t).
#[derive(Clone)]
pub struct GrowthEnvelope {
    pub l: ScalarFn,
    pub m: ScalarFn,
    pub p: ScalarFn,
}

impl GrowthEnvelope {
    pub fn new(
        l: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            l: Arc::new(l),
            m: Arc::new(m),
            p: Arc::new(p),
        }
    }
}

impl fmt::Debug for GrowthEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GrowthEnvelope(..)")
    }
}

/// Scalar Hilfer problem D^{α,β}x = f(t, x), I^{1-γ}x(0⁺) = x₀ on (0, T].
#[derive(Clone)]
pub struct IvpSpec {
    pub order: HilferOrder,
    pub x0: f64,
    pub rhs: Arc<dyn RightHandSide>,
    pub delta: f64,
    pub horizon: f64,
    pub lipschitz: Option<Lipschitz>,
    pub envelope: Option<GrowthEnvelope>,
}

impl IvpSpec {
    pub fn new(
        order: HilferOrder,
        x0: f64,
        rhs: impl RightHandSide + 'static,
        delta: f64,
        horizon: f64,
    ) -> Result<Self> {
        Self::from_arc(order, x0, Arc::new(rhs), delta, horizon)
    }

    pub fn from_arc(
        order: HilferOrder,
        x0: f64,
        rhs: Arc<dyn RightHandSide>,
        delta: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !x0.is_finite() {
            return Err(HilferError::domain("x0", "must be finite"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(HilferError::domain("delta", format!("must lie in [0, 1), got {delta}")));
        }
        if !(delta < order.alpha()) {
            return Err(HilferError::domain(
                "delta",
                format!("must be below alpha = {}, got {delta}", order.alpha()),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(HilferError::domain("horizon", format!("must be > 0, got {horizon}")));
        }
        Ok(Self {
            order,
            x0,
            rhs,
            delta,
            horizon,
            lipschitz: None,
            envelope: None,
        })
    }

    pub fn with_lipschitz(mut self, lipschitz: Lipschitz) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn with_envelope(mut self, envelope: GrowthEnvelope) -> Self {
        self.envelope = Some(envelope);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(HilferError::domain("horizon", format!("must be > 0, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_order(mut self, order: HilferOrder) -> Result<Self> {
        if !(self.delta < order.alpha()) {
            return Err(HilferError::domain("delta", "must be below alpha"));
        }
        self.order = order;
        Ok(self)
    }

    #[inline]
    pub fn f(&self, t: f64, x: f64) -> f64 {
        self.rhs.eval(t, x)
    }

    /// x₀/Γ(γ).
    pub fn initial_weighted(&self) -> f64 {
        self.order.initial_weighted(self.x0)
    }
}

impl fmt::Debug for IvpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpSpec")
            .field("order", &self.order)
            .field("x0", &self.x0)
            .field("delta", &self.delta)
            .field("horizon", &self.horizon)
            .field("lipschitz", &self.lipschitz)
            .field("envelope", &self.envelope.is_some())
            .finish()
    }
}

/// Vector right-hand side: writes f_i(t, x) into `out`.
pub trait SystemRhs: Send + Sync {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
}

impl<F> SystemRhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self(t, x, out)
    }
}

/// System version: all components share one order.
#[derive(Clone)]
pub struct SystemIvpSpec {
    pub order: HilferOrder,
    pub x0: Vec<f64>,
    pub rhs: Arc<dyn SystemRhs>,
    pub deltas: Vec<f64>,
    pub horizon: f64,
    pub lipschitz: Option<Vec<f64>>,
}

impl SystemIvpSpec {
    pub fn new(
        order: HilferOrder,
        x0: Vec<f64>,
        rhs: impl SystemRhs + 'static,
        deltas: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        if x0.is_empty() {
            return Err(HilferError::domain("x0", "system needs at least one component"));
        }
        if deltas.len() != x0.len() {
            return Err(HilferError::domain("deltas", "one delta per component required"));
        }
        if let Some(d) = deltas
            .iter()
            .find(|&&d| !(0.0..1.0).contains(&d) || !(d < order.alpha()))
        {
            return Err(HilferError::domain(
                "deltas",
                format!("each delta must lie in [0, alpha), got {d}"),
            ));
        }
        if !(horizon > 0.0) {
            return Err(HilferError::domain("horizon", "must be > 0"));
        }
        Ok(Self {
            order,
            x0,
            rhs: Arc::new(rhs),
            deltas,
            horizon,
            lipschitz: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

impl fmt::Debug for SystemIvpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemIvpSpec")
            .field("order", &self.order)
            .field("x0", &self.x0)
            .field("deltas", &self.deltas)
            .field("horizon", &self.horizon)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    BlowUpSuspected,
    HorizonReached,
    NotConverged,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::BlowUpSuspected => "BlowUpSuspected",
            SolveStatus::HorizonReached => "HorizonReached",
            SolveStatus::NotConverged => "NotConverged",
        };
        f.write_str(s)
    }
}

/// Outcome of a (possibly multi-window) solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub segments: Vec<WeightedTrajectory>,
    pub status: SolveStatus,
    pub blow_up_estimate: Option<f64>,
    pub iterations: Vec<usize>,
    pub apriori_bound: Option<Vec<f64>>,
    /// Largest |M(t)| = (t² + x²)^{1/2} observed by the blow-up monitor.
    pub max_norm_seen: f64,
}

impl SolveReport {
    /// Report holding a single converged window.
    pub fn single(segment: WeightedTrajectory, iterations: usize) -> Self {
        Self {
            segments: vec![segment],
            status: SolveStatus::Converged,
            blow_up_estimate: None,
            iterations: vec![iterations],
            apriori_bound: None,
            max_norm_seen: 0.0,
        }
    }

    /// All segments glued into one trajectory from the origin.
    pub fn trajectory(&self) -> Option<WeightedTrajectory> {
        if self.segments.is_empty() {
            None
        } else {
            WeightedTrajectory::concat(&self.segments).ok()
        }
    }

    pub fn end(&self) -> Option<f64> {
        self.segments.last().map(|s| s.end())
    }

    pub fn windows(&self) -> usize {
        self.segments.len()
    }
}
