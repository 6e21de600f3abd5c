//! Discrete Riemann–Liouville integral and derivative, the Hilfer derivative,
//! and the power rule for monomials.
//!
//! Trajectories are stored in weighted form. Integrals are evaluated from the
//! raw samples x(t_j), j ≥ 1, with the origin cell treated as s^{γ-1} times a
//! constant. The outer classical derivative of the Hilfer composition acts on
//! the intermediate I^{(1-β)(1-α)}x, which is bounded at the origin for any
//! x in C_{1-γ}; differencing it avoids the t^{γ-1} singularity of x itself.

use crate::error::{HilferError, Result};
use crate::exec::{map_range, Execution};
use crate::model::{to_weighted, HilferOrder, WeightedTrajectory};
use crate::quadrature::{dot, HeadCell, ProductRule, Rule};
use crate::special::gamma_pos;

/// coeff · t^exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFunction {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerFunction {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0) {
            return Err(HilferError::domain(
                "exponent",
                format!("must exceed -1 for integrability, got {exponent}"),
            ));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powf(self.exponent)
    }
}

/// I^α t^μ = Γ(μ+1)/Γ(μ+1+α) · t^{μ+α}.
pub fn power_rule(mu: f64, alpha: f64) -> Result<PowerFunction> {
    if !(mu > -1.0) {
        return Err(HilferError::domain("mu", format!("must exceed -1, got {mu}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(HilferError::domain("alpha", format!("must be > 0, got {alpha}")));
    }
    PowerFunction::new(
        gamma_pos(mu + 1.0) / gamma_pos(mu + 1.0 + alpha),
        mu + alpha,
    )
}

/// Raw values of I^s g at every node for an integrand sampled at nodes 1..
/// (`g[0]` is read only with `HeadCell::Plain`). The entry at node 0 is 0.
pub(crate) fn integrate_samples(
    s: f64,
    nodes: &[f64],
    g: &[f64],
    head: HeadCell,
    rule: Rule,
    exec: Execution,
) -> Vec<f64> {
    let q = ProductRule::new(s - 1.0, rule, head, 1.0 / gamma_pos(s));
    let mut out = vec![0.0];
    out.extend(map_range(exec, 1, nodes.len(), |n| dot(&q.row(nodes, n), g)));
    out
}

fn origin_head(gamma: f64) -> HeadCell {
    if gamma == 1.0 {
        HeadCell::Plain
    } else {
        HeadCell::Weighted { mu: gamma - 1.0 }
    }
}

// Limit at 0⁺ of I^s x for x ~ y₀ t^{γ-1}.
fn integral_at_origin(s: f64, gamma: f64, y0: f64) -> f64 {
    let e = gamma - 1.0 + s;
    if y0 == 0.0 || e > 1e-14 {
        0.0
    } else if e.abs() <= 1e-14 {
        y0 * gamma_pos(gamma)
    } else {
        y0.signum() * f64::INFINITY
    }
}

fn check_anchored(traj: &WeightedTrajectory) -> Result<()> {
    if !traj.is_anchored() {
        return Err(HilferError::Contract(
            "trajectory must start at t = 0; concatenate the history first".into(),
        ));
    }
    Ok(())
}

fn raw_samples(traj: &WeightedTrajectory) -> Vec<f64> {
    let mut g = traj.raw_values();
    if !g[0].is_finite() {
        g[0] = 0.0;
    }
    g
}

// I^s x at the nodes of `traj`, raw, with the origin entry set to its limit.
fn integral_raw(s: f64, traj: &WeightedTrajectory) -> Vec<f64> {
    let gamma = traj.order().gamma();
    let mut z = integrate_samples(
        s,
        traj.nodes(),
        &raw_samples(traj),
        origin_head(gamma),
        Rule::Trapezoid,
        Execution::Auto,
    );
    z[0] = integral_at_origin(s, gamma, traj.weighted_values()[0]);
    z
}

/// I^α x sampled at the trajectory's nodes, weighted with the trajectory's γ.
///
/// The weighted value at t = 0 is its limit, which is 0 for α > 0.
pub fn rl_integral(alpha: f64, traj: &WeightedTrajectory) -> Result<WeightedTrajectory> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HilferError::domain("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    check_anchored(traj)?;
    let gamma = traj.order().gamma();
    let z = integral_raw(alpha, traj);
    let nodes = traj.nodes();
    let mut y: Vec<f64> = nodes
        .iter()
        .zip(&z)
        .map(|(&t, &v)| if t > 0.0 { to_weighted(t, gamma, v) } else { 0.0 })
        .collect();
    if gamma == 1.0 {
        y[0] = z[0];
    }
    WeightedTrajectory::new(nodes.to_vec(), traj.order(), y)
}

/// Three-point finite differences on a nonuniform grid; one-sided at both ends.
pub(crate) fn differentiate(nodes: &[f64], z: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (z[1] - z[0]) / (nodes[1] - nodes[0]);
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    for i in 1..n - 1 {
        let h1 = nodes[i] - nodes[i - 1];
        let h2 = nodes[i + 1] - nodes[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * z[i - 1]
            + (h2 - h1) / (h1 * h2) * z[i]
            + h1 / (h2 * (h1 + h2)) * z[i + 1];
    }
    let (h1, h2) = (nodes[1] - nodes[0], nodes[2] - nodes[1]);
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * z[0] + (h1 + h2) / (h1 * h2) * z[1]
        - h1 / (h2 * (h1 + h2)) * z[2];
    let (h1, h2) = (nodes[n - 2] - nodes[n - 3], nodes[n - 1] - nodes[n - 2]);
    d[n - 1] = h2 / (h1 * (h1 + h2)) * z[n - 3] - (h1 + h2) / (h1 * h2) * z[n - 2]
        + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * z[n - 1];
    d
}

// Raw samples at nodes ≥ 1 → weighted trajectory; the origin value is copied
// from node 1 since the derivative itself is generally unbounded there.
fn weighted_from_raw(traj: &WeightedTrajectory, raw: &[f64]) -> Result<WeightedTrajectory> {
    let gamma = traj.order().gamma();
    let nodes = traj.nodes();
    let mut y: Vec<f64> = nodes
        .iter()
        .zip(raw)
        .map(|(&t, &v)| if t > 0.0 { to_weighted(t, gamma, v) } else { 0.0 })
        .collect();
    if y.len() > 1 {
        y[0] = y[1];
    }
    WeightedTrajectory::new(nodes.to_vec(), traj.order(), y)
}

fn check_derivative_input(alpha: f64, traj: &WeightedTrajectory) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HilferError::domain("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    check_anchored(traj)?;
    if traj.len() < 3 {
        return Err(HilferError::Contract("derivative needs at least three nodes".into()));
    }
    Ok(())
}

/// D^α x = d/dt I^{1-α} x.
pub fn rl_derivative(alpha: f64, traj: &WeightedTrajectory) -> Result<WeightedTrajectory> {
    check_derivative_input(alpha, traj)?;
    let z = integral_raw(1.0 - alpha, traj);
    let d = differentiate(traj.nodes(), &z);
    weighted_from_raw(traj, &d)
}

/// Factorization I^{outer} ∘ d/dt ∘ I^{inner} selected for a Hilfer order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HilferPlan {
    /// β = 0: d/dt ∘ I^{1-α}.
    RiemannLiouville { inner: f64 },
    /// β = 1: I^{1-α} ∘ d/dt.
    Caputo { outer: f64 },
    Composite { inner: f64, outer: f64 },
}

pub fn hilfer_plan(order: &HilferOrder) -> HilferPlan {
    let (a, b) = (order.alpha(), order.beta());
    if b == 0.0 {
        HilferPlan::RiemannLiouville { inner: 1.0 - a }
    } else if b == 1.0 {
        HilferPlan::Caputo { outer: 1.0 - a }
    } else {
        HilferPlan::Composite {
            inner: (1.0 - b) * (1.0 - a),
            outer: b * (1.0 - a),
        }
    }
}

/// D^{α,β} x = I^{β(1-α)} d/dt I^{(1-β)(1-α)} x.
pub fn hilfer_derivative(order: &HilferOrder, traj: &WeightedTrajectory) -> Result<WeightedTrajectory> {
    let alpha = order.alpha();
    let (inner, outer) = match hilfer_plan(order) {
        HilferPlan::RiemannLiouville { .. } => return rl_derivative(alpha, traj),
        HilferPlan::Caputo { outer } => (0.0, outer),
        HilferPlan::Composite { inner, outer } => (inner, outer),
    };
    check_derivative_input(alpha, traj)?;
    let z = if inner == 0.0 {
        let mut x = traj.raw_values();
        if !x[0].is_finite() {
            return Err(HilferError::Contract(
                "the Caputo composition needs a trajectory bounded at t = 0".into(),
            ));
        }
        x[0] = traj.raw(0);
        x
    } else {
        integral_raw(inner, traj)
    };
    let d = differentiate(traj.nodes(), &z);
    // d/dt of a bounded C_{1-γ} image behaves like t^{α-1} near the origin.
    let out = integrate_samples(
        outer,
        traj.nodes(),
        &d,
        HeadCell::Weighted { mu: alpha - 1.0 },
        Rule::Trapezoid,
        Execution::Auto,
    );
    weighted_from_raw(traj, &out)
}
