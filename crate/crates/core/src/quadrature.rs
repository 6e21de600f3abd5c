//! Product-integration weights for the weakly singular kernel (t - s)^p.
//!
//! The kernel is always integrated exactly against a piecewise polynomial
//! interpolant of the remaining factor. Cell [t_j, t_{j+1}] with j ≥ 1 uses
//! the left value (rectangle) or linear interpolation (trapezoid).
//!
//! With `HeadCell::Weighted { mu }` the integrand is read as s^μ ψ(s), the
//! shape of functions in C_{1-γ}. The origin cell then uses ψ frozen at t_1,
//! and cells that are wide compared with their distance from 0 interpolate
//! ψ instead of the integrand, so pure powers s^μ are integrated exactly.
//! Far from the origin s^μ is smooth on each cell and the plain rule is used.
//! `HeadCell::Origin { mu }` keeps only the origin-cell treatment.

use crate::special::beta_pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Rectangle,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadCell {
    /// Integrand ≈ s^mu · ψ(t_1) on [0, t_1]; node 0 gets no weight.
    Weighted { mu: f64 },
    /// Weighted origin cell, plain interpolation on every later cell.
    Origin { mu: f64 },
    /// Cell 0 handled like every other cell.
    Plain,
}

const SERIES_RATIO: f64 = 0.5;
/// Cells with h > NEAR_ORIGIN · t_j interpolate ψ = s^{-μ} g.
const NEAR_ORIGIN: f64 = 0.01;
const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 200;

/// ∫₀ʰ (A − w)^p w^q dw for 0 < h ≤ A, p > −1, q > −1.
pub fn kernel_moment(a: f64, h: f64, p: f64, q: f64) -> f64 {
    debug_assert!(h > 0.0 && a > 0.0 && h <= a * (1.0 + 1e-15));
    if h >= a {
        return full_moment(a, p, q);
    }
    let ratio = h / a;
    if ratio <= SERIES_RATIO {
        return near_series(a, h, p, q);
    }
    let b = a - h;
    if q == 0.0 {
        (a.powf(p + 1.0) - b.powf(p + 1.0)) / (p + 1.0)
    } else if q == 1.0 {
        let m0 = (a.powf(p + 1.0) - b.powf(p + 1.0)) / (p + 1.0);
        a * m0 - (a.powf(p + 2.0) - b.powf(p + 2.0)) / (p + 2.0)
    } else {
        near_series(a, 0.5 * a, p, q) + far_piece(a, b, p, q)
    }
}

/// (∫₀ʰ (A − w)^p dw, ∫₀ʰ (A − w)^p w dw) sharing the power evaluations.
pub fn moments01(a: f64, h: f64, p: f64) -> (f64, f64) {
    if h >= a {
        let a1 = a.powf(p + 1.0);
        return (a1 / (p + 1.0), a * a1 / ((p + 1.0) * (p + 2.0)));
    }
    let x = h / a;
    if x <= SERIES_RATIO {
        let mut c = 1.0;
        let mut xm = 1.0;
        let (mut s0, mut s1) = (0.0, 0.0);
        for m in 0..SERIES_MAX_TERMS {
            let t0 = c * xm / (m as f64 + 1.0);
            let t1 = c * xm / (m as f64 + 2.0);
            s0 += t0;
            s1 += t1;
            if t0.abs() < SERIES_REL_TOL * s0.abs() && t1.abs() < SERIES_REL_TOL * s1.abs() {
                break;
            }
            c *= (m as f64 - p) / (m as f64 + 1.0);
            xm *= x;
            if c == 0.0 {
                break;
            }
        }
        let ap = a.powf(p);
        return (ap * h * s0, ap * h * h * s1);
    }
    let b = a - h;
    let a1 = a.powf(p + 1.0);
    let b1 = b.powf(p + 1.0);
    let m0 = (a1 - b1) / (p + 1.0);
    (m0, a * m0 - (a * a1 - b * b1) / (p + 2.0))
}

fn full_moment(a: f64, p: f64, q: f64) -> f64 {
    if q == 0.0 {
        a.powf(p + 1.0) / (p + 1.0)
    } else if q == 1.0 {
        a.powf(p + 2.0) / ((p + 1.0) * (p + 2.0))
    } else {
        a.powf(p + q + 1.0) * beta_pos(q + 1.0, p + 1.0)
    }
}

// A^p h^{q+1} Σ_m (−1)^m C(p, m) (h/A)^m / (m + q + 1).
fn near_series(a: f64, h: f64, p: f64, q: f64) -> f64 {
    let x = h / a;
    let mut c = 1.0;
    let mut xm = 1.0;
    let mut sum = 0.0;
    for m in 0..SERIES_MAX_TERMS {
        let term = c * xm / (m as f64 + q + 1.0);
        sum += term;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            break;
        }
        c *= (m as f64 - p) / (m as f64 + 1.0);
        xm *= x;
        if c == 0.0 {
            break;
        }
    }
    a.powf(p) * h.powf(q + 1.0) * sum
}

// ∫ over w ∈ [A/2, A − B], written as ∫_B^{A/2} u^p (A − u)^q du and
// expanded in u/A ≤ 1/2.
fn far_piece(a: f64, b: f64, p: f64, q: f64) -> f64 {
    let half = 0.5 * a;
    let (h1, b1) = (half.powf(p + 1.0), b.powf(p + 1.0));
    let rb = b / a;
    let mut e = 1.0;
    let mut sum = 0.0;
    let (mut xh, mut xb) = (1.0, 1.0);
    for m in 0..SERIES_MAX_TERMS {
        let k = p + m as f64 + 1.0;
        let term = e * (h1 * xh - b1 * xb) / k;
        sum += term;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            break;
        }
        e *= (m as f64 - q) / (m as f64 + 1.0);
        xh *= 0.5;
        xb *= rb;
        if e == 0.0 {
            break;
        }
    }
    a.powf(q) * sum
}

/// Kernel (t − s)^{exponent} with a fixed interpolation rule and head cell.
/// All weights are multiplied by `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRule {
    pub exponent: f64,
    pub rule: Rule,
    pub head: HeadCell,
    pub scale: f64,
}

impl ProductRule {
    pub fn new(exponent: f64, rule: Rule, head: HeadCell, scale: f64) -> Self {
        Self {
            exponent,
            rule,
            head,
            scale,
        }
    }

    /// Adds the weights of cell j = [nodes[j], nodes[j+1]] evaluated at t ≥ nodes[j+1].
    pub fn add_cell(&self, nodes: &[f64], j: usize, t: f64, w: &mut [f64]) {
        let lo = nodes[j];
        let hi = nodes[j + 1];
        let h = hi - lo;
        let a = t - lo;
        let p = self.exponent;
        match self.head {
            HeadCell::Weighted { mu } | HeadCell::Origin { mu } if j == 0 => {
                let m = kernel_moment(a, h, p, mu);
                w[1] += self.scale * m * hi.powf(-mu);
                return;
            }
            HeadCell::Weighted { mu } if mu != 0.0 && h > NEAR_ORIGIN * lo => {
                self.add_weighted_cell(lo, hi, t, mu, j, w);
                return;
            }
            _ => {}
        }
        match self.rule {
            Rule::Rectangle => {
                w[j] += self.scale * kernel_moment(a, h, p, 0.0);
            }
            Rule::Trapezoid => {
                let (m0, m1) = moments01(a, h, p);
                let right = m1 / h;
                w[j] += self.scale * (m0 - right);
                w[j + 1] += self.scale * right;
            }
        }
    }

    // ∫_lo^hi (t − s)^p s^mu ψ(s) ds with ψ interpolated, written through
    // F_q(c) = ∫₀^c (t − s)^p s^q ds.
    fn add_weighted_cell(&self, lo: f64, hi: f64, t: f64, mu: f64, j: usize, w: &mut [f64]) {
        let p = self.exponent;
        let f = |c: f64, q: f64| kernel_moment(t, c, p, q);
        let k0 = f(hi, mu) - f(lo, mu);
        let (psi_lo, psi_hi) = (lo.powf(-mu), hi.powf(-mu));
        match self.rule {
            Rule::Rectangle => w[j] += self.scale * k0 * psi_lo,
            Rule::Trapezoid => {
                let h = hi - lo;
                // ∫ (t − s)^p s^mu (s − lo) ds
                let k1 = (f(hi, mu + 1.0) - f(lo, mu + 1.0)) - lo * k0;
                let right = k1 / h;
                w[j] += self.scale * (k0 - right) * psi_lo;
                w[j + 1] += self.scale * right * psi_hi;
            }
        }
    }

    /// Weights over nodes[0..=n] for the integral up to t = nodes[n].
    pub fn row(&self, nodes: &[f64], n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n + 1];
        let t = nodes[n];
        for j in 0..n {
            self.add_cell(nodes, j, t, &mut w);
        }
        w
    }

    /// Weights over all of `nodes` for the integral over [nodes₀, nodes_last]
    /// evaluated at a point t at or beyond the last node.
    pub fn tail(&self, nodes: &[f64], t: f64) -> Vec<f64> {
        let mut w = vec![0.0; nodes.len()];
        for j in 0..nodes.len().saturating_sub(1) {
            self.add_cell(nodes, j, t, &mut w);
        }
        w
    }

    /// Weights of cells `first..n` at t = nodes[n], indexed from node `first`.
    pub fn partial_row(&self, nodes: &[f64], first: usize, n: usize) -> Vec<f64> {
        let mut scratch = vec![0.0; n + 1];
        let t = nodes[n];
        for j in first..n {
            self.add_cell(nodes, j, t, &mut scratch);
        }
        scratch.split_off(first)
    }
}

/// Σ w_k g_k in index order.
#[inline]
pub fn dot(w: &[f64], g: &[f64]) -> f64 {
    w.iter().zip(g).map(|(a, b)| a * b).sum()
}
