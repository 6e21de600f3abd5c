//! A priori bounds from the singular Gronwall inequality and global
//! existence / uniqueness certificates.

use crate::error::{HilferError, Result};
use crate::exec::{map_range, Execution};
use crate::fracops::integrate_samples;
use crate::model::{GradedGrid, IvpSpec};
use crate::quadrature::{dot, HeadCell, ProductRule, Rule};
use crate::special::{gamma_pos, ln_gamma_pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertificateKind {
    GlobalExistence,
    GlobalUniqueness,
    LocalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidHorizon {
    Finite(f64),
    Infinite,
}

/// Log grid on which m(r) ≤ r was checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingRecord {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    /// Largest m(r)/r seen.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub basis: String,
    /// A priori bound on t^{1-γ}|x(t)| at the requested nodes.
    pub bound: Option<Vec<f64>>,
    pub valid_horizon: ValidHorizon,
    pub sampling: Option<SamplingRecord>,
    /// L_k h_k^α / Γ(α+1) over consecutive windows of length min(1, T).
    pub window_contraction: Vec<f64>,
}

impl Certificate {
    fn local(basis: impl Into<String>, horizon: f64) -> Self {
        Self {
            kind: CertificateKind::LocalOnly,
            basis: basis.into(),
            bound: None,
            valid_horizon: ValidHorizon::Finite(horizon),
            sampling: None,
            window_contraction: Vec::new(),
        }
    }
}

pub const GRONWALL_DEFAULT_TOL: f64 = 1e-12;
const GRONWALL_MAX_GROWTH: f64 = 1e6;
const GRONWALL_MAX_TERMS: usize = 2000;

/// Samples of v's bound when v ≤ w + a ∫₀ᵗ (t − s)^{−α} v(s) ds:
///
///   w(t) + Σ_{n≥1} (aΓ(1−α))ⁿ / Γ(n(1−α)) ∫₀ᵗ (t − s)^{n(1−α)−1} w(s) ds.
pub fn gronwall_bound(w: &[f64], a: f64, alpha: f64, grid: &GradedGrid) -> Result<Vec<f64>> {
    gronwall_bound_with_tol(w, a, alpha, grid, GRONWALL_DEFAULT_TOL)
}

pub fn gronwall_bound_with_tol(w: &[f64], a: f64, alpha: f64, grid: &GradedGrid, tol: f64) -> Result<Vec<f64>> {
    gronwall_bound_on_nodes(w, a, alpha, grid.nodes(), tol)
}

/// Series form on an arbitrary node set starting at 0. The series stops
/// once a term's sup falls below `tol` times the running sum's sup.
pub fn gronwall_bound_on_nodes(w: &[f64], a: f64, alpha: f64, nodes: &[f64], tol: f64) -> Result<Vec<f64>> {
    if w.len() != nodes.len() || nodes.is_empty() {
        return Err(HilferError::Contract("one w sample per node required".into()));
    }
    if nodes[0] != 0.0 || nodes.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(HilferError::Contract("nodes must increase from 0".into()));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(HilferError::domain("w", "must be finite and nonnegative"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(HilferError::domain("a", format!("must be >= 0, got {a}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HilferError::domain("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(HilferError::domain("tol", "must be > 0"));
    }
    let w_sup = w.iter().copied().fold(0.0, f64::max);
    if a == 0.0 || w_sup == 0.0 {
        return Ok(w.to_vec());
    }
    let s = 1.0 - alpha;
    let ln_c = (a * gamma_pos(s)).ln();
    let mut sum = w.to_vec();
    for n in 1..=GRONWALL_MAX_TERMS {
        let nf = n as f64;
        let scale = (nf * ln_c - ln_gamma_pos(nf * s)).exp();
        let q = ProductRule::new(nf * s - 1.0, Rule::Trapezoid, HeadCell::Plain, scale);
        let term: Vec<f64> = map_range(Execution::Auto, 1, nodes.len(), |j| dot(&q.row(nodes, j), w));
        let mut term_sup = 0.0_f64;
        for (j, v) in term.iter().enumerate() {
            sum[j + 1] += v;
            term_sup = term_sup.max(v.abs());
        }
        let sum_sup = sum.iter().copied().fold(0.0, f64::max);
        if !sum_sup.is_finite() || sum_sup > GRONWALL_MAX_GROWTH * w_sup {
            return Err(HilferError::Accuracy {
                context: "gronwall series growth",
                terms: n,
                partial_sum: sum_sup,
            });
        }
        if term_sup < tol * sum_sup {
            return Ok(sum);
        }
    }
    Err(HilferError::Accuracy {
        context: "gronwall series",
        terms: GRONWALL_MAX_TERMS,
        partial_sum: sum.iter().copied().fold(0.0, f64::max),
    })
}

/// Effective constant k(t) = (bound − w) / (a ∫₀ᵗ (t − s)^{−α} w ds), where defined.
pub fn implied_k(w: &[f64], bound: &[f64], a: f64, alpha: f64, nodes: &[f64]) -> Vec<Option<f64>> {
    let q = ProductRule::new(-alpha, Rule::Trapezoid, HeadCell::Plain, 1.0);
    (0..nodes.len())
        .map(|j| {
            if j == 0 || a == 0.0 {
                return None;
            }
            let denom = a * dot(&q.row(nodes, j), w);
            (denom > 0.0).then(|| (bound[j] - w[j]) / denom)
        })
        .collect()
}

const M_CHECK_MIN: f64 = 1e-6;
const M_CHECK_MAX: f64 = 1e6;
const M_CHECK_PER_DECADE: usize = 20;

fn check_sublinear(m: &dyn Fn(f64) -> f64) -> (bool, SamplingRecord) {
    let decades = (M_CHECK_MAX / M_CHECK_MIN).log10();
    let points = (decades as usize) * M_CHECK_PER_DECADE + 1;
    let mut worst = 0.0_f64;
    let mut ok = true;
    for i in 0..points {
        let r = M_CHECK_MIN * 10f64.powf(decades * i as f64 / (points - 1) as f64);
        let v = m(r);
        let ratio = v / r;
        if !ratio.is_finite() || v > r * (1.0 + 1e-12) {
            ok = false;
        }
        worst = worst.max(if ratio.is_finite() { ratio } else { f64::INFINITY });
    }
    (
        ok,
        SamplingRecord {
            r_min: M_CHECK_MIN,
            r_max: M_CHECK_MAX,
            points,
            worst_ratio: worst,
        },
    )
}

/// Global existence from a growth envelope |f| ≤ l(t) m(|x|) + p(t) with m(r) ≤ r.
///
/// `nodes` must increase from 0; ν is the last node. The bound is
/// the Gronwall series applied to
/// w(t) = |x₀|/Γ(γ) + ν^{1-γ} I^α p(t) with a = ν^{1-γ} sup_{[0,ν]} l / Γ(α).
pub fn growth_certificate(ivp: &IvpSpec, nodes: &[f64]) -> Certificate {
    let horizon = ivp.horizon;
    let Some(env) = ivp.envelope.as_ref() else {
        return Certificate::local("no growth envelope declared", horizon);
    };
    let (ok, record) = check_sublinear(&*env.m);
    if !ok {
        let mut c = Certificate::local(
            format!("m(r) > r found on the sampling grid (max m(r)/r = {:.3e})", record.worst_ratio),
            horizon,
        );
        c.sampling = Some(record);
        return c;
    }
    if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|p| !(p[1] > p[0])) {
        return Certificate::local("bound nodes must increase from 0", horizon);
    }
    let order = ivp.order;
    let (alpha, gamma) = (order.alpha(), order.gamma());
    let nu = nodes[nodes.len() - 1];
    let weight = nu.powf(1.0 - gamma);

    let mut p = vec![0.0; nodes.len()];
    for (k, v) in p.iter_mut().enumerate().skip(1) {
        *v = (env.p)(nodes[k]);
    }
    let ip = integrate_samples(
        alpha,
        nodes,
        &p,
        HeadCell::Weighted { mu: -ivp.delta },
        Rule::Trapezoid,
        Execution::Auto,
    );
    let base = ivp.x0.abs() / gamma_pos(gamma);
    let w: Vec<f64> = ip.iter().map(|v| base + weight * v).collect();

    let l_sup = nodes
        .iter()
        .copied()
        .chain((0..=256).map(|i| nu * i as f64 / 256.0))
        .map(|t| (env.l)(t))
        .fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) });
    if !l_sup.is_finite() {
        return Certificate::local("l(t) is unbounded on the sampled interval", horizon);
    }
    let a = weight * l_sup / gamma_pos(alpha);
    // The kernel (t − s)^{α−1} is the Gronwall kernel (t − s)^{−α'} with α' = 1 − α.
    match gronwall_bound_on_nodes(&w, a, 1.0 - alpha, nodes, GRONWALL_DEFAULT_TOL) {
        Ok(bound) => Certificate {
            kind: CertificateKind::GlobalExistence,
            basis: "growth envelope l(t) m(|x|) + p(t) with m(r) <= r".into(),
            bound: Some(bound),
            valid_horizon: ValidHorizon::Infinite,
            sampling: Some(record),
            window_contraction: Vec::new(),
        },
        Err(e) => {
            let mut c = Certificate::local(format!("bound evaluation failed: {e}"), horizon);
            c.sampling = Some(record);
            c
        }
    }
}

/// Global uniqueness from a declared Lipschitz function l(t).
pub fn uniqueness_certificate(ivp: &IvpSpec) -> Certificate {
    let horizon = ivp.horizon;
    let Some(lip) = ivp.lipschitz.as_ref() else {
        return Certificate::local("no Lipschitz data declared", horizon);
    };
    let alpha = ivp.order.alpha();
    let h = horizon.min(1.0);
    let count = (horizon / h - 1e-12).ceil().max(1.0) as usize;
    let g = gamma_pos(alpha + 1.0);
    let window_contraction = (0..count)
        .map(|k| {
            let a = k as f64 * h;
            let b = (a + h).min(horizon);
            lip.sup_on(a, b) * (b - a).powf(alpha) / g
        })
        .collect();
    Certificate {
        kind: CertificateKind::GlobalUniqueness,
        basis: "Lipschitz bound |f(t,x) - f(t,y)| <= l(t)|x - y| on [0, inf)".into(),
        bound: None,
        valid_horizon: ValidHorizon::Infinite,
        sampling: None,
        window_contraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_graded_grid, make_order, GrowthEnvelope, Lipschitz};
    use crate::special::ml;

    #[test]
    fn zero_a_and_zero_w() {
        let g = make_graded_grid(0.0, 1.0, 16, 2.0).unwrap();
        let w: Vec<f64> = g.nodes().iter().map(|t| 1.0 + t).collect();
        assert_eq!(gronwall_bound(&w, 0.0, 0.4, &g).unwrap(), w);
        assert_eq!(gronwall_bound(&[0.0; 17], 2.0, 0.4, &g).unwrap(), vec![0.0; 17]);
    }

    #[test]
    fn constant_w_is_mittag_leffler() {
        let alpha = 0.4;
        let a = 1.3;
        let g = make_graded_grid(0.0, 2.0, 64, 1.5).unwrap();
        let w = vec![2.0; 65];
        let b = gronwall_bound(&w, a, alpha, &g).unwrap();
        let c = a * gamma_pos(1.0 - alpha);
        for (j, &t) in g.nodes().iter().enumerate() {
            let e = 2.0 * ml(1.0 - alpha, 1.0, c * t.powf(1.0 - alpha)).unwrap();
            assert!(((b[j] - e) / e).abs() < 1e-10, "t={t}: {} vs {e}", b[j]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = make_graded_grid(0.0, 1.0, 4, 1.0).unwrap();
        assert!(gronwall_bound(&[1.0, -1.0, 1.0, 1.0, 1.0], 1.0, 0.5, &g).is_err());
        assert!(gronwall_bound(&[1.0; 5], -1.0, 0.5, &g).is_err());
        assert!(gronwall_bound(&[1.0; 4], 1.0, 0.5, &g).is_err());
    }

    #[test]
    fn growth_certificate_examples() {
        let o = make_order(0.5, 0.5).unwrap();
        let nodes: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let lin = IvpSpec::new(o, 1.0, |_t: f64, x: f64| -x, 0.0, 1.0)
            .unwrap()
            .with_envelope(GrowthEnvelope::new(|_| 1.0, |r| r, |_| 0.0));
        assert_eq!(growth_certificate(&lin, &nodes).kind, CertificateKind::GlobalExistence);

        let quad = IvpSpec::new(o, 1.0, |_t: f64, x: f64| x * x, 0.0, 1.0)
            .unwrap()
            .with_envelope(GrowthEnvelope::new(|_| 1.0, |r| r * r, |_| 0.0));
        assert_eq!(growth_certificate(&quad, &nodes).kind, CertificateKind::LocalOnly);

        let zero = IvpSpec::new(o, 1.0, |_t: f64, _x: f64| 0.0, 0.0, 1.0)
            .unwrap()
            .with_envelope(GrowthEnvelope::new(|_| 0.0, |r| r, |_| 0.0));
        let c = growth_certificate(&zero, &nodes);
        assert_eq!(c.kind, CertificateKind::GlobalExistence);
        let y0 = 1.0 / gamma_pos(0.75);
        assert!(c.bound.unwrap().iter().all(|&b| (b - y0).abs() < 1e-15));
    }

    #[test]
    fn uniqueness_examples() {
        let o = make_order(0.5, 0.5).unwrap();
        let lin = IvpSpec::new(o, 1.0, |_t: f64, x: f64| -x, 0.0, 3.0)
            .unwrap()
            .with_lipschitz(Lipschitz::Constant(1.0));
        let c = uniqueness_certificate(&lin);
        assert_eq!(c.kind, CertificateKind::GlobalUniqueness);
        assert_eq!(c.valid_horizon, ValidHorizon::Infinite);
        assert_eq!(c.window_contraction.len(), 3);
        let quad = IvpSpec::new(o, 1.0, |_t: f64, x: f64| x * x, 0.0, 1.0).unwrap();
        assert_eq!(uniqueness_certificate(&quad).kind, CertificateKind::LocalOnly);
    }
}
