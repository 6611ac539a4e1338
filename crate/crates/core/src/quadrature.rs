//! Adaptive panel Gauss-Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton's method from the
    /// Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + r * x))
            .sum();
        s * r
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

pub(crate) fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig {
    pub rel_tol: f64,
    pub max_panels: usize,
    pub initial_panels: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            rel_tol: 1e-10,
            max_panels: 1 << 14,
            initial_panels: 4,
        }
    }
}

/// Integrates `f` over `[a, b]` with 16-point panels. A panel is accepted
/// when its one-panel and two-half-panel values agree to its share of the
/// global tolerance; otherwise it is bisected.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    cfg: AdaptiveConfig,
) -> Result<QuadResult> {
    let rule = gl16();
    let width = b - a;
    let n0 = cfg.initial_panels.max(1);
    let mut stack: Vec<(f64, f64, f64)> = (0..n0)
        .map(|k| {
            let lo = a + width * k as f64 / n0 as f64;
            let hi = a + width * (k + 1) as f64 / n0 as f64;
            (lo, hi, rule.integrate(&f, lo, hi))
        })
        .collect();
    let coarse: f64 = stack.iter().map(|p| p.2).sum();
    let abs_tol = cfg.rel_tol * coarse.abs().max(f64::MIN_POSITIVE);

    let mut total = 0.0;
    let mut err = 0.0;
    let mut panels = stack.len();
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let halves = left + right;
        let diff = (halves - whole).abs();
        if !halves.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error: f64::INFINITY,
                panels,
            });
        }
        let local_tol = abs_tol * (hi - lo) / width;
        if diff <= local_tol || (hi - lo) <= 8.0 * f64::EPSILON * width {
            total += halves;
            err += diff;
            continue;
        }
        panels += 1;
        if panels > cfg.max_panels {
            return Err(Error::Quadrature {
                estimate: total + halves,
                error: err + diff,
                panels,
            });
        }
        stack.push((lo, mid, left));
        stack.push((mid, hi, right));
    }
    Ok(QuadResult {
        value: total,
        error: err,
        panels,
    })
}
