//! Eigencurves of the linearization at the constant solution `w_0`.
//!
//! The `l`-th Neumann eigenvalue of the linearization at `w_0` is the
//! quadratic `tau_{0,l}(lambda) = (d/(b mu)) lambda^2 - lambda + (l pi)^2`.
//! Its real roots `lambda_l^-` and `lambda_l^+` exist iff `mu >= mu_l` with
//! `mu_l = (d/b)(2 l pi)^2`, and are where the loops of nodal solutions meet
//! the constant branch.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::ModelParams;

pub fn tau0(ell: u32, lambda: f64, p: &ModelParams) -> f64 {
    let lp = ell as f64 * PI;
    p.d / (p.b * p.mu) * lambda * lambda - lambda + lp * lp
}

/// `d tau_{0,l} / d lambda`; independent of `l`.
pub fn tau0_dot(lambda: f64, p: &ModelParams) -> f64 {
    2.0 * p.d / (p.b * p.mu) * lambda - 1.0
}

/// `mu_kappa = (d/b)(2 kappa pi)^2`.
pub fn mu_threshold(kappa: u32, p: &ModelParams) -> f64 {
    let t = 2.0 * kappa as f64 * PI;
    p.d / p.b * t * t
}

/// Largest `kappa` with `mu > mu_kappa`.
pub fn regime(p: &ModelParams) -> u32 {
    let mut k = 0;
    while p.mu > mu_threshold(k + 1, p) {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigencurveRoot {
    pub ell: u32,
    pub mu: f64,
    /// `(lambda_minus, lambda_plus)`; `None` when the roots are complex.
    pub roots: Option<(f64, f64)>,
}

impl EigencurveRoot {
    pub fn is_real(&self) -> bool {
        self.roots.is_some()
    }

    pub fn lambda_minus(&self) -> Option<f64> {
        self.roots.map(|r| r.0)
    }

    pub fn lambda_plus(&self) -> Option<f64> {
        self.roots.map(|r| r.1)
    }
}

/// Roots of `tau_{0,l}`. The discriminant is `1 - mu_l/mu`, which is exactly
/// zero at `mu = mu_threshold(l)`. The smaller root is taken from the
/// product of the roots to avoid cancellation for large `mu`.
pub fn lambda_roots(ell: u32, p: &ModelParams) -> EigencurveRoot {
    let disc = 1.0 - mu_threshold(ell, p) / p.mu;
    let roots = if p.mu > 0.0 && disc >= 0.0 {
        let beta = p.beta();
        let plus = 0.5 * beta * (1.0 + disc.sqrt());
        let lp = ell as f64 * PI;
        let minus = if disc == 0.0 {
            plus
        } else {
            beta * lp * lp / plus
        };
        Some((minus, plus))
    } else {
        None
    };
    EigencurveRoot {
        ell,
        mu: p.mu,
        roots,
    }
}

/// The open existence window `(lambda_n^-, lambda_n^+)`, if `mu > mu_n`.
pub fn window(n: u32, p: &ModelParams) -> Option<(f64, f64)> {
    match lambda_roots(n, p).roots {
        Some((lo, hi)) if lo < hi => Some((lo, hi)),
        _ => None,
    }
}

/// Default mode cut-off: `tau_{0,l} > 0` on the whole lambda range beyond it.
pub fn default_ell_max(p: &ModelParams) -> u32 {
    (p.beta().sqrt() / PI).ceil() as u32 + 2
}

/// Number of negative `tau_{0,l}(lambda)`, `l = 0..=ell_max`.
pub fn morse_index_w0(lambda: f64, p: &ModelParams, ell_max: u32) -> Result<u32> {
    p.with_lambda(lambda).require_window("morse_index_w0")?;
    Ok((0..=ell_max).filter(|&l| tau0(l, lambda, p) < 0.0).count() as u32)
}

/// Piecewise-constant Morse index of `w_0` over `(0, b mu/d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseIndexTable {
    pub mu: f64,
    /// Ascending interior breakpoints; cell `i` is `(bp[i-1], bp[i])`.
    pub breakpoints: Vec<f64>,
    pub indices: Vec<u32>,
}

impl MorseIndexTable {
    pub fn build(p: &ModelParams) -> Result<Self> {
        if !(p.mu > 0.0) {
            return Err(domain("MorseIndexTable", "mu must be positive"));
        }
        let beta = p.beta();
        let ell_max = default_ell_max(p);
        let mut bps: Vec<f64> = (1..=ell_max)
            .filter_map(|l| window(l, p))
            .flat_map(|(a, b)| [a, b])
            .collect();
        bps.sort_by(f64::total_cmp);
        let mut edges = vec![0.0];
        edges.extend(&bps);
        edges.push(beta);
        let indices = edges
            .windows(2)
            .map(|c| morse_index_w0(0.5 * (c[0] + c[1]), p, ell_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(MorseIndexTable {
            mu: p.mu,
            breakpoints: bps,
            indices,
        })
    }

    /// Index at `lambda`; at a breakpoint the smaller neighbouring index
    /// applies since the critical eigenvalue is zero, not negative.
    pub fn index_at(&self, lambda: f64) -> u32 {
        let k = self.breakpoints.partition_point(|&b| b < lambda);
        if k < self.breakpoints.len() && self.breakpoints[k] == lambda {
            self.indices[k].min(self.indices[k + 1])
        } else {
            self.indices[k]
        }
    }
}

/// Writes `mu,ell,lambda_minus,lambda_plus,is_real` rows for `ell = 0..=ell_max`.
pub fn write_roots_csv<W: Write>(out: &mut W, p: &ModelParams, ell_max: u32) -> std::io::Result<()> {
    writeln!(out, "mu,ell,lambda_minus,lambda_plus,is_real")?;
    for ell in 0..=ell_max {
        let r = lambda_roots(ell, p);
        let (lo, hi) = match r.roots {
            Some((a, b)) => (format!("{a:.16e}"), format!("{b:.16e}")),
            None => (String::new(), String::new()),
        };
        writeln!(out, "{:.16e},{},{},{},{}", p.mu, ell, lo, hi, r.is_real())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, 25.0, mu).unwrap()
    }

    #[test]
    fn tau0_examples() {
        let q = p(50.0);
        for ell in 0..4 {
            let lp = (ell as f64 * PI).powi(2);
            assert_eq!(tau0(ell, 0.0, &q), lp);
            assert!((tau0(ell, 50.0, &q) - lp).abs() < 1e-12);
        }
        assert!((tau0(1, 25.0, &q) - (12.5 - 25.0 + PI * PI)).abs() < 1e-13);
        assert!((tau0(1, 25.0, &q) + 2.6304).abs() < 1e-4);
        assert!(tau0(0, 25.0, &q) < 0.0);
    }

    #[test]
    fn thresholds() {
        let q = p(50.0);
        assert_eq!(mu_threshold(0, &q), 0.0);
        assert!((mu_threshold(1, &q) - 39.4784).abs() < 1e-4);
        assert!((mu_threshold(2, &q) - 157.914).abs() < 1e-3);
        assert_eq!(regime(&q), 1);
        assert_eq!(regime(&p(30.0)), 0);
        assert_eq!(regime(&p(200.0)), 2);
    }

    #[test]
    fn roots_examples() {
        let q = p(50.0);
        let r = lambda_roots(1, &q);
        let (lo, hi) = r.roots.unwrap();
        assert!((lo - 13.5318).abs() < 1e-4);
        assert!((hi - 36.4682).abs() < 1e-4);
        assert!(((lo + hi) - 50.0).abs() < 1e-12);
        assert!((lo * hi / (50.0 * PI * PI) - 1.0).abs() < 1e-12);
        assert!(!lambda_roots(2, &q).is_real());

        let q1 = p(mu_threshold(1, &q));
        let r = lambda_roots(1, &q1).roots.unwrap();
        assert_eq!(r.0, r.1);
        assert!((r.0 - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn morse_examples() {
        let q = p(30.0);
        for &l in &[1.0, 10.0, 15.0, 29.0] {
            assert_eq!(morse_index_w0(l, &q, default_ell_max(&q)).unwrap(), 1);
        }
        let q = p(50.0);
        let em = default_ell_max(&q);
        assert_eq!(morse_index_w0(25.0, &q, em).unwrap(), 2);
        assert_eq!(morse_index_w0(5.0, &q, em).unwrap(), 1);
        assert!(morse_index_w0(50.0, &q, em).is_err());
        assert!(morse_index_w0(0.0, &q, em).is_err());
    }

    #[test]
    fn table_staircase() {
        let q = p(200.0);
        let t = MorseIndexTable::build(&q).unwrap();
        assert_eq!(t.indices, vec![1, 2, 3, 2, 1]);
        let (l1m, _) = window(1, &q).unwrap();
        assert_eq!(t.index_at(l1m), 1);
        assert_eq!(t.index_at(100.0), 3);
    }

    #[test]
    fn csv_marks_complex_roots() {
        let mut buf = Vec::new();
        write_roots_csv(&mut buf, &p(50.0), 2).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",,,false"));
        assert!(lines[2].ends_with("true"));
    }
}
