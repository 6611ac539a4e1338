//! Phase plane of `w' = z, z' = -f(w)`: turning points, the homoclinic
//! extent, and the half-period time map `T(w_-)`.
//!
//! Around the center `(w_0, 0)` the orbits are closed and cut the `w`-axis at
//! `w_- < w_0 < w_+` with `F(w_-) = F(w_+) < 0`. They are enclosed by the
//! homoclinic loop of the saddle at the origin, which reaches `w_h` with
//! `F(w_h) = 0`.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{d2f_raw, d3f_raw, df_raw, f_raw, potential_raw, ModelParams};
use crate::quadrature::{integrate_adaptive, AdaptiveConfig};

/// Below this relative distance from `w_0` the time map returns its center limit.
pub const CENTER_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMapSample {
    pub w_minus: f64,
    pub w_plus: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub energy_level: f64,
}

/// Precomputed phase-plane data for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct PhasePlane {
    pub lambda: f64,
    pub beta: f64,
    pub w0: f64,
    /// `1/(1 + w_0) = d lambda/(b mu)`.
    k: f64,
}

/// `ln(1+r) - r + r^2/2`, accurate for small `|r|`.
fn log_remainder(r: f64) -> f64 {
    if r.abs() < 0.1 {
        let mut term = r * r * r;
        let mut sum = 0.0;
        for j in 3..40 {
            let t = term / j as f64;
            sum += if j % 2 == 1 { t } else { -t };
            term *= r;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        r.ln_1p() - r + 0.5 * r * r
    }
}

impl PhasePlane {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.require_window("PhasePlane")?;
        let beta = p.beta();
        let w0 = beta / p.lambda - 1.0;
        Ok(PhasePlane {
            lambda: p.lambda,
            beta,
            w0,
            k: p.lambda / beta,
        })
    }

    pub fn potential(&self, w: f64) -> f64 {
        potential_raw(w, self.lambda, self.beta)
    }

    pub fn kinetic(&self, w: f64) -> f64 {
        f_raw(w, self.lambda, self.beta)
    }

    /// `F(w_0 + y) - F(w_0)`, evaluated without cancellation near `y = 0`.
    pub fn gap(&self, y: f64) -> f64 {
        let k = self.k;
        let r = k * y;
        self.lambda / (k * k) * (0.5 * (1.0 - k) * r * r + k * log_remainder(r))
    }

    /// `F''(w_0) = lambda (1 - d lambda/(b mu))`.
    pub fn center_curvature(&self) -> f64 {
        self.lambda * (1.0 - self.k)
    }

    /// `pi / sqrt(F''(w_0))`.
    pub fn center_time(&self) -> f64 {
        std::f64::consts::PI / self.center_curvature().sqrt()
    }

    /// Solves `gap(y) = level` for `y > 0` by bisection to adjacent floats.
    fn right_root(&self, level: f64) -> f64 {
        let mut hi = self.w0.max(1.0);
        while self.gap(hi) < level {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.gap(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.gap(lo) - level).abs() < (self.gap(hi) - level).abs() {
            lo
        } else {
            hi
        }
    }

    pub fn homoclinic_extent(&self) -> f64 {
        self.w0 + self.right_root(self.gap(-self.w0))
    }

    pub fn companion(&self, w_minus: f64) -> Result<f64> {
        if !(w_minus > 0.0 && w_minus < self.w0) {
            return Err(domain(
                "companion",
                format!("w_minus = {w_minus} outside (0, w_0) = (0, {})", self.w0),
            ));
        }
        Ok(self.w0 + self.right_root(self.gap(w_minus - self.w0)))
    }

    /// `F(w_0 + y) - F(w_0 + s y)` with `s = sin(pi/2 - theta)`. Close to the
    /// turning point the difference is expanded about `a = w_0 + y`:
    /// with `delta = (1 - s) y` and `q = delta/(1 + a)`,
    /// `F(a) - F(a - delta) = f(a) delta - f'(a) delta^2/2 + beta R(q)`,
    /// where `R(q) = -ln(1 - q) - q - q^2/2` collects the cubic and higher terms.
    fn depth(&self, y: f64, level: f64, theta: f64, s: f64) -> f64 {
        let half = (0.5 * theta).sin();
        let one_minus_s = 2.0 * half * half;
        if one_minus_s < 0.25 {
            let a = self.w0 + y;
            let delta = one_minus_s * y;
            let q = delta / (1.0 + a);
            self.kinetic(a) * delta - 0.5 * df_raw(a, self.lambda, self.beta) * delta * delta
                - self.beta * log_remainder(-q)
        } else {
            level - self.gap(s * y)
        }
    }

    /// Time from `w_0` to the turning point `w_0 + y` along the orbit of
    /// level `gap(y)`, after `w = w_0 + sin(phi) y`.
    fn quarter(&self, y: f64) -> Result<f64> {
        let amp = y.abs();
        let level = self.gap(y);
        let limit = amp / (self.kinetic(self.w0 + y) * y).abs().sqrt();
        let integrand = |phi: f64| {
            let (s, c) = phi.sin_cos();
            let depth = self.depth(y, level, FRAC_PI_2 - phi, s);
            let v = amp * c / (2.0 * depth).sqrt();
            if depth > 0.0 && v.is_finite() {
                v
            } else {
                limit
            }
        };
        Ok(integrate_adaptive(integrand, 0.0, FRAC_PI_2, AdaptiveConfig::default())?.value)
    }

    pub fn time_map(&self, w_minus: f64) -> Result<TimeMapSample> {
        let w_plus = self.companion(w_minus)?;
        let energy_level = self.potential(w_minus);
        let t = if self.w0 - w_minus < CENTER_REGULARIZATION * self.w0 {
            self.center_time()
        } else {
            self.quarter(w_minus - self.w0)? + self.quarter(w_plus - self.w0)?
        };
        Ok(TimeMapSample {
            w_minus,
            w_plus,
            t,
            energy_level,
        })
    }
}

pub fn homoclinic_extent(p: &ModelParams) -> Result<f64> {
    Ok(PhasePlane::new(p)?.homoclinic_extent())
}

pub fn companion(w_minus: f64, p: &ModelParams) -> Result<f64> {
    PhasePlane::new(p)?.companion(w_minus)
}

/// Half-period of the orbit through `(w_minus, 0)`.
pub fn time_map(w_minus: f64, p: &ModelParams) -> Result<TimeMapSample> {
    PhasePlane::new(p)?.time_map(w_minus)
}

/// `pi / sqrt(lambda (1 - d lambda/(b mu)))`.
pub fn time_map_center(p: &ModelParams) -> Result<f64> {
    Ok(PhasePlane::new(p)?.center_time())
}

/// True iff `T` strictly decreases along `grid`.
pub fn monotone_check(p: &ModelParams, grid: &[f64]) -> bool {
    let Ok(plane) = PhasePlane::new(p) else {
        return false;
    };
    let mut prev = f64::INFINITY;
    for &w in grid {
        match plane.time_map(w) {
            Ok(s) if s.t < prev => prev = s.t,
            _ => return false,
        }
    }
    true
}

/// Sampled check of the A-B conditions on `[0, w_h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ABReport {
    /// Unique critical point of `f'`: `sqrt(b mu/(d lambda)) - 1`.
    pub alpha: f64,
    /// `f' f''' - (5/3) f''^2 < 0` for `w > alpha`.
    pub a_condition_ok: bool,
    /// `f f'' - 3 f'^2 <= 0` on `[0, alpha]`.
    pub b_condition_ok: bool,
    pub a_margin: f64,
    pub b_margin: f64,
    /// Largest sampled value over both conditions; negative means both hold strictly.
    pub worst_margin: f64,
    /// `f'` changes sign exactly once on the samples and `f''(alpha) > 0`.
    pub simple_zero_ok: bool,
}

pub fn ab_certify(p: &ModelParams, n_samples: usize) -> Result<ABReport> {
    let plane = PhasePlane::new(p)?;
    let (lambda, beta) = (plane.lambda, plane.beta);
    let wh = plane.homoclinic_extent();
    let alpha = (beta / lambda).sqrt() - 1.0;
    let n = n_samples.max(2);
    let mut samples: Vec<f64> = (0..n).map(|i| wh * i as f64 / (n - 1) as f64).collect();
    samples.push(alpha);
    samples.sort_by(f64::total_cmp);

    let mut a_margin = f64::NEG_INFINITY;
    let mut b_margin = f64::NEG_INFINITY;
    for &w in &samples {
        let f1 = df_raw(w, lambda, beta);
        let f2 = d2f_raw(w, beta);
        if w > alpha {
            a_margin = a_margin.max(f1 * d3f_raw(w, beta) - 5.0 / 3.0 * f2 * f2);
        } else {
            b_margin = b_margin.max(f_raw(w, lambda, beta) * f2 - 3.0 * f1 * f1);
        }
    }
    let changes = crate::grid::sign_changes(samples.iter().map(|&w| df_raw(w, lambda, beta)));
    Ok(ABReport {
        alpha,
        a_condition_ok: a_margin < 0.0,
        b_condition_ok: b_margin <= 0.0,
        a_margin,
        b_margin,
        worst_margin: a_margin.max(b_margin),
        simple_zero_ok: changes == 1 && d2f_raw(alpha, beta) > 0.0 && alpha > 0.0 && alpha < wh,
    })
}

/// Evenly spaced interior grid of `(0, w_0)`.
pub fn interior_grid(w0: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| w0 * i as f64 / (n + 1) as f64).collect()
}

pub fn write_csv<W: Write>(out: &mut W, samples: &[TimeMapSample]) -> std::io::Result<()> {
    writeln!(out, "w_minus,w_plus,T,energy_level")?;
    for s in samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            s.w_minus, s.w_plus, s.t, s.energy_level
        )?;
    }
    Ok(())
}
