//! Exact pairs of nodal solutions of `-w'' = f(w)` on `(0, 1)` with Neumann
//! conditions, obtained by inverting the time map, and the loops they trace
//! in `lambda`.
//!
//! The lower solution starts at `(w_-, 0)` and makes `n` half-turns around
//! the center on `[0, 1]`. The upper one is the lower profile extended evenly
//! about `x = 1` and shifted left by `1/n`; it starts at the companion `w_+`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{check_points, neg_laplacian4, Profile};
use crate::model::{f_raw, potential_raw, ModelParams, PhaseState};
use crate::spectral::{tau0, window};
use crate::timemap::{PhasePlane, CENTER_REGULARIZATION};

/// RK4 steps per grid interval on the default grid.
pub const SUBSTEPS: usize = 8;
/// Coarser grids take more steps per interval so the step never exceeds this.
pub const MAX_RK4_STEP: f64 = 1.0 / 16000.0;
/// Allowed drift of the energy along an integrated profile.
pub const ENERGY_DRIFT_TOL: f64 = 1e-9;
/// Predicted amplitudes below this are replaced by the limit point on `w_0`.
pub const AMPLITUDE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `w(0) = w_- < w_0`.
    Lower,
    /// `w(0) = w_+ > w_0`.
    Upper,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Lower => "lower",
            Branch::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalSolution {
    pub n: u32,
    pub branch: Branch,
    pub w_minus: f64,
    pub profile: Profile,
    /// `w'` on the same grid.
    pub derivative: Profile,
    pub lambda: f64,
    pub mu: f64,
    /// `|w'(1)|`.
    pub boundary_residual: f64,
    /// Sign changes of `w - w_0` in `(0, 1)`.
    pub crossings: usize,
}

/// One `lambda` slice of the loop `C_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPoint {
    pub lambda: f64,
    pub w_minus_lower: f64,
    pub sup_norm_lower: f64,
    pub sup_norm_upper: f64,
    /// `w(0)` of the upper solution, the companion of `w_minus_lower`.
    pub w_plus_upper: f64,
    /// True when the point is the analytic limit `(lambda, w_0)`.
    pub limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopFailure {
    pub lambda: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    pub n: u32,
    pub mu: f64,
    pub window: (f64, f64),
    pub points: Vec<LoopPoint>,
    pub failures: Vec<LoopFailure>,
}

#[inline]
fn rhs(s: PhaseState, lambda: f64, beta: f64) -> PhaseState {
    PhaseState {
        w: s.z,
        z: -f_raw(s.w, lambda, beta),
    }
}

#[inline]
fn rk4_step(s: PhaseState, h: f64, lambda: f64, beta: f64) -> PhaseState {
    let k1 = rhs(s, lambda, beta);
    let a = PhaseState {
        w: s.w + 0.5 * h * k1.w,
        z: s.z + 0.5 * h * k1.z,
    };
    let k2 = rhs(a, lambda, beta);
    let b = PhaseState {
        w: s.w + 0.5 * h * k2.w,
        z: s.z + 0.5 * h * k2.z,
    };
    let k3 = rhs(b, lambda, beta);
    let c = PhaseState {
        w: s.w + h * k3.w,
        z: s.z + h * k3.z,
    };
    let k4 = rhs(c, lambda, beta);
    PhaseState {
        w: s.w + h / 6.0 * (k1.w + 2.0 * (k2.w + k3.w) + k4.w),
        z: s.z + h / 6.0 * (k1.z + 2.0 * (k2.z + k3.z) + k4.z),
    }
}

/// RK4 steps per grid interval: at least `SUBSTEPS`, and enough to keep the
/// step at or below `MAX_RK4_STEP`.
pub fn substeps(n_points: usize) -> usize {
    let per = (1.0 / (MAX_RK4_STEP * (n_points - 1) as f64)).ceil() as usize;
    per.max(SUBSTEPS)
}

/// Integrates from `start` at `x = 0` and samples `(w, w')` on the grid.
fn integrate_grid(start: PhaseState, p: &ModelParams, n_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_points(n_points)?;
    let (lambda, beta) = (p.lambda, p.beta());
    let substeps = substeps(n_points);
    let h = 1.0 / ((n_points - 1) * substeps) as f64;
    let e0 = 0.5 * start.z * start.z + potential_raw(start.w, lambda, beta);
    let mut w = Vec::with_capacity(n_points);
    let mut z = Vec::with_capacity(n_points);
    let mut s = start;
    w.push(s.w);
    z.push(s.z);
    for i in 1..n_points {
        for _ in 0..substeps {
            s = rk4_step(s, h, lambda, beta);
        }
        if !(s.w > 0.0 && s.w.is_finite() && s.z.is_finite()) {
            return Err(Error::StepFailure(format!(
                "orbit left w > 0 at x = {}",
                i as f64 / (n_points - 1) as f64
            )));
        }
        let drift = (0.5 * s.z * s.z + potential_raw(s.w, lambda, beta) - e0).abs();
        if drift > ENERGY_DRIFT_TOL {
            return Err(Error::StepFailure(format!(
                "energy drift {drift:e} at x = {} exceeds {ENERGY_DRIFT_TOL:e}",
                i as f64 / (n_points - 1) as f64
            )));
        }
        w.push(s.w);
        z.push(s.z);
    }
    Ok((w, z))
}

/// Solution of the Cauchy problem `-w'' = f(w)`, `w(0) = w_start`,
/// `w'(0) = 0`, sampled on `[0, 1]`.
pub fn integrate_cauchy(w_start: f64, p: &ModelParams, n_points: usize) -> Result<Profile> {
    let plane = PhasePlane::new(p)?;
    let wh = plane.homoclinic_extent();
    if !(w_start > 0.0 && w_start < wh) {
        return Err(domain(
            "integrate_cauchy",
            format!("w_start = {w_start} outside (0, w_h) = (0, {wh})"),
        ));
    }
    if w_start == plane.w0 {
        return Profile::constant(n_points, w_start);
    }
    let (w, _) = integrate_grid(PhaseState { w: w_start, z: 0.0 }, p, n_points)?;
    Profile::new(w)
}

/// The phase-plane state reached from `start` after time `t`, by RK4 with at
/// most `max_step` per step.
pub fn flow(start: PhaseState, t: f64, p: &ModelParams, max_step: f64) -> Result<PhaseState> {
    p.require_window("flow")?;
    if !(t >= 0.0 && max_step > 0.0) {
        return Err(domain("flow", format!("need t >= 0 and max_step > 0, got {t}, {max_step}")));
    }
    let steps = (t / max_step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let (lambda, beta) = (p.lambda, p.beta());
    let mut s = start;
    for _ in 0..steps {
        s = rk4_step(s, h, lambda, beta);
    }
    Ok(s)
}

/// The unique `w_- in (0, w_0)` with `n T(w_-) = 1`.
pub fn solve_amplitude(n: u32, p: &ModelParams) -> Result<f64> {
    let plane = PhasePlane::new(p)?;
    if n == 0 {
        return Err(domain("solve_amplitude", "n must be at least 1"));
    }
    let nf = n as f64;
    let tc = plane.center_time();
    if tau0(n, p.lambda, p) >= 0.0 || nf * tc >= 1.0 {
        let why = match window(n, p) {
            None => format!("mu = {} does not exceed mu_{n}, the window is empty", p.mu),
            Some((lo, hi)) => format!(
                "lambda = {} outside the window ({lo}, {hi}); n T(w_0) = {}",
                p.lambda,
                nf * tc
            ),
        };
        return Err(Error::NoSolution {
            op: "solve_amplitude",
            reason: why,
        });
    }
    let w0 = plane.w0;
    let delta = 1e-10 * w0;
    let g = |w: f64| -> Result<f64> { Ok(nf * plane.time_map(w)?.t - 1.0) };
    let mut lo = delta;
    let mut hi = w0 * (1.0 - delta);
    if g(lo)? <= 0.0 {
        return Err(Error::NoSolution {
            op: "solve_amplitude",
            reason: format!("n T(w_-) < 1 already at w_- = {lo:e}; amplitude below resolution"),
        });
    }
    if g(hi)? >= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (glo, ghi) = (g(lo)?.abs(), g(hi)?.abs());
    Ok(if glo <= ghi { lo } else { hi })
}

/// Cubic Hermite value and slope at fractional index `pos`.
fn hermite(w: &[f64], z: &[f64], h: f64, pos: f64) -> (f64, f64) {
    let m = w.len() - 1;
    let i = (pos.floor() as usize).min(m - 1);
    let t = pos - i as f64;
    if t == 0.0 {
        return (w[i], z[i]);
    }
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * w[i] + h10 * h * z[i] + h01 * w[i + 1] + h11 * h * z[i + 1];
    let d00 = (6.0 * t2 - 6.0 * t) / h;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = (-6.0 * t2 + 6.0 * t) / h;
    let d11 = 3.0 * t2 - 2.0 * t;
    let slope = d00 * w[i] + d10 * z[i] + d01 * w[i + 1] + d11 * z[i + 1];
    (value, slope)
}

/// `w_hat(x + shift)` where `w_hat` is the even extension of `w` about `x = 1`.
fn shifted_even_extension(w: &[f64], z: &[f64], n: u32) -> (Vec<f64>, Vec<f64>) {
    let m = w.len() - 1;
    let h = 1.0 / m as f64;
    let shift = m as f64 / n as f64;
    (0..=m)
        .map(|i| {
            let pos = i as f64 + shift;
            if pos > m as f64 {
                let (v, s) = hermite(w, z, h, 2.0 * m as f64 - pos);
                (v, -s)
            } else {
                hermite(w, z, h, pos)
            }
        })
        .unzip()
}

/// `(lower, upper)` pair of `n`-nodal solutions.
pub fn nodal_pair(n: u32, p: &ModelParams, n_points: usize) -> Result<(NodalSolution, NodalSolution)> {
    check_points(n_points)?;
    let w_minus = solve_amplitude(n, p)?;
    let w0 = p.beta() / p.lambda - 1.0;
    let (w, z) = integrate_grid(PhaseState { w: w_minus, z: 0.0 }, p, n_points)?;
    let (wu, zu) = shifted_even_extension(&w, &z, n);
    let make = |branch, w: Vec<f64>, z: Vec<f64>| -> Result<NodalSolution> {
        let profile = Profile::new(w)?;
        let derivative = Profile::new(z)?;
        Ok(NodalSolution {
            n,
            branch,
            w_minus,
            boundary_residual: derivative[n_points - 1].abs(),
            crossings: profile.crossings(w0),
            profile,
            derivative,
            lambda: p.lambda,
            mu: p.mu,
        })
    };
    Ok((make(Branch::Lower, w, z)?, make(Branch::Upper, wu, zu)?))
}

/// Sup norm of `-w'' - f(w)` with the fourth-order stencil.
pub fn bvp_residual(profile: &Profile, p: &ModelParams) -> f64 {
    let u = profile.values();
    let h = profile.step();
    let inv_h2 = 1.0 / (h * h);
    let (lambda, beta) = (p.lambda, p.beta());
    (0..u.len())
        .map(|i| (neg_laplacian4(u, i, inv_h2) - f_raw(u[i], lambda, beta)).abs())
        .fold(0.0, f64::max)
}

/// Amplitude of the bifurcating branch predicted from `lambda = lambda^± + eta_2 s^2`.
fn predicted_amplitude(n: u32, p: &ModelParams, lo: f64, hi: f64) -> f64 {
    use crate::linstab::{eta2_closed_form, Side};
    let side = |s: Side, edge: f64| {
        eta2_closed_form(n, s, p)
            .map(|e| ((p.lambda - edge).abs() / e.abs()).sqrt())
            .unwrap_or(0.0)
    };
    side(Side::Minus, lo).min(side(Side::Plus, hi))
}

/// Sweeps `n_lambda` interior points of the window of `C_n`.
///
/// Both solutions of the pair run along the same closed orbit, so their sup
/// norms are the orbit's right turning point `w_+`.
pub fn trace_loop(n: u32, p: &ModelParams, n_lambda: usize) -> Result<LoopTrace> {
    p.validate()?;
    let (lo, hi) = window(n, p).ok_or_else(|| Error::NoSolution {
        op: "trace_loop",
        reason: format!("mu = {} does not exceed mu_{n}", p.mu),
    })?;
    let lambdas: Vec<f64> = (1..=n_lambda)
        .map(|i| lo + (hi - lo) * i as f64 / (n_lambda + 1) as f64)
        .collect();
    let results: Vec<Result<LoopPoint>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let q = p.with_lambda(lambda);
            let plane = PhasePlane::new(&q)?;
            let w0 = plane.w0;
            if predicted_amplitude(n, &q, lo, hi) < AMPLITUDE_FLOOR.max(CENTER_REGULARIZATION * w0) {
                return Ok(LoopPoint {
                    lambda,
                    w_minus_lower: w0,
                    sup_norm_lower: w0,
                    sup_norm_upper: w0,
                    w_plus_upper: w0,
                    limit: true,
                });
            }
            let wm = solve_amplitude(n, &q)?;
            let wp = plane.companion(wm)?;
            Ok(LoopPoint {
                lambda,
                w_minus_lower: wm,
                sup_norm_lower: wp,
                sup_norm_upper: wp,
                w_plus_upper: wp,
                limit: false,
            })
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (lambda, r) in lambdas.into_iter().zip(results) {
        match r {
            Ok(pt) => points.push(pt),
            Err(e) => failures.push(LoopFailure {
                lambda,
                error: e.to_string(),
            }),
        }
    }
    Ok(LoopTrace {
        n,
        mu: p.mu,
        window: (lo, hi),
        points,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timemap::{companion, time_map};

    fn desk() -> ModelParams {
        ModelParams::desk()
    }

    #[test]
    fn constant_start_gives_constant_profile() {
        let p = desk();
        let prof = integrate_cauchy(1.0, &p, 101).unwrap();
        assert!(prof.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn amplitude_matches_plain_bisection() {
        let p = desk();
        let wm = solve_amplitude(1, &p).unwrap();
        // independent bisection on T - 1 with a fixed iteration count
        let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if time_map(mid, &p).unwrap().t > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((wm - 0.5 * (lo + hi)).abs() < 1e-8);
        assert!((time_map(wm, &p).unwrap().t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn second_mode_outside_window() {
        let e = solve_amplitude(2, &desk()).unwrap_err();
        assert!(matches!(e, Error::NoSolution { .. }), "{e}");
        let e = solve_amplitude(1, &desk().with_lambda(40.0)).unwrap_err();
        assert!(matches!(e, Error::NoSolution { .. }));
    }

    #[test]
    fn pair_at_desk_point() {
        let p = desk();
        let (lo, up) = nodal_pair(1, &p, 2001).unwrap();
        assert_eq!(lo.crossings, 1);
        assert_eq!(up.crossings, 1);
        assert!(lo.boundary_residual < 1e-8, "{}", lo.boundary_residual);
        assert!(up.boundary_residual < 1e-8, "{}", up.boundary_residual);
        assert!((up.profile[0] - companion(lo.w_minus, &p).unwrap()).abs() < 1e-8);
        assert!(lo.profile[0] < 1.0 && up.profile[0] > 1.0);
        assert!(bvp_residual(&lo.profile, &p) < 1e-7);
        assert!(bvp_residual(&up.profile, &p) < 1e-7);
        assert!(lo.profile.min() > 0.0 && up.profile.min() > 0.0);
        assert_eq!(lo.profile.min(), lo.profile[0]);
    }

    #[test]
    fn shift_matches_direct_integration_from_companion() {
        let p = desk();
        for n_points in [2001, 1999] {
            let (_, up) = nodal_pair(1, &p, n_points).unwrap();
            let direct = integrate_cauchy(up.profile[0], &p, n_points).unwrap();
            assert!(up.profile.sup_dist(&direct).unwrap() < 1e-7);
        }
    }

    #[test]
    fn reflection_about_first_turning_time() {
        let p = desk().with_mu(200.0).with_lambda(100.0);
        let (lo, _) = nodal_pair(2, &p, 2001).unwrap();
        // n T = 1, so the first turning point is at x = 1/n
        let c = 1000;
        for t in 0..=c {
            assert!((lo.profile[c + t] - lo.profile[c - t]).abs() < 1e-8);
        }
        // period 2/n = 1 for n = 2: w(0) = w(1)
        assert!((lo.profile[0] - lo.profile[2000]).abs() < 1e-8);
        assert_eq!(lo.crossings, 2);
    }

    #[test]
    fn energy_drift_guard_trips_on_escape() {
        let p = desk();
        assert!(integrate_cauchy(2.0, &p, 101).is_err());
    }

    #[test]
    fn loop_closes_at_both_ends() {
        let p = desk();
        let tr = trace_loop(1, &p, 21).unwrap();
        assert!(tr.failures.is_empty(), "{:?}", tr.failures);
        assert_eq!(tr.points.len(), 21);
        let mid = tr.points[10].w_plus_upper - tr.points[10].w_minus_lower;
        let (lo, hi) = tr.window;
        for l in [lo + 1e-4 * (hi - lo), hi - 1e-4 * (hi - lo)] {
            let q = p.with_lambda(l);
            let wm = solve_amplitude(1, &q).unwrap();
            let w0 = q.beta() / l - 1.0;
            assert!(w0 - wm < 0.1 * mid, "{l}: {}", w0 - wm);
        }
    }

    #[test]
    fn coarse_grids_take_finer_steps() {
        assert_eq!(substeps(2001), SUBSTEPS);
        assert_eq!(substeps(11), 1600);
        let (lo, up) = nodal_pair(1, &desk(), 11).unwrap();
        let (flo, fup) = nodal_pair(1, &desk(), 2001).unwrap();
        assert_eq!(lo.w_minus, flo.w_minus);
        assert!((lo.profile.values()[5] - flo.profile.values()[1000]).abs() < 1e-9);
        assert!((up.profile.values()[10] - fup.profile.values()[2000]).abs() < 1e-9);
    }
}
