//! Coexistence states of the coupled system
//!
//! ```text
//! -w'' = lambda w - eps a(x) w^2 - b w v/(1+w)
//! -v'' = mu v - d v^2 + eps c(x) w v/(1+w)
//! ```
//!
//! with Neumann conditions, by damped Newton on the centered-difference
//! discretization, continued from the `eps = 0` states.
//!
//! With `v` near `mu/d` and a fine grid, rounding a state to the nearest
//! doubles alone moves `-v''` by more than the Newton tolerance. States are
//! therefore carried as a high part plus a low-order correction, and the
//! Laplacian is applied to each part separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{check_points, neg_laplacian, same_grid, Profile};
use crate::linalg::{BandMatrix, SymTridiagonal};
use crate::linstab::{degeneracy_tol, neumann_operator};
use crate::model::{w0_const, CoeffFn, ModelParams};
use crate::nodal::{nodal_pair, Branch};
use crate::spectral::{lambda_roots, window};

pub const NEWTON_TOL: f64 = 1e-9;
pub const MAX_NEWTON_ITERS: usize = 50;
pub const MAX_HALVINGS: usize = 20;
pub const ARMIJO_C: f64 = 1e-4;
/// Sup-norm distance below which two states are the same.
pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Constant,
    Nodal { n: u32, branch: Branch },
    Continued,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Constant => f.write_str("constant"),
            Origin::Nodal { n, branch } => write!(f, "nodal({n},{branch})"),
            Origin::Continued => f.write_str("continued"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceState {
    pub w: Profile,
    pub v: Profile,
    /// Low-order parts: the state is `w + w_lo`, `v + v_lo` nodewise.
    #[serde(skip)]
    pub w_lo: Vec<f64>,
    #[serde(skip)]
    pub v_lo: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// Sup norm of the residual after each iteration, starting with the guess.
    pub residual_history: Vec<f64>,
    pub origin: Origin,
}

impl CoexistenceState {
    /// Sign changes of `w - w0` in `(0, 1)`.
    pub fn crossings(&self, w0: f64) -> usize {
        self.w.crossings(w0)
    }

    pub fn is_positive(&self) -> bool {
        self.w.min() > 0.0 && self.v.min() > 0.0
    }
}

/// Sup-norm distance between two states over both components.
pub fn state_distance(a: &CoexistenceState, b: &CoexistenceState) -> Result<f64> {
    Ok(a.w.sup_dist(&b.w)?.max(a.v.sup_dist(&b.v)?))
}

/// Sampled coefficients and constants for one parameter point.
struct Setup {
    lambda: f64,
    mu: f64,
    b: f64,
    d: f64,
    eps: f64,
    a: Vec<f64>,
    c: Vec<f64>,
    inv_h2: f64,
}

impl Setup {
    fn new(p: &ModelParams, n_points: usize) -> Result<Self> {
        p.validate()?;
        check_points(n_points)?;
        let m = (n_points - 1) as f64;
        Ok(Setup {
            lambda: p.lambda,
            mu: p.mu,
            b: p.b,
            d: p.d,
            eps: p.eps,
            a: p.coeff_a.sample(n_points),
            c: p.coeff_c.sample(n_points),
            inv_h2: m * m,
        })
    }

    /// Residual of the split state `(w + dw, v + dv)`.
    fn residual(&self, w: &[f64], dw: &[f64], v: &[f64], dv: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = w.len();
        let mut rw = vec![0.0; n];
        let mut rv = vec![0.0; n];
        for i in 0..n {
            let lw = neg_laplacian(w, i, self.inv_h2) + neg_laplacian(dw, i, self.inv_h2);
            let lv = neg_laplacian(v, i, self.inv_h2) + neg_laplacian(dv, i, self.inv_h2);
            let wi = w[i] + dw[i];
            let vi = v[i] + dv[i];
            let sat = wi / (1.0 + wi);
            rw[i] = lw - self.lambda * wi + self.eps * self.a[i] * wi * wi + self.b * sat * vi;
            rv[i] = lv - self.mu * vi + self.d * vi * vi - self.eps * self.c[i] * sat * vi;
        }
        (rw, rv)
    }

    /// Jacobian at `(w, v)` with unknowns interleaved as `(w_0, v_0, w_1, v_1, ...)`.
    fn jacobian(&self, w: &[f64], v: &[f64]) -> BandMatrix {
        let n = w.len();
        let mut j = BandMatrix::zeros(2 * n, 2, 2);
        let diag = 2.0 * self.inv_h2;
        for i in 0..n {
            let (wi, vi) = (w[i], v[i]);
            let s = 1.0 + wi;
            let (r, c) = (2 * i, 2 * i + 1);
            j.set(r, r, diag - self.lambda + 2.0 * self.eps * self.a[i] * wi + self.b * vi / (s * s));
            j.set(r, c, self.b * wi / s);
            j.set(c, c, diag - self.mu + 2.0 * self.d * vi - self.eps * self.c[i] * wi / s);
            j.set(c, r, -self.eps * self.c[i] * vi / (s * s));
            let (left, right) = match i {
                0 => (0.0, -2.0 * self.inv_h2),
                _ if i == n - 1 => (-2.0 * self.inv_h2, 0.0),
                _ => (-self.inv_h2, -self.inv_h2),
            };
            if i > 0 {
                j.set(r, r - 2, left);
                j.set(c, c - 2, left);
            }
            if i + 1 < n {
                j.set(r, r + 2, right);
                j.set(c, c + 2, right);
            }
        }
        j
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn merit(rw: &[f64], rv: &[f64]) -> f64 {
    0.5 * (rw.iter().map(|x| x * x).sum::<f64>() + rv.iter().map(|x| x * x).sum::<f64>())
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Centered-difference residual of both equations.
pub fn residual(w: &Profile, v: &Profile, p: &ModelParams) -> Result<(Profile, Profile)> {
    same_grid(w, v)?;
    if let Some(i) = w.values().iter().position(|&x| !(x > -1.0)) {
        return Err(domain("residual", format!("w = {} at node {i} must exceed -1", w[i])));
    }
    let n = w.n_points();
    let setup = Setup::new(p, n)?;
    let zero = vec![0.0; n];
    let (rw, rv) = setup.residual(w.values(), &zero, v.values(), &zero);
    Ok((Profile::new(rw)?, Profile::new(rv)?))
}

/// Residual of a state including its low-order parts.
pub fn state_residual(s: &CoexistenceState, p: &ModelParams) -> Result<(Profile, Profile)> {
    let n = s.w.n_points();
    let setup = Setup::new(p, n)?;
    let zero = vec![0.0; n];
    let w_lo = if s.w_lo.len() == n { &s.w_lo } else { &zero };
    let v_lo = if s.v_lo.len() == n { &s.v_lo } else { &zero };
    let (rw, rv) = setup.residual(s.w.values(), w_lo, s.v.values(), v_lo);
    Ok((Profile::new(rw)?, Profile::new(rv)?))
}

fn newton_split(
    w: &[f64],
    w_lo: &[f64],
    v: &[f64],
    v_lo: &[f64],
    p: &ModelParams,
    origin: Origin,
) -> Result<CoexistenceState> {
    let n = w.len();
    let setup = Setup::new(p, n)?;
    if w.iter().zip(w_lo).any(|(a, b)| !(a + b > -1.0)) {
        return Err(domain("newton_solve", "initial w must exceed -1 at every node"));
    }
    let mut dw = w_lo.to_vec();
    let mut dv = v_lo.to_vec();
    let (mut rw, mut rv) = setup.residual(w, &dw, v, &dv);
    let mut res = sup(&rw).max(sup(&rv));
    let mut history = vec![res];
    let mut iters = 0;
    while res >= NEWTON_TOL {
        if iters == MAX_NEWTON_ITERS {
            return Err(Error::NonConvergence {
                op: "newton_solve",
                iterations: iters,
                residual: res,
            });
        }
        iters += 1;
        let cw: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
        let cv: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
        let lu = setup.jacobian(&cw, &cv).factor()?;
        let mut step: Vec<f64> = rw.iter().zip(&rv).flat_map(|(a, b)| [-a, -b]).collect();
        lu.solve_in_place(&mut step);

        let m0 = merit(&rw, &rv);
        let mut t = 1.0;
        let mut accepted = None;
        let mut positivity_failed = false;
        for _ in 0..=MAX_HALVINGS {
            let tw: Vec<f64> = (0..n).map(|i| dw[i] + t * step[2 * i]).collect();
            let tv: Vec<f64> = (0..n).map(|i| dv[i] + t * step[2 * i + 1]).collect();
            let positive = (0..n).all(|i| w[i] + tw[i] > 0.0 && v[i] + tv[i] > 0.0);
            if positive {
                let (nw, nv) = setup.residual(w, &tw, v, &tv);
                let m1 = merit(&nw, &nv);
                let ok = if t == 1.0 { m1 < m0 } else { m1 <= (1.0 - 2.0 * ARMIJO_C * t) * m0 };
                if ok && m1.is_finite() {
                    accepted = Some((tw, tv, nw, nv));
                    break;
                }
            } else {
                positivity_failed = true;
            }
            t *= 0.5;
        }
        match accepted {
            Some((tw, tv, nw, nv)) => {
                dw = tw;
                dv = tv;
                rw = nw;
                rv = nv;
                res = sup(&rw).max(sup(&rv));
                history.push(res);
            }
            None if positivity_failed => {
                return Err(Error::PositivityLoss {
                    op: "newton_solve",
                    iteration: iters,
                })
            }
            None => {
                return Err(Error::NonConvergence {
                    op: "newton_solve",
                    iterations: iters,
                    residual: res,
                })
            }
        }
    }
    let (wh, wl): (Vec<f64>, Vec<f64>) = w.iter().zip(&dw).map(|(&a, &b)| two_sum(a, b)).unzip();
    let (vh, vl): (Vec<f64>, Vec<f64>) = v.iter().zip(&dv).map(|(&a, &b)| two_sum(a, b)).unzip();
    let state = CoexistenceState {
        w: Profile::new(wh)?,
        v: Profile::new(vh)?,
        w_lo: wl,
        v_lo: vl,
        lambda: p.lambda,
        mu: p.mu,
        eps: p.eps,
        residual_sup: res,
        newton_iters: iters,
        residual_history: history,
        origin,
    };
    if !state.is_positive() {
        return Err(Error::PositivityLoss {
            op: "newton_solve",
            iteration: iters,
        });
    }
    Ok(state)
}

/// Damped Newton from the guess `(w0, v0)`.
pub fn newton_solve(w0: &Profile, v0: &Profile, p: &ModelParams) -> Result<CoexistenceState> {
    same_grid(w0, v0)?;
    let zero = vec![0.0; w0.n_points()];
    newton_split(w0.values(), &zero, v0.values(), &zero, p, Origin::Continued)
}

/// Newton warm-started from a converged state, keeping its low-order parts.
pub fn resolve(start: &CoexistenceState, p: &ModelParams, origin: Origin) -> Result<CoexistenceState> {
    let n = start.w.n_points();
    let zero = vec![0.0; n];
    let w_lo = if start.w_lo.len() == n { &start.w_lo } else { &zero };
    let v_lo = if start.v_lo.len() == n { &start.v_lo } else { &zero };
    newton_split(start.w.values(), w_lo, start.v.values(), v_lo, p, origin)
}

/// The discrete `eps = 0` state obtained by polishing `(w, mu/d)`.
pub fn unperturbed_state(w: &Profile, p: &ModelParams, origin: Origin) -> Result<CoexistenceState> {
    let q = p.with_eps(0.0);
    let v = Profile::constant(w.n_points(), p.mu / p.d)?;
    let zero = vec![0.0; w.n_points()];
    newton_split(w.values(), &zero, v.values(), &zero, &q, origin)
}

/// Analytic Jacobian applied to `dir = (dw, dv)`.
pub fn jacobian_apply(
    w: &Profile,
    v: &Profile,
    dw: &[f64],
    dv: &[f64],
    p: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    same_grid(w, v)?;
    let n = w.n_points();
    let setup = Setup::new(p, n)?;
    let j = setup.jacobian(w.values(), v.values());
    let x: Vec<f64> = dw.iter().zip(dv).flat_map(|(a, b)| [*a, *b]).collect();
    let y = j.mul_vec(&x);
    Ok((
        y.iter().step_by(2).copied().collect(),
        y.iter().skip(1).step_by(2).copied().collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub states: usize,
    pub max_rel_error: f64,
}

/// Compares the analytic Jacobian with central differences of the residual
/// along random directions at random positive states.
pub fn jacobian_check(p: &ModelParams, n_points: usize, n_states: usize, seed: u64) -> Result<JacobianReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0 = w0_const(p)?;
    let vbar = p.mu / p.d;
    let mut worst = 0.0f64;
    for _ in 0..n_states {
        let (k1, k2) = (rng.gen_range(1..5) as f64, rng.gen_range(1..5) as f64);
        let (a1, a2) = (rng.gen_range(0.1..0.5), rng.gen_range(0.05..0.2));
        let w = Profile::from_fn(n_points, |x| w0 * (1.0 + a1 * (k1 * std::f64::consts::PI * x).cos()))?;
        let v = Profile::from_fn(n_points, |x| vbar * (1.0 + a2 * (k2 * std::f64::consts::PI * x).sin()))?;
        let (k3, k4) = (rng.gen_range(1..6) as f64, rng.gen_range(1..6) as f64);
        let dw: Vec<f64> = (0..n_points)
            .map(|i| (k3 * std::f64::consts::PI * i as f64 / (n_points - 1) as f64).cos() + rng.gen_range(-0.1..0.1))
            .collect();
        let dv: Vec<f64> = (0..n_points)
            .map(|i| (k4 * std::f64::consts::PI * i as f64 / (n_points - 1) as f64).cos() + rng.gen_range(-0.1..0.1))
            .collect();
        let (jw, jv) = jacobian_apply(&w, &v, &dw, &dv, p)?;
        let h = 1e-6;
        let shift = |sgn: f64| -> Result<(Profile, Profile)> {
            let ws = Profile::new(w.values().iter().zip(&dw).map(|(a, b)| a + sgn * h * b).collect())?;
            let vs = Profile::new(v.values().iter().zip(&dv).map(|(a, b)| a + sgn * h * b).collect())?;
            residual(&ws, &vs, p)
        };
        let (pw, pv) = shift(1.0)?;
        let (mw, mv) = shift(-1.0)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n_points {
            let fw = (pw[i] - mw[i]) / (2.0 * h);
            let fv = (pv[i] - mv[i]) / (2.0 * h);
            num += (fw - jw[i]).powi(2) + (fv - jv[i]).powi(2);
            den += jw[i].powi(2) + jv[i].powi(2);
        }
        worst = worst.max((num / den).sqrt());
    }
    Ok(JacobianReport {
        states: n_states,
        max_rel_error: worst,
    })
}

/// Smallest `|tau|` of a symmetric tridiagonal operator.
fn nearest_to_zero(t: &SymTridiagonal) -> f64 {
    let k = t.count_below(0.0);
    let above = t.eigenvalue(k.min(t.len() - 1)).abs();
    if k > 0 {
        above.min(t.eigenvalue(k - 1).abs())
    } else {
        above
    }
}

/// Solves the tridiagonal Neumann system `(-D^2 + V) u = rhs`.
fn solve_neumann(potential: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = potential.len();
    let inv_h2 = ((n - 1) * (n - 1)) as f64;
    let mut m = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        m.set(i, i, 2.0 * inv_h2 + potential[i]);
        if i > 0 {
            m.set(i, i - 1, if i == n - 1 { -2.0 * inv_h2 } else { -inv_h2 });
        }
        if i + 1 < n {
            m.set(i, i + 1, if i == 0 { -2.0 * inv_h2 } else { -inv_h2 });
        }
    }
    let mut x = rhs.to_vec();
    m.factor()?.solve_in_place(&mut x);
    Ok(x)
}

/// `(phi, psi)` in `W = w + eps phi + O(eps^2)`, `V = mu/d + eps psi + O(eps^2)`
/// about the `eps = 0` state with prey profile `w`:
///
/// ```text
/// (-D^2 + mu) psi = (mu/d) c w/(1+w)
/// (-D^2 - lambda + (b mu/d)/(1+w)^2) phi = -a w^2 - b w psi/(1+w)
/// ```
pub fn first_order_corrections(w: &Profile, p: &ModelParams) -> Result<(Profile, Profile)> {
    p.require_window("first_order_corrections")?;
    let n = w.n_points();
    let q = p.with_eps(0.0);
    let v = crate::linstab::linearization_potential(w, &q);
    let tol = degeneracy_tol(p.lambda);
    let tau = nearest_to_zero(&neumann_operator(v.values()));
    if tau < tol {
        return Err(Error::NearSingular {
            op: "first_order_corrections",
            tau,
            tol,
        });
    }
    let a = p.coeff_a.sample(n);
    let c = p.coeff_c.sample(n);
    let ws = w.values();
    let rhs_psi: Vec<f64> = (0..n).map(|i| p.mu / p.d * c[i] * ws[i] / (1.0 + ws[i])).collect();
    let psi = solve_neumann(&vec![p.mu; n], &rhs_psi)?;
    let rhs_phi: Vec<f64> = (0..n)
        .map(|i| -a[i] * ws[i] * ws[i] - p.b * ws[i] * psi[i] / (1.0 + ws[i]))
        .collect();
    let phi = solve_neumann(v.values(), &rhs_phi)?;
    Ok((Profile::new(phi)?, Profile::new(psi)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartFailure {
    pub origin: Origin,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusResult {
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub states: Vec<CoexistenceState>,
    pub distinct_count: usize,
    pub starts: usize,
    /// Fewer distinct states than starts, a sign that `eps` is too large.
    pub shortfall: bool,
    pub failures: Vec<StartFailure>,
    /// Positive constant states of the algebraic system when `a`, `c` are
    /// constant, including any far from `(w_0, mu/d)`.
    pub constant_roots: Vec<(f64, f64)>,
}

/// Relative distance kept between `lambda` and every `lambda_m^±`.
pub const WINDOW_MARGIN: f64 = 1e-3;

fn check_admissible(n: u32, p: &ModelParams) -> Result<()> {
    p.require_window("census")?;
    let op = "census";
    match window(n, p) {
        Some((lo, hi)) if p.lambda > lo && p.lambda < hi => {}
        Some((lo, hi)) => {
            return Err(domain(op, format!("lambda = {} outside ({lo}, {hi})", p.lambda)));
        }
        None => return Err(domain(op, format!("mu = {} does not exceed mu_{n}", p.mu))),
    }
    if let Some((lo, hi)) = window(n + 1, p) {
        if p.lambda > lo && p.lambda < hi {
            return Err(domain(
                op,
                format!("lambda = {} inside the window of C_{} ({lo}, {hi})", p.lambda, n + 1),
            ));
        }
    }
    let margin = WINDOW_MARGIN * (1.0 + p.lambda);
    for m in 1..=crate::spectral::default_ell_max(p) {
        if let Some((lo, hi)) = lambda_roots(m, p).roots {
            for e in [lo, hi] {
                if (p.lambda - e).abs() < margin {
                    return Err(domain(op, format!("lambda = {} within {margin:e} of lambda_{m}^± = {e}", p.lambda)));
                }
            }
        }
    }
    Ok(())
}

/// Starting states at `eps = 0`: the constant and the nodal pairs for `j = 1..=n`.
pub fn unperturbed_states(n: u32, p: &ModelParams, n_points: usize) -> Vec<(Origin, Result<CoexistenceState>)> {
    let mut seeds: Vec<(Origin, Option<u32>)> = vec![(Origin::Constant, None)];
    for j in 1..=n {
        for b in [Branch::Lower, Branch::Upper] {
            seeds.push((Origin::Nodal { n: j, branch: b }, Some(j)));
        }
    }
    seeds
        .into_par_iter()
        .map(|(origin, j)| {
            let r = (|| {
                let w = match (origin, j) {
                    (Origin::Nodal { branch, .. }, Some(j)) => {
                        let (lo, up) = nodal_pair(j, p, n_points)?;
                        if branch == Branch::Lower { lo.profile } else { up.profile }
                    }
                    _ => Profile::constant(n_points, w0_const(p)?)?,
                };
                unperturbed_state(&w, p, origin)
            })();
            (origin, r)
        })
        .collect()
}

/// Continues the `2n + 1` states of the limit system to `p.eps`.
pub fn census(n: u32, p: &ModelParams, n_points: usize) -> Result<CensusResult> {
    check_admissible(n, p)?;
    let seeds = unperturbed_states(n, p, n_points);
    let starts = seeds.len();
    let solved: Vec<(Origin, Result<CoexistenceState>)> = seeds
        .into_par_iter()
        .map(|(origin, s)| (origin, s.and_then(|s| resolve(&s, p, origin))))
        .collect();
    let mut states: Vec<CoexistenceState> = Vec::new();
    let mut failures = Vec::new();
    for (origin, r) in solved {
        match r {
            Ok(s) => {
                let mut fresh = true;
                for t in &states {
                    if state_distance(&s, t)? <= DISTINCT_TOL {
                        fresh = false;
                    }
                }
                if fresh {
                    states.push(s);
                } else {
                    failures.push(StartFailure {
                        origin,
                        error: "converged onto an already listed state".into(),
                    });
                }
            }
            Err(e) => failures.push(StartFailure {
                origin,
                error: e.to_string(),
            }),
        }
    }
    let constant_roots = constant_states(p).unwrap_or_default();
    Ok(CensusResult {
        lambda: p.lambda,
        mu: p.mu,
        eps: p.eps,
        distinct_count: states.len(),
        shortfall: states.len() < starts,
        states,
        starts,
        failures,
        constant_roots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub last_good_eps: f64,
    pub failed_eps: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub states: Vec<CoexistenceState>,
    pub breakdown: Option<Breakdown>,
}

/// Natural-parameter continuation on a uniform `eps` ladder from `start.eps`
/// to `eps_target`; each solve is warm-started from the previous state.
pub fn continue_in_eps(start: &CoexistenceState, p: &ModelParams, eps_target: f64, steps: usize) -> Result<Continuation> {
    if !(eps_target >= 0.0) {
        return Err(domain("continue_in_eps", format!("eps_target = {eps_target} must be non-negative")));
    }
    let mut states = vec![start.clone()];
    if eps_target == start.eps {
        return Ok(Continuation { states, breakdown: None });
    }
    let steps = steps.max(1);
    let base = p.with_lambda(start.lambda).with_mu(start.mu);
    for k in 1..=steps {
        let eps = start.eps + (eps_target - start.eps) * k as f64 / steps as f64;
        let prev = states.last().expect("non-empty");
        match resolve(prev, &base.with_eps(eps), Origin::Continued) {
            Ok(s) => states.push(s),
            Err(e) => {
                let last_good_eps = prev.eps;
                return Ok(Continuation {
                    states,
                    breakdown: Some(Breakdown {
                        last_good_eps,
                        failed_eps: eps,
                        reason: e.to_string(),
                    }),
                });
            }
        }
    }
    Ok(Continuation { states, breakdown: None })
}

/// Positive constant solutions `(w, v)` for constant `a` and `c`.
///
/// Eliminating `v = (mu + eps c w/(1+w))/d` leaves the cubic
/// `-eps a w^3 + (lambda - 2 eps a) w^2 + (2 lambda - eps a - (b/d)(mu + eps c)) w + lambda - b mu/d`.
pub fn constant_states(p: &ModelParams) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    let (a, c) = match (p.coeff_a.as_constant(), p.coeff_c.as_constant()) {
        (Some(a), Some(c)) => (a, c),
        _ => return Err(domain("constant_states", "coefficients a and c must be constant")),
    };
    let (l, e, bd) = (p.lambda, p.eps, p.b / p.d);
    let coeffs = [l - bd * p.mu, 2.0 * l - e * a - bd * (p.mu + e * c), l - 2.0 * e * a, -e * a];
    let eval = |w: f64| coeffs[0] + w * (coeffs[1] + w * (coeffs[2] + w * coeffs[3]));
    let deriv = |w: f64| coeffs[1] + w * (2.0 * coeffs[2] + w * 3.0 * coeffs[3]);
    let mut roots = poly_real_roots(&coeffs);
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let d = deriv(*r);
            if d == 0.0 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    let mut out: Vec<(f64, f64)> = roots
        .into_iter()
        .filter(|&w| w > 0.0 && w.is_finite())
        .map(|w| (w, (p.mu + e * c * w / (1.0 + w)) / p.d))
        .filter(|&(w, v)| {
            let s = w / (1.0 + w);
            let r1 = l - e * a * w - p.b * v / (1.0 + w);
            let r2 = p.mu - p.d * v + e * c * s;
            let scale1 = l.abs() + (e * a * w).abs() + (p.b * v / (1.0 + w)).abs();
            let scale2 = p.mu.abs() + (p.d * v).abs() + (e * c * s).abs();
            v > 0.0 && r1.abs() <= 1e-12 * scale1 && r2.abs() <= 1e-12 * scale2
        })
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out.dedup_by(|x, y| (x.0 - y.0).abs() <= 1e-12 * (1.0 + y.0.abs()));
    Ok(out)
}

/// Real roots of `sum coeffs[k] w^k`, degree at most 3.
fn poly_real_roots(coeffs: &[f64; 4]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut deg = 3;
    while deg > 0 && coeffs[deg].abs() <= 1e-300_f64.max(f64::EPSILON * 1e-3 * scale) {
        deg -= 1;
    }
    match deg {
        0 => vec![],
        1 => vec![-coeffs[0] / coeffs[1]],
        2 => {
            let (a, b, c) = (coeffs[2], coeffs[1], coeffs[0]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return vec![];
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut r = vec![q / a];
            if q != 0.0 {
                r.push(c / q);
            }
            r
        }
        _ => {
            let m = nalgebra::Matrix3::new(
                0.0,
                0.0,
                -coeffs[0] / coeffs[3],
                1.0,
                0.0,
                -coeffs[1] / coeffs[3],
                0.0,
                1.0,
                -coeffs[2] / coeffs[3],
            );
            m.complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect()
        }
    }
}

/// `CoeffFn` from a command-line value `const:<v>` or `csv:<path>`.
pub fn parse_coeff_spec(spec: &str) -> Result<CoeffFn> {
    if let Some(v) = spec.strip_prefix("const:") {
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Table(format!("bad constant `{v}`")))?;
        CoeffFn::constant(v)
    } else if let Some(path) = spec.strip_prefix("csv:") {
        CoeffFn::from_csv_path(path)
    } else {
        Err(Error::Table(format!("expected `const:<v>` or `csv:<path>`, got `{spec}`")))
    }
}
