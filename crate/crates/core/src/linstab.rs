//! Neumann spectra of `-D^2 + V(x)`, Morse indices of constant and nodal
//! solutions, and the local bifurcation expansion at `lambda_n^±`.
//!
//! The linearization at a solution `w` has potential
//! `V = -lambda + (b mu/d)/(1 + w)^2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{check_points, simpson, Profile};
use crate::linalg::SymTridiagonal;
use crate::model::ModelParams;
use crate::nodal::{nodal_pair, Branch, NodalSolution};
use crate::spectral::{lambda_roots, tau0_dot, window};

/// `|tau| < DEGENERACY_REL * (1 + |lambda|)` marks a near-zero eigenvalue.
pub const DEGENERACY_REL: f64 = 1e-6;

pub fn degeneracy_tol(lambda: f64) -> f64 {
    DEGENERACY_REL * (1.0 + lambda.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// `-1` for the left end of the window, `+1` for the right end.
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    /// `lambda_n^-` or `lambda_n^+`.
    pub fn endpoint(self, n: u32, p: &ModelParams) -> Option<f64> {
        let r = lambda_roots(n, p).roots?;
        Some(match self {
            Side::Minus => r.0,
            Side::Plus => r.1,
        })
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "minus" | "-" => Ok(Side::Minus),
            "plus" | "+" => Ok(Side::Plus),
            _ => Err(format!("expected `minus` or `plus`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    /// The lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub potential: Profile,
    pub n_points: usize,
    /// Number of negative eigenvalues of the whole discrete operator.
    pub morse_index: usize,
    #[serde(skip)]
    matrix: SymTridiagonal,
}

impl Spectrum {
    /// Eigenfunction for `eigenvalues[ell]`, on the grid.
    pub fn eigenfunction(&self, ell: usize) -> Result<Profile> {
        let tau = *self
            .eigenvalues
            .get(ell)
            .ok_or_else(|| domain("eigenfunction", format!("only {} eigenvalues computed", self.eigenvalues.len())))?;
        let mut v = self.matrix.eigenvector(tau);
        // undo the symmetrizing boundary scaling
        let m = v.len() - 1;
        v[0] *= std::f64::consts::SQRT_2;
        v[m] *= std::f64::consts::SQRT_2;
        Profile::new(v)
    }
}

/// Symmetric form of the ghost-point Neumann discretization of `-D^2 + V`.
///
/// The boundary rows `(2u_0 - 2u_1)/h^2` make the matrix symmetric in the
/// trapezoidal inner product; scaling by its square root turns the coupling
/// to the end nodes into `-sqrt(2)/h^2`.
pub(crate) fn neumann_operator(v: &[f64]) -> SymTridiagonal {
    let m = v.len() - 1;
    let inv_h2 = (m * m) as f64;
    let diag = v.iter().map(|&vi| 2.0 * inv_h2 + vi).collect();
    let off = (0..m)
        .map(|i| {
            if i == 0 || i == m - 1 {
                -std::f64::consts::SQRT_2 * inv_h2
            } else {
                -inv_h2
            }
        })
        .collect();
    SymTridiagonal { diag, off }
}

/// The `m` lowest Neumann eigenvalues of `-D^2 + V`.
pub fn sturm_spectrum(potential: &Profile, m: usize) -> Result<Spectrum> {
    if m == 0 {
        return Err(domain("sturm_spectrum", "m must be at least 1"));
    }
    let n_points = potential.n_points();
    if m > n_points {
        return Err(domain("sturm_spectrum", format!("m = {m} exceeds {n_points} grid points")));
    }
    let matrix = neumann_operator(potential.values());
    let eigenvalues = matrix.lowest(m);
    Ok(Spectrum {
        morse_index: matrix.count_below(0.0),
        eigenvalues,
        potential: potential.clone(),
        n_points,
        matrix,
    })
}

/// `V = -lambda + (b mu/d)/(1 + w)^2` on the grid of `w`.
pub fn linearization_potential(w: &Profile, p: &ModelParams) -> Profile {
    let (lambda, beta) = (p.lambda, p.beta());
    w.map(|wi| -lambda + beta / ((1.0 + wi) * (1.0 + wi)))
}

/// Spectrum of the linearization at the constant solution `w_0`.
pub fn constant_spectrum(p: &ModelParams, n_points: usize, m: usize) -> Result<Spectrum> {
    let w0 = crate::model::w0_const(p)?;
    let w = Profile::constant(n_points, w0)?;
    sturm_spectrum(&linearization_potential(&w, p), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalMorse {
    pub index: usize,
    /// `tau_{n, n-1}`, negative when the index is `n`.
    pub tau_low: f64,
    /// `tau_{n, n}`, positive when the index is `n`.
    pub tau_high: f64,
    /// `|tau_low|` or `|tau_high|` is below the degeneracy tolerance.
    pub degenerate: bool,
}

/// Morse index of a nodal solution and the two eigenvalues that bracket zero.
pub fn morse_index_nodal(sol: &NodalSolution, p: &ModelParams) -> Result<NodalMorse> {
    if sol.lambda != p.lambda || sol.mu != p.mu {
        return Err(domain(
            "morse_index_nodal",
            format!(
                "solution at (lambda, mu) = ({}, {}) but parameters at ({}, {})",
                sol.lambda, sol.mu, p.lambda, p.mu
            ),
        ));
    }
    let n = sol.n as usize;
    let spec = sturm_spectrum(&linearization_potential(&sol.profile, p), n + 3)?;
    let tau_low = spec.eigenvalues[n - 1];
    let tau_high = spec.eigenvalues[n];
    let tol = degeneracy_tol(p.lambda);
    Ok(NodalMorse {
        index: spec.morse_index,
        tau_low,
        tau_high,
        degenerate: tau_low.abs() < tol || tau_high.abs() < tol,
    })
}

/// Spectral data of both nodal branches at one `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMorse {
    pub lambda: f64,
    pub constant: NodalMorse,
    pub lower: NodalMorse,
    pub upper: NodalMorse,
}

/// Morse index of `w_0` and the eigenvalues on either side of zero.
pub fn constant_morse(p: &ModelParams, n_points: usize) -> Result<NodalMorse> {
    let index = constant_spectrum(p, n_points, 1)?.morse_index;
    let spec = constant_spectrum(p, n_points, index + 1)?;
    let tau_high = spec.eigenvalues[index];
    let tau_low = if index > 0 { spec.eigenvalues[index - 1] } else { f64::NEG_INFINITY };
    let tol = degeneracy_tol(p.lambda);
    Ok(NodalMorse {
        index,
        tau_low,
        tau_high,
        degenerate: tau_low.abs() < tol || tau_high.abs() < tol,
    })
}

pub fn branch_morse(n: u32, p: &ModelParams, n_points: usize) -> Result<BranchMorse> {
    let (lo, up) = nodal_pair(n, p, n_points)?;
    Ok(BranchMorse {
        lambda: p.lambda,
        constant: constant_morse(p, n_points)?,
        lower: morse_index_nodal(&lo, p)?,
        upper: morse_index_nodal(&up, p)?,
    })
}

/// `branch_morse` over the interior window grid, in grid order.
pub fn morse_sweep(n: u32, p: &ModelParams, n_lambda: usize, n_points: usize) -> Result<Vec<(f64, Result<BranchMorse>)>> {
    let grid = window_grid(n, p, n_lambda)?;
    Ok(grid
        .par_iter()
        .map(|&l| (l, branch_morse(n, &p.with_lambda(l), n_points)))
        .collect())
}

/// Interior grid of `n_lambda` points in the window of `C_n`.
pub fn window_grid(n: u32, p: &ModelParams, n_lambda: usize) -> Result<Vec<f64>> {
    let (lo, hi) = window(n, p).ok_or_else(|| Error::NoSolution {
        op: "window_grid",
        reason: format!("mu = {} does not exceed mu_{n}", p.mu),
    })?;
    Ok((1..=n_lambda)
        .map(|i| lo + (hi - lo) * i as f64 / (n_lambda + 1) as f64)
        .collect())
}

/// Values of `lambda` in the open window where `tau_{n,n-1}` or `tau_{n,n}`
/// of either nodal branch crosses or touches zero.
///
/// A crossing between two grid points is located by linear interpolation;
/// a touch is an interior local minimum of `|tau|` below the degeneracy
/// tolerance. Points where the pair cannot be computed are skipped.
pub fn detect_singular_set(n: u32, p: &ModelParams, n_lambda: usize) -> Result<Vec<f64>> {
    let grid = window_grid(n, p, n_lambda)?;
    let data: Vec<Option<BranchMorse>> = grid
        .par_iter()
        .map(|&l| branch_morse(n, &p.with_lambda(l), crate::grid::DEFAULT_POINTS).ok())
        .collect();
    let mut found = Vec::new();
    let series: [fn(&BranchMorse) -> f64; 4] = [
        |b| b.lower.tau_low,
        |b| b.lower.tau_high,
        |b| b.upper.tau_low,
        |b| b.upper.tau_high,
    ];
    for tau in series {
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .zip(&data)
            .filter_map(|(&l, d)| d.as_ref().map(|b| (l, tau(b))))
            .collect();
        for w in pts.windows(2) {
            let ((l0, t0), (l1, t1)) = (w[0], w[1]);
            if t0 == 0.0 {
                found.push(l0);
            } else if t0.signum() != t1.signum() && t1 != 0.0 {
                found.push(l0 + (l1 - l0) * t0 / (t0 - t1));
            }
        }
        for w in pts.windows(3) {
            let (a, b, c) = (w[0].1.abs(), w[1].1.abs(), w[2].1.abs());
            if b < a && b <= c && b < degeneracy_tol(w[1].0) && w[0].1.signum() == w[2].1.signum() {
                found.push(w[1].0);
            }
        }
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
    Ok(found)
}

fn endpoint(op: &'static str, n: u32, side: Side, p: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(domain(op, "n must be at least 1"));
    }
    p.validate()?;
    match window(n, p) {
        Some(_) => Ok(side.endpoint(n, p).expect("window implies real roots")),
        None if lambda_roots(n, p).is_real() => Err(Error::Degenerate {
            op,
            reason: format!("mu = {} equals mu_{n}; the roots coincide", p.mu),
        }),
        None => Err(domain(op, format!("mu = {} does not exceed mu_{n}", p.mu))),
    }
}

/// `y_1 = (lambda/2)(d lambda/(n pi b mu))^2 (cos(2 n pi x)/3 - 1)` at
/// `lambda = lambda_n^±`.
pub fn y1_closed_form(n: u32, side: Side, p: &ModelParams, n_points: usize) -> Result<Profile> {
    check_points(n_points)?;
    let lambda = endpoint("y1_closed_form", n, side, p)?;
    let q = p.d * lambda / (n as f64 * PI * p.b * p.mu);
    let c = 0.5 * lambda * q * q;
    let nf = n as f64;
    Profile::from_fn(n_points, |x| c * ((2.0 * nf * PI * x).cos() / 3.0 - 1.0))
}

/// `int_0^1 cos^2(n pi x) y_1 dx = -(5 lambda/24)(d lambda/(n pi b mu))^2`.
pub fn y1_weighted_integral(n: u32, side: Side, p: &ModelParams) -> Result<f64> {
    let lambda = endpoint("y1_weighted_integral", n, side, p)?;
    let q = p.d * lambda / (n as f64 * PI * p.b * p.mu);
    Ok(-5.0 * lambda / 24.0 * q * q)
}

/// Second-order coefficient of `lambda(s) = lambda_n^± + eta_2 s^2 + O(s^3)`,
/// from `(eta_2/2) tau_dot = 2 lambda k^2 int(phi^2 y_1) - lambda k^3 int(phi^4)`
/// with `k = d lambda/(b mu)` and `int(phi^4) = 3/8`.
pub fn eta2_closed_form(n: u32, side: Side, p: &ModelParams) -> Result<f64> {
    let lambda = endpoint("eta2_closed_form", n, side, p)?;
    let k = p.d * lambda / (p.b * p.mu);
    let tdot = tau0_dot(lambda, p);
    if tdot == 0.0 {
        return Err(Error::Degenerate {
            op: "eta2_closed_form",
            reason: "tau_dot vanishes at the double root".into(),
        });
    }
    let i2 = y1_weighted_integral(n, side, p)?;
    let rhs = 2.0 * lambda * k * k * i2 - lambda * k * k * k * 3.0 / 8.0;
    Ok(2.0 * rhs / tdot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub n: u32,
    pub side: Side,
    pub lambda_star: f64,
    pub eta1_estimate: f64,
    pub eta2_estimate: f64,
    pub eta2_closed_form: f64,
    /// Relative L2 distance between `(w - w_0 - s phi_n)/s^2` and `y_1`.
    pub y1_l2_error: f64,
    /// `s` at which `y1_l2_error` was measured.
    pub y1_amplitude: f64,
    pub ladder_points: usize,
}

/// Amplitudes of the fit ladder.
pub const LADDER: [f64; 10] = [0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05];
/// Ladder amplitude at which `y_1` is compared.
pub const Y1_AMPLITUDE: f64 = 0.02;

struct Rung {
    target: f64,
    lambda: f64,
    /// `(s_est, (w - w_0 - s phi)/s^2)` per branch.
    branches: Vec<(f64, Vec<f64>)>,
}

fn rung(n: u32, p: &ModelParams, target: f64, lambda: f64, n_points: usize) -> Result<Rung> {
    let q = p.with_lambda(lambda);
    let w0 = crate::model::w0_const(&q)?;
    let (lo, up) = nodal_pair(n, &q, n_points)?;
    let h = lo.profile.step();
    let phi: Vec<f64> = (0..n_points)
        .map(|i| (n as f64 * PI * i as f64 * h).cos())
        .collect();
    let branches = [lo, up]
        .iter()
        .map(|sol| {
            let u: Vec<f64> = sol.profile.values().iter().map(|w| w - w0).collect();
            let proj: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a * b).collect();
            let s = 2.0 * simpson(&proj, h);
            let r = u.iter().zip(&phi).map(|(a, f)| (a - s * f) / (s * s)).collect();
            (s, r)
        })
        .collect();
    Ok(Rung {
        target,
        lambda,
        branches,
    })
}

/// Fits `lambda(s) = c_0 + eta_1 s + eta_2 s^2 + c_3 s^3` over both nodal
/// branches on a ladder of amplitudes near `lambda_n^±`, and compares the
/// second-order profile with `y_1`.
pub fn fit_expansion(n: u32, side: Side, p: &ModelParams) -> Result<ExpansionCheck> {
    let n_points = crate::grid::DEFAULT_POINTS;
    let lambda_star = endpoint("fit_expansion", n, side, p)?;
    let eta2_cf = eta2_closed_form(n, side, p)?;
    let rungs: Vec<Rung> = LADDER
        .par_iter()
        .filter_map(|&s| rung(n, p, s, lambda_star + eta2_cf * s * s, n_points).ok())
        .collect();
    if rungs.len() < 5 {
        return Err(Error::InsufficientData {
            got: rungs.len(),
            need: 5,
        });
    }
    let pts: Vec<(f64, f64)> = rungs
        .iter()
        .flat_map(|r| r.branches.iter().map(move |b| (b.0, r.lambda)))
        .collect();
    let a = DMatrix::from_fn(pts.len(), 4, |i, j| pts[i].0.powi(j as i32));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1 - lambda_star));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| domain("fit_expansion", e.to_string()))?;

    let y1 = y1_closed_form(n, side, p, n_points)?;
    let at = rungs
        .iter()
        .min_by(|x, y| (x.target - Y1_AMPLITUDE).abs().total_cmp(&(y.target - Y1_AMPLITUDE).abs()))
        .expect("at least five rungs");
    let h = y1.step();
    let avg: Vec<f64> = (0..n_points)
        .map(|i| at.branches.iter().map(|b| b.1[i]).sum::<f64>() / at.branches.len() as f64)
        .collect();
    let diff: Vec<f64> = avg.iter().zip(y1.values()).map(|(a, b)| (a - b) * (a - b)).collect();
    let norm: Vec<f64> = y1.values().iter().map(|b| b * b).collect();
    let y1_l2_error = (simpson(&diff, h) / simpson(&norm, h)).sqrt();

    Ok(ExpansionCheck {
        n,
        side,
        lambda_star,
        eta1_estimate: coef[1],
        eta2_estimate: coef[2],
        eta2_closed_form: eta2_cf,
        y1_l2_error,
        y1_amplitude: at.target,
        ladder_points: pts.len(),
    })
}

/// Which branch a Morse report refers to, for tabular output.
pub fn branch_label(b: Option<Branch>) -> &'static str {
    match b {
        None => "constant",
        Some(Branch::Lower) => "lower",
        Some(Branch::Upper) => "upper",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sign_changes;
    use crate::spectral::tau0;

    fn desk() -> ModelParams {
        ModelParams::desk()
    }

    #[test]
    fn free_neumann_spectrum() {
        let v = Profile::constant(2001, 0.0).unwrap();
        let s = sturm_spectrum(&v, 5).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-9);
        for l in 1..5 {
            let exact = (l as f64 * PI).powi(2);
            assert!((s.eigenvalues[l] - exact).abs() / exact < 1e-4);
        }
        let shifted = sturm_spectrum(&Profile::constant(2001, 3.5).unwrap(), 5).unwrap();
        for l in 0..5 {
            assert!((shifted.eigenvalues[l] - s.eigenvalues[l] - 3.5).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenfunctions_have_l_sign_changes() {
        let v = Profile::from_fn(1001, |x| 30.0 * (3.0 * x).sin()).unwrap();
        let s = sturm_spectrum(&v, 5).unwrap();
        for l in 0..5 {
            let f = s.eigenfunction(l).unwrap();
            assert_eq!(sign_changes(f.values().iter().copied()), l);
        }
    }

    #[test]
    fn constant_spectrum_matches_eigencurves() {
        let p = desk();
        let s = constant_spectrum(&p, 2001, 4).unwrap();
        for l in 0..4 {
            let t = tau0(l as u32, p.lambda, &p);
            assert!((s.eigenvalues[l] - t).abs() <= 1e-4 * t.abs().max(1.0));
        }
        assert_eq!(s.morse_index, 2);
    }

    #[test]
    fn nodal_morse_near_left_end() {
        let p = desk();
        let lm = window(1, &p).unwrap().0;
        let q = p.with_lambda(lm + 0.01);
        let (lo, up) = nodal_pair(1, &q, 2001).unwrap();
        for sol in [&lo, &up] {
            let m = morse_index_nodal(sol, &q).unwrap();
            assert_eq!(m.index, 1);
            assert!(m.tau_low < 0.0 && m.tau_high > 0.0);
        }
        assert_eq!(constant_spectrum(&q, 2001, 1).unwrap().morse_index, 2);
    }

    #[test]
    fn closed_form_identities() {
        let p = desk();
        for side in [Side::Minus, Side::Plus] {
            let y = y1_closed_form(1, side, &p, 2001).unwrap();
            let h = y.step();
            let phi: Vec<f64> = (0..2001).map(|i| (PI * i as f64 * h).cos()).collect();
            let orth: Vec<f64> = phi.iter().zip(y.values()).map(|(a, b)| a * b).collect();
            assert!(simpson(&orth, h).abs() < 1e-10);
            let w2: Vec<f64> = phi.iter().zip(y.values()).map(|(a, b)| a * a * b).collect();
            let exact = y1_weighted_integral(1, side, &p).unwrap();
            assert!((simpson(&w2, h) - exact).abs() < 1e-8 * exact.abs());
            let lam = side.endpoint(1, &p).unwrap();
            let q = lam / (PI * 50.0);
            assert!((y.integrate() + 0.5 * lam * q * q).abs() < 1e-12);
        }
        let em = eta2_closed_form(1, Side::Minus, &p).unwrap();
        let ep = eta2_closed_form(1, Side::Plus, &p).unwrap();
        assert!(em > 0.0 && ep < 0.0);
    }

    #[test]
    fn y1_solves_its_equation() {
        // -y'' - (n pi)^2 y = lambda k^2 (... ) checked through the cosine modes:
        // cos(2 n pi x) picks up (4 - 1)(n pi)^2, the constant picks up -(n pi)^2.
        let p = desk();
        let lam = Side::Minus.endpoint(1, &p).unwrap();
        let y = y1_closed_form(1, Side::Minus, &p, 2001).unwrap();
        let k = lam / 50.0;
        let h = y.step();
        let inv_h2 = 1.0 / (h * h);
        for i in [0, 300, 1000, 2000] {
            let lhs = crate::grid::neg_laplacian4(y.values(), i, inv_h2) - PI * PI * y[i];
            let phi = (PI * i as f64 * h).cos();
            let rhs = lam * k * k * phi * phi;
            assert!((lhs - rhs).abs() < 1e-6, "{i}: {lhs} {rhs}");
        }
    }

    #[test]
    fn eta2_blows_up_at_threshold() {
        let p = desk();
        let mu1 = crate::spectral::mu_threshold(1, &p);
        assert!(matches!(
            eta2_closed_form(1, Side::Minus, &p.with_mu(mu1)),
            Err(Error::Degenerate { .. })
        ));
        let mut prev = 0.0;
        for eps in [1.0, 0.1, 0.01, 0.001] {
            let e = eta2_closed_form(1, Side::Minus, &p.with_mu(mu1 + eps)).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }
}
