//! Desk-scale acceptance checks, shared by the test suite and the
//! `--seed-check` entry point of the command-line tool.
//!
//! Every check prints numbers with fixed formatting and no timings, so the
//! report is byte-identical across runs.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{simpson, DEFAULT_POINTS};
use crate::linstab::{
    branch_morse, constant_spectrum, fit_expansion, linearization_potential, sturm_spectrum,
    window_grid, y1_closed_form, y1_weighted_integral, Side,
};
use crate::model::{w0_const, ModelParams, PhaseState};
use crate::nodal::{bvp_residual, flow, nodal_pair, solve_amplitude, SUBSTEPS};
use crate::perturbed::{
    census, first_order_corrections, jacobian_check, resolve, unperturbed_state, Origin,
    NEWTON_TOL,
};
use crate::spectral::{lambda_roots, mu_threshold, regime, tau0, MorseIndexTable};
use crate::timemap::{ab_certify, interior_grid, monotone_check, time_map, time_map_center};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:02} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn outcome(id: u32, name: &'static str, r: Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((passed, detail)) => CheckOutcome { id, name, passed, detail },
        Err(e) => CheckOutcome {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn desk() -> ModelParams {
    ModelParams::desk()
}

pub fn spectral_exactness() -> CheckOutcome {
    outcome(1, "spectral exactness", (|| {
        let p = desk();
        let (lo, hi) = lambda_roots(1, &p).roots.ok_or_else(|| crate::error::domain("check", "complex roots"))?;
        let t = tau0(1, lo, &p).abs().max(tau0(1, hi, &p).abs());
        let sum = ((lo + hi) - 50.0).abs() / 50.0;
        let prod_exact = 50.0 * PI * PI;
        let prod = (lo * hi - prod_exact).abs() / prod_exact;
        let ok = t < 1e-12 && sum < 1e-12 && prod < 1e-12;
        Ok((ok, format!("max|tau| = {t:.2e}, sum rel = {sum:.2e}, product rel = {prod:.2e}")))
    })())
}

pub fn threshold_coincidence() -> CheckOutcome {
    outcome(2, "threshold coincidence", (|| {
        let p = desk();
        let mut ok = true;
        let mut worst = 0.0f64;
        for kappa in 1..=3 {
            let q = p.with_mu(mu_threshold(kappa, &p));
            match lambda_roots(kappa, &q).roots {
                Some((a, b)) => {
                    let target = q.beta() / 2.0;
                    let e = ((a - target).abs()).max((b - target).abs()) / target;
                    worst = worst.max(e);
                    ok &= a == b && e < 1e-12;
                }
                None => ok = false,
            }
        }
        Ok((ok, format!("double roots at kappa = 1..3, max rel dev from b mu/(2d) = {worst:.2e}")))
    })())
}

pub fn center_limit() -> CheckOutcome {
    outcome(3, "time-map center limit", (|| {
        let p = desk();
        let w0 = w0_const(&p)?;
        let t = time_map(w0 * (1.0 - 1e-6), &p)?.t;
        let tc = PI / (p.lambda * (1.0 - p.d * p.lambda / (p.b * p.mu))).sqrt();
        let rel = (t - tc).abs() / t;
        Ok((rel < 1e-5, format!("T = {t:.12}, limit = {tc:.12}, rel = {rel:.2e}")))
    })())
}

pub fn monotonicity_divergence() -> CheckOutcome {
    outcome(4, "time-map monotonicity and divergence", (|| {
        let p = desk();
        let w0 = w0_const(&p)?;
        let mono = monotone_check(&p, &interior_grid(w0, 200));
        let tc = time_map_center(&p)?;
        let t = time_map(1e-6 * w0, &p)?.t;
        let ratio = t / tc;
        Ok((
            mono && ratio > 5.0,
            format!("decreasing on 200 points: {mono}, T(1e-6 w0)/T(w0) = {ratio:.4} (needs > 5)"),
        ))
    })())
}

pub fn ab_certification() -> CheckOutcome {
    outcome(5, "A-B certification", (|| {
        let r = ab_certify(&desk(), 10_000)?;
        let ok = r.a_margin < 0.0 && r.b_margin < 0.0 && r.simple_zero_ok;
        Ok((
            ok,
            format!("A margin = {:.4e}, B margin = {:.4e}, alpha = {:.12}", r.a_margin, r.b_margin, r.alpha),
        ))
    })())
}

pub fn exact_multiplicity() -> CheckOutcome {
    outcome(6, "exact multiplicity at kappa = 1", (|| {
        let p = desk();
        let kappa = regime(&p);
        let w0 = w0_const(&p)?;
        let constant = crate::grid::Profile::constant(DEFAULT_POINTS, w0)?;
        let mut sols = vec![constant];
        let mut crossings = Vec::new();
        for n in 1..=kappa {
            let (lo, up) = nodal_pair(n, &p, DEFAULT_POINTS)?;
            crossings.push(lo.crossings);
            crossings.push(up.crossings);
            sols.push(lo.profile);
            sols.push(up.profile);
        }
        let beyond = solve_amplitude(kappa + 1, &p);
        let residual = sols.iter().map(|s| bvp_residual(s, &p)).fold(0.0, f64::max);
        let mut distinct = true;
        for i in 0..sols.len() {
            for j in 0..i {
                distinct &= sols[i].sup_dist(&sols[j])? > 1e-6;
            }
        }
        let (lo, hi) = lambda_roots(1, &p).roots.expect("mu > mu_1");
        let outside = [lo - 1.0, lo - 1e-6, hi + 1e-6, hi + 1.0]
            .iter()
            .all(|&l| matches!(solve_amplitude(1, &p.with_lambda(l)), Err(Error::NoSolution { .. })));
        let ok = kappa == 1
            && sols.len() == 3
            && distinct
            && residual < 1e-6
            && crossings.iter().all(|&c| c == 1)
            && matches!(beyond, Err(Error::NoSolution { .. }))
            && outside;
        Ok((
            ok,
            format!(
                "kappa = {kappa}, solutions = {}, max BVP residual = {residual:.2e}, crossings = {crossings:?}, no solution outside window: {outside}",
                sols.len()
            ),
        ))
    })())
}

pub fn cross_oracle() -> CheckOutcome {
    outcome(7, "quadrature/ODE cross-oracle", (|| {
        let p = desk();
        let w0 = w0_const(&p)?;
        let max_step = 1.0 / ((DEFAULT_POINTS - 1) * SUBSTEPS) as f64;
        let errs: Vec<Result<f64>> = interior_grid(w0, 20)
            .par_iter()
            .map(|&wm| {
                let s = time_map(wm, &p)?;
                let end = flow(PhaseState { w: wm, z: 0.0 }, s.t, &p, max_step)?;
                Ok((end.w - s.w_plus).abs().max(end.z.abs()))
            })
            .collect();
        let worst = errs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        Ok((worst < 1e-6, format!("20 orbits, max landing error = {worst:.2e}")))
    })())
}

pub fn morse_indices() -> CheckOutcome {
    outcome(8, "Morse indices", (|| {
        let p = desk();
        let at = branch_morse(1, &p, DEFAULT_POINTS)?;
        let point_ok = at.constant.index == 2 && at.lower.index == 1 && at.upper.index == 1;

        let table = MorseIndexTable::build(&p)?;
        let beta = p.beta();
        let sweep: Vec<f64> = (0..50).map(|i| beta * (i as f64 + 0.5) / 50.0).collect();
        let stair: Vec<Result<bool>> = sweep
            .par_iter()
            .map(|&l| {
                let q = p.with_lambda(l);
                let c = constant_spectrum(&q, DEFAULT_POINTS, 1)?.morse_index as u32;
                let mut ok = c == table.index_at(l);
                if let Ok(b) = branch_morse(1, &q, DEFAULT_POINTS) {
                    ok &= b.lower.index as u32 == c - 1 && b.upper.index as u32 == c - 1;
                } else {
                    // no pair outside the window
                    ok &= !(l > table.breakpoints[0] && l < table.breakpoints[1]);
                }
                Ok(ok)
            })
            .collect();
        let stair_ok = stair.into_iter().collect::<Result<Vec<_>>>()?.into_iter().all(|b| b);

        let mut taus = Vec::new();
        for n_points in [501, 1001, 2001] {
            let (lo, _) = nodal_pair(1, &p, n_points)?;
            taus.push(sturm_spectrum(&linearization_potential(&lo.profile, &p), 3)?.eigenvalues);
        }
        let ratios: Vec<f64> = (0..3)
            .map(|l| (taus[0][l] - taus[1][l]) / (taus[1][l] - taus[2][l]))
            .collect();
        let rich_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
        Ok((
            point_ok && stair_ok && rich_ok,
            format!(
                "indices (constant, lower, upper) = ({}, {}, {}), 50-point staircase: {stair_ok}, Richardson ratios = [{:.4}, {:.4}, {:.4}]",
                at.constant.index, at.lower.index, at.upper.index, ratios[0], ratios[1], ratios[2]
            ),
        ))
    })())
}

pub fn sign_sandwich() -> CheckOutcome {
    outcome(9, "sign sandwich", (|| {
        let p = desk();
        let grid = window_grid(1, &p, 50)?;
        let data: Vec<Result<(f64, f64)>> = grid
            .par_iter()
            .map(|&l| {
                let b = branch_morse(1, &p.with_lambda(l), DEFAULT_POINTS)?;
                Ok((b.lower.tau_low.max(b.upper.tau_low), b.lower.tau_high.min(b.upper.tau_high)))
            })
            .collect();
        let data = data.into_iter().collect::<Result<Vec<_>>>()?;
        let low = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
        let high = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        Ok((
            low <= 1e-6 && high >= -1e-6,
            format!("50 points, max tau_(1,0) = {low:.4e}, min tau_(1,1) = {high:.4e}"),
        ))
    })())
}

pub fn bifurcation_direction() -> CheckOutcome {
    outcome(10, "bifurcation direction", (|| {
        let p = desk();
        let mut ok = true;
        let mut parts = Vec::new();
        for side in [Side::Minus, Side::Plus] {
            let e = fit_expansion(1, side, &p)?;
            let eta1_ok = e.eta1_estimate.abs() < 1e-3 * e.eta2_estimate.abs() * 0.05;
            let sign_ok = e.eta2_estimate.signum() == -side.sign() && e.eta2_estimate.signum() == e.eta2_closed_form.signum();
            ok &= eta1_ok && sign_ok && e.y1_l2_error < 0.05;
            parts.push(format!(
                "{side}: eta1 = {:.2e}, eta2 = {:.6} (closed form {:.6}), y1 error = {:.2e}",
                e.eta1_estimate, e.eta2_estimate, e.eta2_closed_form, e.y1_l2_error
            ));
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub fn integral_identity() -> CheckOutcome {
    outcome(11, "closed-form integral identity", (|| {
        let p = desk();
        let mut worst = 0.0f64;
        for side in [Side::Minus, Side::Plus] {
            let y = y1_closed_form(1, side, &p, DEFAULT_POINTS)?;
            let h = y.step();
            let f: Vec<f64> = (0..DEFAULT_POINTS)
                .map(|i| (PI * i as f64 * h).cos().powi(2) * y[i])
                .collect();
            let exact = y1_weighted_integral(1, side, &p)?;
            worst = worst.max((simpson(&f, h) - exact).abs() / exact.abs());
        }
        Ok((worst < 1e-8, format!("max rel error over both sides = {worst:.2e}")))
    })())
}

pub fn perturbed_census() -> CheckOutcome {
    outcome(12, "perturbed census", (|| {
        let p = desk();
        let eps = 1e-3;
        let c = census(1, &p.with_eps(eps), DEFAULT_POINTS)?;
        let w0 = w0_const(&p)?;
        let residual = c.states.iter().map(|s| s.residual_sup).fold(0.0, f64::max);
        let positive = c.states.iter().all(|s| s.is_positive());
        let crossings_ok = c.states.iter().all(|s| {
            let want = match s.origin {
                Origin::Nodal { n, .. } => n as usize,
                _ => 0,
            };
            s.crossings(w0) == want
        });

        let (lo, _) = nodal_pair(1, &p, DEFAULT_POINTS)?;
        let origin = Origin::Nodal { n: 1, branch: crate::nodal::Branch::Lower };
        let base = unperturbed_state(&lo.profile, &p, origin)?;
        let (phi, _) = first_order_corrections(&base.w, &p)?;
        let mut slopes = Vec::new();
        let mut errs = Vec::new();
        for e in [1e-2, 5e-3, 2.5e-3] {
            let s = resolve(&base, &p.with_eps(e), origin)?;
            let mut c = 0.0f64;
            let mut r = 0.0f64;
            for i in 0..DEFAULT_POINTS {
                let d = ((s.w[i] - base.w[i]) + (s.w_lo[i] - base.w_lo[i])) / e;
                c = c.max(d.abs());
                r = r.max((d - phi[i]).abs());
            }
            slopes.push(c);
            errs.push(r);
        }
        let stable = slopes.windows(2).all(|w| (w[0] - w[1]).abs() < 0.05 * w[1]);
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        let linear = ratios.iter().all(|r| (1.8..=2.2).contains(r));
        let ok = c.distinct_count == 3 && residual < NEWTON_TOL && positive && crossings_ok && stable && linear;
        Ok((
            ok,
            format!(
                "distinct = {}, max residual = {residual:.2e}, positive: {positive}, crossings kept: {crossings_ok}, |W - w1|/eps = [{:.6}, {:.6}, {:.6}], first-order error ratios = [{:.4}, {:.4}]",
                c.distinct_count, slopes[0], slopes[1], slopes[2], ratios[0], ratios[1]
            ),
        ))
    })())
}

pub fn correction_positivity() -> CheckOutcome {
    outcome(13, "correction positivity", (|| {
        let p = desk();
        let (lo, _) = nodal_pair(1, &p, DEFAULT_POINTS)?;
        let base = unperturbed_state(&lo.profile, &p, Origin::Nodal { n: 1, branch: crate::nodal::Branch::Lower })?;
        let (_, psi) = first_order_corrections(&base.w, &p)?;
        let m = psi.min();
        Ok((m > 0.0, format!("min psi_1 = {m:.6e} over {} nodes", psi.n_points())))
    })())
}

pub fn jacobian() -> CheckOutcome {
    outcome(14, "Jacobian check", (|| {
        let r = jacobian_check(&desk().with_eps(1e-3), DEFAULT_POINTS, 10, 20_241_018)?;
        Ok((r.max_rel_error < 1e-5, format!("{} random states, max rel error = {:.2e}", r.states, r.max_rel_error)))
    })())
}

/// The desk-scale checks in report order.
pub const ALL: [fn() -> CheckOutcome; 14] = [
    spectral_exactness,
    threshold_coincidence,
    center_limit,
    monotonicity_divergence,
    ab_certification,
    exact_multiplicity,
    cross_oracle,
    morse_indices,
    sign_sandwich,
    bifurcation_direction,
    integral_identity,
    perturbed_census,
    correction_positivity,
    jacobian,
];

pub fn run_all() -> Vec<CheckOutcome> {
    ALL.iter().map(|c| c()).collect()
}
