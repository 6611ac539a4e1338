use htbif_core::linstab::{branch_morse, detect_singular_set, morse_sweep};
use htbif_core::model::w0_const;
use htbif_core::nodal::{nodal_pair, Branch};
use htbif_core::perturbed::{
    census, constant_states, continue_in_eps, first_order_corrections, jacobian_check, newton_solve, resolve,
    state_distance, state_residual, unperturbed_state, Origin, NEWTON_TOL,
};
use htbif_core::spectral::lambda_roots;
use htbif_core::{CoeffFn, Error, ModelParams, Profile};

const N: usize = 401;

fn desk() -> ModelParams {
    ModelParams::desk()
}

fn nodal_start(p: &ModelParams, branch: Branch) -> htbif_core::perturbed::CoexistenceState {
    let (lo, up) = nodal_pair(1, p, N).unwrap();
    let w = if branch == Branch::Lower { lo.profile } else { up.profile };
    unperturbed_state(&w, p, Origin::Nodal { n: 1, branch }).unwrap()
}

#[test]
fn newton_contracts_quadratically_from_a_rough_start() {
    let p = desk().with_eps(1e-3);
    let s0 = nodal_start(&desk(), Branch::Lower);
    let w = Profile::from_fn(N, |x| s0.w.values()[(x * (N - 1) as f64).round() as usize] + 0.05 * (3.0 * x).sin()).unwrap();
    let v = s0.v.map(|vi| vi * 1.002);
    let s = newton_solve(&w, &v, &p).unwrap();
    let h = &s.residual_history;
    assert!(s.residual_sup < NEWTON_TOL);
    assert!(h.len() >= 4, "{h:?}");
    // once in the basin, r_{k+1} <= C r_k^2 until rounding takes over
    let mut quadratic_steps = 0;
    for k in 0..h.len() - 1 {
        if h[k] < 1.0 && h[k + 1] > 1e-10 {
            assert!(h[k + 1] <= 10.0 * h[k] * h[k], "step {k}: {h:?}");
            quadratic_steps += 1;
        }
    }
    assert!(quadratic_steps >= 1, "{h:?}");
    let target = resolve(&s0, &p, Origin::Continued).unwrap();
    assert!(state_distance(&s, &target).unwrap() < 1e-8);
}

#[test]
fn continuation_reaches_the_directly_solved_state() {
    let p = desk().with_eps(1e-3);
    let s0 = nodal_start(&desk(), Branch::Upper);
    let c = continue_in_eps(&s0, &p, 1e-3, 5).unwrap();
    assert!(c.breakdown.is_none());
    assert_eq!(c.states.len(), 6);
    let eps: Vec<f64> = c.states.iter().map(|s| s.eps).collect();
    assert!(eps.windows(2).all(|w| w[1] > w[0]));
    let last = c.states.last().unwrap();
    assert_eq!(last.eps, 1e-3);
    let direct = resolve(&s0, &p, Origin::Continued).unwrap();
    assert!(state_distance(last, &direct).unwrap() < 1e-9);
    let (rw, rv) = state_residual(last, &p).unwrap();
    assert!(rw.sup_norm().max(rv.sup_norm()) < NEWTON_TOL);
}

#[test]
fn continuation_to_the_same_eps_is_trivial() {
    let s0 = nodal_start(&desk(), Branch::Lower);
    let c = continue_in_eps(&s0, &desk(), 0.0, 3).unwrap();
    assert_eq!(c.states.len(), 1);
    assert!(continue_in_eps(&s0, &desk(), -1.0, 3).is_err());
}

#[test]
fn zero_predator_feedback_leaves_v_constant() {
    let zero = CoeffFn::constant(0.0).unwrap();
    let p = desk().with_eps(1e-2).with_coeffs(CoeffFn::constant(1.0).unwrap(), zero);
    let r = census(1, &p, N).unwrap();
    assert_eq!(r.distinct_count, 3);
    let vbar = p.mu / p.d;
    for s in &r.states {
        assert!(s.v.values().iter().all(|&v| (v - vbar).abs() <= 1e-12 * vbar), "{}", s.origin);
    }
    // the prey equation alone: lambda - eps w - beta/(1 + w) = 0 for constants
    let beta = p.beta();
    let roots = constant_states(&p).unwrap();
    assert!(!roots.is_empty());
    for (w, v) in roots {
        assert!((p.lambda - p.eps * w - beta / (1.0 + w)).abs() < 1e-9 * p.lambda, "{w}");
        assert!((v - vbar).abs() <= 1e-12 * vbar);
    }
}

#[test]
fn census_refuses_points_outside_or_near_the_window() {
    let p = desk().with_eps(1e-3);
    let (lo, _) = lambda_roots(1, &p).roots.unwrap();
    assert!(census(1, &p.with_lambda(5.0), N).is_err());
    assert!(census(1, &p.with_lambda(lo * (1.0 + 1e-5)), N).is_err());
    assert!(census(1, &p.with_mu(30.0).with_lambda(15.0), N).is_err());
}

#[test]
fn census_states_are_distinct_and_keep_their_shape() {
    let p = desk().with_eps(1e-3);
    let r = census(1, &p, N).unwrap();
    assert_eq!((r.starts, r.distinct_count, r.shortfall), (3, 3, false));
    let w0 = w0_const(&desk()).unwrap();
    let mut crossings: Vec<usize> = r.states.iter().map(|s| s.crossings(w0)).collect();
    crossings.sort();
    assert_eq!(crossings, [0, 1, 1]);
    assert!(r.states.iter().all(|s| s.is_positive() && s.residual_sup < NEWTON_TOL));
    for i in 0..3 {
        for j in 0..i {
            assert!(state_distance(&r.states[i], &r.states[j]).unwrap() > 1e-3);
        }
    }
}

#[test]
fn corrections_are_positive_across_the_window() {
    let p = desk();
    let (lo, hi) = lambda_roots(1, &p).roots.unwrap();
    for frac in [0.2, 0.5, 0.8] {
        let q = p.with_lambda(lo + frac * (hi - lo));
        let (w, _) = nodal_pair(1, &q, N).unwrap();
        let (_, psi) = first_order_corrections(&w.profile, &q).unwrap();
        assert!(psi.min() > 0.0, "{frac}: {}", psi.min());
    }
}

#[test]
fn jacobian_agrees_for_other_seeds_and_coefficients() {
    let table = CoeffFn::sampled(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 0.5]).unwrap();
    let p = desk().with_eps(0.1).with_coeffs(table, CoeffFn::constant(3.0).unwrap());
    for seed in [1, 2, 3] {
        let r = jacobian_check(&p, 201, 4, seed).unwrap();
        assert!(r.max_rel_error < 1e-5, "{seed}: {}", r.max_rel_error);
    }
}

#[test]
fn sweep_agrees_with_pointwise_morse() {
    let p = desk();
    let sweep = morse_sweep(1, &p, 4, N).unwrap();
    assert_eq!(sweep.len(), 4);
    for (l, r) in sweep {
        let direct = branch_morse(1, &p.with_lambda(l), N).unwrap();
        assert_eq!(r.unwrap(), direct);
        assert_eq!((direct.lower.index, direct.upper.index), (1, 1));
    }
}

#[test]
fn singular_set_is_stable_under_refinement() {
    let p = desk();
    let coarse = detect_singular_set(1, &p, 30).unwrap();
    let fine = detect_singular_set(1, &p, 60).unwrap();
    assert_eq!(coarse, fine);
    assert!(fine.is_empty(), "{fine:?}");
}

#[test]
fn second_mode_has_no_pair_at_kappa_one() {
    assert!(matches!(nodal_pair(2, &desk(), N), Err(Error::NoSolution { .. })));
}

#[test]
fn upper_is_the_lower_profile_shifted_by_a_half_period() {
    for (n, mu, lambda) in [(1u32, 50.0, 25.0), (2, 200.0, 100.0)] {
        let p = desk().with_mu(mu).with_lambda(lambda);
        let (lo, up) = nodal_pair(n, &p, 2001).unwrap();
        let m = 2000;
        let shift = m / n as usize;
        for i in 0..=m {
            // x = 1 is a turning point, so the lower profile continues evenly past it
            let j = i + shift;
            let j = if j > m { 2 * m - j } else { j };
            let want = lo.profile.values()[j];
            assert!((up.profile.values()[i] - want).abs() < 1e-9, "n = {n}, i = {i}");
        }
    }
}
