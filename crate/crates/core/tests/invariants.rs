use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use htbif_core::linalg::{BandMatrix, SymTridiagonal};
use htbif_core::linstab::{constant_spectrum, sturm_spectrum};
use htbif_core::model::{kinetic_f, potential_f, w0_const};
use htbif_core::spectral::{lambda_roots, mu_threshold, regime, tau0};
use htbif_core::timemap::{companion, time_map, time_map_center};
use htbif_core::{ModelParams, Profile};

/// `(b, d, mu, lambda)` with `lambda` well inside `(0, b mu/d)`.
fn params() -> impl Strategy<Value = ModelParams> {
    (0.5f64..2.0, 0.5f64..2.0, 5.0f64..200.0, 0.05f64..0.95).prop_map(|(b, d, beta, frac)| {
        let mu = beta * d / b;
        ModelParams::new(b, d, frac * beta, mu).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn vieta_relations(b in 0.2f64..5.0, d in 0.2f64..5.0, ell in 1u32..5, over in 0.5f64..20.0) {
        let probe = ModelParams::new(b, d, 1.0, 1.0).unwrap();
        let mu = over * mu_threshold(ell, &probe);
        let p = ModelParams::new(b, d, 1.0, mu).unwrap();
        let r = lambda_roots(ell, &p);
        // tau_{0,l} has real roots exactly when mu >= mu_l
        prop_assert_eq!(r.is_real(), mu >= mu_threshold(ell, &p));
        let Some((lo, hi)) = r.roots else { return Ok(()) };
        let beta = p.beta();
        let lp2 = (ell as f64 * PI).powi(2);
        prop_assert!(((lo + hi) - beta).abs() <= 1e-12 * beta);
        prop_assert!((lo * hi - beta * lp2).abs() <= 1e-11 * beta * lp2);
        let scale = lp2 + hi;
        prop_assert!(tau0(ell, lo, &p).abs() <= 1e-10 * scale);
        prop_assert!(tau0(ell, hi, &p).abs() <= 1e-10 * scale);
    }

    #[test]
    fn regime_brackets_mu(b in 0.2f64..5.0, d in 0.2f64..5.0, mu in 0.1f64..2000.0) {
        let p = ModelParams::new(b, d, 1.0, mu).unwrap();
        let k = regime(&p);
        prop_assert!(mu > mu_threshold(k, &p) || k == 0);
        prop_assert!(mu <= mu_threshold(k + 1, &p));
    }

    #[test]
    fn potential_derivative_is_the_kinetics(p in params(), t in 0.01f64..3.0) {
        let w0 = w0_const(&p).unwrap();
        let w = t * w0;
        let h = 1e-5 * (1.0 + w);
        let fd = (potential_f(w + h, &p).unwrap() - potential_f(w - h, &p).unwrap()) / (2.0 * h);
        let f = kinetic_f(w, &p).unwrap();
        let scale = p.lambda * (1.0 + w) + p.beta();
        prop_assert!((fd - f).abs() <= 1e-7 * scale, "fd {fd} vs f {f}");
    }

    #[test]
    fn companion_shares_the_energy(p in params(), t in 0.02f64..0.98) {
        let w0 = w0_const(&p).unwrap();
        let wm = t * w0;
        let wp = companion(wm, &p).unwrap();
        prop_assert!(wp > w0);
        let (fm, fp) = (potential_f(wm, &p).unwrap(), potential_f(wp, &p).unwrap());
        prop_assert!((fm - fp).abs() <= 1e-10 * fm.abs().max(1.0));
    }

    #[test]
    fn time_map_decreases_toward_the_center(p in params(), t in 0.01f64..0.9, gap in 0.02f64..0.09) {
        let w0 = w0_const(&p).unwrap();
        let near = time_map((t + gap) * w0, &p).unwrap().t;
        let far = time_map(t * w0, &p).unwrap().t;
        prop_assert!(far > near, "T({t}) = {far} <= T({}) = {near}", t + gap);
        prop_assert!(near > time_map_center(&p).unwrap());
    }

    #[test]
    fn spectrum_shifts_with_the_potential(
        vals in prop::collection::vec(-50.0f64..50.0, 41),
        shift in -100.0f64..100.0,
    ) {
        let v = Profile::new(vals).unwrap();
        let a = sturm_spectrum(&v, 6).unwrap();
        let b = sturm_spectrum(&v.map(|x| x + shift), 6).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x + shift - y).abs() <= 1e-9 * (1.0 + x.abs() + shift.abs()));
        }
        prop_assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn tridiagonal_matches_dense_eigensolver(
        diag in prop::collection::vec(-10.0f64..10.0, 12),
        off in prop::collection::vec(-5.0f64..5.0, 11),
    ) {
        let t = SymTridiagonal { diag: diag.clone(), off: off.clone() };
        let n = diag.len();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j { diag[i] } else if i + 1 == j { off[i] } else if j + 1 == i { off[j] } else { 0.0 }
        });
        let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        let ours = t.lowest(n);
        for (x, y) in ours.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()), "{x} vs {y}");
        }
        for (k, x) in ours.iter().enumerate() {
            let tol = 1e-9 * (1.0 + x.abs());
            prop_assert!(t.count_below(x - tol) <= k);
            prop_assert!(t.count_below(x + tol) > k);
        }
    }

    #[test]
    fn band_solve_matches_dense_lu(
        entries in prop::collection::vec(-1.0f64..1.0, 5 * 16),
        rhs in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let n = 16;
        let mut band = BandMatrix::zeros(n, 2, 2);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for (k, off) in (-2i64..=2).enumerate() {
                let j = i as i64 + off;
                if j < 0 || j >= n as i64 {
                    continue;
                }
                let mut v = entries[5 * i + k];
                if off == 0 {
                    v += 4.0 * v.signum() + 0.5;
                }
                band.set(i, j as usize, v);
                dense[(i, j as usize)] = v;
            }
        }
        let y = band.mul_vec(&rhs);
        let yd = &dense * DVector::from_vec(rhs.clone());
        for i in 0..n {
            prop_assert!((y[i] - yd[i]).abs() < 1e-12);
        }
        let mut x = y.clone();
        band.factor().unwrap().solve_in_place(&mut x);
        for i in 0..n {
            prop_assert!((x[i] - rhs[i]).abs() < 1e-10, "{} vs {}", x[i], rhs[i]);
        }
    }
}

#[test]
fn constant_index_counts_negative_modes() {
    // tau_{0,l} < 0 exactly for lambda between the roots of mode l
    let p = ModelParams::desk();
    for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let q = p.with_lambda(frac * p.beta());
        let expected = (0..6).filter(|&l| tau0(l, q.lambda, &q) < 0.0).count();
        assert_eq!(constant_spectrum(&q, 2001, 1).unwrap().morse_index, expected, "{frac}");
    }
}
