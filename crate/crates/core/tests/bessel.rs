mod common;

use std::f64::consts::PI;

use biofilm_mc::numerics::{bessel_j, bessel_j_prime, find_robin_roots, BesselOrder};
use biofilm_mc::Error;
use common::{bisect, j_integral, j_series};
use proptest::prelude::*;

fn j(nu: f64, x: f64) -> f64 {
    bessel_j(BesselOrder::new(nu).unwrap(), x).unwrap()
}

fn jp(nu: f64, x: f64) -> f64 {
    bessel_j_prime(BesselOrder::new(nu).unwrap(), x).unwrap()
}

#[test]
fn values_at_the_origin() {
    assert_eq!(j(0.0, 0.0), 1.0);
    assert_eq!(j(1.0, 0.0), 0.0);
    assert_eq!(j(0.3162, 0.0), 0.0);
    assert_eq!(jp(0.0, 0.0), 0.0);
    assert_eq!(jp(1.0, 0.0), 0.5);
    assert_eq!(jp(2.5, 0.0), 0.0);
}

#[test]
fn half_order_at_half_pi() {
    assert!((j(0.5, PI / 2.0) - 2.0 / PI).abs() < 1e-10 * 2.0 / PI);
}

#[test]
fn first_zero_of_j0() {
    let z = bisect(|x| j_series(0.0, x), 2.0, 3.0);
    assert!((z - 2.404825557695773).abs() < 1e-12);
    assert!(j(0.0, 2.404825557695773).abs() < 1e-10);
}

#[test]
fn derivative_zeros() {
    assert!(jp(0.0, 3.831705970207512).abs() < 1e-9);
    assert!(jp(1.0, 1.841183781340659).abs() < 1e-9);
}

#[test]
fn rejects_bad_inputs() {
    assert!(BesselOrder::new(-1.0).is_err());
    assert!(BesselOrder::new(f64::NAN).is_err());
    let o = BesselOrder::new(1.0).unwrap();
    assert!(matches!(bessel_j(o, -1.0), Err(Error::BesselDomain { .. })));
    assert!(bessel_j(o, f64::INFINITY).is_err());
    let frac = BesselOrder::new(0.5).unwrap();
    assert!(matches!(
        bessel_j_prime(frac, 0.0),
        Err(Error::SingularDerivative { .. })
    ));
}

#[test]
fn matches_power_series_for_small_arguments() {
    for &nu in &[
        0.0,
        0.3162277660168379,
        0.5,
        1.0,
        2.5,
        6.324555320336759,
        13.0,
        20.0,
    ] {
        for k in 1..=60 {
            let x = 0.2 * k as f64;
            let (got, want) = (j(nu, x), j_series(nu, x));
            assert!(
                (got - want).abs() <= 1e-10 * want.abs() + 1e-300,
                "nu {nu} x {x}: {got:e} vs {want:e}"
            );
        }
    }
}

#[test]
fn matches_integral_representation_up_to_200() {
    for &nu in &[0.0, 0.3162277660168379, 1.0, 2.5, 7.3, 13.0, 20.0] {
        for k in 0..=24 {
            let x = 12.0 + 7.8 * k as f64;
            let (got, want) = (j(nu, x), j_integral(nu, x));
            // Relative accuracy near a zero is not meaningful; measure against
            // the local oscillation amplitude instead.
            let scale = want.abs().max((2.0 / (PI * x)).sqrt() * 1e-3);
            assert!(
                (got - want).abs() <= 1e-10 * scale + 1e-13,
                "nu {nu} x {x}: {got:e} vs {want:e}"
            );
        }
    }
}

#[test]
fn half_order_identity() {
    for k in 0..=500 {
        let x = 0.1 + k as f64 * (49.9 / 500.0);
        let want = (2.0 / (PI * x)).sqrt() * x.sin();
        let got = j(0.5, x);
        let tol = 1e-10 * want.abs().max(1e-6 * (2.0 / (PI * x)).sqrt());
        assert!((got - want).abs() <= tol, "x {x}: {got:e} vs {want:e}");
    }
}

#[test]
fn derivative_matches_finite_difference() {
    for &nu in &[0.0, 0.3162, 1.0, 2.5] {
        for k in 0..=499 {
            let x = 0.1 + k as f64 * 0.1;
            let h = 1e-6 * x.max(1.0);
            let fd = (j(nu, x + h) - j(nu, x - h)) / (2.0 * h);
            assert!((jp(nu, x) - fd).abs() < 1e-6, "nu {nu} x {x}");
        }
    }
}

#[test]
fn neumann_roots_of_order_zero() {
    let roots = find_robin_roots(BesselOrder::new(0.0).unwrap(), 1e-4, 5e-10, 0.0, 4).unwrap();
    let expected = [3.831705970, 7.015586670, 10.173468135, 13.323691936];
    let mut lo = 0.5;
    for (i, (&lam, &want)) in roots.iter().zip(&expected).enumerate() {
        // Independent oracle: zeros of J_1 bracketed around the tabulated values.
        let oracle = bisect(|x| j_series(1.0, x), want - 0.1, want + 0.1);
        assert!(oracle > lo);
        lo = oracle;
        let x = lam * 1e-4;
        assert!(
            (x - oracle).abs() < 1e-8 * oracle,
            "root {i}: {x} vs {oracle}"
        );
        assert!((x - want).abs() < 1e-8 * want);
    }
}

#[test]
fn neumann_root_of_order_one() {
    let roots = find_robin_roots(BesselOrder::new(1.0).unwrap(), 1e-4, 5e-10, 0.0, 1).unwrap();
    let oracle = bisect(|x| j_series(0.0, x) - j_series(2.0, x), 1.5, 2.2);
    assert!((roots[0] * 1e-4 - oracle).abs() < 1e-8 * oracle);
    assert!((roots[0] * 1e-4 - 1.841183781).abs() < 1e-8);
}

#[test]
fn roots_interlace_and_exclude_zero() {
    let rho_c = 1e-4;
    for n in 0..=63 {
        let nu = n as f64 * 0.3162277660168379;
        for &k_f in &[0.0, 1e-6, 5e-3] {
            let roots =
                find_robin_roots(BesselOrder::new(nu).unwrap(), rho_c, 5e-10, k_f, 30).unwrap();
            assert_eq!(roots.len(), 30);
            assert!(roots[0] > 0.0);
            for w in roots.windows(2) {
                let gap = (w[1] - w[0]) * rho_c;
                assert!(gap > 2.0 && gap < 2.0 * PI, "nu {nu} k_f {k_f}: gap {gap}");
            }
        }
    }
}

#[test]
fn robin_roots_move_with_the_boundary_rate() {
    // A small reaction rate lifts the zero root to a small positive one.
    let o = BesselOrder::new(0.0).unwrap();
    let (rho_c, d) = (1e-4, 5e-10);
    let neumann = find_robin_roots(o, rho_c, d, 0.0, 3).unwrap();
    let robin = find_robin_roots(o, rho_c, d, 1e-7, 4).unwrap();
    assert!(robin[0] * rho_c < 0.5);
    for (r, nm) in robin[1..].iter().zip(&neumann) {
        assert!(r > nm);
    }
    for &lam in &robin {
        let x = lam * rho_c;
        let g = d * lam * jp(0.0, x) + 1e-7 * j(0.0, x);
        assert!(g.abs() < 1e-8 * (d * lam + 1e-7), "{g:e}");
    }
}

#[test]
fn zero_root_count_is_an_error() {
    let o = BesselOrder::new(1.0).unwrap();
    assert!(find_robin_roots(o, 1e-4, 5e-10, 0.0, 0).is_err());
    assert!(find_robin_roots(o, -1e-4, 5e-10, 0.0, 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn three_term_recurrence(nu in 1.0f64..20.0, x in 0.5f64..180.0) {
        let lhs = j(nu - 1.0, x) + j(nu + 1.0, x);
        let rhs = 2.0 * nu / x * j(nu, x);
        let scale = j(nu - 1.0, x).abs() + j(nu + 1.0, x).abs() + rhs.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale + 1e-300);
    }

    #[test]
    fn bounded_by_one(nu in 0.0f64..20.0, x in 0.0f64..200.0) {
        prop_assert!(j(nu, x).abs() <= 1.0);
    }

    #[test]
    fn robin_residual_is_small(nu in 0.0f64..20.0, k_f in prop_oneof![Just(0.0), 1e-8f64..1e-2]) {
        let (rho_c, d) = (1e-4, 5e-10);
        let roots = find_robin_roots(BesselOrder::new(nu).unwrap(), rho_c, d, k_f, 10).unwrap();
        for w in roots.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        for &lam in &roots {
            let x = lam * rho_c;
            let g = d * lam * jp(nu, x) + k_f * j(nu, x);
            prop_assert!(g.abs() <= 1e-8 * (d * lam + k_f));
        }
    }
}
