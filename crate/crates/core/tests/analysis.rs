//! Finite-n drift against the density polynomial, and the hitting-time
//! bounds against closed-form and numerical hitting times.

use bitpact::analysis::{
    expected_drift_double_sum, expected_drift_exact, hitting_time_bound, integrate_ode, lower_bound_p,
    ode_hitting_time, p_of_x,
};
use bitpact::{DriftModel, Rational};
use proptest::prelude::*;

fn m(k: usize, l: usize) -> DriftModel {
    DriftModel::new(k, l).unwrap()
}

#[test]
fn finite_n_drift_approaches_the_polynomial() {
    let (k, l) = (5, 2);
    for n in [1_000usize, 10_000, 100_000] {
        for tenth in 1..=9 {
            let x = n * tenth / 10;
            let exact = expected_drift_exact::<f64>(n, x, k, l).unwrap();
            let p = p_of_x(&m(k, l), x as f64 / n as f64).unwrap();
            let slack = 10.0 * (k * k) as f64 / n as f64;
            assert!((exact - p).abs() <= slack, "n={n} x={x}: {exact} vs {p}");
        }
    }
}

#[test]
fn float_drift_tracks_rational_at_large_n() {
    for (n, x) in [(10_000usize, 3_000usize), (100_000, 71_234)] {
        let q = expected_drift_exact::<Rational>(n, x, 5, 2).unwrap();
        let f = expected_drift_exact::<f64>(n, x, 5, 2).unwrap();
        let qf = q.numer().to_string().parse::<f64>().unwrap() / q.denom().to_string().parse::<f64>().unwrap();
        assert!((qf - f).abs() <= 1e-12 * qf.abs().max(1.0));
    }
}

/// For k = 2, p(x) = l (1-x)^2, so the time from x0 to x1 is
/// (1/(1-x1) - 1/(1-x0)) / l.
fn k2_hitting_time(l: usize, x0: f64, x1: f64) -> f64 {
    (1.0 / (1.0 - x1) - 1.0 / (1.0 - x0)) / l as f64
}

#[test]
fn k2_hitting_times_match_closed_form() {
    for l in 1..=2 {
        for (x0, x1) in [(0.1, 0.2), (0.05, 0.6), (0.3, 0.9), (0.5, 0.51)] {
            let t = ode_hitting_time(&m(2, l), x0, x1, 1e-3, 100.0).unwrap().unwrap();
            assert!((t - k2_hitting_time(l, x0, x1)).abs() < 1e-9, "l={l} {x0}->{x1}");
        }
    }
}

#[test]
fn hitting_time_ordering_over_the_sweep() {
    for k in [2, 3, 5] {
        for l in [1, 2] {
            for x0 in [0.05, 0.1, 0.2] {
                for target in [0.2, 0.4, 0.6] {
                    let h = target / x0;
                    let b = hitting_time_bound(&m(k, l), x0, h).unwrap();
                    let t = ode_hitting_time(&m(k, l), x0, target, 1e-3, 1e3).unwrap().unwrap();
                    assert!(t <= b.generic + 1e-9, "k={k} l={l} x0={x0} h={h}: {t} > {}", b.generic);
                    assert!(b.generic <= b.closed_form + 1e-9);
                }
            }
        }
    }
}

#[test]
fn ode_solution_agrees_with_hitting_time() {
    let model = m(5, 2);
    let t: f64 = ode_hitting_time(&model, 0.3, 0.8, 1e-3, 10.0).unwrap().unwrap();
    let sol = integrate_ode(&model, 0.3, t, 1e-4).unwrap();
    assert!((sol.last().1 - 0.8).abs() < 1e-8);
}

proptest! {
    #[test]
    fn lower_bound_never_exceeds_p(k in 1usize..=16, l_raw in 0usize..16, x in 0.0f64..=1.0) {
        let l = l_raw % k + 1;
        let lb = lower_bound_p(&m(k, l), x).unwrap();
        let p = p_of_x(&m(k, l), x).unwrap();
        prop_assert!(lb <= p + 1e-12, "k={} l={} x={}: {} > {}", k, l, x, lb, p);
    }

    #[test]
    fn both_drift_routes_agree(n in 1usize..60, k_raw in 0usize..8, l_raw in 0usize..8, x_raw in 0usize..60) {
        let k = k_raw % n.min(7) + 1;
        let l = l_raw % k + 1;
        let x = x_raw % (n + 1);
        prop_assert_eq!(
            expected_drift_exact::<Rational>(n, x, k, l).unwrap(),
            expected_drift_double_sum::<Rational>(n, x, k, l).unwrap()
        );
    }

    #[test]
    fn drift_is_nonnegative(n in 1usize..200, k_raw in 0usize..10, l_raw in 0usize..10, x_raw in 0usize..200) {
        let k = k_raw % n.min(9) + 1;
        let l = l_raw % k + 1;
        let x = x_raw % (n + 1);
        let d = expected_drift_exact::<Rational>(n, x, k, l).unwrap();
        prop_assert!(d >= Rational::from_integer(0.into()));
    }

    #[test]
    fn bounds_order(k in 1usize..=10, l_raw in 0usize..10, x0 in 0.01f64..0.5, frac in 0.0f64..1.0) {
        let l = l_raw % k + 1;
        let target = x0 + frac * (0.9 - x0);
        let b = hitting_time_bound(&m(k, l), x0, target / x0).unwrap();
        prop_assert!(b.generic <= b.closed_form * (1.0 + 1e-12) + 1e-12);
        let t = ode_hitting_time(&m(k, l), x0, target.min(0.9), 1e-3, b.generic + 1.0).unwrap();
        prop_assert!(t.is_some_and(|t| t <= b.generic + 1e-9));
    }
}
