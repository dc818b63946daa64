mod common;

use proptest::prelude::*;
use wavefocus_boundary::ops::{
    connecting_k, d_dt, greens_q, phi_t, project_hat_p, project_ny, project_p, time_filter,
    time_reverse,
};
use wavefocus_boundary::{TimeGrid, TimeSignal};

use common::unit_speed_ntd;

fn grid() -> TimeGrid {
    TimeGrid::new(64, 2.0).unwrap()
}

fn signal_from(coeffs: &[f64]) -> TimeSignal {
    TimeSignal::from_coefficients(grid(), coeffs).unwrap()
}

fn y_signal_from(coeffs: &[f64]) -> TimeSignal {
    project_hat_p(&signal_from(coeffs))
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0_f64, 127)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn time_reverse_is_an_involution(c in coeffs()) {
        let f = signal_from(&c);
        prop_assert_eq!(time_reverse(&time_reverse(&f)), f);
    }

    #[test]
    fn projections_are_idempotent(c in coeffs(), r in 0.05..2.0_f64) {
        let f = signal_from(&c);
        let p = project_p(&f, r).unwrap();
        prop_assert_eq!(project_p(&p, r).unwrap(), p);
        let ph = project_hat_p(&f);
        prop_assert_eq!(project_hat_p(&ph), ph.clone());
        let ny = project_ny(&f).unwrap();
        let twice = project_ny(&ny).unwrap();
        for (a, b) in ny.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn y_signals_are_fixed_by_ny(c in coeffs()) {
        let a = y_signal_from(&c);
        prop_assert_eq!(project_ny(&a).unwrap(), a);
    }

    #[test]
    fn time_filter_vanishes_after_t(c in coeffs()) {
        let j = time_filter(&signal_from(&c));
        prop_assert!(j.values()[64..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn connecting_operator_is_nearly_symmetric(a in coeffs(), b in coeffs()) {
        // <Kf, h> is an interior inner product, so it is symmetric in (f, h)
        // up to discretization error.
        let ntd = unit_speed_ntd(64, 2.0);
        let f = signal_from(&a);
        let h = signal_from(&b);
        let kfh = connecting_k(&ntd, &f).unwrap().inner_v(&h).unwrap();
        let khf = connecting_k(&ntd, &h).unwrap().inner_v(&f).unwrap();
        let scale = f.norm_v() * h.norm_v() * 4.0;
        prop_assert!((kfh - khf).abs() <= 0.05 * scale, "{} vs {}", kfh, khf);
    }
}

#[test]
fn connecting_operator_at_unit_speed_matches_closed_form() {
    // At unit speed u^f(x, T) = int_0^{T-x} f: for f = h = 1 this is
    // (T - x)_+ and ||u(T)||^2 = T^3 / 3.
    let ntd = unit_speed_ntd(512, 2.0);
    let one = TimeSignal::interpolate_pn(ntd.grid(), |_| 1.0);
    let val = connecting_k(&ntd, &one).unwrap().inner_v(&one).unwrap();
    assert!((val - 8.0 / 3.0).abs() < 2e-2, "{val}");
}

#[test]
fn duality_between_smoother_and_y_inner_product() {
    let g = TimeGrid::new(512, 2.0).unwrap();
    let f = TimeSignal::interpolate_pn(g, |t| {
        (1.7 * t).sin() + 0.4 * (t * t).cos() - 0.4 * (16.0_f64).cos() * t / 4.0
    });
    let a = TimeSignal::interpolate_pn(g, |t| {
        if t < 2.0 {
            t * (2.0 - t) * (1.0 + t)
        } else {
            0.0
        }
    });
    let lhs = project_ny(&greens_q(&f)).unwrap().inner_y(&a).unwrap();
    let rhs = f.inner_v(&a).unwrap();
    assert!((lhs - rhs).abs() / rhs.abs() < 1e-3, "{lhs} vs {rhs}");
}

#[test]
fn phi_t_is_time_filter_of_one() {
    let g = grid();
    let one = TimeSignal::sample(g, |_| 1.0);
    let j = time_filter(&one);
    for (a, b) in j.values().iter().zip(phi_t(g).values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn derivative_of_unit_speed_response_recovers_source() {
    // Lambda f = -int f, so d_t Lambda f = -f at interior nodes.
    let ntd = unit_speed_ntd(256, 2.0);
    let g = ntd.grid();
    let f = TimeSignal::interpolate_pn(g, |t| (2.0 * t).sin());
    let d = d_dt(&ntd.apply(&f).unwrap());
    for j in 2..g.len() - 3 {
        let mid = f.eval((j as f64 + 0.5) * g.step());
        assert!((d.values()[j] + mid).abs() < 1e-3, "node {j}");
    }
}
