mod common;

use wavefocus_boundary::ops::time_reverse;
use wavefocus_boundary::{TimeGrid, TimeSignal};
use wavefocus_core::{solve_neumann, MediumProfile, SolverGrid};

#[test]
fn trace_vanishes_before_the_source_starts() {
    let lab = common::reference_lab();
    let tg = TimeGrid::new(128, 1.0).unwrap();
    let t0 = 0.75;
    let f = TimeSignal::interpolate_pn(tg, |t| if t > t0 { (t - t0).sin() } else { 0.0 });
    let out = lab.replay(&f, &[]).unwrap();
    let max = out.trace.max_abs();
    assert!(max > 0.0);
    for (t, v) in tg.nodes().zip(out.trace.values()) {
        if t < t0 {
            assert!(v.abs() < 1e-10 * max, "t={t}: {v}");
        }
    }
}

#[test]
fn snapshot_stays_inside_the_domain_of_influence() {
    let lab = common::reference_lab();
    let p = lab.profile();
    let tg = TimeGrid::new(128, 1.0).unwrap();
    let f = TimeSignal::interpolate_pn(tg, |t| (3.0 * t).sin() + 0.5);
    let s = lab.replay(&f, &[1.0]).unwrap().snapshots.remove(0);
    let front = p.domain_of_influence(1.0).unwrap().end;
    let max = s.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let reach = front + 2.0 * s.grid.dx;
    for (i, v) in s.u.iter().enumerate() {
        if s.grid.node(i) > reach + 0.01 {
            assert!(v.abs() < 1e-3 * max, "x={}: {v}", s.grid.node(i));
        }
    }
}

#[test]
fn trace_converges_at_second_order() {
    // unit speed: the exact trace is -int_0^t f for the interpolated f
    let p = MediumProfile::uniform(1.2, 512).unwrap();
    let tg = TimeGrid::new(64, 1.0).unwrap();
    let f = TimeSignal::interpolate_pn(tg, |t| (2.0 * t).sin());
    let hat_exact = {
        // -int_0^t of the piecewise-linear interpolant, trapezoid exact
        let h = tg.step();
        let v = f.values();
        let mut acc = vec![0.0; v.len()];
        for j in 1..v.len() {
            acc[j] = acc[j - 1] - 0.5 * h * (v[j - 1] + v[j]);
        }
        TimeSignal::from_values(tg, acc).unwrap()
    };
    let err = |n_x: usize, n_t: usize| {
        let out = solve_neumann(&p, &f, &SolverGrid::new(n_x, n_t, 2.0, 1.2), &[]).unwrap();
        let d = out.trace.sub(&hat_exact).unwrap();
        // skip the last cell, where the interpolant is cut to zero
        d.values()[..tg.len() - 2]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let coarse = err(256, 1024);
    let fine = err(512, 2048);
    assert!(coarse / fine > 3.0, "ratio {}", coarse / fine);
}

#[test]
fn ntd_matches_running_integral_at_unit_speed() {
    let lab = common::unit_lab();
    let ntd = lab.build_ntd(128).unwrap();
    let tg = ntd.grid();
    let f = TimeSignal::interpolate_pn(tg, |t| (t * 2.5).cos() * t);
    let lf = ntd.apply(&f).unwrap();
    let h = tg.step();
    let v = f.values();
    let mut acc = 0.0;
    for j in 1..tg.len() {
        acc -= 0.5 * h * (v[j - 1] + v[j]);
        assert!(
            (lf.values()[j] - acc).abs() < 2e-3,
            "t={}: {} vs {acc}",
            tg.node(j),
            lf.values()[j]
        );
    }
}

#[test]
fn ntd_adjoint_identity_holds_for_simulated_kernels() {
    let lab = common::reference_lab();
    let ntd = lab.build_ntd(128).unwrap();
    let tg = ntd.grid();
    let f = TimeSignal::interpolate_pn(tg, |t| (1.3 * t).sin());
    let h = TimeSignal::interpolate_pn(tg, |t| t * (2.0 - t));
    let lhs = ntd.apply(&f).unwrap().inner_v(&h).unwrap();
    let rhs = f
        .inner_v(&time_reverse(&ntd.apply(&time_reverse(&h)).unwrap()))
        .unwrap();
    assert!(
        (lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0),
        "{lhs} vs {rhs}"
    );
    assert!((ntd.apply_adjoint(&h).unwrap().inner_v(&f).unwrap() - lhs).abs() < 1e-12);
}

#[test]
fn speed_up_shortens_arrival() {
    // the reference profile is fast near the boundary, so a pulse reaches a
    // given depth earlier than at unit speed
    let p = MediumProfile::reference(1.0);
    let x = p.point_at_travel_time(0.3).unwrap();
    assert!(x > 0.3);
    assert!((p.travel_time(0.0, x).unwrap() - 0.3).abs() < 1e-6);
}
