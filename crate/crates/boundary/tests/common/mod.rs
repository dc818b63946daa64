#![allow(dead_code)]

use wavefocus_boundary::{NtdOperator, TimeGrid, TimeSignal};

/// Unit-speed half line: `Lambda f = -int_0^t f`, so the response to the
/// first hat is minus its running integral.
pub fn unit_speed_ntd(n: usize, t: f64) -> NtdOperator {
    let g = TimeGrid::new(n, t).unwrap();
    let h = g.step();
    let k = TimeSignal::sample(g, |t| {
        let s = t.min(2.0 * h);
        -if s <= h {
            s * s / (2.0 * h)
        } else {
            h - (2.0 * h - s).powi(2) / (2.0 * h)
        }
    });
    NtdOperator::from_kernel(k).unwrap()
}

/// A slowly varying speed imitated by a smooth, decaying perturbation of the
/// unit-speed kernel, so the tests exercise a non-trivial Toeplitz matrix.
pub fn perturbed_ntd(n: usize, t: f64) -> NtdOperator {
    let base = unit_speed_ntd(n, t);
    let g = base.grid();
    let h = g.step();
    let k = base
        .kernel()
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let s = j as f64 * h;
            v + h * 0.15 * (-(s - 0.6).powi(2) / 0.05).exp() * s.min(1.0)
        })
        .collect();
    NtdOperator::from_kernel(TimeSignal::from_values(g, k).unwrap()).unwrap()
}

pub fn to_nalgebra(m: &wavefocus_boundary::DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}
