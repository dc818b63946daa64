//! Linear operators on hat-coefficient vectors and their dense materialization.

use std::io::Write;

use crate::error::Result;
use crate::par::{map_range, Execution};
use crate::signal::{TimeGrid, TimeSignal};

/// A square linear map on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn name(&self) -> &str {
        "operator"
    }
}

type SignalMap<'a> = dyn Fn(&TimeSignal) -> Result<TimeSignal> + Sync + 'a;

/// A named map on boundary signals viewed through its action on the interior
/// hat coefficients (dimension `2N - 1`).
pub struct BoundaryOperator<'a> {
    name: String,
    grid: TimeGrid,
    map: Box<SignalMap<'a>>,
}

impl<'a> BoundaryOperator<'a> {
    pub fn new<F>(name: impl Into<String>, grid: TimeGrid, map: F) -> Self
    where
        F: Fn(&TimeSignal) -> Result<TimeSignal> + Sync + 'a,
    {
        Self {
            name: name.into(),
            grid,
            map: Box::new(map),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Applies the map to a full signal.
    pub fn apply_signal(&self, f: &TimeSignal) -> Result<TimeSignal> {
        self.grid.ensure_same(&f.grid())?;
        (self.map)(f)
    }
}

impl LinearOperator for BoundaryOperator<'_> {
    fn dim(&self) -> usize {
        self.grid.interior_len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let f = TimeSignal::from_coefficients(self.grid, x)
            .expect("coefficient length checked by caller");
        let out = (self.map)(&f).expect("operator maps its own grid");
        out.coefficients().to_vec()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, v) in c.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `max |A_ij - A_ji| / max |A_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.data.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }

    fn name(&self) -> &str {
        "dense"
    }
}

/// Builds the dense matrix of `op` column by column.
pub fn materialize<O: LinearOperator + ?Sized>(op: &O, exec: Execution) -> DenseMatrix {
    let n = op.dim();
    let columns = map_range(exec, n, |j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        op.apply(&e)
    });
    DenseMatrix::from_columns(columns)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
