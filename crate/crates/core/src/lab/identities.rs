use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wavefocus_boundary::ops::{connecting_k, d_dt, greens_q, phi_t, project_hat_p, project_ny};
use wavefocus_boundary::par::map_slice;
use wavefocus_boundary::{NtdOperator, TimeGrid, TimeSignal};

use super::FocusingLab;
use crate::error::{CoreError, Result};
use crate::forward::{field_energy, gradient_norm_sq, volume_inner_product, FieldSnapshot};

/// Floor in the denominator of the relative error.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Number of sine modes in a trial signal.
pub const TRIAL_MODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityName {
    /// `<u^f(T), u^h(T)> = <K f, h>_V`.
    Blago1,
    /// `<u^h(T), 1> = -<h, Phi_T>_V`.
    Blago2,
    /// `E(a, T) = -2 <a, P_hat d_t Lambda a>_V`.
    Energy,
    /// `||d_x u^a(T)||^2 + ||u^a(T)||^2` from boundary data.
    H1Norm,
    /// `<N_Y Q f, a>_Y = <f, a>_V`, no forward solve.
    Duality,
}

impl IdentityName {
    pub const ALL: [IdentityName; 5] = [
        IdentityName::Blago1,
        IdentityName::Blago2,
        IdentityName::Energy,
        IdentityName::H1Norm,
        IdentityName::Duality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityName::Blago1 => "blago1",
            IdentityName::Blago2 => "blago2",
            IdentityName::Energy => "energy",
            IdentityName::H1Norm => "h1norm",
            IdentityName::Duality => "duality",
        }
    }

    /// Whether the left-hand side needs forward solves.
    pub fn needs_forward(self) -> bool {
        self != IdentityName::Duality
    }
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| CoreError::UnknownIdentity(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: IdentityName,
    /// Volume (oracle) side.
    pub lhs: f64,
    /// Boundary side.
    pub rhs: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|, floor)`.
    pub relative_error: f64,
    pub n: usize,
    pub n_x: usize,
    pub n_t: usize,
}

pub fn relative_error(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(RELATIVE_FLOOR)
}

/// `sum_k c_k sin(k pi t / 2T)` over `[0, 2T]`, interpolated on the grid.
pub fn band_limited_v(grid: TimeGrid, coeffs: &[f64]) -> TimeSignal {
    let w = std::f64::consts::PI / grid.horizon();
    TimeSignal::interpolate_pn(grid, |t| sine_series(coeffs, w * t))
}

/// `sum_k c_k sin(k pi t / T)` on `[0, T]`, zero afterwards. Lies in `Y`.
pub fn band_limited_y(grid: TimeGrid, coeffs: &[f64]) -> TimeSignal {
    let t_half = grid.t();
    let w = std::f64::consts::PI / t_half;
    TimeSignal::interpolate_pn(grid, |t| {
        if t < t_half {
            sine_series(coeffs, w * t)
        } else {
            0.0
        }
    })
}

fn sine_series(coeffs: &[f64], theta: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * ((k + 1) as f64 * theta).sin())
        .sum()
}

/// Continuous trial functions, sampled on any grid so that refinements see
/// the same functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCoefficients {
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub a: Vec<f64>,
}

/// `f`, `h` in `V` and `a` in `Y`, sampled on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPair {
    pub f: TimeSignal,
    pub h: TimeSignal,
    pub a: TimeSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub seed: u64,
    pub trials: Vec<TrialCoefficients>,
}

impl TrialSet {
    /// `count` trials with the leading mode in `[0.5, 1]` and the others in
    /// `[-0.5, 0.5]`.
    pub fn generate(count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> {
            (0..TRIAL_MODES)
                .map(|k| {
                    if k == 0 {
                        rng.random_range(0.5..=1.0)
                    } else {
                        rng.random_range(-0.5..=0.5)
                    }
                })
                .collect()
        };
        let trials = (0..count)
            .map(|_| TrialCoefficients {
                f: draw(),
                h: draw(),
                a: draw(),
            })
            .collect();
        Self { seed, trials }
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn sample(&self, grid: TimeGrid) -> Vec<TrialPair> {
        self.trials
            .iter()
            .map(|c| TrialPair {
                f: band_limited_v(grid, &c.f),
                h: band_limited_v(grid, &c.h),
                a: band_limited_y(grid, &c.a),
            })
            .collect()
    }
}

fn snapshot_at_t(lab: &FocusingLab, f: &TimeSignal) -> Result<FieldSnapshot> {
    let out = lab.replay(f, &[lab.t()])?;
    Ok(out.snapshots.into_iter().next().expect("one snapshot"))
}

/// `E(a, T)` from boundary data.
fn boundary_energy(ntd: &NtdOperator, a: &TimeSignal) -> Result<f64> {
    let g = project_hat_p(&d_dt(&ntd.apply(a)?));
    Ok(-2.0 * a.inner_v(&g)?)
}

/// Evaluates one identity on one trial.
pub fn verify_identity(
    name: IdentityName,
    lab: &FocusingLab,
    ntd: &NtdOperator,
    trial: &TrialPair,
) -> Result<IdentityReport> {
    let profile = lab.profile();
    let (lhs, rhs) = match name {
        IdentityName::Blago1 => {
            let rhs = connecting_k(ntd, &trial.f)?.inner_v(&trial.h)?;
            let (uf, uh) = (snapshot_at_t(lab, &trial.f)?, snapshot_at_t(lab, &trial.h)?);
            (volume_inner_product(&uf.u, &uh.u, &uf.grid, profile)?, rhs)
        }
        IdentityName::Blago2 => {
            let rhs = -trial.h.inner_v(&phi_t(ntd.grid()))?;
            let uh = snapshot_at_t(lab, &trial.h)?;
            let ones = vec![1.0; uh.grid.len()];
            (volume_inner_product(&uh.u, &ones, &uh.grid, profile)?, rhs)
        }
        IdentityName::Energy => {
            let rhs = boundary_energy(ntd, &trial.a)?;
            (field_energy(&snapshot_at_t(lab, &trial.a)?, profile)?, rhs)
        }
        IdentityName::H1Norm => {
            let a = &trial.a;
            let da = d_dt(a);
            let rhs = boundary_energy(ntd, a)? - connecting_k(ntd, &da)?.inner_v(&da)?
                + connecting_k(ntd, a)?.inner_v(a)?;
            let s = snapshot_at_t(lab, a)?;
            let lhs = gradient_norm_sq(&s.u, &s.grid)
                + volume_inner_product(&s.u, &s.u, &s.grid, profile)?;
            (lhs, rhs)
        }
        IdentityName::Duality => {
            let lhs = project_ny(&greens_q(&trial.f))?.inner_y(&trial.a)?;
            (lhs, trial.f.inner_v(&trial.a)?)
        }
    };
    Ok(IdentityReport {
        name,
        lhs,
        rhs,
        relative_error: relative_error(lhs, rhs),
        n: ntd.grid().n(),
        n_x: lab.grid().n_x,
        n_t: lab.grid().n_t,
    })
}

/// Evaluates one identity on every trial, in parallel when the lab allows.
pub fn verify_identity_batch(
    name: IdentityName,
    lab: &FocusingLab,
    ntd: &NtdOperator,
    trials: &[TrialPair],
) -> Result<Vec<IdentityReport>> {
    map_slice(lab.execution(), trials, |t| {
        verify_identity(name, lab, ntd, t)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in IdentityName::ALL {
            assert_eq!(n.as_str().parse::<IdentityName>().unwrap(), n);
        }
        assert!(matches!(
            "blago3".parse::<IdentityName>(),
            Err(CoreError::UnknownIdentity(_))
        ));
    }

    #[test]
    fn trials_are_seeded_and_band_limited() {
        let a = TrialSet::generate(4, 7);
        assert_eq!(a, TrialSet::generate(4, 7));
        assert_ne!(a, TrialSet::generate(4, 8));
        let g = TimeGrid::new(64, 2.0).unwrap();
        for p in a.sample(g) {
            assert!(p.a.is_in_y(1e-14));
            assert_eq!(p.f.values()[0], 0.0);
        }
    }

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 0.99) - 0.01).abs() < 1e-12);
    }
}
