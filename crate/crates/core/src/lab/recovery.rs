use serde::Serialize;
use wavefocus_boundary::ops::{d_dt, phi_t};
use wavefocus_boundary::{NtdOperator, TimeSignal};

use crate::error::{CoreError, Result};
use crate::medium::MediumProfile;

/// Estimates below this magnitude are treated as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct VolumeEstimate {
    /// `-<d_t b, Phi_T>_V`, the weighted volume of the focusing region.
    pub volume: f64,
    /// `b / volume`.
    pub normalized: TimeSignal,
}

/// Boundary-only volume of the region on which `u_t^b(T)` concentrates.
///
/// Uses `u_t^b(T) = u^{d_t b}(T)` and `<u^h(T), 1> = -<h, Phi_T>`.
pub fn slab_volume_from_boundary(b: &TimeSignal) -> Result<VolumeEstimate> {
    let phi = phi_t(b.grid());
    let volume = -d_dt(b).inner_v(&phi)?;
    if volume.abs() < DEGENERACY_FLOOR {
        return Err(CoreError::DegenerateSlab(format!(
            "volume estimate {volume:e} below floor"
        )));
    }
    Ok(VolumeEstimate {
        volume,
        normalized: b.scale(1.0 / volume),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinateEstimate {
    /// `<u^f(T), x>` in `L^2(c^{-2} dx)`, from `<R Lambda R Phi_T, f>_V`.
    pub moment: f64,
    /// `<u^f(T), 1>`, from `-<f, Phi_T>_V`.
    pub mass: f64,
    /// `moment / mass`.
    pub coordinate: f64,
}

/// Centroid of `u^f(T)` from boundary data.
pub fn recover_coordinate(f: &TimeSignal, ntd: &NtdOperator) -> Result<CoordinateEstimate> {
    let phi = phi_t(ntd.grid());
    let moment = ntd.apply_adjoint(&phi)?.inner_v(f)?;
    let mass = -f.inner_v(&phi)?;
    if mass.abs() < DEGENERACY_FLOOR {
        return Err(CoreError::DegenerateSlab(format!(
            "mass estimate {mass:e} below floor"
        )));
    }
    Ok(CoordinateEstimate {
        moment,
        mass,
        coordinate: moment / mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationTime {
    pub threshold_fraction: f64,
    /// First `t > T` with `|trace(t)| >= threshold * max |trace|` on `(T, 2T]`.
    pub first_arrival: f64,
    /// `T + d(0, x_hat)`.
    pub predicted: f64,
    pub x_hat: f64,
}

/// First-arrival time of a boundary trace after `T`, compared with the
/// travel time to `x_hat`.
pub fn observation_time(
    profile: &MediumProfile,
    trace: &TimeSignal,
    x_hat: f64,
    threshold_fraction: f64,
) -> Result<ObservationTime> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(CoreError::Argument(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let g = trace.grid();
    let t = g.t();
    let v = trace.values();
    let window = g.n() + 1..g.len();
    if window.len() < 2 {
        return Err(CoreError::Range("trace window after T is too short".into()));
    }
    let peak = v[window.clone()]
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(CoreError::Range("trace vanishes after T".into()));
    }
    let level = threshold_fraction * peak;
    let j = window
        .clone()
        .find(|&j| v[j].abs() >= level)
        .expect("peak is attained in the window");
    // interpolate the crossing between j - 1 and j
    let (a, b) = (v[j - 1].abs(), v[j].abs());
    let w = if j > g.n() + 1 && b > a {
        (level - a) / (b - a)
    } else {
        1.0
    };
    let first_arrival = g.node(j - 1) + w.clamp(0.0, 1.0) * g.step();
    Ok(ObservationTime {
        threshold_fraction,
        first_arrival,
        predicted: t + profile.travel_time(0.0, x_hat)?,
        x_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavefocus_boundary::TimeGrid;

    #[test]
    fn zero_inputs_are_degenerate() {
        let g = TimeGrid::new(32, 2.0).unwrap();
        assert!(matches!(
            slab_volume_from_boundary(&TimeSignal::zeros(g)),
            Err(CoreError::DegenerateSlab(_))
        ));
    }

    #[test]
    fn first_arrival_of_a_ramp() {
        let profile = MediumProfile::uniform(3.0, 300).unwrap();
        let g = TimeGrid::new(400, 2.0).unwrap();
        // ramp from 0 at t = 2.5 to 1 at t = 2.625, constant afterwards
        let trace = TimeSignal::sample(g, |t| ((t - 2.5) / 0.125).clamp(0.0, 1.0));
        let obs = observation_time(&profile, &trace, 0.5625, 0.1).unwrap();
        assert!(
            (obs.first_arrival - 2.5125).abs() < 1e-9,
            "{}",
            obs.first_arrival
        );
        assert!((obs.predicted - 2.5625).abs() < 1e-9);
        assert!(observation_time(&profile, &trace, 0.5, 1.5).is_err());
    }
}
