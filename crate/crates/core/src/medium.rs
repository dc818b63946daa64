//! Wave-speed profiles on the truncated half-line and their travel-time
//! geometry.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};

/// Raised-cosine bump `amplitude * (1 + cos(pi (x - center) / width)) / 2`
/// on `|x - center| < width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        if z.abs() >= 1.0 {
            0.0
        } else {
            0.5 * self.amplitude * (1.0 + (std::f64::consts::PI * z).cos())
        }
    }
}

/// Speed bounds `c0 <= c <= c1` and the interval `(l0, l1)` outside of which
/// `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub c0: f64,
    pub c1: f64,
    pub l0: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// `c = 1 + sum of bumps`.
    Bumps { bumps: Vec<Bump> },
    /// Speeds at the `n_cells` cell centres, linearly interpolated.
    Samples { c: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub x_max: f64,
    pub n_cells: usize,
    #[serde(flatten)]
    pub shape: ProfileShape,
    pub bounds: Bounds,
}

impl ProfileSpec {
    /// The canonical variable-speed profile used by the experiments: a fast
    /// bump near the boundary followed by two slow ones, placed so that
    /// `x(1/2) ≈ 0.50` and `x(5/8) ≈ 0.62`.
    pub fn reference(t: f64) -> Self {
        let bounds = Bounds {
            c0: 0.8,
            c1: 1.4,
            l0: 0.05,
            l1: 0.55,
        };
        Self {
            x_max: 1.1 * bounds.c1 * t,
            n_cells: 8192,
            shape: ProfileShape::Bumps {
                bumps: vec![
                    Bump {
                        center: 0.16,
                        width: 0.1,
                        amplitude: 0.4,
                    },
                    Bump {
                        center: 0.38,
                        width: 0.15,
                        amplitude: -0.1531,
                    },
                    Bump {
                        center: 0.50,
                        width: 0.05,
                        amplitude: -0.1672,
                    },
                ],
            },
            bounds,
        }
    }

    /// Unit speed everywhere.
    pub fn uniform(x_max: f64, n_cells: usize) -> Self {
        Self {
            x_max,
            n_cells,
            shape: ProfileShape::Bumps { bumps: Vec::new() },
            bounds: Bounds {
                c0: 1.0,
                c1: 1.0,
                l0: 0.05,
                l1: 0.55,
            },
        }
    }
}

/// Cumulative travel times `d(0, x_i)` at the profile nodes `x_i = i dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeTable {
    dx: f64,
    times: Vec<f64>,
}

impl TravelTimeTable {
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumProfile {
    spec: ProfileSpec,
    c_samples: Vec<f64>,
    table: TravelTimeTable,
    hash: String,
}

/// Closed interval `[start, end]` on the half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }
}

const SUPPORT_TOL: f64 = 1e-12;

impl MediumProfile {
    pub fn new(spec: ProfileSpec) -> Result<Self> {
        let b = spec.bounds;
        if !(spec.x_max > 0.0 && spec.x_max.is_finite()) {
            return Err(CoreError::Profile(format!(
                "x_max must be positive, got {}",
                spec.x_max
            )));
        }
        if spec.n_cells < 2 {
            return Err(CoreError::Profile(format!(
                "n_cells must be at least 2, got {}",
                spec.n_cells
            )));
        }
        if !(0.0 < b.l0 && b.l0 < b.l1 && b.l1 < spec.x_max) {
            return Err(CoreError::Profile(format!(
                "support bounds must satisfy 0 < l0 < l1 < x_max, got l0={}, l1={}, x_max={}",
                b.l0, b.l1, spec.x_max
            )));
        }
        if !(b.c0 > 0.0 && b.c0 <= b.c1) {
            return Err(CoreError::Profile(format!(
                "speed bounds must satisfy 0 < c0 <= c1, got c0={}, c1={}",
                b.c0, b.c1
            )));
        }
        match &spec.shape {
            ProfileShape::Samples { c } if c.len() != spec.n_cells => {
                return Err(CoreError::Profile(format!(
                    "expected {} speed samples, got {}",
                    spec.n_cells,
                    c.len()
                )));
            }
            ProfileShape::Bumps { bumps } => {
                for (i, bump) in bumps.iter().enumerate() {
                    if !(bump.width > 0.0) {
                        return Err(CoreError::Profile(format!(
                            "bump {i} has nonpositive width"
                        )));
                    }
                }
            }
            _ => {}
        }

        let dx = spec.x_max / spec.n_cells as f64;
        let mut profile = Self {
            c_samples: Vec::new(),
            table: TravelTimeTable {
                dx,
                times: Vec::new(),
            },
            hash: String::new(),
            spec,
        };
        profile.c_samples = (0..profile.spec.n_cells)
            .map(|i| profile.speed((i as f64 + 0.5) * dx))
            .collect();

        // Check bounds and support on cell centres and nodes alike.
        let nodes = (0..=profile.spec.n_cells).map(|i| i as f64 * dx);
        let centres = (0..profile.spec.n_cells).map(|i| (i as f64 + 0.5) * dx);
        for x in nodes.chain(centres) {
            let c = profile.speed(x);
            if !(c >= b.c0 - SUPPORT_TOL && c <= b.c1 + SUPPORT_TOL) {
                return Err(CoreError::Profile(format!(
                    "speed {c} at x={x} violates bounds [{}, {}]",
                    b.c0, b.c1
                )));
            }
            if (x <= b.l0 || x >= b.l1) && (c - 1.0).abs() > SUPPORT_TOL {
                return Err(CoreError::Profile(format!(
                    "speed {c} at x={x} differs from 1 outside ({}, {})",
                    b.l0, b.l1
                )));
            }
        }

        let mut times = Vec::with_capacity(profile.spec.n_cells + 1);
        let mut acc = 0.0;
        times.push(0.0);
        for i in 0..profile.spec.n_cells {
            let a = 1.0 / profile.speed(i as f64 * dx);
            let c = 1.0 / profile.speed((i + 1) as f64 * dx);
            acc += 0.5 * dx * (a + c);
            times.push(acc);
        }
        profile.table.times = times;
        profile.hash = content_hash(&profile.spec);
        Ok(profile)
    }

    pub fn reference(t: f64) -> Self {
        Self::new(ProfileSpec::reference(t)).expect("reference profile is valid")
    }

    pub fn uniform(x_max: f64, n_cells: usize) -> Result<Self> {
        Self::new(ProfileSpec::uniform(x_max, n_cells))
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn x_max(&self) -> f64 {
        self.spec.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.spec.n_cells
    }

    pub fn bounds(&self) -> Bounds {
        self.spec.bounds
    }

    pub fn c_samples(&self) -> &[f64] {
        &self.c_samples
    }

    pub fn travel_table(&self) -> &TravelTimeTable {
        &self.table
    }

    /// Hex SHA-256 of the canonical JSON form of the spec.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }

    /// `c(x)`; unit speed beyond the sampled range.
    pub fn speed(&self, x: f64) -> f64 {
        match &self.spec.shape {
            ProfileShape::Bumps { bumps } => 1.0 + bumps.iter().map(|b| b.eval(x)).sum::<f64>(),
            ProfileShape::Samples { c } => {
                let dx = self.spec.x_max / self.spec.n_cells as f64;
                let s = x / dx - 0.5;
                if s <= 0.0 {
                    c[0]
                } else if s >= (c.len() - 1) as f64 {
                    c[c.len() - 1]
                } else {
                    let i = s.floor() as usize;
                    let w = s - i as f64;
                    (1.0 - w) * c[i] + w * c[i + 1]
                }
            }
        }
    }

    /// Largest speed over the profile nodes and cell centres.
    pub fn max_speed(&self) -> f64 {
        let dx = self.table.dx;
        (0..=self.spec.n_cells)
            .map(|i| self.speed(i as f64 * dx))
            .chain(self.c_samples.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn min_speed(&self) -> f64 {
        let dx = self.table.dx;
        (0..=self.spec.n_cells)
            .map(|i| self.speed(i as f64 * dx))
            .chain(self.c_samples.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    fn check_coordinate(&self, x: f64) -> Result<()> {
        if x >= 0.0 && x <= self.spec.x_max * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(CoreError::Domain(format!(
                "x = {x} outside [0, {}]",
                self.spec.x_max
            )))
        }
    }

    /// `d(0, x)`: table value at the cell start plus a trapezoid over the
    /// partial cell.
    fn travel_from_origin(&self, x: f64) -> f64 {
        let dx = self.table.dx;
        let i = ((x / dx).floor() as usize).min(self.spec.n_cells - 1);
        let x0 = i as f64 * dx;
        let part = x - x0;
        self.table.times[i] + 0.5 * part * (1.0 / self.speed(x0) + 1.0 / self.speed(x))
    }

    /// Travel time `int_{x1}^{x2} dx / c`.
    pub fn travel_time(&self, x1: f64, x2: f64) -> Result<f64> {
        self.check_coordinate(x1)?;
        self.check_coordinate(x2)?;
        if x1 > x2 {
            return Err(CoreError::Domain(format!(
                "travel_time needs x1 <= x2, got {x1} > {x2}"
            )));
        }
        Ok(self.travel_from_origin(x2) - self.travel_from_origin(x1))
    }

    /// Travel time from the boundary to the far end of the domain.
    pub fn total_travel_time(&self) -> f64 {
        *self.table.times.last().expect("nonempty table")
    }

    /// The point `x(r)` with `d(0, x(r)) = r`.
    pub fn point_at_travel_time(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(CoreError::Range(format!(
                "travel time must be nonnegative, got {r}"
            )));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let times = &self.table.times;
        if r > self.total_travel_time() {
            return Err(CoreError::Range(format!(
                "travel time {r} exceeds the domain travel time {}",
                self.total_travel_time()
            )));
        }
        // first node with time >= r
        let hi = times.partition_point(|&t| t < r);
        let i = hi.saturating_sub(1);
        let dx = self.table.dx;
        let (mut lo_x, mut hi_x) = (i as f64 * dx, (i as f64 + 1.0) * dx);
        for _ in 0..100 {
            let mid = 0.5 * (lo_x + hi_x);
            if self.travel_from_origin(mid) < r {
                lo_x = mid;
            } else {
                hi_x = mid;
            }
            if hi_x - lo_x <= 1e-15 * hi_x.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo_x + hi_x))
    }

    /// `M(r) = [0, x(r)]`.
    pub fn domain_of_influence(&self, r: f64) -> Result<Interval> {
        Ok(Interval {
            start: 0.0,
            end: self.point_at_travel_time(r)?,
        })
    }

    /// Samples of the indicator of `M(r2) \ M(r1) = (x(r1), x(r2)]`.
    pub fn slab_indicator(&self, r1: f64, r2: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let slab = self.slab(r1, r2)?;
        Ok(xs
            .iter()
            .map(|&x| {
                if x > slab.start && x <= slab.end {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// `[x(r1), x(r2)]`.
    pub fn slab(&self, r1: f64, r2: f64) -> Result<Interval> {
        if !(r1 >= 0.0 && r1 < r2) {
            return Err(CoreError::Argument(format!(
                "slab radii must satisfy 0 <= r1 < r2, got {r1}, {r2}"
            )));
        }
        Ok(Interval {
            start: self.point_at_travel_time(r1)?,
            end: self.point_at_travel_time(r2)?,
        })
    }

    /// `int_a^b c^{-2} dx` by adaptive-free composite Simpson on a fine
    /// uniform subdivision.
    pub fn weighted_length(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = (((b - a) / self.table.dx).ceil() as usize).max(1) * 4;
        let h = (b - a) / n as f64;
        let w = |x: f64| self.speed(x).powi(-2);
        let mut s = w(a) + w(b);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * w(a + k as f64 * h);
        }
        s * h / 3.0
    }

    /// `int_a^b x c^{-2} dx / int_a^b c^{-2} dx`.
    pub fn weighted_centroid(&self, a: f64, b: f64) -> f64 {
        let n = (((b - a) / self.table.dx).ceil() as usize).max(1) * 4;
        let h = (b - a) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=n {
            let x = a + k as f64 * h;
            let wk = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let m = self.speed(x).powi(-2);
            num += wk * x * m;
            den += wk * m;
        }
        num / den
    }
}

/// Hex SHA-256 of a value's JSON serialization.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_profile_matches_targets() {
        let p = MediumProfile::reference(2.0);
        let x1 = p.point_at_travel_time(0.5).unwrap();
        let x2 = p.point_at_travel_time(0.625).unwrap();
        assert!((x1 - 0.5).abs() < 0.005, "x(1/2) = {x1}");
        assert!((x2 - 0.62).abs() < 0.005, "x(5/8) = {x2}");
        assert!(p.min_speed() >= 0.8 && p.max_speed() <= 1.4);
        assert_relative_eq!(p.max_speed(), 1.4, epsilon = 1e-6);
        assert!(p.total_travel_time() > 2.0);
    }

    #[test]
    fn unit_speed_travel_times() {
        let p = MediumProfile::uniform(2.0, 200).unwrap();
        assert_relative_eq!(p.travel_time(0.0, 0.7).unwrap(), 0.7, epsilon = 1e-12);
        assert_eq!(p.travel_time(0.3, 0.3).unwrap(), 0.0);
        assert_relative_eq!(p.point_at_travel_time(0.3).unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(p.point_at_travel_time(0.0).unwrap(), 0.0);
        let m = p.domain_of_influence(0.4).unwrap();
        assert_eq!(m.start, 0.0);
        assert_relative_eq!(m.end, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = MediumProfile::uniform(2.0, 200).unwrap();
        assert!(p.travel_time(-0.1, 0.5).is_err());
        assert!(p.travel_time(0.5, 2.5).is_err());
        assert!(p.point_at_travel_time(2.5).is_err());
        assert!(p.slab_indicator(0.5, 0.5, &[0.1]).is_err());

        let mut spec = ProfileSpec::reference(2.0);
        spec.bounds.c1 = 1.2;
        assert!(MediumProfile::new(spec).is_err());
        let mut spec = ProfileSpec::reference(2.0);
        spec.bounds.l1 = 0.4;
        assert!(MediumProfile::new(spec).is_err());
        let spec = ProfileSpec {
            shape: ProfileShape::Samples { c: vec![1.0; 3] },
            ..ProfileSpec::uniform(1.0, 4)
        };
        assert!(MediumProfile::new(spec).is_err());
    }

    #[test]
    fn slab_indicator_unit_speed() {
        let p = MediumProfile::uniform(2.0, 200).unwrap();
        let xs: Vec<f64> = (0..20).map(|i| 0.025 + i as f64 * 0.05).collect();
        let ind = p.slab_indicator(0.0, 0.5, &xs).unwrap();
        for (x, v) in xs.iter().zip(&ind) {
            let expect = if *x < 0.5 { 1.0 } else { 0.0 };
            assert_eq!(*v, expect, "x={x}");
        }
    }

    #[test]
    fn json_roundtrip_and_hash() {
        let spec = ProfileSpec::reference(2.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"bumps\""));
        let back: ProfileSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let a = MediumProfile::new(spec.clone()).unwrap();
        let mut other = spec;
        other.n_cells = 4096;
        let b = MediumProfile::new(other).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);

        let samples: ProfileSpec = serde_json::from_str(
            r#"{"x_max": 1.0, "n_cells": 4, "kind": "samples", "c": [1, 1, 1, 1],
                "bounds": {"c0": 1, "c1": 1, "l0": 0.1, "l1": 0.5}}"#,
        )
        .unwrap();
        assert!(MediumProfile::new(samples).is_ok());
    }

    #[test]
    fn weighted_measures_unit_speed() {
        let p = MediumProfile::uniform(2.0, 200).unwrap();
        assert_relative_eq!(p.weighted_length(0.5, 0.625), 0.125, epsilon = 1e-12);
        assert_relative_eq!(p.weighted_centroid(0.5, 0.625), 0.5625, epsilon = 1e-12);
    }
}
