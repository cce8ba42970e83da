//! Measurement directions of the two wings.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    Left,
    Right,
}

impl Wing {
    pub fn other(self) -> Wing {
        match self {
            Wing::Left => Wing::Right,
            Wing::Right => Wing::Left,
        }
    }

    pub fn tag(self) -> char {
        match self {
            Wing::Left => 'L',
            Wing::Right => 'R',
        }
    }
}

impl fmt::Display for Wing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wing::Left => "left",
            Wing::Right => "right",
        })
    }
}

/// An oriented measurement direction in the common plane of the analyzers.
///
/// The angle is kept in radians in `[0, 2π)`. Two directions at 60° and 240°
/// share a spin axis with opposite orientation, which matters for the
/// outcome law, so orientation is not folded away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub wing: Wing,
    pub index: usize,
    angle: f64,
}

impl Direction {
    pub fn new(wing: Wing, index: usize, radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::domain(format!("non-finite angle for {wing} direction {index}")));
        }
        Ok(Direction { wing, index, angle: normalize(radians) })
    }

    pub fn radians(&self) -> f64 {
        self.angle
    }

    /// Degrees rounded to nine decimals, the representation used in files.
    pub fn degrees(&self) -> f64 {
        round_degrees(self.angle.to_degrees())
    }

    /// Angle between the two directions as vectors, in `[0, π]`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let d = (self.angle - other.angle).abs() % TAU;
        let folded = if d > PI { TAU - d } else { d };
        // snap values that are π or 0 up to rounding
        if (folded - PI).abs() < 1e-12 {
            PI
        } else if folded < 1e-12 {
            0.0
        } else {
            folded
        }
    }
}

fn normalize(radians: f64) -> f64 {
    let r = radians.rem_euclid(TAU);
    if (TAU - r) < 1e-12 {
        0.0
    } else {
        r
    }
}

pub(crate) fn round_degrees(deg: f64) -> f64 {
    let r = (deg * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Key identifying a distinct inter-wing angle, in micro-degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AngleKey(i64);

impl AngleKey {
    pub fn from_radians(theta: f64) -> Self {
        AngleKey((theta.to_degrees() * 1e6).round() as i64)
    }

    pub fn from_degrees(deg: f64) -> Self {
        AngleKey((deg * 1e6).round() as i64)
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl fmt::Display for AngleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGeometry {
    left: Vec<Direction>,
    right: Vec<Direction>,
}

impl ExperimentGeometry {
    pub fn from_radians(left: &[f64], right: &[f64]) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::domain("each wing needs at least one direction"));
        }
        let build = |wing, angles: &[f64]| {
            angles
                .iter()
                .enumerate()
                .map(|(i, &a)| Direction::new(wing, i, a))
                .collect::<Result<Vec<_>>>()
        };
        Ok(ExperimentGeometry { left: build(Wing::Left, left)?, right: build(Wing::Right, right)? })
    }

    pub fn from_degrees(left: &[f64], right: &[f64]) -> Result<Self> {
        let rad = |v: &[f64]| v.iter().map(|d| d.to_radians()).collect::<Vec<_>>();
        Self::from_radians(&rad(left), &rad(right))
    }

    /// Coplanar a, a′ on the left and b, b′ on the right with
    /// ∠(a,b) = ∠(a,b′) = ∠(a′,b′) = 120° and ∠(a′,b) = 0.
    pub fn two_by_two() -> Self {
        Self::from_degrees(&[0.0, 120.0], &[120.0, 240.0]).expect("valid geometry")
    }

    pub fn left(&self) -> &[Direction] {
        &self.left
    }

    pub fn right(&self) -> &[Direction] {
        &self.right
    }

    pub fn directions(&self, wing: Wing) -> &[Direction] {
        match wing {
            Wing::Left => &self.left,
            Wing::Right => &self.right,
        }
    }

    pub fn len(&self, wing: Wing) -> usize {
        self.directions(wing).len()
    }

    pub fn left_degrees(&self) -> Vec<f64> {
        self.left.iter().map(Direction::degrees).collect()
    }

    pub fn right_degrees(&self) -> Vec<f64> {
        self.right.iter().map(Direction::degrees).collect()
    }

    pub fn check_index(&self, wing: Wing, index: usize) -> Result<()> {
        if index < self.len(wing) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{wing} direction {index} not in geometry ({} directions)",
                self.len(wing)
            )))
        }
    }

    /// ∠(a_i, b_j) in radians.
    pub fn angle_between(&self, left: usize, right: usize) -> Result<f64> {
        self.check_index(Wing::Left, left)?;
        self.check_index(Wing::Right, right)?;
        Ok(self.left[left].angle_to(&self.right[right]))
    }

    /// Distinct inter-wing angles in ascending order.
    pub fn distinct_angles(&self) -> Vec<AngleKey> {
        let mut keys: Vec<AngleKey> = self
            .left
            .iter()
            .flat_map(|a| self.right.iter().map(move |b| AngleKey::from_radians(a.angle_to(b))))
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_angles() {
        let g = ExperimentGeometry::two_by_two();
        let deg = |i, j| g.angle_between(i, j).unwrap().to_degrees();
        assert!((deg(0, 0) - 120.0).abs() < 1e-9);
        assert!((deg(0, 1) - 120.0).abs() < 1e-9);
        assert!(deg(1, 0).abs() < 1e-9);
        assert!((deg(1, 1) - 120.0).abs() < 1e-9);
        assert_eq!(g.distinct_angles(), vec![AngleKey::from_degrees(0.0), AngleKey::from_degrees(120.0)]);
    }

    #[test]
    fn angle_folds_into_zero_pi() {
        let a = Direction::new(Wing::Left, 0, 350f64.to_radians()).unwrap();
        let b = Direction::new(Wing::Right, 0, 10f64.to_radians()).unwrap();
        assert!((a.angle_to(&b).to_degrees() - 20.0).abs() < 1e-9);
        let c = Direction::new(Wing::Right, 1, 170f64.to_radians()).unwrap();
        assert!((a.angle_to(&c) - PI).abs() < 1e-15);
        let d = Direction::new(Wing::Left, 0, (-90f64).to_radians()).unwrap();
        assert!((d.degrees() - 270.0).abs() < 1e-9);
    }

    #[test]
    fn degrees_round_trip() {
        let g = ExperimentGeometry::from_degrees(&[0.0, 120.0, 45.5], &[240.0]).unwrap();
        assert_eq!(g.left_degrees(), vec![0.0, 120.0, 45.5]);
        let again = ExperimentGeometry::from_degrees(&g.left_degrees(), &g.right_degrees()).unwrap();
        assert_eq!(again.left_degrees(), g.left_degrees());
    }

    #[test]
    fn rejects_empty_wing_and_foreign_index() {
        assert!(ExperimentGeometry::from_degrees(&[], &[0.0]).is_err());
        let g = ExperimentGeometry::two_by_two();
        assert!(g.angle_between(2, 0).is_err());
        assert!(g.check_index(Wing::Right, 1).is_ok());
    }
}
