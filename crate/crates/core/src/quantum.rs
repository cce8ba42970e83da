//! Closed-form singlet probabilities that a prism model has to reproduce on
//! the selected (shown / double-shown) sub-ensembles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ExperimentGeometry, Wing};
use crate::model::Spin;

/// Which two-particle outcome law to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairLaw {
    /// Spin-½ singlet: `p(Up,Up) = ½ sin²(θ/2)`.
    #[default]
    SpinHalf,
    /// Polarization-entangled photons (ψ⁻): `p(Up,Up) = ½ sin²θ`.
    Polarization,
}

fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && (0.0..=PI + 1e-12).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(format!("angle {theta} rad outside [0, π]")))
    }
}

/// Probability of (Up, Up) given both particles show, `½ sin²(θ/2)`.
///
/// Evaluated as `(1 − cos θ)/4`, which is exact at 0 and π.
pub fn singlet_pair_probability(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok((1.0 - theta.cos()) / 4.0)
}

/// Single-wing probability of either spin value, independent of direction.
pub fn singlet_single_probability() -> f64 {
    0.5
}

/// Joint law of the two spins on the double-show sub-ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTarget {
    pub up_up: f64,
    pub up_down: f64,
    pub down_up: f64,
    pub down_down: f64,
}

impl PairTarget {
    pub fn for_angle(theta: f64, law: PairLaw) -> Result<Self> {
        check_angle(theta)?;
        let same = match law {
            PairLaw::SpinHalf => (1.0 - theta.cos()) / 4.0,
            PairLaw::Polarization => (1.0 - (2.0 * theta).cos()) / 4.0,
        };
        let opposite = 0.5 - same;
        Ok(PairTarget { up_up: same, up_down: opposite, down_up: opposite, down_down: same })
    }

    pub fn get(&self, left: Spin, right: Spin) -> f64 {
        match (left, right) {
            (Spin::Up, Spin::Up) => self.up_up,
            (Spin::Up, Spin::Down) => self.up_down,
            (Spin::Down, Spin::Up) => self.down_up,
            (Spin::Down, Spin::Down) => self.down_down,
        }
    }
}

/// The numbers `q_i`, `q′_j`, `q_ij` for every direction and direction pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumTarget {
    pub law: PairLaw,
    /// `p(Up)` per left direction.
    pub singles_left: Vec<f64>,
    /// `p(Up)` per right direction.
    pub singles_right: Vec<f64>,
    /// `pairs[i][j]`, joint law for left direction i and right direction j.
    pub pairs: Vec<Vec<PairTarget>>,
}

impl QuantumTarget {
    pub fn singles(&self, wing: Wing) -> &[f64] {
        match wing {
            Wing::Left => &self.singles_left,
            Wing::Right => &self.singles_right,
        }
    }

    pub fn check_matches(&self, geometry: &ExperimentGeometry) -> Result<()> {
        let (ml, mr) = (geometry.len(Wing::Left), geometry.len(Wing::Right));
        let ok = self.singles_left.len() == ml
            && self.singles_right.len() == mr
            && self.pairs.len() == ml
            && self.pairs.iter().all(|row| row.len() == mr);
        if ok {
            Ok(())
        } else {
            Err(Error::TargetMismatch(format!(
                "targets are {}x{}, geometry is {ml}x{mr}",
                self.singles_left.len(),
                self.singles_right.len()
            )))
        }
    }
}

pub fn target_table(geometry: &ExperimentGeometry) -> QuantumTarget {
    target_table_with(geometry, PairLaw::SpinHalf)
}

pub fn target_table_with(geometry: &ExperimentGeometry, law: PairLaw) -> QuantumTarget {
    let (ml, mr) = (geometry.len(Wing::Left), geometry.len(Wing::Right));
    let pairs = (0..ml)
        .map(|i| {
            (0..mr)
                .map(|j| {
                    let theta = geometry.angle_between(i, j).expect("indices in range");
                    PairTarget::for_angle(theta, law).expect("angle folded into [0, π]")
                })
                .collect()
        })
        .collect();
    QuantumTarget {
        law,
        singles_left: vec![singlet_single_probability(); ml],
        singles_right: vec![singlet_single_probability(); mr],
        pairs,
    }
}
