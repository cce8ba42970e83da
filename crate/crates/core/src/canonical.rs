//! The 2×2 prism model reproducing the singlet statistics at 120°/0°.
//!
//! Every direction is defective on 1/4 of the parameter space and no
//! parameter is defective on both directions of a measured pair, so the
//! space splits into four quarters, each missing exactly one of a, a′, b, b′.
//! A quarter holds one 3/32 strategy and one 1/32 strategy, each together
//! with its Up/Down mirror image.

use crate::geometry::ExperimentGeometry;
use crate::model::{Block, PrismModel, ResponseFunction};
use crate::rational::ratio;

/// `(measure numerator over 32, left codes [a a′], right codes [b b′])`.
pub const CANONICAL_BLOCKS: [(i64, &str, &str); 16] = [
    // defective at a
    (3, "-D", "UD"),
    (3, "-U", "DU"),
    (1, "-U", "DD"),
    (1, "-D", "UU"),
    // defective at a′
    (3, "U-", "UU"),
    (3, "D-", "DD"),
    (1, "U-", "DD"),
    (1, "D-", "UU"),
    // defective at b
    (3, "UU", "-U"),
    (3, "DD", "-D"),
    (1, "UU", "-D"),
    (1, "DD", "-U"),
    // defective at b′
    (3, "UD", "U-"),
    (3, "DU", "D-"),
    (1, "UU", "D-"),
    (1, "DD", "U-"),
];

/// Response of the parameter singled out in the model's picture: no outcome
/// at a, Down at a′, Up at b, Down at b′.
pub fn lambda_example() -> ResponseFunction {
    ResponseFunction::from_codes("-D", "UD").expect("valid codes")
}

pub fn canonical_2x2_model() -> PrismModel {
    let blocks = CANONICAL_BLOCKS
        .iter()
        .map(|&(n, l, r)| Block::new(ratio(n, 32), ResponseFunction::from_codes(l, r).expect("valid codes")))
        .collect();
    PrismModel::new(ExperimentGeometry::two_by_two(), blocks).expect("canonical model is valid")
}
