//! Prism models: finite hidden-parameter spaces whose blocks fix every
//! outcome, including the inherent "no show", and exact event measures.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ExperimentGeometry, Wing};
use crate::rational::Rational;

/// Detected spin value along a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Predetermined response of one particle to one direction.
///
/// Ordering is `Up < Down < NoShow`, the canonical enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Up,
    Down,
    NoShow,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Up, Outcome::Down, Outcome::NoShow];

    pub fn shows(self) -> bool {
        self != Outcome::NoShow
    }

    pub fn spin(self) -> Option<Spin> {
        match self {
            Outcome::Up => Some(Spin::Up),
            Outcome::Down => Some(Spin::Down),
            Outcome::NoShow => None,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Up => Outcome::Down,
            Outcome::Down => Outcome::Up,
            Outcome::NoShow => Outcome::NoShow,
        }
    }

    /// One-character code used in model files: `U`, `D` or `-`.
    pub fn code(self) -> char {
        match self {
            Outcome::Up => 'U',
            Outcome::Down => 'D',
            Outcome::NoShow => '-',
        }
    }

    pub fn from_code(c: char) -> Option<Outcome> {
        match c {
            'U' | 'u' => Some(Outcome::Up),
            'D' | 'd' => Some(Outcome::Down),
            '-' | 'N' | 'n' => Some(Outcome::NoShow),
            _ => None,
        }
    }
}

impl From<Spin> for Outcome {
    fn from(s: Spin) -> Self {
        match s {
            Spin::Up => Outcome::Up,
            Spin::Down => Outcome::Down,
        }
    }
}

/// Responses of both particles to every direction of the geometry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResponseFunction {
    pub left: Vec<Outcome>,
    pub right: Vec<Outcome>,
}

impl ResponseFunction {
    pub fn new(left: Vec<Outcome>, right: Vec<Outcome>) -> Self {
        ResponseFunction { left, right }
    }

    /// Parses compact codes such as `("-D", "UD")`.
    pub fn from_codes(left: &str, right: &str) -> Result<Self> {
        let parse = |s: &str| {
            s.chars()
                .map(|c| Outcome::from_code(c).ok_or_else(|| Error::Parse(format!("bad outcome code `{c}`"))))
                .collect::<Result<Vec<_>>>()
        };
        Ok(ResponseFunction { left: parse(left)?, right: parse(right)? })
    }

    pub fn outcome(&self, wing: Wing, index: usize) -> Outcome {
        match wing {
            Wing::Left => self.left[index],
            Wing::Right => self.right[index],
        }
    }

    pub fn wing(&self, wing: Wing) -> &[Outcome] {
        match wing {
            Wing::Left => &self.left,
            Wing::Right => &self.right,
        }
    }

    /// Same strategy with Up and Down exchanged everywhere.
    pub fn flipped(&self) -> Self {
        ResponseFunction {
            left: self.left.iter().map(|o| o.flipped()).collect(),
            right: self.right.iter().map(|o| o.flipped()).collect(),
        }
    }

    pub fn has_no_show(&self) -> bool {
        self.left.iter().chain(&self.right).any(|o| !o.shows())
    }

    pub fn satisfies(&self, atom: &Atom) -> bool {
        match *atom {
            Atom::Outcome(wing, i, spin) => self.outcome(wing, i) == Outcome::from(spin),
            Atom::Shows(wing, i) => self.outcome(wing, i).shows(),
        }
    }
}

impl fmt::Display for ResponseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes = |v: &[Outcome]| v.iter().map(|o| o.code()).collect::<String>();
        write!(f, "{}|{}", codes(&self.left), codes(&self.right))
    }
}

/// A region of the parameter space with positive measure and one response.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub measure: Rational,
    pub response: ResponseFunction,
}

impl Block {
    pub fn new(measure: Rational, response: ResponseFunction) -> Self {
        Block { measure, response }
    }
}

/// Elementary event: a spin outcome, or "shows" (`[A_i]`), on one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    Outcome(Wing, usize, Spin),
    Shows(Wing, usize),
}

/// Conjunction of atoms. The empty query is the whole parameter space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventQuery {
    atoms: Vec<Atom>,
}

impl EventQuery {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn with(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }

    /// `A(i, spin)`.
    pub fn left(self, i: usize, spin: Spin) -> Self {
        self.with(Atom::Outcome(Wing::Left, i, spin))
    }

    /// `B(j, spin)`.
    pub fn right(self, j: usize, spin: Spin) -> Self {
        self.with(Atom::Outcome(Wing::Right, j, spin))
    }

    /// `[A_i]`.
    pub fn shows_left(self, i: usize) -> Self {
        self.with(Atom::Shows(Wing::Left, i))
    }

    /// `[B_j]`.
    pub fn shows_right(self, j: usize) -> Self {
        self.with(Atom::Shows(Wing::Right, j))
    }

    pub fn and(mut self, other: &EventQuery) -> Self {
        self.atoms.extend_from_slice(&other.atoms);
        self
    }

    pub fn matches(&self, response: &ResponseFunction) -> bool {
        self.atoms.iter().all(|a| response.satisfies(a))
    }
}

/// Validated prism model: blocks over a geometry with measures summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismModel {
    geometry: ExperimentGeometry,
    blocks: Vec<Block>,
}

impl PrismModel {
    pub fn new(geometry: ExperimentGeometry, blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::domain("a prism model needs at least one block"));
        }
        let (m_left, m_right) = (geometry.len(Wing::Left), geometry.len(Wing::Right));
        for (k, b) in blocks.iter().enumerate() {
            if b.response.left.len() != m_left || b.response.right.len() != m_right {
                return Err(Error::domain(format!(
                    "block {k} responds to {}x{} directions, geometry has {m_left}x{m_right}",
                    b.response.left.len(),
                    b.response.right.len()
                )));
            }
            if b.measure <= Rational::zero() {
                return Err(Error::domain(format!("block {k} has non-positive measure {}", b.measure)));
            }
        }
        let sum: Rational = blocks.iter().map(|b| &b.measure).sum();
        if !sum.is_one() {
            return Err(Error::MeasureSum { sum });
        }
        Ok(PrismModel { geometry, blocks })
    }

    pub fn geometry(&self) -> &ExperimentGeometry {
        &self.geometry
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn has_no_show(&self) -> bool {
        self.blocks.iter().any(|b| b.response.has_no_show())
    }

    fn check_query(&self, query: &EventQuery) -> Result<()> {
        for atom in query.atoms() {
            let (Atom::Outcome(wing, i, _) | Atom::Shows(wing, i)) = *atom;
            self.geometry.check_index(wing, i)?;
        }
        Ok(())
    }

    /// Exact measure of the set of parameters satisfying every atom.
    pub fn event_measure(&self, query: &EventQuery) -> Result<Rational> {
        self.check_query(query)?;
        Ok(self
            .blocks
            .iter()
            .filter(|b| query.matches(&b.response))
            .map(|b| &b.measure)
            .sum())
    }

    /// `μ(event ∧ condition) / μ(condition)`.
    pub fn conditional_probability(&self, event: &EventQuery, condition: &EventQuery) -> Result<Rational> {
        let denom = self.event_measure(condition)?;
        if denom.is_zero() {
            return Err(Error::ZeroCondition);
        }
        let joint = self.event_measure(&event.clone().and(condition))?;
        Ok(joint / denom)
    }

    /// Per-block check of `p(A∧B|a∧b∧λ) = p(A|a∧λ)·p(B|b∧λ)` for every
    /// pair of spin outcomes on the given left and right directions.
    pub fn check_screening_off(&self, left: usize, right: usize) -> Result<ScreeningOffReport> {
        self.geometry.check_index(Wing::Left, left)?;
        self.geometry.check_index(Wing::Right, right)?;
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(index, b)| {
                let factors = Spin::BOTH
                    .iter()
                    .flat_map(|&sl| Spin::BOTH.iter().map(move |&sr| (sl, sr)))
                    .map(|(sl, sr)| {
                        let p_left = u8::from(b.response.left[left] == Outcome::from(sl));
                        let p_right = u8::from(b.response.right[right] == Outcome::from(sr));
                        let joint_query = EventQuery::all().left(left, sl).right(right, sr);
                        let joint = u8::from(joint_query.matches(&b.response));
                        Factorization { left: sl, right: sr, p_left, p_right, joint }
                    })
                    .collect::<Vec<_>>();
                let passed = factors.iter().all(|f| f.joint == f.p_left * f.p_right);
                BlockScreening { index, factors, passed }
            })
            .collect::<Vec<_>>();
        let passed = blocks.iter().all(|b| b.passed);
        Ok(ScreeningOffReport { left, right, passed, blocks })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub left: Spin,
    pub right: Spin,
    pub p_left: u8,
    pub p_right: u8,
    pub joint: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockScreening {
    pub index: usize,
    pub factors: Vec<Factorization>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreeningOffReport {
    pub left: usize,
    pub right: usize,
    pub passed: bool,
    pub blocks: Vec<BlockScreening>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn one_by_one(codes: &[(i64, &str, &str)]) -> Result<PrismModel> {
        let g = ExperimentGeometry::from_degrees(&[0.0], &[0.0]).unwrap();
        let blocks = codes
            .iter()
            .map(|&(n, l, r)| Block::new(ratio(n, 4), ResponseFunction::from_codes(l, r).unwrap()))
            .collect();
        PrismModel::new(g, blocks)
    }

    #[test]
    fn point_mass_all_up() {
        let g = ExperimentGeometry::two_by_two();
        let m = PrismModel::new(g, vec![Block::new(int(1), ResponseFunction::from_codes("UU", "UU").unwrap())]);
        let m = m.unwrap();
        assert_eq!(m.event_measure(&EventQuery::all().left(1, Spin::Up)).unwrap(), int(1));
    }

    #[test]
    fn measure_sum_error() {
        let g = ExperimentGeometry::two_by_two();
        let r = ResponseFunction::from_codes("UU", "UU").unwrap();
        let err = PrismModel::new(g, vec![Block::new(ratio(1, 2), r.clone()), Block::new(ratio(1, 3), r)]);
        assert!(matches!(err, Err(Error::MeasureSum { sum }) if sum == ratio(5, 6)));
    }

    #[test]
    fn response_must_cover_geometry() {
        let g = ExperimentGeometry::two_by_two();
        let r = ResponseFunction::from_codes("U", "UU").unwrap();
        assert!(matches!(PrismModel::new(g, vec![Block::new(int(1), r)]), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_conjunction_is_whole_space() {
        let m = one_by_one(&[(1, "U", "D"), (3, "-", "U")]).unwrap();
        assert_eq!(m.event_measure(&EventQuery::all()).unwrap(), int(1));
    }

    #[test]
    fn no_show_satisfies_neither_spin() {
        let m = one_by_one(&[(1, "U", "D"), (3, "-", "U")]).unwrap();
        let up = m.event_measure(&EventQuery::all().left(0, Spin::Up)).unwrap();
        let down = m.event_measure(&EventQuery::all().left(0, Spin::Down)).unwrap();
        let shows = m.event_measure(&EventQuery::all().shows_left(0)).unwrap();
        assert_eq!(up, ratio(1, 4));
        assert_eq!(down, int(0));
        assert_eq!(shows, ratio(1, 4));
    }

    #[test]
    fn foreign_index_is_domain_error() {
        let m = one_by_one(&[(4, "U", "D")]).unwrap();
        assert!(matches!(m.event_measure(&EventQuery::all().shows_right(1)), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_condition() {
        let m = one_by_one(&[(4, "-", "D")]).unwrap();
        let err = m.conditional_probability(&EventQuery::all().left(0, Spin::Up), &EventQuery::all().shows_left(0));
        assert!(matches!(err, Err(Error::ZeroCondition)));
    }

    #[test]
    fn screening_off_holds_for_deterministic_blocks() {
        let m = one_by_one(&[(1, "U", "D"), (2, "-", "U"), (1, "D", "-")]).unwrap();
        let report = m.check_screening_off(0, 0).unwrap();
        assert!(report.passed);
        assert_eq!(report.blocks.len(), 3);
        assert!(m.check_screening_off(0, 1).is_err());
    }
}
