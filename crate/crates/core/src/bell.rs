//! Clauser–Horne expression on the emitted ensemble and on the
//! coincidence-selected ensemble.

use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{EventQuery, PrismModel, Spin};
use crate::rational::Rational;

/// The six probabilities entering the CH expression.
///
/// The subtracted pair is (a′, b); the two single terms belong to the other
/// two directions, a and b′. That pairing is what makes `−1 ≤ CH ≤ 0` hold
/// for every local model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChInput {
    pub p_ab: f64,
    pub p_ab_prime: f64,
    pub p_a_prime_b: f64,
    pub p_a_prime_b_prime: f64,
    pub p_a: f64,
    pub p_b_prime: f64,
}

impl ChInput {
    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [p_ab, p_ab_prime, p_a_prime_b, p_a_prime_b_prime, p_a, p_b_prime] => {
                Some(ChInput { p_ab, p_ab_prime, p_a_prime_b, p_a_prime_b_prime, p_a, p_b_prime })
            }
            _ => None,
        }
    }
}

/// `p_ab + p_ab′ − p_a′b + p_a′b′ − p_a − p_b′`.
pub fn ch_expression(x: &ChInput) -> f64 {
    x.p_ab + x.p_ab_prime - x.p_a_prime_b + x.p_a_prime_b_prime - x.p_a - x.p_b_prime
}

/// Exact version of [`ch_expression`] over the terms in [`ChTerm::ALL`] order.
pub fn ch_expression_exact(terms: &[Rational; 6]) -> Rational {
    ChTerm::ALL
        .iter()
        .zip(terms)
        .map(|(t, v)| if t.sign() > 0 { v.clone() } else { -v.clone() })
        .sum()
}

/// Where a CH value sits relative to `−1 ≤ CH ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChBound {
    Within,
    AboveUpper,
    BelowLower,
}

pub fn classify(value: f64) -> ChBound {
    if value > 0.0 {
        ChBound::AboveUpper
    } else if value < -1.0 {
        ChBound::BelowLower
    } else {
        ChBound::Within
    }
}

/// Choice of a, a′ (left indices) and b, b′ (right indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChSettings {
    pub a: usize,
    pub a_prime: usize,
    pub b: usize,
    pub b_prime: usize,
}

impl Default for ChSettings {
    fn default() -> Self {
        ChSettings { a: 0, a_prime: 1, b: 0, b_prime: 1 }
    }
}

/// One of the six CH terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChTerm {
    AB,
    ABPrime,
    APrimeB,
    APrimeBPrime,
    A,
    BPrime,
}

impl ChTerm {
    pub const ALL: [ChTerm; 6] =
        [ChTerm::AB, ChTerm::ABPrime, ChTerm::APrimeB, ChTerm::APrimeBPrime, ChTerm::A, ChTerm::BPrime];

    pub fn sign(self) -> i32 {
        match self {
            ChTerm::AB | ChTerm::ABPrime | ChTerm::APrimeBPrime => 1,
            ChTerm::APrimeB | ChTerm::A | ChTerm::BPrime => -1,
        }
    }

    /// Left and right direction indices; singles have only one side.
    pub fn directions(self, s: &ChSettings) -> (Option<usize>, Option<usize>) {
        match self {
            ChTerm::AB => (Some(s.a), Some(s.b)),
            ChTerm::ABPrime => (Some(s.a), Some(s.b_prime)),
            ChTerm::APrimeB => (Some(s.a_prime), Some(s.b)),
            ChTerm::APrimeBPrime => (Some(s.a_prime), Some(s.b_prime)),
            ChTerm::A => (Some(s.a), None),
            ChTerm::BPrime => (None, Some(s.b_prime)),
        }
    }

    /// Up-spin event of the term, e.g. `A ∧ B′`.
    fn event(self, s: &ChSettings) -> EventQuery {
        let (l, r) = self.directions(s);
        let q = l.map_or(EventQuery::all(), |i| EventQuery::all().left(i, Spin::Up));
        match r {
            Some(j) => q.right(j, Spin::Up),
            None => q,
        }
    }

    /// Selection of the observed sub-ensemble: `[A]∧[B]` for pairs, `[A]`
    /// or `[B′]` alone for singles.
    fn selection(self, s: &ChSettings) -> EventQuery {
        let (l, r) = self.directions(s);
        let q = l.map_or(EventQuery::all(), |i| EventQuery::all().shows_left(i));
        match r {
            Some(j) => q.shows_right(j),
            None => q,
        }
    }
}

impl fmt::Display for ChTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChTerm::AB => "p(A&B)",
            ChTerm::ABPrime => "p(A&B')",
            ChTerm::APrimeB => "p(A'&B)",
            ChTerm::APrimeBPrime => "p(A'&B')",
            ChTerm::A => "p(A)",
            ChTerm::BPrime => "p(B')",
        })
    }
}

/// Terms on the emitted ensemble, unconditioned.
pub fn full_terms(model: &PrismModel, settings: &ChSettings) -> Result<[Rational; 6]> {
    let v = ChTerm::ALL.map(|t| model.event_measure(&t.event(settings)));
    collect(v)
}

/// Terms on the selected ensemble.
pub fn selected_terms(model: &PrismModel, settings: &ChSettings) -> Result<[Rational; 6]> {
    let v = ChTerm::ALL.map(|t| model.conditional_probability(&t.event(settings), &t.selection(settings)));
    collect(v)
}

fn collect(v: [Result<Rational>; 6]) -> Result<[Rational; 6]> {
    let [a, b, c, d, e, f] = v;
    Ok([a?, b?, c?, d?, e?, f?])
}

pub fn ch_full(model: &PrismModel, settings: &ChSettings) -> Result<Rational> {
    Ok(ch_expression_exact(&full_terms(model, settings)?))
}

pub fn ch_selected(model: &PrismModel, settings: &ChSettings) -> Result<Rational> {
    Ok(ch_expression_exact(&selected_terms(model, settings)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermGap {
    pub term: ChTerm,
    pub selected: Rational,
    pub full: Rational,
    pub gap: Rational,
}

/// `|p_selected − p_full|` per CH term; all zero iff the enhancement
/// hypothesis holds exactly for this model and choice of directions.
pub fn enhancement_gap(model: &PrismModel, settings: &ChSettings) -> Result<Vec<TermGap>> {
    let selected = selected_terms(model, settings)?;
    let full = full_terms(model, settings)?;
    Ok(ChTerm::ALL
        .iter()
        .zip(selected.into_iter().zip(full))
        .map(|(&term, (selected, full))| {
            let gap = (&selected - &full).abs();
            TermGap { term, selected, full, gap }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_2x2_model;
    use crate::geometry::ExperimentGeometry;
    use crate::model::{Block, ResponseFunction};
    use crate::rational::{int, ratio};
    use num_traits::Zero;
    use proptest::prelude::*;

    #[test]
    fn expression_values() {
        // three pair terms of 3/8, one of 0, two singles of 1/2
        let x = ChInput::from_slice(&[0.375, 0.375, 0.0, 0.375, 0.5, 0.5]).unwrap();
        assert_eq!(ch_expression(&x), 0.125);
        assert_eq!(ch_expression(&ChInput::from_slice(&[0.0; 6]).unwrap()), 0.0);
        let low = ChInput::from_slice(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(ch_expression(&low), -1.0);
        assert_eq!(classify(0.125), ChBound::AboveUpper);
        assert_eq!(classify(-1.0), ChBound::Within);
        assert_eq!(classify(-1.5), ChBound::BelowLower);
        assert!(ChInput::from_slice(&[0.0; 5]).is_none());
    }

    #[test]
    fn canonical_selected_and_full() {
        let m = canonical_2x2_model();
        let s = ChSettings::default();
        assert_eq!(ch_selected(&m, &s).unwrap(), ratio(1, 8));
        assert_eq!(ch_full(&m, &s).unwrap(), ratio(-3, 16));
    }

    #[test]
    fn canonical_swapped_settings() {
        // a↔a′, b↔b′: (a,b)=3/8, (a,b′)=0, (a′,b)=3/8, (a′,b′)=3/8,
        // singles 1/2 each: 3/8 + 0 − 3/8 + 3/8 − 1/2 − 1/2 = −5/8
        let m = canonical_2x2_model();
        let s = ChSettings { a: 1, a_prime: 0, b: 1, b_prime: 0 };
        assert_eq!(ch_selected(&m, &s).unwrap(), ratio(-5, 8));
    }

    #[test]
    fn canonical_gaps() {
        let gaps = enhancement_gap(&canonical_2x2_model(), &ChSettings::default()).unwrap();
        assert_eq!(gaps[0].gap, ratio(3, 16));
        assert_eq!(gaps[1].gap, ratio(3, 16));
        assert_eq!(gaps[2].gap, int(0));
        assert_eq!(gaps[3].gap, ratio(3, 16));
        assert_eq!(gaps[4].gap, ratio(1, 8));
        assert_eq!(gaps[5].gap, ratio(1, 8));
    }

    #[test]
    fn point_mass_all_up() {
        let g = ExperimentGeometry::two_by_two();
        let m = PrismModel::new(g, vec![Block::new(int(1), ResponseFunction::from_codes("UU", "UU").unwrap())])
            .unwrap();
        assert_eq!(ch_full(&m, &ChSettings::default()).unwrap(), int(0));
        assert_eq!(ch_selected(&m, &ChSettings::default()).unwrap(), int(0));
    }

    fn arb_model(no_show: bool) -> impl Strategy<Value = PrismModel> {
        let outcome = if no_show { 0u8..3 } else { 0u8..2 };
        let code = move || outcome.clone().prop_map(|k| ['U', 'D', '-'][k as usize]);
        let block = (1i64..20, proptest::collection::vec(code(), 4));
        proptest::collection::vec(block, 1..10).prop_map(|blocks| {
            let total: i64 = blocks.iter().map(|b| b.0).sum();
            let blocks = blocks
                .into_iter()
                .map(|(w, c)| {
                    let l: String = c[..2].iter().collect();
                    let r: String = c[2..].iter().collect();
                    Block::new(ratio(w, total), ResponseFunction::from_codes(&l, &r).unwrap())
                })
                .collect();
            PrismModel::new(ExperimentGeometry::two_by_two(), blocks).unwrap()
        })
    }

    fn arb_settings() -> impl Strategy<Value = ChSettings> {
        (0usize..2, 0usize..2, 0usize..2, 0usize..2).prop_map(|(a, a_prime, b, b_prime)| ChSettings {
            a,
            a_prime,
            b,
            b_prime,
        })
    }

    proptest! {
        #[test]
        fn full_ch_is_bounded(m in arb_model(true), s in arb_settings()) {
            let v = ch_full(&m, &s).unwrap();
            prop_assert!(v >= int(-1) && v <= int(0), "{}", v);
        }

        #[test]
        fn no_show_free_models_have_no_gap(m in arb_model(false), s in arb_settings()) {
            let gaps = enhancement_gap(&m, &s).unwrap();
            prop_assert!(gaps.iter().all(|g| g.gap.is_zero()));
            prop_assert_eq!(ch_selected(&m, &s).unwrap(), ch_full(&m, &s).unwrap());
        }
    }
}
