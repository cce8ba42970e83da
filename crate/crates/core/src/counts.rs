//! Event counts per setting cell and the relative frequencies estimated from
//! them.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::bell::{ChSettings, ChTerm};
use crate::error::{Error, Result};
use crate::geometry::Wing;
use crate::model::Spin;

/// Index into `[UU, UD, DU, DD]` arrays.
pub fn joint_index(left: Spin, right: Spin) -> usize {
    match (left, right) {
        (Spin::Up, Spin::Up) => 0,
        (Spin::Up, Spin::Down) => 1,
        (Spin::Down, Spin::Up) => 2,
        (Spin::Down, Spin::Down) => 3,
    }
}

/// Prism-level counts over every emitted pair of a cell, before detector
/// losses. Only a simulator knows these.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleCounts {
    /// Response outcome pairs `[UU, UD, DU, DD]`; no-show responses excluded.
    pub joint: [u64; 4],
    pub left_up: u64,
    pub right_up: u64,
}

impl AddAssign<&EnsembleCounts> for EnsembleCounts {
    fn add_assign(&mut self, rhs: &EnsembleCounts) {
        for (a, b) in self.joint.iter_mut().zip(rhs.joint) {
            *a += b;
        }
        self.left_up += rhs.left_up;
        self.right_up += rhs.right_up;
    }
}

/// Counts for one (left setting, right setting) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub left: usize,
    pub right: usize,
    /// Emitted pairs, when known.
    pub emitted: Option<u64>,
    pub show_left: u64,
    pub show_right: u64,
    pub double_show: u64,
    /// Detected outcome pairs on double-show, `[UU, UD, DU, DD]`.
    pub joint: [u64; 4],
    pub left_up: u64,
    pub right_up: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleCounts>,
}

impl CellCounts {
    pub fn empty(left: usize, right: usize, tracks_emission: bool) -> Self {
        CellCounts {
            left,
            right,
            emitted: tracks_emission.then_some(0),
            show_left: 0,
            show_right: 0,
            double_show: 0,
            joint: [0; 4],
            left_up: 0,
            right_up: 0,
            ensemble: tracks_emission.then(EnsembleCounts::default),
        }
    }

    pub fn shows(&self, wing: Wing) -> u64 {
        match wing {
            Wing::Left => self.show_left,
            Wing::Right => self.show_right,
        }
    }

    pub fn ups(&self, wing: Wing) -> u64 {
        match wing {
            Wing::Left => self.left_up,
            Wing::Right => self.right_up,
        }
    }

    /// `double_show ≤ min(show_left, show_right) ≤ emitted`, joint counts
    /// summing to `double_show`, ups bounded by shows.
    pub fn is_consistent(&self) -> bool {
        let min_show = self.show_left.min(self.show_right);
        let emitted_ok = self.emitted.is_none_or(|e| self.show_left.max(self.show_right) <= e);
        let ensemble_ok = match (&self.ensemble, self.emitted) {
            (Some(ens), Some(e)) => ens.joint.iter().sum::<u64>() <= e && ens.left_up <= e && ens.right_up <= e,
            (Some(_), None) => false,
            (None, _) => true,
        };
        self.double_show <= min_show
            && emitted_ok
            && ensemble_ok
            && self.joint.iter().sum::<u64>() == self.double_show
            && self.left_up <= self.show_left
            && self.right_up <= self.show_right
    }

    fn merge(&mut self, other: &CellCounts) {
        self.emitted = match (self.emitted, other.emitted) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        self.show_left += other.show_left;
        self.show_right += other.show_right;
        self.double_show += other.double_show;
        for (a, b) in self.joint.iter_mut().zip(other.joint) {
            *a += b;
        }
        self.left_up += other.left_up;
        self.right_up += other.right_up;
        self.ensemble = match (self.ensemble.take(), &other.ensemble) {
            (Some(mut a), Some(b)) => {
                a += b;
                Some(a)
            }
            _ => None,
        };
    }
}

/// Counts for every setting cell that was used.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub cells: Vec<CellCounts>,
}

impl CountTable {
    pub fn from_cells(cells: impl IntoIterator<Item = CellCounts>) -> Self {
        let mut map: BTreeMap<(usize, usize), CellCounts> = BTreeMap::new();
        for c in cells {
            match map.get_mut(&(c.left, c.right)) {
                Some(existing) => existing.merge(&c),
                None => {
                    map.insert((c.left, c.right), c);
                }
            }
        }
        CountTable { cells: map.into_values().collect() }
    }

    pub fn cell(&self, left: usize, right: usize) -> Option<&CellCounts> {
        self.cells.iter().find(|c| c.left == left && c.right == right)
    }

    /// Cell-wise sum; associative and commutative.
    pub fn merged(&self, other: &CountTable) -> CountTable {
        CountTable::from_cells(self.cells.iter().chain(&other.cells).cloned())
    }

    pub fn is_consistent(&self) -> bool {
        self.cells.iter().all(CellCounts::is_consistent)
    }

    pub fn total_emitted(&self) -> Option<u64> {
        self.cells.iter().map(|c| c.emitted).sum()
    }

    fn indices(&self, wing: Wing) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .cells
            .iter()
            .map(|c| match wing {
                Wing::Left => c.left,
                Wing::Right => c.right,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn cells_with(&self, wing: Wing, index: usize) -> impl Iterator<Item = &CellCounts> {
        self.cells.iter().filter(move |c| match wing {
            Wing::Left => c.left == index,
            Wing::Right => c.right == index,
        })
    }
}

/// A relative frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn binomial(successes: u64, trials: u64) -> Result<Estimate> {
        if trials == 0 {
            return Err(Error::EmptyCell("zero denominator".into()));
        }
        let p = successes as f64 / trials as f64;
        Ok(Estimate { value: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials })
    }

    /// Number of standard errors between the estimate and `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }

    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        self.z_score(target) <= k
    }
}

/// `[UU, UD, DU, DD]` frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEstimates(pub [Estimate; 4]);

impl JointEstimates {
    pub fn get(&self, left: Spin, right: Spin) -> &Estimate {
        &self.0[joint_index(left, right)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProbabilities {
    pub left: usize,
    pub right: usize,
    /// Conditioned on double show.
    pub selected: JointEstimates,
    /// Over every emitted pair, when the ensemble is known.
    pub full: Option<JointEstimates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleProbabilities {
    pub wing: Wing,
    pub index: usize,
    /// `p(Up | shows)`.
    pub selected_up: Estimate,
    /// `p(Up)` over every emitted particle, when known.
    pub full_up: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub cells: Vec<CellProbabilities>,
    pub singles: Vec<SingleProbabilities>,
}

impl ProbabilityTable {
    pub fn cell(&self, left: usize, right: usize) -> Option<&CellProbabilities> {
        self.cells.iter().find(|c| c.left == left && c.right == right)
    }

    pub fn single(&self, wing: Wing, index: usize) -> Option<&SingleProbabilities> {
        self.singles.iter().find(|s| s.wing == wing && s.index == index)
    }

    /// Estimate of one CH term on the selected or on the emitted ensemble.
    pub fn term(&self, term: ChTerm, settings: &ChSettings, ensemble: Ensemble) -> Result<Estimate> {
        let missing = || Error::EmptyCell(format!("no data for {term}"));
        match term.directions(settings) {
            (Some(i), Some(j)) => {
                let cell = self.cell(i, j).ok_or_else(missing)?;
                let joint = match ensemble {
                    Ensemble::Selected => &cell.selected,
                    Ensemble::Full => cell.full.as_ref().ok_or_else(missing)?,
                };
                Ok(*joint.get(Spin::Up, Spin::Up))
            }
            (Some(i), None) | (None, Some(i)) => {
                let wing = if term == ChTerm::BPrime { Wing::Right } else { Wing::Left };
                let single = self.single(wing, i).ok_or_else(missing)?;
                match ensemble {
                    Ensemble::Selected => Ok(single.selected_up),
                    Ensemble::Full => single.full_up.ok_or_else(missing),
                }
            }
            (None, None) => unreachable!("every CH term has a direction"),
        }
    }

    /// CH estimate with the six standard errors added in quadrature.
    pub fn ch_estimate(&self, settings: &ChSettings, ensemble: Ensemble) -> Result<(f64, f64)> {
        let mut value = 0.0;
        let mut var = 0.0;
        for t in ChTerm::ALL {
            let e = self.term(t, settings, ensemble)?;
            value += f64::from(t.sign()) * e.value;
            var += e.stderr * e.stderr;
        }
        Ok((value, var.sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Selected,
    Full,
}

fn joint_estimates(counts: &[u64; 4], trials: u64) -> Result<JointEstimates> {
    let e = |k: usize| Estimate::binomial(counts[k], trials);
    Ok(JointEstimates([e(0)?, e(1)?, e(2)?, e(3)?]))
}

/// Selected-ensemble and, when emissions are known, full-ensemble relative
/// frequencies with binomial standard errors.
pub fn estimate_probabilities(counts: &CountTable) -> Result<ProbabilityTable> {
    if counts.cells.is_empty() {
        return Err(Error::EmptyCell("count table has no cells".into()));
    }
    let cells = counts
        .cells
        .iter()
        .map(|c| {
            let cell_err = |what: &str| Error::EmptyCell(format!("cell ({}, {}): zero {what}", c.left, c.right));
            let selected = joint_estimates(&c.joint, c.double_show).map_err(|_| cell_err("double-show count"))?;
            let full = match (&c.ensemble, c.emitted) {
                (Some(ens), Some(n)) => Some(joint_estimates(&ens.joint, n).map_err(|_| cell_err("emitted count"))?),
                _ => None,
            };
            Ok(CellProbabilities { left: c.left, right: c.right, selected, full })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut singles = Vec::new();
    for wing in [Wing::Left, Wing::Right] {
        for index in counts.indices(wing) {
            let mut shows = 0;
            let mut ups = 0;
            let mut emitted = Some(0u64);
            let mut ens_ups = Some(0u64);
            for c in counts.cells_with(wing, index) {
                shows += c.shows(wing);
                ups += c.ups(wing);
                emitted = emitted.zip(c.emitted).map(|(a, b)| a + b);
                let cell_ens_up = c.ensemble.as_ref().map(|e| match wing {
                    Wing::Left => e.left_up,
                    Wing::Right => e.right_up,
                });
                ens_ups = ens_ups.zip(cell_ens_up).map(|(a, b)| a + b);
            }
            let selected_up = Estimate::binomial(ups, shows)
                .map_err(|_| Error::EmptyCell(format!("{wing} direction {index}: zero show count")))?;
            let full_up = match (ens_ups, emitted) {
                (Some(u), Some(n)) => Some(Estimate::binomial(u, n)?),
                _ => None,
            };
            singles.push(SingleProbabilities { wing, index, selected_up, full_up });
        }
    }
    Ok(ProbabilityTable { cells, singles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(double_show: u64, uu: u64) -> CellCounts {
        CellCounts {
            left: 0,
            right: 0,
            emitted: None,
            show_left: double_show,
            show_right: double_show,
            double_show,
            joint: [uu, double_show - uu, 0, 0],
            left_up: double_show,
            right_up: uu,
            ensemble: None,
        }
    }

    #[test]
    fn binomial_estimate() {
        let t = estimate_probabilities(&CountTable::from_cells([cell(1600, 600)])).unwrap();
        let e = t.cell(0, 0).unwrap().selected.get(Spin::Up, Spin::Up);
        assert_eq!(e.value, 0.375);
        assert_eq!(e.stderr, (0.375f64 * 0.625 / 1600.0).sqrt());
        assert!(t.cell(0, 0).unwrap().full.is_none());
    }

    #[test]
    fn zero_double_show_is_empty_cell() {
        let t = CountTable::from_cells([cell(0, 0)]);
        assert!(matches!(estimate_probabilities(&t), Err(Error::EmptyCell(_))));
        assert!(matches!(estimate_probabilities(&CountTable::default()), Err(Error::EmptyCell(_))));
    }

    #[test]
    fn merge_adds_cellwise() {
        let a = CountTable::from_cells([cell(10, 3)]);
        let b = CountTable::from_cells([cell(5, 5)]);
        let m = a.merged(&b);
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.cells[0].double_show, 15);
        assert_eq!(m.cells[0].joint, [8, 7, 0, 0]);
        assert!(m.is_consistent());
    }

    #[test]
    fn inconsistent_cell_detected() {
        let mut c = cell(10, 3);
        c.double_show = 11;
        assert!(!c.is_consistent());
    }

    #[test]
    fn z_score_of_exact_hit_is_zero() {
        let e = Estimate::binomial(0, 10).unwrap();
        assert_eq!(e.stderr, 0.0);
        assert!(e.within_sigmas(0.0, 3.0));
        assert!(!e.within_sigmas(0.1, 3.0));
    }
}
