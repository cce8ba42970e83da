//! Dense two-phase simplex, generic over exact rationals and `f64`.

use std::cmp::Ordering;

use num_bigint::Sign;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::{self, Rational};

pub(crate) trait Scalar: Clone + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Ordering used by the ratio test; floats treat near-equal as equal.
    fn compare(&self, other: &Self) -> Ordering;
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn compare(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

/// Exact rational that stays on machine integers while entries are small and
/// falls back to big integers on overflow.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Exact {
    /// Reduced fraction with positive denominator.
    Small(i64, i64),
    Big(Rational),
}

impl Exact {
    fn from_i128(numer: i128, denom: i128) -> Self {
        let g = numer.gcd(&denom);
        let (mut n, mut d) = if g > 1 { (numer / g, denom / g) } else { (numer, denom) };
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Exact::Small(n, d),
            _ => Exact::Big(Rational::new(n.into(), d.into())),
        }
    }

    pub(crate) fn to_rational(&self) -> Rational {
        match self {
            Exact::Small(n, d) => Rational::new((*n).into(), (*d).into()),
            Exact::Big(r) => r.clone(),
        }
    }

    fn big(&self, other: &Self, op: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let r = op(&self.to_rational(), &other.to_rational());
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Exact::Small(n, d),
            _ => Exact::Big(r),
        }
    }

    fn numer_sign(&self) -> Ordering {
        match self {
            Exact::Small(n, _) => n.cmp(&0),
            Exact::Big(r) => r.numer().sign().cmp(&Sign::NoSign),
        }
    }
}

impl Scalar for Exact {
    fn zero() -> Self {
        Exact::Small(0, 1)
    }
    fn one() -> Self {
        Exact::Small(1, 1)
    }
    fn from_rational(r: &Rational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Exact::Small(n, d),
            _ => Exact::Big(r.clone()),
        }
    }
    fn is_zero(&self) -> bool {
        self.numer_sign() == Ordering::Equal
    }
    fn is_positive(&self) -> bool {
        self.numer_sign() == Ordering::Greater
    }
    fn is_negative(&self) -> bool {
        self.numer_sign() == Ordering::Less
    }
    fn sub(&self, other: &Self) -> Self {
        match (self, other) {
            (Exact::Small(a, b), Exact::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Exact::from_i128(a - c, b)
                } else {
                    Exact::from_i128(a * d - c * b, b * d)
                }
            }
            _ => self.big(other, |x, y| x - y),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Exact::Small(a, b), Exact::Small(c, d)) => {
                Exact::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => self.big(other, |x, y| x * y),
        }
    }
    fn div(&self, other: &Self) -> Self {
        match (self, other) {
            (Exact::Small(a, b), Exact::Small(c, d)) => {
                Exact::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128)
            }
            _ => self.big(other, |x, y| x / y),
        }
    }
    fn neg(&self) -> Self {
        match self {
            Exact::Small(n, d) if *n != i64::MIN => Exact::Small(-n, *d),
            _ => Exact::Big(-self.to_rational()),
        }
    }
    fn compare(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exact::Small(a, b), Exact::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}

/// Pivot and sign tolerance on the floating path.
pub(crate) const FLOAT_EPS: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn compare(&self, other: &Self) -> Ordering {
        let scale = 1.0f64.max(self.abs()).max(other.abs());
        if (self - other).abs() <= 1e-12 * scale {
            Ordering::Equal
        } else {
            self.partial_cmp(other).unwrap_or(Ordering::Equal)
        }
    }
}

/// `min cost·x` subject to `rows·x = rhs`, `x ≥ 0`.
pub(crate) struct StandardForm {
    pub columns: usize,
    pub rows: Vec<Vec<(usize, Rational)>>,
    pub rhs: Vec<Rational>,
    pub cost: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Outcome<S> {
    Optimal { x: Vec<S>, pivots: usize },
    Infeasible,
    Unbounded,
}

/// Degenerate pivots in a row before pricing falls back to Bland's rule.
const DEGENERATE_RUN_LIMIT: usize = 2000;

struct Tableau<S> {
    /// Each row holds the coefficients followed by the right-hand side.
    rows: Vec<Vec<S>>,
    /// Reduced costs followed by minus the objective value.
    objective: Vec<S>,
    basis: Vec<usize>,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.objective.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let p = self.rows[row][col].clone();
        let pivot_row: Vec<S> = self.rows[row].iter().map(|v| if v.is_zero() { S::zero() } else { v.div(&p) }).collect();
        let nonzero: Vec<usize> = (0..=width).filter(|&k| !pivot_row[k].is_zero()).collect();
        let eliminate = |target: &mut Vec<S>| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for &k in &nonzero {
                target[k] = target[k].sub(&factor.mul(&pivot_row[k]));
            }
            target[col] = S::zero();
        };
        for (r, target) in self.rows.iter_mut().enumerate() {
            if r != row {
                eliminate(target);
            }
        }
        eliminate(&mut self.objective);
        self.rows[row] = pivot_row;
        self.rows[row][col] = S::one();
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Minimizes over columns `< limit`. Returns false if unbounded.
    ///
    /// Prices by most negative reduced cost, switching to Bland's rule
    /// (smallest index in, smallest basic index out) after a run of
    /// degenerate pivots so the method cannot cycle.
    fn optimize(&mut self, limit: usize) -> bool {
        let width = self.width();
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN_LIMIT;
            let entering = if bland {
                (0..limit).find(|&j| self.objective[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    let d = &self.objective[j];
                    if d.is_negative() && best.is_none_or(|b| d.compare(&self.objective[b]) == Ordering::Less) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = row[width].div(&row[col]);
                let better = match &best {
                    None => true,
                    Some((br, bv)) => match ratio.compare(bv) {
                        Ordering::Less => true,
                        Ordering::Equal if bland => self.basis[r] < self.basis[*br],
                        // larger pivots are kinder to floating point
                        Ordering::Equal => row[col].compare(&self.rows[*br][col]) == Ordering::Greater,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, col);
                }
                None => return false,
            }
        }
    }

    fn set_objective(&mut self, cost: &[S]) {
        let width = self.width();
        let mut objective: Vec<S> = cost.to_vec();
        objective.push(S::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for k in 0..=width {
                if !row[k].is_zero() {
                    objective[k] = objective[k].sub(&cb.mul(&row[k]));
                }
            }
        }
        self.objective = objective;
    }
}

pub(crate) fn solve<S: Scalar>(problem: &StandardForm) -> Outcome<S> {
    let n = problem.columns;
    let m = problem.rows.len();
    let width = n + m;

    // a column with a single positive entry can start in the basis of its
    // row, sparing that row an artificial
    let mut column_nonzeros = vec![0usize; n];
    for coeffs in &problem.rows {
        for (j, v) in coeffs {
            if !Zero::is_zero(v) {
                column_nonzeros[*j] += 1;
            }
        }
    }
    let mut used = vec![false; n];

    let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, (coeffs, b)) in problem.rows.iter().zip(&problem.rhs).enumerate() {
        let flip = Signed::is_negative(b);
        let mut row = vec![S::zero(); width + 1];
        for (j, v) in coeffs {
            let v = S::from_rational(v);
            row[*j] = if flip { v.neg() } else { v };
        }
        let b = S::from_rational(b);
        row[width] = if flip { b.neg() } else { b };
        let unit = coeffs.iter().map(|(j, _)| *j).find(|&j| column_nonzeros[j] == 1 && !used[j] && row[j].is_positive());
        match unit {
            Some(j) => {
                used[j] = true;
                let scale = row[j].clone();
                for v in row.iter_mut() {
                    if !v.is_zero() {
                        *v = v.div(&scale);
                    }
                }
                row[j] = S::one();
                basis.push(j);
            }
            None => {
                row[n + i] = S::one();
                basis.push(n + i);
            }
        }
        rows.push(row);
    }
    let mut tableau = Tableau { rows, objective: vec![S::zero(); width + 1], basis, pivots: 0 };

    // phase 1: minimize the sum of artificials, unless they already sit at 0
    let artificial_level = tableau
        .rows
        .iter()
        .zip(&tableau.basis)
        .filter(|(_, &b)| b >= n)
        .any(|(row, _)| !row[width].is_zero());
    if artificial_level {
        let mut phase1_cost = vec![S::zero(); width];
        for c in &mut phase1_cost[n..] {
            *c = S::one();
        }
        tableau.set_objective(&phase1_cost);
        if !tableau.optimize(width) {
            return Outcome::Unbounded;
        }
        if tableau.objective[width].neg().is_positive() {
            return Outcome::Infeasible;
        }
    }

    // drive artificials out of the basis; rows where that is impossible
    // are linear combinations of the others
    let mut redundant = Vec::new();
    for r in 0..m {
        if tableau.basis[r] < n {
            continue;
        }
        match (0..n).find(|&j| !tableau.rows[r][j].is_zero()) {
            Some(j) => tableau.pivot(r, j),
            None => redundant.push(r),
        }
    }
    for &r in redundant.iter().rev() {
        tableau.rows.remove(r);
        tableau.basis.remove(r);
    }
    for row in &mut tableau.rows {
        let b = row[width].clone();
        row.truncate(n);
        row.push(b);
    }

    let mut cost = vec![S::zero(); n];
    for (j, v) in &problem.cost {
        cost[*j] = S::from_rational(v);
    }
    tableau.objective = vec![S::zero(); n + 1];
    tableau.set_objective(&cost);
    if !tableau.optimize(n) {
        return Outcome::Unbounded;
    }

    let mut x = vec![S::zero(); n];
    for (row, &b) in tableau.rows.iter().zip(&tableau.basis) {
        x[b] = row[n].clone();
    }
    Outcome::Optimal { x, pivots: tableau.pivots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn row(v: &[i64]) -> Vec<(usize, Rational)> {
        v.iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j, int(c))).collect()
    }

    fn lp(rows: &[&[i64]], rhs: &[i64], cost: &[i64]) -> StandardForm {
        StandardForm {
            columns: cost.len(),
            rows: rows.iter().map(|r| row(r)).collect(),
            rhs: rhs.iter().map(|&b| int(b)).collect(),
            cost: row(cost),
        }
    }

    #[test]
    fn small_optimum_exact_and_float() {
        // max x + y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6 → x = 8/5, y = 6/5
        let p = lp(&[&[1, 2, 1, 0], &[3, 1, 0, 1]], &[4, 6], &[-1, -1, 0, 0]);
        let Outcome::Optimal { x, .. } = solve::<Exact>(&p) else { panic!() };
        assert_eq!(x[0].to_rational(), ratio(8, 5));
        assert_eq!(x[1].to_rational(), ratio(6, 5));
        let Outcome::Optimal { x, .. } = solve::<f64>(&p) else { panic!() };
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = 1 and x + y = 2
        let p = lp(&[&[1, 1], &[1, 1]], &[1, 2], &[0, 0]);
        assert_eq!(solve::<Exact>(&p), Outcome::Infeasible);
        // max x with x − y = 0
        let p = lp(&[&[1, -1]], &[0], &[-1, 0]);
        assert_eq!(solve::<Exact>(&p), Outcome::Unbounded);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // x + y = 1 stated three times, once with negated signs
        let p = lp(&[&[1, 1], &[1, 1], &[-1, -1]], &[1, 1, -1], &[1, 2]);
        let Outcome::Optimal { x, .. } = solve::<Exact>(&p) else { panic!() };
        assert_eq!(x, vec![Exact::one(), Exact::zero()]);
    }

    #[test]
    fn small_rationals_overflow_into_big_ones() {
        let big = Exact::Small(i64::MAX, 1);
        let sum = big.sub(&Exact::Small(-1, 1));
        assert_eq!(sum.to_rational(), Rational::from_integer(i64::MAX.into()) + int(1));
        assert!(matches!(sum, Exact::Big(_)));
        assert_eq!(sum.sub(&Exact::one()), Exact::Small(i64::MAX, 1));
        assert_eq!(Exact::Small(1, 3).compare(&Exact::Small(2, 6)), Ordering::Equal);
        assert_eq!(Exact::Small(1, 3).mul(&Exact::Small(3, 1)), Exact::one());
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, known to cycle under the textbook largest-coefficient rule
        let p = StandardForm {
            columns: 7,
            rows: vec![
                vec![(0, ratio(1, 4)), (1, int(-8)), (2, int(-1)), (3, int(9)), (4, int(1))],
                vec![(0, ratio(1, 2)), (1, int(-12)), (2, ratio(-1, 2)), (3, int(3)), (5, int(1))],
                vec![(2, int(1)), (6, int(1))],
            ],
            rhs: vec![int(0), int(0), int(1)],
            cost: vec![(0, ratio(-3, 4)), (1, int(20)), (2, ratio(-1, 2)), (3, int(6))],
        };
        let Outcome::Optimal { x, .. } = solve::<Exact>(&p) else { panic!() };
        let value: Rational = [ratio(-3, 4), int(20), ratio(-1, 2), int(6)].iter().zip(&x).map(|(c, v)| c * v.to_rational()).sum();
        assert_eq!(value, ratio(-5, 4));
    }
}
