//! Search for prism models that reproduce quantum targets with the largest
//! uniform efficiency ω.
//!
//! The unknowns are weights on deterministic strategy pairs. Every
//! constraint is linear because the quantum numbers enter as constants:
//!
//! - the weights sum to one,
//! - each direction shows with probability ω,
//! - each pair of directions shows jointly with probability σ(θ), one σ per
//!   distinct angle θ, and σ(θ) ≤ ω,
//! - conditional on showing, Up occurs with probability q_i, and each joint
//!   outcome with probability q_ij.

mod simplex;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::geometry::{AngleKey, ExperimentGeometry, Wing};
use crate::model::{Block, Outcome, PrismModel, ResponseFunction, Spin};
use crate::quantum::{target_table, QuantumTarget};
use crate::rational::{self, Rational};

use simplex::{Exact, Outcome as SimplexOutcome, StandardForm};

/// A deterministic assignment of outcomes to every direction in both wings.
pub type StrategyPair = ResponseFunction;

/// Largest strategy space that will be enumerated.
pub const STRATEGY_CAP: u128 = 1_000_000;

/// Instances with at most this many variables are solved exactly on `Auto`.
pub const EXACT_VARIABLE_LIMIT: usize = 2000;

/// Float solutions whose constraint residual exceeds this raise a warning.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Floating weights are rationalized with denominators up to this bound.
pub const MAX_WEIGHT_DENOMINATOR: u64 = 1_000_000_000;

/// Targets are snapped to short fractions within this distance.
const TARGET_SNAP: f64 = 1e-12;

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Direction angles (degrees) used by [`sweep`]; the first m entries of each
/// list form the m×m geometry, so geometries are nested as m grows.
pub const SWEEP_LEFT: [f64; 6] = [0.0, 120.0, 60.0, 180.0, 30.0, 150.0];
pub const SWEEP_RIGHT: [f64; 6] = [120.0, 240.0, 180.0, 300.0, 150.0, 270.0];

fn strategy_count(geometry: &ExperimentGeometry) -> Result<u128> {
    let n = (geometry.len(Wing::Left) + geometry.len(Wing::Right)) as u32;
    let count = 3u128.checked_pow(n).unwrap_or(u128::MAX);
    if count > STRATEGY_CAP {
        return Err(Error::SizeCap { count, cap: STRATEGY_CAP });
    }
    Ok(count)
}

/// All strategy pairs, lexicographic over left then right directions with
/// Up < Down < NoShow.
pub fn enumerate_strategies(geometry: &ExperimentGeometry) -> Result<Vec<StrategyPair>> {
    let count = strategy_count(geometry)? as usize;
    let (ml, mr) = (geometry.len(Wing::Left), geometry.len(Wing::Right));
    let n = ml + mr;
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; n];
    for _ in 0..count {
        let outcomes: Vec<Outcome> = digits.iter().map(|&d| Outcome::ALL[d]).collect();
        out.push(ResponseFunction::new(outcomes[..ml].to_vec(), outcomes[ml..].to_vec()));
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < 3 {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// How ω and σ enter the problem.
#[derive(Debug, Clone, PartialEq)]
pub enum LpMode {
    /// ω and every σ are free; maximize ω.
    MaximizeOmega,
    /// Pure feasibility. Values given here are fixed; the rest stay free.
    Feasibility { omega: Option<Rational>, sigma: BTreeMap<AngleKey, Rational> },
}

impl LpMode {
    pub fn fixed(omega: Rational, sigma: BTreeMap<AngleKey, Rational>) -> Self {
        LpMode::Feasibility { omega: Some(omega), sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    Weight(usize),
    Omega,
    Sigma(AngleKey),
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Weight(k) => write!(f, "w{k}"),
            Variable::Omega => write!(f, "omega"),
            Variable::Sigma(a) => write!(f, "sigma({a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

/// `Σ coeffs·x (relation) rhs` over instance variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// Either a variable slot or a fixed value.
#[derive(Debug, Clone)]
enum Param {
    Var(usize),
    Fixed(Rational),
}

impl Param {
    fn add_to(&self, coeff: &Rational, row: &mut LinearConstraint) {
        if coeff.is_zero() {
            return;
        }
        match self {
            Param::Var(k) => row.coeffs.push((*k, coeff.clone())),
            Param::Fixed(v) => row.rhs -= coeff * v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpInstance {
    pub geometry: ExperimentGeometry,
    pub strategies: Vec<StrategyPair>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    /// Coefficients of the objective to maximize; empty for feasibility.
    pub objective: Vec<(usize, Rational)>,
    omega: Param,
    sigma: BTreeMap<AngleKey, Param>,
}

impl LpInstance {
    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn weight_count(&self) -> usize {
        self.strategies.len()
    }

    /// Distinct angles carrying a σ, free or fixed.
    pub fn angles(&self) -> Vec<AngleKey> {
        self.sigma.keys().copied().collect()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|(k, a)| rational::to_f64(a) * x[*k]).sum();
            let gap = lhs - rational::to_f64(&c.rhs);
            let violation = match c.relation {
                Relation::Eq => gap.abs(),
                Relation::Le => gap.max(0.0),
            };
            worst = worst.max(violation);
        }
        worst
    }
}

fn direction_label(wing: Wing, index: usize) -> String {
    format!("{}{}", wing.tag(), index)
}

/// Builds the linear program for `targets` on `geometry`.
pub fn build_lp(geometry: &ExperimentGeometry, targets: &QuantumTarget, mode: &LpMode) -> Result<LpInstance> {
    targets.check_matches(geometry)?;
    let strategies = enumerate_strategies(geometry)?;
    let (ml, mr) = (geometry.len(Wing::Left), geometry.len(Wing::Right));
    let angles = geometry.distinct_angles();

    let mut variables: Vec<Variable> = (0..strategies.len()).map(Variable::Weight).collect();
    let (fixed_omega, fixed_sigma) = match mode {
        LpMode::MaximizeOmega => (None, BTreeMap::new()),
        LpMode::Feasibility { omega, sigma } => (omega.clone(), sigma.clone()),
    };
    if let Some(extra) = fixed_sigma.keys().find(|k| !angles.contains(k)) {
        return Err(Error::Config(format!("no direction pair subtends {extra}")));
    }
    let unit = |v: &Rational, what: &str| {
        if v.is_negative() || v > &Rational::one() {
            Err(Error::Config(format!("{what} = {} is outside [0, 1]", rational::format(v))))
        } else {
            Ok(())
        }
    };
    let omega = match fixed_omega {
        Some(v) => {
            unit(&v, "omega")?;
            Param::Fixed(v)
        }
        None => {
            variables.push(Variable::Omega);
            Param::Var(variables.len() - 1)
        }
    };
    let mut sigma = BTreeMap::new();
    for &angle in &angles {
        let p = match fixed_sigma.get(&angle) {
            Some(v) => {
                unit(v, &format!("sigma({angle})"))?;
                Param::Fixed(v.clone())
            }
            None => {
                variables.push(Variable::Sigma(angle));
                Param::Var(variables.len() - 1)
            }
        };
        sigma.insert(angle, p);
    }

    let row = |name: String, relation: Relation| LinearConstraint { name, coeffs: Vec::new(), relation, rhs: Rational::zero() };
    let mut normalization = row("normalization".into(), Relation::Eq);
    normalization.rhs = Rational::one();
    let mut show: [Vec<LinearConstraint>; 2] = [
        (0..ml).map(|i| row(format!("show {}", direction_label(Wing::Left, i)), Relation::Eq)).collect(),
        (0..mr).map(|j| row(format!("show {}", direction_label(Wing::Right, j)), Relation::Eq)).collect(),
    ];
    let mut up: [Vec<LinearConstraint>; 2] = [
        (0..ml).map(|i| row(format!("up {}", direction_label(Wing::Left, i)), Relation::Eq)).collect(),
        (0..mr).map(|j| row(format!("up {}", direction_label(Wing::Right, j)), Relation::Eq)).collect(),
    ];
    let pair_name = |what: &str, i: usize, j: usize| format!("{what} L{i},R{j}");
    let mut double: Vec<LinearConstraint> = Vec::with_capacity(ml * mr);
    // joint rows for UU, UD, DU; DD follows from the double-show row
    let mut joint: Vec<[LinearConstraint; 3]> = Vec::with_capacity(ml * mr);
    for i in 0..ml {
        for j in 0..mr {
            double.push(row(pair_name("double-show", i, j), Relation::Eq));
            joint.push([
                row(pair_name("UU", i, j), Relation::Eq),
                row(pair_name("UD", i, j), Relation::Eq),
                row(pair_name("DU", i, j), Relation::Eq),
            ]);
        }
    }

    let one = Rational::one();
    for (k, s) in strategies.iter().enumerate() {
        normalization.coeffs.push((k, one.clone()));
        for (w, wing) in [Wing::Left, Wing::Right].into_iter().enumerate() {
            for (i, o) in s.wing(wing).iter().enumerate() {
                if o.shows() {
                    show[w][i].coeffs.push((k, one.clone()));
                }
                if *o == Outcome::Up {
                    up[w][i].coeffs.push((k, one.clone()));
                }
            }
        }
        for i in 0..ml {
            let Some(a) = s.left[i].spin() else { continue };
            for j in 0..mr {
                let Some(b) = s.right[j].spin() else { continue };
                let cell = i * mr + j;
                double[cell].coeffs.push((k, one.clone()));
                let slot = match (a, b) {
                    (Spin::Up, Spin::Up) => 0,
                    (Spin::Up, Spin::Down) => 1,
                    (Spin::Down, Spin::Up) => 2,
                    (Spin::Down, Spin::Down) => continue,
                };
                joint[cell][slot].coeffs.push((k, one.clone()));
            }
        }
    }

    let minus = |q: f64| -rational::snap(q, TARGET_SNAP);
    for (w, wing) in [Wing::Left, Wing::Right].into_iter().enumerate() {
        for (i, q) in targets.singles(wing).iter().enumerate() {
            omega.add_to(&-&one, &mut show[w][i]);
            omega.add_to(&minus(*q), &mut up[w][i]);
        }
    }
    for i in 0..ml {
        for j in 0..mr {
            let cell = i * mr + j;
            let angle = AngleKey::from_radians(geometry.angle_between(i, j)?);
            let s = &sigma[&angle];
            s.add_to(&-&one, &mut double[cell]);
            let t = &targets.pairs[i][j];
            for (slot, q) in [t.up_up, t.up_down, t.down_up].into_iter().enumerate() {
                s.add_to(&minus(q), &mut joint[cell][slot]);
            }
        }
    }
    let mut bounds = Vec::new();
    for (angle, s) in &sigma {
        let mut c = row(format!("sigma({angle}) <= omega"), Relation::Le);
        s.add_to(&one, &mut c);
        omega.add_to(&-&one, &mut c);
        bounds.push(c);
    }

    let [show_left, show_right] = show;
    let [up_left, up_right] = up;
    let mut constraints = vec![normalization];
    constraints.extend(show_left);
    constraints.extend(show_right);
    constraints.extend(double);
    constraints.extend(up_left);
    constraints.extend(up_right);
    constraints.extend(joint.into_iter().flatten());
    constraints.extend(bounds);

    let objective = match (&mode, &omega) {
        (LpMode::MaximizeOmega, Param::Var(k)) => vec![(*k, one)],
        _ => Vec::new(),
    };
    Ok(LpInstance { geometry: geometry.clone(), strategies, variables, constraints, objective, omega, sigma })
}

/// Arithmetic used by the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Exact up to [`EXACT_VARIABLE_LIMIT`] variables, float above.
    #[default]
    Auto,
    Exact,
    Float,
}

/// A solver value: exact on the rational path, `f64` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(Rational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => rational::to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Number::Exact(r) => Some(r),
            Number::Float(_) => None,
        }
    }
}

impl From<Rational> for Number {
    fn from(r: Rational) -> Self {
        Number::Exact(r)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => f.write_str(&rational::format(r)),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// One weight per strategy, in enumeration order.
    pub weights: Vec<Number>,
    pub omega: Number,
    pub sigma: BTreeMap<AngleKey, Number>,
    pub exact: bool,
    /// Largest constraint violation of the returned point.
    pub residual: f64,
    pub pivots: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Feasible(LpSolution),
    Infeasible,
}

impl LpResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpResult::Feasible(_))
    }

    pub fn solution(&self) -> Option<&LpSolution> {
        match self {
            LpResult::Feasible(s) => Some(s),
            LpResult::Infeasible => None,
        }
    }
}

fn standard_form(lp: &LpInstance) -> StandardForm {
    let n = lp.variables.len();
    let mut columns = n;
    let mut rows = Vec::with_capacity(lp.constraints.len());
    let mut rhs = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let mut coeffs = c.coeffs.clone();
        if c.relation == Relation::Le {
            coeffs.push((columns, Rational::one()));
            columns += 1;
        }
        rows.push(coeffs);
        rhs.push(c.rhs.clone());
    }
    let cost = lp.objective.iter().map(|(k, v)| (*k, -v)).collect();
    StandardForm { columns, rows, rhs, cost }
}

/// Solves `lp`, returning a vertex of the feasible region (optimal when the
/// instance has an objective).
pub fn solve(lp: &LpInstance, arithmetic: Arithmetic) -> Result<LpResult> {
    let exact = match arithmetic {
        Arithmetic::Exact => true,
        Arithmetic::Float => false,
        Arithmetic::Auto => lp.variable_count() <= EXACT_VARIABLE_LIMIT,
    };
    let form = standard_form(lp);
    let n = lp.variable_count();
    let (values, pivots): (Vec<Number>, usize) = if exact {
        match simplex::solve::<Exact>(&form) {
            SimplexOutcome::Optimal { x, pivots } => {
                (x.into_iter().take(n).map(|v| Number::Exact(v.to_rational())).collect(), pivots)
            }
            SimplexOutcome::Infeasible => return Ok(LpResult::Infeasible),
            SimplexOutcome::Unbounded => return Err(Error::domain("linear program is unbounded")),
        }
    } else {
        match simplex::solve::<f64>(&form) {
            SimplexOutcome::Optimal { x, pivots } => (x.into_iter().take(n).map(|v| Number::Float(v.max(0.0))).collect(), pivots),
            SimplexOutcome::Infeasible => return Ok(LpResult::Infeasible),
            SimplexOutcome::Unbounded => return Err(Error::domain("linear program is unbounded")),
        }
    };

    let floats: Vec<f64> = values.iter().map(Number::to_f64).collect();
    let residual = lp.residual(&floats);
    let mut warnings = Vec::new();
    if !exact && residual > RESIDUAL_TOLERANCE {
        warnings.push(format!("numerical instability: constraint residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:e}"));
    }
    let param = |p: &Param| match p {
        Param::Var(k) => values[*k].clone(),
        Param::Fixed(v) => Number::Exact(v.clone()),
    };
    let omega = param(&lp.omega);
    let sigma = lp.sigma.iter().map(|(a, p)| (*a, param(p))).collect();
    let weights = values[..lp.weight_count()].to_vec();
    Ok(LpResult::Feasible(LpSolution { weights, omega, sigma, exact, residual, pivots, warnings }))
}

/// Turns a weight vector into a prism model with one block per positively
/// weighted strategy.
pub fn weights_to_model(weights: &[Number], strategies: &[StrategyPair], geometry: &ExperimentGeometry) -> Result<PrismModel> {
    if weights.len() != strategies.len() {
        return Err(Error::Config(format!("{} weights for {} strategies", weights.len(), strategies.len())));
    }
    for (index, w) in weights.iter().enumerate() {
        let negative = match w {
            Number::Exact(r) => r.is_negative(),
            Number::Float(x) => *x < -RESIDUAL_TOLERANCE || x.is_nan(),
        };
        if negative {
            return Err(Error::NegativeWeight { index, value: w.to_f64() });
        }
    }
    let all_exact = weights.iter().all(|w| w.as_exact().is_some());
    let measures: Vec<Rational> = if all_exact {
        let measures: Vec<Rational> = weights.iter().map(|w| w.as_exact().cloned().unwrap_or_default()).collect();
        let sum: Rational = measures.iter().sum();
        if !sum.is_one() {
            return Err(Error::Normalization { sum: rational::to_f64(&sum) });
        }
        measures
    } else {
        let sum: f64 = weights.iter().map(Number::to_f64).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization { sum });
        }
        let raw: Vec<Rational> = weights
            .iter()
            .map(|w| match w {
                Number::Exact(r) => r.clone(),
                Number::Float(x) => rational::rationalize(x.max(0.0), MAX_WEIGHT_DENOMINATOR),
            })
            .collect();
        let total: Rational = raw.iter().sum();
        if total.is_zero() {
            return Err(Error::Normalization { sum });
        }
        raw.into_iter().map(|r| r / &total).collect()
    };
    let blocks = measures
        .into_iter()
        .zip(strategies)
        .filter(|(m, _)| m.is_positive())
        .map(|(m, s)| Block::new(m, s.clone()))
        .collect();
    PrismModel::new(geometry.clone(), blocks)
}

/// Result of a free-mode search.
#[derive(Debug, Clone)]
pub struct OmegaSearch {
    pub omega: Number,
    pub sigma: BTreeMap<AngleKey, Number>,
    pub model: PrismModel,
    pub solution: LpSolution,
}

pub fn maximize_omega(geometry: &ExperimentGeometry, targets: &QuantumTarget) -> Result<OmegaSearch> {
    maximize_omega_with(geometry, targets, Arithmetic::Auto)
}

pub fn maximize_omega_with(geometry: &ExperimentGeometry, targets: &QuantumTarget, arithmetic: Arithmetic) -> Result<OmegaSearch> {
    let lp = build_lp(geometry, targets, &LpMode::MaximizeOmega)?;
    // the all-NoShow strategy at ω = 0 is always feasible
    let LpResult::Feasible(solution) = solve(&lp, arithmetic)? else {
        return Err(Error::domain("free-mode program reported infeasible"));
    };
    let model = weights_to_model(&solution.weights, &lp.strategies, geometry)?;
    Ok(OmegaSearch { omega: solution.omega.clone(), sigma: solution.sigma.clone(), model, solution })
}

/// The m×m geometry used by [`sweep`].
pub fn sweep_geometry(m: usize) -> Result<ExperimentGeometry> {
    if m == 0 || m > SWEEP_LEFT.len() {
        return Err(Error::Config(format!("sweep size {m} outside 1..={}", SWEEP_LEFT.len())));
    }
    ExperimentGeometry::from_degrees(&SWEEP_LEFT[..m], &SWEEP_RIGHT[..m])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m: usize,
    pub variables: usize,
    pub omega: Number,
    pub exact: bool,
}

/// ω* on nested m×m geometries for m = 1..=max_m, singlet targets.
pub fn sweep(max_m: usize, arithmetic: Arithmetic) -> Result<Vec<SweepPoint>> {
    (1..=max_m)
        .map(|m| {
            let geometry = sweep_geometry(m)?;
            let lp = build_lp(&geometry, &target_table(&geometry), &LpMode::MaximizeOmega)?;
            let LpResult::Feasible(solution) = solve(&lp, arithmetic)? else {
                return Err(Error::domain("free-mode program reported infeasible"));
            };
            Ok(SweepPoint { m, variables: lp.variable_count(), omega: solution.omega, exact: solution.exact })
        })
        .collect()
}

/// CSV table `m,variables,omega,exact` for plotting.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("m,variables,omega,omega_exact\n");
    for p in points {
        let exact = p.omega.as_exact().map(rational::format).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", p.m, p.variables, p.omega.to_f64(), exact));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn reference() -> ExperimentGeometry {
        ExperimentGeometry::two_by_two()
    }

    fn aligned() -> ExperimentGeometry {
        ExperimentGeometry::from_degrees(&[0.0], &[0.0]).unwrap()
    }

    #[test]
    fn strategy_counts() {
        assert_eq!(enumerate_strategies(&aligned()).unwrap().len(), 9);
        assert_eq!(enumerate_strategies(&reference()).unwrap().len(), 81);
        let big = ExperimentGeometry::from_degrees(&[0.0; 7], &[0.0; 7]).unwrap();
        assert!(matches!(enumerate_strategies(&big), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn strategies_are_lexicographic() {
        let s = enumerate_strategies(&aligned()).unwrap();
        let codes: Vec<String> = s.iter().map(|r| r.to_string()).collect();
        assert_eq!(codes, ["U|U", "U|D", "U|-", "D|U", "D|D", "D|-", "-|U", "-|D", "-|-"]);
    }

    #[test]
    fn reference_geometry_variable_layout() {
        let g = reference();
        let lp = build_lp(&g, &target_table(&g), &LpMode::MaximizeOmega).unwrap();
        assert_eq!(lp.weight_count(), 81);
        assert_eq!(lp.variable_count(), 84);
        assert_eq!(lp.angles(), vec![AngleKey::from_degrees(0.0), AngleKey::from_degrees(120.0)]);
    }

    #[test]
    fn mismatched_targets_rejected() {
        let t = target_table(&aligned());
        assert!(matches!(build_lp(&reference(), &t, &LpMode::MaximizeOmega), Err(Error::TargetMismatch(_))));
    }

    #[test]
    fn aligned_pair_reaches_full_efficiency() {
        let g = aligned();
        let mode = LpMode::fixed(int(1), BTreeMap::new());
        let lp = build_lp(&g, &target_table(&g), &mode).unwrap();
        let LpResult::Feasible(sol) = solve(&lp, Arithmetic::Exact).unwrap() else { panic!() };
        assert_eq!(sol.sigma[&AngleKey::from_degrees(0.0)], Number::Exact(int(1)));
        let search = maximize_omega(&g, &target_table(&g)).unwrap();
        assert_eq!(search.omega, Number::Exact(int(1)));
    }

    #[test]
    fn reference_geometry_fixed_points() {
        let g = reference();
        let t = target_table(&g);
        let sigma: BTreeMap<_, _> =
            [(AngleKey::from_degrees(0.0), ratio(1, 2)), (AngleKey::from_degrees(120.0), ratio(1, 2))].into();
        let lp = build_lp(&g, &t, &LpMode::fixed(ratio(3, 4), sigma)).unwrap();
        assert!(solve(&lp, Arithmetic::Exact).unwrap().is_feasible());
        let lp = build_lp(&g, &t, &LpMode::fixed(int(1), BTreeMap::new())).unwrap();
        assert_eq!(solve(&lp, Arithmetic::Exact).unwrap(), LpResult::Infeasible);
        assert_eq!(solve(&lp, Arithmetic::Float).unwrap(), LpResult::Infeasible);
    }

    #[test]
    fn zero_efficiency_weights_only_no_show() {
        let g = reference();
        let lp = build_lp(&g, &target_table(&g), &LpMode::fixed(int(0), BTreeMap::new())).unwrap();
        let LpResult::Feasible(sol) = solve(&lp, Arithmetic::Exact).unwrap() else { panic!() };
        for (w, s) in sol.weights.iter().zip(&lp.strategies) {
            if w.to_f64() > 0.0 {
                assert!(s.left.iter().chain(&s.right).all(|o| !o.shows()));
            }
        }
    }

    #[test]
    fn weights_to_model_errors_and_two_block_model() {
        let g = aligned();
        let s = enumerate_strategies(&g).unwrap();
        let mut w = vec![Number::Exact(int(0)); 9];
        w[1] = Number::Exact(ratio(1, 2));
        w[3] = Number::Exact(ratio(1, 2));
        assert_eq!(weights_to_model(&w, &s, &g).unwrap().blocks().len(), 2);

        let mut short = vec![Number::Float(0.0); 9];
        short[1] = Number::Float(0.45);
        short[3] = Number::Float(0.45);
        assert!(matches!(weights_to_model(&short, &s, &g), Err(Error::Normalization { .. })));
        short[3] = Number::Float(-0.1);
        assert!(matches!(weights_to_model(&short, &s, &g), Err(Error::NegativeWeight { index: 3, .. })));
    }

    #[test]
    fn float_weights_are_rationalized() {
        let g = aligned();
        let s = enumerate_strategies(&g).unwrap();
        let mut w = vec![Number::Float(0.0); 9];
        w[1] = Number::Float(1.0 / 3.0);
        w[3] = Number::Float(2.0 / 3.0);
        let model = weights_to_model(&w, &s, &g).unwrap();
        assert_eq!(model.blocks()[0].measure, ratio(1, 3));
        assert_eq!(model.blocks()[1].measure, ratio(2, 3));
    }

    #[test]
    fn sweep_geometries_are_nested() {
        for m in 2..=SWEEP_LEFT.len() {
            let small = sweep_geometry(m - 1).unwrap();
            let big = sweep_geometry(m).unwrap();
            assert_eq!(&big.left_degrees()[..m - 1], small.left_degrees().as_slice());
            assert_eq!(&big.right_degrees()[..m - 1], small.right_degrees().as_slice());
        }
        assert_eq!(sweep_geometry(2).unwrap(), reference());
        assert!(sweep_geometry(0).is_err());
    }
}
