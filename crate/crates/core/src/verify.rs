//! Exact checks of a 2×2 prism model against the reference values of the
//! canonical model.

use serde::Serialize;

use crate::bell::{ch_full, ch_selected, ChSettings};
use crate::canonical::lambda_example;
use crate::error::Result;
use crate::geometry::Wing;
use crate::model::{EventQuery, PrismModel, Spin};
use crate::rates::{exact_rates, RateKey};
use crate::rational::{self, ratio, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Fixed-width table, one check per line.
    pub fn to_table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark}  {:<width$}  expected {:>6}  got {}\n", c.name, c.expected, c.actual));
        }
        let failed = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn exact(&mut self, name: impl Into<String>, expected: Rational, actual: Result<Rational>) {
        let (actual, passed) = match actual {
            Ok(v) => (rational::format(&v), v == expected),
            Err(e) => (format!("error: {e}"), false),
        };
        self.0.push(Check { name: name.into(), expected: rational::format(&expected), actual, passed });
    }

    fn flag(&mut self, name: impl Into<String>, actual: Result<bool>) {
        let (actual, passed) = match actual {
            Ok(b) => (b.to_string(), b),
            Err(e) => (format!("error: {e}"), false),
        };
        self.0.push(Check { name: name.into(), expected: "true".into(), actual, passed });
    }
}

/// Runs every reference check on `model`.
///
/// The checks assume the 2×2 layout; a model with fewer directions reports
/// the missing ones as failures rather than erroring out.
pub fn verify_model(model: &PrismModel) -> VerifyReport {
    let mut checks = Checks::default();
    let all = EventQuery::all;

    for (wing, i) in [(Wing::Left, 0), (Wing::Left, 1), (Wing::Right, 0), (Wing::Right, 1)] {
        let (event, cond) = match wing {
            Wing::Left => (all().left(i, Spin::Up), all().shows_left(i)),
            Wing::Right => (all().right(i, Spin::Up), all().shows_right(i)),
        };
        checks.exact(
            format!("p(Up {}{i} | show {}{i})", wing.tag(), wing.tag()),
            ratio(1, 2),
            model.conditional_probability(&event, &cond),
        );
    }
    for (i, j, expected) in [(0, 0, ratio(3, 8)), (0, 1, ratio(3, 8)), (1, 0, ratio(0, 1)), (1, 1, ratio(3, 8))] {
        checks.exact(
            format!("p(Up L{i} & Up R{j} | show both)"),
            expected,
            model.conditional_probability(
                &all().left(i, Spin::Up).right(j, Spin::Up),
                &all().shows_left(i).shows_right(j),
            ),
        );
    }

    let settings = ChSettings::default();
    checks.exact("CH selected", ratio(1, 8), ch_selected(model, &settings));
    checks.exact("CH full", ratio(-3, 16), ch_full(model, &settings));

    let rates = exact_rates(model);
    let mut keys = Vec::new();
    for (wing, index) in [(Wing::Left, 0), (Wing::Left, 1), (Wing::Right, 0), (Wing::Right, 1)] {
        keys.push((RateKey::Single { wing, index }, ratio(3, 4)));
    }
    for left in 0..2 {
        for right in 0..2 {
            keys.push((RateKey::Pair { left, right }, ratio(1, 2)));
        }
    }
    for anchor in [Wing::Left, Wing::Right] {
        for left in 0..2 {
            for right in 0..2 {
                keys.push((RateKey::Conditional { anchor, left, right }, ratio(2, 3)));
            }
        }
    }
    for (key, expected) in keys {
        let actual = rates
            .get(&key)
            .and_then(|e| e.exact.clone())
            .ok_or_else(|| crate::Error::domain(format!("{key} undefined")));
        checks.exact(key.to_string(), expected, actual);
    }

    for i in 0..2 {
        for j in 0..2 {
            checks.flag(
                format!("screening off L{i},R{j}"),
                model.check_screening_off(i, j).map(|r| r.passed),
            );
        }
    }

    let lambda = lambda_example();
    let weight: Rational = model.blocks().iter().filter(|b| b.response == lambda).map(|b| b.measure.clone()).sum();
    checks.exact(format!("measure of block {lambda}"), ratio(3, 32), Ok(weight));

    let checks = checks.0;
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { checks, passed }
}
