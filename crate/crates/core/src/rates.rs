//! Defectiveness rates: `R` (non-defective fraction of all systems) and `r`
//! (double-show fraction among systems non-defective on an anchor direction).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::geometry::Wing;
use crate::model::{EventQuery, PrismModel};
use crate::rational::{self, Rational};

/// Identifies one rate. Printed as `R[L0]`, `R[L0,R1]` and `r[L0|L0,R1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RateKey {
    Single { wing: Wing, index: usize },
    Pair { left: usize, right: usize },
    Conditional { anchor: Wing, left: usize, right: usize },
}

impl fmt::Display for RateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RateKey::Single { wing, index } => write!(f, "R[{}{index}]", wing.tag()),
            RateKey::Pair { left, right } => write!(f, "R[L{left},R{right}]"),
            RateKey::Conditional { anchor, left, right } => {
                let a = match anchor {
                    Wing::Left => left,
                    Wing::Right => right,
                };
                write!(f, "r[{}{a}|L{left},R{right}]", anchor.tag())
            }
        }
    }
}

fn parse_dir(s: &str) -> Option<(Wing, usize)> {
    let wing = match s.chars().next()? {
        'L' => Wing::Left,
        'R' => Wing::Right,
        _ => return None,
    };
    Some((wing, s[1..].parse().ok()?))
}

fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (l, r) = s.split_once(',')?;
    match (parse_dir(l)?, parse_dir(r)?) {
        ((Wing::Left, i), (Wing::Right, j)) => Some((i, j)),
        _ => None,
    }
}

impl FromStr for RateKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid rate key `{s}`"));
        let (kind, body) = s.split_once('[').ok_or_else(bad)?;
        let body = body.strip_suffix(']').ok_or_else(bad)?;
        match kind {
            "R" if body.contains(',') => {
                let (left, right) = parse_pair(body).ok_or_else(bad)?;
                Ok(RateKey::Pair { left, right })
            }
            "R" => {
                let (wing, index) = parse_dir(body).ok_or_else(bad)?;
                Ok(RateKey::Single { wing, index })
            }
            "r" => {
                let (anchor, pair) = body.split_once('|').ok_or_else(bad)?;
                let (anchor, a) = parse_dir(anchor).ok_or_else(bad)?;
                let (left, right) = parse_pair(pair).ok_or_else(bad)?;
                let consistent = match anchor {
                    Wing::Left => a == left,
                    Wing::Right => a == right,
                };
                if !consistent {
                    return Err(bad());
                }
                Ok(RateKey::Conditional { anchor, left, right })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEntry {
    pub value: f64,
    pub exact: Option<Rational>,
    pub stderr: Option<f64>,
}

impl RateEntry {
    pub fn exact(r: Rational) -> Self {
        RateEntry { value: rational::to_f64(&r), exact: Some(r), stderr: None }
    }

    pub fn estimate(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        RateEntry { value: p, exact: None, stderr: Some((p * (1.0 - p) / trials as f64).sqrt()) }
    }

    pub fn value(value: f64) -> Self {
        RateEntry { value, exact: None, stderr: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateReport {
    pub entries: BTreeMap<RateKey, RateEntry>,
}

impl RateReport {
    pub fn get(&self, key: &RateKey) -> Option<&RateEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: RateKey, entry: RateEntry) {
        self.entries.insert(key, entry);
    }

    /// Report with the same value for every single, pair and conditional rate
    /// of an `m_left × m_right` geometry.
    pub fn uniform(m_left: usize, m_right: usize, single: f64, pair: f64, conditional: f64) -> Self {
        let mut report = RateReport::default();
        for (wing, m) in [(Wing::Left, m_left), (Wing::Right, m_right)] {
            for index in 0..m {
                report.insert(RateKey::Single { wing, index }, RateEntry::value(single));
            }
        }
        for left in 0..m_left {
            for right in 0..m_right {
                report.insert(RateKey::Pair { left, right }, RateEntry::value(pair));
                for anchor in [Wing::Left, Wing::Right] {
                    report.insert(RateKey::Conditional { anchor, left, right }, RateEntry::value(conditional));
                }
            }
        }
        report
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .entries
            .iter()
            .map(|(k, e)| RateRow {
                key: k.to_string(),
                value: e.value,
                exact: e.exact.as_ref().map(rational::format),
                stderr: e.stderr,
            })
            .collect();
        serde_json::json!({ "rates": rows })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            rates: Vec<RateRow>,
        }
        let file: File = serde_json::from_value(value.clone())?;
        let mut report = RateReport::default();
        for row in file.rates {
            let exact = row.exact.as_deref().map(rational::parse).transpose()?;
            report.insert(row.key.parse()?, RateEntry { value: row.value, exact, stderr: row.stderr });
        }
        Ok(report)
    }

    /// `key,value,stderr` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value,stderr\n");
        for (k, e) in &self.entries {
            let stderr = e.stderr.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("\"{k}\",{},{stderr}\n", e.value));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct RateRow {
    key: String,
    value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
}

/// Exact rates of a prism model. A conditional rate whose anchor direction is
/// never non-defective is left out.
pub fn exact_rates(model: &PrismModel) -> RateReport {
    let g = model.geometry();
    let measure = |q: &EventQuery| model.event_measure(q).expect("indices come from the geometry");
    let mut report = RateReport::default();
    let left_show: Vec<Rational> = (0..g.len(Wing::Left)).map(|i| measure(&EventQuery::all().shows_left(i))).collect();
    let right_show: Vec<Rational> =
        (0..g.len(Wing::Right)).map(|j| measure(&EventQuery::all().shows_right(j))).collect();
    for (index, r) in left_show.iter().enumerate() {
        report.insert(RateKey::Single { wing: Wing::Left, index }, RateEntry::exact(r.clone()));
    }
    for (index, r) in right_show.iter().enumerate() {
        report.insert(RateKey::Single { wing: Wing::Right, index }, RateEntry::exact(r.clone()));
    }
    for (left, l_show) in left_show.iter().enumerate() {
        for (right, r_show) in right_show.iter().enumerate() {
            let pair = measure(&EventQuery::all().shows_left(left).shows_right(right));
            for (anchor, denom) in [(Wing::Left, l_show), (Wing::Right, r_show)] {
                if !denom.is_zero() {
                    report.insert(RateKey::Conditional { anchor, left, right }, RateEntry::exact(&pair / denom));
                }
            }
            report.insert(RateKey::Pair { left, right }, RateEntry::exact(pair));
        }
    }
    report
}

/// Rates estimated from counts, with binomial standard errors. `R` rates need
/// emitted counts and are skipped when the table has none.
pub fn empirical_rates(counts: &CountTable) -> Result<RateReport> {
    if counts.cells.is_empty() {
        return Err(Error::EmptyCell("count table has no cells".into()));
    }
    let mut report = RateReport::default();
    let mut single_tallies: BTreeMap<(Wing, usize), (u64, Option<u64>)> = BTreeMap::new();
    for c in &counts.cells {
        let (left, right) = (c.left, c.right);
        let empty = |what: &str| Error::EmptyCell(format!("cell ({left}, {right}): zero {what}"));
        if let Some(emitted) = c.emitted {
            if emitted == 0 {
                return Err(empty("emitted count"));
            }
            report.insert(RateKey::Pair { left, right }, RateEntry::estimate(c.double_show, emitted));
        }
        for (anchor, shows) in [(Wing::Left, c.show_left), (Wing::Right, c.show_right)] {
            if shows == 0 {
                return Err(empty(&format!("{anchor} show count")));
            }
            report.insert(RateKey::Conditional { anchor, left, right }, RateEntry::estimate(c.double_show, shows));
        }
        for (wing, index, shows) in [(Wing::Left, left, c.show_left), (Wing::Right, right, c.show_right)] {
            let t = single_tallies.entry((wing, index)).or_insert((0, Some(0)));
            t.0 += shows;
            t.1 = t.1.zip(c.emitted).map(|(a, b)| a + b);
        }
    }
    for ((wing, index), (shows, emitted)) in single_tallies {
        if let Some(emitted) = emitted {
            report.insert(RateKey::Single { wing, index }, RateEntry::estimate(shows, emitted));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub model: f64,
    pub experiment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub compatible: bool,
    pub violations: Vec<Violation>,
}

/// Compatible iff no experimental rate exceeds the corresponding model rate.
///
/// `slack` is a number of standard errors granted to each side; with the
/// default 0 the point values are compared. Every experimental key must exist
/// in the model report.
pub fn compatibility_check(model: &RateReport, experiment: &RateReport, slack: f64) -> Result<Verdict> {
    let missing: Vec<String> = experiment
        .entries
        .keys()
        .filter(|k| !model.entries.contains_key(k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() || experiment.entries.is_empty() {
        return Err(Error::KeyMismatch(missing));
    }
    let violations: Vec<Violation> = experiment
        .entries
        .iter()
        .filter_map(|(k, e)| {
            let m = &model.entries[k];
            let exp_low = e.value - slack * e.stderr.unwrap_or(0.0);
            let model_high = m.value + slack * m.stderr.unwrap_or(0.0);
            let exceeds = match (&m.exact, &e.exact) {
                (Some(me), Some(ee)) if slack == 0.0 => ee > me,
                _ => exp_low > model_high,
            };
            exceeds.then(|| Violation { key: k.to_string(), model: m.value, experiment: e.value })
        })
        .collect();
    Ok(Verdict { compatible: violations.is_empty(), violations })
}
