//! Independent two-station registration with local clocks, and post-hoc
//! coincidence analysis of the recorded time tags.
//!
//! Each station logs `(timestamp, setting, outcome)` for every detection on
//! its own clock and keeps the schedule of its own setting epochs. Pairs are
//! only formed afterwards by matching timestamps within a window.

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{estimate_probabilities, joint_index, CellCounts, CountTable, ProbabilityTable};
use crate::error::{Error, Result};
use crate::geometry::Wing;
use crate::model::{Outcome, PrismModel, Spin};
use crate::montecarlo::{detects, BlockSampler, SettingPolicy, SimConfig};
use crate::rates::{empirical_rates, RateReport};

/// Coincidence window used when none is given, in ns.
pub const DEFAULT_WINDOW_NS: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeTagRecord {
    pub timestamp: i64,
    pub setting: usize,
    pub outcome: Spin,
}

/// From `start` on (local clock), the station uses direction `setting`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingEpoch {
    pub start: i64,
    pub setting: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    pub station: Wing,
    pub epochs: Vec<SettingEpoch>,
    pub records: Vec<TimeTagRecord>,
}

/// Local clock: `local = true + offset + drift · true`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClockModel {
    pub offset_ns: f64,
    pub drift: f64,
}

impl ClockModel {
    pub const MAX_DRIFT: f64 = 1e-3;

    pub fn ideal() -> Self {
        ClockModel::default()
    }

    pub fn offset(offset_ns: f64) -> Self {
        ClockModel { offset_ns, drift: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.offset_ns.is_finite() || !self.drift.is_finite() || self.drift.abs() >= Self::MAX_DRIFT {
            return Err(Error::Config(format!("clock model {self:?} out of range (|drift| < 1e-3)")));
        }
        Ok(())
    }

    pub fn apply(&self, t: i64) -> i64 {
        t + (self.offset_ns + self.drift * t as f64).round() as i64
    }
}

/// Maps timestamps through `clock`, bumping by 1 ns where rounding would
/// break strict ordering.
fn map_increasing(times: impl Iterator<Item = i64>, clock: &ClockModel) -> Vec<i64> {
    let mut last = i64::MIN;
    times
        .map(|t| {
            let mut local = clock.apply(t);
            if local <= last {
                local = last + 1;
            }
            last = local;
            local
        })
        .collect()
}

impl Stream {
    pub fn validate(&self) -> Result<()> {
        for (index, w) in self.records.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::UnsortedStream { station: self.station, index: index + 1 });
            }
        }
        if self.epochs.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::Parse(format!("{} setting epochs are not increasing", self.station)));
        }
        Ok(())
    }

    /// Setting in force at local time `t`; before the first epoch the first
    /// setting is assumed.
    pub fn setting_at(&self, t: i64) -> Option<usize> {
        let k = self.epochs.partition_point(|e| e.start <= t);
        self.epochs.get(k.saturating_sub(1)).map(|e| e.setting)
    }

    pub fn directions(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.setting)
            .chain(self.epochs.iter().map(|e| e.setting))
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Re-times records and epochs through `clock`, e.g. to undo a known
    /// offset before matching.
    pub fn corrected(&self, clock: &ClockModel) -> Stream {
        let times = map_increasing(self.records.iter().map(|r| r.timestamp), clock);
        let starts = map_increasing(self.epochs.iter().map(|e| e.start), clock);
        Stream {
            station: self.station,
            epochs: self.epochs.iter().zip(starts).map(|(e, start)| SettingEpoch { start, ..*e }).collect(),
            records: self.records.iter().zip(times).map(|(r, timestamp)| TimeTagRecord { timestamp, ..*r }).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(24 * self.records.len() + 16 * self.epochs.len() + 64);
        writeln!(out, "# station={}", self.station).unwrap();
        out.push_str("# setting_epochs=");
        for (k, e) in self.epochs.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{}:{}", e.start, e.setting).unwrap();
        }
        out.push('\n');
        out.push_str("timestamp_ns,setting,outcome\n");
        for r in &self.records {
            let o = Outcome::from(r.outcome).code();
            writeln!(out, "{},{},{o}", r.timestamp, r.setting).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Stream> {
        let mut station = None;
        let mut epochs = Vec::new();
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |msg: &str| Error::Parse(format!("line {line_no}: {msg}"));
            let line = line.trim();
            if line.is_empty() || line == "timestamp_ns,setting,outcome" {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.trim().split_once('=') else { continue };
                match key.trim() {
                    "station" => {
                        station = Some(match value.trim() {
                            "left" => Wing::Left,
                            "right" => Wing::Right,
                            other => return Err(err(&format!("unknown station `{other}`"))),
                        })
                    }
                    "setting_epochs" => {
                        for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                            let (t, s) = item.split_once(':').ok_or_else(|| err(&format!("bad epoch `{item}`")))?;
                            epochs.push(SettingEpoch {
                                start: t.trim().parse().map_err(|_| err(&format!("bad epoch time `{t}`")))?,
                                setting: s.trim().parse().map_err(|_| err(&format!("bad epoch setting `{s}`")))?,
                            });
                        }
                    }
                    _ => {}
                }
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let (Some(t), Some(s), Some(o), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
                return Err(err("expected `timestamp_ns,setting,outcome`"));
            };
            let outcome = match o {
                "U" => Spin::Up,
                "D" => Spin::Down,
                _ => return Err(err(&format!("bad outcome `{o}`"))),
            };
            records.push(TimeTagRecord {
                timestamp: t.parse().map_err(|_| err(&format!("bad timestamp `{t}`")))?,
                setting: s.parse().map_err(|_| err(&format!("bad setting `{s}`")))?,
                outcome,
            });
        }
        let station = station.ok_or_else(|| Error::Parse("missing `# station=` header".into()))?;
        let stream = Stream { station, epochs, records };
        stream.validate()?;
        Ok(stream)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Stream> {
        Stream::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTagConfig {
    /// Mean pair emission rate, pairs per second.
    pub emission_rate: f64,
    /// Length of a setting epoch, ns. Each epoch draws its setting afresh.
    pub setting_period_ns: u64,
    pub clock_left: ClockModel,
    pub clock_right: ClockModel,
}

impl Default for TimeTagConfig {
    fn default() -> Self {
        TimeTagConfig {
            emission_rate: 1e5,
            setting_period_ns: 100_000,
            clock_left: ClockModel::ideal(),
            clock_right: ClockModel::ideal(),
        }
    }
}

impl TimeTagConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.emission_rate.is_finite() && self.emission_rate > 0.0) {
            return Err(Error::Config(format!("emission rate {} must be positive", self.emission_rate)));
        }
        if self.setting_period_ns == 0 {
            return Err(Error::Config("setting period must be positive".into()));
        }
        self.clock_left.validate()?;
        self.clock_right.validate()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn epoch_setting(seed: u64, wing: Wing, epoch: u64, directions: usize) -> usize {
    let tag = match wing {
        Wing::Left => 0x4c45_4654,
        Wing::Right => 0x5249_4748,
    };
    let h = splitmix64(splitmix64(seed ^ tag) ^ epoch);
    (h % directions as u64) as usize
}

struct Emission {
    offset: u64,
    block: u32,
    detect_left: bool,
    detect_right: bool,
}

/// Simulated station streams. Emission gaps are exponential (rounded up to
/// whole ns), settings follow per-station epoch schedules (or the fixed pair
/// of a fixed policy), and a station logs a record only when the response
/// shows and its detector fires.
pub fn generate_timetag_streams(model: &PrismModel, sim: &SimConfig, tt: &TimeTagConfig) -> Result<(Stream, Stream)> {
    sim.validate(model.geometry())?;
    tt.validate()?;
    let sampler = BlockSampler::new(model);
    let per_ns = Exp::new(tt.emission_rate / 1e9).map_err(|e| Error::Config(e.to_string()))?;

    let chunks: Vec<Vec<Emission>> = sim.install(|| {
        (0..sim.chunk_count())
            .into_par_iter()
            .map(|k| {
                let mut rng = sim.chunk_rng(k);
                let mut t = 0u64;
                (0..sim.chunk_len(k))
                    .map(|_| {
                        t += (per_ns.sample(&mut rng).ceil() as u64).max(1);
                        let block = sampler.sample(&mut rng) as u32;
                        let detect_left = detects(&mut rng, sim.eta);
                        let detect_right = detects(&mut rng, sim.eta);
                        Emission { offset: t, block, detect_left, detect_right }
                    })
                    .collect()
            })
            .collect()
    })?;

    let g = model.geometry();
    let (ml, mr) = (g.len(Wing::Left), g.len(Wing::Right));
    let period = tt.setting_period_ns;
    let setting = |wing: Wing, t: u64| match sim.policy {
        SettingPolicy::Fixed { left, right } => match wing {
            Wing::Left => left,
            Wing::Right => right,
        },
        SettingPolicy::Random => {
            let m = if wing == Wing::Left { ml } else { mr };
            epoch_setting(sim.seed, wing, t / period, m)
        }
    };

    let mut true_left = Vec::new();
    let mut true_right = Vec::new();
    let mut base = 0u64;
    for chunk in &chunks {
        for e in chunk {
            let t = base + e.offset;
            let response = &model.blocks()[e.block as usize].response;
            let (i, j) = (setting(Wing::Left, t), setting(Wing::Right, t));
            if let (Some(s), true) = (response.left[i].spin(), e.detect_left) {
                true_left.push((t as i64, i, s));
            }
            if let (Some(s), true) = (response.right[j].spin(), e.detect_right) {
                true_right.push((t as i64, j, s));
            }
        }
        base += chunk.last().map_or(0, |e| e.offset);
    }
    let end = base;

    let build = |wing: Wing, tagged: Vec<(i64, usize, Spin)>, clock: &ClockModel| {
        let mut epochs: Vec<(i64, usize)> = Vec::new();
        for e in 0..=end / period {
            let t = e * period;
            let s = setting(wing, t);
            if epochs.last().is_none_or(|&(_, last)| last != s) {
                epochs.push((t as i64, s));
            }
        }
        let starts = map_increasing(epochs.iter().map(|e| e.0), clock);
        let times = map_increasing(tagged.iter().map(|r| r.0), clock);
        Stream {
            station: wing,
            epochs: epochs.iter().zip(starts).map(|(&(_, setting), start)| SettingEpoch { start, setting }).collect(),
            records: tagged
                .iter()
                .zip(times)
                .map(|(&(_, setting, outcome), timestamp)| TimeTagRecord { timestamp, setting, outcome })
                .collect(),
        }
    };
    Ok((build(Wing::Left, true_left, &tt.clock_left), build(Wing::Right, true_right, &tt.clock_right)))
}

/// Greedy nearest-neighbour matching of two sorted streams in one pass.
///
/// A left and a right record match when `|t_L − t_R| ≤ window`; each record
/// is used at most once, and a candidate is passed over when the next record
/// on the other side is strictly closer. Ties go to the earlier right record.
pub fn match_coincidences(left: &Stream, right: &Stream, window: i64) -> Result<Vec<(usize, usize)>> {
    left.validate()?;
    right.validate()?;
    if window < 0 {
        return Err(Error::Config(format!("negative window {window}")));
    }
    let (l, r) = (&left.records, &right.records);
    let mut matches = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < l.len() && j < r.len() {
        let d = r[j].timestamp - l[i].timestamp;
        if d < -window {
            j += 1;
            continue;
        }
        if d > window {
            i += 1;
            continue;
        }
        if j + 1 < r.len() && (r[j + 1].timestamp - l[i].timestamp).abs() < d.abs() {
            j += 1;
            continue;
        }
        if i + 1 < l.len() && (r[j].timestamp - l[i + 1].timestamp).abs() < d.abs() {
            i += 1;
            continue;
        }
        matches.push((i, j));
        i += 1;
        j += 1;
    }
    Ok(matches)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamAnalysis {
    pub matches: Vec<(usize, usize)>,
    pub counts: CountTable,
    pub probabilities: ProbabilityTable,
    pub rates: RateReport,
}

impl StreamAnalysis {
    /// Matched records over left-station records.
    pub fn match_rate(&self, left: &Stream) -> f64 {
        if left.records.is_empty() {
            0.0
        } else {
            self.matches.len() as f64 / left.records.len() as f64
        }
    }
}

/// Time spent in each (left setting, right setting) combination over
/// `[from, to)`, per unit time.
fn joint_time_share(left: &Stream, right: &Stream, from: i64, to: i64, ml: usize, mr: usize) -> Vec<f64> {
    let mut share = vec![0.0; ml * mr];
    let span = (to - from).max(1) as f64;
    let mut cuts: Vec<i64> = left
        .epochs
        .iter()
        .chain(&right.epochs)
        .map(|e| e.start)
        .filter(|&t| t > from && t < to)
        .collect();
    cuts.push(from);
    cuts.push(to);
    cuts.sort_unstable();
    cuts.dedup();
    for w in cuts.windows(2) {
        if let (Some(i), Some(j)) = (left.setting_at(w[0]), right.setting_at(w[0])) {
            share[i * mr + j] += (w[1] - w[0]) as f64 / span;
        }
    }
    share
}

/// Selected-ensemble frequencies and `r` rates from matched time tags.
///
/// A record's partner setting is taken from its matched partner, or for
/// unmatched records from the partner station's epoch schedule at the same
/// time. `R` rates are produced only when the emitted total is supplied; it
/// is split over setting cells by their share of the recording time.
pub fn analyze_streams(left: &Stream, right: &Stream, window: i64, emitted_total: Option<u64>) -> Result<StreamAnalysis> {
    let matches = match_coincidences(left, right, window)?;
    let (ml, mr) = (left.directions(), right.directions());
    if ml == 0 || mr == 0 {
        return Err(Error::EmptyCell("streams carry no settings".into()));
    }
    let mut cells: Vec<CellCounts> = (0..ml * mr).map(|k| CellCounts::empty(k / mr, k % mr, false)).collect();

    let mut left_partner = vec![None; left.records.len()];
    let mut right_partner = vec![None; right.records.len()];
    for &(i, j) in &matches {
        left_partner[i] = Some(j);
        right_partner[j] = Some(i);
        let (l, r) = (&left.records[i], &right.records[j]);
        let cell = &mut cells[l.setting * mr + r.setting];
        cell.double_show += 1;
        cell.joint[joint_index(l.outcome, r.outcome)] += 1;
    }
    let unattributed = || Error::EmptyCell("partner station has no setting schedule".into());
    for (rec, partner) in left.records.iter().zip(&left_partner) {
        let j = match partner {
            Some(j) => right.records[*j].setting,
            None => right.setting_at(rec.timestamp).ok_or_else(unattributed)?,
        };
        let cell = &mut cells[rec.setting * mr + j];
        cell.show_left += 1;
        cell.left_up += u64::from(rec.outcome == Spin::Up);
    }
    for (rec, partner) in right.records.iter().zip(&right_partner) {
        let i = match partner {
            Some(i) => left.records[*i].setting,
            None => left.setting_at(rec.timestamp).ok_or_else(unattributed)?,
        };
        let cell = &mut cells[i * mr + rec.setting];
        cell.show_right += 1;
        cell.right_up += u64::from(rec.outcome == Spin::Up);
    }

    if let Some(total) = emitted_total {
        let first = [left.records.first(), right.records.first()]
            .into_iter()
            .flatten()
            .map(|r| r.timestamp)
            .chain(left.epochs.first().map(|e| e.start))
            .chain(right.epochs.first().map(|e| e.start))
            .min()
            .unwrap_or(0);
        let last = [left.records.last(), right.records.last()]
            .into_iter()
            .flatten()
            .map(|r| r.timestamp + 1)
            .max()
            .unwrap_or(first + 1);
        let share = joint_time_share(left, right, first, last, ml, mr);
        for (cell, s) in cells.iter_mut().zip(share) {
            cell.emitted = Some((total as f64 * s).round() as u64);
        }
    }

    let counts = CountTable::from_cells(cells);
    let probabilities = estimate_probabilities(&counts)?;
    let rates = empirical_rates(&counts)?;
    Ok(StreamAnalysis { matches, counts, probabilities, rates })
}
