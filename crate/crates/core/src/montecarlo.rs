//! Seeded simulation of the coincidence experiment: hidden-parameter
//! sampling, setting choice, independent detector losses and counting.
//!
//! Trials are split into fixed-size chunks; chunk `k` draws from the ChaCha8
//! stream `k` of the run seed, so counts do not depend on the number of
//! worker threads.

use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{self, ChSettings, ChTerm, TermGap};
use crate::counts::{joint_index, CellCounts, CountTable, Ensemble, Estimate, EnsembleCounts};
use crate::error::{Error, Result};
use crate::geometry::{ExperimentGeometry, Wing};
use crate::model::{Outcome, PrismModel};
use crate::rational;

pub use crate::counts::estimate_probabilities;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SettingPolicy {
    /// The same left and right direction on every trial.
    Fixed { left: usize, right: usize },
    /// Independent uniform choice per wing per trial.
    #[default]
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub policy: SettingPolicy,
    /// Detector efficiency η, applied independently per wing per trial after
    /// the prism response. A no-show is never promoted to a detection.
    pub eta: f64,
    pub chunk_size: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl SimConfig {
    pub const DEFAULT_CHUNK: u64 = 1 << 16;

    pub fn new(trials: u64, seed: u64) -> Self {
        SimConfig { trials, seed, policy: SettingPolicy::Random, eta: 1.0, chunk_size: Self::DEFAULT_CHUNK, threads: None }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_policy(mut self, policy: SettingPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn validate(&self, geometry: &ExperimentGeometry) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("detector efficiency {} outside (0, 1]", self.eta)));
        }
        if self.chunk_size == 0 {
            return Err(Error::Config("chunk size must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        if let SettingPolicy::Fixed { left, right } = self.policy {
            geometry.check_index(Wing::Left, left).map_err(|e| Error::Config(e.to_string()))?;
            geometry.check_index(Wing::Right, right).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub(crate) fn chunk_count(&self) -> u64 {
        self.trials.div_ceil(self.chunk_size)
    }

    pub(crate) fn chunk_len(&self, chunk: u64) -> u64 {
        self.chunk_size.min(self.trials - chunk * self.chunk_size)
    }

    pub(crate) fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk);
        rng
    }

    pub(crate) fn install<R: Send>(&self, work: impl FnOnce() -> R + Send) -> Result<R> {
        match self.threads {
            None => Ok(work()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(work))
            }
        }
    }
}

/// Draws block indices with probability equal to their measure.
///
/// When the common denominator fits in 62 bits the draw is an exact integer
/// draw; otherwise it falls back to floating-point cumulative weights.
#[derive(Debug, Clone)]
pub(crate) enum BlockSampler {
    Exact { denom: u64, cumulative: Vec<u64> },
    Float { cumulative: Vec<f64> },
}

impl BlockSampler {
    pub fn new(model: &PrismModel) -> Self {
        let measures = model.blocks().iter().map(|b| &b.measure);
        let denom = rational::lcm_of_denominators(measures);
        if let Some(d) = denom.to_u64().filter(|&d| d < (1 << 62)) {
            let mut acc = 0u64;
            let cumulative = model
                .blocks()
                .iter()
                .map(|b| {
                    let scaled = b.measure.numer() * (&denom / b.measure.denom());
                    acc += scaled.to_u64().expect("bounded by the denominator");
                    acc
                })
                .collect();
            return BlockSampler::Exact { denom: d, cumulative };
        }
        let mut acc = 0.0;
        let cumulative = model
            .blocks()
            .iter()
            .map(|b| {
                acc += rational::to_f64(&b.measure);
                acc
            })
            .collect();
        BlockSampler::Float { cumulative }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            BlockSampler::Exact { denom, cumulative } => {
                let u = rng.random_range(0..*denom);
                cumulative.partition_point(|&c| c <= u)
            }
            BlockSampler::Float { cumulative } => {
                let u = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
            }
        }
    }
}

pub(crate) fn detects<R: Rng>(rng: &mut R, eta: f64) -> bool {
    eta >= 1.0 || rng.random::<f64>() < eta
}

fn run_chunk(model: &PrismModel, sampler: &BlockSampler, config: &SimConfig, chunk: u64) -> Vec<CellCounts> {
    let g = model.geometry();
    let (ml, mr) = (g.len(Wing::Left), g.len(Wing::Right));
    let mut cells: Vec<CellCounts> =
        (0..ml * mr).map(|k| CellCounts::empty(k / mr, k % mr, true)).collect();
    let mut rng = config.chunk_rng(chunk);
    for _ in 0..config.chunk_len(chunk) {
        let response = &model.blocks()[sampler.sample(&mut rng)].response;
        let (i, j) = match config.policy {
            SettingPolicy::Fixed { left, right } => (left, right),
            SettingPolicy::Random => (rng.random_range(0..ml), rng.random_range(0..mr)),
        };
        let (lo, ro) = (response.left[i], response.right[j]);
        let detect_left = detects(&mut rng, config.eta);
        let detect_right = detects(&mut rng, config.eta);

        let cell = &mut cells[i * mr + j];
        *cell.emitted.as_mut().expect("simulated cells track emission") += 1;
        let ens = cell.ensemble.as_mut().expect("simulated cells track the ensemble");
        tally_ensemble(ens, lo, ro);

        let shows_left = lo.shows() && detect_left;
        let shows_right = ro.shows() && detect_right;
        if shows_left {
            cell.show_left += 1;
            cell.left_up += u64::from(lo == Outcome::Up);
        }
        if shows_right {
            cell.show_right += 1;
            cell.right_up += u64::from(ro == Outcome::Up);
        }
        if shows_left && shows_right {
            cell.double_show += 1;
            cell.joint[joint_index(lo.spin().unwrap(), ro.spin().unwrap())] += 1;
        }
    }
    match config.policy {
        SettingPolicy::Fixed { left, right } => cells.into_iter().filter(|c| c.left == left && c.right == right).collect(),
        SettingPolicy::Random => cells,
    }
}

fn tally_ensemble(ens: &mut EnsembleCounts, lo: Outcome, ro: Outcome) {
    if let (Some(sl), Some(sr)) = (lo.spin(), ro.spin()) {
        ens.joint[joint_index(sl, sr)] += 1;
    }
    ens.left_up += u64::from(lo == Outcome::Up);
    ens.right_up += u64::from(ro == Outcome::Up);
}

/// Simulates `config.trials` emitted pairs. Identical `(model, config)`
/// gives an identical table for any thread count.
pub fn run_experiment(model: &PrismModel, config: &SimConfig) -> Result<CountTable> {
    config.validate(model.geometry())?;
    let sampler = BlockSampler::new(model);
    config.install(|| {
        (0..config.chunk_count())
            .into_par_iter()
            .map(|k| CountTable::from_cells(run_chunk(model, &sampler, config, k)))
            .reduce(CountTable::default, |a, b| a.merged(&b))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermComparison {
    pub term: ChTerm,
    pub selected: Estimate,
    pub full: Estimate,
    pub gap: f64,
    pub sigma: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementReport {
    pub terms: Vec<TermComparison>,
    /// Exact per-term gaps of the model itself.
    pub exact: Vec<TermGap>,
    /// `Some` only for models without no-show responses, where detector
    /// losses are the sole selection mechanism.
    pub passed: Option<bool>,
}

/// Compares selected-ensemble with emitted-ensemble frequencies for the six
/// CH terms at the default settings (a, a′, b, b′) = (0, 1, 0, 1).
pub fn enhancement_test(model: &PrismModel, config: &SimConfig) -> Result<EnhancementReport> {
    enhancement_test_with(model, config, &ChSettings::default())
}

pub fn enhancement_test_with(model: &PrismModel, config: &SimConfig, settings: &ChSettings) -> Result<EnhancementReport> {
    let exact = bell::enhancement_gap(model, settings)?;
    let table = estimate_probabilities(&run_experiment(model, config)?)?;
    let terms = ChTerm::ALL
        .iter()
        .map(|&term| {
            let selected = table.term(term, settings, Ensemble::Selected)?;
            let full = table.term(term, settings, Ensemble::Full)?;
            let gap = (selected.value - full.value).abs();
            let sigma = (selected.stderr.powi(2) + full.stderr.powi(2)).sqrt();
            let within = gap == 0.0 || gap < 3.0 * sigma;
            Ok(TermComparison { term, selected, full, gap, sigma, within })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = (!model.has_no_show()).then(|| terms.iter().all(|t| t.within));
    Ok(EnhancementReport { terms, exact, passed })
}
