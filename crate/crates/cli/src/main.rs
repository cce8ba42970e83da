use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use prismlab::bell::{self, ChInput, ChSettings};
use prismlab::canonical::canonical_2x2_model;
use prismlab::counts::CountTable;
use prismlab::io::{read_model, write_model};
use prismlab::lp::{self, Arithmetic, LpMode, LpResult};
use prismlab::montecarlo::{run_experiment, SettingPolicy, SimConfig};
use prismlab::quantum::{target_table_with, PairLaw};
use prismlab::rates::{compatibility_check, empirical_rates, exact_rates, RateReport};
use prismlab::rational::{self, Rational};
use prismlab::timetag::{analyze_streams, generate_timetag_streams, match_coincidences, ClockModel, Stream, TimeTagConfig};
use prismlab::verify::verify_model;
use prismlab::{AngleKey, Error, ExperimentGeometry, PrismModel};

mod parse;

// An alias keeps clap from treating the list as a repeated flag.
type List = Vec<f64>;

/// Prism models of the EPR experiment: exact checks, Clauser-Horne analysis,
/// defectiveness rates, simulation and efficiency search.
///
/// Set PRISMLAB_THREADS to cap the number of worker threads.
#[derive(Parser)]
#[command(name = "prismlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a 2x2 model against the reference values of the canonical model
    Verify(VerifyArgs),
    /// Evaluate the Clauser-Horne expression
    Ch(ChArgs),
    /// Defectiveness rates of a model or of simulated counts
    Rates(RatesArgs),
    /// Monte Carlo run of the coincidence experiment
    Simulate(SimulateArgs),
    /// Time-tagged streams: generate and analyze
    #[command(subcommand)]
    Timetag(TimetagCommand),
    /// Search for the model with the highest uniform efficiency
    Search(SearchArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Model file; the built-in canonical model when omitted
    #[arg(long)]
    model: Option<PathBuf>,
    /// Print a JSON report instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ChArgs {
    /// Six probabilities p_ab,p_ab',p_a'b,p_a'b',p_a,p_b'
    #[arg(long, value_parser = parse::float_list, conflicts_with_all = ["input", "model"])]
    row: Option<List>,
    /// JSON object with the six fields, or a CSV file whose last line is a row
    #[arg(long, conflicts_with = "model")]
    input: Option<PathBuf>,
    /// Evaluate a model on both ensembles
    #[arg(long)]
    model: Option<PathBuf>,
    /// Direction indices a,a',b,b' for --model
    #[arg(long, value_parser = parse::ch_settings, default_value = "0,1,0,1")]
    settings: ChSettings,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RatesArgs {
    /// Exact rates of a model file
    #[arg(long, conflicts_with = "counts")]
    model: Option<PathBuf>,
    /// Estimated rates from a counts file written by `simulate`
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Experimental rates (JSON, same layout as the output) to compare against
    #[arg(long, conflicts_with = "experiment_uniform")]
    experiment: Option<PathBuf>,
    /// Experimental rates given as R_single,R_pair,r for every key
    #[arg(long, value_parser = parse::float_list)]
    experiment_uniform: Option<List>,
    /// Standard errors granted to each side when comparing
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
    /// CSV output (key,value,stderr)
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SimArgs {
    /// Model file; the canonical model when omitted
    #[arg(long)]
    model: Option<PathBuf>,
    /// Emitted pairs
    #[arg(long, value_parser = parse::positive_u64, default_value = "1000000")]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Detector efficiency in (0, 1]
    #[arg(long, value_parser = parse::eta, default_value = "1")]
    eta: f64,
    /// `fixed:a,b` or `random`
    #[arg(long, value_parser = parse::settings, default_value = "random")]
    settings: SettingPolicy,
    /// Trials per random-number substream
    #[arg(long, value_parser = parse::positive_u64, default_value = "65536")]
    chunk_size: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Counts file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TimetagCommand {
    /// Simulate both stations' time-tag streams
    Generate(GenerateArgs),
    /// Match coincidences and estimate probabilities and rates
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Mean emission rate, pairs per second
    #[arg(long, default_value_t = 1e5)]
    rate: f64,
    /// Setting epoch length, ns
    #[arg(long, value_parser = parse::positive_u64, default_value = "100000")]
    setting_period: u64,
    /// Right-clock offset, ns
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset: f64,
    /// Right-clock drift, ns per ns
    #[arg(long, value_parser = parse::drift, default_value = "0", allow_hyphen_values = true)]
    drift: f64,
    #[arg(long)]
    out_left: PathBuf,
    #[arg(long)]
    out_right: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    /// Coincidence window, ns
    #[arg(long, default_value_t = prismlab::timetag::DEFAULT_WINDOW_NS)]
    window: i64,
    /// Correction added to right timestamps, ns
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset: f64,
    /// Drift correction for right timestamps
    #[arg(long, value_parser = parse::drift, default_value = "0", allow_hyphen_values = true)]
    drift: f64,
    /// Emitted pairs, when known; enables R rates
    #[arg(long, value_parser = parse::positive_u64)]
    emitted: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchMode {
    MaxOmega,
    Feasible,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    SpinHalf,
    Polarization,
}

#[derive(Args)]
struct SearchArgs {
    /// Left directions, degrees
    #[arg(long, value_parser = parse::angles, default_value = "0,120")]
    left_angles: List,
    /// Right directions, degrees
    #[arg(long, value_parser = parse::angles, default_value = "120,240")]
    right_angles: List,
    #[arg(long, value_enum, default_value = "max-omega")]
    mode: SearchMode,
    /// Fixed ω for feasible mode
    #[arg(long, value_parser = parse::unit_rational)]
    omega: Option<Rational>,
    /// Fixed σ values for feasible mode, `angle:value,...`
    #[arg(long, value_parser = parse::sigma_map)]
    sigma: Option<std::collections::BTreeMap<AngleKey, Rational>>,
    /// Force exact rational arithmetic
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Force floating point
    #[arg(long)]
    float: bool,
    #[arg(long, value_enum, default_value = "spin-half")]
    law: Law,
    /// Write the model found here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep nested m×m geometries for m = 1..=N instead
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    sweep_directions: Option<u8>,
    /// CSV file for the sweep table; standard output when omitted
    #[arg(long, requires = "sweep_directions")]
    sweep_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// What went wrong, and the exit status it maps to.
enum Failure {
    /// A check ran and did not pass.
    Check(String),
    Usage(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::SizeCap { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn load_model(path: Option<&Path>) -> Result<PrismModel, Failure> {
    match path {
        Some(p) => read_model(p).map_err(|e| io_failure(p, e)),
        None => Ok(canonical_2x2_model()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value");
    s.push('\n');
    s
}

fn verify(args: VerifyArgs) -> Outcome {
    let model = load_model(args.model.as_deref())?;
    let report = verify_model(&model);
    if args.json {
        emit(None, &pretty(&report.to_json()))?;
    } else {
        emit(None, &report.to_table())?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} check(s) failed", report.failures().count())))
    }
}

fn bound_label(value: f64) -> &'static str {
    match bell::classify(value) {
        bell::ChBound::Within => "within [-1, 0]",
        bell::ChBound::AboveUpper => "violates the upper bound 0",
        bell::ChBound::BelowLower => "violates the lower bound -1",
    }
}

fn read_ch_input(path: &Path) -> Result<ChInput, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| io_failure(path, e));
    }
    let (n, line) = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .last()
        .ok_or_else(|| io_failure(path, "no data row"))?;
    let values = parse::float_list(line).map_err(|e| io_failure(path, format!("line {}: {e}", n + 1)))?;
    ChInput::from_slice(&values).ok_or_else(|| io_failure(path, format!("line {}: expected 6 values", n + 1)))
}

fn ch(args: ChArgs) -> Outcome {
    if let Some(path) = &args.model {
        let model = load_model(Some(path))?;
        let selected = bell::ch_selected(&model, &args.settings)?;
        let full = bell::ch_full(&model, &args.settings)?;
        let (s, f) = (rational::to_f64(&selected), rational::to_f64(&full));
        if args.json {
            let v = json!({
                "selected": { "exact": rational::format(&selected), "value": s, "bound": bell::classify(s) },
                "full": { "exact": rational::format(&full), "value": f, "bound": bell::classify(f) },
            });
            return emit(None, &pretty(&v));
        }
        let text = format!(
            "CH selected = {} ({s:.6}), {}\nCH full     = {} ({f:.6}), {}\n",
            rational::format(&selected),
            bound_label(s),
            rational::format(&full),
            bound_label(f)
        );
        return emit(None, &text);
    }
    let input = match (&args.row, &args.input) {
        (Some(row), _) => {
            ChInput::from_slice(row).ok_or_else(|| Failure::Usage("--row needs exactly six values".into()))?
        }
        (None, Some(path)) => read_ch_input(path)?,
        (None, None) => return Err(Failure::Usage("one of --row, --input or --model is required".into())),
    };
    let value = bell::ch_expression(&input);
    if args.json {
        emit(None, &pretty(&json!({ "value": value, "bound": bell::classify(value) })))
    } else {
        emit(None, &format!("CH = {value}\n{}\n", bound_label(value)))
    }
}

fn read_counts(path: &Path) -> Result<CountTable, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_failure(path, e))
}

fn rates(args: RatesArgs) -> Outcome {
    let report = match &args.counts {
        Some(path) => empirical_rates(&read_counts(path)?)?,
        None => exact_rates(&load_model(args.model.as_deref())?),
    };
    let experiment = match (&args.experiment, &args.experiment_uniform) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| io_failure(path, e))?;
            Some(RateReport::from_json(&value).map_err(|e| io_failure(path, e))?)
        }
        (None, Some(v)) => {
            let [single, pair, cond] = v[..] else {
                return Err(Failure::Usage("--experiment-uniform needs R_single,R_pair,r".into()));
            };
            let g = report.entries.keys().fold((0, 0), |(l, r), k| match k {
                prismlab::rates::RateKey::Pair { left, right } => (l.max(left + 1), r.max(right + 1)),
                _ => (l, r),
            });
            Some(RateReport::uniform(g.0, g.1, single, pair, cond))
        }
        (None, None) => None,
    };
    if args.slack.is_nan() || args.slack < 0.0 {
        return Err(Failure::Usage("--slack must be non-negative".into()));
    }

    let Some(experiment) = experiment else {
        return if args.csv { emit(None, &report.to_csv()) } else { emit(None, &pretty(&report.to_json())) };
    };
    let verdict = compatibility_check(&report, &experiment, args.slack)?;
    if args.csv {
        emit(None, &report.to_csv())?;
    } else {
        let v = json!({ "model": report.to_json()["rates"], "experiment": experiment.to_json()["rates"], "verdict": verdict });
        emit(None, &pretty(&v))?;
    }
    if verdict.compatible {
        eprintln!("compatible");
        Ok(())
    } else {
        let keys: Vec<&str> = verdict.violations.iter().map(|v| v.key.as_str()).collect();
        Err(Failure::Check(format!("incompatible: experimental rates exceed the model at {}", keys.join(", "))))
    }
}

fn sim_config(args: &SimArgs, model: &PrismModel) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::new(args.trials, args.seed).with_eta(args.eta).with_policy(args.settings);
    cfg.chunk_size = args.chunk_size;
    cfg.validate(model.geometry())?;
    Ok(cfg)
}

fn simulate(args: SimulateArgs) -> Outcome {
    let model = load_model(args.sim.model.as_deref())?;
    let cfg = sim_config(&args.sim, &model)?;
    let counts = run_experiment(&model, &cfg)?;
    let text = pretty(&serde_json::to_value(&counts).expect("counts serialize"));
    emit(args.out.as_deref(), &text)
}

fn timetag_generate(args: GenerateArgs) -> Outcome {
    let model = load_model(args.sim.model.as_deref())?;
    let cfg = sim_config(&args.sim, &model)?;
    let tt = TimeTagConfig {
        emission_rate: args.rate,
        setting_period_ns: args.setting_period,
        clock_left: ClockModel::ideal(),
        clock_right: ClockModel { offset_ns: args.offset, drift: args.drift },
    };
    tt.validate()?;
    let (left, right) = generate_timetag_streams(&model, &cfg, &tt)?;
    left.write(&args.out_left).map_err(|e| io_failure(&args.out_left, e))?;
    right.write(&args.out_right).map_err(|e| io_failure(&args.out_right, e))?;
    eprintln!(
        "{} left and {} right records from {} emitted pairs",
        left.records.len(),
        right.records.len(),
        args.sim.trials
    );
    Ok(())
}

fn read_stream(path: &Path) -> Result<Stream, Failure> {
    Stream::read(path).map_err(|e| io_failure(path, e))
}

fn timetag_analyze(args: AnalyzeArgs) -> Outcome {
    if args.window < 0 {
        return Err(Failure::Usage("--window must be non-negative".into()));
    }
    let left = read_stream(&args.left)?;
    let right = read_stream(&args.right)?;
    let correction = ClockModel { offset_ns: args.offset, drift: args.drift };
    let right = if correction == ClockModel::ideal() { right } else { right.corrected(&correction) };
    let a = match analyze_streams(&left, &right, args.window, args.emitted) {
        Ok(a) => a,
        // Report what was matched before giving up; a misaligned clock is the usual cause.
        Err(e @ Error::EmptyCell(_)) => {
            let matches = match_coincidences(&left, &right, args.window)?;
            let rate = matches.len() as f64 / left.records.len().max(1) as f64;
            let text = format!("matches        {}\nmatch rate     {rate:.6}\n", matches.len());
            emit(None, &text)?;
            return Err(Failure::Check(format!("{e}; check the clock offset and window")));
        }
        Err(e) => return Err(e.into()),
    };
    let match_rate = a.match_rate(&left);
    if args.json {
        let v = json!({
            "left_records": left.records.len(),
            "right_records": right.records.len(),
            "matches": a.matches.len(),
            "match_rate": match_rate,
            "probabilities": a.probabilities,
            "rates": a.rates.to_json()["rates"],
        });
        return emit(None, &pretty(&v));
    }
    let mut text = format!(
        "left records   {}\nright records  {}\nmatches        {}\nmatch rate     {match_rate:.6}\n",
        left.records.len(),
        right.records.len(),
        a.matches.len()
    );
    for c in &a.probabilities.cells {
        let uu = c.selected.0[0];
        text.push_str(&format!("p(U,U | L{},R{}) = {:.6} ± {:.6}\n", c.left, c.right, uu.value, uu.stderr));
    }
    for (k, e) in &a.rates.entries {
        text.push_str(&format!("{k} = {:.6} ± {:.6}\n", e.value, e.stderr.unwrap_or(0.0)));
    }
    emit(None, &text)
}

fn search(args: SearchArgs) -> Outcome {
    let arithmetic = match (args.exact, args.float) {
        (true, _) => Arithmetic::Exact,
        (_, true) => Arithmetic::Float,
        _ => Arithmetic::Auto,
    };
    let law = match args.law {
        Law::SpinHalf => PairLaw::SpinHalf,
        Law::Polarization => PairLaw::Polarization,
    };
    if let Some(m) = args.sweep_directions {
        let points = lp::sweep(m as usize, arithmetic)?;
        return emit(args.sweep_out.as_deref(), &lp::sweep_csv(&points));
    }
    let geometry = ExperimentGeometry::from_degrees(&args.left_angles, &args.right_angles)?;
    let targets = target_table_with(&geometry, law);
    let mode = match args.mode {
        SearchMode::MaxOmega => {
            if args.omega.is_some() || args.sigma.is_some() {
                return Err(Failure::Usage("--omega and --sigma need --mode feasible".into()));
            }
            LpMode::MaximizeOmega
        }
        SearchMode::Feasible => LpMode::Feasibility { omega: args.omega.clone(), sigma: args.sigma.clone().unwrap_or_default() },
    };
    let program = lp::build_lp(&geometry, &targets, &mode)?;
    let solution = match lp::solve(&program, arithmetic)? {
        LpResult::Feasible(s) => s,
        LpResult::Infeasible => {
            if args.json {
                emit(None, &pretty(&json!({ "feasible": false })))?;
            } else {
                emit(None, "infeasible\n")?;
            }
            return Err(Failure::Check("no prism model satisfies the constraints".into()));
        }
    };
    for w in &solution.warnings {
        eprintln!("warning: {w}");
    }
    let model = lp::weights_to_model(&solution.weights, &program.strategies, &geometry)?;
    if let Some(out) = &args.out {
        write_model(out, &model).map_err(|e| io_failure(out, e))?;
    }
    let exact = |n: &lp::Number| n.as_exact().map(rational::format);
    if args.json {
        let sigma: Vec<_> = solution
            .sigma
            .iter()
            .map(|(a, s)| json!({ "angle": a.degrees(), "value": s.to_f64(), "exact": exact(s) }))
            .collect();
        let v = json!({
            "feasible": true,
            "omega": solution.omega.to_f64(),
            "omega_exact": exact(&solution.omega),
            "sigma": sigma,
            "exact": solution.exact,
            "residual": solution.residual,
            "blocks": model.blocks().len(),
            "warnings": solution.warnings,
        });
        return emit(None, &pretty(&v));
    }
    let mut text = format!("omega = {}", solution.omega);
    if solution.omega.as_exact().is_some() {
        text.push_str(&format!(" ({:.6})", solution.omega.to_f64()));
    }
    text.push('\n');
    for (a, s) in &solution.sigma {
        text.push_str(&format!("sigma({a}) = {s}\n"));
    }
    text.push_str(&format!(
        "{} blocks, {} arithmetic, residual {:.2e}\n",
        model.blocks().len(),
        if solution.exact { "exact" } else { "floating-point" },
        solution.residual
    ));
    emit(None, &text)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("PRISMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("PRISMLAB_THREADS=`{value}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Ch(a) => ch(a),
        Command::Rates(a) => rates(a),
        Command::Simulate(a) => simulate(a),
        Command::Timetag(TimetagCommand::Generate(a)) => timetag_generate(a),
        Command::Timetag(TimetagCommand::Analyze(a)) => timetag_analyze(a),
        Command::Search(a) => search(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Check(msg) | Failure::Usage(msg) | Failure::Input(msg)) = &f;
            eprintln!("prismlab: {msg}");
            ExitCode::from(f.code())
        }
    }
}
