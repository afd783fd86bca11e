use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use strumer_core::crb::{crb_frequencies, root_mean_crb};
use strumer_core::harness::{preset, presets, run_experiment, ExperimentSpec, Format, RunOptions};
use strumer_core::model_order::{select_order, Criterion, OrderScore};
use strumer_core::reduction::{solve_reduced, ReduceMode};
use strumer_core::scenario::{EstimateDocument, Scenario};
use strumer_core::signal_model::{MaskPattern, NoiseModel};
use strumer_core::solver::{solve_with_sink, CsvTraceSink, SolverConfig};
use strumer_core::toeplitz_baseline::{estimate_toeplitz, solve_toeplitz_with_sink};
use strumer_core::StrumerError;

#[derive(Parser)]
#[command(name = "strumer", version, about = "Multichannel frequency estimation by structured PSD embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write it as JSON.
    Generate(GenerateArgs),
    /// Estimate frequencies and amplitudes from a scenario.
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment and emit its result table.
    Experiment(ExperimentArgs),
    /// Cramér-Rao bound of a scenario's frequencies.
    Crb(CrbArgs),
    /// Select the model order by AIC or BIC.
    Mos(MosArgs),
    /// Write the per-iteration residuals of one solve as CSV.
    Trace(TraceArgs),
}

/// Where the scenario comes from: a JSON file, or the base setting of a preset.
#[derive(Args)]
struct Source {
    /// Scenario JSON written by `generate`.
    input: Option<PathBuf>,
    /// Simulate the base scenario of this preset instead of reading a file.
    #[arg(long)]
    preset: Option<String>,
    /// Seed for simulation and solver initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Preset whose base scenario is the starting point.
    #[arg(long, default_value = "exp2")]
    preset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    /// Comma-separated frequencies in cycles per sample.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    freqs: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    /// `gaussian`, `gmm[:c2:ratio]` or `row-gmm[:c2:ratio]`.
    #[arg(long)]
    noise: Option<String>,
    /// `complete`, `elements:FRACTION` or `rows:KEPT`.
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Strumer,
    StrumerDr,
    ToeplitzBaseline,
}

#[derive(Args)]
struct SolverArgs {
    /// Model order; defaults to the scenario's true order.
    #[arg(long)]
    order: Option<usize>,
    /// Data-fit exponent in [1, 2].
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Row-wise l_{2,p} data fit.
    #[arg(long)]
    row_wise: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "strumer")]
    method: SolveMethod,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "auto")]
    reduce: ReduceMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec as JSON; flags override its fields.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    reduce: Option<ReduceMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Zero the wall-time column so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Print the preset names and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct CrbArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MosArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    #[arg(long, default_value = "bic")]
    criterion: Criterion,
    #[arg(long, default_value = "auto")]
    reduce: ReduceMode,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` writes one score row per candidate; `json` adds the chosen frequencies.
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceMethod {
    Strumer,
    ToeplitzBaseline,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "strumer")]
    method: TraceMethod,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Numerical(String),
}

impl From<StrumerError> for CliError {
    fn from(e: StrumerError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Invalid(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(format!("json: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn parse_noise(text: &str) -> CliResult<NoiseModel> {
    let parts: Vec<&str> = text.split(':').collect();
    let mixture = |parts: &[&str]| -> CliResult<(f64, f64)> {
        match parts {
            [] => Ok((0.1, 100.0)),
            [c2, ratio] => {
                let c2 = c2.parse().map_err(|_| CliError::Invalid(format!("bad mixture weight {c2:?}")))?;
                let ratio = ratio.parse().map_err(|_| CliError::Invalid(format!("bad variance ratio {ratio:?}")))?;
                Ok((c2, ratio))
            }
            _ => Err(CliError::Invalid(format!("noise {text:?}: expected NAME or NAME:c2:ratio"))),
        }
    };
    match parts[0] {
        "gaussian" if parts.len() == 1 => Ok(NoiseModel::Gaussian { variance: 1.0 }),
        "gmm" => mixture(&parts[1..]).map(|(c2, r)| NoiseModel::Gmm { c2, var1: 1.0, var2: r }),
        "row-gmm" => mixture(&parts[1..]).map(|(c2, r)| NoiseModel::RowGmm { c2, var1: 1.0, var2: r }),
        _ => Err(CliError::Invalid(format!("unknown noise {text:?} (gaussian, gmm, row-gmm)"))),
    }
}

fn parse_mask(text: &str) -> CliResult<MaskPattern> {
    let bad = || CliError::Invalid(format!("unknown mask {text:?} (complete, elements:FRACTION, rows:KEPT)"));
    match text.split_once(':') {
        None if text == "complete" => Ok(MaskPattern::Complete),
        Some(("elements", v)) => Ok(MaskPattern::Elements { fraction: v.parse().map_err(|_| bad())? }),
        Some(("rows", v)) => Ok(MaskPattern::Rows { kept: v.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

fn load_scenario(source: &Source) -> CliResult<Scenario> {
    match (&source.input, &source.preset) {
        (Some(_), Some(_)) => Err(CliError::Invalid("give a scenario file or --preset, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            Ok(Scenario::from_json(&text)?)
        }
        (None, name) => Ok(preset(name.as_deref().unwrap_or("exp1"))?.base_scenario(source.seed).generate()?),
    }
}

fn solver_config(scenario: &Scenario, args: &SolverArgs, seed: u64) -> CliResult<(strumer_core::signal_model::Observation, SolverConfig)> {
    let obs = scenario.observation(args.p, args.row_wise)?;
    let mut cfg = SolverConfig::new(args.order.unwrap_or(scenario.freqs.len()), obs.objective);
    cfg.seed = seed;
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.eps_abs {
        cfg.eps_abs = v;
    }
    if let Some(v) = args.eps_rel {
        cfg.eps_rel = v;
    }
    Ok((obs, cfg))
}

fn truth(scenario: &Scenario) -> Option<&[f64]> {
    (!scenario.freqs.is_empty()).then_some(scenario.freqs.as_slice())
}

fn generate(args: GenerateArgs) -> CliResult<()> {
    let mut spec = preset(&args.preset)?.base_scenario(args.seed);
    if let Some(v) = args.samples {
        spec.samples = v;
    }
    if let Some(v) = args.channels {
        spec.channels = v;
    }
    if let Some(v) = args.freqs {
        spec.freqs = v;
    }
    if let Some(v) = args.snr {
        spec.snr_db = v;
    }
    if let Some(v) = args.noise.as_deref() {
        spec.noise = parse_noise(v)?;
    }
    if let Some(v) = args.mask.as_deref() {
        spec.mask = parse_mask(v)?;
    }
    let scenario = spec.generate()?;
    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "{}", scenario.to_json()?)?;
    out.flush()?;
    Ok(())
}

fn solve(args: SolveArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.source)?;
    let (obs, cfg) = solver_config(&scenario, &args.solver, args.source.seed)?;
    let (label, est) = match args.method {
        SolveMethod::Strumer => ("strumer", solve_reduced(&obs, &cfg, args.reduce)?),
        SolveMethod::StrumerDr => ("strumer-dr", solve_reduced(&obs, &cfg, ReduceMode::On)?),
        SolveMethod::ToeplitzBaseline => ("toeplitz-baseline", estimate_toeplitz(&obs, &cfg)?),
    };
    if est.diagnostics.as_ref().is_some_and(|d| !d.converged) {
        log::warn!("{label} stopped at the iteration limit without meeting the tolerances");
    }
    write_json(&EstimateDocument::new(label, &est, truth(&scenario)), args.out.as_deref())
}

fn experiment(args: ExperimentArgs) -> CliResult<()> {
    if args.list {
        let mut out = io::stdout().lock();
        for p in presets() {
            writeln!(out, "{}\t{} points x {} trials", p.name, p.sweep.len(), p.trials)?;
        }
        return Ok(());
    }
    let mut spec: ExperimentSpec = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::Invalid("give --preset or --config".into())),
    };
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.reduce {
        spec.reduce = v;
    }
    spec.validate()?;
    let resolved = serde_json::to_string_pretty(&spec)?;
    match &args.out {
        Some(path) => {
            let mut side = path.clone().into_os_string();
            side.push(".spec.json");
            std::fs::write(&side, format!("{resolved}\n"))?;
        }
        None => info!("resolved spec: {resolved}"),
    }
    let opts = RunOptions { threads: args.threads, record_timing: !args.no_timing };
    let table = run_experiment(&spec, opts)?;
    let mut out = open_out(args.out.as_deref())?;
    table.emit(args.format, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CrbDocument {
    noise_variance: f64,
    freqs: Vec<f64>,
    /// Per-frequency variance bounds, cycles squared.
    variances: Vec<f64>,
    /// Square roots of `variances`, comparable to an RMSE.
    root_crb: Vec<f64>,
    root_mean_crb: f64,
}

fn crb(args: CrbArgs) -> CliResult<()> {
    let s = load_scenario(&args.source)?;
    let sigma2 = s.noise.nominal_variance();
    let c = crb_frequencies(&s.freqs, &s.amplitudes, sigma2, &s.mask)?;
    let variances: Vec<f64> = (0..s.freqs.len()).map(|i| c[(i, i)]).collect();
    let doc = CrbDocument {
        noise_variance: sigma2,
        freqs: s.freqs.clone(),
        root_crb: variances.iter().map(|v| v.sqrt()).collect(),
        variances,
        root_mean_crb: root_mean_crb(&c),
    };
    write_json(&doc, args.out.as_deref())
}

#[derive(Serialize)]
struct MosDocument {
    criterion: Criterion,
    order: usize,
    true_order: usize,
    freqs: Vec<f64>,
    scores: Vec<OrderScore>,
}

fn mos(args: MosArgs) -> CliResult<()> {
    let s = load_scenario(&args.source)?;
    let obs = s.observation(2.0, false)?;
    let cfg = SolverConfig { seed: args.source.seed, ..SolverConfig::new(1, obs.objective) };
    let sel = select_order(&obs, args.k_max, args.criterion, &cfg, args.reduce)?;
    let freqs = sel
        .results
        .iter()
        .find(|(k, _)| *k == sel.order)
        .map(|(_, e)| e.freqs.clone())
        .unwrap_or_default();
    if args.format == Format::Csv {
        let mut w = csv::Writer::from_writer(open_out(args.out.as_deref())?);
        for score in &sel.scores {
            w.serialize(score).map_err(|e| CliError::Invalid(format!("csv: {e}")))?;
        }
        w.flush()?;
        info!("selected order {}", sel.order);
        return Ok(());
    }
    let doc = MosDocument { criterion: args.criterion, order: sel.order, true_order: s.freqs.len(), freqs, scores: sel.scores };
    write_json(&doc, args.out.as_deref())
}

fn trace(args: TraceArgs) -> CliResult<()> {
    let s = load_scenario(&args.source)?;
    let (obs, cfg) = solver_config(&s, &args.solver, args.source.seed)?;
    let mut sink = CsvTraceSink::new(open_out(args.out.as_deref())?);
    let out = match args.method {
        TraceMethod::Strumer => solve_with_sink(&obs, &cfg, &mut sink)?,
        TraceMethod::ToeplitzBaseline => solve_toeplitz_with_sink(&obs, &cfg, &mut sink)?,
    };
    sink.into_inner().flush()?;
    let d = &out.diagnostics;
    info!("{} iterations, converged: {}, terminal combined residual {:e}", d.iterations, d.converged, d.terminal_combined());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Crb(a) => crb(a),
        Command::Mos(a) => mos(a),
        Command::Trace(a) => trace(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
