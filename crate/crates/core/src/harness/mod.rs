//! Monte Carlo experiments: specs, built-in presets, trial orchestration and
//! aggregation into result tables.
//!
//! Every trial derives its own seed from the base seed, the sweep point index
//! and the trial index, and all methods of a trial see the same realized
//! scenario. Results are reduced in trial order, so a table depends only on
//! the experiment definition and the base seed, not on the number of worker threads.

mod table;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::crb::crb_frequencies;
use crate::model_order::{select_order, Criterion};
use crate::postprocess::{matched_rmse, EstimationResult, Matching};
use crate::reduction::{solve_reduced, ReduceMode};
use crate::scenario::{Scenario, ScenarioSpec};
use crate::signal_model::{wrapped_gap, MaskPattern, NoiseModel, Objective};
use crate::solver::SolverConfig;
use crate::toeplitz_baseline::estimate_toeplitz;
use crate::{Result, StrumerError};

pub use table::{Format, ResultRow, ResultTable, CSV_HEADER};

/// Trials per sweep point unless overridden.
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Strumer,
    /// Always solved on channel-reduced data.
    StrumerDr,
    ToeplitzBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    /// Exponent of the data fit; 2 is the Gaussian objective.
    #[serde(default = "two")]
    pub p: f64,
    /// Row-wise `l_{2,p}` instead of entrywise `l_p`.
    #[serde(default)]
    pub row_wise: bool,
}

fn two() -> f64 {
    2.0
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec { method, p: 2.0, row_wise: false }
    }

    pub fn with_p(method: Method, p: f64) -> Self {
        MethodSpec { method, p, row_wise: false }
    }

    pub fn label(&self) -> String {
        let base = match self.method {
            Method::Strumer => "strumer",
            Method::StrumerDr => "strumer-dr",
            Method::ToeplitzBaseline => "toeplitz-baseline",
        };
        match (self.row_wise, self.p == 2.0) {
            (false, true) => base.to_string(),
            (false, false) => format!("{base}-p{}", self.p),
            (true, _) => format!("{base}-row-p{}", self.p),
        }
    }
}

/// The swept quantity and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum Sweep {
    SnrDb(Vec<f64>),
    Channels(Vec<usize>),
    /// Gap between the last two frequencies, in units of `1/N`.
    Separation(Vec<f64>),
    /// Mode 2: fraction of entries observed.
    ObservedFraction(Vec<f64>),
    /// Mode 1: number of rows observed in every channel.
    ObservedRows(Vec<usize>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::SnrDb(v) | Sweep::Separation(v) | Sweep::ObservedFraction(v) => v.len(),
            Sweep::Channels(v) | Sweep::ObservedRows(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self) -> &'static str {
        match self {
            Sweep::SnrDb(_) => "snr_db",
            Sweep::Channels(_) => "channels",
            Sweep::Separation(_) => "separation_times_n",
            Sweep::ObservedFraction(_) => "observed_fraction",
            Sweep::ObservedRows(_) => "observed_rows",
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::SnrDb(v) | Sweep::Separation(v) | Sweep::ObservedFraction(v) => v[i],
            Sweep::Channels(v) | Sweep::ObservedRows(v) => v[i] as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    /// Solve with the true order and score the frequencies.
    Estimate,
    /// Select the order by an information criterion; success means the true
    /// order was chosen.
    OrderSelection { k_max: usize, criterion: Criterion },
}

/// Solver knobs exposed to experiment files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    pub lambda_init_scale: f64,
    pub mu0: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let c = SolverConfig::new(1, Objective::Fro);
        SolverSettings {
            eps_abs: c.eps_abs,
            eps_rel: c.eps_rel,
            max_iters: c.max_iters,
            lambda_init_scale: c.lambda_init_scale,
            mu0: c.mu0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub samples: usize,
    pub channels: usize,
    /// Ignored when `doa_degrees` is set.
    #[serde(default)]
    pub freqs: Vec<f64>,
    /// Source directions for a half-wavelength uniform array; frequencies are
    /// `sin(theta) / 2` and errors are reported in degrees.
    #[serde(default)]
    pub doa_degrees: Option<Vec<f64>>,
    pub snr_db: f64,
    pub noise: NoiseModel,
    pub mask: MaskPattern,
    pub sweep: Sweep,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "estimate_task")]
    pub task: Task,
    pub trials: usize,
    pub seed: u64,
    /// Applies to the plain StruMER method.
    #[serde(default)]
    pub reduce: ReduceMode,
    #[serde(default)]
    pub solver: SolverSettings,
}

fn estimate_task() -> Task {
    Task::Estimate
}

/// `f = sin(theta) / 2` for `theta` in degrees.
pub fn doa_to_frequency(theta_deg: f64) -> f64 {
    theta_deg.to_radians().sin() / 2.0
}

/// Inverse of [`doa_to_frequency`], clamping `|2f|` to 1.
pub fn frequency_to_doa(f: f64) -> f64 {
    (2.0 * f).clamp(-1.0, 1.0).asin().to_degrees()
}

/// One realized sweep point.
#[derive(Debug, Clone)]
struct PointSetup {
    scenario: ScenarioSpec,
    /// Ground truth in reporting units (cycles, or degrees).
    truth: Vec<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(StrumerError::InvalidInput("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(StrumerError::InvalidInput("no methods given".into()));
        }
        for m in &self.methods {
            if !(1.0..=2.0).contains(&m.p) {
                return Err(StrumerError::InvalidInput(format!("exponent {} outside [1, 2]", m.p)));
            }
            if m.method == Method::StrumerDr && (m.p != 2.0 || m.row_wise) {
                return Err(StrumerError::InvalidInput("strumer-dr needs the Frobenius objective".into()));
            }
            if m.method == Method::ToeplitzBaseline && m.row_wise {
                return Err(StrumerError::InvalidInput("the Toeplitz baseline is entrywise only".into()));
            }
            if matches!(self.task, Task::OrderSelection { .. }) && (m.method == Method::ToeplitzBaseline || m.p != 2.0) {
                return Err(StrumerError::InvalidInput("order selection runs StruMER with the Frobenius objective".into()));
            }
        }
        if self.doa_degrees.is_some() && matches!(self.sweep, Sweep::Separation(_)) {
            return Err(StrumerError::InvalidInput("separation sweeps need frequencies, not directions".into()));
        }
        if let Some(theta) = &self.doa_degrees {
            if theta.iter().any(|t| !(-90.0..90.0).contains(t)) {
                return Err(StrumerError::InvalidInput("directions must lie in (-90, 90) degrees".into()));
            }
        }
        // each point must describe a valid scenario
        for i in 0..self.sweep.len() {
            let setup = self.point(i, 0);
            let s = &setup.scenario;
            crate::signal_model::FrequencyAmplitudeModel::new(
                s.freqs.clone(),
                crate::CMat::zeros(s.freqs.len(), s.channels),
            )?
            .check_samples(s.samples)?;
            if let Task::OrderSelection { k_max, .. } = self.task {
                if k_max == 0 || k_max >= s.samples.div_ceil(2) {
                    return Err(StrumerError::InvalidInput(format!("K_max = {k_max} out of range")));
                }
            }
        }
        Ok(())
    }

    /// The scenario before any sweep value is applied.
    pub fn base_scenario(&self, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            samples: self.samples,
            channels: self.channels,
            freqs: self.base_freqs(),
            snr_db: self.snr_db,
            noise: self.noise,
            mask: self.mask,
            seed,
        }
    }

    /// The scenario of sweep point `index`.
    pub fn scenario_at(&self, index: usize, seed: u64) -> ScenarioSpec {
        self.point(index, seed).scenario
    }

    fn base_freqs(&self) -> Vec<f64> {
        match &self.doa_degrees {
            Some(theta) => theta.iter().map(|&t| doa_to_frequency(t)).collect(),
            None => self.freqs.clone(),
        }
    }

    fn point(&self, index: usize, seed: u64) -> PointSetup {
        let mut s = self.base_scenario(seed);
        match &self.sweep {
            Sweep::SnrDb(v) => s.snr_db = v[index],
            Sweep::Channels(v) => s.channels = v[index],
            Sweep::Separation(v) => {
                let k = s.freqs.len();
                if k >= 2 {
                    s.freqs[k - 1] = crate::postprocess::wrap_frequency(s.freqs[k - 2] + v[index] / self.samples as f64);
                }
            }
            Sweep::ObservedFraction(v) => s.mask = MaskPattern::Elements { fraction: v[index] },
            Sweep::ObservedRows(v) => s.mask = MaskPattern::Rows { kept: v[index] },
        }
        let truth = match &self.doa_degrees {
            Some(theta) => theta.clone(),
            None => s.freqs.clone(),
        };
        PointSetup { scenario: s, truth }
    }

    fn in_degrees(&self) -> bool {
        self.doa_degrees.is_some()
    }

    fn solver_config(&self, order: usize, objective: Objective, seed: u64) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            eps_abs: s.eps_abs,
            eps_rel: s.eps_rel,
            max_iters: s.max_iters,
            lambda_init_scale: s.lambda_init_scale,
            mu0: s.mu0,
            seed,
            ..SolverConfig::new(order, objective)
        }
    }
}

/// Mixes the base seed with the point and trial indices.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    let mut z = base ^ ((point as u64) << 32 | trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, Default)]
struct Outcome {
    rmse: Option<f64>,
    success: bool,
    failed: bool,
    iterations: f64,
    wall_time_s: f64,
}

/// Mean of `trace(CRB) / K` for one trial, in reporting units squared.
fn trial_crb(spec: &ExperimentSpec, scenario: &Scenario) -> Option<f64> {
    let sigma2 = scenario.noise.nominal_variance();
    let crb = crb_frequencies(&scenario.freqs, &scenario.amplitudes, sigma2, &scenario.mask).ok()?;
    let k = scenario.freqs.len();
    let total: f64 = match &spec.doa_degrees {
        Some(theta) => (0..k)
            .map(|i| {
                let slope = theta[i].to_radians().cos() * std::f64::consts::PI / 360.0;
                crb[(i, i)] / (slope * slope)
            })
            .sum(),
        None => (0..k).map(|i| crb[(i, i)]).sum(),
    };
    Some(total / k as f64)
}

fn score(spec: &ExperimentSpec, est: &[f64], truth: &[f64]) -> Option<f64> {
    if est.len() != truth.len() {
        return None;
    }
    if spec.in_degrees() {
        let theta: Vec<f64> = est.iter().map(|&f| frequency_to_doa(f)).collect();
        matched_rmse(&theta, truth, Matching::Optimal, |a, b| a - b).ok()
    } else {
        matched_rmse(est, truth, Matching::Optimal, wrapped_gap).ok()
    }
}

/// Half the smallest pairwise gap of the truth: an estimate within it of
/// every true value resolves all components.
fn resolution_radius(spec: &ExperimentSpec, truth: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..truth.len() {
        for j in 0..i {
            let d = if spec.in_degrees() { truth[i] - truth[j] } else { wrapped_gap(truth[i], truth[j]) };
            gap = gap.min(d.abs());
        }
    }
    if gap.is_finite() {
        gap / 2.0
    } else if spec.in_degrees() {
        90.0
    } else {
        0.25
    }
}

fn run_method(spec: &ExperimentSpec, scenario: &Scenario, truth: &[f64], method: &MethodSpec, seed: u64) -> Outcome {
    let k = scenario.freqs.len();
    let result: Result<(EstimationResult, bool)> = (|| {
        let obs = scenario.observation(method.p, method.row_wise)?;
        let cfg = spec.solver_config(k, obs.objective, seed);
        match (spec.task, method.method) {
            (Task::Estimate, Method::Strumer) => Ok((solve_reduced(&obs, &cfg, spec.reduce)?, true)),
            (Task::Estimate, Method::StrumerDr) => Ok((solve_reduced(&obs, &cfg, ReduceMode::On)?, true)),
            (Task::Estimate, Method::ToeplitzBaseline) => Ok((estimate_toeplitz(&obs, &cfg)?, true)),
            (Task::OrderSelection { k_max, criterion }, m) => {
                let reduce = if m == Method::StrumerDr { ReduceMode::On } else { spec.reduce };
                let sel = select_order(&obs, k_max, criterion, &cfg, reduce)?;
                let chosen = sel.order == k;
                let (_, est) = sel.results.into_iter().find(|(order, _)| *order == sel.order).expect("chosen order solved");
                Ok((est, chosen))
            }
        }
    })();
    match result {
        Ok((est, order_ok)) => {
            let d = est.diagnostics.as_ref();
            let rmse = if order_ok { score(spec, &est.freqs, truth) } else { None };
            let success = match spec.task {
                Task::Estimate => rmse.is_some_and(|r| r < resolution_radius(spec, truth)),
                Task::OrderSelection { .. } => order_ok,
            };
            Outcome {
                rmse,
                success,
                failed: false,
                iterations: d.map_or(0.0, |d| d.iterations as f64),
                wall_time_s: d.map_or(0.0, |d| d.wall_time_s),
            }
        }
        Err(e) => {
            warn!("{} failed on seed {seed}: {e}", method.label());
            Outcome { failed: true, ..Outcome::default() }
        }
    }
}

/// Execution settings that do not change results.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads for trials; 0 picks the default pool.
    pub threads: usize,
    /// When false, the wall-time column is zero so that tables are byte-stable.
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 0, record_timing: true }
    }
}

struct TrialRecord {
    crb: Option<f64>,
    outcomes: Vec<Outcome>,
}

fn run_trial(spec: &ExperimentSpec, point: usize, trial: usize) -> TrialRecord {
    let seed = trial_seed(spec.seed, point, trial);
    let setup = spec.point(point, seed);
    match setup.scenario.generate() {
        Ok(scenario) => TrialRecord {
            crb: trial_crb(spec, &scenario),
            outcomes: spec.methods.iter().map(|m| run_method(spec, &scenario, &setup.truth, m, seed)).collect(),
        },
        Err(e) => {
            warn!("scenario generation failed on seed {seed}: {e}");
            TrialRecord {
                crb: None,
                outcomes: vec![Outcome { failed: true, ..Outcome::default() }; spec.methods.len()],
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(threads: usize, jobs: Vec<(usize, usize)>, f: impl Fn(usize, usize) -> T + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StrumerError::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.into_par_iter().map(|(p, t)| f(p, t)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(_threads: usize, jobs: Vec<(usize, usize)>, f: impl Fn(usize, usize) -> T) -> Result<Vec<T>> {
    Ok(jobs.into_iter().map(|(p, t)| f(p, t)).collect())
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs every (point, trial) pair and aggregates one row per (point, method).
pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<ResultTable> {
    spec.validate()?;
    info!("experiment {}: {} points x {} trials", spec.name, spec.sweep.len(), spec.trials);
    let jobs: Vec<(usize, usize)> =
        (0..spec.sweep.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let records = map_trials(opts.threads, jobs, |p, t| run_trial(spec, p, t))?;

    let mut rows = Vec::new();
    for (p, chunk) in records.chunks(spec.trials.max(1)).enumerate().take(spec.sweep.len()) {
        let crbs: Vec<f64> = chunk.iter().filter_map(|r| r.crb).collect();
        let root_crb = mean(&crbs).map(f64::sqrt);
        for (m, method) in spec.methods.iter().enumerate() {
            let outs: Vec<&Outcome> = chunk.iter().map(|r| &r.outcomes[m]).collect();
            let mut rmses: Vec<f64> = outs.iter().filter_map(|o| o.rmse).collect();
            let done: Vec<&&Outcome> = outs.iter().filter(|o| !o.failed).collect();
            let failures = outs.len() - done.len();
            if 2 * failures > outs.len() {
                warn!("{} at {} = {}: {failures}/{} trials failed", method.label(), spec.sweep.axis(), spec.sweep.value(p), outs.len());
            }
            let iters: Vec<f64> = done.iter().map(|o| o.iterations).collect();
            let times: Vec<f64> = done.iter().map(|o| o.wall_time_s).collect();
            let row = ResultRow {
                point: spec.sweep.value(p),
                method: method.label(),
                mean_rmse: mean(&rmses),
                median_rmse: median(&mut rmses),
                success_rate: outs.iter().filter(|o| o.success).count() as f64 / outs.len() as f64,
                mean_iterations: mean(&iters).unwrap_or(0.0),
                mean_wall_time_s: if opts.record_timing { mean(&times).unwrap_or(0.0) } else { 0.0 },
                root_crb,
                failures,
            };
            debug_assert!(row.mean_rmse.is_none_or(|v| v >= 0.0));
            rows.push(row);
        }
    }
    Ok(ResultTable {
        experiment: spec.name.clone(),
        axis: spec.sweep.axis().to_string(),
        rmse_unit: if spec.in_degrees() { "deg" } else { "cycles" }.to_string(),
        trials: spec.trials,
        rows,
    })
}

const CLOSE_FREQS: [f64; 3] = [-0.2, 0.1, 0.11];

fn snr_range(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(f64::from).collect()
}

fn base(name: &str) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        samples: 45,
        channels: 3,
        freqs: CLOSE_FREQS.to_vec(),
        doa_degrees: None,
        snr_db: 10.0,
        noise: NoiseModel::Gaussian { variance: 1.0 },
        mask: MaskPattern::Complete,
        sweep: Sweep::SnrDb(vec![10.0]),
        methods: vec![MethodSpec::new(Method::Strumer), MethodSpec::new(Method::ToeplitzBaseline)],
        task: Task::Estimate,
        trials: DEFAULT_TRIALS,
        seed: 0,
        reduce: ReduceMode::Off,
        solver: SolverSettings::default(),
    }
}

fn impulsive() -> NoiseModel {
    NoiseModel::Gmm { c2: 0.1, var1: 1.0, var2: 100.0 }
}

/// Built-in experiment definitions.
pub fn presets() -> Vec<ExperimentSpec> {
    let lp = |p| MethodSpec::with_p(Method::Strumer, p);
    vec![
        ExperimentSpec { trials: 10, ..base("exp1") },
        ExperimentSpec { sweep: Sweep::Channels(vec![1, 2, 3, 4, 6, 8]), ..base("exp2") },
        ExperimentSpec {
            sweep: Sweep::Separation((1..=28).map(|i| 0.05 * i as f64).collect()),
            ..base("exp3")
        },
        ExperimentSpec { sweep: Sweep::SnrDb(snr_range(0, 35, 5)), ..base("exp4") },
        ExperimentSpec {
            mask: MaskPattern::Elements { fraction: 0.8 },
            sweep: Sweep::ObservedFraction(vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
            ..base("exp5")
        },
        ExperimentSpec {
            mask: MaskPattern::Rows { kept: 40 },
            sweep: Sweep::ObservedRows(vec![25, 30, 35, 40, 45]),
            ..base("exp5-rows")
        },
        ExperimentSpec {
            noise: impulsive(),
            sweep: Sweep::SnrDb(snr_range(0, 30, 5)),
            methods: vec![lp(1.1), lp(1.5), lp(2.0)],
            ..base("exp6")
        },
        ExperimentSpec {
            freqs: vec![-0.2, 0.1, 0.13],
            noise: impulsive(),
            sweep: Sweep::SnrDb(snr_range(0, 30, 5)),
            methods: vec![lp(1.1), lp(1.5), lp(2.0)],
            ..base("exp6-far")
        },
        ExperimentSpec {
            samples: 15,
            channels: 10,
            freqs: Vec::new(),
            doa_degrees: Some(vec![-1.0, 5.0, 40.0]),
            noise: impulsive(),
            mask: MaskPattern::Elements { fraction: 0.8 },
            sweep: Sweep::SnrDb(snr_range(0, 30, 5)),
            methods: vec![lp(1.0), lp(2.0)],
            ..base("exp7")
        },
        ExperimentSpec {
            samples: 15,
            channels: 10,
            freqs: Vec::new(),
            doa_degrees: Some(vec![-1.0, 5.0, 40.0]),
            noise: impulsive(),
            mask: MaskPattern::Rows { kept: 13 },
            sweep: Sweep::SnrDb(snr_range(0, 30, 5)),
            methods: vec![lp(1.0), lp(2.0)],
            ..base("exp7-sla")
        },
        ExperimentSpec {
            samples: 15,
            freqs: vec![-0.2, 0.1, 0.3],
            sweep: Sweep::Channels(vec![50, 100, 150, 200, 250, 300]),
            methods: vec![MethodSpec::new(Method::Strumer), MethodSpec::new(Method::StrumerDr)],
            ..base("exp8")
        },
        ExperimentSpec {
            sweep: Sweep::SnrDb(snr_range(0, 35, 5)),
            methods: vec![MethodSpec::new(Method::Strumer)],
            task: Task::OrderSelection { k_max: 5, criterion: Criterion::Bic },
            ..base("exp9")
        },
    ]
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    presets().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<String> = presets().into_iter().map(|p| p.name).collect();
        StrumerError::InvalidInput(format!("unknown preset {name:?}; known: {}", names.join(", ")))
    })
}
