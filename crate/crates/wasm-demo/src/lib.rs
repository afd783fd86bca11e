//! Browser bindings: simulate-and-estimate, convergence traces, and CRB curves.
//! Every export takes and returns JSON text; the `*_json` functions hold the
//! logic so it can be exercised off the browser.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use strumer_core::crb::{crb_frequencies, root_mean_crb};
use strumer_core::postprocess::{frequency_rmse, Matching};
use strumer_core::scenario::{Scenario, ScenarioSpec};
use strumer_core::signal_model::{snr_to_sigma, steering_vector, MaskPattern, NoiseModel, ObservationMask};
use strumer_core::solver::{solve, SolverConfig};
use strumer_core::toeplitz_baseline::solve_toeplitz;
use strumer_core::{c64, StrumerError};

const GRID: usize = 512;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DemoSettings {
    pub samples: usize,
    pub channels: usize,
    pub freqs: Vec<f64>,
    pub snr_db: f64,
    /// `gaussian` or `gmm`.
    pub noise: String,
    /// Fraction of entries observed; 1 is complete.
    pub observed: f64,
    pub p: f64,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for DemoSettings {
    fn default() -> Self {
        DemoSettings {
            samples: 45,
            channels: 3,
            freqs: vec![-0.2, 0.1, 0.11],
            snr_db: 10.0,
            noise: "gaussian".into(),
            observed: 1.0,
            p: 2.0,
            seed: 1,
            max_iters: 3000,
        }
    }
}

impl DemoSettings {
    fn scenario(&self) -> Result<Scenario, String> {
        let noise = match self.noise.as_str() {
            "gaussian" => NoiseModel::Gaussian { variance: 1.0 },
            "gmm" => NoiseModel::Gmm { c2: 0.1, var1: 1.0, var2: 100.0 },
            other => return Err(format!("unknown noise {other:?}")),
        };
        let mask = if self.observed >= 1.0 { MaskPattern::Complete } else { MaskPattern::Elements { fraction: self.observed } };
        let spec = ScenarioSpec {
            noise,
            mask,
            seed: self.seed,
            ..ScenarioSpec::new(self.samples, self.channels, self.freqs.clone(), self.snr_db)
        };
        spec.generate().map_err(text)
    }

    fn config(&self, scenario: &Scenario) -> Result<(strumer_core::signal_model::Observation, SolverConfig), String> {
        let obs = scenario.observation(self.p, false).map_err(text)?;
        let cfg = SolverConfig {
            max_iters: self.max_iters.max(1),
            seed: self.seed,
            ..SolverConfig::new(scenario.freqs.len(), obs.objective)
        };
        Ok((obs, cfg))
    }
}

fn text(e: StrumerError) -> String {
    e.to_string()
}

fn parse(settings: &str) -> Result<DemoSettings, String> {
    serde_json::from_str(settings).map_err(|e| format!("settings: {e}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EstimateView {
    truth: Vec<f64>,
    freqs: Vec<f64>,
    powers: Vec<f64>,
    rmse: Option<f64>,
    root_crb: Option<f64>,
    iterations: usize,
    converged: bool,
    /// Channel-summed periodogram of the observed data on a uniform grid over `[-1/2, 1/2)`.
    grid: Vec<f64>,
    periodogram: Vec<f64>,
}

fn periodogram(s: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let grid: Vec<f64> = (0..GRID).map(|i| i as f64 / GRID as f64 - 0.5).collect();
    let values = grid
        .iter()
        .map(|&f| {
            let a = steering_vector(f, s.samples);
            (0..s.channels)
                .map(|c| {
                    let acc: c64 = (0..s.samples).map(|j| a[j].conj() * s.y[(j, c)]).sum();
                    acc.norm_sqr()
                })
                .sum::<f64>()
                / s.samples as f64
        })
        .collect();
    (grid, values)
}

pub fn estimate_json(settings: &str) -> Result<String, String> {
    let settings = parse(settings)?;
    let s = settings.scenario()?;
    let (obs, cfg) = settings.config(&s)?;
    let est = strumer_core::solver::estimate(&obs, &cfg).map_err(text)?;
    let d = est.diagnostics.as_ref();
    let root_crb = crb_frequencies(&s.freqs, &s.amplitudes, s.noise.nominal_variance(), &s.mask)
        .ok()
        .map(|c| root_mean_crb(&c));
    let (grid, periodogram) = periodogram(&s);
    to_json(&EstimateView {
        truth: s.freqs.clone(),
        rmse: frequency_rmse(&est.freqs, &s.freqs, Matching::Optimal).ok(),
        freqs: est.freqs,
        powers: est.powers,
        root_crb,
        iterations: d.map_or(0, |d| d.iterations),
        converged: d.is_some_and(|d| d.converged),
        grid,
        periodogram,
    })
}

#[derive(Serialize)]
struct ConvergenceView {
    strumer: Vec<f64>,
    toeplitz_baseline: Vec<f64>,
    strumer_converged: bool,
    baseline_converged: bool,
}

pub fn convergence_json(settings: &str) -> Result<String, String> {
    let settings = parse(settings)?;
    let s = settings.scenario()?;
    let (obs, cfg) = settings.config(&s)?;
    let ours = solve(&obs, &cfg).map_err(text)?;
    let base = solve_toeplitz(&obs, &cfg).map_err(text)?;
    to_json(&ConvergenceView {
        strumer: ours.diagnostics.combined_trace(),
        toeplitz_baseline: base.diagnostics.combined_trace(),
        strumer_converged: ours.diagnostics.converged,
        baseline_converged: base.diagnostics.converged,
    })
}

#[derive(Serialize)]
struct CrbView {
    snr_db: Vec<f64>,
    /// Bound with the scenario's observation mask.
    masked: Vec<f64>,
    complete: Vec<f64>,
}

/// The bound is linear in the noise variance, so one evaluation at unit
/// variance is rescaled across the SNR range.
pub fn crb_curve_json(settings: &str, snr_lo: f64, snr_hi: f64, step: f64) -> Result<String, String> {
    if !(step > 0.0) || !(snr_hi >= snr_lo) || (snr_hi - snr_lo) / step > 1000.0 {
        return Err("need snr_lo <= snr_hi and a positive step giving at most 1000 points".into());
    }
    let settings = parse(settings)?;
    let s = settings.scenario()?;
    let unit = |mask: &ObservationMask| {
        crb_frequencies(&s.freqs, &s.amplitudes, 1.0, mask).map(|c| root_mean_crb(&c)).map_err(text)
    };
    let masked = unit(&s.mask)?;
    let complete = unit(&ObservationMask::complete(s.samples, s.channels))?;
    let snr: Vec<f64> = (0..)
        .map(|i| snr_lo + step * i as f64)
        .take_while(|v| *v <= snr_hi + 1e-9)
        .collect();
    let scale = |v: f64| snr.iter().map(|&x| v * snr_to_sigma(x).sqrt()).collect();
    to_json(&CrbView { masked: scale(masked), complete: scale(complete), snr_db: snr })
}

#[wasm_bindgen]
pub fn estimate(settings: &str) -> Result<String, JsError> {
    estimate_json(settings).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn convergence(settings: &str) -> Result<String, JsError> {
    convergence_json(settings).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn crb_curve(settings: &str, snr_lo: f64, snr_hi: f64, step: f64) -> Result<String, JsError> {
    crb_curve_json(settings, snr_lo, snr_hi, step).map_err(|e| JsError::new(&e))
}
