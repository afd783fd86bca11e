//! Information-criterion model-order selection over repeated solves.
//!
//! For each candidate `K` the data are fitted, `sigma^2` is concentrated out
//! as the mean squared residual over observed entries, and
//! `-2 ln p = 2 |Omega| (ln(pi sigma^2) + 1)` is penalized by `eta n_K`.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::linalg::frob_norm_sq;
use crate::postprocess::EstimationResult;
use crate::reduction::{solve_reduced, ReduceMode};
use crate::signal_model::{vandermonde, Observation};
use crate::solver::SolverConfig;
use crate::{CMat, Result, StrumerError};

/// Residual variances are floored at this fraction of the mean observed data
/// power, so that candidates fitting noiseless data to rounding level tie and
/// the penalty decides.
const SIGMA2_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl Criterion {
    /// Number of real parameters for order `k` with `l` channels.
    pub fn parameters(self, k: usize, l: usize) -> f64 {
        match self {
            Criterion::Aic => ((2 * l + 1) * k + 1) as f64,
            Criterion::Bic => ((2 * l + 3) * k + 1) as f64,
        }
    }

    /// Penalty weight; BIC counts real observations, `2 |Omega|`.
    pub fn weight(self, observed: usize) -> f64 {
        match self {
            Criterion::Aic => 2.0,
            Criterion::Bic => (2.0 * observed as f64).ln(),
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = StrumerError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(StrumerError::invalid(format!("unknown criterion {other:?} (aic, bic)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderScore {
    pub order: usize,
    pub sigma2: f64,
    pub neg2_loglik: f64,
    pub penalty: f64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct OrderSelection {
    pub order: usize,
    /// One entry per candidate that solved, ascending in order.
    pub scores: Vec<OrderScore>,
    pub results: Vec<(usize, EstimationResult)>,
}

/// Mean squared residual of `A(f) S` against the observed entries.
pub fn residual_variance(est: &EstimationResult, obs: &Observation) -> f64 {
    let fit: CMat = vandermonde(&est.freqs, obs.samples()) * &est.amplitudes;
    let mut acc = 0.0;
    for c in 0..obs.channels() {
        for j in obs.mask.observed_rows(c) {
            acc += (fit[(j, c)] - obs.y[(j, c)]).norm_sqr();
        }
    }
    acc / obs.mask.observed_count() as f64
}

/// Score of one fitted candidate.
pub fn score_candidate(est: &EstimationResult, obs: &Observation, criterion: Criterion) -> OrderScore {
    let observed = obs.mask.observed_count();
    let power = frob_norm_sq(obs.y.as_ref()) / observed as f64;
    let sigma2 = residual_variance(est, obs).max(SIGMA2_FLOOR * power).max(f64::MIN_POSITIVE);
    let k = est.freqs.len();
    let neg2_loglik = 2.0 * observed as f64 * ((PI * sigma2).ln() + 1.0);
    let penalty = criterion.weight(observed) * criterion.parameters(k, obs.channels());
    OrderScore { order: k, sigma2, neg2_loglik, penalty, score: neg2_loglik + penalty }
}

/// Fits every `K` in `1..=k_max` independently and returns the minimizer of
/// the criterion, preferring the smaller order on ties. Candidates whose solve
/// fails are skipped with a warning.
pub fn select_order(
    obs: &Observation,
    k_max: usize,
    criterion: Criterion,
    base: &SolverConfig,
    reduce: ReduceMode,
) -> Result<OrderSelection> {
    if !obs.objective.is_gaussian() {
        return Err(StrumerError::invalid("order selection needs a Frobenius objective"));
    }
    let n = obs.samples().div_ceil(2);
    if k_max == 0 || k_max >= n {
        return Err(StrumerError::invalid(format!("K_max = {k_max} must satisfy 1 <= K_max < n = {n}")));
    }
    let fits = candidates(k_max, |k| {
        let cfg = SolverConfig { order: k, objective: obs.objective, ..base.clone() };
        solve_reduced(obs, &cfg, reduce)
    });
    let mut scores = Vec::new();
    let mut results = Vec::new();
    for (k, fit) in (1..=k_max).zip(fits) {
        match fit {
            Ok(est) => {
                scores.push(score_candidate(&est, obs, criterion));
                results.push((k, est));
            }
            Err(e) => warn!("order {k} excluded: {e}"),
        }
    }
    let best = scores
        .iter()
        .fold(None::<&OrderScore>, |acc, s| match acc {
            Some(a) if a.score <= s.score => Some(a),
            _ => Some(s),
        })
        .ok_or_else(|| StrumerError::Singular("every candidate order failed".into()))?;
    Ok(OrderSelection { order: best.order, scores, results })
}

#[cfg(feature = "parallel")]
fn candidates<T: Send>(k_max: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (1..=k_max).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn candidates<T>(k_max: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (1..=k_max).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{
        complex_gaussian_matrix, make_mask, observe, sample_noise, snr_to_sigma, synthesize, FrequencyAmplitudeModel,
        MaskPattern, NoiseModel, Objective, ObservationMask,
    };
    use crate::c64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(freqs: &[f64], n: usize, l: usize, snr: Option<f64>, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = FrequencyAmplitudeModel::random_amplitudes(freqs.to_vec(), l, &mut rng).unwrap();
        let x = synthesize(&model, n);
        let e = match snr {
            Some(s) => sample_noise(&NoiseModel::Gaussian { variance: snr_to_sigma(s) }, n, l, &mut rng).unwrap(),
            None => CMat::zeros(n, l),
        };
        observe(&x, &e, ObservationMask::complete(n, l), Objective::Fro).unwrap()
    }

    #[test]
    fn penalty_profiles() {
        assert_eq!(Criterion::Aic.parameters(3, 3), 22.0);
        assert_eq!(Criterion::Bic.parameters(3, 3), 28.0);
        assert_eq!(Criterion::Aic.weight(135), 2.0);
        assert!((Criterion::Bic.weight(135) - 270f64.ln()).abs() < 1e-15);
        assert_eq!("BIC".parse::<Criterion>().unwrap(), Criterion::Bic);
    }

    #[test]
    fn likelihood_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = complex_gaussian_matrix(9, 2, 1.0, &mut rng);
        let obs = Observation::new(y.clone(), ObservationMask::complete(9, 2), Objective::Fro).unwrap();
        let est = EstimationResult {
            freqs: vec![0.1],
            amplitudes: CMat::from_fn(1, 2, |_, c| c64::new(0.3 * c as f64, 0.1)),
            powers: vec![1.0],
            diagnostics: None,
        };
        let s = score_candidate(&est, &obs, Criterion::Bic);
        let fit = vandermonde(&[0.1], 9) * &est.amplitudes;
        let rss = frob_norm_sq((&fit - &y).as_ref());
        let sigma2 = rss / 18.0;
        // -2 ln p with the Gaussian density, evaluated directly
        let direct = 2.0 * 18.0 * (PI * sigma2).ln() + 2.0 * rss / sigma2;
        assert!((s.sigma2 - sigma2).abs() < 1e-14);
        assert!((s.neg2_loglik - direct).abs() < 1e-10 * direct.abs());
        assert!((s.penalty - 36f64.ln() * 8.0).abs() < 1e-12);
        assert!(s.score.is_finite());
    }

    #[test]
    fn masked_scores_count_observed_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = complex_gaussian_matrix(9, 2, 1.0, &mut rng);
        let mask = make_mask(MaskPattern::Elements { fraction: 0.5 }, 9, 2, &mut rng).unwrap();
        let obs = Observation::new(y, mask, Objective::MaskedFro).unwrap();
        let est = EstimationResult {
            freqs: vec![0.2],
            amplitudes: CMat::zeros(1, 2),
            powers: vec![0.0],
            diagnostics: None,
        };
        let s = score_candidate(&est, &obs, Criterion::Bic);
        let m = obs.mask.observed_count() as f64;
        assert!((s.sigma2 - frob_norm_sq(obs.y.as_ref()) / m).abs() < 1e-14);
        assert!((s.penalty - (2.0 * m).ln() * 8.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_two_tones() {
        let obs = scenario(&[-0.25, 0.15], 21, 2, None, 3);
        let cfg = SolverConfig { eps_abs: 1e-9, eps_rel: 1e-10, ..SolverConfig::new(1, Objective::Fro) };
        let sel = select_order(&obs, 5, Criterion::Bic, &cfg, ReduceMode::Off).unwrap();
        assert_eq!(sel.order, 2, "{:?}", sel.scores);
        assert_eq!(sel.scores.len(), 5);
        assert!(sel.scores.iter().all(|s| s.score.is_finite()));
    }

    #[test]
    fn pure_noise_picks_the_smallest_order() {
        let obs = scenario(&[0.1], 15, 2, None, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Observation::new(complex_gaussian_matrix(15, 2, 1.0, &mut rng), obs.mask.clone(), Objective::Fro).unwrap();
        let sel = select_order(&noise, 3, Criterion::Bic, &SolverConfig::new(1, Objective::Fro), ReduceMode::Off).unwrap();
        assert_eq!(sel.order, 1, "{:?}", sel.scores);
    }

    #[test]
    fn rejects_bad_arguments() {
        let obs = scenario(&[0.1], 9, 1, Some(20.0), 6);
        let cfg = SolverConfig::new(1, Objective::Fro);
        assert!(select_order(&obs, 0, Criterion::Aic, &cfg, ReduceMode::Off).is_err());
        assert!(select_order(&obs, 5, Criterion::Aic, &cfg, ReduceMode::Off).is_err());
        let lp = Observation { objective: Objective::Lp { p: 1.5 }, ..obs };
        assert!(select_order(&lp, 2, Criterion::Aic, &cfg, ReduceMode::Off).is_err());
    }
}
