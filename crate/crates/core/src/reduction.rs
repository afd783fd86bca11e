//! Channel reduction for Gaussian objectives when `L >> N`.
//!
//! The Frobenius data fit only sees `Y` through `Y Y^H` up to a unitary
//! acting on the channels, so `Y` can be replaced by the `N x N` Hermitian
//! square root `Y_R = (Y Y^H)^{1/2}` without changing the frequencies.

use serde::{Deserialize, Serialize};

use crate::linalg::hermitian_eigen;
use crate::postprocess::{extract, EstimationResult};
use crate::signal_model::{MaskPattern, Objective, Observation, ObservationMask};
use crate::solver::{estimate, solve, SolverConfig};
use crate::{CMat, Result, StrumerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceMode {
    Off,
    /// Reduce when `L > 2N`.
    #[default]
    Auto,
    On,
}

impl ReduceMode {
    /// Whether data of this shape would be reduced; never when `L <= N`.
    pub fn applies(self, samples: usize, channels: usize) -> bool {
        match self {
            ReduceMode::Off => false,
            ReduceMode::Auto => channels > 2 * samples,
            ReduceMode::On => channels > samples,
        }
    }
}

impl std::str::FromStr for ReduceMode {
    type Err = StrumerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(ReduceMode::Off),
            "auto" => Ok(ReduceMode::Auto),
            "on" => Ok(ReduceMode::On),
            other => Err(StrumerError::invalid(format!("unknown reduce mode {other:?} (off, auto, on)"))),
        }
    }
}

/// `(Y Y^H)^{1/2}` with negative rounding eigenvalues clipped to zero.
pub fn reduce_data(y: &CMat) -> Result<CMat> {
    let gram = y * y.adjoint();
    let (vals, vecs) = hermitian_eigen(gram.as_ref())?;
    let n = y.nrows();
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let scaled = CMat::from_fn(n, n, |i, j| vecs[(i, j)] * roots[j]);
    Ok(&scaled * vecs.adjoint())
}

fn check_reducible(obs: &Observation) -> Result<()> {
    if !obs.objective.is_gaussian() {
        return Err(StrumerError::invalid("channel reduction needs a Frobenius objective"));
    }
    if !obs.mask.is_row_uniform() {
        return Err(StrumerError::invalid("channel reduction needs rows observed in all channels or none"));
    }
    Ok(())
}

/// Reduced observation: unobserved rows stay zero and stay unobserved.
pub fn reduce_observation(obs: &Observation) -> Result<Observation> {
    check_reducible(obs)?;
    let n = obs.samples();
    let y_r = reduce_data(&obs.y)?;
    if obs.mask.is_complete() {
        return Observation::new(y_r, ObservationMask::complete(n, n), Objective::Fro);
    }
    let rows: Vec<bool> = (0..n).map(|j| obs.mask.is_observed(j, 0)).collect();
    let kept = rows.iter().filter(|&&r| r).count();
    let bits = (0..n * n).map(|idx| rows[idx / n]).collect();
    let mask = ObservationMask::from_bits(n, n, bits, MaskPattern::Rows { kept })?;
    Observation::new(y_r, mask, Objective::MaskedFro)
}

/// Solve on the reduced data when `mode` applies, otherwise on `obs` itself.
/// Amplitudes are always fitted against the original data.
pub fn solve_reduced(obs: &Observation, config: &SolverConfig, mode: ReduceMode) -> Result<EstimationResult> {
    if !mode.applies(obs.samples(), obs.channels()) {
        return estimate(obs, config);
    }
    let reduced = reduce_observation(obs)?;
    let cfg = SolverConfig { objective: reduced.objective, ..config.clone() };
    let out = solve(&reduced, &cfg)?;
    let mut est = extract(&out.t, config.order, &obs.y, &obs.mask)?;
    est.diagnostics = Some(out.diagnostics);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::linalg::{frob_dist_sq, frob_norm};
    use crate::signal_model::{
        complex_gaussian_matrix, make_mask, observe, sample_noise, snr_to_sigma, synthesize, FrequencyAmplitudeModel,
        NoiseModel,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_rows_give_diagonal_root() {
        // rows are scaled DFT rows, hence orthogonal
        let sigmas = [3.0, 1.0, 0.5];
        let y = CMat::from_fn(3, 6, |i, j| {
            c64::from_polar(sigmas[i] / 6f64.sqrt(), 2.0 * std::f64::consts::PI * (i * j) as f64 / 6.0)
        });
        let r = reduce_data(&y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { sigmas[i] } else { 0.0 };
                assert!((r[(i, j)] - c64::new(expect, 0.0)).norm() < 1e-12, "{i},{j}");
            }
        }
    }

    #[test]
    fn unitary_reduces_to_identity() {
        let y = CMat::from_fn(4, 4, |i, j| c64::from_polar(0.5, 2.0 * std::f64::consts::PI * (i * j) as f64 / 4.0));
        let r = reduce_data(&y).unwrap();
        let eye = CMat::from_fn(4, 4, |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        assert!(frob_dist_sq(r.as_ref(), eye.as_ref()).sqrt() < 1e-12);
    }

    #[test]
    fn gram_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (n, l) in [(8, 64), (5, 3), (6, 6)] {
            let y = complex_gaussian_matrix(n, l, 1.0, &mut rng);
            let r = reduce_data(&y).unwrap();
            let g = &y * y.adjoint();
            let gr = &r * r.adjoint();
            assert!(frob_dist_sq(g.as_ref(), gr.as_ref()).sqrt() <= 1e-10 * frob_norm(g.as_ref()));
        }
        // rank deficient
        let a = complex_gaussian_matrix(6, 2, 1.0, &mut rng);
        let b = complex_gaussian_matrix(2, 40, 1.0, &mut rng);
        let y = &a * &b;
        let r = reduce_data(&y).unwrap();
        let g = &y * y.adjoint();
        assert!(frob_dist_sq(g.as_ref(), (&r * r.adjoint()).as_ref()).sqrt() <= 1e-10 * frob_norm(g.as_ref()));
    }

    #[test]
    fn modes() {
        assert!(!ReduceMode::Auto.applies(15, 30));
        assert!(ReduceMode::Auto.applies(15, 31));
        assert!(!ReduceMode::On.applies(15, 15));
        assert!(ReduceMode::On.applies(15, 16));
        assert!(!ReduceMode::Off.applies(15, 300));
        assert_eq!("auto".parse::<ReduceMode>().unwrap(), ReduceMode::Auto);
        assert!("sometimes".parse::<ReduceMode>().is_err());
    }

    #[test]
    fn rejects_non_gaussian_and_elementwise_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = complex_gaussian_matrix(7, 20, 1.0, &mut rng);
        let obs = Observation::new(y.clone(), ObservationMask::complete(7, 20), Objective::Lp { p: 1.5 }).unwrap();
        assert!(reduce_observation(&obs).is_err());
        let mask = make_mask(MaskPattern::Elements { fraction: 0.8 }, 7, 20, &mut rng).unwrap();
        let obs = Observation::new(y, mask, Objective::MaskedFro).unwrap();
        assert!(reduce_observation(&obs).is_err());
    }

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
    fn noiseless_reduced_frequencies_are_exact() {
        let freqs = [-0.2, 0.1, 0.3];
        let obs = scenario(&freqs, 15, 40, None, 3);
        let cfg = SolverConfig { eps_abs: 1e-9, eps_rel: 1e-10, ..SolverConfig::new(3, Objective::Fro) };
        let est = solve_reduced(&obs, &cfg, ReduceMode::On).unwrap();
        assert_eq!(est.diagnostics.as_ref().unwrap().channels, 15);
        assert_eq!(est.amplitudes.ncols(), 40);
        for (a, b) in est.freqs.iter().zip(&freqs) {
            assert!((a - b).abs() < 1e-6, "{:?}", est.freqs);
        }
    }

    #[test]
    fn reduced_matches_full_at_moderate_snr() {
        let freqs = [-0.2, 0.1, 0.3];
        let obs = scenario(&freqs, 15, 50, Some(10.0), 4);
        let cfg = SolverConfig::new(3, Objective::Fro);
        let full = solve_reduced(&obs, &cfg, ReduceMode::Off).unwrap();
        let red = solve_reduced(&obs, &cfg, ReduceMode::On).unwrap();
        for (a, b) in full.freqs.iter().zip(&red.freqs) {
            assert!((a - b).abs() <= 1e-3, "{:?} vs {:?}", full.freqs, red.freqs);
        }
    }

    #[test]
    fn row_masks_survive_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = complex_gaussian_matrix(9, 30, 1.0, &mut rng);
        let mask = make_mask(MaskPattern::Rows { kept: 7 }, 9, 30, &mut rng).unwrap();
        let obs = Observation::new(y, mask.clone(), Objective::MaskedFro).unwrap();
        let red = reduce_observation(&obs).unwrap();
        assert_eq!(red.mask.observed_count(), 7 * 9);
        for j in 0..9 {
            assert_eq!(red.mask.is_observed(j, 4), mask.is_observed(j, 0));
            if !mask.is_observed(j, 0) {
                assert!((0..9).all(|c| red.y[(j, c)].norm() < 1e-12));
            }
        }
    }
}
