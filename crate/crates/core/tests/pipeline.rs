use std::f64::consts::PI;

use proptest::prelude::*;

use strumer_core::postprocess::{wrap_frequency, EstimationResult};
use strumer_core::reduction::{solve_reduced, ReduceMode};
use strumer_core::scenario::{Scenario, ScenarioSpec};
use strumer_core::signal_model::{wrapped_gap, MaskPattern, NoiseModel, Objective, Observation, ObservationMask};
use strumer_core::solver::{estimate, SolverConfig};
use strumer_core::{c64, CMat};

fn tight(order: usize, objective: Objective) -> SolverConfig {
    SolverConfig { eps_abs: 1e-9, eps_rel: 1e-10, ..SolverConfig::new(order, objective) }
}

fn sorted(mut f: Vec<f64>) -> Vec<f64> {
    f.sort_by(f64::total_cmp);
    f
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    sorted(a.to_vec()).iter().zip(&sorted(b.to_vec())).map(|(x, y)| wrapped_gap(*x, *y).abs()).fold(0.0, f64::max)
}

fn clean(freqs: Vec<f64>, samples: usize, channels: usize, seed: u64) -> Scenario {
    ScenarioSpec { seed, ..ScenarioSpec::new(samples, channels, freqs, 300.0) }.generate().unwrap()
}

fn solve_clean(s: &Scenario, y: CMat) -> EstimationResult {
    let obs = Observation::new(y, s.mask.clone(), Objective::Fro).unwrap();
    estimate(&obs, &tight(s.freqs.len(), Objective::Fro)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Modulating every channel by `e^{i 2 pi d j}` shifts every estimate by `d`.
    #[test]
    fn modulation_shifts_estimates(d in -0.5f64..0.5, seed in 0u64..1000) {
        let s = clean(vec![-0.31, 0.02, 0.27], 15, 2, seed);
        let shifted = CMat::from_fn(15, 2, |j, c| s.y[(j, c)] * c64::from_polar(1.0, 2.0 * PI * d * j as f64));
        let a = solve_clean(&s, s.y.clone());
        let b = solve_clean(&s, shifted);
        let moved: Vec<f64> = a.freqs.iter().map(|f| wrap_frequency(f + d)).collect();
        prop_assert!(max_gap(&moved, &b.freqs) < 1e-6, "{:?} vs {:?}", moved, b.freqs);
    }

    /// Reordering channels does not change the frequencies, and amplitudes follow the channels.
    #[test]
    fn channel_order_is_irrelevant(seed in 0u64..1000) {
        let s = clean(vec![-0.2, 0.15], 13, 3, seed);
        let perm = [2, 0, 1];
        let y = CMat::from_fn(13, 3, |j, c| s.y[(j, perm[c])]);
        let a = solve_clean(&s, s.y.clone());
        let b = solve_clean(&s, y);
        prop_assert!(max_gap(&a.freqs, &b.freqs) < 1e-6);
        let order = |e: &EstimationResult, f: f64| e.freqs.iter().position(|g| wrapped_gap(*g, f).abs() < 1e-4).unwrap();
        for &f in &s.freqs {
            let (i, k) = (order(&a, f), order(&b, f));
            for (c, &pc) in perm.iter().enumerate() {
                prop_assert!((a.amplitudes[(i, pc)] - b.amplitudes[(k, c)]).norm() < 1e-5);
            }
        }
    }
}

#[test]
fn reloaded_scenarios_solve_identically() {
    let spec = ScenarioSpec {
        noise: NoiseModel::Gmm { c2: 0.1, var1: 1.0, var2: 100.0 },
        mask: MaskPattern::Elements { fraction: 0.8 },
        seed: 11,
        ..ScenarioSpec::new(21, 2, vec![-0.2, 0.1], 15.0)
    };
    let s = spec.generate().unwrap();
    let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(back, s);
    let solve = |s: &Scenario| {
        let obs = s.observation(1.5, false).unwrap();
        estimate(&obs, &SolverConfig { seed: 3, ..SolverConfig::new(2, obs.objective) }).unwrap()
    };
    let (a, b) = (solve(&s), solve(&back));
    assert_eq!(a.freqs, b.freqs);
    assert_eq!(a.amplitudes, b.amplitudes);
}

#[test]
fn missing_rows_noiseless() {
    let s = ScenarioSpec {
        mask: MaskPattern::Rows { kept: 15 },
        seed: 4,
        ..ScenarioSpec::new(19, 30, vec![-0.2, 0.1, 0.3], 300.0)
    }
    .generate()
    .unwrap();
    let obs = s.observation(2.0, false).unwrap();
    assert_eq!(obs.objective, Objective::MaskedFro);
    let cfg = tight(3, obs.objective);
    let full = solve_reduced(&obs, &cfg, ReduceMode::Off).unwrap();
    let dr = solve_reduced(&obs, &cfg, ReduceMode::On).unwrap();
    assert!(max_gap(&full.freqs, &s.freqs) < 1e-5, "{:?}", full.freqs);
    assert!(max_gap(&dr.freqs, &s.freqs) < 1e-5, "{:?}", dr.freqs);
}

#[test]
fn row_impulsive_objective_resists_corrupted_rows() {
    let s = clean(vec![-0.25, 0.05], 21, 4, 9);
    // two samples hit in every channel by a large burst
    let mut y = s.y.clone();
    for c in 0..4 {
        y[(5, c)] += c64::new(30.0, -20.0);
        y[(14, c)] += c64::new(-25.0, 15.0);
    }
    let mask = ObservationMask::complete(21, 4);
    let fit = |objective: Objective| {
        let obs = Observation::new(y.clone(), mask.clone(), objective).unwrap();
        estimate(&obs, &SolverConfig::new(2, objective)).unwrap()
    };
    let robust = max_gap(&fit(Objective::RowLp { p: 1.0 }).freqs, &s.freqs);
    let plain = max_gap(&fit(Objective::Fro).freqs, &s.freqs);
    assert!(robust < plain, "row-wise {robust:e} vs Frobenius {plain:e}");
}
