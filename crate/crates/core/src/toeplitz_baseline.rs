//! ADMM on the un-embedded Toeplitz model: one `(N + L) x (N + L)` block
//! `[[Z, X^H], [X, T(t')]]` constrained to rank-K PSD matrices, with `Z`
//! Hermitian `L x L` and `t'` of length `N`.
//!
//! The block has a free diagonal share between `Z` and `T(t')`, so its
//! solution set is unbounded and the iteration tends to wander. It is kept to
//! contrast its residual traces with those of [`crate::solver`].

use web_time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{all_finite, frob_dist_sq, frob_norm_sq, hermitian_part};
use crate::postprocess::{extract, EstimationResult};
use crate::prox::prox_abs_p_unchecked;
use crate::signal_model::{complex_gaussian, Observation};
use crate::solver::{
    adapt_penalty_mu, IterationRecord, NullSink, SolveDiagnostics, SolveOutput, SolverConfig, TraceSink,
};
use crate::structured_ops::{psd_rank_projection, toeplitz_adjoint, toeplitz_lift, toeplitz_normal_solve, ToeplitzCoeffs};
use crate::{c64, CMat, Result, StrumerError};

#[derive(Debug, Clone)]
pub struct ToeplitzBaselineState {
    /// `N x L`.
    pub x: CMat,
    /// `L x L` Hermitian.
    pub z: CMat,
    /// Length `N`.
    pub t: ToeplitzCoeffs,
    pub q: CMat,
    pub lambda: CMat,
    /// `M(z)` at the current iterate.
    pub block: CMat,
    pub mu: f64,
    pub iteration: usize,
}

impl ToeplitzBaselineState {
    fn rebuild_block(&mut self) {
        self.block = assemble(&self.z, &self.x, &self.t);
    }
}

/// `[[Z, X^H], [X, T(t)]]`.
pub fn assemble(z: &CMat, x: &CMat, t: &ToeplitzCoeffs) -> CMat {
    let (n, l) = (x.nrows(), x.ncols());
    let tm = toeplitz_lift(t);
    CMat::from_fn(n + l, n + l, |i, j| match (i < l, j < l) {
        (true, true) => z[(i, j)],
        (true, false) => x[(j - l, i)].conj(),
        (false, true) => x[(i - l, j)],
        (false, false) => tm[(i - l, j - l)],
    })
}

fn check_config(obs: &Observation, config: &SolverConfig) -> Result<()> {
    if obs.objective.is_row_wise() {
        return Err(StrumerError::invalid("the Toeplitz baseline supports entrywise objectives only"));
    }
    // same checks as the embedded solver, with K bounded by N instead of n
    config.validate(2 * obs.samples() - 1)
}

/// `X = Y`, zero `Z`, `t'` and `Q`, Gaussian Hermitian diagonal multiplier blocks.
pub fn init_baseline(obs: &Observation, config: &SolverConfig) -> Result<ToeplitzBaselineState> {
    check_config(obs, config)?;
    let (samples, l) = (obs.samples(), obs.channels());
    let size = samples + l;
    let mu = config.mu0.unwrap_or(1.0 / ((samples * l) as f64).sqrt());
    let variance = config.lambda_init_scale * frob_norm_sq(obs.y.as_ref()) / (samples * l) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut lambda = CMat::zeros(size, size);
    if variance > 0.0 {
        for (off, dim) in [(0, l), (l, samples)] {
            let g = CMat::from_fn(dim, dim, |_, _| complex_gaussian(variance, &mut rng));
            let h = (&g + g.adjoint()) * faer::Scale(c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
            for i in 0..dim {
                for j in 0..dim {
                    lambda[(off + i, off + j)] = h[(i, j)];
                }
            }
        }
    }
    let mut state = ToeplitzBaselineState {
        x: obs.y.clone(),
        z: CMat::zeros(l, l),
        t: ToeplitzCoeffs::zeros(samples),
        q: CMat::zeros(size, size),
        lambda,
        block: CMat::zeros(0, 0),
        mu,
        iteration: 0,
    };
    state.rebuild_block();
    Ok(state)
}

/// One sweep: `Q`, then `X`, then `(Z, t')`.
fn primal_sweep(state: &mut ToeplitzBaselineState, obs: &Observation, order: usize) -> Result<()> {
    let (samples, l) = (obs.samples(), obs.channels());
    let scale = faer::Scale(c64::new(1.0 / state.mu, 0.0));
    let arg = &state.block - &state.lambda * scale;
    state.q = psd_rank_projection(arg.as_ref(), order)?;
    let w = hermitian_part((&state.q + &state.lambda * scale).as_ref());

    let p = obs.objective.exponent();
    let masked = obs.objective.is_masked();
    for c in 0..l {
        for j in 0..samples {
            // X appears once below and once (conjugated) above the diagonal
            let target = w[(l + j, c)];
            state.x[(j, c)] = if masked && !obs.mask.is_observed(j, c) {
                target
            } else {
                let y = obs.y[(j, c)];
                y + prox_abs_p_unchecked(target - y, state.mu, p)
            };
        }
    }
    state.z = w.as_ref().submatrix(0, 0, l, l).to_owned();
    state.t = toeplitz_normal_solve(&toeplitz_adjoint(w.as_ref().submatrix(l, l, samples, samples))?);
    Ok(())
}

pub fn solve_toeplitz(obs: &Observation, config: &SolverConfig) -> Result<SolveOutput> {
    solve_toeplitz_with_sink(obs, config, &mut NullSink)
}

/// Same stopping rule, penalty schedule and divergence guard as
/// [`crate::solver::solve_with_sink`]; `t_channels` of the output is empty.
pub fn solve_toeplitz_with_sink(
    obs: &Observation,
    config: &SolverConfig,
    sink: &mut dyn TraceSink,
) -> Result<SolveOutput> {
    let start = Instant::now();
    let mut state = init_baseline(obs, config)?;
    let (samples, l) = (obs.samples(), obs.channels());
    let dim_sqrt = ((samples * l + samples + l * l) as f64).sqrt();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut initial_combined = None;
    let (mut last_primal, mut last_dual) = (f64::NAN, f64::NAN);

    for it in 1..=config.max_iters {
        let (x_old, z_old, t_old, block_old) = (state.x.clone(), state.z.clone(), state.t.clone(), state.block.clone());
        primal_sweep(&mut state, obs, config.order)?;
        if !all_finite(state.q.as_ref()) {
            return Err(StrumerError::Divergence { update: "Q", iteration: it });
        }
        if !all_finite(state.x.as_ref()) {
            return Err(StrumerError::Divergence { update: "X", iteration: it });
        }
        if !all_finite(state.z.as_ref()) || !state.t.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(StrumerError::Divergence { update: "t", iteration: it });
        }
        state.rebuild_block();
        let r = &state.q - &state.block;
        let primal = frob_norm_sq(r.as_ref()).sqrt();
        let dual = state.mu * frob_dist_sq(state.block.as_ref(), block_old.as_ref()).sqrt();
        state.lambda += &r * faer::Scale(c64::new(state.mu, 0.0));
        let lambda_norm = frob_norm_sq(state.lambda.as_ref()).sqrt();
        if !lambda_norm.is_finite() {
            return Err(StrumerError::Divergence { update: "Lambda", iteration: it });
        }
        state.iteration = it;

        let t_change: f64 = state.t.as_slice().iter().zip(t_old.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let z_change = frob_dist_sq(state.x.as_ref(), x_old.as_ref()) + frob_dist_sq(state.z.as_ref(), z_old.as_ref()) + t_change;
        let combined = (z_change + (state.mu * primal).powi(2)).sqrt();
        let rec = IterationRecord { iteration: it, mu: state.mu, primal, dual, combined };
        sink.record(&rec)?;
        trace.push(rec);
        last_primal = primal;
        last_dual = dual;

        let init = *initial_combined.get_or_insert(combined);
        if !combined.is_finite() || combined > 1e6 * init.max(f64::MIN_POSITIVE) {
            return Err(StrumerError::Divergence { update: "residual", iteration: it });
        }
        let q_norm = frob_norm_sq(state.q.as_ref()).sqrt();
        let b_norm = frob_norm_sq(state.block.as_ref()).sqrt();
        let eps_pri = dim_sqrt * config.eps_abs + config.eps_rel * q_norm.max(b_norm);
        let eps_dual = dim_sqrt * config.eps_abs + config.eps_rel * lambda_norm;
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if it <= 100 || it % 10 == 0 {
            if let Some(step) = adapt_penalty_mu(&config.adapt, primal, dual) {
                state.mu *= step;
                if config.adapt.rescale == crate::solver::DualRescale::KeepScaledDual {
                    state.lambda *= faer::Scale(c64::new(step, 0.0));
                }
            }
        }
    }

    let diagnostics = SolveDiagnostics {
        iterations: state.iteration,
        primal: last_primal,
        dual: last_dual,
        converged,
        wall_time_s: start.elapsed().as_secs_f64(),
        channels: 1,
        final_mu: state.mu,
        trace,
    };
    Ok(SolveOutput { x: state.x, t: state.t, t_channels: Vec::new(), diagnostics })
}

/// Baseline solve followed by Root-MUSIC on the length-`N` Toeplitz coefficients.
pub fn estimate_toeplitz(obs: &Observation, config: &SolverConfig) -> Result<EstimationResult> {
    let out = solve_toeplitz(obs, config)?;
    let mut est = extract(&out.t, config.order, &obs.y, &obs.mask)?;
    est.diagnostics = Some(out.diagnostics);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_norm;
    use crate::signal_model::{
        complex_gaussian_matrix, synthesize, FrequencyAmplitudeModel, Objective, ObservationMask,
    };

    fn obs_from(y: CMat, objective: Objective) -> Observation {
        let (n, l) = (y.nrows(), y.ncols());
        Observation::new(y, ObservationMask::complete(n, l), objective).unwrap()
    }

    #[test]
    fn block_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = complex_gaussian_matrix(4, 2, 1.0, &mut rng);
        let z = hermitian_part(complex_gaussian_matrix(2, 2, 1.0, &mut rng).as_ref());
        let t = ToeplitzCoeffs::from_proper_part(vec![c64::new(3.0, 0.0), c64::new(0.5, -1.0), c64::new(0.0, 0.2), c64::new(1.0, 1.0)]);
        let m = assemble(&z, &x, &t);
        assert_eq!(m.nrows(), 6);
        assert_eq!(m, hermitian_part(m.as_ref()));
        assert_eq!(m[(3, 1)], x[(1, 1)]);
        assert_eq!(m[(1, 3)], x[(1, 1)].conj());
        assert_eq!(m[(3, 2)], t.as_slice()[1]);
    }

    #[test]
    fn zero_multiplier_and_q_give_zero_z() {
        let obs = obs_from(CMat::zeros(7, 2), Objective::Fro);
        let cfg = SolverConfig { lambda_init_scale: 0.0, ..SolverConfig::new(1, Objective::Fro) };
        let mut st = init_baseline(&obs, &cfg).unwrap();
        st.z = CMat::from_fn(2, 2, |i, j| c64::new((i + j) as f64, 0.0));
        st.rebuild_block();
        st.block = CMat::zeros(9, 9);
        primal_sweep(&mut st, &obs, 1).unwrap();
        assert_eq!(frob_norm(st.q.as_ref()), 0.0);
        assert_eq!(frob_norm(st.z.as_ref()), 0.0);
        assert_eq!(st.t.norm_sq(), 0.0);
    }

    #[test]
    fn rejects_row_objectives() {
        let y = complex_gaussian_matrix(7, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        let obs = obs_from(y, Objective::RowLp { p: 1.5 });
        assert!(solve_toeplitz(&obs, &SolverConfig::new(1, Objective::RowLp { p: 1.5 })).is_err());
    }

    #[test]
    fn noiseless_single_tone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = FrequencyAmplitudeModel::random_amplitudes(vec![0.2], 2, &mut rng).unwrap();
        let x = synthesize(&model, 15);
        let obs = obs_from(x.clone(), Objective::Fro);
        let cfg = SolverConfig { eps_abs: 1e-9, eps_rel: 1e-10, ..SolverConfig::new(1, Objective::Fro) };
        let est = solve_toeplitz(&obs, &cfg).unwrap();
        let rel = frob_dist_sq(est.x.as_ref(), x.as_ref()).sqrt() / frob_norm(x.as_ref());
        assert!(rel < 1e-3, "{rel}");
        let e = estimate_toeplitz(&obs, &cfg).unwrap();
        assert!((e.freqs[0] - 0.2).abs() < 1e-3, "{:?}", e.freqs);
    }

    #[test]
    fn even_length_is_allowed() {
        let y = complex_gaussian_matrix(8, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(5));
        let cfg = SolverConfig { max_iters: 10, ..SolverConfig::new(2, Objective::Fro) };
        let out = solve_toeplitz(&obs_from(y, Objective::Fro), &cfg).unwrap();
        assert_eq!(out.t.len(), 8);
        assert_eq!(out.diagnostics.trace.len(), out.diagnostics.iterations);
    }
}
