//! ADMM over the Hankel-Toeplitz embedding.
//!
//! Each channel `l` owns an auxiliary `2n x 2n` matrix `Q_l` constrained to
//! rank-K PSD matrices and tied to the structured block
//! `M_l(z) = [[T(conj t_l), conj(H x_l)], [H x_l, T(t)]]` by a multiplier
//! `Lambda_l`. One iteration is Q-update, X-update, (t_l, t)-update, dual
//! ascent, and optionally a penalty change.

use std::io::Write;
use web_time::Instant;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{all_finite, frob_dist_sq, frob_norm_sq};
use crate::postprocess::{extract, EstimationResult};
use crate::prox::{prox_abs_p_unchecked, prox_row_l2p_unchecked};
use crate::signal_model::{complex_gaussian, Objective, Observation};
use crate::structured_ops::{
    assemble_block, hankel_adjoint, hankel_weights, psd_rank_projection, toeplitz_adjoint, toeplitz_normal_solve,
    ToeplitzCoeffs,
};
use crate::{c64, CMat, Result, StrumerError};

/// Residual-balancing penalty schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePenalty {
    pub enabled: bool,
    /// Multiplicative step for `mu`.
    pub factor: f64,
    /// Imbalance between primal and dual residuals that triggers a step.
    pub ratio: f64,
    /// How the multipliers follow a change of `mu`.
    pub rescale: DualRescale,
    /// Adaptation stops for good once the combined residual drops below
    /// `freeze_factor * eps_abs`; `None` keeps it running.
    pub freeze_factor: Option<f64>,
}

impl Default for AdaptivePenalty {
    fn default() -> Self {
        AdaptivePenalty { enabled: true, factor: 2.0, ratio: 10.0, rescale: DualRescale::default(), freeze_factor: None }
    }
}

/// Which dual quantity is held fixed when `mu` changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualRescale {
    /// `Lambda` is unchanged, so the scaled dual `Lambda / mu` jumps.
    #[default]
    KeepMultiplier,
    /// `Lambda` is scaled with `mu`, so `Lambda / mu` is unchanged.
    KeepScaledDual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Model order `K`.
    pub order: usize,
    pub objective: Objective,
    /// Initial penalty; `None` means `1 / sqrt(N L)`.
    pub mu0: Option<f64>,
    pub adapt: AdaptivePenalty,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    /// Variance of the initial diagonal multiplier blocks, relative to the
    /// mean entry power of `Y`.
    pub lambda_init_scale: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(order: usize, objective: Objective) -> Self {
        SolverConfig {
            order,
            objective,
            mu0: None,
            adapt: AdaptivePenalty::default(),
            eps_abs: 1e-4,
            eps_rel: 1e-5,
            max_iters: 3000,
            lambda_init_scale: 0.1,
            seed: 0,
        }
    }

    pub fn validate(&self, samples: usize) -> Result<()> {
        let n = samples.div_ceil(2);
        if self.order == 0 || self.order >= n {
            return Err(StrumerError::invalid(format!(
                "model order {} must satisfy 0 < K < n = {n}",
                self.order
            )));
        }
        self.objective.validate()?;
        if let Some(mu) = self.mu0 {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(StrumerError::invalid(format!("initial penalty {mu} must be positive")));
            }
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(StrumerError::invalid("stopping tolerances must be positive"));
        }
        if self.adapt.enabled && !(self.adapt.factor >= 1.0 && self.adapt.ratio >= 1.0) {
            return Err(StrumerError::invalid("penalty factor and ratio must be at least 1"));
        }
        if !(self.lambda_init_scale >= 0.0) {
            return Err(StrumerError::invalid("lambda_init_scale must be nonnegative"));
        }
        Ok(())
    }
}

/// Residuals after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Penalty used during this iteration.
    pub mu: f64,
    /// `sqrt(sum_l ||Q_l - M_l(z)||^2)`.
    pub primal: f64,
    /// `mu ||M(z_new) - M(z_old)||`.
    pub dual: f64,
    /// `sqrt(||z_new - z_old||^2 + sum_l ||Lambda_new - Lambda_old||^2)`.
    pub combined: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
    pub converged: bool,
    pub wall_time_s: f64,
    /// Eigendecompositions per iteration.
    pub channels: usize,
    pub final_mu: f64,
    pub trace: Vec<IterationRecord>,
}

impl SolveDiagnostics {
    pub fn combined_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.combined).collect()
    }

    pub fn terminal_combined(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.combined)
    }
}

/// Receives one record per iteration.
pub trait TraceSink {
    fn record(&mut self, rec: &IterationRecord) -> std::io::Result<()>;
}

/// Writes `iteration,mu,primal,dual,combined` lines.
pub struct CsvTraceSink<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> CsvTraceSink<W> {
    pub fn new(out: W) -> Self {
        CsvTraceSink { out, header_written: false }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub const TRACE_HEADER: &str = "iteration,mu,primal,dual,combined";

impl<W: Write> TraceSink for CsvTraceSink<W> {
    fn record(&mut self, r: &IterationRecord) -> std::io::Result<()> {
        if !self.header_written {
            writeln!(self.out, "{TRACE_HEADER}")?;
            self.header_written = true;
        }
        writeln!(self.out, "{},{:e},{:e},{:e},{:e}", r.iteration, r.mu, r.primal, r.dual, r.combined)
    }
}

/// Discards every record.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &IterationRecord) -> std::io::Result<()> {
        Ok(())
    }
}

/// Primal iterate `z = (X, {t_l}, t)` together with the auxiliary and dual variables.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: CMat,
    pub t_channels: Vec<ToeplitzCoeffs>,
    pub t: ToeplitzCoeffs,
    pub q: Vec<CMat>,
    pub lambda: Vec<CMat>,
    /// `M_l(z)` at the current `z`.
    pub blocks: Vec<CMat>,
    pub mu: f64,
    pub iteration: usize,
    adapt_frozen: bool,
}

impl SolverState {
    pub fn half_size(&self) -> usize {
        self.t.len()
    }

    pub fn channels(&self) -> usize {
        self.x.ncols()
    }

    fn rebuild_blocks(&mut self) -> Result<()> {
        let blocks = per_channel(self.channels(), |l| {
            assemble_block(&self.t_channels[l], &self.t, &column_vec(&self.x, l))
        });
        self.blocks = blocks.into_iter().collect::<Result<_>>()?;
        Ok(())
    }
}

fn column_vec(m: &CMat, j: usize) -> Vec<c64> {
    crate::linalg::column(m.as_ref(), j)
}

#[cfg(feature = "parallel")]
fn per_channel<T: Send>(l: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..l).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_channel<T>(l: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..l).map(f).collect()
}

/// `X = Y`, zero Toeplitz variables and `Q`, Gaussian Hermitian diagonal
/// multiplier blocks.
pub fn init_state(y: &CMat, config: &SolverConfig) -> Result<SolverState> {
    let (samples, l) = (y.nrows(), y.ncols());
    if samples % 2 == 0 {
        return Err(StrumerError::invalid("the embedding needs an odd number of samples"));
    }
    if l == 0 {
        return Err(StrumerError::invalid("data has no channels"));
    }
    config.validate(samples)?;
    let n = samples.div_ceil(2);
    let mu = config.mu0.unwrap_or(1.0 / ((samples * l) as f64).sqrt());
    let variance = config.lambda_init_scale * frob_norm_sq(y.as_ref()) / (samples * l) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lambda = (0..l)
        .map(|_| {
            let mut m = CMat::zeros(2 * n, 2 * n);
            if variance > 0.0 {
                for off in [0, n] {
                    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(variance, &mut rng));
                    let h = (&g + g.adjoint()) * faer::Scale(c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
                    for i in 0..n {
                        for j in 0..n {
                            m[(off + i, off + j)] = h[(i, j)];
                        }
                    }
                }
            }
            m
        })
        .collect();
    let mut state = SolverState {
        x: y.clone(),
        t_channels: vec![ToeplitzCoeffs::zeros(n); l],
        t: ToeplitzCoeffs::zeros(n),
        q: vec![CMat::zeros(2 * n, 2 * n); l],
        lambda,
        blocks: Vec::new(),
        mu,
        iteration: 0,
        adapt_frozen: false,
    };
    state.rebuild_blocks()?;
    Ok(state)
}

/// `Q_l = P_K(M_l(z) - Lambda_l / mu)`.
pub fn update_q(state: &mut SolverState, order: usize) -> Result<()> {
    let inv_mu = 1.0 / state.mu;
    let qs = per_channel(state.channels(), |l| {
        let arg = &state.blocks[l] - &state.lambda[l] * faer::Scale(c64::new(inv_mu, 0.0));
        psd_rank_projection(arg.as_ref(), order)
    });
    state.q = qs.into_iter().collect::<Result<_>>()?;
    Ok(())
}

/// `W_l = Q_l + Lambda_l / mu`.
fn w_matrices(state: &SolverState) -> Vec<CMat> {
    let inv_mu = 1.0 / state.mu;
    (0..state.channels())
        .map(|l| &state.q[l] + &state.lambda[l] * faer::Scale(c64::new(inv_mu, 0.0)))
        .collect()
}

/// Per-channel `(H^H W_2)_j / d_j`, the least-squares fit of `x_l` to the
/// Hankel blocks of `W_l`.
fn hankel_targets(w: &[CMat], n: usize) -> Result<Vec<Vec<c64>>> {
    let d = hankel_weights(n);
    w.iter()
        .map(|wl| {
            let lower = wl.as_ref().submatrix(n, 0, n, n);
            let upper = wl.as_ref().submatrix(0, n, n, n);
            let avg = CMat::from_fn(n, n, |i, j| (lower[(i, j)] + upper[(j, i)].conj()) * 0.5);
            let mut b = hankel_adjoint(avg.as_ref())?;
            for (v, dj) in b.iter_mut().zip(&d) {
                *v /= *dj;
            }
            Ok(b)
        })
        .collect()
}

/// Minimizes `g(X - Y) + mu sum_l ||H x_l - W_{2,l}||^2` entrywise or row-wise.
pub fn update_x(state: &mut SolverState, obs: &Observation) -> Result<()> {
    let n = state.half_size();
    let w = w_matrices(state);
    let targets = hankel_targets(&w, n)?;
    let (samples, l) = (obs.samples(), obs.channels());
    let d = hankel_weights(n);
    let objective = obs.objective;
    let p = objective.exponent();
    let mask = &obs.mask;
    let masked = objective.is_masked();
    if objective.is_row_wise() {
        for j in 0..samples {
            let beta = state.mu * d[j];
            let obs_cols: Vec<usize> = (0..l).filter(|&c| !masked || mask.is_observed(j, c)).collect();
            let a: Vec<c64> = obs_cols.iter().map(|&c| targets[c][j] - obs.y[(j, c)]).collect();
            let shrunk = prox_row_l2p_unchecked(&a, beta, p);
            for c in 0..l {
                state.x[(j, c)] = targets[c][j];
            }
            for (&c, v) in obs_cols.iter().zip(shrunk) {
                state.x[(j, c)] = obs.y[(j, c)] + v;
            }
        }
    } else {
        for c in 0..l {
            for j in 0..samples {
                let target = targets[c][j];
                state.x[(j, c)] = if masked && !mask.is_observed(j, c) {
                    target
                } else {
                    let y = obs.y[(j, c)];
                    y + prox_abs_p_unchecked(target - y, state.mu * d[j], p)
                };
            }
        }
    }
    Ok(())
}

/// Coupled Toeplitz update
/// `t_l = D^{-1} T^H(conj W_{1,l} - (1/2L) sum_q (conj W_{1,q} - W_{3,q}))`, `t = mean(t_l)`.
pub fn update_t(state: &mut SolverState) -> Result<()> {
    let n = state.half_size();
    let l = state.channels();
    let w = w_matrices(state);
    let (t_channels, t) = coupled_toeplitz_fit(&w, n)?;
    debug_assert_eq!(t_channels.len(), l);
    state.t_channels = t_channels;
    state.t = t;
    Ok(())
}

/// Constrained least squares behind [`update_t`], split out for testing.
pub fn coupled_toeplitz_fit(w: &[CMat], n: usize) -> Result<(Vec<ToeplitzCoeffs>, ToeplitzCoeffs)> {
    let l = w.len();
    let mut a = Vec::with_capacity(l);
    let mut correction = vec![c64::new(0.0, 0.0); n];
    for wl in w {
        let w1 = toeplitz_adjoint(wl.as_ref().submatrix(0, 0, n, n))?.conj();
        let w3 = toeplitz_adjoint(wl.as_ref().submatrix(n, n, n, n))?;
        for k in 0..n {
            correction[k] += w1.as_slice()[k] - w3.as_slice()[k];
        }
        a.push(w1);
    }
    let scale = 1.0 / (2.0 * l as f64);
    let t_channels: Vec<ToeplitzCoeffs> = a
        .into_iter()
        .map(|al| {
            let v = al.as_slice().iter().zip(&correction).map(|(x, c)| x - c * scale).collect();
            toeplitz_normal_solve(&ToeplitzCoeffs::from_proper_part(v))
        })
        .collect();
    let mut mean = vec![c64::new(0.0, 0.0); n];
    for tl in &t_channels {
        for (m, v) in mean.iter_mut().zip(tl.as_slice()) {
            *m += v;
        }
    }
    let inv_l = 1.0 / l as f64;
    let t = ToeplitzCoeffs::from_proper_part(mean.into_iter().map(|v| v * inv_l).collect());
    Ok((t_channels, t))
}

/// Residuals of the step just taken.
#[derive(Debug, Clone, Copy)]
pub struct StepResiduals {
    pub primal: f64,
    pub dual: f64,
    pub z_change_sq: f64,
    pub q_norm: f64,
    pub block_norm: f64,
    pub lambda_norm: f64,
}

/// `Lambda_l += mu (Q_l - M_l(z))`; also refreshes the cached blocks.
pub fn update_lambda(state: &mut SolverState, previous: &SolverState) -> Result<StepResiduals> {
    state.rebuild_blocks()?;
    let mu = state.mu;
    let (mut primal_sq, mut dual_sq, mut q_sq, mut b_sq, mut lam_sq) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for l in 0..state.channels() {
        let r = &state.q[l] - &state.blocks[l];
        primal_sq += frob_norm_sq(r.as_ref());
        dual_sq += frob_dist_sq(state.blocks[l].as_ref(), previous.blocks[l].as_ref());
        q_sq += frob_norm_sq(state.q[l].as_ref());
        b_sq += frob_norm_sq(state.blocks[l].as_ref());
        state.lambda[l] += &r * faer::Scale(c64::new(mu, 0.0));
        lam_sq += frob_norm_sq(state.lambda[l].as_ref());
    }
    let mut z_sq = frob_dist_sq(state.x.as_ref(), previous.x.as_ref());
    for (a, b) in state.t_channels.iter().zip(&previous.t_channels) {
        z_sq += a.as_slice().iter().zip(b.as_slice()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
    }
    Ok(StepResiduals {
        primal: primal_sq.sqrt(),
        dual: mu * dual_sq.sqrt(),
        z_change_sq: z_sq,
        q_norm: q_sq.sqrt(),
        block_norm: b_sq.sqrt(),
        lambda_norm: lam_sq.sqrt(),
    })
}

/// Residual balancing: grow `mu` when the primal residual dominates, shrink it
/// when the dual residual does. Returns whether `mu` changed.
pub fn adapt_penalty(state: &mut SolverState, adapt: &AdaptivePenalty, primal: f64, dual: f64) -> bool {
    let Some(step) = adapt_penalty_mu(adapt, primal, dual) else {
        return false;
    };
    state.mu *= step;
    if adapt.rescale == DualRescale::KeepScaledDual {
        for lam in &mut state.lambda {
            *lam *= faer::Scale(c64::new(step, 0.0));
        }
    }
    true
}

/// Multiplier for `mu` chosen by residual balancing, if any.
pub fn adapt_penalty_mu(adapt: &AdaptivePenalty, primal: f64, dual: f64) -> Option<f64> {
    if !adapt.enabled || adapt.factor == 1.0 {
        None
    } else if primal > adapt.ratio * dual {
        Some(adapt.factor)
    } else if dual > adapt.ratio * primal {
        Some(1.0 / adapt.factor)
    } else {
        None
    }
}

/// Output of [`solve`]; `x` has the caller's number of rows.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: CMat,
    pub t: ToeplitzCoeffs,
    pub t_channels: Vec<ToeplitzCoeffs>,
    pub diagnostics: SolveDiagnostics,
}

pub fn solve(obs: &Observation, config: &SolverConfig) -> Result<SolveOutput> {
    solve_with_sink(obs, config, &mut NullSink)
}

/// Runs the iteration to convergence or `max_iters`. Even-length data are
/// padded with one missing sample; the pad row is dropped from `x`.
pub fn solve_with_sink(obs: &Observation, config: &SolverConfig, sink: &mut dyn TraceSink) -> Result<SolveOutput> {
    let start = Instant::now();
    let original_rows = obs.samples();
    let padded;
    let obs = if original_rows.is_multiple_of(2) {
        padded = obs.padded_to_odd();
        &padded
    } else {
        obs
    };
    let samples = obs.samples();
    let l = obs.channels();
    let mut state = init_state(&obs.y, config)?;
    let n = state.half_size();
    // Absolute tolerances scale with the square root of the number of free
    // complex parameters in z, which is the dimension of the range of M
    let dim_sqrt = ((samples * l + (l + 1) * n) as f64).sqrt();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut initial_combined = None;
    let (mut last_primal, mut last_dual) = (f64::NAN, f64::NAN);

    for it in 1..=config.max_iters {
        let previous = state.clone();
        update_q(&mut state, config.order)?;
        if !state.q.iter().all(|q| all_finite(q.as_ref())) {
            return Err(StrumerError::Divergence { update: "Q", iteration: it });
        }
        update_x(&mut state, obs)?;
        if !all_finite(state.x.as_ref()) {
            return Err(StrumerError::Divergence { update: "X", iteration: it });
        }
        update_t(&mut state)?;
        if !state.t.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(StrumerError::Divergence { update: "t", iteration: it });
        }
        let res = update_lambda(&mut state, &previous)?;
        if !(res.lambda_norm.is_finite()) {
            return Err(StrumerError::Divergence { update: "Lambda", iteration: it });
        }
        state.iteration = it;
        let combined = (res.z_change_sq + (state.mu * res.primal).powi(2)).sqrt();
        let rec = IterationRecord { iteration: it, mu: state.mu, primal: res.primal, dual: res.dual, combined };
        sink.record(&rec)?;
        trace.push(rec);
        last_primal = res.primal;
        last_dual = res.dual;

        let init = *initial_combined.get_or_insert(combined);
        if !combined.is_finite() || combined > 1e6 * init.max(f64::MIN_POSITIVE) {
            return Err(StrumerError::Divergence { update: "residual", iteration: it });
        }

        let eps_pri = dim_sqrt * config.eps_abs + config.eps_rel * res.q_norm.max(res.block_norm);
        let eps_dual = dim_sqrt * config.eps_abs + config.eps_rel * res.lambda_norm;
        if res.primal <= eps_pri && res.dual <= eps_dual {
            converged = true;
            break;
        }

        if config.adapt.freeze_factor.is_some_and(|f| combined < f * config.eps_abs) {
            state.adapt_frozen = true;
        }
        let scheduled = it <= 100 || it % 10 == 0;
        if scheduled && !state.adapt_frozen && adapt_penalty(&mut state, &config.adapt, res.primal, res.dual) {
            debug!("iteration {it}: mu -> {:.3e}", state.mu);
        }
    }

    let mut x = state.x;
    if x.nrows() != original_rows {
        x = CMat::from_fn(original_rows, l, |i, j| x[(i, j)]);
    }
    let diagnostics = SolveDiagnostics {
        iterations: state.iteration,
        primal: last_primal,
        dual: last_dual,
        converged,
        wall_time_s: start.elapsed().as_secs_f64(),
        channels: l,
        final_mu: state.mu,
        trace,
    };
    Ok(SolveOutput { x, t: state.t, t_channels: state.t_channels, diagnostics })
}

/// Solve, then Root-MUSIC and amplitude least squares on the original data.
pub fn estimate(obs: &Observation, config: &SolverConfig) -> Result<EstimationResult> {
    let out = solve(obs, config)?;
    let mut est = extract(&out.t, config.order, &obs.y, &obs.mask)?;
    est.diagnostics = Some(out.diagnostics);
    Ok(est)
}
