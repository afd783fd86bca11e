//! Ground-truth signals, noise, observation masks and the embedding certificate.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::structured_ops::ToeplitzCoeffs;
use crate::{c64, CMat, Result, StrumerError};

/// Frequencies (cycles/sample, in `[-1/2, 1/2)`) and the `K x L` amplitude matrix.
#[derive(Debug, Clone)]
pub struct FrequencyAmplitudeModel {
    freqs: Vec<f64>,
    amplitudes: CMat,
}

impl FrequencyAmplitudeModel {
    pub fn new(freqs: Vec<f64>, amplitudes: CMat) -> Result<Self> {
        if amplitudes.nrows() != freqs.len() {
            return Err(StrumerError::dim(format!(
                "{} frequencies but {} amplitude rows",
                freqs.len(),
                amplitudes.nrows()
            )));
        }
        if amplitudes.ncols() == 0 {
            return Err(StrumerError::invalid("model needs at least one channel"));
        }
        for (i, &f) in freqs.iter().enumerate() {
            if !(-0.5..0.5).contains(&f) {
                return Err(StrumerError::invalid(format!("frequency {f} outside [-1/2, 1/2)")));
            }
            if freqs[..i].iter().any(|&g| wrapped_gap(f, g) == 0.0) {
                return Err(StrumerError::invalid(format!("frequency {f} repeated")));
            }
        }
        Ok(FrequencyAmplitudeModel { freqs, amplitudes })
    }

    /// Amplitudes drawn iid standard complex Gaussian, `E|s|^2 = 1`.
    pub fn random_amplitudes<R: Rng + ?Sized>(freqs: Vec<f64>, channels: usize, rng: &mut R) -> Result<Self> {
        let k = freqs.len();
        let amplitudes = complex_gaussian_matrix(k, channels, 1.0, rng);
        Self::new(freqs, amplitudes)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amplitudes(&self) -> &CMat {
        &self.amplitudes
    }

    pub fn order(&self) -> usize {
        self.freqs.len()
    }

    pub fn channels(&self) -> usize {
        self.amplitudes.ncols()
    }

    /// Checks the embedding precondition `K < n` for `N = 2n - 1` samples.
    pub fn check_samples(&self, samples: usize) -> Result<()> {
        let n = samples.div_ceil(2);
        if self.order() >= n {
            return Err(StrumerError::invalid(format!(
                "model order {} must be below n = {n} for N = {samples}",
                self.order()
            )));
        }
        Ok(())
    }
}

/// Signed distance on the unit circle of circumference one, in `[-1/2, 1/2)`.
pub fn wrapped_gap(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - (d + 0.5).floor()
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> c64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64::new(s * re, s * im)
}

/// Matrix of iid `CN(0, variance)` entries, filled column by column.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(variance, rng);
        }
    }
    m
}

/// `[1, e^{i 2 pi f}, .., e^{i 2 pi f (m-1)}]`.
pub fn steering_vector(f: f64, m: usize) -> Vec<c64> {
    (0..m).map(|j| c64::from_polar(1.0, 2.0 * PI * f * j as f64)).collect()
}

/// `m x K` Vandermonde matrix `A(f)`.
pub fn vandermonde(freqs: &[f64], m: usize) -> CMat {
    let mut a = CMat::zeros(m, freqs.len());
    for (k, &f) in freqs.iter().enumerate() {
        for (j, v) in steering_vector(f, m).into_iter().enumerate() {
            a[(j, k)] = v;
        }
    }
    a
}

/// `X = A(f) S` with `samples` rows.
pub fn synthesize(model: &FrequencyAmplitudeModel, samples: usize) -> CMat {
    let a = vandermonde(model.freqs(), samples);
    if model.order() == 0 {
        return CMat::zeros(samples, model.channels());
    }
    &a * model.amplitudes()
}

/// Additive noise distributions. GMM variants mix `CN(0, var1)` and `CN(0, var2)`
/// with outlier probability `c2`; the row variant draws the component once per row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    Gaussian { variance: f64 },
    Gmm { c2: f64, var1: f64, var2: f64 },
    RowGmm { c2: f64, var1: f64, var2: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { variance } => {
                if !(variance >= 0.0) {
                    return Err(StrumerError::invalid(format!("noise variance {variance} is negative")));
                }
            }
            NoiseModel::Gmm { c2, var1, var2 } | NoiseModel::RowGmm { c2, var1, var2 } => {
                if !(0.0..=1.0).contains(&c2) {
                    return Err(StrumerError::invalid(format!("mixture weight c2 = {c2} outside [0, 1]")));
                }
                if !(var1 >= 0.0 && var2 >= 0.0) {
                    return Err(StrumerError::invalid("mixture variances must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Variance of the nominal (Gaussian) component.
    pub fn nominal_variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => variance,
            NoiseModel::Gmm { var1, .. } | NoiseModel::RowGmm { var1, .. } => var1,
        }
    }

    /// Nominal noise at `snr_db`, mixtures with `var2 = ratio * var1`.
    pub fn at_snr(self, snr_db: f64) -> Self {
        let v = snr_to_sigma(snr_db);
        match self {
            NoiseModel::Gaussian { .. } => NoiseModel::Gaussian { variance: v },
            NoiseModel::Gmm { c2, var1, var2 } => NoiseModel::Gmm { c2, var1: v, var2: v * ratio(var1, var2) },
            NoiseModel::RowGmm { c2, var1, var2 } => NoiseModel::RowGmm { c2, var1: v, var2: v * ratio(var1, var2) },
        }
    }
}

fn ratio(var1: f64, var2: f64) -> f64 {
    if var1 > 0.0 {
        var2 / var1
    } else {
        1.0
    }
}

/// Noise variance (or the nominal mixture variance) giving `snr_db` for
/// unit-power amplitudes.
pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn sample_noise<R: Rng + ?Sized>(noise: &NoiseModel, rows: usize, cols: usize, rng: &mut R) -> Result<CMat> {
    noise.validate()?;
    Ok(match *noise {
        NoiseModel::Gaussian { variance } => complex_gaussian_matrix(rows, cols, variance, rng),
        NoiseModel::Gmm { c2, var1, var2 } => {
            let mut m = CMat::zeros(rows, cols);
            for j in 0..cols {
                for i in 0..rows {
                    let v = if rng.random::<f64>() < c2 { var2 } else { var1 };
                    m[(i, j)] = complex_gaussian(v, rng);
                }
            }
            m
        }
        NoiseModel::RowGmm { c2, var1, var2 } => {
            let mut m = CMat::zeros(rows, cols);
            for i in 0..rows {
                let v = if rng.random::<f64>() < c2 { var2 } else { var1 };
                for j in 0..cols {
                    m[(i, j)] = complex_gaussian(v, rng);
                }
            }
            m
        }
    })
}

/// How observed entries are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaskPattern {
    Complete,
    /// Mode 2: exactly `round(fraction N L)` entries, uniformly at random.
    Elements { fraction: f64 },
    /// Mode 1: the same `kept` rows in every channel.
    Rows { kept: usize },
}

/// Boolean `N x L` indicator of observed entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::scenario::MaskDocument", into = "crate::scenario::MaskDocument")]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
    pattern: MaskPattern,
}

impl ObservationMask {
    pub fn complete(rows: usize, cols: usize) -> Self {
        ObservationMask { rows, cols, bits: vec![true; rows * cols], pattern: MaskPattern::Complete }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>, pattern: MaskPattern) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(StrumerError::dim(format!("mask has {} bits for {rows}x{cols}", bits.len())));
        }
        Ok(ObservationMask { rows, cols, bits, pattern })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pattern(&self) -> MaskPattern {
        self.pattern
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn observed_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_complete(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// True when every row is either fully observed or fully missing.
    pub fn is_row_uniform(&self) -> bool {
        (0..self.rows).all(|i| {
            let first = self.is_observed(i, 0);
            (1..self.cols).all(|j| self.is_observed(i, j) == first)
        })
    }

    pub fn observed_rows(&self, col: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.is_observed(i, col)).collect()
    }

    /// The mask extended by one fully missing row.
    pub fn with_missing_row(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.extend(std::iter::repeat_n(false, self.cols));
        ObservationMask { rows: self.rows + 1, cols: self.cols, bits, pattern: self.pattern }
    }
}

pub fn make_mask<R: Rng + ?Sized>(pattern: MaskPattern, rows: usize, cols: usize, rng: &mut R) -> Result<ObservationMask> {
    let total = rows * cols;
    let bits = match pattern {
        MaskPattern::Complete => vec![true; total],
        MaskPattern::Elements { fraction } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(StrumerError::invalid(format!("observed fraction {fraction} outside (0, 1]")));
            }
            // iid Bernoulli conditioned on its count is a uniform subset of that size
            let count = (fraction * total as f64).round() as usize;
            let mut bits = vec![false; total];
            for idx in sample(rng, total, count) {
                bits[idx] = true;
            }
            bits
        }
        MaskPattern::Rows { kept } => {
            if kept == 0 || kept > rows {
                return Err(StrumerError::invalid(format!("kept rows {kept} outside 1..={rows}")));
            }
            let mut bits = vec![false; total];
            for i in sample(rng, rows, kept) {
                for j in 0..cols {
                    bits[i * cols + j] = true;
                }
            }
            bits
        }
    };
    ObservationMask::from_bits(rows, cols, bits, pattern)
}

/// Data-fit objective `g`. The masked variants only count observed entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    Fro,
    MaskedFro,
    Lp { p: f64 },
    MaskedLp { p: f64 },
    RowLp { p: f64 },
    MaskedRowLp { p: f64 },
}

impl Objective {
    /// Entrywise objective with exponent `p`, masked iff the mask is incomplete.
    pub fn entrywise(p: f64, mask: &ObservationMask) -> Self {
        let masked = !mask.is_complete();
        match (p == 2.0, masked) {
            (true, false) => Objective::Fro,
            (true, true) => Objective::MaskedFro,
            (false, false) => Objective::Lp { p },
            (false, true) => Objective::MaskedLp { p },
        }
    }

    pub fn row_wise(p: f64, mask: &ObservationMask) -> Self {
        if mask.is_complete() {
            Objective::RowLp { p }
        } else {
            Objective::MaskedRowLp { p }
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            Objective::Fro | Objective::MaskedFro => 2.0,
            Objective::Lp { p } | Objective::MaskedLp { p } | Objective::RowLp { p } | Objective::MaskedRowLp { p } => p,
        }
    }

    pub fn is_masked(&self) -> bool {
        matches!(self, Objective::MaskedFro | Objective::MaskedLp { .. } | Objective::MaskedRowLp { .. })
    }

    pub fn is_row_wise(&self) -> bool {
        matches!(self, Objective::RowLp { .. } | Objective::MaskedRowLp { .. })
    }

    /// Frobenius objectives (where the likelihood is Gaussian).
    pub fn is_gaussian(&self) -> bool {
        self.exponent() == 2.0 && !self.is_row_wise()
    }

    pub fn masked(self) -> Self {
        match self {
            Objective::Fro => Objective::MaskedFro,
            Objective::Lp { p } => Objective::MaskedLp { p },
            Objective::RowLp { p } => Objective::MaskedRowLp { p },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.exponent();
        if !(1.0..=2.0).contains(&p) {
            return Err(StrumerError::invalid(format!("objective exponent {p} outside [1, 2]")));
        }
        Ok(())
    }

    /// `g(residual)` restricted to observed entries when masked.
    pub fn evaluate(&self, residual: &CMat, mask: &ObservationMask) -> f64 {
        let p = self.exponent();
        let seen = |i, j| !self.is_masked() || mask.is_observed(i, j);
        if self.is_row_wise() {
            (0..residual.nrows())
                .map(|i| {
                    let sq: f64 = (0..residual.ncols())
                        .filter(|&j| seen(i, j))
                        .map(|j| residual[(i, j)].norm_sqr())
                        .sum();
                    sq.powf(p / 2.0)
                })
                .sum()
        } else {
            let mut acc = 0.0;
            for j in 0..residual.ncols() {
                for i in 0..residual.nrows() {
                    if seen(i, j) {
                        acc += residual[(i, j)].norm().powf(p);
                    }
                }
            }
            acc
        }
    }
}

/// Masked data `Y = P_Omega(X + E)` with its objective.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: CMat,
    pub mask: ObservationMask,
    pub objective: Objective,
}

impl Observation {
    /// Zeroes unobserved entries of `y`.
    pub fn new(mut y: CMat, mask: ObservationMask, objective: Objective) -> Result<Self> {
        if y.nrows() != mask.rows() || y.ncols() != mask.cols() {
            return Err(StrumerError::dim(format!(
                "data {}x{} vs mask {}x{}",
                y.nrows(),
                y.ncols(),
                mask.rows(),
                mask.cols()
            )));
        }
        objective.validate()?;
        if !mask.is_complete() && !objective.is_masked() {
            return Err(StrumerError::invalid("incomplete mask requires a masked objective"));
        }
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                if !mask.is_observed(i, j) {
                    y[(i, j)] = c64::new(0.0, 0.0);
                }
            }
        }
        Ok(Observation { y, mask, objective })
    }

    pub fn samples(&self) -> usize {
        self.y.nrows()
    }

    pub fn channels(&self) -> usize {
        self.y.ncols()
    }

    /// For even `N`, appends a missing sample so the Hankel lift is square.
    pub fn padded_to_odd(&self) -> Observation {
        if self.samples() % 2 == 1 {
            return self.clone();
        }
        let (n, l) = (self.samples(), self.channels());
        let y = CMat::from_fn(n + 1, l, |i, j| if i < n { self.y[(i, j)] } else { c64::new(0.0, 0.0) });
        Observation { y, mask: self.mask.with_missing_row(), objective: self.objective.masked() }
    }
}

pub fn observe(x: &CMat, noise: &CMat, mask: ObservationMask, objective: Objective) -> Result<Observation> {
    if x.nrows() != noise.nrows() || x.ncols() != noise.ncols() {
        return Err(StrumerError::dim("signal and noise shapes differ"));
    }
    Observation::new(x + noise, mask, objective)
}

/// Toeplitz coefficients certifying that `A(f) S` embeds into rank-K PSD blocks.
#[derive(Debug, Clone)]
pub struct EmbeddingCertificate {
    pub t_channels: Vec<ToeplitzCoeffs>,
    pub t: ToeplitzCoeffs,
    pub powers: Vec<f64>,
    pub channel_powers: Vec<Vec<f64>>,
}

/// `T(t) = A_n diag(p) A_n^H` and `T(t_l) = A_n diag(p_l) A_n^H` with
/// `p_k = ||S_k||_2 / sqrt(L)` and `p_{l,k} = |s_{kl}|^2 / p_k`.
pub fn embedding_certificate(model: &FrequencyAmplitudeModel, samples: usize) -> Result<EmbeddingCertificate> {
    if samples.is_multiple_of(2) {
        return Err(StrumerError::invalid("embedding needs an odd number of samples"));
    }
    model.check_samples(samples)?;
    let n = samples.div_ceil(2);
    let l = model.channels();
    let s = model.amplitudes();
    let powers: Vec<f64> = (0..model.order())
        .map(|k| ((0..l).map(|j| s[(k, j)].norm_sqr()).sum::<f64>() / l as f64).sqrt())
        .collect();
    if let Some(k) = powers.iter().position(|&p| !(p > 0.0)) {
        return Err(StrumerError::invalid(format!("component {k} has zero amplitude in every channel")));
    }
    let channel_powers: Vec<Vec<f64>> = (0..l)
        .map(|j| (0..model.order()).map(|k| s[(k, j)].norm_sqr() / powers[k]).collect())
        .collect();
    let coeffs = |p: &[f64]| {
        // first column of A_n diag(p) A_n^H: entry m is sum_k p_k e^{i 2 pi f_k m}
        let v: Vec<c64> = (0..n)
            .map(|m| {
                model
                    .freqs()
                    .iter()
                    .zip(p)
                    .map(|(&f, &pk)| c64::from_polar(pk, 2.0 * PI * f * m as f64))
                    .sum()
            })
            .collect();
        ToeplitzCoeffs::from_proper_part(v)
    };
    Ok(EmbeddingCertificate {
        t_channels: channel_powers.iter().map(|p| coeffs(p)).collect(),
        t: coeffs(&powers),
        powers,
        channel_powers,
    })
}
