//! JSON documents for scenarios and estimates.
//!
//! Complex numbers are `[re, im]` pairs, matrices are arrays of rows, and masks
//! carry a row-major array of 0/1 bits. Floats are written in shortest
//! round-trip form, so a document read back is bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::postprocess::{frequency_rmse, EstimationResult, Matching};
use crate::signal_model::{
    make_mask, sample_noise, synthesize, FrequencyAmplitudeModel, MaskPattern, NoiseModel, Objective, Observation,
    ObservationMask,
};
use crate::{c64, CMat, Result, StrumerError};

/// Serde adapter for complex matrices as rows of `[re, im]`.
pub mod complex_matrix {
    use super::*;

    pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMat, String> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged complex matrix".into());
        }
        Ok(CMat::from_fn(rows.len(), cols, |i, j| c64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Wire form of [`ObservationMask`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskDocument {
    pub rows: usize,
    pub cols: usize,
    pub pattern: MaskPattern,
    pub bits: Vec<u8>,
}

impl From<ObservationMask> for MaskDocument {
    fn from(m: ObservationMask) -> Self {
        MaskDocument {
            rows: m.rows(),
            cols: m.cols(),
            pattern: m.pattern(),
            bits: m.bits().iter().map(|&b| u8::from(b)).collect(),
        }
    }
}

impl TryFrom<MaskDocument> for ObservationMask {
    type Error = StrumerError;

    fn try_from(d: MaskDocument) -> Result<Self> {
        if let Some(bad) = d.bits.iter().find(|&&b| b > 1) {
            return Err(StrumerError::invalid(format!("mask bit {bad} is not 0 or 1")));
        }
        ObservationMask::from_bits(d.rows, d.cols, d.bits.into_iter().map(|b| b == 1).collect(), d.pattern)
    }
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub samples: usize,
    pub channels: usize,
    pub freqs: Vec<f64>,
    pub snr_db: f64,
    /// Noise shape; the nominal variance is set from `snr_db`.
    pub noise: NoiseModel,
    pub mask: MaskPattern,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(samples: usize, channels: usize, freqs: Vec<f64>, snr_db: f64) -> Self {
        ScenarioSpec {
            samples,
            channels,
            freqs,
            snr_db,
            noise: NoiseModel::Gaussian { variance: 1.0 },
            mask: MaskPattern::Complete,
            seed: 0,
        }
    }

    /// Draws amplitudes, noise and mask from one generator seeded with `seed`.
    pub fn generate(&self) -> Result<Scenario> {
        if self.channels == 0 {
            return Err(StrumerError::invalid("at least one channel is required"));
        }
        if !self.snr_db.is_finite() {
            return Err(StrumerError::invalid(format!("SNR {} dB is not finite", self.snr_db)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let model = FrequencyAmplitudeModel::random_amplitudes(self.freqs.clone(), self.channels, &mut rng)?;
        model.check_samples(self.samples)?;
        let noise = self.noise.at_snr(self.snr_db);
        let x = synthesize(&model, self.samples);
        let e = sample_noise(&noise, self.samples, self.channels, &mut rng)?;
        let mask = make_mask(self.mask, self.samples, self.channels, &mut rng)?;
        let y = CMat::from_fn(self.samples, self.channels, |i, j| {
            if mask.is_observed(i, j) {
                x[(i, j)] + e[(i, j)]
            } else {
                c64::new(0.0, 0.0)
            }
        });
        Ok(Scenario {
            samples: self.samples,
            channels: self.channels,
            freqs: self.freqs.clone(),
            amplitudes: model.amplitudes().clone(),
            snr_db: self.snr_db,
            noise,
            mask,
            y,
            seed: self.seed,
        })
    }
}

/// A realized problem: ground truth and the observed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub samples: usize,
    pub channels: usize,
    pub freqs: Vec<f64>,
    /// `K x L`.
    #[serde(with = "complex_matrix")]
    pub amplitudes: CMat,
    pub snr_db: f64,
    /// Noise actually drawn from.
    pub noise: NoiseModel,
    pub mask: ObservationMask,
    /// `N x L`, zero where unobserved.
    #[serde(with = "complex_matrix")]
    pub y: CMat,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let (n, l, k) = (self.samples, self.channels, self.freqs.len());
        if self.y.nrows() != n || self.y.ncols() != l {
            return Err(StrumerError::dim(format!("data is {}x{}, expected {n}x{l}", self.y.nrows(), self.y.ncols())));
        }
        if self.mask.rows() != n || self.mask.cols() != l {
            return Err(StrumerError::dim("mask shape does not match the data"));
        }
        if self.amplitudes.nrows() != k || self.amplitudes.ncols() != l {
            return Err(StrumerError::dim(format!("amplitudes are not {k}x{l}")));
        }
        if !crate::linalg::all_finite(self.y.as_ref()) {
            return Err(StrumerError::invalid("data contains non-finite values"));
        }
        self.noise.validate()?;
        self.model().map(|_| ())
    }

    pub fn model(&self) -> Result<FrequencyAmplitudeModel> {
        FrequencyAmplitudeModel::new(self.freqs.clone(), self.amplitudes.clone())
    }

    /// Entrywise (or row-wise) `p` objective, masked iff data are missing.
    pub fn observation(&self, p: f64, row_wise: bool) -> Result<Observation> {
        let objective = if row_wise { Objective::row_wise(p, &self.mask) } else { Objective::entrywise(p, &self.mask) };
        Observation::new(self.y.clone(), self.mask.clone(), objective)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

/// Output of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub method: String,
    pub order: usize,
    pub freqs: Vec<f64>,
    #[serde(with = "complex_matrix")]
    pub amplitudes: CMat,
    pub powers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub wall_time_s: f64,
    /// Frequency RMSE against the scenario's ground truth when the orders agree.
    pub rmse: Option<f64>,
}

impl EstimateDocument {
    pub fn new(method: &str, est: &EstimationResult, truth: Option<&[f64]>) -> Self {
        let d = est.diagnostics.as_ref();
        let rmse = truth
            .filter(|t| t.len() == est.freqs.len())
            .and_then(|t| frequency_rmse(&est.freqs, t, Matching::Optimal).ok());
        EstimateDocument {
            method: method.to_string(),
            order: est.freqs.len(),
            freqs: est.freqs.clone(),
            amplitudes: est.amplitudes.clone(),
            powers: est.powers.clone(),
            iterations: d.map_or(0, |d| d.iterations),
            converged: d.is_some_and(|d| d.converged),
            primal_residual: d.map_or(f64::NAN, |d| d.primal),
            dual_residual: d.map_or(f64::NAN, |d| d.dual),
            wall_time_s: d.map_or(0.0, |d| d.wall_time_s),
            rmse,
        }
    }
}
