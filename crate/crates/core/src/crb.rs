//! Deterministic Cramér-Rao bound on frequencies under circular Gaussian noise
//! with an arbitrary observation mask.

use std::f64::consts::PI;

use faer::{Mat, Side};
use log::warn;

use crate::linalg::{complex_lstsq, spd_inverse};
use crate::signal_model::{vandermonde, ObservationMask};
use crate::{c64, CMat, Result, StrumerError};

/// Above this Fisher-information condition number the bound is flagged.
const CONDITION_WARN: f64 = 1e10;

/// `dA/df`: entry `(j, k)` is `i 2 pi j e^{i 2 pi f_k j}` (zero-based `j`).
pub fn vandermonde_derivative(freqs: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, freqs.len(), |j, k| {
        let w = 2.0 * PI * j as f64;
        c64::new(0.0, w) * c64::from_polar(1.0, w * freqs[k])
    })
}

/// Fisher information of `f` for `Y = P(A(f) S + E)`, `E ~ CN(0, sigma2)`.
pub fn fisher_information(freqs: &[f64], s: &CMat, sigma2: f64, mask: &ObservationMask) -> Result<Mat<f64>> {
    let k = freqs.len();
    let (n, l) = (mask.rows(), mask.cols());
    if s.nrows() != k || s.ncols() != l {
        return Err(StrumerError::dim(format!(
            "amplitudes are {}x{}, expected {k}x{l}",
            s.nrows(),
            s.ncols()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(StrumerError::invalid(format!("noise variance {sigma2} must be positive")));
    }
    let a = vandermonde(freqs, n);
    let d = vandermonde_derivative(freqs, n);
    let mut fim = Mat::<f64>::zeros(k, k);
    for ch in 0..l {
        let obs = mask.observed_rows(ch);
        let ao = CMat::from_fn(obs.len(), k, |i, j| a[(obs[i], j)]);
        // P_perp D on the observed rows, as least-squares residuals
        let mut pd = CMat::from_fn(obs.len(), k, |i, j| d[(obs[i], j)]);
        for j in 0..k {
            let col: Vec<c64> = (0..obs.len()).map(|i| pd[(i, j)]).collect();
            let coef = complex_lstsq(ao.as_ref(), &col)
                .map_err(|e| StrumerError::Singular(format!("channel {ch}: {e}")))?;
            for i in 0..obs.len() {
                let fit: c64 = (0..k).map(|q| ao[(i, q)] * coef[q]).sum();
                pd[(i, j)] -= fit;
            }
        }
        // D^H P_perp D = (P_perp D)^H (P_perp D) since P_perp is an orthogonal projector
        let g = pd.adjoint() * &pd;
        for r in 0..k {
            for c in 0..k {
                fim[(r, c)] += (s[(r, ch)].conj() * g[(r, c)] * s[(c, ch)]).re;
            }
        }
    }
    let scale = 2.0 / sigma2;
    Ok(Mat::from_fn(k, k, |r, c| scale * 0.5 * (fim[(r, c)] + fim[(c, r)])))
}

/// Inverse Fisher information, `K x K` symmetric PSD.
pub fn crb_frequencies(freqs: &[f64], s: &CMat, sigma2: f64, mask: &ObservationMask) -> Result<Mat<f64>> {
    let fim = fisher_information(freqs, s, sigma2, mask)?;
    if freqs.is_empty() {
        return Ok(fim);
    }
    let eig = fim
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| StrumerError::Eigen(format!("{e:?}")))?;
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    // information each tone would carry with no competing tones; eigenvalues
    // at rounding level relative to it mean an unidentifiable model
    let reference = isolated_information(freqs, s, sigma2, mask);
    if !(lo > 1e-12 * reference) {
        return Err(StrumerError::Singular(format!(
            "Fisher information is not positive definite (eigenvalues {lo:.3e} .. {hi:.3e})"
        )));
    }
    if hi / lo > CONDITION_WARN {
        warn!("Fisher information condition number {:.2e}; bound is unreliable", hi / lo);
    }
    spd_inverse(&fim)
}

fn isolated_information(freqs: &[f64], s: &CMat, sigma2: f64, mask: &ObservationMask) -> f64 {
    let mut total = 0.0;
    for ch in 0..mask.cols() {
        let ssq: f64 = mask.observed_rows(ch).iter().map(|&j| (2.0 * PI * j as f64).powi(2)).sum();
        total += ssq * (0..freqs.len()).map(|k| s[(k, ch)].norm_sqr()).fold(0.0, f64::max);
    }
    2.0 * total / sigma2
}

/// `sqrt(trace(C) / K)`, the bound in RMSE units.
pub fn root_mean_crb(crb: &Mat<f64>) -> f64 {
    let k = crb.nrows();
    if k == 0 {
        return 0.0;
    }
    ((0..k).map(|i| crb[(i, i)]).sum::<f64>() / k as f64).sqrt()
}

/// Closed-form single-tone bound with complete data and one channel.
pub fn single_tone_crb(sigma2: f64, amplitude_abs: f64, n: usize) -> f64 {
    let nf = n as f64;
    6.0 * sigma2 / ((2.0 * PI).powi(2) * nf * (nf * nf - 1.0) * amplitude_abs * amplitude_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{complex_gaussian_matrix, make_mask, steering_vector, MaskPattern};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let freqs = [-0.31, 0.07, 0.42];
        let d = vandermonde_derivative(&freqs, 9);
        let h = 1e-6;
        for (k, &f) in freqs.iter().enumerate() {
            let plus = steering_vector(f + h, 9);
            let minus = steering_vector(f - h, 9);
            for j in 0..9 {
                let fd = (plus[j] - minus[j]) / (2.0 * h);
                let rel = (fd - d[(j, k)]).norm() / d[(j, k)].norm().max(1.0);
                assert!(rel < 1e-6, "j={j} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn single_tone_matches_fisher_sum() {
        // independent sum: (2/s2)|s|^2 [sum (2 pi j)^2 - (sum 2 pi j)^2 / N]
        for &(n, f, sigma2, amp) in &[(5usize, 0.13, 0.7, c(0.6, -0.8)), (31, -0.4, 0.01, c(2.0, 1.0))] {
            let w: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64).collect();
            let s1: f64 = w.iter().sum();
            let s2: f64 = w.iter().map(|v| v * v).sum();
            let info = 2.0 / sigma2 * amp.norm_sqr() * (s2 - s1 * s1 / n as f64);
            let oracle = 1.0 / info;
            let s = CMat::from_fn(1, 1, |_, _| amp);
            let crb = crb_frequencies(&[f], &s, sigma2, &ObservationMask::complete(n, 1)).unwrap();
            assert!((crb[(0, 0)] - oracle).abs() <= 1e-8 * oracle);
            let closed = single_tone_crb(sigma2, amp.norm(), n);
            assert!((closed - oracle).abs() <= 1e-8 * oracle);
        }
    }

    #[test]
    fn scaling_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let freqs = [-0.2, 0.1, 0.11];
        let s = complex_gaussian_matrix(3, 3, 1.0, &mut rng);
        let mask = ObservationMask::complete(45, 3);
        let c1 = crb_frequencies(&freqs, &s, 0.1, &mask).unwrap();
        let c2 = crb_frequencies(&freqs, &s, 0.2, &mask).unwrap();
        let scaled = CMat::from_fn(3, 3, |i, j| s[(i, j)] * c(0.0, 3.0));
        let c3 = crb_frequencies(&freqs, &scaled, 0.1, &mask).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c2[(i, j)] - 2.0 * c1[(i, j)]).abs() <= 1e-10 * c1[(i, i)].abs());
                assert!((c3[(i, j)] - c1[(i, j)] / 9.0).abs() <= 1e-10 * c1[(i, i)].abs());
                assert!((c1[(i, j)] - c1[(j, i)]).abs() <= 1e-14 * c1[(i, i)]);
            }
            assert!(c1[(i, i)] > 0.0);
        }
    }

    #[test]
    fn submasks_lose_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let n = rng.random_range(9..=21);
            let l = rng.random_range(1..=3);
            let freqs = [-0.3 + 0.05 * rng.random::<f64>(), 0.1 + 0.1 * rng.random::<f64>()];
            let s = complex_gaussian_matrix(2, l, 1.0, &mut rng);
            let full = crb_frequencies(&freqs, &s, 0.3, &ObservationMask::complete(n, l)).unwrap();
            let mask = make_mask(MaskPattern::Elements { fraction: 0.8 }, n, l, &mut rng).unwrap();
            let sub = crb_frequencies(&freqs, &s, 0.3, &mask).unwrap();
            for i in 0..2 {
                assert!(full[(i, i)] <= sub[(i, i)] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn unidentifiable_is_reported() {
        let s = CMat::from_fn(2, 1, |_, _| c(1.0, 0.0));
        let mask = ObservationMask::from_bits(6, 1, vec![true, true, false, false, false, false], MaskPattern::Rows { kept: 2 }).unwrap();
        assert!(matches!(crb_frequencies(&[0.1, 0.3], &s, 1.0, &mask), Err(StrumerError::Singular(_))));
        assert!(crb_frequencies(&[0.1], &s, 0.0, &mask).is_err());
    }

    #[test]
    fn root_mean_examples() {
        let m = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { [4.0, 16.0][i] } else { 0.0 });
        assert!((root_mean_crb(&m) - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(root_mean_crb(&Mat::<f64>::zeros(0, 0)), 0.0);
    }
}
