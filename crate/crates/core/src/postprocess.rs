//! Frequency extraction (Root-MUSIC), Vandermonde powers, amplitude least
//! squares and frequency scoring.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg::{complex_lstsq, general_eigenvalues, hermitian_eigen, spd_solve};
use crate::signal_model::{steering_vector, vandermonde, wrapped_gap, ObservationMask};
use crate::solver::SolveDiagnostics;
use crate::structured_ops::{toeplitz_lift, ToeplitzCoeffs};
use crate::{c64, CMat, Result, StrumerError};

/// Roots this far outside the unit circle are still candidates.
const ROOT_MODULUS_SLACK: f64 = 1e-6;
/// Roots closer than this in angle (cycles) are treated as one reciprocal pair.
const ROOT_ANGLE_MERGE: f64 = 1e-6;
/// Two roots this close (or mirrored this closely) are averaged in angle.
const ROOT_PAIR_TOL: f64 = 1e-5;

/// Recovered line spectrum.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Ascending, in `[-1/2, 1/2)`.
    pub freqs: Vec<f64>,
    /// `K x L`.
    pub amplitudes: CMat,
    /// Vandermonde powers of the recovered Toeplitz matrix.
    pub powers: Vec<f64>,
    pub diagnostics: Option<SolveDiagnostics>,
}

/// Frequencies of `T(t) = A_n diag(p) A_n^H` from its noise subspace.
pub fn root_music(t: &ToeplitzCoeffs, k: usize) -> Result<Vec<f64>> {
    let n = t.len();
    if k >= n {
        return Err(StrumerError::invalid(format!("order {k} must be below Toeplitz size {n}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if t.as_slice().iter().all(|v| *v == c64::new(0.0, 0.0)) {
        return Err(StrumerError::invalid("Toeplitz coefficients are all zero"));
    }
    let tm = toeplitz_lift(t);
    let (_, vecs) = hermitian_eigen(tm.as_ref())?;
    // eigenvalues ascend, so the noise subspace is the first n - k columns
    let noise = vecs.as_ref().subcols(0, n - k);
    let c = noise * noise.adjoint();

    // z^{n-1} a(1/z)^T C a(z): coefficient of z^{d+n-1} sums the d-th diagonal
    let mut coeffs = vec![c64::new(0.0, 0.0); 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            coeffs[j + n - 1 - i] += c[(i, j)];
        }
    }
    let roots = polynomial_roots(&coeffs)?;

    let mut candidates: Vec<(usize, c64)> =
        roots.iter().copied().enumerate().filter(|(_, z)| z.norm() <= 1.0 + ROOT_MODULUS_SLACK).collect();
    candidates.sort_by(|a, b| (a.1.norm() - 1.0).abs().total_cmp(&(b.1.norm() - 1.0).abs()));
    let mut freqs: Vec<f64> = Vec::with_capacity(k);
    for (idx, _) in candidates {
        let f = wrap_frequency(paired_angle(&roots, idx) / (2.0 * PI));
        if freqs.iter().any(|&g| wrapped_gap(f, g).abs() < ROOT_ANGLE_MERGE) {
            continue;
        }
        freqs.push(f);
        if freqs.len() == k {
            break;
        }
    }
    if freqs.len() < k {
        return Err(StrumerError::Eigen(format!("only {} distinct roots found for order {k}", freqs.len())));
    }
    freqs.sort_by(f64::total_cmp);
    Ok(freqs)
}

/// Angle of root `idx`, averaged with its partner when the partner is its
/// reflection `1/conj(z)` or a rounding split of a double root on the circle.
/// Both members of such a pair share one exact angle, and a split double root
/// is only accurate to `sqrt(eps)` individually while its mean is not.
fn paired_angle(roots: &[c64], idx: usize) -> f64 {
    let z = roots[idx];
    let mirror = z / z.norm_sqr();
    let partner = roots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != idx)
        .map(|(_, &w)| w)
        .min_by(|a, b| (a - z).norm().min((a - mirror).norm()).total_cmp(&(b - z).norm().min((b - mirror).norm())));
    match partner {
        Some(w) if (w - z).norm().min((w - mirror).norm()) < ROOT_PAIR_TOL => (z / z.norm() + w / w.norm()).arg(),
        _ => z.arg(),
    }
}

/// Maps any real frequency into `[-1/2, 1/2)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - (f + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Roots of `sum_i coeffs[i] z^i` via companion-matrix eigenvalues. Vanishing
/// leading coefficients (roots at infinity) and trailing ones (roots at zero)
/// are dropped first.
pub fn polynomial_roots(coeffs: &[c64]) -> Result<Vec<c64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(StrumerError::invalid("zero polynomial"));
    }
    let tiny = 1e-14 * scale;
    let hi = coeffs.iter().rposition(|c| c.norm() > tiny).unwrap_or(0);
    let lo = coeffs.iter().position(|c| c.norm() > tiny).unwrap_or(0);
    let mut roots = vec![c64::new(0.0, 0.0); lo];
    let deg = hi - lo;
    if deg == 0 {
        return Ok(roots);
    }
    let lead = coeffs[hi];
    let comp = CMat::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[lo + i] / lead
        } else if i == j + 1 {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    roots.extend(general_eigenvalues(comp.as_ref())?);
    Ok(roots)
}

/// Nonnegative least-squares-style powers: the unconstrained fit of `T(t)` by
/// `A_n diag(p) A_n^H` in Frobenius norm, clipped at zero.
pub fn vandermonde_powers(t: &ToeplitzCoeffs, freqs: &[f64]) -> Result<Vec<f64>> {
    let k = freqs.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let n = t.len();
    let tm = toeplitz_lift(t);
    let a = vandermonde(freqs, n);
    let gram = a.adjoint() * &a;
    let g = Mat::<f64>::from_fn(k, k, |i, j| gram[(i, j)].norm_sqr());
    let ta = &tm * &a;
    let rhs: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| (a[(i, j)].conj() * ta[(i, j)]).re).sum())
        .collect();
    let p = spd_solve(&g, &rhs)?;
    Ok(p.into_iter().map(|v| v.max(0.0)).collect())
}

/// Per-channel least squares of the observed rows of `y` onto `A(f)`.
pub fn amplitude_ls(freqs: &[f64], y: &CMat, mask: &ObservationMask) -> Result<CMat> {
    let (rows, l) = (y.nrows(), y.ncols());
    if mask.rows() != rows || mask.cols() != l {
        return Err(StrumerError::dim("mask and data shapes differ"));
    }
    let k = freqs.len();
    let mut s = CMat::zeros(k, l);
    if k == 0 {
        return Ok(s);
    }
    let a = vandermonde(freqs, rows);
    for ch in 0..l {
        let obs = mask.observed_rows(ch);
        if obs.len() < k {
            return Err(StrumerError::Singular(format!(
                "channel {ch}: {} observed rows for {k} frequencies",
                obs.len()
            )));
        }
        let sub = CMat::from_fn(obs.len(), k, |i, j| a[(obs[i], j)]);
        let b: Vec<c64> = obs.iter().map(|&i| y[(i, ch)]).collect();
        let sol = complex_lstsq(sub.as_ref(), &b)
            .map_err(|e| StrumerError::Singular(format!("channel {ch}: {e}")))?;
        for (j, v) in sol.into_iter().enumerate() {
            s[(j, ch)] = v;
        }
    }
    Ok(s)
}

/// Root-MUSIC, powers and amplitudes in one pass.
pub fn extract(t: &ToeplitzCoeffs, k: usize, y: &CMat, mask: &ObservationMask) -> Result<EstimationResult> {
    let freqs = root_music(t, k)?;
    let powers = vandermonde_powers(t, &freqs)?;
    let amplitudes = amplitude_ls(&freqs, y, mask)?;
    Ok(EstimationResult { freqs, amplitudes, powers, diagnostics: None })
}

/// How estimates are paired with the truth before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    /// Best assignment (exhaustive for `K <= 6`, greedy beyond).
    #[default]
    Optimal,
    /// Both lists sorted ascending, paired in order.
    Sorted,
}

/// `sqrt(mean(d^2))` over the best pairing of `est` with `truth`, using the
/// wrapped distance on the unit circle.
pub fn frequency_rmse(est: &[f64], truth: &[f64], matching: Matching) -> Result<f64> {
    matched_rmse(est, truth, matching, wrapped_gap)
}

/// [`frequency_rmse`] with an arbitrary signed distance.
pub fn matched_rmse(est: &[f64], truth: &[f64], matching: Matching, dist: impl Fn(f64, f64) -> f64) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(StrumerError::dim(format!("{} estimates for {} true values", est.len(), truth.len())));
    }
    let k = est.len();
    if k == 0 {
        return Ok(0.0);
    }
    let sq = |a: f64, b: f64| dist(a, b).powi(2);
    let total = match matching {
        Matching::Sorted => {
            let mut e = est.to_vec();
            let mut t = truth.to_vec();
            e.sort_by(f64::total_cmp);
            t.sort_by(f64::total_cmp);
            e.iter().zip(&t).map(|(&a, &b)| sq(a, b)).sum()
        }
        Matching::Optimal if k <= 6 => {
            let mut perm: Vec<usize> = (0..k).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let s: f64 = p.iter().enumerate().map(|(i, &j)| sq(est[j], truth[i])).sum();
                best = best.min(s);
            });
            best
        }
        Matching::Optimal => {
            // greedy: repeatedly take the closest remaining pair
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
            for (i, &a) in est.iter().enumerate() {
                for (j, &b) in truth.iter().enumerate() {
                    pairs.push((sq(a, b), i, j));
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (mut used_e, mut used_t) = (vec![false; k], vec![false; k]);
            let mut s = 0.0;
            for (d, i, j) in pairs {
                if !used_e[i] && !used_t[j] {
                    used_e[i] = true;
                    used_t[j] = true;
                    s += d;
                }
            }
            s
        }
    };
    Ok((total / k as f64).sqrt())
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

/// MUSIC null spectrum `a(f)^H E E^H a(f)` of the noise subspace `E`.
pub fn null_spectrum(noise_projector: &CMat, f: f64) -> f64 {
    let a = steering_vector(f, noise_projector.nrows());
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.len() {
        for j in 0..a.len() {
            acc += a[i].conj() * noise_projector[(i, j)] * a[j];
        }
    }
    acc.re
}
