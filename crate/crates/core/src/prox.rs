//! Proximity operators of `|.|^p` on complex scalars and of `||.||_2^p` on rows.
//!
//! `prox_{|.|^p, beta}(a) = argmin_u |u|^p + beta |u - a|^2 = sign(a) z`, where
//! `z in [0, |a|]` solves `2 beta z + p z^(p-1) - 2 beta |a| = 0`.
//!
//! `p = 1` is soft thresholding, `p = 2` and `p = 3/2` have closed forms
//! (linear, and quadratic in `sqrt z`). Every other exponent goes through a
//! bracketed Newton iteration started at `|a|`: the left-hand side is
//! increasing and concave on `(0, |a|]`, so after the first step the iterates
//! climb monotonically to the root from the left. Steps leaving the bracket
//! fall back to bisection.

use crate::{c64, Result, StrumerError};

const MAX_NEWTON_ITERS: usize = 200;

fn validate(beta: f64, p: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(StrumerError::invalid(format!("prox weight must be positive, got {beta}")));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(StrumerError::invalid(format!("exponent p must lie in [1, 2], got {p}")));
    }
    Ok(())
}

/// Residual `2 beta z + p z^(p-1) - 2 beta a` of the optimality equation.
pub fn z_equation_residual(beta: f64, p: f64, a_abs: f64, z: f64) -> f64 {
    2.0 * beta * z + p * z.powf(p - 1.0) - 2.0 * beta * a_abs
}

/// Magnitude of the proximal point, `0 <= z <= a_abs`.
pub fn solve_z(beta: f64, p: f64, a_abs: f64) -> Result<f64> {
    validate(beta, p)?;
    if !(a_abs >= 0.0) || !a_abs.is_finite() {
        return Err(StrumerError::invalid(format!("|a| must be finite and nonnegative, got {a_abs}")));
    }
    Ok(z_unchecked(beta, p, a_abs))
}

/// [`solve_z`] without argument validation, for inner loops.
pub(crate) fn z_unchecked(beta: f64, p: f64, a_abs: f64) -> f64 {
    if a_abs == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return (a_abs - 0.5 / beta).max(0.0);
    }
    closed_form_z(beta, p, a_abs).unwrap_or_else(|| newton_z(beta, p, a_abs))
}

/// Closed-form root for `p = 2` and `p = 3/2`; `None` otherwise.
pub fn closed_form_z(beta: f64, p: f64, a_abs: f64) -> Option<f64> {
    if p == 2.0 {
        Some(beta * a_abs / (beta + 1.0))
    } else if p == 1.5 {
        // 2 beta s^2 + 1.5 s - 2 beta a = 0 with s = sqrt(z); take the positive
        // root in the cancellation-free form
        let disc = (2.25 + 16.0 * beta * beta * a_abs).sqrt();
        let s = 4.0 * beta * a_abs / (1.5 + disc);
        Some(s * s)
    } else {
        None
    }
}

/// Bracketed Newton solve of the optimality equation for `1 < p <= 2`.
pub fn newton_z(beta: f64, p: f64, a_abs: f64) -> f64 {
    debug_assert!(p > 1.0);
    if a_abs == 0.0 {
        return 0.0;
    }
    let scale = (2.0 * beta * a_abs).max(1.0);
    let f = |z: f64| z_equation_residual(beta, p, a_abs, z);
    let (mut lo, mut hi) = (0.0_f64, a_abs);
    let mut z = a_abs;
    for _ in 0..MAX_NEWTON_ITERS {
        let fz = f(z);
        if fz.abs() <= 1e-14 * scale {
            return z;
        }
        if fz > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let deriv = 2.0 * beta + p * (p - 1.0) * z.powf(p - 2.0);
        let mut next = z - fz / deriv;
        if !(next > lo && next < hi) {
            // bisect in log scale while the bracket spans decades: roots near
            // zero can be astronomically small for p close to 1
            next = if lo == 0.0 {
                hi * 1e-3
            } else if hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        if (next - z).abs() <= f64::EPSILON * z.abs() || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        z = next;
    }
    z
}

/// `sign(a) z` with `sign(0) = 0`.
pub fn prox_abs_p(a: c64, beta: f64, p: f64) -> Result<c64> {
    validate(beta, p)?;
    Ok(prox_abs_p_unchecked(a, beta, p))
}

pub(crate) fn prox_abs_p_unchecked(a: c64, beta: f64, p: f64) -> c64 {
    let mag = a.norm();
    if mag == 0.0 {
        return c64::new(0.0, 0.0);
    }
    a * (z_unchecked(beta, p, mag) / mag)
}

/// Row-wise proximal map of `||.||_2^p`: shrink the row norm, keep its direction.
pub fn prox_row_l2p(row: &[c64], beta: f64, p: f64) -> Result<Vec<c64>> {
    validate(beta, p)?;
    Ok(prox_row_l2p_unchecked(row, beta, p))
}

pub(crate) fn prox_row_l2p_unchecked(row: &[c64], beta: f64, p: f64) -> Vec<c64> {
    let norm = row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![c64::new(0.0, 0.0); row.len()];
    }
    let factor = z_unchecked(beta, p, norm) / norm;
    row.iter().map(|v| v * factor).collect()
}
