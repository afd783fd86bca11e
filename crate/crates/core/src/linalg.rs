//! Small dense helpers on top of faer shared by the other modules.

use faer::{Mat, MatRef, Side};

use crate::{c64, CMat, Result, StrumerError};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle is read.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| StrumerError::Eigen(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| StrumerError::Eigen(format!("{e:?}")))
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: MatRef<'_, c64>) -> CMat {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn frob_norm_sq(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

pub fn frob_norm(m: MatRef<'_, c64>) -> f64 {
    frob_norm_sq(m).sqrt()
}

/// Squared Frobenius distance `||a - b||_F^2`.
pub fn frob_dist_sq(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc
}

/// Real inner product `Re tr(A^H B)`.
pub fn real_inner(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    acc
}

/// Real inner product of complex vectors, `Re sum conj(a_i) b_i`.
pub fn real_inner_vec(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn all_finite(m: MatRef<'_, c64>) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return false;
            }
        }
    }
    true
}

pub fn column(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Solves the real symmetric positive definite system `a x = b` by Cholesky.
pub fn spd_solve(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| StrumerError::Singular(format!("cholesky: {e:?}")))?;
    let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..b.len()).map(|i| rhs[(i, 0)]).collect())
}

/// Inverse of a real symmetric positive definite matrix.
pub fn spd_inverse(a: &Mat<f64>) -> Result<Mat<f64>> {
    use faer::linalg::solvers::DenseSolveCore;
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| StrumerError::Singular(format!("cholesky: {e:?}")))?;
    Ok(llt.inverse())
}

/// Least-squares solution of `a x = b` for a tall complex `a` of full column rank.
pub fn complex_lstsq(a: MatRef<'_, c64>, b: &[c64]) -> Result<Vec<c64>> {
    use faer::linalg::solvers::SolveLstsq;
    let k = a.ncols();
    if a.nrows() < k {
        return Err(StrumerError::Singular(format!(
            "least squares with {} rows for {} unknowns",
            a.nrows(),
            k
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let sv = a
        .singular_values()
        .map_err(|e| StrumerError::Singular(format!("svd: {e:?}")))?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= smax * 1e-12 {
        return Err(StrumerError::Singular(format!(
            "rank-deficient least squares (singular values {smax:.3e} .. {smin:.3e})"
        )));
    }
    let qr = a.qr();
    let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    qr.solve_lstsq_in_place(rhs.as_mut());
    Ok((0..k).map(|i| rhs[(i, 0)]).collect())
}

/// Eigenvalues of a general complex matrix.
pub fn general_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<c64>> {
    m.eigenvalues()
        .map_err(|e| StrumerError::Eigen(format!("{e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let m = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new([3.0, -1.0, 2.0][i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let (vals, _) = hermitian_eigen(m.as_ref()).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = CMat::from_fn(5, 2, |i, j| c64::new((i + j) as f64, (i * j) as f64 + 1.0));
        let x = [c64::new(1.0, -2.0), c64::new(0.5, 0.25)];
        let b: Vec<c64> = (0..5).map(|i| a[(i, 0)] * x[0] + a[(i, 1)] * x[1]).collect();
        let got = complex_lstsq(a.as_ref(), &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn lstsq_rejects_rank_deficiency() {
        let a = CMat::from_fn(4, 2, |i, _| c64::new(i as f64, 0.0));
        assert!(complex_lstsq(a.as_ref(), &[c64::new(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn general_eigenvalues_of_companion() {
        // z^2 - 3z + 2 = (z-1)(z-2)
        let mut c = CMat::zeros(2, 2);
        c[(1, 0)] = c64::new(1.0, 0.0);
        c[(0, 1)] = c64::new(-2.0, 0.0);
        c[(1, 1)] = c64::new(3.0, 0.0);
        let mut ev: Vec<f64> = general_eigenvalues(c.as_ref()).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }
}
