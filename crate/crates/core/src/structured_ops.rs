//! Hankel and Hermitian Toeplitz lifts, their adjoints, block assembly and the
//! rank-constrained PSD projection used by every ADMM update.
//!
//! Inner products are real: `<A, B> = Re tr(A^H B)` for matrices and
//! `<u, v> = Re sum conj(u_k) v_k` for coefficient vectors. Adjoints are taken
//! with respect to these.
//!
//! The projection onto rank-K PSD matrices is a dense eigendecomposition. Per
//! ADMM iteration the solver performs one per channel on a `2n x 2n` block, so
//! the cost is `O(n^3 L)` here (a truncated eigensolver would bring it to
//! `O(N^2 K L)`).

use faer::MatRef;

use crate::linalg::{hermitian_eigen, hermitian_part};
use crate::{c64, CMat, Result, StrumerError};

const PROPER_TOL: f64 = 1e-12;

/// Coefficients of a Hermitian Toeplitz matrix: first column, with a real
/// leading entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCoeffs(Vec<c64>);

impl ToeplitzCoeffs {
    /// Rejects a leading entry with imaginary part above `1e-12`; a smaller
    /// imaginary part is dropped.
    pub fn new(mut coeffs: Vec<c64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(StrumerError::invalid("toeplitz coefficients must be non-empty"));
        }
        let lead = coeffs[0];
        if lead.im.abs() > PROPER_TOL * lead.re.abs().max(1.0) {
            return Err(StrumerError::invalid(format!(
                "toeplitz coefficients are not proper: Im(t_1) = {:e}",
                lead.im
            )));
        }
        coeffs[0] = c64::new(lead.re, 0.0);
        Ok(ToeplitzCoeffs(coeffs))
    }

    /// Takes the real part of the leading entry unconditionally.
    pub fn from_proper_part(mut coeffs: Vec<c64>) -> Self {
        assert!(!coeffs.is_empty());
        coeffs[0] = c64::new(coeffs[0].re, 0.0);
        ToeplitzCoeffs(coeffs)
    }

    pub fn zeros(n: usize) -> Self {
        ToeplitzCoeffs(vec![c64::new(0.0, 0.0); n.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[c64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<c64> {
        self.0
    }

    pub fn conj(&self) -> Self {
        ToeplitzCoeffs(self.0.iter().map(|v| v.conj()).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn check_square(m: MatRef<'_, c64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(StrumerError::dim(format!(
            "{what}: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `n x n` Hankel matrix with entry `(i, j) = x_{i+j}` (0-based), `N = 2n - 1`.
pub fn hankel_lift(x: &[c64]) -> Result<CMat> {
    let len = x.len();
    if len == 0 {
        return Err(StrumerError::invalid("hankel lift of an empty vector"));
    }
    if len.is_multiple_of(2) {
        return Err(StrumerError::invalid(format!(
            "hankel lift needs an odd length, got {len}; treat sample {} as missing and pad",
            len + 1
        )));
    }
    let n = len.div_ceil(2);
    Ok(CMat::from_fn(n, n, |i, j| x[i + j]))
}

/// Anti-diagonal sums: the adjoint of [`hankel_lift`].
pub fn hankel_adjoint(m: MatRef<'_, c64>) -> Result<Vec<c64>> {
    let n = check_square(m, "hankel adjoint")?;
    let mut out = vec![c64::new(0.0, 0.0); 2 * n - 1];
    for j in 0..n {
        for i in 0..n {
            out[i + j] += m[(i, j)];
        }
    }
    Ok(out)
}

/// Number of Hankel cells mapping to each sample: `[1, 2, .., n, .., 2, 1]`.
pub fn hankel_weights(n: usize) -> Vec<f64> {
    (0..2 * n.max(1) - 1)
        .map(|j| (j.min(2 * n - 2 - j) + 1) as f64)
        .collect()
}

/// Hermitian Toeplitz matrix with entry `(i, j) = t_{i-j}` for `i >= j`.
pub fn toeplitz_lift(t: &ToeplitzCoeffs) -> CMat {
    let c = t.as_slice();
    let n = c.len();
    CMat::from_fn(n, n, |i, j| if i >= j { c[i - j] } else { c[j - i].conj() })
}

/// Adjoint of [`toeplitz_lift`]: the real part of the main-diagonal sum, then
/// for lag `k` the subdiagonal-`k` sum plus the conjugated superdiagonal-`k` sum.
pub fn toeplitz_adjoint(m: MatRef<'_, c64>) -> Result<ToeplitzCoeffs> {
    let n = check_square(m, "toeplitz adjoint")?;
    let mut out = vec![c64::new(0.0, 0.0); n];
    for i in 0..n {
        out[0] += m[(i, i)];
    }
    out[0] = c64::new(out[0].re, 0.0);
    for k in 1..n {
        let mut acc = c64::new(0.0, 0.0);
        for j in 0..n - k {
            acc += m[(j + k, j)] + m[(j, j + k)].conj();
        }
        out[k] = acc;
    }
    Ok(ToeplitzCoeffs(out))
}

/// Diagonal of `T^H T`: `n` for the leading entry, `2 (n - k)` for lag `k`.
pub fn toeplitz_normal_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k == 0 { n as f64 } else { 2.0 * (n - k) as f64 })
        .collect()
}

/// `(T^H T)^{-1} u`.
pub fn toeplitz_normal_solve(u: &ToeplitzCoeffs) -> ToeplitzCoeffs {
    let w = toeplitz_normal_weights(u.len());
    ToeplitzCoeffs(u.as_slice().iter().zip(&w).map(|(v, d)| v / *d).collect())
}

/// Projection onto Hermitian PSD matrices of rank at most `k`.
///
/// The input is replaced by its Hermitian part first. Eigenvalues at or below
/// `1e-12 max(lambda_max, 1)` are treated as non-positive.
pub fn psd_rank_projection(m: MatRef<'_, c64>, k: usize) -> Result<CMat> {
    let dim = check_square(m, "psd projection")?;
    if k == 0 {
        return Err(StrumerError::invalid("rank bound must be at least 1"));
    }
    let sym = hermitian_part(m);
    let (vals, vecs) = hermitian_eigen(sym.as_ref())?;
    let top = vals.last().copied().unwrap_or(0.0);
    let floor = 1e-12 * top.max(1.0);
    let mut out = CMat::zeros(dim, dim);
    for idx in (0..dim).rev().take(k) {
        let lam = vals[idx];
        if !(lam > floor) {
            break;
        }
        let v = vecs.col(idx);
        for j in 0..dim {
            let vj = v[j].conj() * lam;
            for i in j..dim {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    for j in 0..dim {
        out[(j, j)] = c64::new(out[(j, j)].re, 0.0);
        for i in j + 1..dim {
            out[(j, i)] = out[(i, j)].conj();
        }
    }
    Ok(out)
}

/// `[[T(conj t_l), conj(H x)], [H x, T(t)]]`, the `2n x 2n` embedding block of
/// one channel.
pub fn assemble_block(t_channel: &ToeplitzCoeffs, t: &ToeplitzCoeffs, x: &[c64]) -> Result<CMat> {
    let n = t.len();
    if t_channel.len() != n || x.len() != 2 * n - 1 {
        return Err(StrumerError::dim(format!(
            "block assembly: t_l has {}, t has {}, x has {} entries",
            t_channel.len(),
            n,
            x.len()
        )));
    }
    let tl = t_channel.as_slice();
    let tc = t.as_slice();
    Ok(CMat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        // T(conj t_l) is the elementwise conjugate of T(t_l)
        (true, true) => {
            if i >= j {
                tl[i - j].conj()
            } else {
                tl[j - i]
            }
        }
        (true, false) => x[i + j - n].conj(),
        (false, true) => x[i - n + j],
        (false, false) => {
            let (a, b) = (i - n, j - n);
            if a >= b {
                tc[a - b]
            } else {
                tc[b - a].conj()
            }
        }
    }))
}

/// The four `n x n` quadrants of a `2n x 2n` matrix, taken by position.
#[derive(Debug, Clone)]
pub struct BlockQuadrants {
    pub top_left: CMat,
    pub top_right: CMat,
    pub bottom_left: CMat,
    pub bottom_right: CMat,
}

pub fn disassemble_block(m: MatRef<'_, c64>) -> Result<BlockQuadrants> {
    let dim = check_square(m, "block disassembly")?;
    if dim % 2 != 0 {
        return Err(StrumerError::dim(format!("block size {dim} is odd")));
    }
    let n = dim / 2;
    Ok(BlockQuadrants {
        top_left: m.submatrix(0, 0, n, n).to_owned(),
        top_right: m.submatrix(0, n, n, n).to_owned(),
        bottom_left: m.submatrix(n, 0, n, n).to_owned(),
        bottom_right: m.submatrix(n, n, n, n).to_owned(),
    })
}
