//! Small dense linear-algebra kernels over row-major `n × n` buffers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
/// Returns `false` if a non-positive pivot is met. The strict upper triangle
/// is zeroed on success.
pub fn cholesky_in_place<T: Scalar>(a: &mut [T], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let rest = &mut a[j * n..];
        let (row_j, below) = rest.split_at_mut(n);
        let mut d = row_j[j];
        for &v in &row_j[..j] {
            d -= v * v;
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        row_j[j] = d;
        for x in row_j[j + 1..].iter_mut() {
            *x = T::zero();
        }
        for row_i in below.chunks_exact_mut(n) {
            let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
            row_i[j] = s / d;
        }
    }
    true
}

/// Cholesky of `k + jitter·I`, starting at `base_jitter` and doubling up to
/// `max_jitter`. Returns the factor and the jitter that succeeded.
pub fn cholesky_with_jitter<T: Scalar>(
    k: &[T],
    n: usize,
    base_jitter: T,
    max_jitter: T,
) -> Result<(Vec<T>, T)> {
    let mut jitter = base_jitter;
    loop {
        let mut a = k.to_vec();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut a, n) {
            return Ok((a, jitter));
        }
        if jitter >= max_jitter {
            return Err(Error::NotPositiveDefinite);
        }
        jitter = (jitter + jitter).min(max_jitter);
    }
}

/// Solves `L x = b` in place.
pub fn solve_lower<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut s = b[i];
        for (k, &lik) in row.iter().enumerate() {
            s -= lik * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
pub fn solve_lower_transpose<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in (0..n).rev() {
        let xi = b[i] / l[i * n + i];
        b[i] = xi;
        let row = &l[i * n..i * n + i];
        for (k, &lik) in row.iter().enumerate() {
            b[k] -= lik * xi;
        }
    }
}

/// `(L Lᵀ)⁻¹ b`.
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    solve_lower(l, n, &mut x);
    solve_lower_transpose(l, n, &mut x);
    x
}

/// `(L Lᵀ)⁻¹` as a full symmetric matrix.
pub fn cholesky_inverse<T: Scalar>(l: &[T], n: usize) -> Vec<T> {
    // Rows of L⁻¹ (lower triangular).
    let mut linv = vec![T::zero(); n * n];
    for i in 0..n {
        linv[i * n + i] = T::one() / l[i * n + i];
        for j in 0..i {
            let mut s = T::zero();
            for k in j..i {
                s += l[i * n + k] * linv[k * n + j];
            }
            linv[i * n + j] = -s / l[i * n + i];
        }
    }
    // (L⁻¹)ᵀ L⁻¹
    let mut out = vec![T::zero(); n * n];
    for k in 0..n {
        let row = &linv[k * n..k * n + k + 1];
        for i in 0..=k {
            let a = row[i];
            if a == T::zero() {
                continue;
            }
            for j in 0..=i {
                out[i * n + j] += a * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            out[j * n + i] = out[i * n + j];
        }
    }
    out
}

pub fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::lit(x.len() as f64)
}

pub fn centered<T: Scalar>(x: &[T]) -> Vec<T> {
    let m = mean(x);
    x.iter().map(|&v| v - m).collect()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Ordinary least squares with intercept via twice-orthogonalised
/// Gram–Schmidt on the centred design.
///
/// Returns `(slopes, intercept, residuals)`.
pub fn least_squares_with_intercept<T: Scalar>(
    x: &[&[T]],
    y: &[T],
) -> Result<(Vec<T>, T, Vec<T>)> {
    let n = y.len();
    let k = x.len();
    for c in x {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    let x_means: Vec<T> = x.iter().map(|c| mean(c)).collect();
    let y_mean = mean(y);
    let mut q: Vec<Vec<T>> = Vec::with_capacity(k);
    // r[j][i]: coefficient of q_i in column j (upper triangular R, column-wise).
    let mut r: Vec<Vec<T>> = Vec::with_capacity(k);
    for (j, c) in x.iter().enumerate() {
        let mut v: Vec<T> = c.iter().map(|&a| a - x_means[j]).collect();
        let norm0 = dot(&v, &v).sqrt();
        let mut rj = vec![T::zero(); k];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = dot(qi, &v);
                rj[i] += proj;
                for (vv, &qq) in v.iter_mut().zip(qi) {
                    *vv -= proj * qq;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if !(norm0 > T::zero()) || norm <= T::rank_tolerance() * norm0 {
            return Err(Error::RankDeficient);
        }
        rj[j] = norm;
        for vv in v.iter_mut() {
            *vv /= norm;
        }
        q.push(v);
        r.push(rj);
    }
    let mut resid: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let mut qty = vec![T::zero(); k];
    for _ in 0..2 {
        for (i, qi) in q.iter().enumerate() {
            let proj = dot(qi, &resid);
            qty[i] += proj;
            for (rr, &qq) in resid.iter_mut().zip(qi) {
                *rr -= proj * qq;
            }
        }
    }
    // Back-substitute R β = Qᵀy.
    let mut beta = vec![T::zero(); k];
    for j in (0..k).rev() {
        let mut s = qty[j];
        for (l, b) in beta.iter().enumerate().skip(j + 1) {
            s -= r[l][j] * *b;
        }
        beta[j] = s / r[j][j];
    }
    let intercept = y_mean
        - beta
            .iter()
            .zip(&x_means)
            .map(|(&b, &m)| b * m)
            .sum::<T>();
    Ok((beta, intercept, resid))
}
