//! Thomas algorithm for the tridiagonal systems produced by backward-Euler
//! diffusion.

use crate::error::SchemeError;

/// Solves `A x = rhs` for tridiagonal `A`.
///
/// `diag` has length `n`; `lower[i]` multiplies `x[i]` in row `i + 1` and
/// `upper[i]` multiplies `x[i + 1]` in row `i`, both of length `n - 1`.
/// No pivoting is done, so a vanishing pivot is reported rather than
/// worked around.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, SchemeError> {
    let n = diag.len();
    if n == 0 || rhs.len() != n || lower.len() + 1 != n || upper.len() + 1 != n {
        return Err(SchemeError::BandShape { n });
    }
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(SchemeError::ZeroPivot { row: 0 });
    }
    if n > 1 {
        c_prime[0] = upper[0] / pivot;
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c_prime[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(SchemeError::ZeroPivot { row: i });
        }
        if i < n - 1 {
            c_prime[i] = upper[i] / pivot;
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

/// `A x` for a tridiagonal `A` in the same band layout.
pub fn tridiagonal_matvec(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut acc = diag[i] * x[i];
            if i > 0 {
                acc += lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += upper[i] * x[i + 1];
            }
            acc
        })
        .collect()
}
