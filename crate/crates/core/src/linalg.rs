//! Dense least squares for tall, narrow design matrices (a handful of
//! columns, hundreds of rows). Householder QR, column-major storage.

use alloc::vec::Vec;

use crate::math::sqrt;

/// Columns whose QR pivot falls below this fraction of the column's own
/// norm are treated as linearly dependent on the preceding ones.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solution of `min ||X b - y||`.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coefficients: Vec<f64>,
}

/// Solves a least-squares problem. `columns` holds `k` columns of length
/// `n = y.len()` back to back. Returns `None` when the design is rank
/// deficient.
pub(crate) fn solve(columns: &mut [f64], y: &[f64], k: usize) -> Option<LeastSquares> {
    let n = y.len();
    debug_assert_eq!(columns.len(), n * k);
    if n < k || k == 0 {
        return None;
    }

    let norms: Vec<f64> = (0..k)
        .map(|j| sqrt(columns[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>()))
        .collect();

    let mut rhs: Vec<f64> = y.to_vec();
    let mut diag = [0.0f64; 8];
    assert!(k <= diag.len());

    for j in 0..k {
        let (done, rest) = columns.split_at_mut((j + 1) * n);
        let col = &mut done[j * n..];

        let sigma = sqrt(col[j..].iter().map(|v| v * v).sum::<f64>());
        if !(sigma > RANK_TOLERANCE * norms[j]) || norms[j] == 0.0 {
            return None;
        }
        let alpha = if col[j] > 0.0 { -sigma } else { sigma };
        // v = x - alpha e1, stored in place of the column.
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        diag[j] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }

        for c in 0..(k - j - 1) {
            let other = &mut rest[c * n..(c + 1) * n];
            let dot: f64 = col[j..].iter().zip(&other[j..]).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / vnorm2;
            for (o, v) in other[j..].iter_mut().zip(&col[j..]) {
                *o -= scale * v;
            }
        }
        let dot: f64 = col[j..].iter().zip(&rhs[j..]).map(|(a, b)| a * b).sum();
        let scale = 2.0 * dot / vnorm2;
        for (o, v) in rhs[j..].iter_mut().zip(&col[j..]) {
            *o -= scale * v;
        }
    }

    // Back substitution on R (upper triangle lives above the diagonal of
    // the overwritten columns; the diagonal itself is in `diag`).
    let mut coefficients = alloc::vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for c in (i + 1)..k {
            acc -= columns[c * n + i] * coefficients[c];
        }
        coefficients[i] = acc / diag[i];
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(LeastSquares { coefficients })
}

/// Solves the square system `m x = b` (row-major `m`) by Gaussian
/// elimination with partial pivoting.
pub(crate) fn solve_square(m: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &c| {
            m[a * n + col]
                .abs()
                .partial_cmp(&m[c * n + col].abs())
                .unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if m[pivot * n + col] == 0.0 || !m[pivot * n + col].is_finite() {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
            b.swap(pivot, col);
        }
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= m[r * n + c] * b[c];
        }
        b[r] = acc / m[r * n + r];
    }
    b.iter().all(|v| v.is_finite()).then_some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let mut cols = vec![1.0; 10];
        cols.extend_from_slice(&x);
        let ls = solve(&mut cols, &y, 2).unwrap();
        assert!((ls.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((ls.coefficients[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let mut cols = vec![1.0; 6];
        cols.extend_from_slice(&[2.0; 6]);
        assert!(solve(&mut cols, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2).is_none());
    }

    #[test]
    fn square_solve() {
        let mut m = vec![2.0, 1.0, 1.0, 3.0];
        let mut b = vec![3.0, 5.0];
        solve_square(&mut m, &mut b, 2).unwrap();
        assert!((b[0] - 0.8).abs() < 1e-12 && (b[1] - 1.4).abs() < 1e-12);
    }
}
