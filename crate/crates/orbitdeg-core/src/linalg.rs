//! Small dense complex linear algebra, generic over the scalar.
//!
//! Systems here are tiny (at most 16 unknowns), so we hand-roll LU with
//! partial pivoting rather than pull in a matrix library; the same code
//! then serves both the binary64 tracker and high-precision refinement.

use crate::error::{Error, Result};
use crate::scalar::{CScalar, C64};

/// LU factorization (in place, row-major, partial pivoting).
///
/// Returns the pivot permutation and a crude condition estimate
/// `max |pivot| / min |pivot|`.
pub fn lu_factor<T: CScalar>(a: &mut [T], n: usize, piv: &mut Vec<usize>) -> Result<f64> {
    assert_eq!(a.len(), n * n);
    piv.clear();
    piv.extend(0..n);
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[piv[col] * n + col].abs_sqr();
        for row in col + 1..n {
            let mag = a[piv[row] * n + col].abs_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = row;
            }
        }
        piv.swap(col, best);
        let pivot_mag = best_mag.sqrt();
        max_piv = max_piv.max(pivot_mag);
        min_piv = min_piv.min(pivot_mag);
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            return Err(Error::SingularJacobian { cond: f64::INFINITY });
        }
        let prow = piv[col];
        let pivot = a[prow * n + col].clone();
        for row in col + 1..n {
            let r = piv[row];
            let factor = a[r * n + col].clone() / pivot.clone();
            a[r * n + col] = factor.clone();
            for k in col + 1..n {
                let sub = factor.clone() * a[prow * n + k].clone();
                a[r * n + k] = a[r * n + k].clone() - sub;
            }
        }
    }
    Ok(max_piv / min_piv)
}

/// Solve with a factorization from [`lu_factor`].
pub fn lu_solve<T: CScalar>(lu: &[T], n: usize, piv: &[usize], b: &[T], x: &mut Vec<T>) {
    let prec = b.first().map(|v| v.precision_bits()).unwrap_or(53);
    x.clear();
    x.extend(piv.iter().map(|&p| b[p].clone()));
    // forward
    for col in 0..n {
        for row in col + 1..n {
            let sub = lu[piv[row] * n + col].clone() * x[col].clone();
            x[row] = x[row].clone() - sub;
        }
    }
    // backward
    for col in (0..n).rev() {
        let mut acc = x[col].clone();
        for k in col + 1..n {
            let sub = lu[piv[col] * n + k].clone() * x[k].clone();
            acc = acc - sub;
        }
        x[col] = acc / lu[piv[col] * n + col].clone();
    }
    let _ = prec;
}

/// One-shot dense solve `A x = b`; `a` is consumed as scratch.
pub fn solve_in_place<T: CScalar>(a: &mut [T], n: usize, b: &[T], x: &mut Vec<T>) -> Result<f64> {
    let mut piv = Vec::with_capacity(n);
    let cond = lu_factor(a, n, &mut piv)?;
    lu_solve(a, n, &piv, b, x);
    Ok(cond)
}

/// Determinant of a square binary64 complex matrix (copies the input).
pub fn det_c64(a: &[C64], n: usize) -> C64 {
    let mut m = a.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut best = col;
        let mut best_mag = m[piv[col] * n + col].norm_sqr();
        for row in col + 1..n {
            let mag = m[piv[row] * n + col].norm_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = row;
            }
        }
        if best != col {
            piv.swap(col, best);
            det = -det;
        }
        let pivot = m[piv[col] * n + col];
        if pivot.norm_sqr() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        det *= pivot;
        for row in col + 1..n {
            let r = piv[row];
            let factor = m[r * n + col] / pivot;
            for k in col + 1..n {
                let sub = factor * m[piv[col] * n + k];
                m[r * n + k] -= sub;
            }
        }
    }
    det
}

/// Numerical rank of an m x k binary64 complex matrix by full-pivot
/// elimination with a relative threshold.
pub fn rank_c64(a: &[C64], rows: usize, cols: usize, rel_tol: f64) -> usize {
    let mut m = a.to_vec();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * rel_tol;
    let mut rank = 0;
    let mut active_rows: Vec<usize> = (0..rows).collect();
    let mut active_cols: Vec<usize> = (0..cols).collect();
    while rank < active_rows.len().min(rows) && !active_cols.is_empty() {
        // full pivot over the remaining block
        let mut best = (0usize, 0usize);
        let mut best_mag = 0.0;
        for (ri, &r) in active_rows.iter().enumerate().skip(rank) {
            for (ci, &c) in active_cols.iter().enumerate() {
                let mag = m[r * cols + c].norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = (ri, ci);
                }
            }
        }
        if best_mag <= tol {
            break;
        }
        active_rows.swap(rank, best.0);
        let pc = active_cols.swap_remove(best.1);
        let pr = active_rows[rank];
        let pivot = m[pr * cols + pc];
        for &r in active_rows.iter().skip(rank + 1) {
            let factor = m[r * cols + pc] / pivot;
            for &c in &active_cols {
                let sub = factor * m[pr * cols + c];
                m[r * cols + c] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

/// Frobenius norm.
pub fn frobenius<T: CScalar>(a: &[T]) -> f64 {
    a.iter().map(|z| z.abs_sqr()).sum::<f64>().sqrt()
}

/// Dense matrix-vector product `y = A x` (row-major, rows x cols).
pub fn mat_vec<T: CScalar>(a: &[T], rows: usize, cols: usize, x: &[T], y: &mut Vec<T>) {
    let prec = x.first().map(|v| v.precision_bits()).unwrap_or(53);
    y.clear();
    for r in 0..rows {
        let mut acc = T::zero(prec);
        for c in 0..cols {
            acc = acc + a[r * cols + c].clone() * x[c].clone();
        }
        y.push(acc);
    }
}

/// Dot product (no conjugation).
pub fn dot<T: CScalar>(a: &[T], b: &[T]) -> T {
    let prec = a.first().map(|v| v.precision_bits()).unwrap_or(53);
    let mut acc = T::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.clone() * y.clone();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::BigC;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solve_small_complex_system() {
        // [[2, i], [1, 1]] x = [3+i, 2]  =>  x = [?]: verify residual instead
        let a = vec![c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0)];
        let b = vec![c(3.0, 1.0), c(2.0, 0.0)];
        let mut scratch = a.clone();
        let mut x = Vec::new();
        solve_in_place(&mut scratch, 2, &b, &mut x).unwrap();
        let mut y = Vec::new();
        mat_vec(&a, 2, 2, &x, &mut y);
        for (yi, bi) in y.iter().zip(&b) {
            assert!((yi - bi).norm() < 1e-13);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let mut a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        let b = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let mut x = Vec::new();
        assert!(solve_in_place(&mut a, 2, &b, &mut x).is_err());
    }

    #[test]
    fn big_precision_solve_matches_f64() {
        let a64 = vec![c(2.0, 1.0), c(-1.0, 0.5), c(0.0, 3.0), c(1.0, -1.0)];
        let b64 = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let prec = 192;
        let mut abig: Vec<BigC> = a64.iter().map(|&z| BigC::from_c64(z, prec)).collect();
        let bbig: Vec<BigC> = b64.iter().map(|&z| BigC::from_c64(z, prec)).collect();
        let mut xbig = Vec::new();
        solve_in_place(&mut abig, 2, &bbig, &mut xbig).unwrap();
        let mut a_scr = a64.clone();
        let mut x64 = Vec::new();
        solve_in_place(&mut a_scr, 2, &b64, &mut x64).unwrap();
        for (bx, fx) in xbig.iter().zip(&x64) {
            assert!((bx.to_c64() - fx).norm() < 1e-12);
        }
    }

    #[test]
    fn det_of_diagonal() {
        let a = vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 3.0)];
        let d = det_c64(&a, 2);
        assert!((d - c(0.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn rank_detects_deficiency() {
        // rows: (1,2,3), (2,4,6), (0,1,1) -> rank 2
        let a = vec![
            c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0),
            c(2.0, 0.0), c(4.0, 0.0), c(6.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0),
        ];
        assert_eq!(rank_c64(&a, 3, 3, 1e-10), 2);
    }
}
