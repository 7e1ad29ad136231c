//! Dense complex least squares and the small matrix-vector helpers the
//! pursuit loops need.

use faer::linalg::solvers::SolveLstsq;
use faer::{ColRef, Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold on `|R_kk|` below which the column set is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// `argmin_v ||A v - y||_2` for a tall (or square) `A`.
///
/// Uses a Householder QR factorization; a numerically rank-deficient `A`
/// falls back to the SVD pseudoinverse, which yields the minimum-norm
/// solution.
pub fn least_squares(a: MatRef<'_, Complex64>, y: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.ncols() > a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "least squares needs K <= M~, got {} columns for {} rows",
            a.ncols(),
            a.nrows()
        )));
    }
    min_norm_least_squares(a, y)
}

/// Minimum-norm least-squares solution for any shape of `A`.
pub fn min_norm_least_squares(a: MatRef<'_, Complex64>, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let (rows, cols) = (a.nrows(), a.ncols());
    if y.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} entries, matrix has {rows} rows",
            y.len()
        )));
    }
    if cols == 0 {
        return Ok(Vec::new());
    }
    let rhs = Mat::from_fn(rows, 1, |i, _| y[i]);
    if cols <= rows {
        let qr = a.qr();
        let r = qr.thin_R();
        let diag: Vec<f64> = (0..cols).map(|k| r[(k, k)].norm()).collect();
        let largest = diag.iter().cloned().fold(0.0, f64::max);
        let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if largest > 0.0 && smallest > RANK_TOLERANCE * largest {
            let x = qr.solve_lstsq(&rhs);
            return Ok((0..cols).map(|i| x[(i, 0)]).collect());
        }
    }
    pseudoinverse_solve(a, &rhs)
}

fn pseudoinverse_solve(a: MatRef<'_, Complex64>, rhs: &Mat<Complex64>) -> Result<Vec<Complex64>> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::DimensionMismatch(format!("SVD failed to converge: {e:?}")))?;
    let x = svd.pseudoinverse() * rhs;
    Ok((0..a.ncols()).map(|i| x[(i, 0)]).collect())
}

/// `A v`
pub fn mat_vec(a: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let out = a * ColRef::from_slice(v);
    (0..a.nrows()).map(|i| out[i]).collect()
}

/// `A^* r` (conjugate transpose).
pub fn adjoint_mat_vec(a: MatRef<'_, Complex64>, r: &[Complex64]) -> Vec<Complex64> {
    let out = a.adjoint() * ColRef::from_slice(r);
    (0..a.ncols()).map(|i| out[i]).collect()
}

/// Copies the listed columns into a new matrix.
pub fn gather_columns(a: MatRef<'_, Complex64>, columns: &[usize]) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), columns.len(), |i, j| a[(i, columns[j])])
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||y - A v||_2`
pub fn residual_norm(a: MatRef<'_, Complex64>, y: &[Complex64], v: &[Complex64]) -> f64 {
    let av = mat_vec(a, v);
    y.iter()
        .zip(&av)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<Complex64> {
        Mat::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
    }

    #[test]
    fn identity_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_vec(&mut rng, 5);
        let v = least_squares(Mat::<Complex64>::identity(5, 5).as_ref(), &y).unwrap();
        for (a, b) in v.iter().zip(&y) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_columns_project() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_mat(&mut rng, 9, 4).qr().compute_thin_Q();
        let y = random_vec(&mut rng, 9);
        let v = least_squares(q.as_ref(), &y).unwrap();
        let projected = adjoint_mat_vec(q.as_ref(), &y);
        for (a, b) in v.iter().zip(&projected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mat(&mut rng, 8, 3);
        let y = random_vec(&mut rng, 8);
        let v = least_squares(a.as_ref(), &y).unwrap();
        let av = mat_vec(a.as_ref(), &v);
        let r: Vec<_> = y.iter().zip(&av).map(|(p, q)| p - q).collect();
        for k in 0..3 {
            let inner: Complex64 = (0..8).map(|i| a[(i, k)].conj() * r[i]).sum();
            assert!(inner.norm() < 1e-10, "column {k}: {inner}");
        }
        // normal equations oracle: (A^* A) v = A^* y
        let gram = a.adjoint() * &a;
        let aty = adjoint_mat_vec(a.as_ref(), &y);
        for i in 0..3 {
            let lhs: Complex64 = (0..3).map(|j| gram[(i, j)] * v[j]).sum();
            assert!((lhs - aty[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn wide_system_rejected() {
        let a = Mat::<Complex64>::zeros(3, 4);
        assert!(least_squares(a.as_ref(), &[Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn rank_deficient_gives_min_norm() {
        // two identical columns: minimum-norm solution splits the weight evenly
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let col = random_vec(&mut rng, 6);
        let a = Mat::from_fn(6, 2, |i, _| col[i]);
        let scale = Complex64::new(2.0, -1.0);
        let y: Vec<_> = col.iter().map(|c| c * scale).collect();
        let v = least_squares(a.as_ref(), &y).unwrap();
        assert!((v[0] - scale / 2.0).norm() < 1e-10);
        assert!((v[1] - scale / 2.0).norm() < 1e-10);
    }

    #[test]
    fn underdetermined_min_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_mat(&mut rng, 3, 6);
        let y = random_vec(&mut rng, 3);
        let v = min_norm_least_squares(a.as_ref(), &y).unwrap();
        assert!(residual_norm(a.as_ref(), &y, &v) < 1e-10);
        // minimum norm solutions lie in the row space: v = A^* w
        let w = least_squares(a.adjoint().to_owned().as_ref(), &v).unwrap();
        let back = mat_vec(a.adjoint().to_owned().as_ref(), &w);
        for (p, q) in back.iter().zip(&v) {
            assert!((p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn empty_column_set() {
        let a = Mat::<Complex64>::zeros(4, 0);
        assert!(least_squares(a.as_ref(), &[Complex64::new(1.0, 0.0); 4])
            .unwrap()
            .is_empty());
    }
}
