//! Small dense linear-algebra helpers shared by the other modules.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`; the matrices involved
//! are tiny (block sizes of at most a few dozen), so clarity wins over
//! specialised kernels.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance below which a negative eigenvalue is treated as rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut m);
    m
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

fn eigen_scale(values: &DVector<f64>) -> f64 {
    values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Symmetric PSD square root through the eigendecomposition.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !is_finite(m) {
        return Err(Error::NonFinite("square-root argument"));
    }
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        if v < -PSD_TOLERANCE * v.abs().max(1.0) {
            return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: v });
        }
        return Ok(DMatrix::from_element(1, 1, v.max(0.0).sqrt()));
    }
    let eig = SymmetricEigen::new(symmetrized(m.clone()));
    let scale = eigen_scale(&eig.eigenvalues);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(recompose(&eig.eigenvectors, &roots))
}

/// Symmetric inverse square root of a positive definite matrix.
pub fn inv_sqrt_pd(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if !is_finite(m) {
        return Err(Error::NonFinite(what));
    }
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        if v <= 0.0 {
            return Err(Error::NotPositiveDefinite(what));
        }
        return Ok(DMatrix::from_element(1, 1, 1.0 / v.sqrt()));
    }
    let eig = SymmetricEigen::new(symmetrized(m.clone()));
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite(what));
    }
    let roots = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    Ok(recompose(&eig.eigenvectors, &roots))
}

fn recompose(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vectors * DMatrix::from_diagonal(values);
    symmetrized(&scaled * vectors.transpose())
}

pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(symmetrized(m.clone())).eigenvalues.min()
}

/// Moduli of the eigenvalues of a general real square matrix, sorted in decreasing order.
pub fn eigenvalue_moduli(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !is_finite(m) {
        return Err(Error::NonFinite("eigenvalue argument"));
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)].abs()]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalue_moduli(m)?.first().copied().unwrap_or(0.0))
}

/// Solve `a x = b` for symmetric `a`, preferring Cholesky and falling back to LU.
pub fn solve_sym(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Solve the Stein (discrete Lyapunov) equation `U - A U A' = Q` by the
/// vectorised linear system `(I - A ⊗ A) vec U = vec Q`.
pub fn stein_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Stein solve (square coefficient)",
            expected: n,
            found: a.ncols(),
        });
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Stein solve (right-hand side)",
            expected: n,
            found: q.nrows(),
        });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let nn = n * n;
    let mut system = -a.kronecker(a);
    for i in 0..nn {
        system[(i, i)] += 1.0;
    }
    let rhs = DVector::from_column_slice(q.as_slice());
    let vec_u = system.lu().solve(&rhs).ok_or(Error::Singular("Stein equation"))?;
    let u = DMatrix::from_column_slice(n, n, vec_u.as_slice());
    if !is_finite(&u) {
        return Err(Error::Singular("Stein equation"));
    }
    Ok(symmetrized(u))
}

/// Block-diagonal matrix `diag(top, 0)` of total size `size`.
pub fn pad_top_left(top: &DMatrix<f64>, size: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(size, size);
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sqrt_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = sqrt_psd(&m).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 1)], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sqrt_psd(&m), Err(Error::NotPositiveSemiDefinite { .. })));
    }

    #[test]
    fn stein_solve_scalar_geometric_series() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let q = DMatrix::from_element(1, 1, 1.0);
        let u = stein_solve(&a, &q).unwrap();
        assert_abs_diff_eq!(u[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn stein_solve_satisfies_equation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.3, 0.4]);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let u = stein_solve(&a, &q).unwrap();
        let resid = &u - &a * &u * a.transpose() - &q;
        assert!(resid.norm() < 1e-12);
    }

    #[test]
    fn jordan_block_radius() {
        let m = DMatrix::from_row_slice(2, 2, &[0.99, 0.0, 2.0, 0.99]);
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 0.99, epsilon = 1e-12);
    }
}
