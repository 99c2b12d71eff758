use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check_shape(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<()> {
    if est.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            context: "estimate shape",
            expected: truth.len(),
            found: est.len(),
        });
    }
    Ok(())
}

/// `n/N · Σ_j ‖est_j - truth‖_F²` over `N` Monte Carlo estimates.
pub fn nmse(estimates: &[DMatrix<f64>], truth: &DMatrix<f64>, n: usize) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("nMSE needs at least one estimate".into()));
    }
    let mut total = 0.0;
    for est in estimates {
        check_shape(est, truth)?;
        total += (est - truth).norm_squared();
    }
    Ok(n as f64 * total / estimates.len() as f64)
}

pub fn rmse(estimates: &[DMatrix<f64>], truth: &DMatrix<f64>, n: usize) -> Result<f64> {
    nmse(estimates, truth, n).map(f64::sqrt)
}

/// nMSE summed over several coefficient matrices; `estimates[j]` holds the
/// `j`-th replication's matrices in the same order as `truth`.
pub fn overall_nmse(estimates: &[Vec<DMatrix<f64>>], truth: &[DMatrix<f64>], n: usize) -> Result<f64> {
    let mut total = 0.0;
    for (k, t) in truth.iter().enumerate() {
        let column: Vec<DMatrix<f64>> = estimates
            .iter()
            .map(|rep| {
                rep.get(k).cloned().ok_or(Error::LengthMismatch {
                    context: "coefficient matrices per replication",
                    expected: truth.len(),
                    found: rep.len(),
                })
            })
            .collect::<Result<_>>()?;
        total += nmse(&column, t, n)?;
    }
    Ok(total)
}

/// Entry-wise `sqrt(n/N · Σ_j (est_j - truth)²)`.
pub fn entry_rmse(estimates: &[DMatrix<f64>], truth: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("RMSE needs at least one estimate".into()));
    }
    let mut acc = DMatrix::zeros(truth.nrows(), truth.ncols());
    for est in estimates {
        check_shape(est, truth)?;
        acc += (est - truth).map(|e| e * e);
    }
    Ok(acc.map(|s| (n as f64 * s / estimates.len() as f64).sqrt()))
}
