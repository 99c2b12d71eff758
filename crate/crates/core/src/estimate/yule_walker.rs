use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{solve_sym, symmetrized};
use crate::model::{SamplePath, VarmaSpec};
use crate::stable::{BlockToeplitz, MatPoly, SpdMatrix};

/// Sample autocovariances `Γ̂(h) = n^{-1} Σ_t x_{t+h} x_t'` for `h = 0..=max_lag`,
/// without demeaning.
pub fn sample_acvf(data: &SamplePath, max_lag: usize) -> Vec<DMatrix<f64>> {
    let (n, m) = (data.n(), data.m());
    let x = data.values();
    (0..=max_lag)
        .map(|h| {
            if h >= n || n == 0 {
                return DMatrix::zeros(m, m);
            }
            let lead = x.rows(h, n - h);
            let lag = x.rows(0, n - h);
            lead.transpose() * lag / n as f64
        })
        .collect()
}

/// Yule-Walker VAR(p) fit. The result is always causal when the sample
/// autocovariance matrix is nonsingular.
pub fn yule_walker_var(data: &SamplePath, p: usize) -> Result<VarmaSpec> {
    let (n, m) = (data.n(), data.m());
    if n <= p * m || n == 0 {
        return Err(Error::InsufficientData(format!(
            "Yule-Walker VAR({p}) on {m} series needs more than {} observations, got {n}",
            p * m
        )));
    }
    let mut gamma = sample_acvf(data, p);
    gamma[0] = symmetrized(gamma[0].clone());
    if p == 0 {
        let sigma = SpdMatrix::new(gamma[0].clone())?;
        return Ok(VarmaSpec::white_noise(sigma));
    }
    let toeplitz = BlockToeplitz::new(gamma.clone())?;
    let big = toeplitz.assemble(p - 1);
    let xi = toeplitz.xi(p);
    let stacked = solve_sym(&big, &xi).ok_or(Error::Singular("sample autocovariance matrix"))?;
    let phi_row = stacked.transpose();
    let coeffs: Vec<DMatrix<f64>> = (0..p).map(|i| phi_row.columns(i * m, m).into_owned()).collect();
    let mut sigma = gamma[0].clone();
    for (i, phi) in coeffs.iter().enumerate() {
        sigma -= phi * gamma[i + 1].transpose();
    }
    let sigma = SpdMatrix::new(symmetrized(sigma))?;
    VarmaSpec::var(MatPoly::new(m, coeffs)?, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alternating_series() {
        let data = SamplePath::new(DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 1.0, -1.0])).unwrap();
        let g = sample_acvf(&data, 1);
        assert_abs_diff_eq!(g[0][(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1][(0, 0)], -0.75, epsilon = 1e-15);
        let spec = yule_walker_var(&data, 1).unwrap();
        assert_abs_diff_eq!(spec.phi().coeffs()[0][(0, 0)], -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.sigma().as_matrix()[(0, 0)], 1.0 - 0.75 * 0.75, epsilon = 1e-15);
    }

    #[test]
    fn white_noise_estimates_near_zero() {
        let truth = VarmaSpec::white_noise(SpdMatrix::identity(2));
        let data = simulate(&truth, 10_000, 21).unwrap();
        let spec = yule_walker_var(&data, 1).unwrap();
        assert!(spec.phi().coeffs()[0].amax() < 0.05);
    }

    #[test]
    fn estimates_are_causal() {
        let truth = VarmaSpec::var(
            MatPoly::new(2, vec![DMatrix::from_row_slice(2, 2, &[0.99, 0.0, 2.0, 0.99])]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap();
        for seed in 0..20 {
            let data = simulate(&truth, 50, seed).unwrap();
            let spec = yule_walker_var(&data, 2).unwrap();
            assert!(spec.spectral_radii().unwrap().0 < 1.0);
        }
    }

    #[test]
    fn too_short_sample() {
        let data = SamplePath::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(yule_walker_var(&data, 1), Err(Error::InsufficientData(_))));
    }
}
