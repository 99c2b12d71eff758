//! JSON model files.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use stable_varma::codec::RealCodec;
use stable_varma::estimate::FitResult;
use stable_varma::model::VarmaSpec;
use stable_varma::stable::{MatPoly, SpdMatrix};

use crate::error::{CliError, CliResult};

/// Method tag that skips the stability check on load.
pub const RAW_METHOD: &str = "raw";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecJson {
    pub reals: Vec<f64>,
    pub deltas: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub method: String,
    pub loglik: Option<f64>,
    pub seed: Option<u64>,
    /// Spectral radii of the AR and MA companions.
    pub spectral_radii: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    /// `phi[j][r][c]` is row `r`, column `c` of `Φ_{j+1}`.
    pub phi: Vec<Vec<Vec<f64>>>,
    pub theta: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<f64>>,
    pub codec: Option<CodecJson>,
    pub meta: Meta,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], m: usize, what: &str) -> CliResult<DMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Data(format!("{what} must be a {m}x{m} matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::Data(format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(m, m, |r, c| rows[r][c]))
}

fn poly_from(blocks: &[Vec<Vec<f64>>], m: usize, degree: usize, what: &str) -> CliResult<MatPoly> {
    if blocks.len() != degree {
        return Err(CliError::Data(format!("{what} has {} lags, header says {degree}", blocks.len())));
    }
    let coeffs = blocks
        .iter()
        .enumerate()
        .map(|(j, b)| from_rows(b, m, &format!("{what}[{}]", j + 1)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MatPoly::new(m, coeffs)?)
}

impl ModelFile {
    pub fn from_spec(spec: &VarmaSpec, method: &str) -> CliResult<Self> {
        let (ar, ma) = spec.spectral_radii()?;
        Ok(Self {
            m: spec.m(),
            p: spec.p(),
            q: spec.q(),
            phi: spec.phi().coeffs().iter().map(to_rows).collect(),
            theta: spec.theta().coeffs().iter().map(to_rows).collect(),
            sigma: to_rows(spec.sigma().as_matrix()),
            codec: spec.to_codec().ok().map(|c| CodecJson::from(&c)),
            meta: Meta { method: method.to_string(), loglik: None, seed: None, spectral_radii: [ar, ma] },
        })
    }

    pub fn from_fit(fit: &FitResult, seed: Option<u64>) -> CliResult<Self> {
        let mut file = Self::from_spec(&fit.spec, fit.method.name())?;
        if let Some(codec) = &fit.codec {
            file.codec = Some(CodecJson::from(codec));
        }
        file.meta.loglik = fit.loglik.is_finite().then_some(fit.loglik);
        file.meta.seed = seed;
        Ok(file)
    }

    /// Decodes the coefficient matrices, checking stability unless the method is `raw`.
    pub fn to_spec(&self) -> CliResult<VarmaSpec> {
        if self.m == 0 {
            return Err(CliError::Data("model dimension m must be positive".into()));
        }
        let phi = poly_from(&self.phi, self.m, self.p, "phi")?;
        let theta = poly_from(&self.theta, self.m, self.q, "theta")?;
        let sigma = SpdMatrix::new(from_rows(&self.sigma, self.m, "sigma")?)
            .map_err(|e| CliError::Data(format!("sigma: {e}")))?;
        let spec = VarmaSpec::new(phi, theta, sigma)?;
        if self.meta.method != RAW_METHOD {
            spec.check_stable().map_err(|e| {
                CliError::Data(format!("model is not causal-invertible ({e}); tag it \"raw\" to skip this check"))
            })?;
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("invalid model file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| CliError::io(path, e))
    }
}

impl From<&RealCodec> for CodecJson {
    fn from(codec: &RealCodec) -> Self {
        Self { reals: codec.reals.clone(), deltas: codec.deltas.iter().map(|&b| u8::from(b)).collect() }
    }
}
