//! Starting values from a long autoregression (Hannan-Rissanen style).

use nalgebra::DMatrix;

use crate::codec::{self, CayleyCode, RealCodec};
use crate::error::{Error, Result};
use crate::linalg::{solve_sym, symmetrized};
use crate::model::{SamplePath, VarmaSpec};
use crate::stable::{self, MatPoly, OrthoMatrix, SpdMatrix};

use super::yule_walker::yule_walker_var;

/// Spectral radius assigned to an unstable first-order polynomial by shrinking.
const SHRINK_RADIUS: f64 = 0.999;
/// `V_t` used for a polynomial that falls back to the near-zero point.
const FALLBACK_LOG_V: f64 = -4.605_170_185_988_091; // ln 0.01
/// Skew entries of the small rotation applied to Cayley-excluded matrices.
const CAYLEY_NUDGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitAdjustment {
    #[default]
    None,
    /// An unstable first-order polynomial was scaled to radius 0.999.
    Shrunk,
    /// The polynomial could not be encoded and was replaced by the near-zero point.
    ZeroPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub codec: RealCodec,
    pub spec: VarmaSpec,
    pub ar_adjustment: InitAdjustment,
    pub ma_adjustment: InitAdjustment,
}

/// Default long-autoregression order: `max(p + q + 1, min(20, n/(2m) - 1))`.
pub fn default_long_order(n: usize, m: usize, p: usize, q: usize) -> usize {
    let room = (n / (2 * m.max(1))).saturating_sub(1);
    (p + q + 1).max(room.min(20))
}

/// Initial pre-parameters for a VARMA(p, q) fit.
///
/// Fits VAR(r) by Yule-Walker, regresses `x_t` on its own lags and on lagged
/// residuals, then encodes the result. Unstable first-order polynomials are
/// shrunk to radius 0.999; other failures fall back to a near-zero polynomial.
pub fn long_var_init(data: &SamplePath, p: usize, q: usize, r: usize) -> Result<Initialization> {
    let (n, m) = (data.n(), data.m());
    let (phi, theta, sigma) = if q == 0 {
        let spec = yule_walker_var(data, p)?;
        (spec.phi().clone(), MatPoly::zeros(m, 0), spec.sigma().clone())
    } else {
        if r <= p + q {
            return Err(Error::InvalidArgument(format!(
                "long autoregression order {r} must exceed p + q = {}",
                p + q
            )));
        }
        let rows = n.saturating_sub(r + q);
        if n <= r * m || rows <= (p + q) * m {
            return Err(Error::InsufficientData(format!(
                "long-VAR initialization with r = {r} needs more than {} observations, got {n}",
                (r * m).max(r + q + (p + q) * m)
            )));
        }
        regression_estimates(data, p, q, r)?
    };

    let (phi, ar_shrunk) = shrink_if_unstable(phi)?;
    let (neg_theta, ma_shrunk) = shrink_if_unstable(theta.negated())?;

    let (ar_reals, ar_bits, ar_zero) = encode_poly(&phi);
    let (ma_reals, ma_bits, ma_zero) = encode_poly(&neg_theta);
    let sigma_code = codec::ldl_encode(&sigma)?;

    let mut reals = ar_reals;
    reals.extend(ma_reals);
    reals.extend(sigma_code.l);
    reals.extend(sigma_code.d);
    let mut deltas = ar_bits;
    deltas.extend(ma_bits);
    let codec = RealCodec { reals, deltas };
    let spec = VarmaSpec::from_codec(&codec, m, p, q)?;
    let pick = |zero: bool, shrunk: bool| {
        if zero {
            InitAdjustment::ZeroPoint
        } else if shrunk {
            InitAdjustment::Shrunk
        } else {
            InitAdjustment::None
        }
    };
    Ok(Initialization {
        codec,
        spec,
        ar_adjustment: pick(ar_zero, ar_shrunk),
        ma_adjustment: pick(ma_zero, ma_shrunk),
    })
}

/// OLS of `x_t` on `(x_{t-1..t-p}, ẑ_{t-1..t-q})` with `ẑ` the VAR(r) residuals.
fn regression_estimates(
    data: &SamplePath,
    p: usize,
    q: usize,
    r: usize,
) -> Result<(MatPoly, MatPoly, SpdMatrix)> {
    let (n, m) = (data.n(), data.m());
    let long = yule_walker_var(data, r)?;
    let x = data.values();
    let mut resid = DMatrix::zeros(n, m);
    for t in r..n {
        let mut e = x.row(t).transpose();
        for (i, phi) in long.phi().coeffs().iter().enumerate() {
            e -= phi * x.row(t - 1 - i).transpose();
        }
        resid.row_mut(t).copy_from(&e.transpose());
    }

    let start = r + q;
    let rows = n - start;
    let k = (p + q) * m;
    let mut design = DMatrix::zeros(k, rows);
    let mut target = DMatrix::zeros(m, rows);
    for (col, t) in (start..n).enumerate() {
        target.column_mut(col).copy_from(&x.row(t).transpose());
        for i in 0..p {
            design.view_mut((i * m, col), (m, 1)).copy_from(&x.row(t - 1 - i).transpose());
        }
        for j in 0..q {
            design.view_mut(((p + j) * m, col), (m, 1)).copy_from(&resid.row(t - 1 - j).transpose());
        }
    }
    let gram = &design * design.transpose();
    let cross = &design * target.transpose();
    let coef = solve_sym(&gram, &cross).ok_or(Error::Singular("long-VAR regression"))?.transpose();
    let block = |i: usize| coef.columns(i * m, m).into_owned();
    let phi = MatPoly::new(m, (0..p).map(block).collect())?;
    let theta = MatPoly::new(m, (p..p + q).map(block).collect())?;

    let fitted = &coef * &design;
    let errors = &target - fitted;
    let sigma_raw = symmetrized(&errors * errors.transpose() / rows as f64);
    let sigma = SpdMatrix::new(sigma_raw).or_else(|_| SpdMatrix::new(long.sigma().as_matrix().clone()))?;
    Ok((phi, theta, sigma))
}

/// Scales an unstable degree-one polynomial to radius 0.999; leaves others alone.
fn shrink_if_unstable(poly: MatPoly) -> Result<(MatPoly, bool)> {
    if poly.degree() == 0 {
        return Ok((poly, false));
    }
    let radius = stable::is_schur_stable(&poly, 0.0)?.radius;
    if radius < 1.0 || poly.degree() > 1 {
        return Ok((poly, false));
    }
    let scaled = &poly.coeffs()[0] * (SHRINK_RADIUS / radius);
    Ok((MatPoly::new(poly.dim(), vec![scaled])?, true))
}

/// Packed reals and bits of one stable polynomial, or the near-zero point.
fn encode_poly(poly: &MatPoly) -> (Vec<f64>, Vec<bool>, bool) {
    let (m, k) = (poly.dim(), poly.degree());
    if k == 0 {
        return (Vec::new(), Vec::new(), false);
    }
    match try_encode_poly(poly) {
        Ok((reals, bits)) => (reals, bits, false),
        Err(_) => {
            let n_l = m * (m - 1) / 2;
            let mut reals = Vec::with_capacity(k * m * m);
            for _ in 0..k {
                reals.extend(std::iter::repeat_n(0.0, n_l));
                reals.extend(std::iter::repeat_n(FALLBACK_LOG_V, m));
                reals.extend(std::iter::repeat_n(0.0, n_l));
            }
            (reals, vec![false; k], true)
        }
    }
}

fn try_encode_poly(poly: &MatPoly) -> Result<(Vec<f64>, Vec<bool>)> {
    let m = poly.dim();
    let pre = stable::recover_preparams(poly, &SpdMatrix::identity(m))?;
    let mut reals = Vec::with_capacity(poly.degree() * m * m);
    let mut bits = Vec::with_capacity(poly.degree());
    for (v, q) in pre.vs.iter().zip(&pre.qs) {
        let ldl = codec::ldl_encode(v)?;
        let cay = match codec::cayley_encode(q) {
            Err(Error::CayleyExcluded) => {
                let nudge = CayleyCode { s: vec![CAYLEY_NUDGE; m * (m - 1) / 2], delta: false };
                let rotation = codec::cayley_decode(&nudge, m)?;
                let nudged = OrthoMatrix::from_trusted(q.as_matrix() * rotation.as_matrix());
                codec::cayley_encode(&nudged)?
            }
            other => other?,
        };
        reals.extend(ldl.l);
        reals.extend(ldl.d);
        reals.extend(cay.s);
        bits.push(cay.delta);
    }
    if reals.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("encoded initial values"));
    }
    Ok((reals, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood, simulate};

    fn mat(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn pure_var_matches_yule_walker() {
        let truth = VarmaSpec::var(
            MatPoly::new(2, vec![mat(2, &[0.5, 0.0, 1.0, 0.8])]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap();
        let data = simulate(&truth, 200, 4).unwrap();
        let init = long_var_init(&data, 1, 0, 5).unwrap();
        let yw = yule_walker_var(&data, 1).unwrap();
        assert!((&init.spec.phi().coeffs()[0] - &yw.phi().coeffs()[0]).amax() < 1e-8);
        assert_eq!(init.ar_adjustment, InitAdjustment::None);
    }

    #[test]
    fn varma11_init_is_stable_and_close() {
        let truth = VarmaSpec::new(
            MatPoly::new(2, vec![mat(2, &[0.6, 0.1, -0.2, 0.4])]).unwrap(),
            MatPoly::new(2, vec![mat(2, &[0.3, 0.0, 0.2, 0.25])]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap();
        let data = simulate(&truth, 2000, 8).unwrap();
        let init = long_var_init(&data, 1, 1, 20).unwrap();
        let (ar, ma) = init.spec.spectral_radii().unwrap();
        assert!(ar < 1.0 && ma < 1.0);
        let ll_truth = log_likelihood(&truth, &data).unwrap();
        let ll_init = log_likelihood(&init.spec, &data).unwrap();
        assert!((ll_init - ll_truth).abs() < 0.05 * ll_truth.abs(), "{ll_init} vs {ll_truth}");
    }

    #[test]
    fn shrink_rule_caps_radius() {
        let poly = MatPoly::new(2, vec![mat(2, &[1.2, 0.0, 0.3, 0.5])]).unwrap();
        let (shrunk, flag) = shrink_if_unstable(poly).unwrap();
        assert!(flag);
        let radius = stable::is_schur_stable(&shrunk, 0.0).unwrap().radius;
        assert!(radius <= SHRINK_RADIUS + 1e-12);
    }

    #[test]
    fn unencodable_polynomial_uses_zero_point() {
        let (reals, bits, zero) = encode_poly(&MatPoly::zeros(2, 2));
        assert!(zero);
        assert_eq!(bits, vec![false, false]);
        assert_eq!(reals.len(), 8);
    }

    #[test]
    fn order_defaults() {
        assert_eq!(default_long_order(100, 2, 1, 1), 20);
        assert_eq!(default_long_order(30, 2, 1, 1), 6);
        assert_eq!(default_long_order(10, 3, 2, 2), 5);
    }
}
