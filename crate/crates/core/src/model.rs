//! Zero-mean Gaussian VARMA(p, q) processes `Φ(B) X_t = Θ(B) Z_t` with
//! `Φ(B) = I - Φ_1 B - ... - Φ_p B^p`, `Θ(B) = I + Θ_1 B + ... + Θ_q B^q`
//! and `Z_t ~ N(0, Σ)`.
//!
//! Autocovariances use `Γ(h) = E[X_{t+h} X_t']`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::{self, RealCodec};
use crate::error::{Error, Result};
use crate::linalg::{is_finite, sqrt_psd, stein_solve, symmetrized};
use crate::stable::{self, BlockToeplitz, MatPoly, SpdMatrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct VarmaSpec {
    phi: MatPoly,
    theta: MatPoly,
    sigma: SpdMatrix,
}

impl VarmaSpec {
    pub fn new(phi: MatPoly, theta: MatPoly, sigma: SpdMatrix) -> Result<Self> {
        let m = sigma.dim();
        for (poly, context) in [(&phi, "AR coefficients"), (&theta, "MA coefficients")] {
            if poly.dim() != m {
                return Err(Error::DimensionMismatch { context, expected: m, found: poly.dim() });
            }
        }
        Ok(Self { phi, theta, sigma })
    }

    pub fn white_noise(sigma: SpdMatrix) -> Self {
        let m = sigma.dim();
        Self { phi: MatPoly::zeros(m, 0), theta: MatPoly::zeros(m, 0), sigma }
    }

    pub fn var(phi: MatPoly, sigma: SpdMatrix) -> Result<Self> {
        let m = sigma.dim();
        Self::new(phi, MatPoly::zeros(m, 0), sigma)
    }

    pub fn m(&self) -> usize {
        self.sigma.dim()
    }

    pub fn p(&self) -> usize {
        self.phi.degree()
    }

    pub fn q(&self) -> usize {
        self.theta.degree()
    }

    pub fn phi(&self) -> &MatPoly {
        &self.phi
    }

    pub fn theta(&self) -> &MatPoly {
        &self.theta
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    /// Spectral radii of the AR companion and of the MA companion (built from `-Θ_j`).
    pub fn spectral_radii(&self) -> Result<(f64, f64)> {
        let ar = stable::is_schur_stable(&self.phi, 0.0)?.radius;
        let ma = stable::is_schur_stable(&self.theta.negated(), 0.0)?.radius;
        Ok((ar, ma))
    }

    /// Errors unless the AR part is causal and the MA part invertible.
    pub fn check_stable(&self) -> Result<(f64, f64)> {
        let (ar, ma) = self.spectral_radii()?;
        if ar >= 1.0 {
            return Err(Error::Unstable { radius: ar });
        }
        if ma >= 1.0 {
            return Err(Error::Unstable { radius: ma });
        }
        Ok((ar, ma))
    }

    fn check_causal(&self) -> Result<()> {
        let radius = stable::is_schur_stable(&self.phi, 0.0)?.radius;
        if radius >= 1.0 {
            return Err(Error::Unstable { radius });
        }
        Ok(())
    }

    /// Decodes packed pre-parameters with base matrices `M = I`.
    pub fn from_codec(codec: &RealCodec, m: usize, p: usize, q: usize) -> Result<Self> {
        let id = SpdMatrix::identity(m);
        Self::from_codec_with_bases(codec, m, p, q, &id, &id)
    }

    pub fn from_codec_with_bases(
        codec: &RealCodec,
        m: usize,
        p: usize,
        q: usize,
        ar_base: &SpdMatrix,
        ma_base: &SpdMatrix,
    ) -> Result<Self> {
        let (ar, ma, sigma) = codec::unpack_with_bases(codec, m, p, q, ar_base, ma_base)?;
        let (phi, _) = stable::build_stable(&ar)?;
        let (ma_poly, _) = stable::build_stable(&ma)?;
        Ok(Self { phi, theta: ma_poly.negated(), sigma })
    }

    /// Encodes a causal-invertible spec with base matrices `M = I`.
    pub fn to_codec(&self) -> Result<RealCodec> {
        let id = SpdMatrix::identity(self.m());
        self.to_codec_with_bases(&id, &id)
    }

    pub fn to_codec_with_bases(&self, ar_base: &SpdMatrix, ma_base: &SpdMatrix) -> Result<RealCodec> {
        let ar = stable::recover_preparams(&self.phi, ar_base)?;
        let ma = stable::recover_preparams(&self.theta.negated(), ma_base)?;
        codec::pack(&ar, &ma, &self.sigma)
    }
}

/// Autocovariances `Γ(0), ..., Γ(L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcvfSeq {
    lags: Vec<DMatrix<f64>>,
}

impl AcvfSeq {
    pub fn lags(&self) -> &[DMatrix<f64>] {
        &self.lags
    }

    pub fn get(&self, h: usize) -> &DMatrix<f64> {
        &self.lags[h]
    }

    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn to_toeplitz(&self) -> Result<BlockToeplitz> {
        BlockToeplitz::new(self.lags.clone())
    }
}

/// Observed series, one row per time point in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    values: DMatrix<f64>,
    mean: Option<DVector<f64>>,
}

impl SamplePath {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !is_finite(&values) {
            return Err(Error::NonFinite("sample path"));
        }
        Ok(Self { values, mean: None })
    }

    pub fn empty(m: usize) -> Self {
        Self { values: DMatrix::zeros(0, m), mean: None }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    /// Observation at 0-based time `t` as a column vector.
    pub fn at(&self, t: usize) -> DVector<f64> {
        self.values.row(t).transpose()
    }

    /// Copy with column means subtracted; the removed mean is recorded.
    pub fn demeaned(&self) -> Self {
        let n = self.n();
        if n == 0 {
            return self.clone();
        }
        let mean = self.values.row_mean().transpose();
        let mut values = self.values.clone();
        for mut row in values.row_iter_mut() {
            row -= mean.transpose();
        }
        Self { values, mean: Some(mean) }
    }
}

/// `Ψ_0, ..., Ψ_h` of the causal representation `X_t = Σ Ψ_j Z_{t-j}`.
pub fn psi_weights(spec: &VarmaSpec, horizon: usize) -> Vec<DMatrix<f64>> {
    let m = spec.m();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    psi.push(DMatrix::identity(m, m));
    for j in 1..=horizon {
        let mut next = if j <= spec.q() {
            spec.theta.coeffs()[j - 1].clone()
        } else {
            DMatrix::zeros(m, m)
        };
        for i in 1..=j.min(spec.p()) {
            next += &spec.phi.coeffs()[i - 1] * &psi[j - i];
        }
        psi.push(next);
    }
    psi
}

/// State-space form `α_t = T α_{t-1} + R Z_t`, `X_t = α_t[0..m]`, with
/// state dimension `m · max(p, q + 1)`.
struct StateSpace {
    transition: DMatrix<f64>,
    loading: DMatrix<f64>,
}

impl StateSpace {
    fn new(spec: &VarmaSpec) -> Self {
        let (m, p, q) = (spec.m(), spec.p(), spec.q());
        let r = p.max(q + 1);
        let mut transition = DMatrix::zeros(m * r, m * r);
        for (i, phi) in spec.phi.coeffs().iter().enumerate() {
            transition.view_mut((i * m, 0), (m, m)).copy_from(phi);
        }
        for i in 0..r - 1 {
            for k in 0..m {
                transition[(i * m + k, (i + 1) * m + k)] = 1.0;
            }
        }
        let mut loading = DMatrix::zeros(m * r, m);
        loading.view_mut((0, 0), (m, m)).fill_with_identity();
        for (j, theta) in spec.theta.coeffs().iter().enumerate() {
            loading.view_mut(((j + 1) * m, 0), (m, m)).copy_from(theta);
        }
        Self { transition, loading }
    }

    fn stationary_covariance(&self, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let q = &self.loading * sigma * self.loading.transpose();
        stein_solve(&self.transition, &q)
    }
}

pub fn acvf(spec: &VarmaSpec, max_lag: usize) -> Result<AcvfSeq> {
    spec.check_causal()?;
    let m = spec.m();
    let ss = StateSpace::new(spec);
    let cov = ss.stationary_covariance(spec.sigma.as_matrix())?;
    let mut cross = cov.columns(0, m).into_owned();
    let mut lags = Vec::with_capacity(max_lag + 1);
    lags.push(symmetrized(cross.rows(0, m).into_owned()));
    for _ in 0..max_lag {
        cross = &ss.transition * cross;
        lags.push(cross.rows(0, m).into_owned());
    }
    Ok(AcvfSeq { lags })
}

/// Durbin-Levinson state at order `k`: forward and backward coefficients and
/// their prediction-error variances.
struct Levinson<'a> {
    gamma: &'a [DMatrix<f64>],
    forward: Vec<DMatrix<f64>>,
    backward: Vec<DMatrix<f64>>,
    v: DMatrix<f64>,
    v_back: DMatrix<f64>,
}

impl<'a> Levinson<'a> {
    fn new(gamma: &'a [DMatrix<f64>]) -> Self {
        let g0 = gamma[0].clone();
        Self { gamma, forward: Vec::new(), backward: Vec::new(), v: g0.clone(), v_back: g0 }
    }

    fn order(&self) -> usize {
        self.forward.len()
    }

    fn step(&mut self) -> Result<()> {
        let k = self.order();
        let g = self.gamma;
        let mut delta = g[k + 1].clone();
        for (j, phi) in self.forward.iter().enumerate() {
            delta -= phi * &g[k - j];
        }
        let new_fwd = right_solve(&delta, &self.v_back)?;
        let new_bwd = right_solve(&delta.transpose(), &self.v)?;
        let forward: Vec<DMatrix<f64>> = (0..k)
            .map(|j| &self.forward[j] - &new_fwd * &self.backward[k - 1 - j])
            .collect();
        let backward: Vec<DMatrix<f64>> = (0..k)
            .map(|j| &self.backward[j] - &new_bwd * &self.forward[k - 1 - j])
            .collect();
        self.v = symmetrized(&self.v - &new_fwd * delta.transpose());
        self.v_back = symmetrized(&self.v_back - &new_bwd * &delta);
        self.forward = forward;
        self.forward.push(new_fwd);
        self.backward = backward;
        self.backward.push(new_bwd);
        Ok(())
    }

    /// One-step prediction error of `x_t` given `x_{t-1}, ..., x_{t-k}`.
    fn innovation(&self, data: &SamplePath, t: usize) -> DVector<f64> {
        let mut e = data.at(t);
        for (j, phi) in self.forward.iter().enumerate() {
            e -= phi * data.at(t - 1 - j);
        }
        e
    }
}

/// `X = B A^{-1}` for symmetric positive definite `A`.
fn right_solve(b: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite("prediction variance"))?;
    Ok(chol.solve(&b.transpose()).transpose())
}

/// Highest Durbin-Levinson order needed; pure autoregressions stop at `p`.
fn levinson_cap(spec: &VarmaSpec, n: usize) -> usize {
    let full = n.saturating_sub(1);
    if spec.q() == 0 {
        full.min(spec.p())
    } else {
        full
    }
}

fn check_data(spec: &VarmaSpec, data: &SamplePath) -> Result<()> {
    if data.m() != spec.m() {
        return Err(Error::DimensionMismatch {
            context: "sample dimension",
            expected: spec.m(),
            found: data.m(),
        });
    }
    Ok(())
}

/// Covariances of the transformed series `W_t = X_t` for `t <= r` and
/// `W_t = Φ(B) X_t` for `t > r`, with `r = max(p, q)`. Beyond `r` the
/// sequence is a moving average of order `q`, so its covariance is banded.
struct TransformedCovariance<'a> {
    spec: &'a VarmaSpec,
    gamma: AcvfSeq,
    r: usize,
    /// `Σ_k Θ_{k+h} Σ Θ_k'` for `h = 0..=q`, with `Θ_0 = I`.
    ma_cov: Vec<DMatrix<f64>>,
}

impl<'a> TransformedCovariance<'a> {
    fn new(spec: &'a VarmaSpec) -> Result<Self> {
        let (m, p, q) = (spec.m(), spec.p(), spec.q());
        let r = p.max(q);
        let gamma = acvf(spec, r)?;
        let theta_at = |k: usize| -> DMatrix<f64> {
            if k == 0 {
                DMatrix::identity(m, m)
            } else {
                spec.theta.coeffs()[k - 1].clone()
            }
        };
        let sigma = spec.sigma.as_matrix();
        let ma_cov = (0..=q)
            .map(|h| {
                (0..=q - h).fold(DMatrix::zeros(m, m), |acc, k| {
                    acc + theta_at(k + h) * sigma * theta_at(k).transpose()
                })
            })
            .collect();
        Ok(Self { spec, gamma, r, ma_cov })
    }

    /// `Γ(h)` for any integer lag.
    fn gamma_signed(&self, h: isize) -> DMatrix<f64> {
        if h >= 0 {
            self.gamma.get(h as usize).clone()
        } else {
            self.gamma.get((-h) as usize).transpose()
        }
    }

    /// Half-bandwidth of row `n` (0-based) of the innovation coefficients.
    fn bandwidth(&self, n: usize) -> usize {
        if n < self.r {
            n
        } else {
            n.min(self.spec.q())
        }
    }

    /// `E[W_i W_j']` for 1-based `i >= j`.
    fn cov(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        let lag = i - j;
        if i <= self.r {
            return Some(self.gamma.get(lag).clone());
        }
        if lag > self.spec.q() {
            return None;
        }
        if j <= self.r {
            let mut out = self.gamma.get(lag).clone();
            for (k, phi) in self.spec.phi.coeffs().iter().enumerate() {
                out -= phi * self.gamma_signed(lag as isize - k as isize - 1);
            }
            return Some(out);
        }
        Some(self.ma_cov[lag].clone())
    }

    fn transformed(&self, data: &SamplePath, t: usize) -> DVector<f64> {
        let mut w = data.at(t);
        if t >= self.r {
            for (k, phi) in self.spec.phi.coeffs().iter().enumerate() {
                w -= phi * data.at(t - 1 - k);
            }
        }
        w
    }
}

/// Exact Gaussian log-likelihood.
///
/// Runs the multivariate innovations algorithm on the transformed series
/// `W_t`, whose one-step prediction errors coincide with those of `X_t`.
/// Past `max(p, q)` only `q` coefficients per step are nonzero.
pub fn log_likelihood(spec: &VarmaSpec, data: &SamplePath) -> Result<f64> {
    check_data(spec, data)?;
    spec.check_stable()?;
    let n = data.n();
    if n == 0 {
        return Ok(0.0);
    }
    let m = spec.m();
    let kw = TransformedCovariance::new(spec)?;
    // coeffs[t][j - 1] = Θ_{t,j}; vs[t] = V_t with Cholesky factor chols[t].
    let mut coeffs: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(n);
    let mut vs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut chols = Vec::with_capacity(n);
    let mut innovations: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut total = 0.0;
    for t in 0..n {
        let bw = kw.bandwidth(t);
        let mut row: Vec<DMatrix<f64>> = vec![DMatrix::zeros(m, m); bw];
        for k in t - bw..t {
            let mut acc = kw.cov(t + 1, k + 1).unwrap_or_else(|| DMatrix::zeros(m, m));
            for j in (t - bw).max(k - kw.bandwidth(k))..k {
                acc -= &row[t - j - 1] * &vs[j] * coeffs[k][k - j - 1].transpose();
            }
            let chol: &nalgebra::Cholesky<f64, nalgebra::Dyn> = &chols[k];
            row[t - k - 1] = chol.solve(&acc.transpose()).transpose();
        }
        let mut v = kw.cov(t + 1, t + 1).expect("diagonal block is always present");
        let mut u = kw.transformed(data, t);
        for (idx, th) in row.iter().enumerate() {
            let j = t - idx - 1;
            v -= th * &vs[j] * th.transpose();
            u -= th * &innovations[j];
        }
        let v = symmetrized(v);
        let chol = v.clone().cholesky().ok_or(Error::NotPositiveDefinite("prediction variance"))?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
        total += log_det + u.dot(&chol.solve(&u));
        coeffs.push(row);
        vs.push(v);
        chols.push(chol);
        innovations.push(u);
    }
    let ll = -0.5 * (n * spec.m()) as f64 * LN_2PI - 0.5 * total;
    if !ll.is_finite() {
        return Err(Error::NonFinite("log-likelihood"));
    }
    Ok(ll)
}

/// Log-density of the stacked sample under `N(0, Γ_{n-1})` by dense Cholesky.
pub fn log_likelihood_dense(spec: &VarmaSpec, data: &SamplePath) -> Result<f64> {
    check_data(spec, data)?;
    spec.check_stable()?;
    let (n, m) = (data.n(), data.m());
    if n == 0 {
        return Ok(0.0);
    }
    let gamma = acvf(spec, n - 1)?;
    let mut cov = DMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let block = if i >= j {
                gamma.get(i - j).clone()
            } else {
                gamma.get(j - i).transpose()
            };
            cov.view_mut((i * m, j * m), (m, m)).copy_from(&block);
        }
    }
    let chol = symmetrized(cov).cholesky().ok_or(Error::NotPositiveDefinite("Γ_{n-1}"))?;
    let x = DVector::from_iterator(n * m, data.values.transpose().iter().copied());
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let quad = x.dot(&chol.solve(&x));
    Ok(-0.5 * (n * m) as f64 * LN_2PI - 0.5 * log_det - 0.5 * quad)
}

/// Stationary Gaussian path of length `n`, started from the exact stationary
/// state distribution.
pub fn simulate(spec: &VarmaSpec, n: usize, seed: u64) -> Result<SamplePath> {
    spec.check_causal()?;
    let m = spec.m();
    let ss = StateSpace::new(spec);
    let state_cov = ss.stationary_covariance(spec.sigma.as_matrix())?;
    let state_root = sqrt_psd(&state_cov)?;
    let sigma_root = spec
        .sigma
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("Σ"))?
        .unpack();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normals = |len: usize| {
        DVector::from_iterator(len, (0..len).map(|_| StandardNormal.sample(&mut rng)))
    };
    let dim = state_cov.nrows();
    let mut state = &state_root * normals(dim);
    let mut values = DMatrix::zeros(n, m);
    for t in 0..n {
        let z = &sigma_root * normals(m);
        state = &ss.transition * state + &ss.loading * z;
        values.row_mut(t).copy_from(&state.rows(0, m).transpose());
    }
    SamplePath::new(values)
}

/// Best linear predictions `E[X_{n+h} | X_1..X_n]` and their error covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub means: Vec<DVector<f64>>,
    pub mse: Vec<DMatrix<f64>>,
}

pub fn forecast(spec: &VarmaSpec, data: &SamplePath, h: usize) -> Result<Forecast> {
    if h < 1 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    check_data(spec, data)?;
    spec.check_stable()?;
    let (n, m) = (data.n(), data.m());
    let cap = levinson_cap(spec, n);
    let gamma = acvf(spec, n + h)?;
    let mut dl = Levinson::new(gamma.lags());
    let mut means = vec![DVector::zeros(m); h];
    let mut mse: Vec<DMatrix<f64>> = vec![gamma.get(0).clone(); h];
    for t in 0..n {
        let e = dl.innovation(data, t);
        let chol = dl.v.clone().cholesky().ok_or(Error::NotPositiveDefinite("prediction variance"))?;
        let scaled = chol.solve(&e);
        for (step, (mean, err)) in means.iter_mut().zip(mse.iter_mut()).enumerate() {
            // Cov(X_{n+step+1}, e_t) with 0-based t.
            let lag = n + step - t;
            let mut cov = gamma.get(lag).clone();
            for (j, phi) in dl.forward.iter().enumerate() {
                cov -= gamma.get(lag + j + 1) * phi.transpose();
            }
            *mean += &cov * &scaled;
            *err -= &cov * chol.solve(&cov.transpose());
        }
        if t + 1 < n && dl.order() < cap {
            dl.step()?;
        }
    }
    let mse = mse.into_iter().map(symmetrized).collect();
    Ok(Forecast { means, mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn scalar_spec(phi: &[f64], theta: &[f64], sigma2: f64) -> VarmaSpec {
        VarmaSpec::new(
            MatPoly::scalar(phi),
            MatPoly::scalar(theta),
            SpdMatrix::new(mat(1, &[sigma2])).unwrap(),
        )
        .unwrap()
    }

    fn maxeigen_spec() -> VarmaSpec {
        VarmaSpec::var(
            MatPoly::new(2, vec![mat(2, &[0.99, 0.0, 2.0, 0.99])]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap()
    }

    #[test]
    fn psi_examples() {
        let spec = scalar_spec(&[0.5], &[], 1.0);
        let psi = psi_weights(&spec, 5);
        assert_eq!(psi[0], mat(1, &[1.0]));
        for (j, p) in psi.iter().enumerate() {
            assert_abs_diff_eq!(p[(0, 0)], 0.5_f64.powi(j as i32), epsilon = 1e-15);
        }
        let phi = mat(2, &[0.3, 0.1, 0.0, 0.2]);
        let theta = mat(2, &[0.4, 0.0, -0.1, 0.5]);
        let spec = VarmaSpec::new(
            MatPoly::new(2, vec![phi.clone()]).unwrap(),
            MatPoly::new(2, vec![theta.clone()]).unwrap(),
            SpdMatrix::identity(2),
        )
        .unwrap();
        let psi = psi_weights(&spec, 2);
        assert_eq!(psi[0], DMatrix::identity(2, 2));
        assert!((&psi[1] - (&phi + &theta)).amax() < 1e-15);
    }

    #[test]
    fn acvf_examples() {
        let g = acvf(&scalar_spec(&[0.5], &[], 1.0), 2).unwrap();
        assert_abs_diff_eq!(g.get(0)[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1)[(0, 0)], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(2)[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);

        let g = acvf(&scalar_spec(&[], &[0.5], 1.0), 2).unwrap();
        assert_abs_diff_eq!(g.get(0)[(0, 0)], 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1)[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(2)[(0, 0)], 0.0, epsilon = 1e-14);

        let sigma = SpdMatrix::new(mat(2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let g = acvf(&VarmaSpec::white_noise(sigma.clone()), 3).unwrap();
        assert_eq!(g.get(0), sigma.as_matrix());
        assert!(g.lags()[1..].iter().all(|x| x.amax() == 0.0));
    }

    #[test]
    fn acvf_arma11_closed_form() {
        // γ(0) = (1 + 2φθ + θ²)/(1 - φ²), γ(1) = (φ + θ)(1 + φθ)/(1 - φ²).
        let (phi, theta) = (0.6, -0.3);
        let g = acvf(&scalar_spec(&[phi], &[theta], 1.0), 2).unwrap();
        let g0 = (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi);
        let g1 = (phi + theta) * (1.0 + phi * theta) / (1.0 - phi * phi);
        assert_abs_diff_eq!(g.get(0)[(0, 0)], g0, epsilon = 1e-13);
        assert_abs_diff_eq!(g.get(1)[(0, 0)], g1, epsilon = 1e-13);
        assert_abs_diff_eq!(g.get(2)[(0, 0)], phi * g1, epsilon = 1e-13);
    }

    #[test]
    fn acvf_rejects_noncausal() {
        assert!(matches!(acvf(&scalar_spec(&[1.1], &[], 1.0), 1), Err(Error::Unstable { .. })));
    }

    #[test]
    fn white_noise_likelihood_examples() {
        let spec = scalar_spec(&[], &[], 1.0);
        let one = SamplePath::new(mat(1, &[0.0])).unwrap();
        assert_abs_diff_eq!(log_likelihood(&spec, &one).unwrap(), -0.5 * LN_2PI, epsilon = 1e-12);
        let two = SamplePath::new(mat(2, &[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(log_likelihood(&spec, &two).unwrap(), -LN_2PI, epsilon = 1e-12);
        assert_abs_diff_eq!(-LN_2PI, -1.83788, epsilon = 1e-5);
    }

    #[test]
    fn maxeigen_likelihood_matches_dense() {
        let spec = maxeigen_spec();
        let data = simulate(&spec, 10, 7).unwrap();
        let fast = log_likelihood(&spec, &data).unwrap();
        let dense = log_likelihood_dense(&spec, &data).unwrap();
        assert!((fast - dense).abs() < 1e-8, "{fast} vs {dense}");
    }

    #[test]
    fn arma_likelihood_matches_dense() {
        let spec = VarmaSpec::new(
            MatPoly::new(2, vec![mat(2, &[0.5, 0.2, -0.1, 0.3])]).unwrap(),
            MatPoly::new(2, vec![mat(2, &[0.4, 0.0, 0.3, -0.2]), mat(2, &[0.1, 0.0, 0.0, 0.1])])
                .unwrap(),
            SpdMatrix::new(mat(2, &[1.5, 0.4, 0.4, 0.8])).unwrap(),
        )
        .unwrap();
        let data = simulate(&spec, 25, 3).unwrap();
        let fast = log_likelihood(&spec, &data).unwrap();
        let dense = log_likelihood_dense(&spec, &data).unwrap();
        assert!((fast - dense).abs() < 1e-8, "{fast} vs {dense}");
    }

    #[test]
    fn likelihood_rejects_unstable() {
        let spec = scalar_spec(&[0.5], &[1.5], 1.0);
        let data = SamplePath::new(mat(2, &[0.1, 0.2])).unwrap();
        assert!(matches!(log_likelihood(&spec, &data), Err(Error::Unstable { .. })));
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = maxeigen_spec();
        assert_eq!(simulate(&spec, 50, 11).unwrap(), simulate(&spec, 50, 11).unwrap());
        assert_ne!(simulate(&spec, 50, 11).unwrap(), simulate(&spec, 50, 12).unwrap());
    }

    #[test]
    fn simulate_white_noise_covariance() {
        let spec = VarmaSpec::white_noise(SpdMatrix::identity(2));
        let data = simulate(&spec, 10_000, 5).unwrap();
        let x = data.values();
        let cov = x.transpose() * x / 10_000.0;
        assert!((cov - DMatrix::identity(2, 2)).amax() < 0.05);
    }

    #[test]
    fn forecast_white_noise() {
        let sigma = SpdMatrix::new(mat(2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let spec = VarmaSpec::white_noise(sigma.clone());
        let data = SamplePath::new(mat(3, &[1.0, 2.0, -1.0, 0.5, 0.3, 0.3])).unwrap();
        let fc = forecast(&spec, &data, 3).unwrap();
        for (mean, mse) in fc.means.iter().zip(&fc.mse) {
            assert!(mean.amax() < 1e-14);
            assert!((mse - sigma.as_matrix()).amax() < 1e-14);
        }
        assert!(forecast(&spec, &data, 0).is_err());
    }

    #[test]
    fn forecast_ar1_uses_last_value() {
        let spec = scalar_spec(&[0.5], &[], 1.0);
        let mut path = simulate(&spec, 200, 9).unwrap().values().clone();
        path[(199, 0)] = 2.0;
        let data = SamplePath::new(path).unwrap();
        let fc = forecast(&spec, &data, 2).unwrap();
        assert_abs_diff_eq!(fc.means[0][0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fc.means[1][0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fc.mse[0][(0, 0)], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fc.mse[1][(0, 0)], 1.25, epsilon = 1e-10);
    }

    #[test]
    fn forecast_long_horizon_reverts() {
        let spec = maxeigen_spec();
        let data = simulate(&spec, 30, 1).unwrap();
        let fc = forecast(&spec, &data, 3000).unwrap();
        let g0 = acvf(&spec, 0).unwrap().get(0).clone();
        assert!(fc.means[2999].amax() < 1e-6);
        assert!((&fc.mse[2999] - &g0).amax() < 1e-6 * g0.amax());
    }

    #[test]
    fn codec_round_trip_spec() {
        let spec = VarmaSpec::new(
            MatPoly::new(2, vec![mat(2, &[0.5, 0.2, -0.1, 0.3])]).unwrap(),
            MatPoly::new(2, vec![mat(2, &[0.4, 0.0, 0.3, -0.2])]).unwrap(),
            SpdMatrix::new(mat(2, &[1.5, 0.4, 0.4, 0.8])).unwrap(),
        )
        .unwrap();
        let codec = spec.to_codec().unwrap();
        let back = VarmaSpec::from_codec(&codec, 2, 1, 1).unwrap();
        assert!((&back.phi().coeffs()[0] - &spec.phi().coeffs()[0]).amax() < 1e-9);
        assert!((&back.theta().coeffs()[0] - &spec.theta().coeffs()[0]).amax() < 1e-9);
        assert!((back.sigma().as_matrix() - spec.sigma().as_matrix()).amax() < 1e-9);
    }

    #[test]
    fn demean_records_mean() {
        let data = SamplePath::new(mat(2, &[1.0, 4.0, 3.0, 8.0])).unwrap().demeaned();
        assert_eq!(data.mean().unwrap(), &DVector::from_vec(vec![2.0, 6.0]));
        assert_eq!(data.values(), &mat(2, &[-1.0, -2.0, 1.0, 2.0]));
    }
}
