//! Schur-stable matrix polynomials and their block Toeplitz parameterization.
//!
//! A monic polynomial `A(z) = z^k - A_1 z^{k-1} - ... - A_k` is Schur-stable
//! when every root of `det A(z)` lies in the open unit disc. Such polynomials
//! are in one-to-one correspondence with positive definite block Toeplitz
//! matrices whose last lower Schur complement equals a fixed base matrix `M`,
//! and those in turn are generated by positive definite increments
//! `V_t = C_{t-1} - C_t` together with orthogonal "rotations" `Q_t`.
//!
//! [`build_stable`] maps `(M, V_1..V_k, Q_1..Q_k)` to the coefficients and
//! [`recover_preparams`] inverts it.
//!
//! Block Toeplitz layout: block `(i, j)` of `U_t` is `U(j - i)` for `j >= i`
//! and `U(i - j)'` below the diagonal, so the first block row is
//! `[U(0), U(1), ..., U(t)]`. For a stationary process `U(h) = E[X_t X_{t-h}']`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    self, inv_sqrt_pd, min_eigenvalue_sym, pad_top_left, solve_sym, sqrt_psd, stein_solve,
    symmetrized,
};

/// Symmetric relative tolerance applied when validating user-supplied SPD matrices.
const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Frobenius tolerance on `QQ' - I` for user-supplied orthogonal matrices.
const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
/// Smallest eigenvalue of a recovered `V_t` that still counts as full rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "SPD matrix (square)",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if !linalg::is_finite(&m) {
            return Err(Error::NonFinite("SPD matrix"));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotPositiveDefinite("non-symmetric matrix"));
        }
        let m = symmetrized(m);
        if m.nrows() > 0 && m.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("matrix"));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Wraps a matrix known to be SPD by construction; only symmetrizes.
    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self(symmetrized(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Real orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMatrix(DMatrix<f64>);

impl OrthoMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                context: "orthogonal matrix (square)",
                expected: q.nrows(),
                found: q.ncols(),
            });
        }
        if !linalg::is_finite(&q) {
            return Err(Error::NonFinite("orthogonal matrix"));
        }
        let n = q.nrows();
        let deviation = (&q * q.transpose() - DMatrix::identity(n, n)).norm();
        if deviation > ORTHOGONALITY_TOLERANCE {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self(q))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub(crate) fn from_trusted(q: DMatrix<f64>) -> Self {
        Self(q)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        if self.0.nrows() == 0 {
            return 1.0;
        }
        self.0.determinant()
    }
}

/// Coefficients `[A_1, ..., A_k]` of the monic polynomial `z^k - A_1 z^{k-1} - ... - A_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly {
    dim: usize,
    coeffs: Vec<DMatrix<f64>>,
}

impl MatPoly {
    pub fn new(dim: usize, coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        for c in &coeffs {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "polynomial coefficient",
                    expected: dim,
                    found: if c.nrows() != dim { c.nrows() } else { c.ncols() },
                });
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn zeros(dim: usize, degree: usize) -> Self {
        Self { dim, coeffs: vec![DMatrix::zeros(dim, dim); degree] }
    }

    pub fn scalar(coeffs: &[f64]) -> Self {
        Self {
            dim: 1,
            coeffs: coeffs.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<DMatrix<f64>> {
        self.coeffs
    }

    /// Coefficients with every block negated.
    pub fn negated(&self) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// Horizontal concatenation `[A_1 ... A_k]` (m × mk).
    pub fn stacked(&self) -> DMatrix<f64> {
        let (m, k) = (self.dim, self.degree());
        let mut out = DMatrix::zeros(m, m * k);
        for (i, c) in self.coeffs.iter().enumerate() {
            out.view_mut((0, i * m), (m, m)).copy_from(c);
        }
        out
    }
}

/// Block companion matrix with `[A_1..A_k]` in the top block row and
/// identities on the block sub-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix(DMatrix<f64>);

impl CompanionMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Symmetric block Toeplitz matrix described by its first block row `U(0), ..., U(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitz {
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl BlockToeplitz {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| {
            Error::InvalidArgument("block Toeplitz matrix needs at least U(0)".into())
        })?;
        let dim = first.nrows();
        for b in &blocks {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "block Toeplitz block",
                    expected: dim,
                    found: b.ncols(),
                });
            }
        }
        let scale = first.amax().max(f64::MIN_POSITIVE);
        if (first - first.transpose()).amax() > SYMMETRY_TOLERANCE * scale {
            return Err(Error::InvalidArgument("U(0) must be symmetric".into()));
        }
        let mut blocks = blocks;
        blocks[0] = symmetrized(blocks[0].clone());
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, lag: usize) -> &DMatrix<f64> {
        &self.blocks[lag]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Assembled `U_t` for `t <= order()`, size `m(t+1)`.
    pub fn assemble(&self, t: usize) -> DMatrix<f64> {
        assert!(t <= self.order(), "order {t} exceeds {}", self.order());
        let m = self.dim;
        let size = m * (t + 1);
        let mut out = DMatrix::zeros(size, size);
        for i in 0..=t {
            for j in 0..=t {
                let block = if j >= i {
                    self.blocks[j - i].clone()
                } else {
                    self.blocks[i - j].transpose()
                };
                out.view_mut((i * m, j * m), (m, m)).copy_from(&block);
            }
        }
        out
    }

    pub fn assembled(&self) -> DMatrix<f64> {
        self.assemble(self.order())
    }

    /// `ξ_t`, the (mt × m) column with `ξ_t' = [U(1), ..., U(t)]`.
    pub fn xi(&self, t: usize) -> DMatrix<f64> {
        let m = self.dim;
        let mut out = DMatrix::zeros(m * t, m);
        for h in 1..=t {
            out.view_mut(((h - 1) * m, 0), (m, m)).copy_from(&self.blocks[h].transpose());
        }
        out
    }

    /// `κ_t`, the (mt × m) column with `κ_t' = [U(t)', ..., U(1)']`.
    pub fn kappa(&self, t: usize) -> DMatrix<f64> {
        let m = self.dim;
        let mut out = DMatrix::zeros(m * t, m);
        for i in 0..t {
            out.view_mut((i * m, 0), (m, m)).copy_from(&self.blocks[t - i]);
        }
        out
    }

    pub fn is_positive_definite(&self) -> bool {
        self.assembled().cholesky().is_some()
    }
}

/// Pre-parameters of one stable polynomial: `V_1..V_k`, `Q_1..Q_k` and the base `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreParamBlock {
    pub vs: Vec<SpdMatrix>,
    pub qs: Vec<OrthoMatrix>,
    pub base: SpdMatrix,
}

impl PreParamBlock {
    pub fn new(vs: Vec<SpdMatrix>, qs: Vec<OrthoMatrix>, base: SpdMatrix) -> Result<Self> {
        if vs.len() != qs.len() {
            return Err(Error::LengthMismatch {
                context: "pre-parameter lags",
                expected: vs.len(),
                found: qs.len(),
            });
        }
        let m = base.dim();
        for d in vs.iter().map(SpdMatrix::dim).chain(qs.iter().map(OrthoMatrix::dim)) {
            if d != m {
                return Err(Error::DimensionMismatch {
                    context: "pre-parameter block",
                    expected: m,
                    found: d,
                });
            }
        }
        Ok(Self { vs, qs, base })
    }

    pub fn lags(&self) -> usize {
        self.vs.len()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Lower (`C_t`) and upper (`D_t`) Schur complements of `U(0)` for `t = 0..order`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurChain {
    pub lower: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
}

/// Outcome of a stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub radius: f64,
}

pub fn companion(poly: &MatPoly) -> CompanionMatrix {
    let (m, k) = (poly.dim(), poly.degree());
    let mut out = DMatrix::zeros(m * k, m * k);
    for (i, c) in poly.coeffs().iter().enumerate() {
        out.view_mut((0, i * m), (m, m)).copy_from(c);
    }
    for i in 1..k {
        for r in 0..m {
            out[(i * m + r, (i - 1) * m + r)] = 1.0;
        }
    }
    CompanionMatrix(out)
}

/// Moduli of the determinantal roots of `poly`, largest first.
pub fn root_moduli(poly: &MatPoly) -> Result<Vec<f64>> {
    linalg::eigenvalue_moduli(companion(poly).as_matrix())
}

/// Stable iff the spectral radius of the companion matrix is below `1 - margin`.
pub fn is_schur_stable(poly: &MatPoly, margin: f64) -> Result<Stability> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("stability margin {margin} must be >= 0")));
    }
    let radius = linalg::spectral_radius(companion(poly).as_matrix())?;
    Ok(Stability { stable: radius < 1.0 - margin, radius })
}

/// `S(A, U) = U - A U A'`.
pub fn stein_transform(a: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if a.ncols() != m || u.nrows() != m || u.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "Stein transform",
            expected: m,
            found: u.nrows(),
        });
    }
    Ok(symmetrized(u - a * u * a.transpose()))
}

/// Generalized Stein transform `U - Ã U Ã'` for the companion `Ã` of `poly`,
/// returned together with its upper-left `m × m` block.
pub fn generalized_stein(
    poly: &MatPoly,
    u: &BlockToeplitz,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, k) = (poly.dim(), poly.degree());
    if k == 0 {
        return Err(Error::InvalidArgument("generalized Stein transform needs degree >= 1".into()));
    }
    if u.dim() != m {
        return Err(Error::DimensionMismatch {
            context: "generalized Stein block size",
            expected: m,
            found: u.dim(),
        });
    }
    if u.order() != k - 1 {
        return Err(Error::DimensionMismatch {
            context: "generalized Stein order",
            expected: k - 1,
            found: u.order(),
        });
    }
    let full = stein_transform(companion(poly).as_matrix(), &u.assembled())?;
    let top = full.view((0, 0), (m, m)).into_owned();
    Ok((full, top))
}

/// Unique solution `V = Σ_{j≥1} A^j M A'^j` of `V = A (V + M) A'`.
pub fn riccati_solve(a: &DMatrix<f64>, m_mat: &SpdMatrix) -> Result<SpdMatrixOrZero> {
    let m = m_mat.dim();
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "Riccati coefficient",
            expected: m,
            found: a.nrows(),
        });
    }
    let radius = linalg::spectral_radius(a)?;
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let u = stein_solve(a, m_mat.as_matrix())?;
    let v = symmetrized(u - m_mat.as_matrix());
    let min = min_eigenvalue_sym(&v);
    let scale = v.amax().max(1.0);
    if min < -linalg::PSD_TOLERANCE * scale {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: min });
    }
    Ok(SpdMatrixOrZero(v))
}

/// Positive semi-definite result of [`riccati_solve`]; it is zero when `A = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrixOrZero(DMatrix<f64>);

impl SpdMatrixOrZero {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Converts to [`SpdMatrix`], rejecting (numerically) singular matrices.
    pub fn into_spd(self, lag: usize) -> Result<SpdMatrix> {
        let min = min_eigenvalue_sym(&self.0);
        if min < RANK_TOLERANCE {
            return Err(Error::RankDeficient { lag, min_eigenvalue: min });
        }
        Ok(SpdMatrix::from_trusted(self.0))
    }
}

/// VAR(1) chart `A(V, Q) = V^{1/2} Q (V + M)^{-1/2}`.
pub fn forward_map_var1(
    v: &SpdMatrix,
    q: &OrthoMatrix,
    m_mat: &SpdMatrix,
) -> Result<DMatrix<f64>> {
    let m = m_mat.dim();
    if v.dim() != m || q.dim() != m {
        return Err(Error::DimensionMismatch {
            context: "VAR(1) chart",
            expected: m,
            found: if v.dim() != m { v.dim() } else { q.dim() },
        });
    }
    let v_half = sqrt_psd(v.as_matrix())?;
    let u_inv_half = inv_sqrt_pd(&(v.as_matrix() + m_mat.as_matrix()), "V + M")?;
    Ok(v_half * q.as_matrix() * u_inv_half)
}

/// Inverse of [`forward_map_var1`]: `V` from the Riccati equation and
/// `Q = V^{-1/2} A (V + M)^{1/2}`.
pub fn inverse_map_var1(a: &DMatrix<f64>, m_mat: &SpdMatrix) -> Result<(SpdMatrix, OrthoMatrix)> {
    let v = riccati_solve(a, m_mat)?.into_spd(1)?;
    let v_inv_half = inv_sqrt_pd(v.as_matrix(), "V")?;
    let u_half = sqrt_psd(&(v.as_matrix() + m_mat.as_matrix()))?;
    let q = v_inv_half * a * u_half;
    Ok((v, OrthoMatrix::from_trusted(q)))
}

fn solve_leading(u: &BlockToeplitz, order: usize, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_sym(&u.assemble(order), rhs).ok_or(Error::SingularBlock { order })
}

/// Lower and upper Schur complements `C_0..C_t`, `D_0..D_t` of `U(0)`.
pub fn schur_chain(u: &BlockToeplitz) -> Result<SchurChain> {
    let u0 = u.block(0).clone();
    let mut lower = vec![u0.clone()];
    let mut upper = vec![u0.clone()];
    for j in 1..=u.order() {
        let xi = u.xi(j);
        let kappa = u.kappa(j);
        let mut rhs = DMatrix::zeros(xi.nrows(), 2 * u.dim());
        rhs.columns_mut(0, u.dim()).copy_from(&xi);
        rhs.columns_mut(u.dim(), u.dim()).copy_from(&kappa);
        let sol = solve_leading(u, j - 1, &rhs)?;
        let c = &u0 - xi.transpose() * sol.columns(0, u.dim());
        let d = &u0 - kappa.transpose() * sol.columns(u.dim(), u.dim());
        lower.push(symmetrized(c));
        upper.push(symmetrized(d));
    }
    Ok(SchurChain { lower, upper })
}

/// Builds the stable coefficients and the positive definite block Toeplitz
/// matrix `U_k` (with `C_k = M`) from pre-parameters.
///
/// `U(0) = M + Σ V_j`, then for `t = 1..k`
/// `U(t) = ξ_{t-1}' U_{t-2}^{-1} κ_{t-1} + V_t^{1/2} Q_t D_{t-1}^{1/2}`,
/// which makes `C_{t-1} - C_t = V_t`. Finally `A = ξ_k' U_{k-1}^{-1}`.
pub fn build_stable(pre: &PreParamBlock) -> Result<(MatPoly, BlockToeplitz)> {
    let m = pre.dim();
    let k = pre.lags();
    let mut u0 = pre.base.as_matrix().clone();
    for v in &pre.vs {
        u0 += v.as_matrix();
    }
    let u0 = symmetrized(u0);
    let mut toeplitz = BlockToeplitz { dim: m, blocks: vec![u0.clone()] };
    if k == 0 {
        return Ok((MatPoly::zeros(m, 0), toeplitz));
    }

    for t in 1..=k {
        let (cross, d_prev) = if t == 1 {
            (DMatrix::zeros(m, m), u0.clone())
        } else {
            let kappa = toeplitz.kappa(t - 1);
            let sol = solve_leading(&toeplitz, t - 2, &kappa)?;
            let cross = toeplitz.xi(t - 1).transpose() * &sol;
            let d = symmetrized(&u0 - kappa.transpose() * &sol);
            (cross, d)
        };
        let v_half = sqrt_psd(pre.vs[t - 1].as_matrix())?;
        let d_half = sqrt_psd(&d_prev)?;
        let ut = cross + v_half * pre.qs[t - 1].as_matrix() * d_half;
        if !linalg::is_finite(&ut) {
            return Err(Error::NonFinite("block Toeplitz recursion"));
        }
        toeplitz.blocks.push(ut);
    }

    let sol = solve_leading(&toeplitz, k - 1, &toeplitz.xi(k))?;
    let a = sol.transpose();
    let coeffs = (0..k).map(|i| a.columns(i * m, m).into_owned()).collect();
    Ok((MatPoly { dim: m, coeffs }, toeplitz))
}

/// Autocovariances `Γ(0..=k)` of the causal VAR(k) with coefficients `poly`
/// and innovation variance `m_mat`, as a block Toeplitz matrix of order `k`.
pub fn var_autocovariance_toeplitz(poly: &MatPoly, m_mat: &SpdMatrix) -> Result<BlockToeplitz> {
    let (m, k) = (poly.dim(), poly.degree());
    if m_mat.dim() != m {
        return Err(Error::DimensionMismatch {
            context: "innovation variance",
            expected: m,
            found: m_mat.dim(),
        });
    }
    if k == 0 {
        return Ok(BlockToeplitz { dim: m, blocks: vec![m_mat.as_matrix().clone()] });
    }
    let comp = companion(poly);
    let radius = linalg::spectral_radius(comp.as_matrix())?;
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let gamma = stein_solve(comp.as_matrix(), &pad_top_left(m_mat.as_matrix(), m * k))?;
    let mut blocks: Vec<DMatrix<f64>> =
        (0..k).map(|h| gamma.view((0, h * m), (m, m)).into_owned()).collect();
    blocks[0] = symmetrized(blocks[0].clone());
    // Γ(k) = Σ_i A_i Γ(k - i), reading Γ(k-1-i) off the last block column.
    let mut last = DMatrix::zeros(m, m);
    for (i, a) in poly.coeffs().iter().enumerate() {
        last += a * gamma.view((i * m, (k - 1) * m), (m, m));
    }
    blocks.push(last);
    Ok(BlockToeplitz { dim: m, blocks })
}

/// Inverse of [`build_stable`] for a Schur-stable polynomial.
pub fn recover_preparams(poly: &MatPoly, m_mat: &SpdMatrix) -> Result<PreParamBlock> {
    let k = poly.degree();
    let toeplitz = var_autocovariance_toeplitz(poly, m_mat)?;
    if k == 0 {
        return PreParamBlock::new(vec![], vec![], m_mat.clone());
    }
    let chain = schur_chain(&toeplitz)?;
    let rank_floor = RANK_TOLERANCE * m_mat.as_matrix().amax().max(1.0);

    let mut vs = Vec::with_capacity(k);
    let mut qs = Vec::with_capacity(k);
    for t in 1..=k {
        let v = symmetrized(&chain.lower[t - 1] - &chain.lower[t]);
        let min = min_eigenvalue_sym(&v);
        if !(min >= rank_floor) {
            return Err(Error::RankDeficient { lag: t, min_eigenvalue: min });
        }
        let w = if t == 1 {
            toeplitz.block(1).clone()
        } else {
            let sol = solve_leading(&toeplitz, t - 2, &toeplitz.kappa(t - 1))?;
            toeplitz.block(t) - toeplitz.xi(t - 1).transpose() * sol
        };
        let q = inv_sqrt_pd(&v, "V_t")? * w * inv_sqrt_pd(&chain.upper[t - 1], "D_{t-1}")?;
        vs.push(SpdMatrix::from_trusted(v));
        qs.push(OrthoMatrix::from_trusted(q));
    }
    PreParamBlock::new(vs, qs, m_mat.clone())
}

/// Symmetric PSD square root.
pub fn spd_sqrt(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sqrt_psd(v)
}
