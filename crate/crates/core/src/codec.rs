//! Scalar charts for the matrix pre-parameters.
//!
//! SPD matrices use `V = L D L'` with unit lower-triangular `L` and
//! `D = diag(exp d)`; orthogonal matrices use `Q = E_δ (I - S)(I + S)^{-1}`
//! with skew-symmetric `S` and `E_δ = I - 2δ e_1 e_1'`. Strict lower
//! triangles (`l`, and the lower part of `S`) are stored row-major.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::is_finite;
use crate::stable::{OrthoMatrix, PreParamBlock, SpdMatrix};

/// Smallest singular value of `I + R` below which `R` counts as Cayley-excluded.
const CAYLEY_SINGULAR_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LdlCode {
    pub l: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CayleyCode {
    pub s: Vec<f64>,
    pub delta: bool,
}

/// Packed real vector and reflection bits for a VARMA(p, q) model.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCodec {
    pub reals: Vec<f64>,
    pub deltas: Vec<bool>,
}

/// Role of one packed real, used for box bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealKind {
    /// An `l` or `s` entry.
    OffDiagonal,
    /// A log-diagonal `d` entry.
    LogDiagonal,
}

fn strict_lower_len(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Number of packed reals: `(p + q) m^2 + m(m + 1)/2`.
pub fn real_count(m: usize, p: usize, q: usize) -> usize {
    (p + q) * m * m + m * (m + 1) / 2
}

/// Index range of lag block `lag` (0-based over AR lags then MA lags).
pub fn lag_range(m: usize, lag: usize) -> Range<usize> {
    lag * m * m..(lag + 1) * m * m
}

/// Index range of the innovation-variance block.
pub fn sigma_range(m: usize, p: usize, q: usize) -> Range<usize> {
    (p + q) * m * m..real_count(m, p, q)
}

pub fn real_kinds(m: usize, p: usize, q: usize) -> Vec<RealKind> {
    let n_l = strict_lower_len(m);
    let mut kinds = Vec::with_capacity(real_count(m, p, q));
    for _ in 0..p + q {
        kinds.extend(std::iter::repeat_n(RealKind::OffDiagonal, n_l));
        kinds.extend(std::iter::repeat_n(RealKind::LogDiagonal, m));
        kinds.extend(std::iter::repeat_n(RealKind::OffDiagonal, n_l));
    }
    kinds.extend(std::iter::repeat_n(RealKind::OffDiagonal, n_l));
    kinds.extend(std::iter::repeat_n(RealKind::LogDiagonal, m));
    kinds
}

fn lower_entries(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..m).flat_map(|i| (0..i).map(move |j| (i, j)))
}

pub fn ldl_encode(v: &SpdMatrix) -> Result<LdlCode> {
    let m = v.dim();
    let g = v
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("LDL argument"))?
        .unpack();
    let diag: Vec<f64> = (0..m).map(|i| g[(i, i)]).collect();
    let l = lower_entries(m).map(|(i, j)| g[(i, j)] / diag[j]).collect();
    let d = diag.iter().map(|g| 2.0 * g.ln()).collect();
    Ok(LdlCode { l, d })
}

pub fn ldl_decode(code: &LdlCode) -> Result<SpdMatrix> {
    let m = code.d.len();
    if code.l.len() != strict_lower_len(m) {
        return Err(Error::LengthMismatch {
            context: "LDL off-diagonal entries",
            expected: strict_lower_len(m),
            found: code.l.len(),
        });
    }
    if code.l.iter().chain(&code.d).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("LDL code"));
    }
    let mut lower = DMatrix::identity(m, m);
    for ((i, j), &x) in lower_entries(m).zip(&code.l) {
        lower[(i, j)] = x;
    }
    let diag: Vec<f64> = code.d.iter().map(|d| d.exp()).collect();
    let mut v = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += lower[(i, k)] * diag[k] * lower[(j, k)];
            }
            v[(i, j)] = acc;
            v[(j, i)] = acc;
        }
    }
    if !is_finite(&v) {
        return Err(Error::NonFinite("decoded LDL matrix"));
    }
    Ok(SpdMatrix::from_trusted(v))
}

fn reflect_first_row(q: &mut DMatrix<f64>) {
    if q.nrows() > 0 {
        q.row_mut(0).neg_mut();
    }
}

pub fn cayley_decode(code: &CayleyCode, m: usize) -> Result<OrthoMatrix> {
    if code.s.len() != strict_lower_len(m) {
        return Err(Error::LengthMismatch {
            context: "Cayley skew entries",
            expected: strict_lower_len(m),
            found: code.s.len(),
        });
    }
    if code.s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Cayley code"));
    }
    let mut skew = DMatrix::zeros(m, m);
    for ((i, j), &x) in lower_entries(m).zip(&code.s) {
        skew[(i, j)] = x;
        skew[(j, i)] = -x;
    }
    let id = DMatrix::<f64>::identity(m, m);
    // X (I + S) = I - S, solved as (I + S)' X' = (I - S)'.
    let plus = &id + &skew;
    let minus = &id - &skew;
    let mut q = plus
        .transpose()
        .lu()
        .solve(&minus.transpose())
        .ok_or(Error::Singular("Cayley transform"))?
        .transpose();
    if code.delta {
        reflect_first_row(&mut q);
    }
    if !is_finite(&q) {
        return Err(Error::NonFinite("decoded orthogonal matrix"));
    }
    Ok(OrthoMatrix::from_trusted(q))
}

pub fn cayley_encode(q: &OrthoMatrix) -> Result<CayleyCode> {
    let m = q.dim();
    let delta = q.determinant() < 0.0;
    let mut r = q.as_matrix().clone();
    if delta {
        reflect_first_row(&mut r);
    }
    let id = DMatrix::<f64>::identity(m, m);
    let plus = &id + &r;
    if m > 0 {
        let smallest = plus.singular_values().min();
        if smallest < CAYLEY_SINGULAR_TOLERANCE {
            return Err(Error::CayleyExcluded);
        }
    }
    let skew = plus.lu().solve(&(&id - &r)).ok_or(Error::CayleyExcluded)?;
    let s = lower_entries(m).map(|(i, j)| 0.5 * (skew[(i, j)] - skew[(j, i)])).collect();
    Ok(CayleyCode { s, delta })
}

fn check_block(block: &PreParamBlock, m: usize, lags: usize, what: &'static str) -> Result<()> {
    if block.dim() != m {
        return Err(Error::DimensionMismatch { context: what, expected: m, found: block.dim() });
    }
    if block.lags() != lags {
        return Err(Error::LengthMismatch { context: what, expected: lags, found: block.lags() });
    }
    Ok(())
}

/// Packs AR lags, then MA lags (each as `l, d, s`), then `Σ` as `l, d`.
pub fn pack(ar: &PreParamBlock, ma: &PreParamBlock, sigma: &SpdMatrix) -> Result<RealCodec> {
    let m = sigma.dim();
    check_block(ar, m, ar.lags(), "AR pre-parameters")?;
    check_block(ma, m, ma.lags(), "MA pre-parameters")?;
    let mut reals = Vec::with_capacity(real_count(m, ar.lags(), ma.lags()));
    let mut deltas = Vec::with_capacity(ar.lags() + ma.lags());
    for block in [ar, ma] {
        for (v, q) in block.vs.iter().zip(&block.qs) {
            let ldl = ldl_encode(v)?;
            let cay = cayley_encode(q)?;
            reals.extend(ldl.l);
            reals.extend(ldl.d);
            reals.extend(cay.s);
            deltas.push(cay.delta);
        }
    }
    let ldl = ldl_encode(sigma)?;
    reals.extend(ldl.l);
    reals.extend(ldl.d);
    Ok(RealCodec { reals, deltas })
}

/// Inverse of [`pack`] with base matrices `M = I` for both polynomials.
pub fn unpack(
    codec: &RealCodec,
    m: usize,
    p: usize,
    q: usize,
) -> Result<(PreParamBlock, PreParamBlock, SpdMatrix)> {
    unpack_with_bases(codec, m, p, q, &SpdMatrix::identity(m), &SpdMatrix::identity(m))
}

pub fn unpack_with_bases(
    codec: &RealCodec,
    m: usize,
    p: usize,
    q: usize,
    ar_base: &SpdMatrix,
    ma_base: &SpdMatrix,
) -> Result<(PreParamBlock, PreParamBlock, SpdMatrix)> {
    let expected = real_count(m, p, q);
    if codec.reals.len() != expected {
        return Err(Error::LengthMismatch {
            context: "packed reals",
            expected,
            found: codec.reals.len(),
        });
    }
    if codec.deltas.len() != p + q {
        return Err(Error::LengthMismatch {
            context: "reflection bits",
            expected: p + q,
            found: codec.deltas.len(),
        });
    }
    let n_l = strict_lower_len(m);
    let mut cursor = codec.reals.as_slice();
    let mut take = |n: usize| {
        let (head, tail) = cursor.split_at(n);
        cursor = tail;
        head.to_vec()
    };

    let mut blocks = Vec::with_capacity(2);
    let mut bit = 0;
    for (lags, base) in [(p, ar_base), (q, ma_base)] {
        let mut vs = Vec::with_capacity(lags);
        let mut qs = Vec::with_capacity(lags);
        for _ in 0..lags {
            let l = take(n_l);
            let d = take(m);
            let s = take(n_l);
            vs.push(ldl_decode(&LdlCode { l, d })?);
            qs.push(cayley_decode(&CayleyCode { s, delta: codec.deltas[bit] }, m)?);
            bit += 1;
        }
        blocks.push(PreParamBlock::new(vs, qs, base.clone())?);
    }
    let l = take(n_l);
    let d = take(m);
    let sigma = ldl_decode(&LdlCode { l, d })?;
    let ma = blocks.pop().expect("two blocks");
    let ar = blocks.pop().expect("two blocks");
    Ok((ar, ma, sigma))
}
