use crate::codec::{self, RealCodec, RealKind};
use crate::error::{Error, Result};
use crate::model::{log_likelihood, SamplePath, VarmaSpec};
use crate::stable::SpdMatrix;

use super::init::{default_long_order, long_var_init};
use super::optim::{minimize_box, nelder_mead, Bounds, OptimOptions};
use super::yule_walker::sample_acvf;
use super::{Diagnostics, FitResult, Method};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Box bound on `l` and `s` pre-parameters.
    pub bounds_ls: f64,
    /// Box bound on `d` pre-parameters.
    pub bounds_d: f64,
    pub max_iter: usize,
    pub grad_step: f64,
    pub grad_tol: f64,
    /// Long-autoregression order for initialization; chosen from `n` when `None`.
    pub init_order: Option<usize>,
    /// Evaluation budget of the Nelder-Mead fallback, per real parameter.
    pub simplex_evals_per_dim: usize,
    /// Margin used by the final stability assertion.
    pub stability_margin: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds_ls: 1e30,
            bounds_d: 1e10,
            max_iter: 200,
            grad_step: 1e-5,
            grad_tol: 1e-5,
            init_order: None,
            simplex_evals_per_dim: 200,
            stability_margin: 1e-9,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if !(self.bounds_ls > 0.0 && self.bounds_d > 0.0) {
            return Err(Error::InvalidArgument("optimizer bounds must be positive".into()));
        }
        if !(self.grad_step > 0.0) {
            return Err(Error::InvalidArgument("gradient step must be positive".into()));
        }
        Ok(())
    }

    fn bounds(&self, m: usize, p: usize, q: usize) -> Bounds {
        let (lower, upper) = codec::real_kinds(m, p, q)
            .into_iter()
            .map(|kind| match kind {
                RealKind::OffDiagonal => (-self.bounds_ls, self.bounds_ls),
                RealKind::LogDiagonal => (-self.bounds_d, self.bounds_d),
            })
            .unzip();
        Bounds { lower, upper }
    }
}

/// Every reflection-bit vector of length `k`, in binary counting order.
fn all_bit_vectors(k: usize) -> Vec<Vec<bool>> {
    (0..1usize << k).map(|code| (0..k).map(|i| code >> i & 1 == 1).collect()).collect()
}

pub(super) fn starting_point(data: &SamplePath, p: usize, q: usize, opts: &FitOptions) -> (RealCodec, Vec<String>) {
    let (n, m) = (data.n(), data.m());
    let r = opts.init_order.unwrap_or_else(|| default_long_order(n, m, p, q));
    match long_var_init(data, p, q, r) {
        Ok(init) => {
            let mut notes = Vec::new();
            for (part, adj) in [("AR", init.ar_adjustment), ("MA", init.ma_adjustment)] {
                if adj != super::InitAdjustment::None {
                    notes.push(format!("initial {part} polynomial adjusted: {adj:?}"));
                }
            }
            (init.codec, notes)
        }
        Err(err) => {
            // Pre-parameters at the origin with Σ from the lag-0 sample covariance.
            let mut reals = vec![0.0; codec::real_count(m, p, q)];
            let gamma0 = sample_acvf(data, 0).remove(0);
            if let Ok(sigma) = SpdMatrix::new(gamma0) {
                if let Ok(code) = codec::ldl_encode(&sigma) {
                    let range = codec::sigma_range(m, p, q);
                    let packed: Vec<f64> = code.l.into_iter().chain(code.d).collect();
                    reals[range].copy_from_slice(&packed);
                }
            }
            let codec = RealCodec { reals, deltas: vec![false; p + q] };
            (codec, vec![format!("initialization failed ({err}); started from the origin")])
        }
    }
}

/// Negative log-likelihood of packed pre-parameters; `+inf` when undefined.
fn objective<'a>(
    data: &'a SamplePath,
    m: usize,
    p: usize,
    q: usize,
    deltas: &[bool],
) -> impl Fn(&[f64]) -> f64 + 'a {
    let deltas = deltas.to_vec();
    move |x: &[f64]| {
        let codec = RealCodec { reals: x.to_vec(), deltas: deltas.clone() };
        match VarmaSpec::from_codec(&codec, m, p, q).and_then(|spec| log_likelihood(&spec, data)) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Optimum of one reflection-bit branch; `value` is the negative log-likelihood.
struct Branch {
    reals: Vec<f64>,
    deltas: Vec<bool>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Exact maximum likelihood over the stable pre-parameters, profiled over
/// all `2^{p+q}` reflection-bit branches.
pub fn mle_fit(data: &SamplePath, p: usize, q: usize, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let m = data.m();
    if m == 0 {
        return Err(Error::InvalidArgument("data must have at least one series".into()));
    }
    if data.n() == 0 {
        return Err(Error::InsufficientData("maximum likelihood needs at least one observation".into()));
    }
    let (start, mut warnings) = starting_point(data, p, q, opts);
    let bounds = opts.bounds(m, p, q);
    let optim_opts = OptimOptions {
        max_iter: opts.max_iter,
        grad_step: opts.grad_step,
        grad_tol: opts.grad_tol,
        ..OptimOptions::default()
    };

    let mut branch_logliks = Vec::new();
    let mut best: Option<Branch> = None;
    for deltas in all_bit_vectors(p + q) {
        let f = objective(data, m, p, q, &deltas);
        let mut result = minimize_box(&f, &start.reals, &bounds, &optim_opts);
        let mut converged = result.converged;
        if !converged && result.value.is_finite() {
            let budget = opts.simplex_evals_per_dim * result.x.len().max(1);
            let simplex = nelder_mead(&f, &result.x, &bounds, 0.1, budget);
            if simplex.value < result.value {
                converged = simplex.converged;
                result.x = simplex.x;
                result.value = simplex.value;
            }
        }
        branch_logliks.push((deltas.clone(), -result.value));
        let better = best.as_ref().is_none_or(|b| result.value < b.value);
        if better && result.value.is_finite() {
            best = Some(Branch {
                reals: result.x,
                deltas,
                value: result.value,
                iterations: result.iterations,
                converged,
            });
        }
    }

    let Branch { reals, deltas, value, iterations, converged } =
        best.ok_or(Error::NonFinite("log-likelihood at every starting point"))?;
    let codec = RealCodec { reals, deltas: deltas.clone() };
    let spec = VarmaSpec::from_codec(&codec, m, p, q)?;
    let radii = spec.check_stable()?;
    if radii.0 >= 1.0 - opts.stability_margin || radii.1 >= 1.0 - opts.stability_margin {
        warnings.push(format!("fitted roots within {} of the unit circle", opts.stability_margin));
    }
    if !converged {
        warnings.push("optimizer did not converge; returning the best iterate".into());
    }
    Ok(FitResult {
        method: Method::Mle,
        spec,
        codec: Some(codec),
        loglik: -value,
        delta_profile: deltas,
        diagnostics: Diagnostics {
            iterations,
            converged,
            branch_logliks,
            acceptance_rates: Vec::new(),
            spectral_radii: radii,
            warnings,
        },
    })
}
