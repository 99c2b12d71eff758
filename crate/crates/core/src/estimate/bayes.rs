//! Metropolis-within-Gibbs sampling over the stable pre-parameters.
//!
//! Each sweep updates the reals of every AR lag, every MA lag and `Σ` as
//! separate blocks with Gaussian random-walk proposals, then redraws each
//! reflection bit from an independent Bernoulli(0.5) proposal.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::codec::{self, RealCodec};
use crate::error::{Error, Result};
use crate::model::{log_likelihood, SamplePath, VarmaSpec};
use crate::stable::{MatPoly, SpdMatrix};

use super::mle::starting_point;
use super::{Diagnostics, FitOptions, FitResult, Method};

const ADAPT_WINDOW: usize = 50;
const TARGET_LOW: f64 = 0.2;
const TARGET_HIGH: f64 = 0.4;
const LOW_ACCEPTANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Standard deviation of the independent normal prior on every real.
    pub real_prior_sd: f64,
    /// Prior probability that a reflection bit is set.
    pub delta_prob: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { real_prior_sd: 5.0_f64.sqrt(), delta_prob: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOptions {
    pub length: usize,
    pub burn_in: usize,
    /// Initial random-walk standard deviation, adapted during burn-in.
    pub rw_step: f64,
    pub thin: usize,
    pub seed: u64,
    pub adapt: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { length: 20_000, burn_in: 5_000, rw_step: 0.1, thin: 1, seed: 0, adapt: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesFit {
    pub result: FitResult,
    /// Retained draws in original coordinates.
    pub draws: Vec<VarmaSpec>,
    pub draw_log_posteriors: Vec<f64>,
}

/// Log prior density of packed pre-parameters, up to an additive constant.
pub fn log_prior(codec: &RealCodec, prior: &PriorSpec) -> f64 {
    let var = prior.real_prior_sd * prior.real_prior_sd;
    let reals: f64 = codec.reals.iter().map(|x| -0.5 * x * x / var).sum();
    let bits: f64 = codec
        .deltas
        .iter()
        .map(|&b| if b { prior.delta_prob.ln() } else { (1.0 - prior.delta_prob).ln() })
        .sum();
    reals + bits
}

struct State {
    codec: RealCodec,
    spec: VarmaSpec,
    log_post: f64,
}

struct Target<'a> {
    data: &'a SamplePath,
    prior: &'a PriorSpec,
    m: usize,
    p: usize,
    q: usize,
}

impl Target<'_> {
    fn evaluate(&self, codec: RealCodec) -> Option<State> {
        let spec = VarmaSpec::from_codec(&codec, self.m, self.p, self.q).ok()?;
        let ll = log_likelihood(&spec, self.data).ok()?;
        let log_post = ll + log_prior(&codec, self.prior);
        log_post.is_finite().then_some(State { codec, spec, log_post })
    }
}

fn validate(prior: &PriorSpec, chain: &ChainOptions) -> Result<()> {
    if !(prior.real_prior_sd > 0.0) {
        return Err(Error::InvalidArgument("prior standard deviation must be positive".into()));
    }
    if !(prior.delta_prob > 0.0 && prior.delta_prob < 1.0) {
        return Err(Error::InvalidArgument("reflection-bit prior must lie in (0, 1)".into()));
    }
    if chain.burn_in >= chain.length {
        return Err(Error::InvalidArgument("burn-in must be shorter than the chain".into()));
    }
    if chain.thin == 0 || !(chain.rw_step > 0.0) {
        return Err(Error::InvalidArgument("thinning and random-walk step must be positive".into()));
    }
    Ok(())
}

struct MeanAccumulator {
    phi: Vec<DMatrix<f64>>,
    theta: Vec<DMatrix<f64>>,
    sigma: DMatrix<f64>,
    count: usize,
}

impl MeanAccumulator {
    fn new(m: usize, p: usize, q: usize) -> Self {
        Self {
            phi: vec![DMatrix::zeros(m, m); p],
            theta: vec![DMatrix::zeros(m, m); q],
            sigma: DMatrix::zeros(m, m),
            count: 0,
        }
    }

    fn add(&mut self, spec: &VarmaSpec) {
        for (acc, c) in self.phi.iter_mut().zip(spec.phi().coeffs()) {
            *acc += c;
        }
        for (acc, c) in self.theta.iter_mut().zip(spec.theta().coeffs()) {
            *acc += c;
        }
        self.sigma += spec.sigma().as_matrix();
        self.count += 1;
    }

    fn mean(&self) -> Result<VarmaSpec> {
        let k = self.count as f64;
        let m = self.sigma.nrows();
        let phi = MatPoly::new(m, self.phi.iter().map(|c| c / k).collect())?;
        let theta = MatPoly::new(m, self.theta.iter().map(|c| c / k).collect())?;
        VarmaSpec::new(phi, theta, SpdMatrix::new(&self.sigma / k)?)
    }
}

/// Posterior sampling with the posterior mean of `(Φ, Θ, Σ)` as point estimate.
///
/// If the mean of the draws is not itself causal and invertible, the retained
/// draw with the highest posterior density is reported instead and flagged.
pub fn bayes_fit(
    data: &SamplePath,
    p: usize,
    q: usize,
    prior: &PriorSpec,
    chain: &ChainOptions,
) -> Result<BayesFit> {
    validate(prior, chain)?;
    let m = data.m();
    if m == 0 {
        return Err(Error::InvalidArgument("data must have at least one series".into()));
    }
    let target = Target { data, prior, m, p, q };
    let (start, mut warnings) = starting_point(data, p, q, &FitOptions::default());
    let mut state = target
        .evaluate(start)
        .or_else(|| {
            let origin = RealCodec { reals: vec![0.0; codec::real_count(m, p, q)], deltas: vec![false; p + q] };
            target.evaluate(origin)
        })
        .ok_or(Error::NonFinite("log-posterior at the starting point"))?;

    let mut blocks: Vec<Range<usize>> = (0..p + q).map(|lag| codec::lag_range(m, lag)).collect();
    blocks.push(codec::sigma_range(m, p, q));
    let n_blocks = blocks.len();
    let mut steps = vec![chain.rw_step; n_blocks];
    let mut window = vec![0usize; n_blocks];
    let mut accepted = vec![0usize; n_blocks + p + q];
    let mut proposed = vec![0usize; n_blocks + p + q];

    let mut rng = ChaCha8Rng::seed_from_u64(chain.seed);
    let mut means = MeanAccumulator::new(m, p, q);
    let mut draws = Vec::with_capacity((chain.length - chain.burn_in).div_ceil(chain.thin));
    let mut draw_log_posteriors = Vec::with_capacity(draws.capacity());

    for iter in 0..chain.length {
        let retained_phase = iter >= chain.burn_in;
        for (b, range) in blocks.iter().enumerate() {
            let mut reals = state.codec.reals.clone();
            for x in &mut reals[range.clone()] {
                let z: f64 = rng.sample(StandardNormal);
                *x += steps[b] * z;
            }
            let proposal = RealCodec { reals, deltas: state.codec.deltas.clone() };
            let u: f64 = rng.random();
            if retained_phase {
                proposed[b] += 1;
            }
            if let Some(next) = target.evaluate(proposal) {
                if u.ln() < next.log_post - state.log_post {
                    state = next;
                    window[b] += 1;
                    if retained_phase {
                        accepted[b] += 1;
                    }
                }
            }
        }
        for bit in 0..p + q {
            let flip: bool = rng.random_bool(0.5);
            let u: f64 = rng.random();
            if retained_phase {
                proposed[n_blocks + bit] += 1;
            }
            if flip == state.codec.deltas[bit] {
                if retained_phase {
                    accepted[n_blocks + bit] += 1;
                }
                continue;
            }
            let mut deltas = state.codec.deltas.clone();
            deltas[bit] = flip;
            let proposal = RealCodec { reals: state.codec.reals.clone(), deltas };
            if let Some(next) = target.evaluate(proposal) {
                if u.ln() < next.log_post - state.log_post {
                    state = next;
                    if retained_phase {
                        accepted[n_blocks + bit] += 1;
                    }
                }
            }
        }
        if chain.adapt && !retained_phase && (iter + 1) % ADAPT_WINDOW == 0 {
            for (step, hits) in steps.iter_mut().zip(window.iter_mut()) {
                let rate = *hits as f64 / ADAPT_WINDOW as f64;
                if rate < TARGET_LOW {
                    *step *= 0.8;
                } else if rate > TARGET_HIGH {
                    *step *= 1.25;
                }
                *hits = 0;
            }
        }
        if retained_phase && (iter - chain.burn_in).is_multiple_of(chain.thin) {
            means.add(&state.spec);
            draws.push(state.spec.clone());
            draw_log_posteriors.push(state.log_post);
        }
    }

    let acceptance_rates: Vec<f64> = accepted
        .iter()
        .zip(&proposed)
        .map(|(&a, &n)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
        .collect();
    if acceptance_rates[..n_blocks].iter().any(|&r| r < LOW_ACCEPTANCE) {
        warnings.push("low Metropolis acceptance rate in at least one block".into());
    }

    let mean_spec = means.mean().ok().filter(|s| s.check_stable().is_ok());
    let spec = match mean_spec {
        Some(spec) => spec,
        None => {
            warnings.push(
                "posterior mean is not causal-invertible; reporting the highest-posterior draw".into(),
            );
            let best = draw_log_posteriors
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("at least one retained draw");
            draws[best].clone()
        }
    };
    let radii = spec.check_stable()?;
    let loglik = log_likelihood(&spec, data)?;
    let codec = spec.to_codec().ok();
    let delta_profile = codec.as_ref().map(|c| c.deltas.clone()).unwrap_or_default();
    Ok(BayesFit {
        result: FitResult {
            method: Method::Bayes,
            spec,
            codec,
            loglik,
            delta_profile,
            diagnostics: Diagnostics {
                iterations: chain.length,
                converged: true,
                branch_logliks: Vec::new(),
                acceptance_rates,
                spectral_radii: radii,
                warnings,
            },
        },
        draws,
        draw_log_posteriors,
    })
}
