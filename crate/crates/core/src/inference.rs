//! Parameter estimation: maximum likelihood, percentile bootstrap and
//! adaptive Metropolis.
//!
//! The likelihood factorizes into a zero part depending on `pi` alone and a
//! positive part depending on the carrier and GPD parameters, so the MLE of
//! `pi` is the zero fraction and only the positive part is optimized. Shape
//! and scale parameters live on log coordinates inside a fixed box; the box
//! edges act as walls (objective `+inf`, target density `0`).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::carrier::{CarrierFamily, Model};
use crate::error::{Error, Result};
use crate::gpd::GpdParams;
use crate::math;
use crate::mcmc::{self, McmcOptions};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng;
use crate::stats;
use crate::ziegpd::{ln_positive_density, Param, Sample, ZiegpdParams};

/// Fewest positive observations a fit accepts.
pub const MIN_POSITIVES: usize = 5;

/// Largest fraction of bootstrap replicates allowed to fail.
pub const MAX_BOOTSTRAP_FAILURE_RATE: f64 = 0.2;

/// Smallest number of bootstrap replicates.
pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

const MAX_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mle,
    Bayes,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Bayes => "bayes",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Method::Mle),
            "bayes" => Ok(Method::Bayes),
            _ => Err(Error::Domain(alloc::format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub method: Method,
    pub model: Model,
    /// Starting point; defaults to `sigma = mean of positives`, `xi = 0.1`,
    /// unit carrier shapes.
    pub init: Option<ZiegpdParams>,
    /// Simplex iterations per optimizer run.
    pub max_iters: usize,
    /// Simplex diameter (log coordinates) at which the optimizer stops.
    pub tol: f64,
    /// Credible intervals are `(alpha/2, 1 - alpha/2)` posterior quantiles.
    pub alpha: f64,
    pub mcmc: McmcOptions,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(method: Method, model: Model) -> Self {
        Self {
            method,
            model,
            init: None,
            max_iters: 5000,
            tol: 1e-7,
            alpha: 0.05,
            mcmc: McmcOptions::default(),
            seed: 0,
        }
    }

    pub fn mle(model: Model) -> Self {
        Self::new(Method::Mle, model)
    }

    pub fn bayes(model: Model) -> Self {
        Self::new(Method::Bayes, model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("tol must be > 0"));
        }
        check_alpha(self.alpha)?;
        if let Some(init) = &self.init {
            if init.model() != self.model {
                return Err(Error::domain("init does not match the requested model"));
            }
        }
        if self.method == Method::Bayes {
            self.mcmc.validate()?;
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("alpha must lie in (0, 1)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub converged: bool,
    /// Simplex iterations (MLE) or total sampler iterations (Bayes).
    pub iterations: usize,
    pub acceptance_rate: Option<f64>,
    pub ess: Option<Vec<(Param, f64)>>,
    /// Monte Carlo standard error of each posterior mean, `sd / sqrt(ess)`.
    pub mcse: Option<Vec<(Param, f64)>>,
    pub bootstrap_replicates: Option<usize>,
    pub bootstrap_failures: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimates: ZiegpdParams,
    pub loglik: f64,
    /// Empty unless intervals were computed.
    pub intervals: Vec<Interval>,
    pub alpha: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn interval(&self, param: Param) -> Option<&Interval> {
        self.intervals.iter().find(|i| i.param == param)
    }
}

/// Bootstrap output: the full-data fit with percentile intervals attached,
/// plus the surviving replicate estimates in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub fit: FitResult,
    pub replicates: Vec<ZiegpdParams>,
    pub failures: usize,
}

impl BootstrapSummary {
    pub fn intervals(&self) -> &[Interval] {
        &self.fit.intervals
    }
}

/// `(lower, upper)` box for a shape or scale parameter on its natural scale.
pub fn parameter_bounds(param: Param) -> (f64, f64) {
    match param {
        Param::Pi => (0.0, 1.0),
        Param::Kappa => (1e-3, 1e3),
        Param::Delta => (1e-3, 500.0),
        Param::Sigma => (1e-8, 1e8),
        Param::Xi => (1e-8, 5.0),
    }
}

/// Positive-part parameters of `model`, in log-coordinate order.
fn shape_params(model: Model) -> &'static [Param] {
    &Param::for_model(model)[1..]
}

fn in_box(param: Param, v: f64) -> bool {
    let (lo, hi) = parameter_bounds(param);
    v >= lo && v <= hi
}

/// Positive-part likelihood on log coordinates.
struct PositivePart<'a> {
    model: Model,
    positives: &'a [f64],
}

impl PositivePart<'_> {
    fn decode(&self, x: &[f64]) -> Option<(CarrierFamily, GpdParams)> {
        let mut nat = [0.0; 4];
        for ((v, p), n) in x.iter().zip(shape_params(self.model)).zip(nat.iter_mut()) {
            *n = math::exp(*v);
            if !in_box(*p, *n) {
                return None;
            }
        }
        let (carrier, rest) = match self.model {
            Model::M1 => (CarrierFamily::M1 { kappa: nat[0] }, &nat[1..3]),
            Model::M2 => (CarrierFamily::M2 { delta: nat[0] }, &nat[1..3]),
            Model::M3 => (
                CarrierFamily::M3 {
                    kappa: nat[0],
                    delta: nat[1],
                },
                &nat[2..4],
            ),
        };
        let gpd = GpdParams::new(rest[0], rest[1]).ok()?;
        Some((carrier, gpd))
    }

    fn encode(&self, theta: &ZiegpdParams) -> Result<Vec<f64>> {
        shape_params(self.model)
            .iter()
            .map(|p| {
                let v = theta.get(*p).ok_or_else(|| Error::domain("init lacks a parameter"))?;
                if !in_box(*p, v) {
                    return Err(Error::Domain(alloc::format!(
                        "init {p} = {v} is outside the supported range"
                    )));
                }
                Ok(math::ln(v))
            })
            .collect()
    }

    fn loglik(&self, x: &[f64]) -> f64 {
        let Some((carrier, gpd)) = self.decode(x) else {
            return f64::NEG_INFINITY;
        };
        let ll: f64 = self
            .positives
            .iter()
            .map(|&z| ln_positive_density(&carrier, &gpd, z))
            .sum();
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    fn default_start(&self) -> Vec<f64> {
        let sigma0 = stats::mean(self.positives);
        let mut x = Vec::with_capacity(4);
        for p in shape_params(self.model) {
            x.push(match p {
                Param::Sigma => math::ln(sigma0),
                Param::Xi => math::ln(0.1),
                _ => 0.0,
            });
        }
        x
    }
}

fn check_data(data: &Sample) -> Result<()> {
    if data.positive_count() == 0 {
        return Err(Error::NoPositive);
    }
    if data.zero_count() == 0 {
        return Err(Error::NoZeros);
    }
    if data.positive_count() < MIN_POSITIVES {
        return Err(Error::InsufficientData(alloc::format!(
            "{} positive observations, need at least {MIN_POSITIVES}",
            data.positive_count()
        )));
    }
    Ok(())
}

fn assemble(pi: f64, part: &PositivePart<'_>, x: &[f64]) -> Result<ZiegpdParams> {
    let (carrier, gpd) = part
        .decode(x)
        .ok_or_else(|| Error::domain("estimate left the parameter box"))?;
    ZiegpdParams::new(pi, carrier, gpd)
}

/// Maximum likelihood. `pi` is the zero fraction; the positive part is
/// maximized by Nelder–Mead on log coordinates, restarted from the incumbent
/// until a restart no longer improves the objective.
pub fn fit_mle(data: &Sample, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    check_data(data)?;
    let positives: Vec<f64> = data.positives().collect();
    let part = PositivePart {
        model: opts.model,
        positives: &positives,
    };
    let pi = data.zero_count() as f64 / data.len() as f64;

    let mut x = match &opts.init {
        Some(init) => part.encode(init)?,
        None => part.default_start(),
    };
    let objective = |x: &[f64]| -part.loglik(x);
    if !objective(&x).is_finite() {
        return Err(Error::domain("log-likelihood is not finite at the starting point"));
    }

    let mut nm = NelderMeadOptions {
        max_iters: opts.max_iters,
        tol: opts.tol,
        initial_step: 0.3,
    };
    let mut value = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..=MAX_RESTARTS {
        let m = nelder_mead(objective, &x, &nm);
        iterations += m.iterations;
        converged = m.converged;
        let improvement = value - m.value;
        if m.value <= value {
            x = m.x;
            value = m.value;
        }
        if !converged || improvement <= 1e-9 * (1.0 + math::abs(value)) {
            break;
        }
        // later restarts only need to probe the neighbourhood
        nm.initial_step = 0.05;
    }

    let estimates = assemble(pi, &part, &x)?;
    let loglik = estimates.loglik(data)?;
    let result = FitResult {
        estimates,
        loglik,
        intervals: Vec::new(),
        alpha: opts.alpha,
        method: Method::Mle,
        diagnostics: Diagnostics {
            converged,
            iterations,
            ..Default::default()
        },
    };
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + math::ln_1p(math::exp(-x))
    } else {
        math::ln_1p(math::exp(x))
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

/// Bayesian fit by adaptive random-walk Metropolis on
/// `(logit pi, log shapes)` with a flat prior on those coordinates, except
/// for `xi`, whose prior is flat on `xi` itself. The likelihood tends to a
/// positive constant as `xi -> 0` (the exponential tail), so a flat prior on
/// `log xi` would leave the posterior proper only through the box edge.
///
/// Chains start from the MLE (or `opts.init`) with a small jitter; chain `c`
/// uses the seed `derive_seed(opts.seed, c)`.
pub fn fit_bayes(data: &Sample, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    check_data(data)?;
    let positives: Vec<f64> = data.positives().collect();
    let part = PositivePart {
        model: opts.model,
        positives: &positives,
    };
    let n0 = data.zero_count() as f64;
    let n1 = positives.len() as f64;

    let start = match opts.init {
        Some(init) => init,
        None => {
            let mle_opts = FitOptions {
                method: Method::Mle,
                ..*opts
            };
            match fit_mle(data, &mle_opts) {
                Ok(fit) => fit.estimates,
                Err(Error::NotConverged { best, .. }) => best.estimates,
                Err(e) => return Err(e),
            }
        }
    };
    let shape_start = part.encode(&start)?;
    let pi0 = start.pi().clamp(1e-6, 1.0 - 1e-6);
    let mut y0 = vec![math::ln(pi0) - math::ln_1p(-pi0)];
    y0.extend_from_slice(&shape_start);

    let xi_at = y0.len() - 1;
    let log_post = |y: &[f64]| {
        // ln pi = -softplus(-y), ln(1 - pi) = -softplus(y)
        let zero_part = -n0 * softplus(-y[0]) - n1 * softplus(y[0]);
        // uniform prior on xi itself: Jacobian of the log coordinate
        zero_part + part.loglik(&y[1..]) + y[xi_at]
    };

    let n = n0 + n1;
    let mut init_sd = vec![2.0 / math::sqrt(n * pi0 * (1.0 - pi0))];
    init_sd.extend(core::iter::repeat_n(1.0 / math::sqrt(n1), shape_start.len()));

    let dim = y0.len();
    let mut runs = Vec::with_capacity(opts.mcmc.chains);
    for c in 0..opts.mcmc.chains {
        let seed = rng::derive_seed(opts.seed, c as u64);
        let mut jitter_rng = rng::stream(rng::derive_seed(seed, u64::MAX));
        let mut x0: Vec<f64> = y0
            .iter()
            .zip(&init_sd)
            .map(|(y, sd)| {
                let z: f64 = jitter_rng.sample(StandardNormal);
                y + 0.5 * sd * z
            })
            .collect();
        if !log_post(&x0).is_finite() {
            x0.copy_from_slice(&y0);
        }
        runs.push(mcmc::run_chain(log_post, &x0, &init_sd, &opts.mcmc, seed)?);
    }

    let params = Param::for_model(opts.model);
    let to_natural = |j: usize, v: f64| if j == 0 { logistic(v) } else { math::exp(v) };
    let mut means = Vec::with_capacity(dim);
    let mut intervals = Vec::with_capacity(dim);
    let mut ess = Vec::with_capacity(dim);
    let mut mcse = Vec::with_capacity(dim);
    for (j, param) in params.iter().enumerate() {
        let mut pooled = Vec::new();
        let mut ess_j = 0.0;
        for run in &runs {
            let col: Vec<f64> = run.column(j).into_iter().map(|v| to_natural(j, v)).collect();
            ess_j += mcmc::effective_sample_size(&col);
            pooled.extend(col);
        }
        means.push(stats::mean(&pooled));
        let (lower, upper) = stats::percentile_interval(&pooled, opts.alpha);
        intervals.push(Interval {
            param: *param,
            lower,
            upper,
        });
        ess.push((*param, ess_j));
        mcse.push((*param, math::sqrt(stats::variance(&pooled) / ess_j)));
    }

    let accepted: usize = runs.iter().map(|r| r.accepted).sum();
    let proposed: usize = runs.iter().map(|r| r.proposed).sum();
    let acceptance = accepted as f64 / proposed.max(1) as f64;
    if acceptance < 0.05 {
        return Err(Error::NonMixing(alloc::format!(
            "acceptance rate {acceptance:.4} is below 0.05"
        )));
    }
    if let Some((p, e)) = ess.iter().find(|(_, e)| *e < 50.0) {
        return Err(Error::NonMixing(alloc::format!(
            "effective sample size of {p} is {e:.1}, below 50"
        )));
    }

    let shape_means: Vec<f64> = means[1..].iter().map(|v| math::ln(*v)).collect();
    let estimates = assemble(means[0], &part, &shape_means)?;
    let loglik = estimates.loglik(data)?;
    Ok(FitResult {
        estimates,
        loglik,
        intervals,
        alpha: opts.alpha,
        method: Method::Bayes,
        diagnostics: Diagnostics {
            converged: true,
            iterations: opts.mcmc.chains * opts.mcmc.iterations,
            acceptance_rate: Some(acceptance),
            ess: Some(ess),
            mcse: Some(mcse),
            ..Default::default()
        },
    })
}

/// Fits with the method named in `opts`.
pub fn fit(data: &Sample, opts: &FitOptions) -> Result<FitResult> {
    match opts.method {
        Method::Mle => fit_mle(data, opts),
        Method::Bayes => fit_bayes(data, opts),
    }
}

/// Resamples `data` with replacement using the stream for `(seed, index)`.
pub fn bootstrap_resample(data: &Sample, seed: u64, index: u64) -> Sample {
    let mut rng = rng::stream(rng::derive_seed(seed, index));
    let values = data.values();
    let n = values.len();
    let resampled: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
    // resampling valid observations cannot produce invalid ones
    Sample::with_seed(resampled, seed).expect("resampled values are valid")
}

/// One bootstrap replicate: resample, then refit by MLE starting from
/// `point`. Errors mean the replicate failed.
pub fn bootstrap_replicate(
    data: &Sample,
    opts: &FitOptions,
    point: &ZiegpdParams,
    seed: u64,
    index: u64,
) -> Result<ZiegpdParams> {
    let resampled = bootstrap_resample(data, seed, index);
    let rep_opts = FitOptions {
        method: Method::Mle,
        init: Some(*point),
        ..*opts
    };
    fit_mle(&resampled, &rep_opts).map(|f| f.estimates)
}

/// Combines replicate outcomes (in replicate order) into percentile
/// intervals attached to the full-data fit `point`.
pub fn summarize_bootstrap(
    mut point: FitResult,
    outcomes: Vec<Result<ZiegpdParams>>,
    alpha: f64,
) -> Result<BootstrapSummary> {
    check_alpha(alpha)?;
    let total = outcomes.len();
    let replicates: Vec<ZiegpdParams> = outcomes.into_iter().filter_map(|r| r.ok()).collect();
    let failures = total - replicates.len();
    if failures as f64 > MAX_BOOTSTRAP_FAILURE_RATE * total as f64 || replicates.is_empty() {
        return Err(Error::TooManyFailures {
            failed: failures,
            total,
        });
    }
    let model = point.estimates.model();
    point.intervals = Param::for_model(model)
        .iter()
        .map(|p| {
            let xs: Vec<f64> = replicates.iter().filter_map(|r| r.get(*p)).collect();
            let (lower, upper) = stats::percentile_interval(&xs, alpha);
            Interval {
                param: *p,
                lower,
                upper,
            }
        })
        .collect();
    point.alpha = alpha;
    point.diagnostics.bootstrap_replicates = Some(total);
    point.diagnostics.bootstrap_failures = Some(failures);
    Ok(BootstrapSummary {
        fit: point,
        replicates,
        failures,
    })
}

/// Nonparametric percentile bootstrap around the MLE: `b` resamples with
/// replacement, each refit by MLE; intervals are the empirical `alpha/2` and
/// `1 - alpha/2` quantiles of the replicate estimates. Replicate `i` draws
/// from the stream `derive_seed(seed, i)`, so results do not depend on the
/// order in which replicates are evaluated.
pub fn bootstrap_ci(
    data: &Sample,
    opts: &FitOptions,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapSummary> {
    if b < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::Domain(alloc::format!(
            "need at least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates, got {b}"
        )));
    }
    check_alpha(alpha)?;
    let mle_opts = FitOptions {
        method: Method::Mle,
        ..*opts
    };
    let point = fit_mle(data, &mle_opts)?;
    let outcomes = (0..b as u64)
        .map(|i| bootstrap_replicate(data, &mle_opts, &point.estimates, seed, i))
        .collect();
    summarize_bootstrap(point, outcomes, alpha)
}
