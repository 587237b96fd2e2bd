//! Adaptive random-walk Metropolis.
//!
//! Gaussian random-walk proposals `x' = x + L z` with `L L^T = lambda * C`.
//! During burn-in the global scale `lambda` follows a Robbins–Monro recursion
//! towards the target acceptance rate and `C` is replaced by the empirical
//! covariance of the later burn-in draws. Both are frozen afterwards, so the
//! retained draws come from a fixed Markov kernel.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcOptions {
    pub chains: usize,
    /// Iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub target_accept: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 10_000,
            burn_in: 2_000,
            thin: 1,
            target_accept: 0.234,
        }
    }
}

impl McmcOptions {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.thin == 0 {
            return Err(Error::domain("chains and thin must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::domain("burn_in must be < iterations"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::domain("target_accept must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Retained draws of one chain, row-major `kept x dim`.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub dim: usize,
    pub draws: Vec<f64>,
    pub accepted: usize,
    pub proposed: usize,
}

impl ChainRun {
    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

/// Lower Cholesky factor of a symmetric positive-definite `d x d` matrix.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * d + i] = math::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Running mean and covariance (Welford).
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d * d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        let d = x.len();
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dx) in self.mean.iter_mut().zip(&delta) {
            *m += dx / n;
        }
        for i in 0..d {
            let di = x[i] - self.mean[i];
            for j in 0..d {
                self.m2[i * d + j] += delta[j] * di;
            }
        }
    }

    fn covariance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|v| v / denom).collect()
    }
}

/// Runs one adaptive chain from `x0`. `init_sd` sets the initial diagonal
/// proposal scale. `log_target` may return `-inf` outside the support.
pub fn run_chain<F>(
    mut log_target: F,
    x0: &[f64],
    init_sd: &[f64],
    opts: &McmcOptions,
    seed: u64,
) -> Result<ChainRun>
where
    F: FnMut(&[f64]) -> f64,
{
    opts.validate()?;
    let d = x0.len();
    let mut rng = rng::stream(seed);

    let mut x = x0.to_vec();
    let mut lp = log_target(&x);
    if !lp.is_finite() {
        return Err(Error::domain("chain started outside the support"));
    }

    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        cov[i * d + i] = init_sd[i] * init_sd[i];
    }
    let mut ln_lambda = math::ln(2.38 * 2.38 / d as f64);
    let scaled = |cov: &[f64], ln_lambda: f64| -> Vec<f64> {
        let lambda = math::exp(ln_lambda);
        cov.iter().map(|c| c * lambda).collect()
    };
    let mut chol = cholesky(&scaled(&cov, ln_lambda), d)
        .ok_or_else(|| Error::domain("initial proposal scale must be positive"))?;

    // covariance is learned from the last three quarters of burn-in
    let learn_from = opts.burn_in / 4;
    let switch_after = (20 * d).max(100);
    let mut moments = Moments::new(d);

    let kept_per_chain = (opts.iterations - opts.burn_in).div_ceil(opts.thin);
    let mut draws = Vec::with_capacity(kept_per_chain * d);
    let mut proposal = vec![0.0; d];
    let mut z = vec![0.0; d];
    let (mut accepted, mut proposed) = (0, 0);

    for t in 0..opts.iterations {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut step = 0.0;
            for k in 0..=i {
                step += chol[i * d + k] * z[k];
            }
            proposal[i] = x[i] + step;
        }
        let lp_new = log_target(&proposal);
        let log_ratio = lp_new - lp;
        let accept_prob = if log_ratio.is_nan() {
            0.0
        } else if log_ratio >= 0.0 {
            1.0
        } else {
            math::exp(log_ratio)
        };
        let u: f64 = rng.random();
        let accept = u < accept_prob;
        if accept {
            x.copy_from_slice(&proposal);
            lp = lp_new;
        }

        if t < opts.burn_in {
            let gamma = 1.0 / math::powf(t as f64 + 1.0, 0.6);
            ln_lambda += gamma * (accept_prob - opts.target_accept);
            if t >= learn_from {
                moments.push(&x);
                if moments.n >= switch_after {
                    cov = moments.covariance();
                    for i in 0..d {
                        cov[i * d + i] += 1e-10;
                    }
                }
            }
            if let Some(l) = cholesky(&scaled(&cov, ln_lambda), d) {
                chol = l;
            }
        } else {
            proposed += 1;
            if accept {
                accepted += 1;
            }
            if (t - opts.burn_in) % opts.thin == 0 {
                draws.extend_from_slice(&x);
            }
        }
    }

    Ok(ChainRun {
        dim: d,
        draws,
        accepted,
        proposed,
    })
}

/// Effective sample size of one chain (Geyer's initial monotone sequence).
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let m = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - m).collect();
    let autocov = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        // a chain that never moved carries one draw's worth of information
        return 1.0;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let pair = (autocov(k) + autocov(k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        k += 2;
    }
    (n as f64 / tau.max(1e-12)).min(n as f64)
}
