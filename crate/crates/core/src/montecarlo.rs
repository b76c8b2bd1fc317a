//! Seeded trajectory simulation.
//!
//! Trial `i` draws from its own ChaCha8 stream `(seed, i)`, and per-trial
//! values are reduced in trial order, so estimates do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{center_observable, lp_norm, Observable, StationaryChain};
use crate::error::{Error, Result};

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl EmpiricalEstimate {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let trials = samples.len();
        let mut sum = 0.0;
        for x in samples {
            sum += x;
        }
        let mean = sum / trials as f64;
        let mut ss = 0.0;
        for x in samples {
            ss += (x - mean) * (x - mean);
        }
        let sd = (ss / (trials as f64 - 1.0)).sqrt();
        Self { value: mean, stderr: sd / (trials as f64).sqrt(), trials, seed }
    }

    /// `|value - target| <= k * stderr`, with exact agreement required when `stderr = 0`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + 1e-12 * target.abs().max(1e-300)
    }
}

/// Simulation controls. `workers = 0` uses the global rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, workers: 0 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// The random stream of trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Sampler {
    start: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// First index whose cumulative weight exceeds `u`; the last state with mass if rounding leaves none.
fn pick(cdf: &[f64], u: f64) -> usize {
    for (k, &c) in cdf.iter().enumerate() {
        if u < c {
            return k;
        }
    }
    let mut k = cdf.len() - 1;
    while k > 0 && cdf[k] == cdf[k - 1] {
        k -= 1;
    }
    k
}

impl Sampler {
    fn new(chain: &StationaryChain) -> Self {
        let a = chain.matrix();
        let n = chain.n_states();
        Self {
            start: cumulative(chain.pi().as_slice().iter().copied()),
            rows: (0..n).map(|i| cumulative((0..n).map(|j| a[(i, j)]))).collect(),
        }
    }

    fn walk<R: Rng>(&self, n: usize, rng: &mut R, mut visit: impl FnMut(usize)) {
        let mut state = pick(&self.start, rng.random::<f64>());
        visit(state);
        for _ in 1..n {
            state = pick(&self.rows[state], rng.random::<f64>());
            visit(state);
        }
    }
}

/// `(W_1, ..., W_n)` with `W_1 ~ pi`, drawn from stream `(seed, 0)`.
pub fn sample_trajectory(chain: &StationaryChain, n: usize, seed: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        Sampler::new(chain).walk(n, &mut trial_rng(seed, 0), |s| out.push(s));
    }
    out
}

fn run_trials(config: &McConfig, trial: impl Fn(u64) -> f64 + Sync) -> Result<Vec<f64>> {
    if config.trials < 2 {
        return Err(Error::ParamOutOfRange(format!("need at least 2 trials, got {}", config.trials)));
    }
    let collect = || (0..config.trials as u64).into_par_iter().map(&trial).collect::<Vec<f64>>();
    if config.workers == 0 {
        return Ok(collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::ParamOutOfRange(format!("cannot start {} workers: {e}", config.workers)))?;
    Ok(pool.install(collect))
}

/// Centered per-state values, with the sum's deviation measured in `l_p^d`.
fn deviation_sampler(chain: &StationaryChain, f: &Observable, n: usize) -> Result<(Sampler, Observable)> {
    if f.n_states() != chain.n_states() {
        return Err(Error::DimensionMismatch { expected: chain.n_states(), got: f.n_states() });
    }
    if n == 0 {
        return Err(Error::ParamOutOfRange("walk length n must be at least 1".into()));
    }
    Ok((Sampler::new(chain), center_observable(f, chain.pi())?))
}

fn trial_deviation(sampler: &Sampler, centered: &Observable, n: usize, p: f64, seed: u64, index: u64) -> f64 {
    let d = centered.dim();
    let mut rng = trial_rng(seed, index);
    let mut sum = vec![0.0; d];
    sampler.walk(n, &mut rng, |s| {
        for (acc, v) in sum.iter_mut().zip(centered.point(s)) {
            *acc += v;
        }
    });
    sum.iter_mut().for_each(|x| *x /= n as f64);
    lp_norm(&sum, p)
}

/// Sample mean of `|S_n/n - mu|^q`, `mu = E_pi f` exactly.
pub fn empirical_moment(chain: &StationaryChain, f: &Observable, n: usize, q: f64, config: &McConfig) -> Result<EmpiricalEstimate> {
    empirical_moment_lp(chain, f, n, q, 2.0, config)
}

/// Sample mean of `||S_n/n - mu||_{l_p^d}^q` for a `d`-coordinate observable.
pub fn empirical_moment_lp(chain: &StationaryChain, f: &Observable, n: usize, q: f64, p: f64, config: &McConfig) -> Result<EmpiricalEstimate> {
    if !(q > 0.0) || !(p >= 1.0) {
        return Err(Error::ParamOutOfRange(format!("need q > 0 and p >= 1, got q = {q}, p = {p}")));
    }
    let (sampler, centered) = deviation_sampler(chain, f, n)?;
    let samples = run_trials(config, |i| trial_deviation(&sampler, &centered, n, p, config.seed, i).powf(q))?;
    Ok(EmpiricalEstimate::from_samples(&samples, config.seed))
}

/// Fraction of trials with `|S_n/n - mu| >= a`.
pub fn empirical_tail(chain: &StationaryChain, f: &Observable, n: usize, a: f64, config: &McConfig) -> Result<EmpiricalEstimate> {
    empirical_tail_lp(chain, f, n, a, 2.0, config)
}

/// Fraction of trials with `||S_n/n - mu||_{l_p^d} >= a`.
pub fn empirical_tail_lp(chain: &StationaryChain, f: &Observable, n: usize, a: f64, p: f64, config: &McConfig) -> Result<EmpiricalEstimate> {
    if !(a >= 0.0) {
        return Err(Error::ParamOutOfRange(format!("threshold a = {a} must be nonnegative")));
    }
    let (sampler, centered) = deviation_sampler(chain, f, n)?;
    let threshold = a - 1e-12 * (1.0 + a);
    let samples = run_trials(config, |i| {
        if trial_deviation(&sampler, &centered, n, p, config.seed, i) >= threshold {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(EmpiricalEstimate::from_samples(&samples, config.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_chain, ChainKind, ProbabilityVector};

    fn iid_coin() -> StationaryChain {
        make_chain(ChainKind::Iid(ProbabilityVector::uniform(2).unwrap())).unwrap()
    }

    #[test]
    fn trajectories_are_reproducible() {
        let chain = make_chain(ChainKind::TwoState { lambda: 0.6, eps: 0.3 }).unwrap();
        assert_eq!(sample_trajectory(&chain, 50, 11), sample_trajectory(&chain, 50, 11));
        assert_ne!(sample_trajectory(&chain, 50, 11), sample_trajectory(&chain, 50, 12));
    }

    #[test]
    fn sticky_chain_holds() {
        let chain = make_chain(ChainKind::TwoState { lambda: 0.999, eps: 0.5 }).unwrap();
        let path = sample_trajectory(&chain, 200, 3);
        let switches = path.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(switches < 10);
    }

    #[test]
    fn pick_skips_zero_mass() {
        assert_eq!(pick(&[0.5, 0.5, 1.0], 0.7), 2);
        assert_eq!(pick(&[0.0, 1.0], 0.0), 1);
        assert_eq!(pick(&[0.3, 1.0 - 1e-17, 1.0 - 1e-17], 1.0 - 1e-18), 1);
    }

    #[test]
    fn constant_observable_has_zero_moment() {
        let f = Observable::scalar(vec![2.0, 2.0]).unwrap();
        let est = empirical_moment(&iid_coin(), &f, 10, 2.0, &McConfig::new(100, 1)).unwrap();
        assert_eq!((est.value, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn coin_variance() {
        let f = Observable::scalar(vec![1.0, -1.0]).unwrap();
        let est = empirical_moment(&iid_coin(), &f, 100, 2.0, &McConfig::new(10_000, 5)).unwrap();
        assert!(est.within(0.01, 3.0), "{est:?}");
    }

    #[test]
    fn coin_tail() {
        let f = Observable::scalar(vec![1.0, -1.0]).unwrap();
        let est = empirical_tail(&iid_coin(), &f, 2, 1.0, &McConfig::new(20_000, 9)).unwrap();
        assert!(est.within(0.5, 3.0), "{est:?}");
        let none = empirical_tail(&iid_coin(), &f, 2, 1.5, &McConfig::new(1000, 9)).unwrap();
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let chain = make_chain(ChainKind::Cycle { n: 5, laziness: 0.4 }).unwrap();
        let f = Observable::scalar(vec![0.3, -1.0, 2.0, 0.0, 0.5]).unwrap();
        let one = empirical_moment(&chain, &f, 17, 3.0, &McConfig::new(500, 77).with_workers(1)).unwrap();
        let many = empirical_moment(&chain, &f, 17, 3.0, &McConfig::new(500, 77).with_workers(8)).unwrap();
        assert_eq!(one.value.to_bits(), many.value.to_bits());
        assert_eq!(one.stderr.to_bits(), many.stderr.to_bits());
    }

    #[test]
    fn single_trial_is_rejected() {
        let f = Observable::scalar(vec![1.0, -1.0]).unwrap();
        assert!(empirical_moment(&iid_coin(), &f, 2, 2.0, &McConfig::new(1, 0)).is_err());
    }
}
