//! Numerical checks of the inequalities behind the moment bound.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::expansion::{alternating_product, centered_values, expansion_rhs, expansion_sum, l1_pi};
use super::patterns::{admissible_patterns, holder_exponents};
use crate::chain::{Observable, StationaryChain};
use crate::error::{Error, Result};
use crate::exact::{exact_raw_moments, Budget};
use crate::spectral::{self, e_pi, weighted_norm};

/// Relative slack in `lhs <= rhs * (1 + PASS_SLACK)`.
pub const PASS_SLACK: f64 = 1e-9;
/// Regression ceiling on `max_s log(prod 1/beta) / m`, derived by enumeration for `m <= 8`.
pub const PRODUCT_LOG_CEILING: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaId {
    /// Moment expansion with indices arranged in increasing order.
    Increasing,
    /// Iterated Hölder bound for alternating products.
    Alternate,
    /// Splitting over run patterns.
    Splitting,
    /// Size of the expansion sum under `e m <= n (1 - lambda)`.
    Finb,
    /// The product of inverse `beta` exponents over a pattern.
    ProductBound,
}

impl LemmaId {
    pub const ALL: [LemmaId; 5] = [LemmaId::Increasing, LemmaId::Alternate, LemmaId::Splitting, LemmaId::Finb, LemmaId::ProductBound];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::Increasing => "increasing",
            LemmaId::Alternate => "alternate",
            LemmaId::Splitting => "splitting",
            LemmaId::Finb => "finb",
            LemmaId::ProductBound => "product_bound",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::ParamOutOfRange(format!("unknown lemma '{s}'")))
    }
}

/// One checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `lhs <= rhs * (1 + 1e-9)`.
    pub pass: bool,
    /// The right side used interpolation upper bounds instead of certified norms.
    pub conservative: bool,
    /// The right side carries an unspecified constant, so `pass` is not a verdict.
    pub informational: bool,
}

impl LemmaReport {
    fn new(lemma: LemmaId, instance: String, lhs: f64, rhs: f64, conservative: bool) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self { lemma, instance, lhs, rhs, ratio, pass: lhs <= rhs * (1.0 + PASS_SLACK), conservative, informational: false }
    }

    /// Whether the report counts as a failure (informational reports never do).
    pub fn failed(&self) -> bool {
        !self.informational && !self.pass
    }
}

/// The data each lemma check consumes.
#[derive(Debug, Clone)]
pub enum LemmaCase {
    Increasing { chain: StationaryChain, f: Observable, n: usize, m: usize },
    Alternate { chain: StationaryChain, f: Observable, ts: Vec<DMatrix<f64>>, q: f64 },
    Splitting { chain: StationaryChain, f: Observable, ts: Vec<DMatrix<f64>> },
    Finb { chain: StationaryChain, f: Observable, n: usize, m: usize },
    ProductBound { m: usize },
}

impl LemmaCase {
    pub fn lemma(&self) -> LemmaId {
        match self {
            LemmaCase::Increasing { .. } => LemmaId::Increasing,
            LemmaCase::Alternate { .. } => LemmaId::Alternate,
            LemmaCase::Splitting { .. } => LemmaId::Splitting,
            LemmaCase::Finb { .. } => LemmaId::Finb,
            LemmaCase::ProductBound { .. } => LemmaId::ProductBound,
        }
    }
}

pub fn verify_lemma(case: &LemmaCase, budget: &Budget) -> Result<LemmaReport> {
    match case {
        LemmaCase::Increasing { chain, f, n, m } => verify_increasing(chain, f, *n, *m, budget),
        LemmaCase::Alternate { chain, f, ts, q } => verify_alternate(chain, f, ts, *q),
        LemmaCase::Splitting { chain, f, ts } => verify_splitting(chain, f, ts),
        LemmaCase::Finb { chain, f, n, m } => verify_finb(chain, f, *n, *m, budget),
        LemmaCase::ProductBound { m } => verify_product_bound(*m),
    }
}

fn describe(chain: &StationaryChain, extra: &str) -> String {
    format!("N={} lambda={:.6} {extra}", chain.n_states(), chain.lambda())
}

/// `E[S_n^{2m}] <= (2m)! sum_v ||U A^{v_1} ... U A^{v_{2m-1}} u||_{L_1(pi)}`.
pub fn verify_increasing(chain: &StationaryChain, f: &Observable, n: usize, m: usize, budget: &Budget) -> Result<LemmaReport> {
    centered_values(chain, f)?;
    let lhs = exact_raw_moments(chain, f, n, 2 * m, budget)?.raw[2 * m];
    let rhs = expansion_rhs(chain, f, n, m, budget)?;
    Ok(LemmaReport::new(LemmaId::Increasing, describe(chain, &format!("n={n} m={m}")), lhs, rhs, false))
}

/// Operator norm on `L_p(pi)` from the sound side, plus whether it is only an interpolation bound.
fn sound_norm(t: &DMatrix<f64>, chain: &StationaryChain, p: f64) -> Result<(f64, bool)> {
    if chain.n_states() == 2 {
        Ok((spectral::two_state_norm(t, chain.pi(), p)?.upper, false))
    } else {
        let exact = spectral::is_exact_exponent(p);
        Ok((spectral::lp_norm_upper(t, chain.pi(), p)?, !exact))
    }
}

/// `||U T_1 ... U T_k u||_{L_1} <= ||u||_{L_q}^{k+1} prod_j ||T_j||_{L_{r_j}}`, `r_j = 2q/(q+k+1-2j)`.
pub fn verify_alternate(chain: &StationaryChain, f: &Observable, ts: &[DMatrix<f64>], q: f64) -> Result<LemmaReport> {
    let u = f.scalar_values()?;
    let k = ts.len();
    if !(q >= (k + 1) as f64) {
        return Err(Error::PreconditionViolated(format!("q = {q} must be at least k + 1 = {}", k + 1)));
    }
    for t in ts {
        if t.nrows() != chain.n_states() || t.ncols() != chain.n_states() {
            return Err(Error::DimensionMismatch { expected: chain.n_states(), got: t.nrows() });
        }
    }
    let pi = chain.pi().as_slice();
    let refs: Vec<&DMatrix<f64>> = ts.iter().collect();
    let lhs = l1_pi(&alternating_product(u, &refs), pi);
    let mut rhs = weighted_norm(u, pi, q).powi(k as i32 + 1);
    let mut conservative = false;
    for (idx, t) in ts.iter().enumerate() {
        let j = (idx + 1) as f64;
        let r = 2.0 * q / (q + k as f64 + 1.0 - 2.0 * j);
        let (norm, loose) = sound_norm(t, chain, r)?;
        rhs *= norm;
        conservative |= loose;
    }
    Ok(LemmaReport::new(LemmaId::Alternate, describe(chain, &format!("k={k} q={q}")), lhs, rhs, conservative))
}

/// `||U(T_1+E_pi) ... U(T_{2m-1}+E_pi) u||_{L_1} <= ||u||_{L_{2m}}^{2m} sum_s prod_{s_j=1} ||T_j||_{L_{p(s,j)}}`.
pub fn verify_splitting(chain: &StationaryChain, f: &Observable, ts: &[DMatrix<f64>]) -> Result<LemmaReport> {
    let u = centered_values(chain, f)?;
    if ts.len() % 2 == 0 {
        return Err(Error::PreconditionViolated(format!("need 2m - 1 matrices, got {}", ts.len())));
    }
    let m = (ts.len() + 1) / 2;
    let pi = chain.pi();
    let e = e_pi(pi);
    let shifted: Vec<DMatrix<f64>> = ts.iter().map(|t| t + &e).collect();
    let refs: Vec<&DMatrix<f64>> = shifted.iter().collect();
    let lhs = l1_pi(&alternating_product(u, &refs), pi.as_slice());

    let mut cache: HashMap<(usize, u64), (f64, bool)> = HashMap::new();
    let mut conservative = false;
    let mut total = 0.0;
    for s in admissible_patterns(m)? {
        let mut product = 1.0;
        for entry in holder_exponents(&s).entries {
            let key = (entry.j, entry.p.to_bits());
            let (norm, loose) = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = sound_norm(&ts[entry.j - 1], chain, entry.p)?;
                    cache.insert(key, v);
                    v
                }
            };
            conservative |= loose;
            product *= norm;
        }
        total += product;
    }
    let rhs = weighted_norm(u, pi.as_slice(), 2.0 * m as f64).powi(2 * m as i32) * total;
    Ok(LemmaReport::new(LemmaId::Splitting, describe(chain, &format!("m={m}")), lhs, rhs, conservative))
}

/// Ratio of `(sum_v ||...||)^{1/2m}` to `sqrt(n/m) / sqrt(1 - lambda) ||u||_{L_{2m}}`.
pub fn verify_finb(chain: &StationaryChain, f: &Observable, n: usize, m: usize, budget: &Budget) -> Result<LemmaReport> {
    let u = centered_values(chain, f)?;
    let lambda = chain.lambda();
    if !(std::f64::consts::E * m as f64 <= n as f64 * (1.0 - lambda)) {
        return Err(Error::PreconditionViolated(format!("e m = {} exceeds n (1 - lambda) = {}", std::f64::consts::E * m as f64, n as f64 * (1.0 - lambda))));
    }
    let lhs = expansion_sum(chain, f, n, m, budget)?.powf(1.0 / (2 * m) as f64);
    let rhs = (n as f64 / m as f64).sqrt() / (1.0 - lambda).sqrt() * weighted_norm(u, chain.pi().as_slice(), 2.0 * m as f64);
    let mut report = LemmaReport::new(LemmaId::Finb, describe(chain, &format!("n={n} m={m}")), lhs, rhs, false);
    report.informational = true;
    Ok(report)
}

/// `max_s prod_{s_j=1} 1/beta(s, j)` against the regression ceiling `exp(3 m)`.
pub fn verify_product_bound(m: usize) -> Result<LemmaReport> {
    let (best, argmax) = max_inverse_beta_product(m)?;
    let implied = best.ln() / m as f64;
    let rhs = (PRODUCT_LOG_CEILING * m as f64).exp();
    let instance = format!("m={m} argmax={argmax} log_per_m={implied:.17e}");
    Ok(LemmaReport::new(LemmaId::ProductBound, instance, best, rhs, false))
}

/// The largest inverse-`beta` product over admissible patterns and the first pattern attaining it.
pub fn max_inverse_beta_product(m: usize) -> Result<(f64, String)> {
    let mut best = (0.0, String::new());
    for s in admissible_patterns(m)? {
        let value = holder_exponents(&s).inverse_beta_product();
        if value > best.0 {
            best = (value, s.to_string());
        }
    }
    Ok(best)
}
