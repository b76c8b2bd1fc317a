//! Moment and tail bounds, and their comparison against exact or simulated left sides.
//!
//! Every bound takes its universal constant explicitly. With `C = 1` the
//! moment bounds reduce to their kernels, e.g. `sqrt(q / ((1 - lambda) n)) * ||f||_q`.

use std::fmt;
use std::str::FromStr;

use crate::chain::{make_chain, two_state_closed, ChainKind, Observable, ProbabilityVector, StationaryChain};
use crate::error::{Error, Result};
use crate::exact::{exact_central_abs_moment, exact_distribution, exact_vector_distribution, even_order, Budget};
use crate::montecarlo::{empirical_moment_lp, empirical_tail_lp, McConfig};

fn check_gap(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::ParamOutOfRange(format!("lambda = {lambda} must be nonnegative")));
    }
    if lambda >= 1.0 {
        return Err(Error::GapClosed(lambda));
    }
    Ok(())
}

fn check_common(lambda: f64, n: usize, norm: f64, c: f64) -> Result<()> {
    check_gap(lambda)?;
    if n == 0 {
        return Err(Error::ParamOutOfRange("n must be at least 1".into()));
    }
    if !(norm >= 0.0 && norm.is_finite()) {
        return Err(Error::ParamOutOfRange(format!("norm of f = {norm} must be finite and nonnegative")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::ParamOutOfRange(format!("constant {c} must be positive")));
    }
    Ok(())
}

fn kernel(q: f64, lambda: f64, n: usize) -> f64 {
    (q / ((1.0 - lambda) * n as f64)).sqrt()
}

/// `C sqrt(q / ((1 - lambda) n)) ||f||_{L_q(pi)}`, for `q >= 2`.
pub fn moment_bound(q: f64, lambda: f64, n: usize, f_q_norm: f64, c: f64) -> Result<f64> {
    check_common(lambda, n, f_q_norm, c)?;
    if !(q >= 2.0) {
        return Err(Error::ParamOutOfRange(format!("q = {q} below 2; use the subtwo bound")));
    }
    Ok(c * kernel(q, lambda, n) * f_q_norm)
}

/// `C sqrt(q / ((1 - lambda) n)) max_j |f(j)|`.
pub fn gillman_bound(q: f64, lambda: f64, n: usize, f_max: f64, c: f64) -> Result<f64> {
    moment_bound(q, lambda, n, f_max, c)
}

/// `C (1 / ((1 - lambda) n))^(1 - 1/q) ||f||_{L_q(pi)}`, for `1 <= q <= 2`.
pub fn subtwo_bound(q: f64, lambda: f64, n: usize, f_q_norm: f64, c: f64) -> Result<f64> {
    check_common(lambda, n, f_q_norm, c)?;
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::ParamOutOfRange(format!("q = {q} outside [1, 2]")));
    }
    Ok(c * (1.0 / ((1.0 - lambda) * n as f64)).powf(1.0 - 1.0 / q) * f_q_norm)
}

/// Largest `a` for which the tail corollary applies: `sqrt(q / ((1 - lambda) n))`.
pub fn tail_domain_edge(q: f64, lambda: f64, n: usize) -> Result<f64> {
    check_common(lambda, n, 0.0, 1.0)?;
    Ok(kernel(q, lambda, n))
}

/// `exp(-c (1 - lambda) n a^2)` on `0 < a <= sqrt(q / ((1 - lambda) n))`.
pub fn corollary_tail(a: f64, q: f64, lambda: f64, n: usize, c: f64) -> Result<f64> {
    check_common(lambda, n, 0.0, c)?;
    if !(q >= 2.0) {
        return Err(Error::ParamOutOfRange(format!("q = {q} below 2")));
    }
    if !(a > 0.0) {
        return Err(Error::ParamOutOfRange(format!("a = {a} must be positive")));
    }
    let edge = kernel(q, lambda, n);
    if a > edge {
        return Err(Error::DomainViolated { a, edge });
    }
    Ok((-c * (1.0 - lambda) * n as f64 * a * a).exp())
}

/// The moment kernel for `l_p^d`-valued observables, `q >= p >= 2`.
pub fn vector_moment_bound(q: f64, p: f64, lambda: f64, n: usize, f_norm: f64, c: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::ParamOutOfRange(format!("p = {p} below 2")));
    }
    if q < p {
        return Err(Error::RegimeUnsupported { p, q });
    }
    moment_bound(q, lambda, n, f_norm, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    Moment,
    Gillman,
    Subtwo,
    Tail,
    Vector,
}

impl BoundId {
    pub const ALL: [BoundId; 5] = [BoundId::Moment, BoundId::Gillman, BoundId::Subtwo, BoundId::Tail, BoundId::Vector];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::Moment => "moment",
            BoundId::Gillman => "gillman",
            BoundId::Subtwo => "subtwo",
            BoundId::Tail => "tail",
            BoundId::Vector => "vector",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| Error::ParamOutOfRange(format!("unknown bound '{s}'")))
    }
}

/// How the left side of a comparison is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LhsMethod {
    Exact,
    MonteCarlo(McConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    MonteCarlo,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::MonteCarlo => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound: BoundId,
    pub q: f64,
    pub p: Option<f64>,
    pub n: usize,
    pub lambda: f64,
    /// The norm of `f` entering the right side.
    pub norm: f64,
    pub a: Option<f64>,
    pub constant: f64,
    pub rhs: f64,
    pub lhs: Option<f64>,
    pub lhs_method: Option<Provenance>,
    pub ratio: Option<f64>,
    pub valid: bool,
}

impl BoundReport {
    fn attach(mut self, lhs: f64, method: Provenance) -> Self {
        self.ratio = Some(ratio(lhs, self.rhs));
        self.lhs = Some(lhs);
        self.lhs_method = Some(method);
        self
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// One bound evaluation: which bound, at which parameters, with which constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub bound: BoundId,
    pub n: usize,
    pub q: f64,
    /// Coordinate norm exponent for vector observables (default 2).
    pub p: Option<f64>,
    /// Tail threshold, in units of `||f||_q`.
    pub a: Option<f64>,
    pub constant: f64,
}

/// Evaluates the bound alone, given the relevant norm of `f`.
pub fn evaluate(query: &BoundQuery, lambda: f64, norm: f64) -> Result<BoundReport> {
    let BoundQuery { bound, n, q, p, a, constant } = *query;
    let rhs = match bound {
        BoundId::Moment => moment_bound(q, lambda, n, norm, constant)?,
        BoundId::Gillman => gillman_bound(q, lambda, n, norm, constant)?,
        BoundId::Subtwo => subtwo_bound(q, lambda, n, norm, constant)?,
        BoundId::Tail => {
            let a = a.ok_or_else(|| Error::ParamOutOfRange("tail bound needs a threshold a".into()))?;
            corollary_tail(a, q, lambda, n, constant)?
        }
        BoundId::Vector => vector_moment_bound(q, p.unwrap_or(2.0), lambda, n, norm, constant)?,
    };
    Ok(BoundReport { bound, q, p, n, lambda, norm, a, constant, rhs, lhs: None, lhs_method: None, ratio: None, valid: true })
}

/// Evaluates the bound for `(chain, f)` and attaches the left side.
pub fn compare(query: &BoundQuery, chain: &StationaryChain, f: &Observable, method: LhsMethod, budget: &Budget) -> Result<BoundReport> {
    if f.n_states() != chain.n_states() {
        return Err(Error::DimensionMismatch { expected: chain.n_states(), got: f.n_states() });
    }
    let pi = chain.pi();
    let q = query.q;
    let p = query.p.unwrap_or(2.0);
    if query.bound != BoundId::Vector && !f.is_scalar() {
        return Err(Error::InvalidObservable(format!("{} bound needs a scalar observable", query.bound)));
    }
    let norm = match query.bound {
        BoundId::Gillman => f.sup_norm(),
        BoundId::Vector => f.lq_norm_with(pi, q, p),
        _ => f.lq_norm(pi, q),
    };
    let report = evaluate(query, chain.lambda(), norm)?;
    let n = query.n;
    let (lhs, provenance) = match (query.bound, method) {
        (BoundId::Tail, LhsMethod::Exact) => {
            let a = report.a.expect("checked by evaluate") * norm;
            let dist = exact_distribution(chain, f, n, budget)?;
            (dist.tail(n, f.mean(pi)?[0], a), Provenance::Exact)
        }
        (BoundId::Tail, LhsMethod::MonteCarlo(config)) => {
            let a = report.a.expect("checked by evaluate") * norm;
            (empirical_tail_lp(chain, f, n, a, p, &config)?.value, Provenance::MonteCarlo)
        }
        (BoundId::Vector, LhsMethod::Exact) => (exact_vector_moment(chain, f, n, q, p, budget)?.powf(1.0 / q), Provenance::Exact),
        (_, LhsMethod::Exact) => (exact_scalar_moment(chain, f, n, q, budget)?.powf(1.0 / q), Provenance::Exact),
        (_, LhsMethod::MonteCarlo(config)) => (empirical_moment_lp(chain, f, n, q, p, &config)?.value.powf(1.0 / q), Provenance::MonteCarlo),
    };
    Ok(report.attach(lhs, provenance))
}

/// `E|S_n/n - mu|^q`: the moment recursion for even `q`, the exact law otherwise.
pub fn exact_scalar_moment(chain: &StationaryChain, f: &Observable, n: usize, q: f64, budget: &Budget) -> Result<f64> {
    if even_order(q).is_ok() {
        return exact_central_abs_moment(chain, f, n, q, budget);
    }
    if f.lattice().is_none() {
        return Err(Error::OddExponent(q));
    }
    let mean = f.mean(chain.pi())?[0];
    Ok(exact_distribution(chain, f, n, budget)?.central_abs_moment(n, mean, q))
}

/// `E||S_n/n - mu||_{l_p^d}^q`: the `d <= 3` lattice law, or coordinatewise variances when `q = p = 2`.
pub fn exact_vector_moment(chain: &StationaryChain, f: &Observable, n: usize, q: f64, p: f64, budget: &Budget) -> Result<f64> {
    let mean = f.mean(chain.pi())?;
    match exact_vector_distribution(chain, f, n, budget) {
        Ok(dist) => Ok(dist.central_moment(n, &mean, q, p)),
        Err(e @ Error::BudgetExceeded { .. }) => Err(e),
        Err(_) if q == 2.0 && p == 2.0 => (0..f.dim())
            .map(|c| exact_central_abs_moment(chain, &Observable::scalar(f.coordinate(c))?, n, 2.0, budget))
            .sum(),
        Err(e) => Err(e),
    }
}

/// The two-state families showing the moment bounds cannot be improved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharpnessFamily {
    /// `eps = 1/2`, `f = (1, -1)`, against the `q >= 2` kernel.
    Theorem,
    /// Small `eps`, `f = (1, 0)`, against the `1 <= q <= 2` kernel.
    Subtwo,
}

impl FromStr for SharpnessFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(SharpnessFamily::Theorem),
            "subtwo" => Ok(SharpnessFamily::Subtwo),
            _ => Err(Error::ParamOutOfRange(format!("unknown sharpness family '{s}'"))),
        }
    }
}

/// `ceil(x)`, ignoring rounding noise just above an integer.
pub fn tolerant_ceil(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Exact left side over the `C = 1` kernel for a sharpness family.
///
/// `lambda = 0` uses the i.i.d. chain. The theorem family ignores `eps`
/// unless given, defaulting to 1/2; the subtwo family requires it.
pub fn sharpness_ratio(family: SharpnessFamily, lambda: f64, q: f64, n: usize, eps: Option<f64>, budget: &Budget) -> Result<f64> {
    check_gap(lambda)?;
    let (eps, values, least_n) = match family {
        SharpnessFamily::Theorem => (eps.unwrap_or(0.5), vec![1.0, -1.0], q / (1.0 - lambda)),
        SharpnessFamily::Subtwo => (
            eps.ok_or_else(|| Error::ParamOutOfRange("subtwo family needs eps".into()))?,
            vec![1.0, 0.0],
            1.0 / (1.0 - lambda),
        ),
    };
    if n < tolerant_ceil(least_n) {
        return Err(Error::PreconditionViolated(format!("n = {n} below {least_n}")));
    }
    let chain = if lambda == 0.0 {
        make_chain(ChainKind::Iid(ProbabilityVector::new(vec![eps, 1.0 - eps])?))?
    } else {
        two_state_closed(lambda, eps)?
    };
    let f = Observable::scalar(values)?;
    let norm = f.lq_norm(chain.pi(), q);
    let rhs = match family {
        SharpnessFamily::Theorem => moment_bound(q, lambda, n, norm, 1.0)?,
        SharpnessFamily::Subtwo => subtwo_bound(q, lambda, n, norm, 1.0)?,
    };
    let lhs = exact_scalar_moment(&chain, &f, n, q, budget)?.powf(1.0 / q);
    Ok(ratio(lhs, rhs))
}

/// Smallest `c` with `P <= exp(-c (1 - lambda) n a^2)` over `(n, a, P)` points with `P > 0`.
pub fn fit_tail_rate(lambda: f64, points: &[(usize, f64, f64)]) -> Option<f64> {
    points
        .iter()
        .filter(|(_, _, prob)| *prob > 0.0)
        .map(|&(n, a, prob)| -prob.ln() / ((1.0 - lambda) * n as f64 * a * a))
        .reduce(f64::min)
}
