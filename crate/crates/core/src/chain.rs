//! Stationary finite Markov chains and the observables evaluated along them.
//!
//! A [`StationaryChain`] bundles a row-stochastic matrix `A` with a fully
//! supported law `pi` satisfying `pi A = pi`, and caches the spectral
//! quantity `lambda = ||A - E_pi||` on `L_2(pi)` that every bound consumes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral;

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;
/// Row-sum tolerance above which a matrix is rejected as non-stochastic.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Per-coordinate tolerance for `pi A = pi` and for detailed balance.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Singular-value threshold used to decide the dimension of the fixed-point space.
pub const NULL_SPACE_TOL: f64 = 1e-8;

/// A strictly positive probability vector over `[N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for (state, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::ZeroMassState { state, mass: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self(weights))
    }

    /// The uniform law on `n` states.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A square, entrywise nonnegative matrix whose rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for row in 0..matrix.nrows() {
            let mut sum = 0.0;
            for col in 0..matrix.ncols() {
                let value = matrix[(row, col)];
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidEntry { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NonStochastic { row, sum });
            }
        }
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// A transition matrix together with a stationary law of full support.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryChain {
    a: TransitionMatrix,
    pi: ProbabilityVector,
    lambda: f64,
    reversible: bool,
}

impl StationaryChain {
    pub fn transition(&self) -> &TransitionMatrix {
        &self.a
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.a.matrix()
    }

    pub fn pi(&self) -> &ProbabilityVector {
        &self.pi
    }

    pub fn n_states(&self) -> usize {
        self.a.n_states()
    }

    /// `lambda_pi(A)`, computed once at construction.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn reversible(&self) -> bool {
        self.reversible
    }
}

/// Checks stochasticity, stationarity and positivity; solves for `pi` when absent.
pub fn validate_chain(a: TransitionMatrix, pi: Option<ProbabilityVector>) -> Result<StationaryChain> {
    let n = a.n_states();
    let pi = match pi {
        Some(pi) => pi,
        None => stationary_of(&a)?,
    };
    if pi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pi.len() });
    }
    let m = a.matrix();
    for i in 0..n {
        let flow: f64 = (0..n).map(|j| pi[j] * m[(j, i)]).sum();
        let residual = (flow - pi[i]).abs();
        if residual > STATIONARITY_TOL {
            return Err(Error::NotStationary { coord: i, residual });
        }
    }
    let reversible = detailed_balance(m, pi.as_slice());
    let lambda = spectral::lambda_of(m, &pi)?;
    Ok(StationaryChain { a, pi, lambda, reversible })
}

fn detailed_balance(m: &DMatrix<f64>, pi: &[f64]) -> bool {
    let n = pi.len();
    (0..n).all(|i| (i + 1..n).all(|j| (pi[i] * m[(i, j)] - pi[j] * m[(j, i)]).abs() <= STATIONARITY_TOL))
}

/// True iff `pi_i a_ij = pi_j a_ji` for all pairs, within `1e-10`.
pub fn is_reversible(chain: &StationaryChain) -> bool {
    detailed_balance(chain.matrix(), chain.pi.as_slice())
}

/// The unique stationary law of an irreducible stochastic matrix.
///
/// Uniqueness is decided from the number of singular values of `A^T - I`
/// below [`NULL_SPACE_TOL`]. The solve replaces one balance equation by the
/// normalization, then polishes the answer with a few multiplications by `A`
/// when the residual is not yet at rounding level.
pub fn stationary_of(a: &TransitionMatrix) -> Result<ProbabilityVector> {
    let n = a.n_states();
    let m = a.matrix();
    if n == 1 {
        return ProbabilityVector::new(vec![1.0]);
    }
    let balance = m.transpose() - DMatrix::<f64>::identity(n, n);
    let svd = balance.clone().svd(false, false);
    let null_dim = svd.singular_values.iter().filter(|&&s| s <= NULL_SPACE_TOL).count();
    if null_dim != 1 {
        return Err(Error::Reducible);
    }

    let mut system = balance;
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let mut pi = system.lu().solve(&rhs).ok_or(Error::Reducible)?;

    let residual = |pi: &DVector<f64>| (m.transpose() * pi - pi).amax();
    let mut best = residual(&pi);
    let mut current = pi.clone();
    for _ in 0..1000 {
        if best <= MASS_TOL {
            break;
        }
        current = m.transpose() * &current;
        let total: f64 = current.iter().sum();
        current /= total;
        let r = residual(&current);
        if r < best {
            best = r;
            pi = current.clone();
        }
    }

    let scale = pi.amax();
    if pi.iter().any(|&x| x <= 1e-14 * scale) {
        return Err(Error::Reducible);
    }
    let total: f64 = pi.iter().sum();
    ProbabilityVector::new(pi.iter().map(|x| x / total).collect())
}

/// Chain families with closed-form structure.
#[derive(Debug, Clone)]
pub enum ChainKind {
    /// `lambda I + (1 - lambda) E_pi` with `pi = (eps, 1 - eps)`.
    TwoState { lambda: f64, eps: f64 },
    /// Independent draws from `pi`: the matrix `E_pi`.
    Iid(ProbabilityVector),
    /// `theta I + (1 - theta) A`.
    Lazy { base: TransitionMatrix, theta: f64 },
    /// Lazy simple random walk on the `n`-cycle.
    Cycle { n: usize, laziness: f64 },
}

fn open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("{name} = {x} must lie in (0, 1)")))
    }
}

pub fn make_chain(kind: ChainKind) -> Result<StationaryChain> {
    match kind {
        ChainKind::TwoState { lambda, eps } => {
            open_unit("lambda", lambda)?;
            open_unit("eps", eps)?;
            let pi = ProbabilityVector::new(vec![eps, 1.0 - eps])?;
            let a = two_state_matrix(lambda, eps);
            validate_chain(TransitionMatrix::new(a)?, Some(pi))
        }
        ChainKind::Iid(pi) => {
            let a = spectral::e_pi(&pi);
            validate_chain(TransitionMatrix::new(a)?, Some(pi))
        }
        ChainKind::Lazy { base, theta } => {
            open_unit("theta", theta)?;
            let pi = stationary_of(&base)?;
            validate_chain(lazify(&base, theta)?, Some(pi))
        }
        ChainKind::Cycle { n, laziness } => {
            open_unit("laziness", laziness)?;
            if n < 2 {
                return Err(Error::ParamOutOfRange(format!("cycle length {n} must be at least 2")));
            }
            let pi = ProbabilityVector::uniform(n)?;
            validate_chain(lazify(&cycle_walk(n)?, laziness)?, Some(pi))
        }
    }
}

/// The two-state family, allowing `lambda = 0` (which is `E_pi`).
pub(crate) fn two_state_matrix(lambda: f64, eps: f64) -> DMatrix<f64> {
    let gap = 1.0 - lambda;
    DMatrix::from_row_slice(
        2,
        2,
        &[1.0 - gap * (1.0 - eps), gap * (1.0 - eps), gap * eps, 1.0 - gap * eps],
    )
}

/// The two-state chain for `lambda` in `[0, 1)`; at `lambda = 0` this is `iid(pi(eps))`.
pub fn two_state_closed(lambda: f64, eps: f64) -> Result<StationaryChain> {
    if lambda == 0.0 {
        open_unit("eps", eps)?;
        make_chain(ChainKind::Iid(ProbabilityVector::new(vec![eps, 1.0 - eps])?))
    } else {
        make_chain(ChainKind::TwoState { lambda, eps })
    }
}

fn lazify(base: &TransitionMatrix, theta: f64) -> Result<TransitionMatrix> {
    let n = base.n_states();
    TransitionMatrix::new(DMatrix::identity(n, n) * theta + base.matrix() * (1.0 - theta))
}

/// Simple symmetric random walk on the `n`-cycle (for `n = 2`, the swap).
pub fn cycle_walk(n: usize) -> Result<TransitionMatrix> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, (i + 1) % n)] += 0.5;
        m[(i, (i + n - 1) % n)] += 0.5;
    }
    TransitionMatrix::new(m)
}

/// A reversible chain with random symmetric conductances in `[0.05, 1)`.
pub fn random_reversible_chain<R: Rng + ?Sized>(n_states: usize, rng: &mut R) -> Result<StationaryChain> {
    let n = n_states;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = rng.random_range(0.05..1.0);
            w[(i, j)] = c;
            w[(j, i)] = c;
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let total: f64 = degree.iter().sum();
    let a = DMatrix::from_fn(n, n, |i, j| w[(i, j)] / degree[i]);
    let pi = ProbabilityVector::new(degree.iter().map(|d| d / total).collect())?;
    validate_chain(TransitionMatrix::new(a)?, Some(pi))
}

/// A generic (typically non-reversible) chain with positive random rows.
pub fn random_chain<R: Rng + ?Sized>(n_states: usize, rng: &mut R) -> Result<StationaryChain> {
    let n = n_states;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..1.0)).collect();
        let s: f64 = row.iter().sum();
        for j in 0..n {
            a[(i, j)] = row[j] / s;
        }
    }
    validate_chain(TransitionMatrix::new(a)?, None)
}

/// Mixes `chain` with `E_pi` or with the identity so that `lambda_pi` hits `target`.
///
/// `(1 - t) E_pi + t A` has `lambda = t lambda_A` exactly; for targets above
/// `lambda_A` the holding weight of `s I + (1 - s) A` is found by bisection.
pub fn with_gap(chain: &StationaryChain, target: f64) -> Result<StationaryChain> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::ParamOutOfRange(format!("target lambda {target} must lie in [0, 1)")));
    }
    let pi = chain.pi().clone();
    let base = chain.matrix();
    let e = spectral::e_pi(&pi);
    let lambda = chain.lambda();
    let mixed = if target <= lambda {
        let t = if lambda > 0.0 { target / lambda } else { 0.0 };
        &e * (1.0 - t) + base * t
    } else {
        let n = chain.n_states();
        let hold = |s: f64| DMatrix::<f64>::identity(n, n) * s + base * (1.0 - s);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if spectral::lambda_of(&hold(mid), &pi)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hold(0.5 * (lo + hi))
    };
    validate_chain(TransitionMatrix::new(mixed)?, Some(pi))
}

/// An arithmetic progression `offset + step * k` containing every value of a coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub step: f64,
    pub offset: f64,
}

impl Lattice {
    /// Integer position of `value`, if it lies on the lattice.
    pub fn index_of(&self, value: f64) -> Option<i64> {
        let x = (value - self.offset) / self.step;
        let k = x.round();
        let scale = 1.0 + value.abs().max(self.offset.abs()) / self.step;
        ((x - k).abs() <= 1e-7 * scale).then_some(k as i64)
    }
}

/// Largest admissible lattice index span during detection.
const MAX_LATTICE_SPAN: f64 = 1e6;

fn float_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let mut r = a - b * (a / b).floor();
        if r > b - tol {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    a
}

/// Finds a lattice carrying all `values`, or `None` when they are incommensurate.
pub fn detect_lattice(values: &[f64]) -> Option<Lattice> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    let diffs: Vec<f64> = values.iter().map(|v| v - lo).filter(|d| *d > tol).collect();
    if diffs.is_empty() {
        return Some(Lattice { step: 1.0, offset: lo });
    }
    let step = diffs.iter().skip(1).fold(diffs[0], |g, &d| float_gcd(g, d, tol));
    if !(step > tol) || (hi - lo) / step > MAX_LATTICE_SPAN {
        return None;
    }
    let lattice = Lattice { step, offset: lo };
    values.iter().all(|&v| lattice.index_of(v).is_some()).then_some(lattice)
}

/// A real- or vector-valued function on the states, stored densely row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    dim: usize,
    values: Vec<f64>,
    centered: bool,
    lattice: Option<Vec<Lattice>>,
}

impl Observable {
    /// A real-valued observable; lattice structure is detected automatically.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::from_dense(1, values)
    }

    /// A `d`-coordinate observable, one row per state.
    pub fn vector(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidObservable("vector observable needs at least one coordinate".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Self::from_dense(dim, rows.concat())
    }

    fn from_dense(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidObservable("observable has no states".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObservable("observable values must be finite".into()));
        }
        let mut f = Self { dim, values, centered: false, lattice: None };
        f.lattice = (0..dim).map(|c| detect_lattice(&f.coordinate(c))).collect();
        Ok(f)
    }

    /// Overrides the detected lattice after checking every value lies on it.
    pub fn with_lattice(mut self, lattices: Vec<Lattice>) -> Result<Self> {
        if lattices.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: lattices.len() });
        }
        for (c, lattice) in lattices.iter().enumerate() {
            if !(lattice.step > 0.0) || self.coordinate(c).iter().any(|&v| lattice.index_of(v).is_none()) {
                return Err(Error::NotLattice);
            }
        }
        self.lattice = Some(lattices);
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// One lattice per coordinate, when every coordinate has one.
    pub fn lattice(&self) -> Option<&[Lattice]> {
        self.lattice.as_deref()
    }

    /// The value vector `u` of a scalar observable.
    pub fn scalar_values(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::InvalidObservable(format!("expected a scalar observable, got dimension {}", self.dim)));
        }
        Ok(&self.values)
    }

    /// `f(state)` as a slice of length `dim`.
    pub fn point(&self, state: usize) -> &[f64] {
        &self.values[state * self.dim..(state + 1) * self.dim]
    }

    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    /// `E_pi[f]`, coordinatewise. Constant coordinates return their value exactly.
    pub fn mean(&self, pi: &ProbabilityVector) -> Result<Vec<f64>> {
        self.check_len(pi)?;
        Ok((0..self.dim)
            .map(|c| {
                let col = self.coordinate(c);
                if col.iter().all(|&v| v == col[0]) {
                    col[0]
                } else {
                    col.iter().zip(pi.as_slice()).map(|(v, p)| v * p).sum()
                }
            })
            .collect())
    }

    /// `(E_pi ||f||^q)^(1/q)` with the Euclidean norm on coordinates (plain `|f|` when scalar).
    pub fn lq_norm(&self, pi: &ProbabilityVector, q: f64) -> f64 {
        self.lq_norm_with(pi, q, 2.0)
    }

    /// `(E_pi ||f||_{l_p^d}^q)^(1/q)`.
    pub fn lq_norm_with(&self, pi: &ProbabilityVector, q: f64, p: f64) -> f64 {
        let norms = (0..self.n_states()).map(|i| lp_norm(self.point(i), p));
        if q.is_infinite() {
            return norms.fold(0.0, f64::max);
        }
        let s: f64 = norms.zip(pi.as_slice()).map(|(x, w)| w * x.powf(q)).sum();
        s.powf(1.0 / q)
    }

    /// `max_i ||f(i)||` (Euclidean on coordinates).
    pub fn sup_norm(&self) -> f64 {
        (0..self.n_states()).map(|i| lp_norm(self.point(i), 2.0)).fold(0.0, f64::max)
    }

    /// `t f`, keeping lattice structure scaled along.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::ParamOutOfRange(format!("scale {t} must be positive")));
        }
        let lattice = self
            .lattice
            .as_ref()
            .map(|ls| ls.iter().map(|l| Lattice { step: l.step * t, offset: l.offset * t }).collect());
        Ok(Self { dim: self.dim, values: self.values.iter().map(|v| v * t).collect(), centered: self.centered, lattice })
    }

    fn check_len(&self, pi: &ProbabilityVector) -> Result<()> {
        if self.n_states() != pi.len() {
            return Err(Error::DimensionMismatch { expected: pi.len(), got: self.n_states() });
        }
        Ok(())
    }
}

/// `||x||_{l_p}` for a finite coordinate vector; `p = inf` is the max norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if x.len() == 1 {
        return x[0].abs();
    }
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `f - E_pi[f]`, coordinatewise. Already-centered observables are returned unchanged.
pub fn center_observable(f: &Observable, pi: &ProbabilityVector) -> Result<Observable> {
    f.check_len(pi)?;
    if f.centered {
        return Ok(f.clone());
    }
    let mean = f.mean(pi)?;
    let values = f.values.iter().enumerate().map(|(k, v)| v - mean[k % f.dim]).collect();
    let lattice = f.lattice.as_ref().map(|ls| {
        ls.iter().zip(&mean).map(|(l, m)| Lattice { step: l.step, offset: l.offset - m }).collect()
    });
    Ok(Observable { dim: f.dim, values, centered: true, lattice })
}
