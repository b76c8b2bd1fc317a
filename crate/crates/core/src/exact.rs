//! Exact moments, distributions and tails of `S_n = f(W_1) + ... + f(W_n)`.
//!
//! Three independent engines compute the same quantities:
//!
//! * a moment recursion over `(state, power)` that handles even exponents
//!   for any real observable,
//! * a distribution recursion over `(state, lattice index)` that handles
//!   every exponent and tail for lattice-valued observables,
//! * brute-force enumeration of all `N^n` trajectories.
//!
//! Each is used to check the others.

use std::collections::HashMap;

use crate::chain::{center_observable, lp_norm, Observable, StationaryChain};
use crate::error::{Error, Result};

/// Work caps for the exact engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Multiply-adds allowed in a recursion.
    pub max_ops: f64,
    /// Trajectories allowed in brute-force enumeration.
    pub max_paths: f64,
    /// Cells allowed in a distribution table (states times lattice points).
    pub max_cells: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_ops: 4e9, max_paths: 1e7, max_cells: 5e7 }
    }
}

impl Budget {
    fn check(&self, what: &'static str, needed: f64, cap: f64) -> Result<()> {
        if needed > cap {
            Err(Error::BudgetExceeded { what, needed, cap })
        } else {
            Ok(())
        }
    }

    pub(crate) fn ops(&self, what: &'static str, needed: f64) -> Result<()> {
        self.check(what, needed, self.max_ops)
    }
}

/// `E[S_n^k]` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub n: usize,
    pub raw: Vec<f64>,
    /// `E[f(W_1)]`.
    pub mean: f64,
}

fn binomial_rows(k_max: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for k in 1..=k_max {
        let prev = &rows[k - 1];
        let mut row = vec![1.0; k + 1];
        for l in 1..k {
            row[l] = prev[l - 1] + prev[l];
        }
        rows.push(row);
    }
    rows
}

fn moment_recursion(chain: &StationaryChain, u: &[f64], n: usize, k_max: usize) -> Vec<f64> {
    let a = chain.matrix();
    let pi = chain.pi();
    let states = u.len();
    let binom = binomial_rows(k_max);
    // powers[j][l] = u_j^l
    let powers: Vec<Vec<f64>> = u.iter().map(|&x| (0..=k_max).map(|l| x.powi(l as i32)).collect()).collect();

    // current[k][j] = E[S_t^k ; W_t = j]
    let mut current: Vec<Vec<f64>> = (0..=k_max).map(|k| (0..states).map(|j| pi[j] * powers[j][k]).collect()).collect();
    let mut carried = vec![vec![0.0; states]; k_max + 1];
    for _ in 1..n {
        for k in 0..=k_max {
            for j in 0..states {
                let mut acc = 0.0;
                for i in 0..states {
                    acc += current[k][i] * a[(i, j)];
                }
                carried[k][j] = acc;
            }
        }
        for j in 0..states {
            for k in 0..=k_max {
                let mut acc = 0.0;
                for l in 0..=k {
                    acc += binom[k][l] * powers[j][l] * carried[k - l][j];
                }
                current[k][j] = acc;
            }
        }
    }
    current.iter().map(|row| row.iter().sum()).collect()
}

/// Raw moments `E[S_n^k]`, `k <= k_max`, by the transfer recursion
/// `M_k(t+1, j) = sum_l C(k, l) f(j)^l sum_i M_{k-l}(t, i) a_ij`.
pub fn exact_raw_moments(chain: &StationaryChain, f: &Observable, n: usize, k_max: usize, budget: &Budget) -> Result<MomentTable> {
    let u = scalar_for(chain, f)?;
    positive_length(n)?;
    let states = u.len() as f64;
    let kk = (k_max + 1) as f64;
    budget.ops("moment recursion", n as f64 * (kk * states * states + kk * kk * states))?;
    let mean = f.mean(chain.pi())?[0];
    Ok(MomentTable { n, raw: moment_recursion(chain, u, n, k_max), mean })
}

fn scalar_for<'a>(chain: &StationaryChain, f: &'a Observable) -> Result<&'a [f64]> {
    let u = f.scalar_values()?;
    if u.len() != chain.n_states() {
        return Err(Error::DimensionMismatch { expected: chain.n_states(), got: u.len() });
    }
    Ok(u)
}

fn positive_length(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ParamOutOfRange("walk length n must be at least 1".into()));
    }
    Ok(())
}

/// Returns `q` as an even integer, or `OddExponent`.
pub fn even_order(q: f64) -> Result<usize> {
    if q >= 2.0 && q.fract() == 0.0 && (q as u64) % 2 == 0 && q <= 1e6 {
        Ok(q as usize)
    } else {
        Err(Error::OddExponent(q))
    }
}

/// `E|S_n/n - E f(W_1)|^q` for even `q`.
///
/// The observable is centered and divided by `n` before the recursion, so
/// no binomial re-expansion (and no cancellation) happens afterwards.
pub fn exact_central_abs_moment(chain: &StationaryChain, f: &Observable, n: usize, q: f64, budget: &Budget) -> Result<f64> {
    let order = even_order(q)?;
    positive_length(n)?;
    scalar_for(chain, f)?;
    let centered = center_observable(f, chain.pi())?;
    let scaled: Vec<f64> = centered.scalar_values()?.iter().map(|x| x / n as f64).collect();
    let table = exact_raw_moments(chain, &Observable::scalar(scaled)?, n, order, budget)?;
    Ok(table.raw[order].max(0.0))
}

/// The law of a lattice-valued sum: `P[S = offset + step * (min_index + k)] = mass[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    pub step: f64,
    pub offset: f64,
    pub min_index: i64,
    pub mass: Vec<f64>,
}

impl LatticeDistribution {
    pub fn value(&self, index: i64) -> f64 {
        self.offset + self.step * index as f64
    }

    pub fn mass_at(&self, index: i64) -> f64 {
        let k = index - self.min_index;
        if k < 0 {
            return 0.0;
        }
        self.mass.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `(index, mass)` pairs with positive mass, in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass.iter().enumerate().filter(|(_, &m)| m > 0.0).map(move |(k, &m)| (self.min_index + k as i64, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `E|S/n - center|^q` for any real `q >= 0`.
    pub fn central_abs_moment(&self, n: usize, center: f64, q: f64) -> f64 {
        self.iter().map(|(k, m)| m * (self.value(k) / n as f64 - center).abs().powf(q)).sum()
    }

    /// `E[S^k]`.
    pub fn raw_moment(&self, k: usize) -> f64 {
        self.iter().map(|(i, m)| m * self.value(i).powi(k as i32)).sum()
    }

    /// `P[|S/n - center| >= a]`.
    pub fn tail(&self, n: usize, center: f64, a: f64) -> f64 {
        let threshold = a - 1e-12 * (1.0 + a.abs());
        self.iter().filter(|&(k, _)| (self.value(k) / n as f64 - center).abs() >= threshold).map(|(_, m)| m).sum()
    }
}

/// Exact law of `S_n` for a lattice-valued scalar observable.
pub fn exact_distribution(chain: &StationaryChain, f: &Observable, n: usize, budget: &Budget) -> Result<LatticeDistribution> {
    let u = scalar_for(chain, f)?;
    positive_length(n)?;
    let lattice = f.lattice().ok_or(Error::NotLattice)?[0];
    let indices: Vec<i64> = u.iter().map(|&v| lattice.index_of(v).ok_or(Error::NotLattice)).collect::<Result<_>>()?;
    let base = *indices.iter().min().expect("non-empty observable");
    let shifts: Vec<usize> = indices.iter().map(|&k| (k - base) as usize).collect();
    let width = shifts.iter().copied().max().unwrap_or(0);
    let span = n * width + 1;
    let states = u.len();
    budget.check("distribution table", (states * span) as f64, budget.max_cells)?;
    budget.ops("distribution recursion", (n * states * states * span) as f64)?;

    let a = chain.matrix();
    let pi = chain.pi();
    // table[j][s] = P[W_t = j, index sum = s]
    let mut table = vec![vec![0.0; span]; states];
    for j in 0..states {
        table[j][shifts[j]] += pi[j];
    }
    let mut next = vec![vec![0.0; span]; states];
    for t in 1..n {
        let reach = t * width + 1;
        for row in next.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for j in 0..states {
            let shift = shifts[j];
            for i in 0..states {
                let w = a[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let src = &table[i][..reach];
                let dst = &mut next[j][shift..shift + reach];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        std::mem::swap(&mut table, &mut next);
    }
    let mass: Vec<f64> = (0..span).map(|s| (0..states).map(|j| table[j][s]).sum()).collect();
    Ok(LatticeDistribution {
        step: lattice.step,
        offset: n as f64 * lattice.offset + lattice.step * (n as i64 * base) as f64,
        min_index: 0,
        mass,
    })
}

/// `P[|S_n/n - mean| >= a]` from an exact law.
pub fn tail_from_distribution(dist: &LatticeDistribution, n: usize, mean: f64, a: f64) -> f64 {
    dist.tail(n, mean, a)
}

/// Output of brute-force trajectory enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// `E|S_n/n - E f(W_1)|^q`.
    pub abs_moment: f64,
    /// Distinct values of `S_n` with their probabilities, increasing.
    pub atoms: Vec<(f64, f64)>,
}

impl Enumeration {
    pub fn raw_moment(&self, k: usize) -> f64 {
        self.atoms.iter().map(|(s, w)| w * s.powi(k as i32)).sum()
    }

    pub fn tail(&self, n: usize, mean: f64, a: f64) -> f64 {
        let threshold = a - 1e-12 * (1.0 + a.abs());
        self.atoms.iter().filter(|(s, _)| (s / n as f64 - mean).abs() >= threshold).map(|(_, w)| w).sum()
    }
}

/// Sums `pi_{i_1} a_{i_1 i_2} ... a_{i_{n-1} i_n}` over all `N^n` trajectories.
pub fn enumeration_oracle(chain: &StationaryChain, f: &Observable, n: usize, q: f64, budget: &Budget) -> Result<Enumeration> {
    let u = scalar_for(chain, f)?;
    positive_length(n)?;
    let states = u.len();
    budget.check("trajectory enumeration", (states as f64).powi(n as i32), budget.max_paths)?;
    let a = chain.matrix();
    let pi = chain.pi();
    let mean = f.mean(pi)?[0];

    let mut sums = Vec::with_capacity(states.pow(n as u32));
    let mut path = vec![0usize; n];
    loop {
        let mut weight = pi[path[0]];
        let mut s = u[path[0]];
        for t in 1..n {
            weight *= a[(path[t - 1], path[t])];
            s += u[path[t]];
        }
        sums.push((s, weight));
        // odometer over [N]^n, last coordinate fastest
        let mut t = n;
        loop {
            if t == 0 {
                break;
            }
            t -= 1;
            path[t] += 1;
            if path[t] < states {
                break;
            }
            path[t] = 0;
        }
        if path.iter().all(|&x| x == 0) {
            break;
        }
    }

    let abs_moment = sums.iter().map(|(s, w)| w * (s / n as f64 - mean).abs().powf(q)).sum();
    sums.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (s, w) in sums {
        match atoms.last_mut() {
            Some(last) if (s - last.0).abs() <= 1e-12 * (1.0 + s.abs()) => last.1 += w,
            _ => atoms.push((s, w)),
        }
    }
    Ok(Enumeration { abs_moment, atoms })
}

/// Exact law of a `d`-coordinate lattice observable's sum, `d <= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLatticeDistribution {
    pub steps: Vec<f64>,
    /// Value of the sum at multi-index zero, per coordinate.
    pub offsets: Vec<f64>,
    pub shape: Vec<usize>,
    /// Row-major over `shape`.
    pub mass: Vec<f64>,
}

impl VectorLatticeDistribution {
    fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut idx = vec![0usize; self.shape.len()];
        for c in (0..self.shape.len()).rev() {
            idx[c] = flat % self.shape[c];
            flat /= self.shape[c];
        }
        idx.iter().enumerate().map(|(c, &k)| self.offsets[c] + self.steps[c] * k as f64).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `E||S/n - center||_{l_p}^q`.
    pub fn central_moment(&self, n: usize, center: &[f64], q: f64, p: f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(k, &m)| {
                let x: Vec<f64> = self.point(k).iter().zip(center).map(|(s, c)| s / n as f64 - c).collect();
                m * lp_norm(&x, p).powf(q)
            })
            .sum()
    }

    /// `P[||S/n - center||_{l_p} >= a]`.
    pub fn tail(&self, n: usize, center: &[f64], a: f64, p: f64) -> f64 {
        let threshold = a - 1e-12 * (1.0 + a.abs());
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .filter(|(k, _)| {
                let x: Vec<f64> = self.point(*k).iter().zip(center).map(|(s, c)| s / n as f64 - c).collect();
                lp_norm(&x, p) >= threshold
            })
            .map(|(_, &m)| m)
            .sum()
    }
}

/// Largest observable dimension handled by [`exact_vector_distribution`].
pub const MAX_VECTOR_DIM: usize = 3;

pub fn exact_vector_distribution(chain: &StationaryChain, f: &Observable, n: usize, budget: &Budget) -> Result<VectorLatticeDistribution> {
    positive_length(n)?;
    let d = f.dim();
    if d > MAX_VECTOR_DIM {
        return Err(Error::ParamOutOfRange(format!("exact vector distribution needs d <= {MAX_VECTOR_DIM}, got {d}")));
    }
    if f.n_states() != chain.n_states() {
        return Err(Error::DimensionMismatch { expected: chain.n_states(), got: f.n_states() });
    }
    let lattices = f.lattice().ok_or(Error::NotLattice)?;
    let states = chain.n_states();
    let mut shifts = vec![vec![0usize; d]; states];
    let mut bases = vec![0i64; d];
    let mut shape = vec![0usize; d];
    for c in 0..d {
        let idx: Vec<i64> = f.coordinate(c).iter().map(|&v| lattices[c].index_of(v).ok_or(Error::NotLattice)).collect::<Result<_>>()?;
        bases[c] = *idx.iter().min().expect("non-empty");
        for j in 0..states {
            shifts[j][c] = (idx[j] - bases[c]) as usize;
        }
        shape[c] = n * shifts.iter().map(|s| s[c]).max().unwrap_or(0) + 1;
    }
    let cells: usize = shape.iter().product();
    budget.check("vector distribution table", (states * cells) as f64, budget.max_cells)?;
    budget.ops("vector distribution recursion", (n * states * states * cells) as f64)?;

    let strides: Vec<usize> = (0..d).map(|c| shape[c + 1..].iter().product()).collect();
    let flat_shift: Vec<usize> = shifts.iter().map(|s| s.iter().zip(&strides).map(|(a, b)| a * b).sum()).collect();
    let a = chain.matrix();
    let pi = chain.pi();
    let mut table = vec![vec![0.0; cells]; states];
    for j in 0..states {
        table[j][flat_shift[j]] += pi[j];
    }
    let mut next = vec![vec![0.0; cells]; states];
    for _ in 1..n {
        for row in next.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for j in 0..states {
            let shift = flat_shift[j];
            for i in 0..states {
                let w = a[(i, j)];
                if w == 0.0 {
                    continue;
                }
                // indices stay in range: each coordinate grows by at most its shift per step
                for s in 0..cells - shift {
                    let m = table[i][s];
                    if m != 0.0 {
                        next[j][s + shift] += w * m;
                    }
                }
            }
        }
        std::mem::swap(&mut table, &mut next);
    }
    let mass = (0..cells).map(|s| (0..states).map(|j| table[j][s]).sum()).collect();
    Ok(VectorLatticeDistribution {
        steps: lattices.iter().map(|l| l.step).collect(),
        offsets: (0..d).map(|c| n as f64 * lattices[c].offset + lattices[c].step * (n as i64 * bases[c]) as f64).collect(),
        shape,
        mass,
    })
}

/// Brute-force law of the vector sum, for cross-checking the vector recursion.
pub fn enumerate_vector_sums(chain: &StationaryChain, f: &Observable, n: usize, budget: &Budget) -> Result<Vec<(Vec<f64>, f64)>> {
    positive_length(n)?;
    let states = chain.n_states();
    budget.check("trajectory enumeration", (states as f64).powi(n as i32), budget.max_paths)?;
    let a = chain.matrix();
    let pi = chain.pi();
    let d = f.dim();
    let mut acc: HashMap<Vec<i64>, (Vec<f64>, f64)> = HashMap::new();
    let total = states.pow(n as u32);
    for code in 0..total {
        let mut rest = code;
        let mut path = vec![0usize; n];
        for t in (0..n).rev() {
            path[t] = rest % states;
            rest /= states;
        }
        let mut w = pi[path[0]];
        for t in 1..n {
            w *= a[(path[t - 1], path[t])];
        }
        let mut s = vec![0.0; d];
        for &st in &path {
            for (c, v) in f.point(st).iter().enumerate() {
                s[c] += v;
            }
        }
        let key: Vec<i64> = s.iter().map(|x| (x * 1e9).round() as i64).collect();
        acc.entry(key).or_insert_with(|| (s.clone(), 0.0)).1 += w;
    }
    let mut out: Vec<(Vec<f64>, f64)> = acc.into_values().collect();
    out.sort_by(|x, y| x.0.iter().zip(&y.0).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}
