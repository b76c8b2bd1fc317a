//! The matrix-product expansion of the `2m`-th moment.
//!
//! For a centered `u`, `E[S_n^{2m}]` is dominated by
//!
//! ```text
//! (2m)! * sum over v_0 + ... + v_{2m-1} <= n - 1 of ||U A^{v_1} U A^{v_2} ... U A^{v_{2m-1}} u||_{L_1(pi)}
//! ```
//!
//! where `U` multiplies coordinatewise by `u`. The summand ignores `v_0`, so
//! each `(v_1, ..., v_{2m-1})` is counted `n - (v_1 + ... + v_{2m-1})` times.

use nalgebra::{DMatrix, DVector};

use crate::chain::{Observable, StationaryChain};
use crate::error::{Error, Result};
use crate::exact::Budget;

/// `|E_pi f|` above which an observable counts as uncentered.
pub const CENTERING_TOL: f64 = 1e-12;

pub(crate) fn centered_values<'a>(chain: &StationaryChain, f: &'a Observable) -> Result<&'a [f64]> {
    let u = f.scalar_values()?;
    if u.len() != chain.n_states() {
        return Err(Error::DimensionMismatch { expected: chain.n_states(), got: u.len() });
    }
    let mean: f64 = u.iter().zip(chain.pi().as_slice()).map(|(x, p)| x * p).sum();
    let scale = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if mean.abs() > CENTERING_TOL * scale {
        return Err(Error::NotCentered { mean });
    }
    Ok(u)
}

/// `A^0, A^1, ..., A^max`, computed once.
pub(crate) fn matrix_powers(a: &DMatrix<f64>, max: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(max + 1);
    out.push(DMatrix::identity(n, n));
    for v in 1..=max {
        let next = &out[v - 1] * a;
        out.push(next);
    }
    out
}

/// `U T_1 U T_2 ... U T_k u`, with `U` coordinatewise multiplication by `u`.
pub(crate) fn alternating_product(u: &[f64], ts: &[&DMatrix<f64>]) -> DVector<f64> {
    let uv = DVector::from_column_slice(u);
    let mut w = uv.clone();
    for t in ts.iter().rev() {
        w = *t * w;
        w.component_mul_assign(&uv);
    }
    w
}

pub(crate) fn l1_pi(w: &DVector<f64>, pi: &[f64]) -> f64 {
    w.iter().zip(pi).map(|(x, p)| p * x.abs()).sum()
}

/// Number of `(v_0, ..., v_{k})` with `k + 1` nonnegative parts summing to at most `n - 1`.
pub(crate) fn tuple_count(n: usize, parts: usize) -> f64 {
    // C(n - 1 + parts, parts)
    let mut c = 1.0;
    for i in 1..=parts {
        c *= (n - 1 + i) as f64 / i as f64;
    }
    c
}

/// Calls `visit(v, multiplicity)` for every `(v_1, ..., v_len)` with sum `<= n - 1`.
pub(crate) fn for_each_tuple(n: usize, len: usize, mut visit: impl FnMut(&[usize], usize)) {
    fn rec(v: &mut Vec<usize>, pos: usize, left: usize, n: usize, visit: &mut dyn FnMut(&[usize], usize)) {
        if pos == v.len() {
            let used: usize = v.iter().sum();
            visit(v, n - used);
            return;
        }
        for x in 0..=left {
            v[pos] = x;
            rec(v, pos + 1, left - x, n, visit);
        }
        v[pos] = 0;
    }
    let mut v = vec![0usize; len];
    rec(&mut v, 0, n - 1, n, &mut visit);
}

/// `sum_v ||U A^{v_1} ... U A^{v_{2m-1}} u||_{L_1(pi)}` without the `(2m)!` factor.
pub fn expansion_sum(chain: &StationaryChain, f: &Observable, n: usize, m: usize, budget: &Budget) -> Result<f64> {
    let u = centered_values(chain, f)?;
    if n == 0 || m == 0 {
        return Err(Error::ParamOutOfRange("n and m must be at least 1".into()));
    }
    let k = 2 * m - 1;
    let states = chain.n_states() as f64;
    budget.ops("expansion sum", tuple_count(n, 2 * m) * k as f64 * states * states)?;
    let powers = matrix_powers(chain.matrix(), n - 1);
    let pi = chain.pi().as_slice();
    let mut total = 0.0;
    for_each_tuple(n, k, |v, multiplicity| {
        let ts: Vec<&DMatrix<f64>> = v.iter().map(|&e| &powers[e]).collect();
        total += multiplicity as f64 * l1_pi(&alternating_product(u, &ts), pi);
    });
    Ok(total)
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `(2m)!` times [`expansion_sum`]: the upper side of the increasing-index inequality.
pub fn expansion_rhs(chain: &StationaryChain, f: &Observable, n: usize, m: usize, budget: &Budget) -> Result<f64> {
    Ok(factorial(2 * m) * expansion_sum(chain, f, n, m, budget)?)
}
