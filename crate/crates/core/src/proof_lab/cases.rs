//! Seeded instance generators for the lemma checks.

use nalgebra::DMatrix;
use rand::Rng;

use super::expansion::matrix_powers;
use super::lemmas::LemmaCase;
use crate::chain::{center_observable, make_chain, random_chain, random_reversible_chain, ChainKind, Observable, ProbabilityVector, StationaryChain};
use crate::error::Result;
use crate::spectral::e_pi;

fn any_chain<R: Rng + ?Sized>(rng: &mut R, max_states: usize) -> Result<StationaryChain> {
    let n = rng.random_range(2..=max_states);
    if rng.random_bool(0.5) {
        random_reversible_chain(n, rng)
    } else {
        random_chain(n, rng)
    }
}

/// A centered observable with integer values in `[-2, 2]` before centering.
pub fn random_centered_lattice<R: Rng + ?Sized>(pi: &ProbabilityVector, rng: &mut R) -> Result<Observable> {
    let values: Vec<f64> = (0..pi.len()).map(|_| rng.random_range(-2i32..=2) as f64).collect();
    center_observable(&Observable::scalar(values)?, pi)
}

fn random_centered_real<R: Rng + ?Sized>(pi: &ProbabilityVector, rng: &mut R) -> Result<Observable> {
    let values: Vec<f64> = (0..pi.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
    center_observable(&Observable::scalar(values)?, pi)
}

/// `N <= 4`, `n <= 6`, `m` in `{1, 2}`.
pub fn increasing_case<R: Rng + ?Sized>(rng: &mut R) -> Result<LemmaCase> {
    let chain = any_chain(rng, 4)?;
    let f = random_centered_lattice(chain.pi(), rng)?;
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=2);
    Ok(LemmaCase::Increasing { chain, f, n, m })
}

/// `A^{v} - E_pi` for a random `v`, or a random signed matrix.
fn test_operator<R: Rng + ?Sized>(chain: &StationaryChain, powers: &[DMatrix<f64>], rng: &mut R) -> DMatrix<f64> {
    let n = chain.n_states();
    if rng.random_bool(0.75) {
        let v = rng.random_range(0..powers.len());
        &powers[v] - e_pi(chain.pi())
    } else {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }
}

/// Two-state chains half the time (certified norms), otherwise `N` up to 4.
pub fn alternate_case<R: Rng + ?Sized>(rng: &mut R) -> Result<LemmaCase> {
    let chain = if rng.random_bool(0.5) {
        make_chain(ChainKind::TwoState { lambda: rng.random_range(0.05..0.95), eps: rng.random_range(0.05..0.95) })?
    } else {
        any_chain(rng, 4)?
    };
    let powers = matrix_powers(chain.matrix(), 4);
    let k = rng.random_range(0..=3);
    let ts = (0..k).map(|_| test_operator(&chain, &powers, rng)).collect();
    let q = (k + 1) as f64 + rng.random_range(0.0..3.0);
    let f = Observable::scalar((0..chain.n_states()).map(|_| rng.random_range(-2.0..2.0)).collect())?;
    Ok(LemmaCase::Alternate { chain, f, ts, q })
}

pub fn splitting_case<R: Rng + ?Sized>(rng: &mut R) -> Result<LemmaCase> {
    let chain = if rng.random_bool(0.5) {
        make_chain(ChainKind::TwoState { lambda: rng.random_range(0.05..0.95), eps: rng.random_range(0.05..0.95) })?
    } else {
        any_chain(rng, 4)?
    };
    let powers = matrix_powers(chain.matrix(), 4);
    let m = rng.random_range(1..=3);
    let ts = (0..2 * m - 1).map(|_| test_operator(&chain, &powers, rng)).collect();
    let f = random_centered_real(chain.pi(), rng)?;
    Ok(LemmaCase::Splitting { chain, f, ts })
}

/// The deterministic grid: two-state chains with `eps = 1/2`, `f = +-1`,
/// `lambda` in `{0.1, 0.5, 0.9}`, `m` in `{1, 2}`, and `n` the smallest
/// admissible length times `{1, 2}`.
pub fn finb_grid() -> Result<Vec<LemmaCase>> {
    let mut out = Vec::new();
    for lambda in [0.1, 0.5, 0.9] {
        for m in [1usize, 2] {
            let smallest = (std::f64::consts::E * m as f64 / (1.0 - lambda)).ceil() as usize;
            for n in [smallest, 2 * smallest] {
                let chain = make_chain(ChainKind::TwoState { lambda, eps: 0.5 })?;
                let f = Observable::scalar(vec![1.0, -1.0])?;
                out.push(LemmaCase::Finb { chain, f, n, m });
            }
        }
    }
    Ok(out)
}

/// `cases` instances of the given lemma (for `finb` and `product_bound`, the fixed grids).
pub fn generate_cases<R: Rng + ?Sized>(lemma: super::LemmaId, cases: usize, rng: &mut R) -> Result<Vec<LemmaCase>> {
    use super::LemmaId;
    match lemma {
        LemmaId::Increasing => (0..cases).map(|_| increasing_case(rng)).collect(),
        LemmaId::Alternate => (0..cases).map(|_| alternate_case(rng)).collect(),
        LemmaId::Splitting => (0..cases).map(|_| splitting_case(rng)).collect(),
        LemmaId::Finb => finb_grid(),
        LemmaId::ProductBound => Ok((1..=super::MAX_PATTERN_M).map(|m| LemmaCase::ProductBound { m }).collect()),
    }
}
