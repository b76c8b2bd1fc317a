//! Instance grids shared by the acceptance suite.

#![allow(dead_code)]

use markov_concentration::chain::{make_chain, random_chain, random_reversible_chain, two_state_closed, with_gap, ChainKind, Observable, StationaryChain};
use markov_concentration::exact::{exact_central_abs_moment, Budget};
use markov_concentration::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A non-constant observable with values in `{-2, -1.5, ..., 2}` (step 1/2 half the time).
pub fn lattice_observable<R: Rng>(states: usize, rng: &mut R) -> Observable {
    let half = rng.random_bool(0.5);
    loop {
        let values: Vec<f64> = (0..states)
            .map(|_| if half { rng.random_range(-4i32..=4) as f64 / 2.0 } else { rng.random_range(-2i32..=2) as f64 })
            .collect();
        if values.iter().any(|&v| v != values[0]) {
            return Observable::scalar(values).expect("finite values");
        }
    }
}

/// A random chain on 2 to 4 states, reversible half the time.
pub fn small_chain<R: Rng>(rng: &mut R) -> StationaryChain {
    let n = rng.random_range(2..=4);
    if rng.random_bool(0.5) {
        random_reversible_chain(n, rng).expect("valid chain")
    } else {
        random_chain(n, rng).expect("valid chain")
    }
}

pub const RATIO_LAMBDAS: [f64; 4] = [0.0, 0.3, 0.6, 0.9];
pub const RATIO_QS: [f64; 4] = [2.0, 4.0, 6.0, 8.0];
pub const RATIO_NS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

/// `(label, chain, f)` for the bounded-ratio grid at spectral parameter `lambda`.
pub fn ratio_instances(lambda: f64) -> Result<Vec<(String, StationaryChain, Observable)>> {
    let mut out = Vec::new();
    for eps in [0.1, 0.3, 0.5] {
        let chain = two_state_closed(lambda, eps)?;
        for values in [vec![1.0, -1.0], vec![1.0, 0.0], vec![2.0, -1.0]] {
            out.push((format!("two_state eps={eps} f={values:?}"), chain.clone(), Observable::scalar(values)?));
        }
    }
    let mut rng = rng(0x5eed_0006 ^ lambda.to_bits());
    for states in [3usize, 4] {
        let chain = with_gap(&make_chain(ChainKind::Cycle { n: states, laziness: 0.5 })?, lambda)?;
        for k in 0..3 {
            out.push((format!("cycle N={states} f#{k}"), chain.clone(), lattice_observable(states, &mut rng)));
        }
    }
    for states in [2usize, 3, 4] {
        for s in 0..3 {
            let chain = with_gap(&random_reversible_chain(states, &mut rng)?, lambda)?;
            for k in 0..3 {
                out.push((format!("reversible N={states} #{s} f#{k}"), chain.clone(), lattice_observable(states, &mut rng)));
            }
        }
    }
    Ok(out)
}

/// `(E|S_n/n - mu|^q)^(1/q) / (sqrt(q / ((1 - lambda) n)) ||f||_q)`.
pub fn theorem_ratio(chain: &StationaryChain, f: &Observable, n: usize, q: f64) -> Result<f64> {
    let lhs = exact_central_abs_moment(chain, f, n, q, &Budget::default())?.powf(1.0 / q);
    let kernel = (q / ((1.0 - chain.lambda()) * n as f64)).sqrt() * f.lq_norm(chain.pi(), q);
    Ok(lhs / kernel)
}

/// Largest ratio over the grid and where it occurs.
pub fn max_theorem_ratio() -> Result<(f64, String)> {
    let mut best = (0.0, String::new());
    for lambda in RATIO_LAMBDAS {
        for (label, chain, f) in ratio_instances(lambda)? {
            for n in RATIO_NS {
                for q in RATIO_QS {
                    let r = theorem_ratio(&chain, &f, n, q)?;
                    if r > best.0 {
                        best = (r, format!("lambda={lambda} {label} n={n} q={q}"));
                    }
                }
            }
        }
    }
    Ok(best)
}
