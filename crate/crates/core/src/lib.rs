//! # markov-concentration
//!
//! Concentration of `S_n = f(W_1) + ... + f(W_n)` for a finite stationary
//! Markov chain `W` with transition matrix `A` and stationary law `pi`.
//!
//! The library computes:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`chain`] | validated chains, stationary laws, observables, centering |
//! | [`spectral`] | `lambda_pi(A) = ||A - E_pi||_{L_2(pi)}`, `L_p(pi)` operator-norm brackets |
//! | [`exact`] | exact moments, lattice laws and tails of `S_n`, path enumeration |
//! | [`proof_lab`] | run patterns, Hölder exponents, and checks of each inequality behind the moment bound |
//! | [`bounds`] | the moment, Gillman, sub-2, tail and vector bounds, compared against exact or simulated left sides |
//! | [`montecarlo`] | seeded simulation with per-trial streams |
//!
//! ```
//! use markov_concentration::{bounds, chain::{make_chain, ChainKind, Observable}, exact::Budget};
//!
//! let chain = make_chain(ChainKind::TwoState { lambda: 0.5, eps: 0.5 })?;
//! let f = Observable::scalar(vec![1.0, -1.0])?;
//! let query = bounds::BoundQuery { bound: bounds::BoundId::Moment, n: 2, q: 2.0, p: None, a: None, constant: 1.0 };
//! let report = bounds::compare(&query, &chain, &f, bounds::LhsMethod::Exact, &Budget::default())?;
//! assert!((report.lhs.unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
//! assert!((report.rhs - 2f64.sqrt()).abs() < 1e-12);
//! # Ok::<(), markov_concentration::Error>(())
//! ```

pub mod bounds;
pub mod chain;
pub mod chain_file;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod proof_lab;
pub mod spectral;

pub use chain::{center_observable, make_chain, stationary_of, validate_chain, ChainKind, Observable, ProbabilityVector, StationaryChain, TransitionMatrix};
pub use error::{Error, Result};
pub use exact::Budget;
