//! The proof apparatus of the moment bound, made executable.
//!
//! * [`patterns`]: run patterns `s` and their Hölder exponents `p(s, j)`, `beta(s, j)`.
//! * [`expansion`]: the matrix-product expansion bounding `E[S_n^{2m}]`.
//! * [`lemmas`]: one check per inequality in the chain, reported as [`LemmaReport`].
//! * [`cases`]: seeded instance generators used by the CLI and the test suites.
//!
//! Norms at exponents outside `{1, 2, inf}` come from the sound side: the
//! near-certified one-dimensional search for two-state chains, interpolation
//! upper bounds otherwise (flagged `conservative`).

pub mod cases;
pub mod expansion;
pub mod lemmas;
pub mod patterns;

pub use expansion::{expansion_rhs, expansion_sum};
pub use lemmas::{
    max_inverse_beta_product, verify_alternate, verify_finb, verify_increasing, verify_lemma, verify_product_bound, verify_splitting, LemmaCase,
    LemmaId, LemmaReport, PRODUCT_LOG_CEILING,
};
pub use patterns::{admissible_patterns, holder_exponents, ExponentAssignment, HolderExponent, RunPattern, MAX_PATTERN_M};
