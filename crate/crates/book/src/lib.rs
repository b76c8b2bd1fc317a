//! Doc-tests for the guide in `book/`.
//!
//! mdbook cannot link snippets against workspace crates, so each chapter is
//! included as the docs of an empty module and run by `cargo test --doc`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/chains.md")]
pub mod chains {}
#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}
#[doc = include_str!("../../../book/src/exact.md")]
pub mod exact {}
#[doc = include_str!("../../../book/src/proof-lab.md")]
pub mod proof_lab {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/montecarlo.md")]
pub mod montecarlo {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
