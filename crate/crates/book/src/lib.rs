//! The guide's chapters, included so that `cargo test` runs their listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/symmetries.md")]
pub mod symmetries {}

#[doc = include_str!("../../../book/src/cutoff.md")]
pub mod cutoff {}

#[doc = include_str!("../../../book/src/thermal.md")]
pub mod thermal {}

#[doc = include_str!("../../../book/src/bound.md")]
pub mod bound {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
