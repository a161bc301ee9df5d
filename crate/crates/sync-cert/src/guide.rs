//! The narrative guide, bound into the test suite.
//!
//! Each module below embeds one chapter of the mdbook under `book/` as its
//! documentation, so every fenced Rust block in the guide compiles and runs
//! as a doc-test of this crate. A chapter that drifts from the API fails
//! `cargo test`, which keeps the prose honest. The rendered book is built
//! with `mdbook build book` from the workspace root.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/spectral-bounds.md")]
pub mod spectral_bounds {}

#[doc = include_str!("../../../book/src/certification.md")]
pub mod certification {}

#[doc = include_str!("../../../book/src/refinement.md")]
pub mod refinement {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
