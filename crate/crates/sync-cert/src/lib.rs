//! Certificates of global synchronization for identical phase oscillators.
//!
//! A network of identical Kuramoto oscillators on an undirected graph evolves
//! by `dθ_j/dt = Σ_k A_jk sin(θ_k − θ_j)`. For many graphs — in particular
//! Erdős–Rényi random graphs above a modest density — the all-in-phase state
//! is the only stable equilibrium, so the network synchronizes from almost
//! every initial condition. This crate decides that property *by certificate*:
//! from upper bounds on the spectral norms of two shifted matrices,
//!
//! - `Δ_A = A − p·J` (mean-shifted adjacency), and
//! - `Δ_L = L + p·J − n·p·I` (mean-shifted Laplacian),
//!
//! it runs a chain of inequalities whose success proves that every stable
//! equilibrium keeps all phases inside a half-circle, which forces the
//! all-in-phase state. Nothing here simulates its way to a verdict; the
//! simulator exists to *falsify* (it never certifies).
//!
//! The crate splits into five layers:
//!
//! - [`graph`]: graph construction, reproducible Erdős–Rényi sampling, exact
//!   subset edge counts, and the edge-list file format.
//! - [`spectral`]: `‖Δ_A‖` and `‖Δ_L‖`, exactly (dense eigensolve) or
//!   iteratively (implicit power method), plus the closed-form probabilistic
//!   surrogate `f(n, p)` for graphs that are never materialized.
//! - [`certifier`]: the certificate chain itself — moment lower bounds, the
//!   stray-set table, amplification steps, the closed-form theorem test, the
//!   iterative refinement engine, and threshold search over `p`.
//! - [`dynamics`]: a fixed-step integrator for the oscillator system,
//!   equilibrium and stability detection, and an inequality suite that checks
//!   every certified claim against simulated equilibria.
//! - [`cli`] / [`report`]: the `sync-cert` command-line front end and its
//!   JSON/CSV serialization.
//!
//! # Example
//!
//! Certify an Erdős–Rényi ensemble from the norm formula alone, then check an
//! explicit graph with exact norms:
//!
//! ```
//! use sync_cert::certifier::{certify, CertificateInput, CertifyMethod, RefineOptions};
//! use sync_cert::graph::Graph;
//! use sync_cert::spectral::{estimates_from_formula, estimates_from_graph, NormMethod};
//!
//! // Ensemble claim: holds with probability 1 - 4/n over the random graph.
//! let input = CertificateInput::from_estimates(estimates_from_formula(1_000_000, 0.256)?);
//! let result = certify(&input, CertifyMethod::Auto, &RefineOptions::default());
//! assert!(result.certified());
//!
//! // Per-graph claim: unconditional once the norms are computed exactly.
//! let g = Graph::complete(50, true)?;
//! let input = CertificateInput::from_estimates(estimates_from_graph(
//!     &g,
//!     1.0,
//!     NormMethod::Exact,
//!     1e-10,
//! )?);
//! let result = certify(&input, CertifyMethod::Auto, &RefineOptions::default());
//! assert!(result.certified() && result.confidence == 1.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod certifier;
pub mod cli;
pub mod dynamics;
pub mod graph;
pub mod guide;
pub mod report;
pub mod spectral;
