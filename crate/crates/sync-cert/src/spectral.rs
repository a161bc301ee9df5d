//! Spectral norms of the mean-shifted adjacency and Laplacian operators.
//!
//! Every certificate consumes two numbers: upper bounds on `‖Δ_A‖` and
//! `‖Δ_L‖`, where
//!
//! - `Δ_A = A − p·J` (adjacency with the ensemble mean removed), and
//! - `Δ_L = L + p·J − n·p·I` (Laplacian with its ensemble mean removed;
//!   `E[L] = n·p·I − p·J` for an Erdős–Rényi graph with self-loops).
//!
//! Both matrices are symmetric, so the spectral norm is the largest
//! eigenvalue magnitude. Three routes produce it:
//!
//! - **exact**: dense symmetric eigensolve, for `n` up to [`DENSE_THRESHOLD`];
//! - **power**: matrix-free power iteration on the *square* of the implicit
//!   operator (`x ↦ Ax − p(𝟙ᵀx)𝟙` or `x ↦ Dx − Ax + p(𝟙ᵀx)𝟙 − npx`, applied
//!   twice per step; the rank-one `p·J` term is never materialized). `Δ²` is
//!   positive semidefinite with top eigenvalue `‖Δ‖²`, so one run covers both
//!   ends of the spectrum, and the result `√λ·(1 + tol)` stays a valid upper
//!   bound under the convergence tolerance;
//! - **formula**: the high-probability bound `f(n, p)` for ensembles where no
//!   explicit graph exists. `‖Δ_A‖ < f(n,p)` and `‖Δ_L‖ < 2·f(n,p)` each fail
//!   with probability below `2/n`, so certificates built on the formula hold
//!   with probability at least `1 − 4/n`.
//!
//! Upper-bound discipline: estimated norms are inflated by their tolerance
//! and the formula by a relative `2⁻⁴⁰` before anything downstream consumes
//! them. Certificates only ever get *upper* bounds.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Largest `n` for which the dense eigensolver route is allowed.
pub const DENSE_THRESHOLD: usize = 4096;

/// Relative inflation applied to formula values to preserve upper-bound
/// semantics under round-to-nearest evaluation.
pub const UPPER_BOUND_MARGIN: f64 = 1.0 / (1u64 << 40) as f64;

/// Errors from norm computation.
#[derive(Debug, Error)]
pub enum SpectralError {
    /// `f(n, p)` involves `ln n`; it is defined here for `n >= 2`.
    #[error("the norm formula needs n >= 2, got {0}")]
    FormulaTooSmall(usize),
    /// Shift probabilities live in `[0, 1]`.
    #[error("shift probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    /// Reference probabilities attached to estimates live in `(0, 1]`.
    #[error("reference probability must lie in (0, 1], got {0}")]
    ReferenceProbabilityOutOfRange(f64),
    /// Convergence tolerances must be positive and finite.
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    /// The dense route refuses matrices above [`DENSE_THRESHOLD`].
    #[error("dense eigensolve limited to n <= {threshold}, got {n}")]
    DenseTooLarge { n: usize, threshold: usize },
    /// Power iteration ran out of its iteration budget. `best` is derived
    /// from the largest Rayleigh quotient seen (a lower bound on the true
    /// norm), already inflated by the tolerance.
    #[error("power iteration did not converge within {iterations} iterations (best estimate {best})")]
    NonConvergence { best: f64, iterations: usize },
}

/// Where a pair of norm bounds came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSource {
    /// Closed-form `f(n, p)`; holds with probability `1 − 4/n`.
    Formula,
    /// Dense symmetric eigensolve of an explicit graph.
    Exact,
    /// Power iteration on an explicit graph, inflated by its tolerance.
    Estimated,
}

/// How to compute norms for an explicit graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Dense eigensolve (requires `n <= DENSE_THRESHOLD`).
    Exact,
    /// Matrix-free power iteration.
    Power,
}

/// Upper bounds on `‖Δ_A‖` and `‖Δ_L‖` with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimates {
    /// Vertex count the bounds refer to.
    pub n: usize,
    /// Reference probability in `(0, 1]` (the shift in `Δ_A`, `Δ_L`).
    pub p: f64,
    /// Upper bound on `‖Δ_A‖`.
    pub norm_a: f64,
    /// Upper bound on `‖Δ_L‖`.
    pub norm_l: f64,
    /// How the bounds were produced.
    pub source: NormSource,
    /// Probability that both bounds hold: 1 for explicit graphs, `1 − 4/n`
    /// for the formula.
    pub confidence: f64,
}

/// The concentration bound `f(n, p) = 2·√(n·ln(n)·p(1−p)) + 4·ln(n)/3`,
/// inflated by a relative `2⁻⁴⁰`.
///
/// Logarithms are natural. `‖Δ_A‖` exceeds this with probability below `2/n`
/// over the Erdős–Rényi ensemble, and `‖Δ_L‖` exceeds twice it with
/// probability below `2/n`.
pub fn f_bound(n: usize, p: f64) -> Result<f64, SpectralError> {
    if n < 2 {
        return Err(SpectralError::FormulaTooSmall(n));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SpectralError::InvalidProbability(p));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let raw = 2.0 * (nf * ln_n * p * (1.0 - p)).sqrt() + 4.0 * ln_n / 3.0;
    Ok(raw * (1.0 + UPPER_BOUND_MARGIN))
}

/// Norm bounds for the Erdős–Rényi ensemble `(n, p)` without any sampled
/// graph: `(f(n,p), 2·f(n,p))` at confidence `1 − 4/n`.
pub fn estimates_from_formula(n: usize, p: f64) -> Result<SpectralEstimates, SpectralError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SpectralError::ReferenceProbabilityOutOfRange(p));
    }
    let f = f_bound(n, p)?;
    Ok(SpectralEstimates {
        n,
        p,
        norm_a: f,
        norm_l: 2.0 * f,
        source: NormSource::Formula,
        confidence: (1.0 - 4.0 / n as f64).max(0.0),
    })
}

/// Upper bound on `‖Δ_A‖ = ‖A − p·J‖` for an explicit graph.
pub fn spectral_norm_delta_a(
    g: &Graph,
    p: f64,
    method: NormMethod,
    tol: f64,
) -> Result<f64, SpectralError> {
    shifted_norm(g, p, Kind::Adjacency, method, tol)
}

/// Upper bound on `‖Δ_L‖ = ‖L + p·J − n·p·I‖` for an explicit graph.
pub fn spectral_norm_delta_l(
    g: &Graph,
    p: f64,
    method: NormMethod,
    tol: f64,
) -> Result<f64, SpectralError> {
    shifted_norm(g, p, Kind::Laplacian, method, tol)
}

/// Both norm bounds for an explicit graph, packaged with confidence 1.
pub fn estimates_from_graph(
    g: &Graph,
    p: f64,
    method: NormMethod,
    tol: f64,
) -> Result<SpectralEstimates, SpectralError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SpectralError::ReferenceProbabilityOutOfRange(p));
    }
    Ok(SpectralEstimates {
        n: g.n(),
        p,
        norm_a: spectral_norm_delta_a(g, p, method, tol)?,
        norm_l: spectral_norm_delta_l(g, p, method, tol)?,
        source: match method {
            NormMethod::Exact => NormSource::Exact,
            NormMethod::Power => NormSource::Estimated,
        },
        confidence: 1.0,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Adjacency,
    Laplacian,
}

fn shifted_norm(
    g: &Graph,
    p: f64,
    kind: Kind,
    method: NormMethod,
    tol: f64,
) -> Result<f64, SpectralError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SpectralError::InvalidProbability(p));
    }
    match method {
        NormMethod::Exact => exact_norm(g, p, kind),
        NormMethod::Power => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(SpectralError::InvalidTolerance(tol));
            }
            power_norm(g, p, kind, tol)
        }
    }
}

fn dense_delta(g: &Graph, p: f64, kind: Kind) -> DMatrix<f64> {
    let n = g.n();
    match kind {
        Kind::Adjacency => {
            let mut m = g.adjacency_matrix();
            m.add_scalar_mut(-p);
            m
        }
        Kind::Laplacian => {
            let mut m = g.laplacian_matrix();
            m.add_scalar_mut(p);
            for j in 0..n {
                m[(j, j)] -= n as f64 * p;
            }
            m
        }
    }
}

fn exact_norm(g: &Graph, p: f64, kind: Kind) -> Result<f64, SpectralError> {
    if g.n() > DENSE_THRESHOLD {
        return Err(SpectralError::DenseTooLarge {
            n: g.n(),
            threshold: DENSE_THRESHOLD,
        });
    }
    let eigenvalues = dense_delta(g, p, kind).symmetric_eigenvalues();
    Ok(eigenvalues.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs())))
}

/// The implicit mean-shifted operator `Δ`, applied without materializing
/// `p·J`.
struct ShiftedOperator<'a> {
    g: &'a Graph,
    p: f64,
    kind: Kind,
}

impl ShiftedOperator<'_> {
    /// `out = Δ·x` in `O(edges + n)`.
    #[allow(clippy::needless_range_loop)] // j is a vertex id, not a slice cursor
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.g.n();
        let total: f64 = x.iter().sum();
        match self.kind {
            Kind::Adjacency => {
                for j in 0..n {
                    let ax: f64 = self.g.neighbors(j).iter().map(|&k| x[k as usize]).sum();
                    out[j] = ax - self.p * total;
                }
            }
            Kind::Laplacian => {
                let np = n as f64 * self.p;
                for j in 0..n {
                    let ax: f64 = self.g.neighbors(j).iter().map(|&k| x[k as usize]).sum();
                    let deg = self.g.degree(j) as f64;
                    out[j] = deg * x[j] - ax + self.p * total - np * x[j];
                }
            }
        }
    }

    /// `Δ_L` kills the all-ones vector, so its power iteration runs in the
    /// mean-zero subspace.
    fn deflate_ones(&self) -> bool {
        self.kind == Kind::Laplacian
    }
}

struct PowerRun {
    /// Rayleigh quotient of `Δ²` at the accepted iterate (`‖Δx‖²`, so
    /// nonnegative up to rounding).
    rayleigh: f64,
    converged: bool,
    iterations: usize,
    /// Largest Rayleigh quotient seen; always a valid lower bound on `‖Δ‖²`.
    best: f64,
}

fn subtract_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x {
        *v -= mean;
    }
}

/// Deterministic start vector; the seed value is arbitrary but fixed so runs
/// reproduce bit-for-bit.
fn start_vector(n: usize, deflate: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5359_4e43);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    if deflate {
        subtract_mean(&mut x);
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

/// Power iteration on `Δ²`, accepting via the Rayleigh residual
/// `‖Δ²x − λx‖ <= tol·λ` (non-strict, so a zero operator converges at once).
fn run_power(op: &ShiftedOperator<'_>, tol: f64, budget: usize) -> PowerRun {
    let n = op.g.n();
    let mut x = start_vector(n, op.deflate_ones());
    let mut mid = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best = 0.0_f64;
    for iteration in 1..=budget {
        op.apply(&x, &mut mid);
        if op.deflate_ones() {
            subtract_mean(&mut mid);
        }
        op.apply(&mid, &mut t);
        if op.deflate_ones() {
            subtract_mean(&mut t);
        }
        let lambda: f64 = x.iter().zip(&t).map(|(a, b)| a * b).sum();
        let residual: f64 = x
            .iter()
            .zip(&t)
            .map(|(a, b)| {
                let r = b - lambda * a;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        best = best.max(lambda);
        if residual <= tol * lambda.max(0.0) {
            return PowerRun {
                rayleigh: lambda,
                converged: true,
                iterations: iteration,
                best,
            };
        }
        x.copy_from_slice(&t);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            // The iterate collapsed (x sat in the kernel of Δ² without
            // meeting the residual test); report no convergence rather
            // than guess.
            return PowerRun {
                rayleigh: lambda,
                converged: false,
                iterations: iteration,
                best,
            };
        }
        for v in &mut x {
            *v /= norm;
        }
    }
    PowerRun {
        rayleigh: 0.0,
        converged: false,
        iterations: budget,
        best,
    }
}

/// Iteration budget per power run: `10·n/√tol`, capped at `10^5`.
fn power_budget(n: usize, tol: f64) -> usize {
    (10.0 * n as f64 / tol.sqrt()).min(100_000.0) as usize
}

/// Norm via power iteration on the squared operator.
///
/// `Δ` is symmetric, so `Δ²` is positive semidefinite with top eigenvalue
/// exactly `‖Δ‖²`. Squaring folds the two ends of the spectrum onto one:
/// a single run finds the dominant magnitude with no sign bookkeeping, and
/// eigenvalues tied at `±‖Δ‖` merge instead of trading the lead. The
/// Rayleigh quotient approaches `‖Δ‖²` from below, so `√λ·(1 + tol)` keeps
/// the upper-bound discipline.
fn power_norm(g: &Graph, p: f64, kind: Kind, tol: f64) -> Result<f64, SpectralError> {
    let n = g.n();
    if n == 1 {
        // 1x1 case: Δ_A = [A₁₁ − p], Δ_L = [0].
        return Ok(match kind {
            Kind::Adjacency => (if g.has_edge(0, 0) { 1.0 } else { 0.0 } - p).abs(),
            Kind::Laplacian => 0.0,
        });
    }
    let op = ShiftedOperator { g, p, kind };
    let run = run_power(&op, tol, power_budget(n, tol));
    let inflate = |squared: f64| squared.max(0.0).sqrt() * (1.0 + tol);
    if run.converged {
        Ok(inflate(run.rayleigh))
    } else {
        Err(SpectralError::NonConvergence {
            best: inflate(run.best),
            iterations: run.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    #[allow(clippy::excessive_precision)] // pins are spelled at full f64 precision
    fn f_bound_matches_high_precision_values() {
        // p(1-p) = 0 leaves only the 4·ln(n)/3 term.
        assert_relative_eq!(
            f_bound(10, 1.0).unwrap(),
            3.0701134573253942,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            f_bound(1_000_000, 0.256).unwrap(),
            3262.7125313098706,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            f_bound(10_000_000, 0.0474).unwrap(),
            5416.986105,
            max_relative = 1e-9
        );
        assert!(matches!(f_bound(1, 0.5), Err(SpectralError::FormulaTooSmall(1))));
        assert!(matches!(
            f_bound(10, 1.2),
            Err(SpectralError::InvalidProbability(_))
        ));
    }

    #[test]
    #[allow(clippy::excessive_precision)] // pins are spelled at full f64 precision
    fn formula_estimates_double_the_laplacian_bound() {
        let est = estimates_from_formula(1_000_000, 0.256).unwrap();
        assert_eq!(est.norm_l, 2.0 * est.norm_a);
        assert_eq!(est.source, NormSource::Formula);
        assert_relative_eq!(est.confidence, 0.999996, max_relative = 1e-12);

        let est = estimates_from_formula(10, 1.0).unwrap();
        assert_relative_eq!(est.norm_a, 3.0701134573253942, max_relative = 1e-9);
        assert!(matches!(
            estimates_from_formula(100, 0.0),
            Err(SpectralError::ReferenceProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn triangle_at_p_one_has_unit_adjacency_norm() {
        // A − J = −I for the loop-free triangle.
        let g = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let exact = spectral_norm_delta_a(&g, 1.0, NormMethod::Exact, 1e-10).unwrap();
        assert_relative_eq!(exact, 1.0, max_relative = 1e-12);
        let power = spectral_norm_delta_a(&g, 1.0, NormMethod::Power, 1e-10).unwrap();
        assert_relative_eq!(power, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn empty_graph_at_p_zero_has_zero_norms() {
        let g = Graph::new(8).unwrap();
        for method in [NormMethod::Exact, NormMethod::Power] {
            assert_eq!(spectral_norm_delta_a(&g, 0.0, method, 1e-10).unwrap(), 0.0);
            assert_eq!(spectral_norm_delta_l(&g, 0.0, method, 1e-10).unwrap(), 0.0);
        }
    }

    #[test]
    fn complete_graph_with_loops_at_p_one_is_centered() {
        // A = J makes both shifted matrices vanish identically.
        let g = Graph::complete(5, true).unwrap();
        for method in [NormMethod::Exact, NormMethod::Power] {
            assert!(spectral_norm_delta_a(&g, 1.0, method, 1e-10).unwrap() < 1e-10);
            assert!(spectral_norm_delta_l(&g, 1.0, method, 1e-10).unwrap() < 1e-10);
        }
    }

    #[test]
    fn power_brackets_exact_on_er_samples() {
        let tol = 1e-8;
        for (n, p, seed) in [(64, 0.3, 1), (48, 0.7, 2), (33, 0.5, 3), (2, 0.0, 0)] {
            let g = Graph::sample_er(n, p, seed).unwrap();
            for (kind_exact, kind_power) in [
                (
                    spectral_norm_delta_a(&g, p, NormMethod::Exact, tol).unwrap(),
                    spectral_norm_delta_a(&g, p, NormMethod::Power, tol).unwrap(),
                ),
                (
                    spectral_norm_delta_l(&g, p, NormMethod::Exact, tol).unwrap(),
                    spectral_norm_delta_l(&g, p, NormMethod::Power, tol).unwrap(),
                ),
            ] {
                let (exact, power) = (kind_exact, kind_power);
                assert!(
                    power >= exact - tol * exact && power <= exact * (1.0 + 2.0 * tol),
                    "n={n} p={p} seed={seed}: power {power} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn tied_spectrum_ends_merge_under_squaring() {
        // K2 without loops at p = 0 has eigenvalues exactly {+1, −1}; an
        // iteration on Δ itself would see the ends trade the lead forever,
        // but on Δ² they merge into one eigenvalue at +1.
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let power = spectral_norm_delta_a(&g, 0.0, NormMethod::Power, 1e-9).unwrap();
        assert_relative_eq!(power, 1.0, max_relative = 1e-7);
    }

    #[test]
    fn exact_route_refuses_oversized_graphs() {
        let g = Graph::new(DENSE_THRESHOLD + 1).unwrap();
        assert!(matches!(
            spectral_norm_delta_a(&g, 0.5, NormMethod::Exact, 1e-10),
            Err(SpectralError::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn estimates_from_graph_carry_full_confidence() {
        let g = Graph::sample_er(60, 0.4, 11).unwrap();
        let est = estimates_from_graph(&g, 0.4, NormMethod::Exact, 1e-10).unwrap();
        assert_eq!(est.confidence, 1.0);
        assert_eq!(est.source, NormSource::Exact);
        assert!(est.norm_a > 0.0 && est.norm_l > 0.0);
        let est = estimates_from_graph(&g, 0.4, NormMethod::Power, 1e-8).unwrap();
        assert_eq!(est.source, NormSource::Estimated);
    }
}
