//! The certificate chain: from two norm bounds to a synchronization verdict.
//!
//! Everything here reasons about an arbitrary *stable equilibrium* `θ` of the
//! oscillator system on a graph with `n` vertices, using only upper bounds
//! `‖Δ_A‖` and `‖Δ_L‖` (see [`crate::spectral`]). Write `a = ‖Δ_A‖/(np)` and
//! `l = ‖Δ_L‖/(np)`. The chain has four links:
//!
//! 1. **Moment bound** ([`rho1_lower_bound`]): at any stable equilibrium the
//!    first and second phase moments `ρ_m = (1/n)·Σ_k e^{i·m·θ_k}` satisfy
//!    `ρ₁² ≥ (1 + |ρ₂|²)/2 − 2a` and `|ρ₂| ≥ 1 − 2a²/ρ₁²`. Alternating the
//!    two yields a certified lower bound `r ≤ ρ₁` (phases rotated so that
//!    `ρ₁ = |ρ₁| ≥ 0`).
//! 2. **Stray-set table** ([`cphi_initial_bounds`]): let
//!    `C_φ = {k : cos θ_k ≤ cos φ}` be the set of phases at angular distance
//!    at least `φ` from the mean direction. A first-moment argument gives
//!    `|C_φ| ≤ a²·n/(r²·sin²φ)`, recorded on a uniform grid of angles in
//!    `(0, π/2]`.
//! 3. **Refinement** ([`refine`]): two update rules shrink the table until it
//!    goes stationary or the bound at `π/2` drops below one. `|C_{π/2}| < 1`
//!    means every stable equilibrium keeps all phases in an open half-circle,
//!    and the only such equilibrium on a connected graph is the all-in-phase
//!    state; connectivity itself is certified by `‖Δ_L‖ < np` (the spectral
//!    gap of `L` is then at least `np − ‖Δ_L‖ > 0`).
//! 4. **Closed-form test** ([`check_theorem`]): a certificate that skips the
//!    table: if `a < 1/12`, `l < 1/4`, and
//!    `(π/4)/asin(12a) > ln(n/6)/ln(np/(2‖Δ_L‖) − 1) + 1`, repeated halving
//!    of the stray angle empties `C_{π/2}` analytically. It is weaker than
//!    refinement but needs no iteration.
//!
//! Numeric discipline: all verdict-bearing comparisons go through
//! [`strictly_below`], which demands a relative margin of [`REL_SLACK`], and
//! every table entry is rounded *up* before flooring to an integer count.
//! Inputs are upper bounds, so a `certified` verdict survives the rounding;
//! `not certified` makes no claim in either direction.

// Guard comparisons are spelled `!(x < y)` on purpose: a NaN must fail the
// certifying branch, and the `>=` rewrite would let it pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

use crate::spectral::{estimates_from_formula, NormSource, SpectralEstimates};

/// Relative margin for strict comparisons and for the round-up applied to
/// refined counts before flooring.
pub const REL_SLACK: f64 = 1e-12;

/// Errors from threshold search (certification itself never errors — bad
/// inputs yield a `not certified` verdict with a reason).
#[derive(Debug, Error)]
pub enum CertifierError {
    /// Threshold search is meaningless for very small graphs.
    #[error("threshold search needs n >= 8, got {0}")]
    TooFewVertices(usize),
    /// Searching over `p` probes the (n, p) ensemble, which only the formula
    /// norms describe; a fixed graph has no ensemble to vary.
    #[error("threshold search requires the formula norm source, got {0:?}")]
    UnsupportedNormSource(NormSource),
    /// Relative tolerances live in (0, 1).
    #[error("relative tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    /// Even `p = 1` failed to certify.
    #[error("no certifiable p <= 1 for n = {0}")]
    NoCertifiableP(usize),
    /// The bisection trace contradicted monotonicity of the verdict in `p`,
    /// so the bracket endpoints cannot be trusted.
    #[error(
        "verdict not monotone in p: certified at p = {p_certified} but not at p = {p_failed}"
    )]
    MonotonicityViolation { p_certified: f64, p_failed: f64 },
}

/// `lhs < rhs` with a relative safety margin: true only when
/// `lhs < rhs − REL_SLACK·max(|lhs|, |rhs|)`.
///
/// `NaN` on either side is `false`. Infinities resolve by IEEE order without
/// a margin (an infinite gap needs none): `strictly_below(x, +∞)` holds for
/// every non-NaN `x < +∞`, and `strictly_below(−∞, y)` for every `y > −∞`.
pub fn strictly_below(lhs: f64, rhs: f64) -> bool {
    if lhs.is_nan() || rhs.is_nan() {
        return false;
    }
    if rhs == f64::INFINITY {
        return lhs < f64::INFINITY;
    }
    if lhs == f64::NEG_INFINITY {
        return rhs > f64::NEG_INFINITY;
    }
    if !lhs.is_finite() || !rhs.is_finite() {
        return false;
    }
    lhs < rhs - REL_SLACK * lhs.abs().max(rhs.abs())
}

/// Which certificate route to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMethod {
    /// Closed-form test only.
    Theorem,
    /// Table refinement only.
    Refine,
    /// Closed-form first; fall back to refinement if it fails.
    Auto,
}

/// Which route actually produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem,
    Refine,
}

/// Certification outcome. `NotCertified` is an absence of proof, not a proof
/// of absence: the graph may still synchronize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// One strict comparison from the certificate trace.
///
/// `lhs` and `rhs` are `None` when the computed side was not finite (the
/// verdict in `pass` already accounts for that).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub pass: bool,
}

impl Condition {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Condition {
            name: name.to_string(),
            pass: strictly_below(lhs, rhs),
            lhs: Some(lhs).filter(|v| v.is_finite()),
            rhs: Some(rhs).filter(|v| v.is_finite()),
        }
    }
}

/// Full outcome of a certification attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub verdict: Verdict,
    /// Route that produced this verdict.
    pub method: Method,
    /// One-line human-readable account of the decisive step.
    pub reason: String,
    /// Probability the verdict's premises hold (1 for exact norms, `1 − 4/n`
    /// for formula norms).
    pub confidence: f64,
    /// Every strict comparison made, in evaluation order.
    pub conditions: Vec<Condition>,
}

impl CertificationResult {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// The numbers a certificate consumes: problem size, reference probability,
/// and the two norm upper bounds with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateInput {
    pub n: usize,
    pub p: f64,
    /// Upper bound on `‖Δ_A‖`.
    pub norm_a: f64,
    /// Upper bound on `‖Δ_L‖`.
    pub norm_l: f64,
    pub source: NormSource,
    pub confidence: f64,
}

impl CertificateInput {
    pub fn from_estimates(est: SpectralEstimates) -> Self {
        CertificateInput {
            n: est.n,
            p: est.p,
            norm_a: est.norm_a,
            norm_l: est.norm_l,
            source: est.source,
            confidence: est.confidence,
        }
    }

    /// Normalized adjacency deviation `a = ‖Δ_A‖/(np)`. NaN for degenerate
    /// inputs (`n = 0` or `p = 0`), which every downstream comparison treats
    /// as failing.
    pub fn a(&self) -> f64 {
        self.norm_a / (self.n as f64 * self.p)
    }

    /// Normalized Laplacian deviation `l = ‖Δ_L‖/(np)`.
    pub fn l(&self) -> f64 {
        self.norm_l / (self.n as f64 * self.p)
    }
}

/// Options for the refinement engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Number of grid angles in `(0, π/2]`; the last node is exactly `π/2`.
    pub grid_size: usize,
    /// Cap on full sweeps; typically one or two suffice before the table
    /// either certifies or goes stationary.
    pub max_sweeps: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            grid_size: 1000,
            max_sweeps: 100_000,
        }
    }
}

/// Certified lower bound on the first-moment magnitude `|ρ₁|` at any stable
/// equilibrium, as a function of `a = ‖Δ_A‖/(np)`.
///
/// Alternates the two stable-equilibrium inequalities
/// `ρ₁² ≥ (1 + |ρ₂|²)/2 − 2a` and `|ρ₂| ≥ 1 − 2a²/ρ₁²` from the
/// pessimistic start `|ρ₂| ≥ 0`. Both iterates increase monotonically, so
/// every round is itself a valid bound and truncation is sound. Returns 0
/// when the iteration collapses (for `a ≥ 1/4` the very first bound is
/// vacuous), and 1 exactly when `a = 0`.
pub fn rho1_lower_bound(a: f64) -> f64 {
    if !(a >= 0.0) {
        // Negative a cannot arise from norms; NaN certifies nothing.
        return 0.0;
    }
    let mut s = 0.0_f64;
    let mut r2 = 0.0_f64;
    for _ in 0..10_000 {
        let r2_new = ((1.0 + s * s) / 2.0 - 2.0 * a).max(0.0);
        if r2_new == 0.0 {
            return 0.0;
        }
        debug_assert!(r2_new >= r2, "moment iteration must be non-decreasing");
        let s_new = (1.0 - 2.0 * a * a / r2_new).max(0.0);
        if (r2_new - r2).abs() < 1e-13 {
            return r2_new.sqrt();
        }
        r2 = r2_new;
        s = s_new;
    }
    r2.sqrt()
}

/// Upper bounds on the stray-set sizes `|C_φ|` over a uniform angle grid.
///
/// `angles[i] = ((i+1)/m)·(π/2)`, so the grid spans `(0, π/2]` and the last
/// node is exactly `π/2`. `bounds[i]` is a proven upper bound on `|C_φ|` at
/// `φ = angles[i]` for every stable equilibrium; bounds are non-increasing in
/// `φ` because the sets shrink as the angle grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CphiBoundTable {
    angles: Vec<f64>,
    bounds: Vec<f64>,
}

impl CphiBoundTable {
    fn with_uniform_grid(grid_size: usize, initial: f64) -> Self {
        assert!(grid_size >= 8, "grid_size must be at least 8");
        let m = grid_size as f64;
        CphiBoundTable {
            angles: (0..grid_size)
                .map(|i| ((i + 1) as f64 / m) * FRAC_PI_2)
                .collect(),
            bounds: vec![initial; grid_size],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn angle(&self, idx: usize) -> f64 {
        self.angles[idx]
    }

    pub fn bound(&self, idx: usize) -> f64 {
        self.bounds[idx]
    }

    /// The bound at `π/2`: below 1, every stable equilibrium sits strictly
    /// inside an open half-circle.
    pub fn final_bound(&self) -> f64 {
        *self.bounds.last().expect("table is never empty")
    }

    /// Overwrite one bound. Raw accessor for composing update steps by hand;
    /// the caller is responsible for only ever writing proven bounds.
    pub fn set_bound(&mut self, idx: usize, value: f64) {
        assert!(
            value >= 0.0 && !value.is_nan(),
            "stray-set bounds are non-negative counts"
        );
        self.bounds[idx] = value;
    }

    /// Propagate `min` rightward: larger angles never get weaker bounds.
    fn enforce_monotone(&mut self) {
        for i in 1..self.bounds.len() {
            if self.bounds[i] > self.bounds[i - 1] {
                self.bounds[i] = self.bounds[i - 1];
            }
        }
    }
}

/// First-moment stray-set bounds `min(n, a²·n/(r²·sin²φ))` over a uniform
/// grid of `grid_size` angles.
///
/// `rho1_lb` is a certified lower bound on `|ρ₁|` (see [`rho1_lower_bound`]);
/// a non-positive value yields the trivial table (all bounds `n`). Bounds are
/// left un-floored: this op reports the analytic curve, and only [`refine`]
/// rounds to integer counts.
pub fn cphi_initial_bounds(
    input: &CertificateInput,
    rho1_lb: f64,
    grid_size: usize,
) -> CphiBoundTable {
    let nf = input.n as f64;
    let mut table = CphiBoundTable::with_uniform_grid(grid_size, nf);
    let a = input.a();
    if !(rho1_lb > 0.0) || !a.is_finite() {
        return table;
    }
    let s_cap = a * a * nf / (rho1_lb * rho1_lb);
    for i in 0..grid_size {
        let sin2 = table.angles[i].sin().powi(2);
        table.bounds[i] = (s_cap / sin2).min(nf);
    }
    table.enforce_monotone();
    table
}

/// Amplification gain `F = np/(2‖Δ_L‖) − 1` (infinite when `‖Δ_L‖ = 0`).
fn amplification_gain(input: &CertificateInput) -> f64 {
    input.n as f64 * input.p / (2.0 * input.norm_l) - 1.0
}

/// One corollary-style amplification: push the bound at `φ_α` across the gap
/// to `φ_β`, dividing by the gain `F = np/(2‖Δ_L‖) − 1`.
///
/// Hypotheses (any failure returns `None`; inapplicability is a normal
/// outcome, not an error):
///
/// - `φ_α < φ_β < π/2` (so `beta_idx` must not be the last grid node),
/// - `b(φ_α) ≤ n/2`,
/// - `b(φ_β) ≤ 2‖Δ_A‖/p`,
/// - `sin(φ_β − φ_α) ≥ 12‖Δ_A‖/(np)`,
/// - `F > 1`.
///
/// Returns the updated bound for `beta_idx`, i.e. `min(b(φ_β), b(φ_α)/F)`,
/// un-floored.
///
/// # Panics
///
/// If the indices are out of range or not strictly increasing.
pub fn amplify_step(
    table: &CphiBoundTable,
    alpha_idx: usize,
    beta_idx: usize,
    input: &CertificateInput,
) -> Option<f64> {
    assert!(
        alpha_idx < beta_idx && beta_idx < table.len(),
        "need alpha_idx < beta_idx < table.len()"
    );
    if beta_idx == table.len() - 1 {
        return None; // φ_β = π/2 exactly; the last node only inherits.
    }
    let nf = input.n as f64;
    let ba = table.bounds[alpha_idx];
    let bb = table.bounds[beta_idx];
    let gain = amplification_gain(input);
    let gap_sin = (table.angles[beta_idx] - table.angles[alpha_idx]).sin();
    let applicable = 2.0 * ba <= nf
        && bb <= 2.0 * input.norm_a / input.p
        && gap_sin >= 12.0 * input.a()
        && gain > 1.0;
    applicable.then(|| bb.min(ba / gain))
}

/// One edge-comparison update: the sharper sibling of [`amplify_step`], built
/// from the same three stable-equilibrium facts but combined directly instead
/// of through the closed-form corollary.
///
/// Fix a stable equilibrium, angles `φ_α < φ_β < π/2`, and write
/// `x = |C_β| ∈ [0, b_β]`, `y = |C_α| ∈ [x, b_α]`, `z = n − y`. With
/// `E(X, Y) = Σ_{j∈X} Σ_{k∈Y} A_jk` (ordered pairs) and `D = ‖Δ_L‖/n`:
///
/// - quadratic-form lower bound:
///   `E(C̄_α, C_β) ≥ p·z·x − D·(z·(y−x) + (y−x)·x + x·z)`,
/// - quadratic-form upper bound: `E(C_β, C_β) ≤ p·x² + ‖Δ_A‖·x`,
/// - edge comparison at a stable equilibrium:
///   `E(C̄_α, C_β) ≤ λ·E(C_β, C_β)` with `λ = 1/sin(φ_β − φ_α)`.
///
/// Chaining the three gives `V(x, y) ≤ 0` for a quadratic `V`; since
/// `∂V/∂y < 0` wherever `y ≤ (n + x)/2` — guaranteed by the hypothesis
/// `b_α ≤ n/2` — the worst case is `y = b_α`, and `V(x, b_α) ≤ 0` rearranges
/// to `P·x² + Q·x + R ≥ 0` with
///
/// `P = λ·p − D`, `Q = λ·‖Δ_A‖ + D·b_α − p·(n − b_α)`, `R = D·(n − b_α)·b_α`.
///
/// When `P > 0`, `Q < 0`, and the discriminant is positive, every
/// `x ∈ (x₋, x₊)` between the roots is impossible; if additionally
/// `b_β < x₊`, the bound tightens to `x₋`. Returns
/// `min(b_β, x₋·(1 + REL_SLACK))` un-floored, or `None` when any hypothesis
/// fails.
///
/// # Panics
///
/// If the indices are out of range or not strictly increasing.
pub fn edge_comparison_step(
    table: &CphiBoundTable,
    alpha_idx: usize,
    beta_idx: usize,
    input: &CertificateInput,
) -> Option<f64> {
    assert!(
        alpha_idx < beta_idx && beta_idx < table.len(),
        "need alpha_idx < beta_idx < table.len()"
    );
    if beta_idx == table.len() - 1 {
        return None;
    }
    let nf = input.n as f64;
    let ba = table.bounds[alpha_idx];
    let bb = table.bounds[beta_idx];
    if 2.0 * ba > nf {
        return None;
    }
    let lam = 1.0 / (table.angles[beta_idx] - table.angles[alpha_idx]).sin();
    let d_coef = input.norm_l / nf;
    let zs = nf - ba;
    let p_coef = lam * input.p - d_coef;
    let q_coef = lam * input.norm_a + d_coef * ba - input.p * zs;
    let r_coef = d_coef * zs * ba;
    if !(p_coef > 0.0 && q_coef < 0.0) {
        return None;
    }
    let disc = q_coef * q_coef - 4.0 * p_coef * r_coef;
    if !(disc > 0.0) {
        return None;
    }
    let sq = disc.sqrt();
    let x_minus = 2.0 * r_coef / (-q_coef + sq);
    let x_plus = (-q_coef + sq) / (2.0 * p_coef);
    if !(bb < x_plus * (1.0 - REL_SLACK)) {
        return None;
    }
    Some(bb.min(x_minus * (1.0 + REL_SLACK)))
}

/// Round a proven real bound to an integer count, protecting against the
/// value sitting a hair *below* the integer it should round to.
fn floor_count(x: f64) -> f64 {
    (x * (1.0 + REL_SLACK)).floor()
}

/// Run the refinement engine: initial first-moment table, then sweeps of
/// edge-comparison and amplification updates until the bound at `π/2` drops
/// below one (certified), the table goes stationary, or `max_sweeps` is hit.
///
/// Returns the refined table together with the verdict. The engine is
/// single-threaded and deterministic: sweeps visit source angles left to
/// right, apply both update rules to every target strictly between the
/// source and `π/2`, floor each improvement to an integer count, and
/// propagate monotonicity rightward after every source row (which is how the
/// `π/2` node inherits its bound).
///
/// Degenerate inputs (failed connectivity bound or collapsed moment bound)
/// return the trivial table and a `not certified` verdict with the failing
/// condition in the trace.
pub fn refine(input: &CertificateInput, opts: &RefineOptions) -> (CphiBoundTable, CertificationResult) {
    let m = opts.grid_size;
    let nf = input.n as f64;
    let np = nf * input.p;
    let a = input.a();
    let da = input.norm_a;
    let dl = input.norm_l;
    let mut conditions = Vec::new();

    // ‖Δ_L‖ < np certifies a positive spectral gap, hence connectivity —
    // required because an empty C_{π/2} forces in-phase only on a connected
    // graph.
    let connectivity = Condition::new("refine.laplacian_deviation_below_np", dl, np);
    conditions.push(connectivity.clone());
    let r = rho1_lower_bound(a);
    let moment = Condition::new("refine.moment_lower_bound_positive", 0.0, r);
    conditions.push(moment.clone());

    if !connectivity.pass || !moment.pass {
        let reason = if !connectivity.pass {
            format!(
                "refinement inapplicable: Laplacian deviation {dl:.6} does not clear n*p = {np:.6}"
            )
        } else {
            format!("moment lower bound collapsed to zero (a = {a:.6})")
        };
        let table = CphiBoundTable::with_uniform_grid(m, nf);
        let result = CertificationResult {
            verdict: Verdict::NotCertified,
            method: Method::Refine,
            reason,
            confidence: input.confidence,
            conditions,
        };
        return (table, result);
    }

    let mut table = cphi_initial_bounds(input, r, m);
    for b in &mut table.bounds {
        *b = floor_count(*b);
    }
    table.enforce_monotone();

    // sin of the angle gap between grid nodes i and j depends only on j − i.
    let gap_sin: Vec<f64> = (0..m)
        .map(|d| ((d as f64 / m as f64) * FRAC_PI_2).sin())
        .collect();
    let d_coef = dl / nf;
    let gain = amplification_gain(input);
    let twelve_a = 12.0 * a;
    let beta_cap = 2.0 * da / input.p;

    let mut certified = strictly_below(table.final_bound(), 1.0);
    let mut sweeps = 0usize;
    while !certified && sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = table.bounds.clone();
        for ia in 0..m - 1 {
            let ba = table.bounds[ia];
            if 2.0 * ba >= nf {
                continue;
            }
            let zs = nf - ba;
            let r_coef = d_coef * zs * ba;
            for ib in ia + 1..m - 1 {
                let bb = table.bounds[ib];
                let lam = 1.0 / gap_sin[ib - ia];
                let p_coef = lam * input.p - d_coef;
                let q_coef = lam * da + d_coef * ba - input.p * zs;
                let mut cand = f64::INFINITY;
                if p_coef > 0.0 && q_coef < 0.0 {
                    let disc = q_coef * q_coef - 4.0 * p_coef * r_coef;
                    if disc > 0.0 {
                        let sq = disc.sqrt();
                        let x_plus = (-q_coef + sq) / (2.0 * p_coef);
                        if bb < x_plus * (1.0 - REL_SLACK) {
                            cand = (2.0 * r_coef / (-q_coef + sq)) * (1.0 + REL_SLACK);
                        }
                    }
                }
                if gain > 1.0 && gap_sin[ib - ia] >= twelve_a && bb <= beta_cap {
                    cand = cand.min((ba / gain) * (1.0 + REL_SLACK));
                }
                if cand < bb {
                    table.bounds[ib] = cand.floor();
                }
            }
            table.enforce_monotone();
        }
        certified = strictly_below(table.final_bound(), 1.0);
        if certified {
            break;
        }
        let mut rel_change = 0.0_f64;
        for (&now, &was) in table.bounds.iter().zip(&before) {
            debug_assert!(now <= was, "bounds must never increase");
            rel_change = rel_change.max((was - now) / was.max(1e-300));
        }
        if rel_change < REL_SLACK {
            break;
        }
    }

    let final_bound = table.final_bound();
    conditions.push(Condition::new(
        "refine.final_bound_below_one",
        final_bound,
        1.0,
    ));
    let result = CertificationResult {
        verdict: if certified {
            Verdict::Certified
        } else {
            Verdict::NotCertified
        },
        method: Method::Refine,
        reason: if certified {
            format!("stray-set bound at pi/2 dropped below 1 after {sweeps} sweep(s)")
        } else {
            format!(
                "stray-set bound at pi/2 stayed at {final_bound} after {sweeps} sweep(s)"
            )
        },
        confidence: input.confidence,
        conditions,
    };
    (table, result)
}

/// The closed-form certificate: `a < 1/12`, `l < 1/4`, and the angle-halving
/// budget `(π/4)/asin(12a)` strictly exceeds the required amplification
/// rounds `ln(n/6)/ln(np/(2‖Δ_L‖) − 1) + 1` (natural logarithms).
pub fn check_theorem(input: &CertificateInput) -> CertificationResult {
    let nf = input.n as f64;
    let np = nf * input.p;
    let a = input.a();
    let l = input.l();
    let budget = FRAC_PI_4 / (12.0 * a).asin();
    let rounds = (nf / 6.0).ln() / (np / (2.0 * input.norm_l) - 1.0).ln() + 1.0;
    let conditions = vec![
        Condition::new("theorem.a_below_one_twelfth", a, 1.0 / 12.0),
        Condition::new("theorem.l_below_one_quarter", l, 0.25),
        Condition::new("theorem.rounds_below_angle_budget", rounds, budget),
    ];
    let verdict = if conditions.iter().all(|c| c.pass) {
        Verdict::Certified
    } else {
        Verdict::NotCertified
    };
    let reason = match verdict {
        Verdict::Certified => format!(
            "closed-form test passed: a = {a:.6}, l = {l:.6}, angle budget {budget:.4} > required rounds {rounds:.4}"
        ),
        Verdict::NotCertified => {
            let failed: Vec<&str> = conditions
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            format!("closed-form test failed: {}", failed.join(", "))
        }
    };
    CertificationResult {
        verdict,
        method: Method::Theorem,
        reason,
        confidence: input.confidence,
        conditions,
    }
}

/// Run a certificate: the closed-form test, the refinement engine, or
/// (`Auto`) the test first with refinement as fallback.
pub fn certify(
    input: &CertificateInput,
    method: CertifyMethod,
    opts: &RefineOptions,
) -> CertificationResult {
    match method {
        CertifyMethod::Theorem => check_theorem(input),
        CertifyMethod::Refine => refine(input, opts).1,
        CertifyMethod::Auto => {
            let by_theorem = check_theorem(input);
            if by_theorem.certified() {
                by_theorem
            } else {
                refine(input, opts).1
            }
        }
    }
}

/// One probe from a threshold search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub p: f64,
    pub certified: bool,
}

/// Result of a threshold search, including the full probe trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub n: usize,
    /// Smallest certified `p`, to relative tolerance `tol_p`.
    pub p_star: f64,
    pub tol_p: f64,
    pub method: CertifyMethod,
    pub probes: Vec<ProbeRecord>,
}

struct ProbeLog {
    records: Vec<ProbeRecord>,
}

impl ProbeLog {
    /// Certify at one `p`, recording the outcome and auditing the whole trace
    /// for monotonicity: any certified probe sitting below a failed probe
    /// invalidates bisection and aborts the search.
    fn probe(
        &mut self,
        n: usize,
        p: f64,
        method: CertifyMethod,
        opts: &RefineOptions,
    ) -> Result<bool, CertifierError> {
        let estimates = estimates_from_formula(n, p)
            .expect("bracketing keeps p within (0, 1]");
        let input = CertificateInput::from_estimates(estimates);
        let certified = certify(&input, method, opts).certified();
        for prior in &self.records {
            let violated = if prior.p < p {
                prior.certified && !certified
            } else {
                certified && !prior.certified && prior.p > p
            };
            if violated {
                let (p_certified, p_failed) = if prior.p < p {
                    (prior.p, p)
                } else {
                    (p, prior.p)
                };
                return Err(CertifierError::MonotonicityViolation {
                    p_certified,
                    p_failed,
                });
            }
        }
        self.records.push(ProbeRecord { p, certified });
        Ok(certified)
    }
}

/// Smallest `p` (to relative tolerance `tol_p`) at which `certify(n, p)`
/// passes with formula norms: exponential bracketing from `p = 0.5`, then
/// bisection, returning the certified upper endpoint.
///
/// Monotonicity of the verdict in `p` is plausible but unproven, so the
/// entire probe trace is audited; a violation aborts with
/// [`CertifierError::MonotonicityViolation`] rather than silently returning
/// a bracket that skipped a non-monotone window.
pub fn threshold_search(
    n: usize,
    norm_source: NormSource,
    tol_p: f64,
    method: CertifyMethod,
    opts: &RefineOptions,
) -> Result<ThresholdResult, CertifierError> {
    if n < 8 {
        return Err(CertifierError::TooFewVertices(n));
    }
    if norm_source != NormSource::Formula {
        return Err(CertifierError::UnsupportedNormSource(norm_source));
    }
    if !(tol_p > 0.0 && tol_p < 1.0) {
        return Err(CertifierError::InvalidTolerance(tol_p));
    }
    let mut log = ProbeLog {
        records: Vec::new(),
    };
    let mut p_hi = 0.5_f64;
    let mut hi_ok = log.probe(n, p_hi, method, opts)?;
    while !hi_ok {
        if p_hi >= 1.0 {
            return Err(CertifierError::NoCertifiableP(n));
        }
        p_hi = (p_hi * 1.6).min(1.0);
        hi_ok = log.probe(n, p_hi, method, opts)?;
    }
    let mut p_lo = p_hi / 2.0;
    while log.probe(n, p_lo, method, opts)? {
        p_hi = p_lo;
        p_lo /= 2.0;
    }
    while (p_hi - p_lo) / p_hi > tol_p {
        let mid = 0.5 * (p_lo + p_hi);
        if log.probe(n, mid, method, opts)? {
            p_hi = mid;
        } else {
            p_lo = mid;
        }
    }
    Ok(ThresholdResult {
        n,
        p_star: p_hi,
        tol_p,
        method,
        probes: log.records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn formula_input(n: usize, p: f64) -> CertificateInput {
        CertificateInput::from_estimates(estimates_from_formula(n, p).unwrap())
    }

    #[test]
    fn strict_comparison_honors_margin_and_specials() {
        assert!(strictly_below(0.0, 1.0));
        assert!(!strictly_below(1.0, 1.0));
        assert!(!strictly_below(1.0 - 1e-15, 1.0));
        assert!(strictly_below(1.0 - 1e-9, 1.0));
        assert!(strictly_below(1.0, f64::INFINITY));
        assert!(!strictly_below(f64::INFINITY, f64::INFINITY));
        assert!(!strictly_below(f64::NAN, 1.0));
        assert!(!strictly_below(0.0, f64::NAN));
        assert!(strictly_below(f64::NEG_INFINITY, 0.0));
    }

    #[test]
    fn moment_bound_matches_fixed_points() {
        assert_eq!(rho1_lower_bound(0.0), 1.0);
        assert_relative_eq!(
            rho1_lower_bound(1.0 / 12.0),
            0.903585667896603,
            max_relative = 1e-12
        );
        assert_eq!(rho1_lower_bound(0.3), 0.0);
        assert_eq!(rho1_lower_bound(0.25), 0.0);
        assert_eq!(rho1_lower_bound(f64::NAN), 0.0);
        // Monotone non-increasing in a.
        let samples: Vec<f64> = (0..60).map(|i| rho1_lower_bound(i as f64 * 0.004)).collect();
        assert!(samples.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn initial_table_matches_first_moment_curve() {
        let input = formula_input(1_000_000, 0.256);
        assert_relative_eq!(input.a(), 0.012744970825440773, max_relative = 1e-12);
        let r = rho1_lower_bound(input.a());
        assert_relative_eq!(r, 0.9870038671713002, max_relative = 1e-12);
        let table = cphi_initial_bounds(&input, r, 1000);
        assert_eq!(table.len(), 1000);
        assert_eq!(table.angle(999), FRAC_PI_2);
        assert_relative_eq!(table.final_bound(), 166.74007125984235, max_relative = 1e-9);
        assert_relative_eq!(table.bound(499), 333.48014251968476, max_relative = 1e-9);
        // Un-floored analytic values, monotone non-increasing.
        assert_ne!(table.final_bound().fract(), 0.0);
        assert!(table.bounds().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn collapsed_moment_bound_yields_trivial_table() {
        let input = formula_input(100, 0.9);
        let table = cphi_initial_bounds(&input, 0.0, 64);
        assert!(table.bounds().iter().all(|&b| b == 100.0));
    }

    #[test]
    fn amplification_chain_divides_by_the_gain() {
        let input = formula_input(1_000_000, 0.256);
        assert_relative_eq!(
            amplification_gain(&input),
            18.61558040611317,
            max_relative = 1e-12
        );
        let r = rho1_lower_bound(input.a());
        let mut table = cphi_initial_bounds(&input, r, 1000);
        // Gap of 98 grid nodes is the smallest with sin(gap) >= 12a here.
        let chain = [499usize, 597, 695, 793, 891, 989];
        for pair in chain.windows(2) {
            let updated = amplify_step(&table, pair[0], pair[1], &input)
                .expect("chain hypotheses hold");
            table.set_bound(pair[1], updated);
        }
        assert_relative_eq!(
            table.bound(989),
            1.4917191715914358e-4,
            max_relative = 1e-9
        );
        // A gap of one node has sin(gap) << 12a: inapplicable, not an error.
        assert_eq!(amplify_step(&table, 499, 500, &input), None);
        // The pi/2 node itself is never a target.
        assert_eq!(amplify_step(&table, 499, 999, &input), None);
    }

    #[test]
    fn edge_comparison_matches_worked_example() {
        let input = formula_input(1_000_000, 0.256);
        let r = rho1_lower_bound(input.a());
        let table = cphi_initial_bounds(&input, r, 1000);
        let updated = edge_comparison_step(&table, 499, 805, &input).unwrap();
        assert_relative_eq!(updated, 8.741667832311878, max_relative = 1e-9);
        // Where both rules apply, the edge comparison is the sharper one.
        let sharp = edge_comparison_step(&table, 499, 597, &input).unwrap();
        let amplified = amplify_step(&table, 499, 597, &input).unwrap();
        assert_relative_eq!(sharp, 9.271977802944653, max_relative = 1e-9);
        assert_relative_eq!(amplified, 17.914034117903366, max_relative = 1e-9);
        assert!(sharp < amplified);
    }

    #[test]
    fn edge_comparison_requires_a_small_source_set() {
        let input = formula_input(1_000_000, 0.256);
        let mut table = cphi_initial_bounds(&input, rho1_lower_bound(input.a()), 1000);
        table.set_bound(499, 600_000.0);
        assert_eq!(edge_comparison_step(&table, 499, 805, &input), None);
    }

    #[test]
    fn refine_certifies_just_above_the_engine_threshold() {
        let opts = RefineOptions::default();
        let (table, result) = refine(&formula_input(1_000_000, 0.0115), &opts);
        assert!(result.certified());
        assert_eq!(result.method, Method::Refine);
        assert_eq!(table.final_bound(), 0.0);
        assert!(result.reason.contains("1 sweep"));
        assert!(result
            .conditions
            .iter()
            .any(|c| c.name == "refine.final_bound_below_one" && c.pass));
    }

    #[test]
    fn refine_stalls_just_below_the_engine_threshold() {
        let opts = RefineOptions::default();
        let (table, result) = refine(&formula_input(1_000_000, 0.0112), &opts);
        assert!(!result.certified());
        assert_eq!(table.final_bound(), 1.0);
        let last = result.conditions.last().unwrap();
        assert_eq!(last.name, "refine.final_bound_below_one");
        assert_eq!(last.lhs, Some(1.0));
        assert!(!last.pass);
    }

    #[test]
    fn refine_rejects_disconnected_and_collapsed_inputs() {
        let opts = RefineOptions::default();
        // norm_l >= np: the connectivity bound fails and the table is trivial.
        let input = CertificateInput {
            n: 100,
            p: 0.01,
            norm_a: 0.5,
            norm_l: 5.0,
            source: NormSource::Exact,
            confidence: 1.0,
        };
        let (table, result) = refine(&input, &opts);
        assert!(!result.certified());
        assert!(table.bounds().iter().all(|&b| b == 100.0));
        assert!(result
            .conditions
            .iter()
            .any(|c| c.name == "refine.laplacian_deviation_below_np" && !c.pass));
        // a >= 1/4 collapses the moment bound.
        let input = CertificateInput {
            n: 100,
            p: 0.5,
            norm_a: 25.0,
            norm_l: 1.0,
            source: NormSource::Exact,
            confidence: 1.0,
        };
        let (_, result) = refine(&input, &opts);
        assert!(!result.certified());
        assert!(result
            .conditions
            .iter()
            .any(|c| c.name == "refine.moment_lower_bound_positive" && !c.pass));
    }

    #[test]
    fn theorem_sides_match_frozen_values() {
        let result = check_theorem(&formula_input(1_000_000, 0.256));
        assert!(result.certified());
        let rounds = result
            .conditions
            .iter()
            .find(|c| c.name == "theorem.rounds_below_angle_budget")
            .unwrap();
        assert_relative_eq!(rounds.lhs.unwrap(), 5.112091541817889, max_relative = 1e-9);
        assert_relative_eq!(rounds.rhs.unwrap(), 5.1151928918421765, max_relative = 1e-9);

        assert!(check_theorem(&formula_input(10_000_000, 0.0475)).certified());

        let result = check_theorem(&formula_input(1_000_000, 0.2));
        assert!(!result.certified());
        let rounds = result
            .conditions
            .iter()
            .find(|c| c.name == "theorem.rounds_below_angle_budget")
            .unwrap();
        assert_relative_eq!(rounds.lhs.unwrap(), 5.365303689855826, max_relative = 1e-9);
        assert_relative_eq!(rounds.rhs.unwrap(), 4.351333573595335, max_relative = 1e-9);

        // a >= 1/12 fails the first gate outright.
        let result = check_theorem(&formula_input(10_000, 0.3));
        assert!(!result.certified());
        assert!(!result.conditions[0].pass);
    }

    #[test]
    fn theorem_with_zero_norms_certifies_with_infinite_budget() {
        let input = CertificateInput {
            n: 50,
            p: 1.0,
            norm_a: 0.0,
            norm_l: 0.0,
            source: NormSource::Exact,
            confidence: 1.0,
        };
        let result = check_theorem(&input);
        assert!(result.certified());
        // budget = (pi/4)/asin(0) is infinite and serializes as None.
        let rounds = result
            .conditions
            .iter()
            .find(|c| c.name == "theorem.rounds_below_angle_budget")
            .unwrap();
        assert_eq!(rounds.rhs, None);
        assert!(rounds.pass);
    }

    #[test]
    fn auto_prefers_the_theorem_and_falls_back_to_refinement() {
        let opts = RefineOptions::default();
        let result = certify(&formula_input(1_000_000, 0.256), CertifyMethod::Auto, &opts);
        assert!(result.certified());
        assert_eq!(result.method, Method::Theorem);

        let result = certify(&formula_input(1_000_000, 0.0115), CertifyMethod::Auto, &opts);
        assert!(result.certified());
        assert_eq!(result.method, Method::Refine);

        let result = certify(&formula_input(1_000_000, 0.0112), CertifyMethod::Auto, &opts);
        assert!(!result.certified());
        assert_eq!(result.method, Method::Refine);
    }

    #[test]
    fn confidence_propagates_from_the_input() {
        let opts = RefineOptions::default();
        let result = certify(&formula_input(1_000_000, 0.256), CertifyMethod::Auto, &opts);
        assert_relative_eq!(result.confidence, 0.999996, max_relative = 1e-12);
    }

    #[test]
    fn threshold_search_matches_frozen_refine_thresholds() {
        let opts = RefineOptions::default();
        for (n, expected) in [
            (10_000, 0.330078125),
            (100_000, 0.072998046875),
            (1_000_000, 0.011444091796875),
            (10_000_000, 0.0016155242919921875),
        ] {
            let result =
                threshold_search(n, NormSource::Formula, 1e-3, CertifyMethod::Refine, &opts)
                    .unwrap();
            assert_relative_eq!(result.p_star, expected, max_relative = 1e-12);
            assert!(result.probes.len() >= 10);
            // The trace must contain a failing probe just below p_star.
            assert!(result
                .probes
                .iter()
                .any(|pr| !pr.certified && pr.p < result.p_star));
        }
    }

    #[test]
    fn threshold_search_matches_frozen_theorem_thresholds() {
        let opts = RefineOptions::default();
        for (n, expected) in [
            (10_000, 0.93798828125),
            (100_000, 0.6929687500000001),
            (1_000_000, 0.255859375),
            (10_000_000, 0.0474853515625),
        ] {
            let result =
                threshold_search(n, NormSource::Formula, 1e-3, CertifyMethod::Theorem, &opts)
                    .unwrap();
            assert_relative_eq!(result.p_star, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn threshold_search_rejects_bad_requests() {
        let opts = RefineOptions::default();
        assert!(matches!(
            threshold_search(7, NormSource::Formula, 1e-3, CertifyMethod::Refine, &opts),
            Err(CertifierError::TooFewVertices(7))
        ));
        assert!(matches!(
            threshold_search(100, NormSource::Exact, 1e-3, CertifyMethod::Refine, &opts),
            Err(CertifierError::UnsupportedNormSource(_))
        ));
        assert!(matches!(
            threshold_search(100, NormSource::Formula, 0.0, CertifyMethod::Refine, &opts),
            Err(CertifierError::InvalidTolerance(_))
        ));
        // n = 8 is too sparse-friendly for any formula certificate.
        assert!(matches!(
            threshold_search(8, NormSource::Formula, 1e-3, CertifyMethod::Refine, &opts),
            Err(CertifierError::NoCertifiableP(8))
        ));
    }
}
