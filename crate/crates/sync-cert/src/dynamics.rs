//! Time evolution of identical phase oscillators and empirical validation of
//! the stable-equilibrium inequalities the certifier reasons from.
//!
//! The system is the gradient flow `dθ_j/dt = Σ_k A_jk sin(θ_k − θ_j)` of the
//! energy `E(θ) = −½·Σ_{j,k} A_jk cos(θ_k − θ_j)`, so every trajectory runs
//! downhill in `E` and every attractor is an equilibrium. Self-loops
//! contribute `sin(0) = 0` to the flow and a constant to the energy; they are
//! carried along because the spectral reference model stores them, but they
//! never move a phase.
//!
//! The module provides a deterministic fixed-step integrator
//! ([`integrate`]), order parameters ([`moments`]), stray-set extraction
//! ([`c_phi`]), a Hessian-based stability verdict ([`hessian_stability`]),
//! and [`stable_equilibrium_inequality_suite`], which evaluates at an actual
//! equilibrium every inequality the certificate chain assumes about *all*
//! stable equilibria. A failed suite would falsify the chain; a passing suite
//! is supporting evidence only. Simulation can never prove global
//! synchronization — stable non-synchronous equilibria may have minuscule
//! basins that random initial conditions miss — so verdicts about *every*
//! equilibrium belong to [`crate::certifier`], not here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::spectral::{SpectralEstimates, DENSE_THRESHOLD};

/// Residual ceiling under which a state is treated as an equilibrium by the
/// Hessian test and the inequality suite.
pub const EQUILIBRIUM_RESIDUAL: f64 = 1e-8;

/// Default slack on the restricted Hessian eigenvalue: eigenvalues above
/// `−STABILITY_TOL` count as stable. Separates the genuinely flat global
/// rotation direction (projected out exactly) from eigensolver noise.
pub const STABILITY_TOL: f64 = 1e-8;

/// Below this first-moment magnitude the canonical frame is numerically
/// undefined and frame-dependent checks are skipped rather than evaluated.
const DEGENERATE_RHO1: f64 = 1e-8;

/// Per-vertex slack applied to every inequality in the suite.
const SUITE_SLACK_PER_VERTEX: f64 = 1e-6;

/// Number of grid angles in `(0, π/2]` used by the suite's angle sweeps.
const SUITE_GRID: usize = 16;

/// Errors from state construction, integration, and equilibrium analysis.
#[derive(Debug, Error)]
pub enum DynamicsError {
    /// A phase state needs at least one oscillator.
    #[error("a phase state needs at least one oscillator")]
    EmptyState,
    /// Phases must be finite reals.
    #[error("phase {index} is not finite: {value}")]
    NonFinitePhase { index: usize, value: f64 },
    /// The state and the graph disagree on the number of oscillators.
    #[error("state has {state} phases but the graph has {graph} vertices")]
    LengthMismatch { state: usize, graph: usize },
    /// An integration option was nonpositive or not finite.
    #[error("integration option `{name}` must be positive and finite, got {value}")]
    InvalidOption { name: &'static str, value: f64 },
    /// The suite's reference probability lives in `(0, 1]`.
    #[error("reference probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    /// An operation that assumes an equilibrium was called away from one.
    #[error("state is not an equilibrium: residual {residual} exceeds {limit}")]
    NotAnEquilibrium { residual: f64, limit: f64 },
    /// The inequality suite applies only to stable equilibria.
    #[error("the inequality suite applies only to stable equilibria")]
    UnstableEquilibrium,
    /// The Hessian analysis is dense and refuses oversized graphs.
    #[error("dense Hessian analysis limited to n <= {threshold}, got {n}")]
    DenseTooLarge { n: usize, threshold: usize },
}

/// Phases of `n` oscillators, stored wrapped to `[−π, π)`.
///
/// The `canonical` flag records whether the global rotation freedom has been
/// spent: after [`PhaseState::canonicalized`] the first moment `ρ₁` is real
/// and nonnegative (`|Im ρ₁| ≤ 10⁻¹²`), which is the frame every stray-set
/// quantity is defined in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseStateRepr", into = "PhaseStateRepr")]
pub struct PhaseState {
    theta: Vec<f64>,
    canonical: bool,
}

/// Serialization shape of [`PhaseState`]; deserialization re-validates the
/// wrapping invariant instead of trusting the input.
#[derive(Serialize, Deserialize)]
struct PhaseStateRepr {
    theta: Vec<f64>,
    canonical: bool,
}

impl From<PhaseState> for PhaseStateRepr {
    fn from(state: PhaseState) -> Self {
        PhaseStateRepr { theta: state.theta, canonical: state.canonical }
    }
}

impl TryFrom<PhaseStateRepr> for PhaseState {
    type Error = String;

    fn try_from(repr: PhaseStateRepr) -> Result<Self, Self::Error> {
        if repr.theta.is_empty() {
            return Err("a phase state needs at least one oscillator".into());
        }
        for (index, &value) in repr.theta.iter().enumerate() {
            if !value.is_finite() || !(-PI..PI).contains(&value) {
                return Err(format!("phase {index} out of [-pi, pi): {value}"));
            }
        }
        Ok(PhaseState { theta: repr.theta, canonical: repr.canonical })
    }
}

/// Wraps an angle into `[−π, π)`. Exact at the seam: `π` maps to `−π`.
fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

impl PhaseState {
    /// Wraps arbitrary finite phases into `[−π, π)`.
    pub fn new(theta: Vec<f64>) -> Result<Self, DynamicsError> {
        if theta.is_empty() {
            return Err(DynamicsError::EmptyState);
        }
        for (index, &value) in theta.iter().enumerate() {
            if !value.is_finite() {
                return Err(DynamicsError::NonFinitePhase { index, value });
            }
        }
        let theta = theta.into_iter().map(wrap_angle).collect();
        Ok(PhaseState { theta, canonical: false })
    }

    /// The all-in-phase state `θ = 0`. Already canonical (`ρ₁ = 1`).
    pub fn in_phase(n: usize) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::EmptyState);
        }
        Ok(PhaseState { theta: vec![0.0; n], canonical: true })
    }

    /// Independent uniform phases on `[−π, π)`.
    ///
    /// `seed` selects the generator; `stream` selects one of 2⁶⁴ independent
    /// sequences per seed, so parallel trials can share a seed without
    /// sharing randomness.
    pub fn random(n: usize, seed: u64, stream: u64) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::EmptyState);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let theta = (0..n).map(|_| rng.random::<f64>() * TAU - PI).collect();
        Ok(PhaseState { theta, canonical: false })
    }

    /// The twisted state `θ_j = 2π·winding·j/n`, wrapped.
    ///
    /// On a cycle graph this is an equilibrium for every winding number; it
    /// is the standard witness that sparse topologies admit stable states
    /// other than all-in-phase.
    pub fn twisted(n: usize, winding: i64) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::EmptyState);
        }
        let m = winding.rem_euclid(n as i64) as u64;
        let theta = (0..n)
            .map(|j| wrap_angle(TAU * ((m * j as u64) % n as u64) as f64 / n as f64))
            .collect();
        Ok(PhaseState { theta, canonical: false })
    }

    /// Number of oscillators.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    /// Always false: states have at least one oscillator by construction.
    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// The wrapped phases.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Whether the canonical rotation has been applied.
    pub fn canonical(&self) -> bool {
        self.canonical
    }

    /// Shifts every phase by `psi` (wrapped). Clears the canonical flag.
    pub fn rotate(&self, psi: f64) -> Self {
        assert!(psi.is_finite(), "rotation angle must be finite");
        let theta = self.theta.iter().map(|&t| wrap_angle(t + psi)).collect();
        PhaseState { theta, canonical: false }
    }

    /// Rotates so that `ρ₁` is real and nonnegative and marks the state
    /// canonical.
    ///
    /// When `ρ₁ = 0` exactly the rotation is the identity; the frame is then
    /// arbitrary, which is why frame-dependent checks skip such states (see
    /// [`stable_equilibrium_inequality_suite`]).
    pub fn canonicalized(&self) -> Self {
        let psi = moments(self).rho1.arg();
        let mut state = self.rotate(-psi);
        state.canonical = true;
        state
    }
}

/// First and second order parameters `ρ_m = (1/n)·Σ_j e^{i·m·θ_j}`.
///
/// Both magnitudes are at most 1; `|ρ₁| = 1` exactly at phase-locked states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    /// Mean of `e^{iθ_j}`.
    pub rho1: Complex64,
    /// Mean of `e^{2iθ_j}`.
    pub rho2: Complex64,
}

/// Computes both order parameters in one pass (the second via double-angle
/// identities, so each phase costs one `sin_cos`).
///
/// ```
/// use std::f64::consts::PI;
/// use sync_cert::dynamics::{moments, PhaseState};
///
/// let antipodal = PhaseState::new(vec![0.0, PI]).unwrap();
/// let m = moments(&antipodal);
/// assert!(m.rho1.norm() < 1e-15);
/// assert!((m.rho2.re - 1.0).abs() < 1e-15);
/// ```
pub fn moments(state: &PhaseState) -> Moments {
    let n = state.len() as f64;
    let (mut c1, mut s1, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for &t in state.theta() {
        let (s, c) = t.sin_cos();
        c1 += c;
        s1 += s;
        c2 += c * c - s * s;
        s2 += 2.0 * s * c;
    }
    Moments {
        rho1: Complex64::new(c1 / n, s1 / n),
        rho2: Complex64::new(c2 / n, s2 / n),
    }
}

/// The stray set `C_φ = {k : cos θ_k ≤ cos φ}`: oscillators at angular
/// distance at least `φ` from the zero direction.
///
/// Meaningful for `φ ∈ [0, π]` and in the canonical frame (rotate first so
/// `ρ₁` is real and nonnegative; this function does not enforce the frame).
/// `φ = 0` returns every vertex since `cos θ ≤ 1` always; `C_{π/2}` empty
/// means all phases lie strictly inside an open half-circle.
pub fn c_phi(state: &PhaseState, phi: f64) -> VertexSet {
    let threshold = phi.cos();
    VertexSet::from_indices(
        state
            .theta()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t.cos() <= threshold)
            .map(|(k, _)| k),
    )
}

/// The comparison kernel from the stable-equilibrium edge argument:
/// `sin(|α| − |β|)` when both magnitudes are at most `π/2`, `−cos α` when
/// only `|β|` exceeds `π/2`, and `1` when `|α|` does.
///
/// At every stable equilibrium, every row sum `Σ_j A_jk·K(θ_j, θ_k)` is
/// nonnegative; that single fact drives the edge-comparison bound the
/// refinement engine uses.
///
/// ```
/// use sync_cert::dynamics::kernel_K;
///
/// assert_eq!(kernel_K(2.0, 0.1), 1.0);
/// assert_eq!(kernel_K(std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4), 0.0);
/// assert!((kernel_K(0.3, 3.0) + 0.3f64.cos()).abs() < 1e-15);
/// ```
#[allow(non_snake_case)]
pub fn kernel_K(alpha: f64, beta: f64) -> f64 {
    if alpha.abs() > FRAC_PI_2 {
        1.0
    } else if beta.abs() > FRAC_PI_2 {
        -alpha.cos()
    } else {
        (alpha.abs() - beta.abs()).sin()
    }
}

/// Scratch buffers so the integrator's inner loop allocates nothing.
struct Workspace {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { sin: vec![0.0; n], cos: vec![0.0; n] }
    }

    fn fill(&mut self, theta: &[f64]) {
        for (j, &t) in theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            self.sin[j] = s;
            self.cos[j] = c;
        }
    }
}

/// Flow right-hand side into `out`:
/// `out_j = Σ_k A_jk sin(θ_k − θ_j) = cos θ_j·(A sin θ)_j − sin θ_j·(A cos θ)_j`.
#[allow(clippy::needless_range_loop)] // j is a vertex id, not a slice cursor
fn velocities_into(g: &Graph, theta: &[f64], ws: &mut Workspace, out: &mut [f64]) {
    ws.fill(theta);
    for j in 0..g.n() {
        let (mut asum, mut csum) = (0.0, 0.0);
        for &k in g.neighbors(j) {
            asum += ws.sin[k as usize];
            csum += ws.cos[k as usize];
        }
        out[j] = ws.cos[j] * asum - ws.sin[j] * csum;
    }
}

fn energy_of(g: &Graph, theta: &[f64], ws: &mut Workspace) -> f64 {
    ws.fill(theta);
    let mut sum = 0.0;
    for j in 0..g.n() {
        let (mut asum, mut csum) = (0.0, 0.0);
        for &k in g.neighbors(j) {
            asum += ws.sin[k as usize];
            csum += ws.cos[k as usize];
        }
        sum += ws.cos[j] * csum + ws.sin[j] * asum;
    }
    -0.5 * sum
}

fn check_lengths(g: &Graph, state: &PhaseState) -> Result<(), DynamicsError> {
    if state.len() != g.n() {
        return Err(DynamicsError::LengthMismatch { state: state.len(), graph: g.n() });
    }
    Ok(())
}

/// The flow velocities `dθ_j/dt = Σ_k A_jk sin(θ_k − θ_j)` at `state`.
///
/// This is exactly `−∇E` for the energy `E(θ) = −½·Σ_{j,k} A_jk cos(θ_k−θ_j)`.
pub fn phase_velocities(g: &Graph, state: &PhaseState) -> Result<Vec<f64>, DynamicsError> {
    check_lengths(g, state)?;
    let mut ws = Workspace::new(g.n());
    let mut out = vec![0.0; g.n()];
    velocities_into(g, state.theta(), &mut ws, &mut out);
    Ok(out)
}

/// The equilibrium residual `max_j |Σ_k A_jk sin(θ_k − θ_j)|`.
pub fn residual(g: &Graph, state: &PhaseState) -> Result<f64, DynamicsError> {
    let v = phase_velocities(g, state)?;
    Ok(v.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs())))
}

/// The energy `E(θ) = −½·Σ_{j,k} A_jk cos(θ_k − θ_j)` the flow descends.
pub fn energy(g: &Graph, state: &PhaseState) -> Result<f64, DynamicsError> {
    check_lengths(g, state)?;
    let mut ws = Workspace::new(g.n());
    Ok(energy_of(g, state.theta(), &mut ws))
}

/// Options for [`integrate`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Fixed step size; `None` picks `0.5 / max_degree`, which keeps the
    /// classical Runge–Kutta scheme stable for this bounded right-hand side.
    pub step: Option<f64>,
    /// Stop once `max_j |dθ_j/dt|` drops below this.
    pub residual_tol: f64,
    /// Give up (with `converged = false`) after this much simulated time.
    pub max_time: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { step: None, residual_tol: 1e-10, max_time: 1000.0 }
    }
}

/// What the integrator found at the end of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    /// Final state, canonicalized.
    pub state: PhaseState,
    /// `max_j |Σ_k A_jk sin(θ_k − θ_j)|` at the final state.
    pub residual: f64,
    /// Whether the residual tolerance was reached before `max_time`.
    pub converged: bool,
    /// Hessian verdict. Only ever true when the residual is at or below
    /// [`EQUILIBRIUM_RESIDUAL`] and the graph fits the dense eigensolve.
    pub stable: bool,
    /// Smallest Hessian eigenvalue orthogonal to the global rotation, when
    /// the stability test ran (see [`hessian_stability`]).
    pub hessian_second_eigenvalue: Option<f64>,
    /// Accepted integration steps.
    pub steps: usize,
    /// Energy at the final state.
    pub energy: f64,
    /// Largest single-step energy increase observed, clamped at zero. The
    /// flow is a gradient descent, so this should never exceed integrator
    /// noise (about 10⁻⁹ per step).
    pub max_energy_increase: f64,
}

/// Runs the oscillator flow from `theta0` with the classical fixed-step
/// fourth-order Runge–Kutta scheme until the residual drops below
/// `opts.residual_tol` or `opts.max_time` is exhausted.
///
/// The report's state is canonicalized. When the final residual is at or
/// below [`EQUILIBRIUM_RESIDUAL`] and `n` fits the dense threshold, the
/// Hessian stability test classifies the endpoint; otherwise `stable` stays
/// false and no eigenvalue is reported. Non-convergence is not an error —
/// the report simply says `converged: false`.
///
/// ```
/// use sync_cert::dynamics::{integrate, moments, IntegrateOptions, PhaseState};
/// use sync_cert::graph::Graph;
///
/// let g = Graph::sample_er(60, 0.4, 7).unwrap();
/// let start = PhaseState::random(60, 7, 0).unwrap();
/// let report = integrate(&g, &start, IntegrateOptions::default()).unwrap();
/// assert!(report.converged);
/// assert!(moments(&report.state).rho1.re > 0.9999);
/// ```
pub fn integrate(
    g: &Graph,
    theta0: &PhaseState,
    opts: IntegrateOptions,
) -> Result<EquilibriumReport, DynamicsError> {
    check_lengths(g, theta0)?;
    if let Some(h) = opts.step {
        if !(h.is_finite() && h > 0.0) {
            return Err(DynamicsError::InvalidOption { name: "step", value: h });
        }
    }
    if !(opts.residual_tol.is_finite() && opts.residual_tol > 0.0) {
        return Err(DynamicsError::InvalidOption {
            name: "residual_tol",
            value: opts.residual_tol,
        });
    }
    if !(opts.max_time.is_finite() && opts.max_time >= 0.0) {
        return Err(DynamicsError::InvalidOption { name: "max_time", value: opts.max_time });
    }

    let n = g.n();
    let h = opts.step.unwrap_or(0.5 / g.max_degree().max(1) as f64);
    let mut ws = Workspace::new(n);
    let mut theta = theta0.theta().to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];

    let mut time = 0.0;
    let mut steps = 0usize;
    let mut prev_energy = energy_of(g, &theta, &mut ws);
    let mut max_energy_increase = 0.0f64;
    let mut converged = false;

    loop {
        velocities_into(g, &theta, &mut ws, &mut k1);
        let res = k1.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()));
        if res < opts.residual_tol {
            converged = true;
            break;
        }
        if time >= opts.max_time {
            break;
        }
        for j in 0..n {
            stage[j] = theta[j] + 0.5 * h * k1[j];
        }
        velocities_into(g, &stage, &mut ws, &mut k2);
        for j in 0..n {
            stage[j] = theta[j] + 0.5 * h * k2[j];
        }
        velocities_into(g, &stage, &mut ws, &mut k3);
        for j in 0..n {
            stage[j] = theta[j] + h * k3[j];
        }
        velocities_into(g, &stage, &mut ws, &mut k4);
        for j in 0..n {
            theta[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        steps += 1;
        time += h;
        let e = energy_of(g, &theta, &mut ws);
        max_energy_increase = max_energy_increase.max(e - prev_energy);
        prev_energy = e;
    }

    let state = PhaseState::new(theta).expect("integrator preserves finiteness")
        .canonicalized();
    let final_residual = residual(g, &state)?;
    let (stable, eigenvalue) =
        if final_residual <= EQUILIBRIUM_RESIDUAL && n <= DENSE_THRESHOLD {
            let (stable, lambda) = hessian_stability(g, &state, STABILITY_TOL)?;
            (stable, Some(lambda))
        } else {
            (false, None)
        };

    Ok(EquilibriumReport {
        state,
        residual: final_residual,
        converged,
        stable,
        hessian_second_eigenvalue: eigenvalue,
        steps,
        energy: prev_energy,
        max_energy_increase,
    })
}

/// The energy Hessian used by the stability test: `H_jk = −A_jk cos(θ_k−θ_j)`
/// off the diagonal and `H_jj = Σ_k A_jk cos(θ_k−θ_j)` (all `k`, so a
/// self-loop adds `+A_jj`) on it.
///
/// At the all-in-phase state of a loop-free graph this is exactly the graph
/// Laplacian.
pub fn hessian(g: &Graph, state: &PhaseState) -> Result<DMatrix<f64>, DynamicsError> {
    check_lengths(g, state)?;
    let n = g.n();
    if n > DENSE_THRESHOLD {
        return Err(DynamicsError::DenseTooLarge { n, threshold: DENSE_THRESHOLD });
    }
    let theta = state.theta();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = 0.0;
        for &k in g.neighbors(j) {
            let k = k as usize;
            let c = (theta[k] - theta[j]).cos();
            diag += c;
            if k != j {
                h[(j, k)] = -c;
            }
        }
        h[(j, j)] = diag;
    }
    Ok(h)
}

/// Classifies an equilibrium by the smallest Hessian eigenvalue orthogonal
/// to the global rotation direction `𝟙`.
///
/// Returns `(stable, eigenvalue)` where `stable` means the eigenvalue is at
/// least `−tol`. The rotation direction itself is projected out exactly —
/// the eigenvalue reported is `min { wᵀHw : ‖w‖ = 1, w ⊥ 𝟙 }`, computed by
/// pushing the `𝟙` direction above the spectrum with a rank-one shift. At
/// the all-in-phase state of a connected loop-free graph this is the
/// algebraic connectivity. A single oscillator has no transverse directions
/// and reports `(true, +∞)`.
///
/// Errors when the state's residual exceeds [`EQUILIBRIUM_RESIDUAL`]:
/// stability is a property of equilibria only.
pub fn hessian_stability(
    g: &Graph,
    state: &PhaseState,
    tol: f64,
) -> Result<(bool, f64), DynamicsError> {
    check_lengths(g, state)?;
    let res = residual(g, state)?;
    if res > EQUILIBRIUM_RESIDUAL {
        return Err(DynamicsError::NotAnEquilibrium {
            residual: res,
            limit: EQUILIBRIUM_RESIDUAL,
        });
    }
    let n = g.n();
    if n == 1 {
        return Ok((true, f64::INFINITY));
    }
    let h = hessian(g, state)?;

    // Spectral radius bound so the rank-one shift clears the whole spectrum.
    let mut gershgorin = 0.0f64;
    for j in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            row += h[(j, k)].abs();
        }
        gershgorin = gershgorin.max(row);
    }
    let shift = gershgorin + 1.0;

    // M = P H P + shift·𝟙𝟙ᵀ/n with P = I − 𝟙𝟙ᵀ/n, assembled from H plus
    // rank-one corrections: M_jk = H_jk − (r_j + r_k)/n + s/n² + shift/n,
    // where r = H𝟙 and s = 𝟙ᵀH𝟙. Its smallest eigenvalue is the restricted
    // minimum because the 𝟙 direction sits at `shift`, above everything.
    let nf = n as f64;
    let r: Vec<f64> = (0..n).map(|j| (0..n).map(|k| h[(j, k)]).sum()).collect();
    let s: f64 = r.iter().sum();
    let mut m = h;
    for j in 0..n {
        for k in 0..n {
            m[(j, k)] += -(r[j] + r[k]) / nf + s / (nf * nf) + shift / nf;
        }
    }
    let eigenvalues = m.symmetric_eigenvalues();
    let lambda = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((lambda >= -tol, lambda))
}

/// One inequality from the suite, reported at its worst case over the
/// quantified family (rows, angle pairs, or grid angles).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    /// Stable identifier, `suite.*`.
    pub name: String,
    /// Left side at the worst case.
    pub lhs: f64,
    /// Right side at the worst case.
    pub rhs: f64,
    /// Whether the inequality held everywhere (within the suite slack).
    pub pass: bool,
    /// True when the check was skipped because the canonical frame is
    /// degenerate (`ρ₁ ≈ 0`); `pass` is vacuously true then.
    pub skipped: bool,
}

/// Outcome of [`stable_equilibrium_inequality_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySuite {
    /// The five checks, in a fixed order.
    pub checks: Vec<SuiteCheck>,
    /// Absolute slack `10⁻⁶·n` granted to every comparison.
    pub slack: f64,
    /// First-moment magnitude of the canonicalized state.
    pub rho1: f64,
    /// True when `ρ₁ ≈ 0` forced the frame-dependent checks to be skipped.
    pub frame_degenerate: bool,
    /// Conjunction of all `pass` flags.
    pub all_pass: bool,
}

/// Evaluates, at one concrete stable equilibrium, every inequality the
/// certificate chain assumes about all stable equilibria:
///
/// (a) every kernel row sum `Σ_j A_jk·K(θ_j, θ_k)` is nonnegative;
/// (b) for grid pairs `0 < α < β < π/2`, internal stray edges dominate:
///     `E(C_β, C_β) ≥ sin(β−α)·E(C_β, complement of C_α)`;
/// (c) `‖Δ_A q_θ‖² ≥ n²p²ρ₁²·(Σ_j sin²θ_j + Σ_{cos θ_j ≤ 0} cos²θ_j)`;
/// (d) `|C_φ| ≤ ‖Δ_A‖²/(n·p²·ρ₁²·sin²φ)` on a grid of angles in `(0, π/2]`;
/// (e) `ρ₁² ≥ (1 + |ρ₂|²)/2 − 2‖Δ_A‖/(np)`.
///
/// Every comparison gets an absolute slack of `10⁻⁶·n`. The state is
/// canonicalized first; when its first moment is numerically zero the
/// frame-dependent checks (b) and (d) are skipped and flagged instead of
/// evaluated in an arbitrary frame. `p` is the reference probability the
/// shifted matrices (and `norms`) were built with.
///
/// A failure here at a genuine stable equilibrium would falsify the
/// analytical chain — that is the point of running it wherever equilibria
/// are found.
pub fn stable_equilibrium_inequality_suite(
    g: &Graph,
    report: &EquilibriumReport,
    p: f64,
    norms: &SpectralEstimates,
) -> Result<InequalitySuite, DynamicsError> {
    check_lengths(g, &report.state)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(DynamicsError::InvalidProbability(p));
    }
    if report.residual > EQUILIBRIUM_RESIDUAL {
        return Err(DynamicsError::NotAnEquilibrium {
            residual: report.residual,
            limit: EQUILIBRIUM_RESIDUAL,
        });
    }
    if !report.stable {
        return Err(DynamicsError::UnstableEquilibrium);
    }

    let n = g.n();
    let nf = n as f64;
    let slack = SUITE_SLACK_PER_VERTEX * nf;
    let state = report.state.canonicalized();
    let theta = state.theta();
    let mom = moments(&state);
    let rho1 = mom.rho1.re.max(0.0);
    let frame_degenerate = rho1 < DEGENERATE_RHO1;
    let mut checks = Vec::with_capacity(5);

    // (a) Kernel row sums: worst row over all vertices.
    let mut worst_row = f64::INFINITY;
    for k in 0..n {
        let sum: f64 = g
            .neighbors(k)
            .iter()
            .map(|&j| kernel_K(theta[j as usize], theta[k]))
            .sum();
        worst_row = worst_row.min(sum);
    }
    checks.push(SuiteCheck {
        name: "suite.kernel_row_sums".into(),
        lhs: worst_row,
        rhs: 0.0,
        pass: worst_row >= -slack,
        skipped: false,
    });

    // (b) Edge comparison over grid pairs 0 < α < β < π/2.
    let grid_angle = |i: usize| (i + 1) as f64 / SUITE_GRID as f64 * FRAC_PI_2;
    if frame_degenerate {
        checks.push(SuiteCheck {
            name: "suite.edge_comparison".into(),
            lhs: 0.0,
            rhs: 0.0,
            pass: true,
            skipped: true,
        });
    } else {
        let mut worst = (f64::INFINITY, 0.0, 0.0);
        for ia in 0..SUITE_GRID - 1 {
            let alpha = grid_angle(ia);
            let outside_alpha = c_phi(&state, alpha).complement(n);
            for ib in ia + 1..SUITE_GRID - 1 {
                let beta = grid_angle(ib);
                let c_beta = c_phi(&state, beta);
                let internal =
                    crate::graph::edge_count(g, &c_beta, &c_beta).expect("sets in range") as f64;
                let escaping = crate::graph::edge_count(g, &c_beta, &outside_alpha)
                    .expect("sets in range") as f64;
                let rhs = (beta - alpha).sin() * escaping;
                if internal - rhs < worst.0 {
                    worst = (internal - rhs, internal, rhs);
                }
            }
        }
        checks.push(SuiteCheck {
            name: "suite.edge_comparison".into(),
            lhs: worst.1,
            rhs: worst.2,
            pass: worst.0 >= -slack,
            skipped: false,
        });
    }

    // (c) Image of the phase vector under Δ_A against the stray sines.
    let mut ws = Workspace::new(n);
    ws.fill(theta);
    let (sum_c, sum_s) = (ws.cos.iter().sum::<f64>(), ws.sin.iter().sum::<f64>());
    let mut image_sq = 0.0;
    for j in 0..n {
        let (mut ac, mut asv) = (0.0, 0.0);
        for &k in g.neighbors(j) {
            ac += ws.cos[k as usize];
            asv += ws.sin[k as usize];
        }
        let re = ac - p * sum_c;
        let im = asv - p * sum_s;
        image_sq += re * re + im * im;
    }
    let mut sines = 0.0;
    for j in 0..n {
        sines += ws.sin[j] * ws.sin[j];
        if ws.cos[j] <= 0.0 {
            sines += ws.cos[j] * ws.cos[j];
        }
    }
    let rhs_c = nf * nf * p * p * rho1 * rho1 * sines;
    checks.push(SuiteCheck {
        name: "suite.deviation_image_bound".into(),
        lhs: image_sq,
        rhs: rhs_c,
        pass: image_sq >= rhs_c - slack,
        skipped: false,
    });

    // (d) Stray-set counts against the first-moment bound on a φ-grid.
    if frame_degenerate {
        checks.push(SuiteCheck {
            name: "suite.stray_set_bound".into(),
            lhs: 0.0,
            rhs: 0.0,
            pass: true,
            skipped: true,
        });
    } else {
        let norm_a_sq = norms.norm_a * norms.norm_a;
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..SUITE_GRID {
            let phi = grid_angle(i);
            let count = c_phi(&state, phi).len() as f64;
            let bound = norm_a_sq / (nf * p * p * rho1 * rho1 * phi.sin() * phi.sin());
            if count - bound > worst.0 {
                worst = (count - bound, count, bound);
            }
        }
        checks.push(SuiteCheck {
            name: "suite.stray_set_bound".into(),
            lhs: worst.1,
            rhs: worst.2,
            pass: worst.0 <= slack,
            skipped: false,
        });
    }

    // (e) First-moment inequality with the supplied norm bound.
    let rhs_e = (1.0 + mom.rho2.norm_sqr()) / 2.0 - 2.0 * norms.norm_a / (nf * p);
    checks.push(SuiteCheck {
        name: "suite.moment_bound".into(),
        lhs: rho1 * rho1,
        rhs: rhs_e,
        pass: rho1 * rho1 >= rhs_e - slack,
        skipped: false,
    });

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(InequalitySuite { checks, slack, rho1, frame_degenerate, all_pass })
}
