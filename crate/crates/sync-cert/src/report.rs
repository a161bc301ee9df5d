//! Versioned report envelopes and their flat CSV projections.
//!
//! Every command emits one [`Envelope`]: a schema tag, the command name, and
//! a typed payload. JSON is the canonical format — it is lossless and every
//! serialized envelope re-parses into an equal structure. CSV is a
//! deliberately lossy convenience projection: one `#`-prefixed metadata line
//! followed by the payload's main table, for spreadsheets and plotting
//! scripts that do not want to walk nested JSON.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::certifier::{CertificateInput, CertificationResult, CphiBoundTable, ThresholdResult};
use crate::graph::Graph;
use crate::spectral::{NormMethod, SpectralEstimates};

/// Version tag stamped on every envelope. Bump on any breaking change to the
/// payload shapes.
pub const SCHEMA_VERSION: &str = "v1";

/// Wrapper around every serialized report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    /// Schema version, currently `"v1"`.
    pub schema: String,
    /// Which subcommand produced the payload.
    pub command: String,
    /// The report itself.
    pub payload: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, payload: T) -> Self {
        Envelope {
            schema: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            payload,
        }
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only serializable values")
    }
}

/// Payloads that can flatten themselves into the CSV projection.
pub trait TabularReport {
    /// One `#` metadata line, a header row, then data rows.
    fn csv(&self) -> String;
}

/// Cheap shape facts about an explicit graph, echoed into reports so a
/// result can be sanity-checked without reloading the edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    /// Unordered edges plus self-loops, each counted once.
    pub edges: u64,
    /// `(Σ_jk A_jk)/n²`, the density used by `--p auto`.
    pub density: f64,
    pub max_degree: usize,
    pub connected: bool,
}

impl GraphSummary {
    pub fn of(g: &Graph) -> Self {
        GraphSummary {
            n: g.n(),
            edges: g.edge_count_total(),
            density: g.density(),
            max_degree: g.max_degree(),
            connected: g.is_connected(),
        }
    }
}

/// Report of one certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyPayload {
    /// The numbers the verdict was computed from.
    pub input: CertificateInput,
    /// Shape facts when the norms came from an explicit graph.
    pub graph: Option<GraphSummary>,
    pub result: CertificationResult,
    /// Final stray-set bound table, when requested and the refinement engine
    /// produced the verdict.
    pub table: Option<CphiBoundTable>,
}

impl TabularReport for CertifyPayload {
    fn csv(&self) -> String {
        let mut out = format!(
            "# verdict={:?} method={:?} n={} p={} confidence={}\n",
            self.result.verdict, self.result.method, self.input.n, self.input.p,
            self.result.confidence
        );
        out.push_str("condition,lhs,rhs,pass\n");
        for c in &self.result.conditions {
            let side = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", c.name, side(c.lhs), side(c.rhs), c.pass);
        }
        out
    }
}

/// Report of one threshold search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPayload {
    pub result: ThresholdResult,
}

impl TabularReport for ThresholdPayload {
    fn csv(&self) -> String {
        let r = &self.result;
        let mut out = format!(
            "# n={} p_star={} tol_p={} method={:?}\n",
            r.n, r.p_star, r.tol_p, r.method
        );
        out.push_str("p,certified\n");
        for probe in &r.probes {
            let _ = writeln!(out, "{},{}", probe.p, probe.certified);
        }
        out
    }
}

/// One integration trial inside a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Generator seed shared by the whole run.
    pub seed: u64,
    /// Generator stream: the trial index, so trials are independent yet the
    /// whole run replays from `(seed, config)`.
    pub stream: u64,
    pub converged: bool,
    pub steps: usize,
    pub residual: f64,
    /// First-moment magnitude of the final state.
    pub rho1: f64,
    pub stable: bool,
    pub hessian_second_eigenvalue: Option<f64>,
    /// Verdict of the stable-equilibrium inequality suite; `None` when the
    /// suite did not run (endpoint not stable, or suite disabled).
    pub suite_pass: Option<bool>,
}

/// Aggregates over a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub trials: usize,
    pub converged: usize,
    pub stable: usize,
    pub suites_run: usize,
    pub suites_passed: usize,
    pub min_rho1: f64,
    pub max_rho1: f64,
}

/// Report of a simulation run: many random starts on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatePayload {
    pub graph: GraphSummary,
    /// Reference probability used by the inequality suite.
    pub p: f64,
    pub seed: u64,
    /// Norm bounds behind the suite, when it ran.
    pub norms: Option<SpectralEstimates>,
    pub records: Vec<TrialRecord>,
    pub summary: SimulateSummary,
}

impl TabularReport for SimulatePayload {
    fn csv(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "# n={} p={} seed={} trials={} converged={} stable={} suites_passed={}/{}\n",
            self.graph.n, self.p, self.seed, s.trials, s.converged, s.stable,
            s.suites_passed, s.suites_run
        );
        out.push_str("trial,seed,stream,converged,steps,residual,rho1,stable,suite_pass\n");
        for r in &self.records {
            let suite = r.suite_pass.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.trial, r.seed, r.stream, r.converged, r.steps, r.residual, r.rho1, r.stable,
                suite
            );
        }
        out
    }
}

/// Report of a norm-bound computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPayload {
    pub estimates: SpectralEstimates,
    /// Eigensolver route for explicit graphs; `None` for the formula.
    pub method: Option<NormMethod>,
    pub graph: Option<GraphSummary>,
}

impl TabularReport for SpectralPayload {
    fn csv(&self) -> String {
        let e = &self.estimates;
        let mut out = format!("# source={:?}\n", e.source);
        out.push_str("n,p,norm_a,norm_l,confidence\n");
        let _ = writeln!(out, "{},{},{},{},{}", e.n, e.p, e.norm_a, e.norm_l, e.confidence);
        out
    }
}

/// One row of the threshold table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub p_star: f64,
    /// Previously reported threshold for this size, when one exists for the
    /// chosen method.
    pub reference: Option<f64>,
    /// `p_star / reference`.
    pub ratio: Option<f64>,
    /// Number of certification probes the search spent.
    pub probes: usize,
}

/// Report of a full table reproduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePayload {
    pub rows: Vec<TableRow>,
    /// Scope statement: what this search does and does not reproduce.
    pub note: String,
}

impl TabularReport for TablePayload {
    fn csv(&self) -> String {
        let mut out = format!("# rows={}\n", self.rows.len());
        out.push_str("n,p_star,reference,ratio,probes\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n, r.p_star, opt(r.reference), opt(r.ratio), r.probes
            );
        }
        out
    }
}
