//! Undirected 0/1 graphs with optional self-loops: construction, reproducible
//! Erdős–Rényi sampling, exact subset edge counts, and edge-list file I/O.
//!
//! Vertices are indexed `0..n`. The adjacency structure is symmetric and kept
//! as sorted neighbor lists; a self-loop on vertex `j` is stored once in
//! `neighbors(j)` and contributes exactly 1 to `degree(j)`. That row-sum
//! convention is what makes the graph Laplacian `L = D - A` annihilate the
//! all-ones vector, and it is relied on throughout the spectral and
//! certification code.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Errors from graph construction, validation, and edge-list parsing.
#[derive(Debug, Error)]
pub enum GraphError {
    /// Graphs must have at least one vertex.
    #[error("graph must have at least one vertex")]
    NoVertices,
    /// Vertex indices are stored as `u32`, which caps the size of a graph.
    #[error("graph size {n} exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },
    /// Edge probabilities live in `[0, 1]`.
    #[error("edge probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    /// A vertex index was out of range for the graph it was used with.
    #[error("vertex index {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    /// The same unordered pair was specified twice.
    #[error("duplicate edge between vertices {j} and {k}")]
    DuplicateEdge { j: usize, k: usize },
    /// A constructor was asked for fewer vertices than the family supports.
    #[error("a {family} graph needs at least {min} vertices, got {n}")]
    FamilyTooSmall {
        family: &'static str,
        min: usize,
        n: usize,
    },
    /// An edge-list file violated the format (see [`parse_edge_list`]).
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected graph with 0/1 adjacency and optional self-loops.
///
/// Immutable once built (all mutation happens through constructors), so it is
/// safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Creates an edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoVertices);
        }
        let max = u32::MAX as usize;
        if n > max {
            return Err(GraphError::TooLarge { n, max });
        }
        Ok(Graph {
            n,
            adj: vec![Vec::new(); n],
        })
    }

    /// Builds a graph from unordered vertex pairs; `(j, j)` is a self-loop.
    ///
    /// Each unordered pair may appear at most once, in either orientation.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(n)?;
        for (j, k) in edges {
            g.add_edge(j, k)?;
        }
        Ok(g)
    }

    /// Inserts the undirected edge `{j, k}` (a self-loop when `j == k`).
    pub fn add_edge(&mut self, j: usize, k: usize) -> Result<(), GraphError> {
        for v in [j, k] {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        match self.adj[j].binary_search(&(k as u32)) {
            Ok(_) => return Err(GraphError::DuplicateEdge { j, k }),
            Err(pos) => self.adj[j].insert(pos, k as u32),
        }
        if j != k {
            let pos = self.adj[k]
                .binary_search(&(j as u32))
                .expect_err("adjacency symmetry violated");
            self.adj[k].insert(pos, j as u32);
        }
        Ok(())
    }

    /// Samples an Erdős–Rényi graph: every unordered pair `{j, k}` with
    /// `j < k` *and* every self-loop `(j, j)` is present independently with
    /// probability `p`.
    ///
    /// Sampling is reproducible: the pair stream is fixed (row-major over
    /// ordered pairs `j <= k`) and driven by a seeded ChaCha8 generator, so
    /// identical `(n, p, seed)` always yield the identical graph. Skips
    /// between present pairs are drawn geometrically, making the cost
    /// proportional to the number of edges rather than to `n^2`.
    pub fn sample_er(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidProbability(p));
        }
        let mut g = Graph::new(n)?;
        if p == 0.0 {
            return Ok(g);
        }
        if p == 1.0 {
            for j in 0..n {
                g.adj[j] = (0..n as u32).collect();
            }
            return Ok(g);
        }
        let total = pair_count(n);
        let log_q = (1.0 - p).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos: u64 = 0;
        while pos < total {
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !skip.is_finite() || skip >= (total - pos) as f64 {
                break;
            }
            pos += skip as u64;
            let (j, k) = unrank_pair(pos, n);
            // Row-major visiting order keeps every neighbor list sorted as it
            // is built: row j receives increasing k, and column k receives
            // strictly increasing j before its own row starts.
            g.adj[j].push(k as u32);
            if j != k {
                g.adj[k].push(j as u32);
            }
            pos += 1;
        }
        Ok(g)
    }

    /// Complete graph on `n` vertices, optionally with all self-loops.
    pub fn complete(n: usize, self_loops: bool) -> Result<Self, GraphError> {
        let mut g = Graph::new(n)?;
        for j in 0..n as u32 {
            g.adj[j as usize] = (0..n as u32).filter(|&k| self_loops || k != j).collect();
        }
        Ok(g)
    }

    /// Cycle graph `0 - 1 - ... - (n-1) - 0`; needs `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::FamilyTooSmall {
                family: "cycle",
                min: 3,
                n,
            });
        }
        Graph::from_edges(n, (0..n).map(|j| (j, (j + 1) % n)))
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        let mut g = Graph::new(n)?;
        for j in 1..n {
            g.add_edge(j - 1, j)?;
        }
        Ok(g)
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted neighbors of `j`; contains `j` itself exactly when `j` has a
    /// self-loop.
    pub fn neighbors(&self, j: usize) -> &[u32] {
        &self.adj[j]
    }

    /// Degree of `j`: the row sum of the adjacency matrix, so a self-loop
    /// contributes 1.
    pub fn degree(&self, j: usize) -> usize {
        self.adj[j].len()
    }

    /// All degrees as a vector; entry `j` equals `degree(j)`.
    pub fn degree_vector(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Largest degree in the graph (0 for an edgeless graph).
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether the unordered pair `{j, k}` is an edge.
    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        j < self.n && k < self.n && self.adj[j].binary_search(&(k as u32)).is_ok()
    }

    /// Sum of all adjacency-matrix entries: twice the off-diagonal edge count
    /// plus the number of self-loops.
    pub fn entry_sum(&self) -> u64 {
        self.adj.iter().map(|row| row.len() as u64).sum()
    }

    /// Number of stored edges: unordered pairs plus self-loops, each counted
    /// once.
    pub fn edge_count_total(&self) -> u64 {
        let loops = (0..self.n).filter(|&j| self.has_edge(j, j)).count() as u64;
        (self.entry_sum() - loops) / 2 + loops
    }

    /// Edge density `(sum of adjacency entries) / n^2`, the natural estimate
    /// of the sampling probability for an explicit graph.
    pub fn density(&self) -> f64 {
        self.entry_sum() as f64 / (self.n as f64 * self.n as f64)
    }

    /// Whether the graph is connected (single vertex counts as connected;
    /// self-loops are irrelevant).
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(j) = stack.pop() {
            for &k in &self.adj[j as usize] {
                if !seen[k as usize] {
                    seen[k as usize] = true;
                    count += 1;
                    stack.push(k);
                }
            }
        }
        count == self.n
    }

    /// Dense adjacency matrix (including self-loops on the diagonal).
    ///
    /// Intended for small graphs; the sparse neighbor lists remain the
    /// canonical representation.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (j, row) in self.adj.iter().enumerate() {
            for &k in row {
                m[(j, k as usize)] = 1.0;
            }
        }
        m
    }

    /// Dense graph Laplacian `L = D - A`. Self-loops cancel: they add 1 to
    /// both the degree and the diagonal of `A`, so `L` is the same as for the
    /// loop-free graph and `L * ones = 0` always holds.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut m = -self.adjacency_matrix();
        for j in 0..self.n {
            m[(j, j)] += self.degree(j) as f64;
        }
        m
    }

    /// Serializes to the edge-list text format (see [`parse_edge_list`]).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n);
        for (j, row) in self.adj.iter().enumerate() {
            for &k in row {
                if k as usize >= j {
                    let _ = writeln!(out, "{} {}", j + 1, k as usize + 1);
                }
            }
        }
        out
    }
}

/// Total number of ordered pairs `(j, k)` with `j <= k < n`.
fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) / 2
}

/// Linear index of the first pair in row `j`, i.e. of `(j, j)`.
fn row_start(j: u64, n: u64) -> u64 {
    // Rows have lengths n, n-1, ..., so row j starts after the first j of them.
    j * (2 * n - j + 1) / 2
}

/// Inverts the row-major linearization of pairs `(j, k)`, `j <= k`.
fn unrank_pair(pos: u64, n: usize) -> (usize, usize) {
    let nu = n as u64;
    // Initial guess from the quadratic row_start(j) <= pos, then exact fix-up.
    let guess = (2.0 * nu as f64 + 1.0
        - ((2.0 * nu as f64 + 1.0).powi(2) - 8.0 * pos as f64).max(0.0).sqrt())
        / 2.0;
    let mut j = (guess.max(0.0) as u64).min(nu - 1);
    while row_start(j, nu) > pos {
        j -= 1;
    }
    while j + 1 < nu && row_start(j + 1, nu) <= pos {
        j += 1;
    }
    let k = j + (pos - row_start(j, nu));
    (j as usize, k as usize)
}

/// A sorted, duplicate-free set of vertex indices.
///
/// Sets are graph-agnostic; operations that pair a set with a graph validate
/// the index range there.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VertexSet {
    members: Vec<u32>,
}

impl VertexSet {
    /// Builds a set from arbitrary indices; duplicates collapse.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<u32> = indices.into_iter().map(|v| v as u32).collect();
        members.sort_unstable();
        members.dedup();
        VertexSet { members }
    }

    /// The empty set.
    pub fn empty() -> Self {
        VertexSet::default()
    }

    /// The full vertex set `{0, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        VertexSet {
            members: (0..n as u32).collect(),
        }
    }

    /// Complement within `{0, ..., n-1}`. Members at or above `n` are dropped.
    pub fn complement(&self, n: usize) -> Self {
        let mut members = Vec::with_capacity(n - self.members.len().min(n));
        let mut it = self.members.iter().peekable();
        for v in 0..n as u32 {
            if it.peek() == Some(&&v) {
                it.next();
            } else {
                members.push(v);
            }
        }
        VertexSet { members }
    }

    /// Set union.
    pub fn union(&self, other: &VertexSet) -> Self {
        VertexSet::from_indices(self.iter().chain(other.iter()))
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Membership test.
    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&(v as u32)).is_ok()
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&v| v as usize)
    }

    fn max_member(&self) -> Option<usize> {
        self.members.last().map(|&v| v as usize)
    }
}

/// Counts adjacency entries between two vertex sets: the quadratic form
/// `v_C1' * A * v_C2` over characteristic vectors.
///
/// This is the ordered-pair convention: for disjoint sets every crossing edge
/// is counted once, while for `C1 = C2` every internal edge is counted twice
/// and every self-loop once. The factor of two on internal edges is
/// deliberate — the deviation bounds consumed by the certifier are stated for
/// exactly this quadratic form.
pub fn edge_count(g: &Graph, c1: &VertexSet, c2: &VertexSet) -> Result<u64, GraphError> {
    for set in [c1, c2] {
        if let Some(v) = set.max_member() {
            if v >= g.n() {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: g.n() });
            }
        }
    }
    // By symmetry of A the two orders agree; scan from the smaller set.
    let (outer, inner) = if c1.len() <= c2.len() { (c1, c2) } else { (c2, c1) };
    let mut mask = vec![false; g.n()];
    for v in inner.iter() {
        mask[v] = true;
    }
    let mut count = 0u64;
    for j in outer.iter() {
        count += g.neighbors(j).iter().filter(|&&k| mask[k as usize]).count() as u64;
    }
    Ok(count)
}

/// Parses the edge-list text format.
///
/// Format: the first data line holds the vertex count `n`; every following
/// data line holds one edge as `j k` with 1-based indices and `j <= k`
/// (self-loops as `j j`). Lines starting with `#` and blank lines are
/// ignored. Each unordered pair may appear at most once.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut g: Option<Graph> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let data = raw.trim();
        if data.is_empty() || data.starts_with('#') {
            continue;
        }
        let mut tokens = data.split_whitespace();
        match g {
            None => {
                let n: usize = parse_token(tokens.next(), line, "vertex count")?;
                if tokens.next().is_some() {
                    return Err(GraphError::Parse {
                        line,
                        message: "expected a single vertex count".into(),
                    });
                }
                g = Some(Graph::new(n).map_err(|e| GraphError::Parse {
                    line,
                    message: e.to_string(),
                })?);
            }
            Some(ref mut g) => {
                let j: usize = parse_token(tokens.next(), line, "vertex index")?;
                let k: usize = parse_token(tokens.next(), line, "vertex index")?;
                if tokens.next().is_some() {
                    return Err(GraphError::Parse {
                        line,
                        message: "expected exactly two vertex indices".into(),
                    });
                }
                if j == 0 || k == 0 || j > g.n() || k > g.n() {
                    return Err(GraphError::Parse {
                        line,
                        message: format!(
                            "vertex index out of range 1..={} in `{} {}`",
                            g.n(),
                            j,
                            k
                        ),
                    });
                }
                if j > k {
                    return Err(GraphError::Parse {
                        line,
                        message: format!("edges must be written with j <= k, got `{} {}`", j, k),
                    });
                }
                g.add_edge(j - 1, k - 1).map_err(|e| GraphError::Parse {
                    line,
                    message: e.to_string(),
                })?;
            }
        }
    }
    g.ok_or(GraphError::Parse {
        line: 0,
        message: "missing vertex count line".into(),
    })
}

fn parse_token<T: std::str::FromStr>(
    token: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, GraphError> {
    token
        .ok_or(())
        .and_then(|t| t.parse().map_err(|_| ()))
        .map_err(|()| GraphError::Parse {
            line,
            message: format!("expected {what}"),
        })
}

/// Reads a graph from an edge-list file (format per [`parse_edge_list`]).
pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

/// Writes a graph to an edge-list file; `load_graph` restores it exactly.
pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    Ok(std::fs::write(path, g.to_edge_list())?)
}
