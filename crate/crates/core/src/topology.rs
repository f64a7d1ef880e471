//! Communication graph, incidence/Laplacian matrices and the spectral
//! constants that enter the rate formulas.
//!
//! Agents are indexed from 0 in memory. The edge-list text format is
//! 1-based: a header line `m n` followed by `n` lines `i j` with `i < j`.
//! Every stored edge `(i, j)` has `i < j`; `i` is the source and `j` the
//! destination. Edges are kept in lexicographic order, which fixes the row
//! order of every edge-indexed matrix.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DruidError, Result};

pub const DEFAULT_REDRAW_CAP: usize = 10_000;

/// Relative threshold under which an eigenvalue counts as zero.
pub const ZERO_EIGEN_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-based edges. Each pair is oriented so that the
    /// smaller index is the source; self loops, duplicates and disconnected
    /// graphs are rejected.
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m < 2 {
            return Err(DruidError::InvalidParameter(format!(
                "a network needs at least 2 agents, got {m}"
            )));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(DruidError::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {m} agents"
                )));
            }
            if a == b {
                return Err(DruidError::InvalidParameter(format!("self loop at agent {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(DruidError::InvalidParameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); m];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let g = Graph { m, edges, neighbors };
        if !g.is_connected() {
            return Err(DruidError::InvalidParameter("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn complete(m: usize) -> Result<Self> {
        let edges: Vec<_> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        Graph::new(m, &edges)
    }

    pub fn path(m: usize) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|j| (j - 1, j)).collect();
        Graph::new(m, &edges)
    }

    pub fn num_agents(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn is_connected(&self) -> bool {
        connected(self.m, &self.neighbors)
    }

    /// Serializes to the 1-based edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.m, self.edges.len());
        for &(i, j) in &self.edges {
            writeln!(out, "{} {}", i + 1, j + 1).unwrap();
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(DruidError::Parse {
            line: 1,
            message: "missing `m n` header".into(),
        })?;
        let (m, n) = parse_pair(hline, header)?;
        let mut edges = Vec::with_capacity(n);
        for (line, body) in lines {
            let (i, j) = parse_pair(line, body)?;
            if i == 0 || j == 0 || i > m || j > m {
                return Err(DruidError::Parse { line, message: format!("agent index out of 1..={m}") });
            }
            if i >= j {
                return Err(DruidError::Parse { line, message: format!("edge {i} {j} must satisfy i < j") });
            }
            edges.push((i - 1, j - 1));
        }
        if edges.len() != n {
            return Err(DruidError::Parse {
                line: 1,
                message: format!("header announces {n} edges, found {}", edges.len()),
            });
        }
        Graph::new(m, &edges)
    }
}

fn parse_pair(line: usize, body: &str) -> Result<(usize, usize)> {
    let mut it = body.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(DruidError::Parse { line, message: format!("expected two integers, got `{body}`") }),
    }
}

fn connected(m: usize, neighbors: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == m
}

/// Draws every unordered pair independently with probability `p`, redrawing
/// the whole graph from the same stream until it is connected.
pub fn random_connected_graph(m: usize, p: f64, seed: u64) -> Result<Graph> {
    random_connected_graph_capped(m, p, seed, DEFAULT_REDRAW_CAP)
}

pub fn random_connected_graph_capped(m: usize, p: f64, seed: u64, cap: usize) -> Result<Graph> {
    if m < 2 {
        return Err(DruidError::InvalidParameter(format!("need m >= 2, got {m}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(DruidError::InvalidParameter(format!("edge probability {p} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cap {
        let mut edges = Vec::new();
        let mut neighbors = vec![Vec::new(); m];
        for i in 0..m {
            for j in i + 1..m {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        if connected(m, &neighbors) {
            return Graph::new(m, &edges);
        }
    }
    Err(DruidError::GenerationFailure { attempts: cap })
}

/// Edge-by-agent and agent-by-agent matrices of the (scalar) graph. Block
/// versions are never formed; callers apply them coordinate-wise.
#[derive(Debug, Clone)]
pub struct TopologyMatrices {
    pub source: DMatrix<f64>,
    pub destination: DMatrix<f64>,
    pub signed_incidence: DMatrix<f64>,
    pub unsigned_incidence: DMatrix<f64>,
    pub signed_laplacian: DMatrix<f64>,
    pub unsigned_laplacian: DMatrix<f64>,
    pub degree: DMatrix<f64>,
}

pub fn build_matrices(g: &Graph) -> TopologyMatrices {
    let (n, m) = (g.num_edges(), g.num_agents());
    let mut source = DMatrix::zeros(n, m);
    let mut destination = DMatrix::zeros(n, m);
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        source[(k, i)] = 1.0;
        destination[(k, j)] = 1.0;
    }
    let signed_incidence = &source - &destination;
    let unsigned_incidence = &source + &destination;
    let signed_laplacian = signed_incidence.transpose() * &signed_incidence;
    let unsigned_laplacian = unsigned_incidence.transpose() * &unsigned_incidence;
    let degree = source.transpose() * &source + destination.transpose() * &destination;
    debug_assert_eq!((&signed_laplacian + &unsigned_laplacian) * 0.5, degree);
    TopologyMatrices {
        source,
        destination,
        signed_incidence,
        unsigned_incidence,
        signed_laplacian,
        unsigned_laplacian,
        degree,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub sigma_max_ls: f64,
    pub sigma_max_lu: f64,
    pub sigma_min_lu: f64,
    /// Smallest positive eigenvalue of `C Cᵀ`, `C = [E_s; Sᵀ]`.
    pub sigma_min_plus_cct: f64,
    pub d_max: usize,
}

/// `l` is the 0-based designated agent.
pub fn spectral_constants(tm: &TopologyMatrices, l: usize) -> Result<SpectralConstants> {
    let m = tm.degree.nrows();
    if l >= m {
        return Err(DruidError::InvalidParameter(format!("designated agent {l} out of range")));
    }
    let ls = symmetric_eigenvalues(&tm.signed_laplacian)?;
    let lu = symmetric_eigenvalues(&tm.unsigned_laplacian)?;
    // Nonzero spectra of C Cᵀ and Cᵀ C coincide; Cᵀ C = L_s + s_l s_lᵀ.
    let mut ctc = tm.signed_laplacian.clone();
    ctc[(l, l)] += 1.0;
    let cc = symmetric_eigenvalues(&ctc)?;
    let top = cc.iter().cloned().fold(0.0, f64::max);
    let sigma_min_plus_cct = cc
        .iter()
        .cloned()
        .filter(|&v| v > ZERO_EIGEN_RTOL * top)
        .fold(f64::INFINITY, f64::min);
    let d_max = (0..m).map(|i| tm.degree[(i, i)] as usize).max().unwrap_or(0);
    Ok(SpectralConstants {
        sigma_max_ls: ls.max().max(0.0),
        sigma_max_lu: lu.max().max(0.0),
        sigma_min_lu: lu.min().max(0.0),
        sigma_min_plus_cct,
        d_max,
    })
}

pub(crate) fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    a.clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .map(|e| e.eigenvalues)
        .ok_or_else(|| DruidError::Numerical("symmetric eigensolver did not converge".into()))
}
