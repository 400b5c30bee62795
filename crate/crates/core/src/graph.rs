//! Undirected weighted communication graphs: Laplacian, incidence matrix,
//! algebraic connectivity and the connectivity conditions the distributed
//! controllers depend on.

use std::collections::VecDeque;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_rows, Matrix};

/// Fixed undirected graph over `n` agents.
///
/// Edges are stored once as `(i, j)` with `i < j`; that pair also fixes the
/// incidence orientation (the edge leaves `i` and enters `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    weights: Matrix,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub laplacian: Matrix,
    pub incidence: Matrix,
    pub lambda2: f64,
}

/// How a topology is written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Generated { generator: Generator, size: usize },
    Explicit { adjacency: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Cycle,
    Complete,
    Star,
    Path,
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology> {
        match self {
            TopologySpec::Generated { generator, size } => Topology::generate(*generator, *size),
            TopologySpec::Explicit { adjacency } => Topology::from_weights(from_rows(adjacency)?),
        }
    }
}

impl Topology {
    pub fn from_weights(weights: Matrix) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || !weights.is_square() {
            return Err(Error::Topology(format!(
                "adjacency must be a non-empty square matrix, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let mut edges = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Topology(format!("self-loop at vertex {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Topology(format!("weight a[{i}][{j}] = {w} must be finite and nonnegative")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Topology(format!("adjacency not symmetric at ({i}, {j})")));
                }
                if w > 0.0 {
                    neighbors[i].push(j);
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        Ok(Self {
            weights,
            edges,
            neighbors,
        })
    }

    /// Unit-weight graph from an edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut w = Matrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Topology(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i == j {
                return Err(Error::Topology(format!("self-loop at vertex {i}")));
            }
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        Self::from_weights(w)
    }

    pub fn generate(generator: Generator, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Topology("graph needs at least one vertex".into()));
        }
        let edges: Vec<(usize, usize)> = match generator {
            Generator::Cycle if n >= 3 => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            Generator::Cycle | Generator::Path => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            Generator::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            Generator::Star => (1..n).map(|j| (0, j)).collect(),
        };
        Self::from_edges(n, &edges)
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Oriented edge list, `i < j` in every pair.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// One-hop neighbors of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    pub fn laplacian(&self) -> Matrix {
        let n = self.n_agents();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.weights.row(i).sum();
        }
        l
    }

    /// `d_ik = +1` if edge `k` enters `i`, `-1` if it leaves `i`.
    pub fn incidence(&self) -> Matrix {
        let mut d = Matrix::zeros(self.n_agents(), self.edges.len());
        for (k, &(from, to)) in self.edges.iter().enumerate() {
            d[(from, k)] = -1.0;
            d[(to, k)] = 1.0;
        }
        d
    }

    /// Breadth-first reachability from vertex 0.
    pub fn is_connected(&self) -> bool {
        let n = self.n_agents();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// First pair `(i, j)`, `i < j`, that is neither adjacent nor shares a neighbor.
    pub fn uncovered_pair(&self) -> Option<(usize, usize)> {
        let n = self.n_agents();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| {
                !self.adjacent(i, j) && !self.neighbors(i).iter().any(|&k| self.adjacent(j, k))
            })
    }

    pub fn has_two_hop_cover(&self) -> bool {
        self.uncovered_pair().is_none()
    }
}

/// Laplacian, incidence matrix and λ₂ from a dense symmetric eigendecomposition.
pub fn build_spectral(topology: &Topology) -> SpectralData {
    let laplacian = topology.laplacian();
    let mut eig: Vec<f64> = SymmetricEigen::new(laplacian.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let lambda2 = eig.get(1).copied().unwrap_or(0.0).max(0.0);
    SpectralData {
        laplacian,
        incidence: topology.incidence(),
        lambda2,
    }
}

/// Gain condition `k1 / (2 k2²) < λ₂` for the distributed double-integrator consensus.
pub fn consensus_gain_condition(k1: f64, k2: f64, lambda2: f64) -> bool {
    k1 / (2.0 * k2 * k2) < lambda2
}
