//! Undirected, unweighted communication graphs between observer nodes.

use std::collections::VecDeque;

use crate::error::{DuioError, Result};
use crate::matlin::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Mat,
}

impl Graph {
    /// Validates a 0/1, symmetric, zero-diagonal adjacency matrix.
    pub fn new(adjacency: Mat) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(DuioError::Invalid(format!(
                "adjacency must be a nonempty square matrix, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(DuioError::Invalid(format!("self-loop at node {}", i + 1)));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(DuioError::Invalid(format!(
                        "adjacency entries must be 0 or 1, found {a} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if a != adjacency[(j, i)] {
                    return Err(DuioError::Invalid(format!(
                        "adjacency is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Graph { adjacency })
    }

    /// Build from an undirected edge list over nodes `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = Mat::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(DuioError::Invalid(format!("edge ({i}, {j}) out of range")));
            }
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
        Graph::new(adj)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("path graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut adj = Mat::from_element(n, n, 1.0);
        adj.fill_diagonal(0.0);
        Graph::new(adj).expect("complete graph is valid")
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(move |&j| self.adjacency[(i, j)] != 0.0)
    }
}

pub fn laplacian(g: &Graph) -> Mat {
    let n = g.n_nodes();
    let mut l = -g.adjacency().clone();
    for i in 0..n {
        l[(i, i)] = g.adjacency().row(i).sum();
    }
    l
}

/// Breadth-first search from the first node.
pub fn is_connected(g: &Graph) -> bool {
    let n = g.n_nodes();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
