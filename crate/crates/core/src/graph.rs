//! Finite simple graphs, vertex potentials and the Hamiltonian `H = -Δ + W`.
//!
//! Vertices are labelled `1..=n` at every external boundary (JSON files, CLI
//! output) and `0..n` inside the crate.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite undirected simple graph. Edges are stored once as `(lo, hi)`
/// with `lo < hi`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-based edges. Self-loops and duplicates are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        let mut stored = Vec::new();
        for (x, y) in edges {
            if x >= n || y >= n {
                return Err(Error::VertexOutOfRange(x + 1, y + 1, n));
            }
            if x == y {
                return Err(Error::SelfLoop(x + 1));
            }
            let key = (x.min(y), x.max(y));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0 + 1, key.1 + 1));
            }
            adjacency[x].push(y);
            adjacency[y].push(x);
            stored.push(key);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            n,
            edges: stored,
            adjacency,
        })
    }

    /// Builds a graph from 1-based edges, as found in graph files.
    pub fn from_one_based(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(x, y) in edges {
            if x == 0 || y == 0 || x > n || y > n {
                return Err(Error::VertexOutOfRange(x, y, n));
            }
            zero_based.push((x - 1, y - 1));
        }
        Self::new(n, zero_based)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|x| (x - 1, x)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("cycle needs n >= 3, got {n}")));
        }
        Self::new(n, (0..n).map(|x| (x, (x + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as 0-based `(lo, hi)` pairs in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// True iff every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    /// Partition of the vertex set into connected components (0-based).
    /// Components are ordered by their smallest vertex; each is sorted.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            label[start] = id;
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for &y in &self.adjacency[x] {
                    if label[y] == usize::MAX {
                        label[y] = id;
                        members.push(y);
                        stack.push(y);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }
}

/// Real vertex potential `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential(Vec<f64>);

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("potential"));
        }
        Ok(Self(values))
    }

    /// Like [`Potential::new`] but also requires `w >= 0` entrywise.
    pub fn nonnegative(values: Vec<f64>) -> Result<Self> {
        let potential = Self::new(values)?;
        if let Some((vertex, &value)) = potential.0.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::NegativePotential {
                vertex: vertex + 1,
                value,
            });
        }
        Ok(potential)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `H = -Δ + W` as a dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
    graph: Graph,
    potential: Potential,
}

impl Hamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }
}

/// `H[x,x] = d(x) + w(x)`, `H[x,y] = -1` on edges, `0` elsewhere.
pub fn build_hamiltonian(graph: &Graph, potential: &Potential) -> Result<Hamiltonian> {
    let n = graph.n();
    if potential.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: potential.len(),
            context: "potential length vs vertex count",
        });
    }
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        matrix[(x, x)] = graph.degree(x) as f64 + potential.values()[x];
    }
    for &(x, y) in graph.edges() {
        matrix[(x, y)] = -1.0;
        matrix[(y, x)] = -1.0;
    }
    Ok(Hamiltonian {
        matrix,
        graph: graph.clone(),
        potential: potential.clone(),
    })
}

/// On-disk graph description: `{"n": .., "edges": [[x, y], ..], "potential": [..]}`
/// with 1-based vertices. `potential` defaults to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn from_parts(graph: &Graph, potential: &Potential) -> Self {
        Self {
            n: graph.n(),
            edges: graph.edges().iter().map(|&(x, y)| [x + 1, y + 1]).collect(),
            potential: Some(potential.values().to_vec()),
        }
    }

    pub fn into_parts(self) -> Result<(Graph, Potential)> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = Graph::from_one_based(self.n, &edges)?;
        let potential = match self.potential {
            Some(values) => Potential::new(values)?,
            None => Potential::zeros(self.n),
        };
        if potential.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: potential.len(),
                context: "potential length vs vertex count",
            });
        }
        Ok((graph, potential))
    }

    pub fn hamiltonian(self) -> Result<Hamiltonian> {
        let (graph, potential) = self.into_parts()?;
        build_hamiltonian(&graph, &potential)
    }
}
