use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph with sorted neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
    neighbors: Vec<Vec<usize>>,
    // Undirected edge id for each entry of `neighbors`.
    neighbor_edges: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        Graph::new(repr.num_nodes, repr.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            num_nodes: g.num_nodes,
            edges: g.edges,
        }
    }
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edges keep their given
    /// order; each pair is stored as `[min, max]`.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = [usize; 2]>) -> Result<Self> {
        let mut stored = Vec::new();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_nodes];
        for [a, b] in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::config(format!(
                    "edge ({a}, {b}) out of range for {num_nodes} nodes"
                )));
            }
            if a == b {
                return Err(Error::config(format!("self-loop at node {a}")));
            }
            let id = stored.len();
            stored.push([a.min(b), a.max(b)]);
            adjacency[a].push((b, id));
            adjacency[b].push((a, id));
        }
        let mut neighbors = Vec::with_capacity(num_nodes);
        let mut neighbor_edges = Vec::with_capacity(num_nodes);
        for (node, mut adj) in adjacency.into_iter().enumerate() {
            adj.sort_unstable();
            if let Some(w) = adj.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::config(format!("duplicate edge ({node}, {})", w[0].0)));
            }
            neighbors.push(adj.iter().map(|&(n, _)| n).collect());
            neighbor_edges.push(adj.iter().map(|&(_, e)| e).collect());
        }
        Ok(Graph {
            num_nodes,
            edges: stored,
            neighbors,
            neighbor_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Undirected edge ids aligned with [`Graph::neighbors`].
    pub fn neighbor_edges(&self, node: usize) -> &[usize] {
        &self.neighbor_edges[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.num_nodes == 0 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.num_nodes as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return true;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(node) = queue.pop_front() {
            for &next in &self.neighbors[node] {
                if !seen[next] {
                    seen[next] = true;
                    count += 1;
                    queue.push_back(next);
                }
            }
        }
        count == self.num_nodes
    }

    /// Directed view: every undirected edge becomes two rows, grouped by
    /// receiving node in ascending order, senders ascending within a group.
    pub fn directed(&self) -> DirectedEdges {
        let mut offsets = Vec::with_capacity(self.num_nodes + 1);
        let mut receivers = Vec::with_capacity(2 * self.edges.len());
        let mut senders = Vec::with_capacity(2 * self.edges.len());
        let mut undirected = Vec::with_capacity(2 * self.edges.len());
        offsets.push(0);
        for node in 0..self.num_nodes {
            for (&nb, &e) in self.neighbors[node].iter().zip(&self.neighbor_edges[node]) {
                receivers.push(node);
                senders.push(nb);
                undirected.push(e);
            }
            offsets.push(receivers.len());
        }
        DirectedEdges {
            offsets,
            receivers,
            senders,
            undirected,
        }
    }

    /// Relabels node `i` as `perm[i]`. Edge order is preserved.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_nodes {
            return Err(Error::shape("permutation length differs from node count"));
        }
        Graph::new(self.num_nodes, self.edges.iter().map(|&[a, b]| [perm[a], perm[b]]))
    }
}

/// Receiver-grouped directed edge rows of a [`Graph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedEdges {
    /// Row range of node `i` is `offsets[i]..offsets[i + 1]`.
    pub offsets: Vec<usize>,
    pub receivers: Vec<usize>,
    pub senders: Vec<usize>,
    pub undirected: Vec<usize>,
}

impl DirectedEdges {
    pub fn len(&self) -> usize {
        self.receivers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.receivers.is_empty()
    }
}
