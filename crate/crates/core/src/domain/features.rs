use ndarray::{Array2, ArrayView2};

use super::graph::Graph;
use crate::error::{Error, Result};

/// One named channel group, e.g. the edge coupling `K` or the global `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedFeature {
    pub name: String,
    pub values: Array2<f64>,
}

impl NamedFeature {
    pub fn new(name: impl Into<String>, values: Array2<f64>) -> Self {
        NamedFeature {
            name: name.into(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

/// Static (time-independent) inputs attached to a graph. Edge rows follow the
/// order of [`Graph::directed`]; globals have exactly one row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSet {
    pub node: Vec<NamedFeature>,
    pub edge: Vec<NamedFeature>,
    pub global: Vec<NamedFeature>,
}

impl FeatureSet {
    pub fn node(&self, name: &str) -> Option<ArrayView2<'_, f64>> {
        find(&self.node, name)
    }

    pub fn edge(&self, name: &str) -> Option<ArrayView2<'_, f64>> {
        find(&self.edge, name)
    }

    pub fn global(&self, name: &str) -> Option<ArrayView2<'_, f64>> {
        find(&self.global, name)
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let groups = [
            (&self.node, graph.num_nodes(), "node"),
            (&self.edge, 2 * graph.num_edges(), "edge"),
            (&self.global, 1, "global"),
        ];
        for (group, rows, kind) in groups {
            for f in group {
                if f.values.nrows() != rows {
                    return Err(Error::shape(format!(
                        "{kind} feature {} has {} rows, expected {rows}",
                        f.name,
                        f.values.nrows()
                    )));
                }
                if f.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::shape(format!(
                        "{kind} feature {} has non-finite entries",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies a node relabeling `perm` (old index `i` becomes `perm[i]`) to
    /// node and edge rows. `permuted_graph` must be `graph.permuted(perm)`.
    pub fn permuted(&self, graph: &Graph, permuted_graph: &Graph, perm: &[usize]) -> FeatureSet {
        let old = graph.directed();
        let new = permuted_graph.directed();
        let mut edge_map = vec![0; old.len()];
        for (row, map) in edge_map.iter_mut().enumerate() {
            let (r, s) = (perm[old.receivers[row]], perm[old.senders[row]]);
            let lo = new.offsets[r];
            let hi = new.offsets[r + 1];
            *map = lo + new.senders[lo..hi].binary_search(&s).expect("edge survives relabeling");
        }
        let permute_rows = |src: &Array2<f64>, map: &[usize]| {
            let mut out = Array2::zeros(src.raw_dim());
            for (old_row, &new_row) in map.iter().enumerate() {
                out.row_mut(new_row).assign(&src.row(old_row));
            }
            out
        };
        FeatureSet {
            node: self
                .node
                .iter()
                .map(|f| NamedFeature::new(f.name.clone(), permute_rows(&f.values, perm)))
                .collect(),
            edge: self
                .edge
                .iter()
                .map(|f| NamedFeature::new(f.name.clone(), permute_rows(&f.values, &edge_map)))
                .collect(),
            global: self.global.clone(),
        }
    }
}

fn find<'a>(group: &'a [NamedFeature], name: &str) -> Option<ArrayView2<'a, f64>> {
    group.iter().find(|f| f.name == name).map(|f| f.values.view())
}

/// Expands one value per undirected edge into directed rows.
pub fn edge_rows_from_undirected(graph: &Graph, per_edge: &[f64]) -> Array2<f64> {
    let d = graph.directed();
    Array2::from_shape_fn((d.len(), 1), |(row, _)| per_edge[d.undirected[row]])
}
