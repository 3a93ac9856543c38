use ndarray::{Array2, ArrayView2};

use super::config::{InputSource, SystemModelConfig};
use crate::domain::{FeatureSet, Graph, NamedFeature};
use crate::error::{Error, Result};
use crate::systems::Instance;

/// Static model inputs of one or more graphs laid out as a disjoint union.
///
/// Directed edge rows are grouped by receiver; node indices of graph `g`
/// occupy `node_offsets[g]..node_offsets[g + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBatch {
    pub num_nodes: usize,
    pub receivers: Vec<usize>,
    pub senders: Vec<usize>,
    /// Graph index of each node.
    pub node_graph: Vec<usize>,
    /// Graph index of each directed edge row.
    pub edge_graph: Vec<usize>,
    pub node_offsets: Vec<usize>,
    /// Raw values of each `Feature` node input, aligned with `node_inputs`.
    pub node_features: Vec<Option<Array2<f64>>>,
    pub edge_features: Vec<Array2<f64>>,
    /// One row per graph.
    pub global_features: Vec<Array2<f64>>,
}

/// Checks a looked-up feature against its input and returns a scaled,
/// standard-layout copy.
fn lookup(kind: &str, input: &InputSource, found: Option<ArrayView2<'_, f64>>) -> Result<Array2<f64>> {
    let InputSource::Feature { name, dim, scale } = input else {
        unreachable!("only feature inputs are looked up")
    };
    let values = found.ok_or_else(|| Error::shape(format!("missing {kind} feature {name:?}")))?;
    if values.ncols() != *dim {
        return Err(Error::shape(format!(
            "{kind} feature {name:?} has width {}, model expects {dim}",
            values.ncols()
        )));
    }
    Ok(values.as_standard_layout().mapv(|v| v * scale))
}

impl GraphBatch {
    pub fn new(cfg: &SystemModelConfig, graph: &Graph, features: &FeatureSet) -> Result<Self> {
        features.validate(graph)?;
        let d = graph.directed();
        let n = graph.num_nodes();
        let node_features = cfg
            .node_inputs
            .iter()
            .map(|input| match input {
                InputSource::Feature { name, .. } => lookup("node", input, features.node(name)).map(Some),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        let by_name = |group: &[InputSource], kind: &str, table: &[NamedFeature]| {
            group
                .iter()
                .map(|input| {
                    let InputSource::Feature { name, .. } = input else {
                        return Err(Error::config(format!(
                            "{kind} input {} is not a feature",
                            input.label()
                        )));
                    };
                    let found = table.iter().find(|f| &f.name == name).map(|f| f.values.view());
                    lookup(kind, input, found)
                })
                .collect::<Result<Vec<_>>>()
        };
        let edge_features = by_name(&cfg.edge_inputs, "edge", &features.edge)?;
        let global_features = by_name(&cfg.global_inputs, "global", &features.global)?;
        Ok(GraphBatch {
            num_nodes: n,
            edge_graph: vec![0; d.len()],
            receivers: d.receivers,
            senders: d.senders,
            node_graph: vec![0; n],
            node_offsets: vec![0, n],
            node_features,
            edge_features,
            global_features,
        })
    }

    pub fn from_instance(cfg: &SystemModelConfig, instance: &Instance) -> Result<Self> {
        GraphBatch::new(cfg, &instance.graph, &instance.features)
    }

    pub fn num_graphs(&self) -> usize {
        self.node_offsets.len() - 1
    }

    pub fn num_edge_rows(&self) -> usize {
        self.receivers.len()
    }

    /// Disjoint union with node indices offset part by part.
    pub fn union(parts: &[&GraphBatch]) -> Result<GraphBatch> {
        let first = parts.first().ok_or_else(|| Error::shape("empty batch"))?;
        let mut out = GraphBatch {
            num_nodes: 0,
            receivers: Vec::new(),
            senders: Vec::new(),
            node_graph: Vec::new(),
            edge_graph: Vec::new(),
            node_offsets: vec![0],
            node_features: Vec::new(),
            edge_features: Vec::new(),
            global_features: Vec::new(),
        };
        let mut graph_base = 0;
        for part in parts {
            if part.node_features.len() != first.node_features.len()
                || part.edge_features.len() != first.edge_features.len()
                || part.global_features.len() != first.global_features.len()
            {
                return Err(Error::shape("batch parts disagree on feature layout"));
            }
            let base = out.num_nodes;
            out.receivers.extend(part.receivers.iter().map(|r| r + base));
            out.senders.extend(part.senders.iter().map(|s| s + base));
            out.node_graph.extend(part.node_graph.iter().map(|g| g + graph_base));
            out.edge_graph.extend(part.edge_graph.iter().map(|g| g + graph_base));
            out.node_offsets.extend(part.node_offsets[1..].iter().map(|o| o + base));
            out.num_nodes += part.num_nodes;
            graph_base += part.num_graphs();
        }
        let stack = |pick: &dyn Fn(&GraphBatch) -> ArrayView2<'_, f64>| -> Result<Array2<f64>> {
            let views: Vec<_> = parts.iter().map(|p| pick(p)).collect();
            ndarray::concatenate(ndarray::Axis(0), &views).map_err(|e| Error::shape(e.to_string()))
        };
        for i in 0..first.node_features.len() {
            out.node_features.push(match &first.node_features[i] {
                Some(_) => Some(stack(&|p| p.node_features[i].as_ref().expect("same layout").view())?),
                None => None,
            });
        }
        for i in 0..first.edge_features.len() {
            out.edge_features.push(stack(&|p| p.edge_features[i].view())?);
        }
        for i in 0..first.global_features.len() {
            out.global_features.push(stack(&|p| p.global_features[i].view())?);
        }
        Ok(out)
    }
}

/// `dst[r, dst_col..dst_col+w] = src[idx[r], src_col..src_col+w]` for every
/// row of `dst`; `idx = None` is the identity.
pub(crate) fn gather_cols(
    dst: &mut Array2<f64>,
    dst_col: usize,
    src: &Array2<f64>,
    src_col: usize,
    width: usize,
    idx: Option<&[usize]>,
) {
    let (dst_w, src_w) = (dst.ncols(), src.ncols());
    let rows = dst.nrows();
    let d = dst.as_slice_mut().expect("standard layout");
    let src = src.as_standard_layout();
    let s = src.as_slice().expect("standard layout");
    for r in 0..rows {
        let from = idx.map_or(r, |i| i[r]);
        let a = r * dst_w + dst_col;
        let b = from * src_w + src_col;
        d[a..a + width].copy_from_slice(&s[b..b + width]);
    }
}

/// `dst[idx[r], dst_col..] += src[r, src_col..src_col+w]` for every row of
/// `src`, in row order.
pub(crate) fn scatter_add_cols(
    dst: &mut Array2<f64>,
    dst_col: usize,
    src: &Array2<f64>,
    src_col: usize,
    width: usize,
    idx: Option<&[usize]>,
) {
    let (dst_w, src_w) = (dst.ncols(), src.ncols());
    let rows = src.nrows();
    let d = dst.as_slice_mut().expect("standard layout");
    let src = src.as_standard_layout();
    let s = src.as_slice().expect("standard layout");
    for r in 0..rows {
        let to = idx.map_or(r, |i| i[r]);
        let a = to * dst_w + dst_col;
        let b = r * src_w + src_col;
        for (x, y) in d[a..a + width].iter_mut().zip(&s[b..b + width]) {
            *x += y;
        }
    }
}

/// Copies a column block into a new standard-layout matrix.
pub(crate) fn take_cols(src: &Array2<f64>, col: usize, width: usize) -> Array2<f64> {
    let mut out = Array2::zeros((src.nrows(), width));
    gather_cols(&mut out, 0, src, col, width, None);
    out
}
