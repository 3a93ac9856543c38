//! Spatial domains: graphs, nonuniform grids and their static features.

mod features;
mod graph;
mod grid;
mod random;

pub use features::{edge_rows_from_undirected, FeatureSet, NamedFeature};
pub use graph::{DirectedEdges, Graph};
pub use grid::{axis_spacings, build_nonuniform_grid, grid_to_graph, jittered_spacings, GridSpec};
pub use random::{gen_barabasi_albert, gen_erdos_renyi, gen_random_regular, Topology, MAX_ATTEMPTS};

use serde::{Deserialize, Serialize};

/// What a sample's `domain.json` holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Grid(GridSpec),
    Graph(Graph),
}
