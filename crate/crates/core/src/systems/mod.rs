//! Governing functions, initial-condition samplers and coefficient samplers
//! for the four benchmark systems.

mod burgers;
mod coupled;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use burgers::{
    burgers_rhs, sample_burgers_ic, Burgers, BurgersCoeffs, BurgersIc, BurgersIcVariant, DEFAULT_NU, NU_RANGE,
};
pub use coupled::{
    heat_rhs, kuramoto_rhs, rossler_rhs, sample_heat_coeffs, sample_heat_ic, sample_kuramoto_coeffs,
    sample_kuramoto_ic, sample_rossler_coeffs, sample_rossler_ic, Heat, HeatCoeffs, Kuramoto, KuramotoCoeffs, Rossler,
    RosslerCoeffs, HEAT_D_RANGE, KURAMOTO_K_RANGE, ROSSLER_AB_RANGE, ROSSLER_C_RANGE, ROSSLER_K_RANGE,
};

use crate::domain::{edge_rows_from_undirected, grid_to_graph, Domain, FeatureSet, Graph, NamedFeature};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::solver::Rhs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Burgers,
    Heat,
    Kuramoto,
    Rossler,
}

impl SystemKind {
    pub fn d_state(self) -> usize {
        match self {
            SystemKind::Burgers => 2,
            SystemKind::Heat | SystemKind::Kuramoto => 1,
            SystemKind::Rossler => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Burgers => "burgers",
            SystemKind::Heat => "heat",
            SystemKind::Kuramoto => "kuramoto",
            SystemKind::Rossler => "rossler",
        }
    }

    /// Whether state channel values are phases compared modulo 2π.
    pub fn is_angular(self) -> bool {
        matches!(self, SystemKind::Kuramoto)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "burgers" => Ok(SystemKind::Burgers),
            "heat" => Ok(SystemKind::Heat),
            "kuramoto" => Ok(SystemKind::Kuramoto),
            "rossler" | "rössler" => Ok(SystemKind::Rossler),
            other => Err(Error::config(format!("unknown system {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum Coefficients {
    Burgers(BurgersCoeffs),
    Heat(HeatCoeffs),
    Kuramoto(KuramotoCoeffs),
    Rossler(RosslerCoeffs),
}

impl Coefficients {
    pub fn system(&self) -> SystemKind {
        match self {
            Coefficients::Burgers(_) => SystemKind::Burgers,
            Coefficients::Heat(_) => SystemKind::Heat,
            Coefficients::Kuramoto(_) => SystemKind::Kuramoto,
            Coefficients::Rossler(_) => SystemKind::Rossler,
        }
    }
}

/// How a sample's initial state was drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IcRecord {
    Burgers { u: BurgersIc, v: BurgersIc },
    Heat { hot_fraction: f64 },
    Uniform { seed: u64 },
}

/// Draws coefficients for `system` on `graph`. Burgers viscosity is uniform
/// over [`NU_RANGE`].
pub fn sample_coeffs(system: SystemKind, graph: &Graph, seed: u64) -> Coefficients {
    match system {
        SystemKind::Burgers => {
            let mut rng = rng_from_seed(seed);
            Coefficients::Burgers(BurgersCoeffs {
                nu: rng.random_range(NU_RANGE.0..=NU_RANGE.1),
            })
        }
        SystemKind::Heat => Coefficients::Heat(sample_heat_coeffs(graph, seed)),
        SystemKind::Kuramoto => Coefficients::Kuramoto(sample_kuramoto_coeffs(graph, seed)),
        SystemKind::Rossler => Coefficients::Rossler(sample_rossler_coeffs(graph, seed)),
    }
}

/// Initial state for a coupled system on `graph`.
pub fn sample_graph_ic(system: SystemKind, graph: &Graph, seed: u64) -> Result<(Array2<f64>, IcRecord)> {
    match system {
        SystemKind::Heat => {
            let (s, p) = sample_heat_ic(graph, seed);
            Ok((s, IcRecord::Heat { hot_fraction: p }))
        }
        SystemKind::Kuramoto => Ok((sample_kuramoto_ic(graph, seed), IcRecord::Uniform { seed })),
        SystemKind::Rossler => Ok((sample_rossler_ic(graph, seed), IcRecord::Uniform { seed })),
        SystemKind::Burgers => Err(Error::config("Burgers initial conditions live on grids")),
    }
}

/// A domain paired with its graph and static model inputs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub domain: Domain,
    pub graph: Graph,
    pub coeffs: Coefficients,
    pub features: FeatureSet,
}

impl Instance {
    /// Builds the graph and the static feature set:
    ///
    /// | system   | node    | edge           | global      |
    /// |----------|---------|----------------|-------------|
    /// | burgers  |         | `disp` (dx,dy) | `nu`        |
    /// | heat     |         | `D`            |             |
    /// | kuramoto | `omega` | `K`            |             |
    /// | rossler  |         | `K`            | `a`,`b`,`c` |
    pub fn new(domain: Domain, coeffs: Coefficients) -> Result<Self> {
        let (graph, mut features) = match &domain {
            Domain::Grid(grid) => {
                let (graph, disp) = grid_to_graph(grid)?;
                let fs = FeatureSet {
                    edge: vec![NamedFeature::new("disp", disp)],
                    ..Default::default()
                };
                (graph, fs)
            }
            Domain::Graph(graph) => (graph.clone(), FeatureSet::default()),
        };
        let scalar = |name: &str, v: f64| NamedFeature::new(name, Array2::from_elem((1, 1), v));
        match (&coeffs, &domain) {
            (Coefficients::Burgers(c), Domain::Grid(_)) => {
                features.global.push(scalar("nu", c.nu));
            }
            (Coefficients::Heat(c), Domain::Graph(_)) => {
                features
                    .edge
                    .push(NamedFeature::new("D", edge_rows_from_undirected(&graph, &c.d)));
            }
            (Coefficients::Kuramoto(c), Domain::Graph(_)) => {
                let omega = Array2::from_shape_vec((c.omega.len(), 1), c.omega.clone())
                    .map_err(|e| Error::shape(e.to_string()))?;
                features.node.push(NamedFeature::new("omega", omega));
                features
                    .edge
                    .push(NamedFeature::new("K", edge_rows_from_undirected(&graph, &c.k)));
            }
            (Coefficients::Rossler(c), Domain::Graph(_)) => {
                features
                    .edge
                    .push(NamedFeature::new("K", edge_rows_from_undirected(&graph, &c.k)));
                features.global.push(scalar("a", c.a));
                features.global.push(scalar("b", c.b));
                features.global.push(scalar("c", c.c));
            }
            _ => {
                return Err(Error::config(format!(
                    "{} coefficients do not fit this domain type",
                    coeffs.system()
                )))
            }
        }
        features.validate(&graph)?;
        Ok(Instance {
            domain,
            graph,
            coeffs,
            features,
        })
    }

    pub fn system(&self) -> SystemKind {
        self.coeffs.system()
    }

    /// Ground-truth governing function.
    pub fn rhs(&self) -> Result<Box<dyn Rhs + '_>> {
        Ok(match (&self.coeffs, &self.domain) {
            (Coefficients::Burgers(c), Domain::Grid(grid)) => Box::new(Burgers::new(grid, c)?),
            (Coefficients::Heat(c), _) => Box::new(Heat::new(&self.graph, c)?),
            (Coefficients::Kuramoto(c), _) => Box::new(Kuramoto::new(&self.graph, c)?),
            (Coefficients::Rossler(c), _) => Box::new(Rossler::new(&self.graph, c)?),
            _ => return Err(Error::config("coefficients do not fit this domain type")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{gen_barabasi_albert, GridSpec};

    #[test]
    fn system_names() {
        for s in [
            SystemKind::Burgers,
            SystemKind::Heat,
            SystemKind::Kuramoto,
            SystemKind::Rossler,
        ] {
            assert_eq!(s.name().parse::<SystemKind>().unwrap(), s);
        }
        assert!("wave".parse::<SystemKind>().is_err());
    }

    #[test]
    fn coefficient_json_is_tagged() {
        let c = Coefficients::Burgers(BurgersCoeffs { nu: 0.01 });
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"system":"burgers","nu":0.01}"#);
        let h = Coefficients::Heat(HeatCoeffs { d: vec![0.5] });
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"system":"heat","D":[0.5]}"#);
    }

    #[test]
    fn burgers_nu_range() {
        let g = Graph::new(1, []).unwrap();
        for seed in 0..50 {
            let Coefficients::Burgers(c) = sample_coeffs(SystemKind::Burgers, &g, seed) else {
                unreachable!()
            };
            assert!((0.005..=0.02).contains(&c.nu));
        }
    }

    #[test]
    fn instance_features() {
        let g = gen_barabasi_albert(20, 2, 1).unwrap();
        let inst = Instance::new(Domain::Graph(g.clone()), sample_coeffs(SystemKind::Rossler, &g, 2)).unwrap();
        assert_eq!(inst.features.edge("K").unwrap().nrows(), 2 * g.num_edges());
        assert_eq!(inst.features.global.len(), 3);

        let grid = GridSpec::uniform(5, 5, true).unwrap();
        let inst = Instance::new(Domain::Grid(grid), Coefficients::Burgers(BurgersCoeffs { nu: 0.01 })).unwrap();
        assert_eq!(inst.features.edge("disp").unwrap().ncols(), 2);
        assert_eq!(inst.graph.num_nodes(), 25);

        assert!(Instance::new(Domain::Graph(g), Coefficients::Burgers(BurgersCoeffs { nu: 0.01 })).is_err());
    }
}
