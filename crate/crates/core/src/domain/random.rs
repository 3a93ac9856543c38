//! Random graph families used as coupled-system domains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Attempts allowed before a generator gives up on producing a connected graph.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "RR")]
    RandomRegular,
    #[serde(rename = "ER")]
    ErdosRenyi,
    #[serde(rename = "BA")]
    BarabasiAlbert,
}

impl Topology {
    pub const ALL: [Topology; 3] = [Topology::RandomRegular, Topology::ErdosRenyi, Topology::BarabasiAlbert];

    pub fn short_name(self) -> &'static str {
        match self {
            Topology::RandomRegular => "RR",
            Topology::ErdosRenyi => "ER",
            Topology::BarabasiAlbert => "BA",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RR" => Ok(Topology::RandomRegular),
            "ER" => Ok(Topology::ErdosRenyi),
            "BA" => Ok(Topology::BarabasiAlbert),
            other => Err(Error::config(format!("unknown topology {other:?}"))),
        }
    }
}

/// Connected `degree`-regular graph on `n` nodes.
///
/// Stubs are paired at random; pairs that would form a loop or a repeated edge
/// are returned to the pool and re-paired until no admissible pair remains.
pub fn gen_random_regular(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    if !(n * degree).is_multiple_of(2) {
        return Err(Error::config(format!(
            "no {degree}-regular graph on {n} nodes: n*degree is odd"
        )));
    }
    if degree >= n {
        return Err(Error::config(format!(
            "degree {degree} must be smaller than node count {n}"
        )));
    }
    if degree == 0 && n > 1 {
        return Err(Error::config("a 0-regular graph on several nodes is disconnected"));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(edges) = try_regular(n, degree, &mut rng) {
            let g = Graph::new(n, edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
    }
    Err(Error::Generation(format!(
        "no connected {degree}-regular graph on {n} nodes after {MAX_ATTEMPTS} attempts"
    )))
}

fn try_regular(n: usize, degree: usize, rng: &mut Rng) -> Option<BTreeSet<[usize; 2]>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert([a, b]) {
                continue;
            }
            *leftover.entry(a).or_default() += 1;
            *leftover.entry(b).or_default() += 1;
        }
        if !leftover.is_empty() && !can_pair(&edges, &leftover) {
            return None;
        }
        stubs = leftover.iter().flat_map(|(&v, &k)| std::iter::repeat_n(v, k)).collect();
    }
    Some(edges)
}

// True when some two distinct leftover nodes are not yet adjacent.
fn can_pair(edges: &BTreeSet<[usize; 2]>, leftover: &BTreeMap<usize, usize>) -> bool {
    let nodes: Vec<usize> = leftover.keys().copied().collect();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if !edges.contains(&[a, b]) {
                return true;
            }
        }
    }
    false
}

/// Connected G(n, p) graph with `p = mean_degree / (n - 1)`.
pub fn gen_erdos_renyi(n: usize, mean_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 || !(mean_degree > 0.0 && mean_degree <= (n - 1) as f64) {
        return Err(Error::config(format!(
            "mean degree {mean_degree} outside (0, {}]",
            n.saturating_sub(1)
        )));
    }
    let p = mean_degree / (n - 1) as f64;
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    edges.push([a, b]);
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!(
        "no connected G({n}, {p:.4}) sample after {MAX_ATTEMPTS} attempts"
    )))
}

/// Preferential attachment grown from a complete graph on `attach + 1` nodes.
pub fn gen_barabasi_albert(n: usize, attach: usize, seed: u64) -> Result<Graph> {
    if attach == 0 || attach >= n {
        return Err(Error::config(format!("attachment count {attach} must lie in [1, {n})")));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    // Each node appears once per incident edge, so uniform picks are
    // degree-proportional.
    let mut endpoints = Vec::new();
    for a in 0..=attach {
        for b in a + 1..=attach {
            edges.push([a, b]);
            endpoints.extend([a, b]);
        }
    }
    for node in attach + 1..n {
        let mut targets = BTreeSet::new();
        while targets.len() < attach {
            targets.insert(endpoints[rng.random_range(0..endpoints.len())]);
        }
        for &t in &targets {
            edges.push([t, node]);
            endpoints.extend([t, node]);
        }
    }
    Graph::new(n, edges)
}
