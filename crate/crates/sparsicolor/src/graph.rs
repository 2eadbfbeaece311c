//! Undirected simple graphs, instance generators and edge-list IO.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = usize;

/// Immutable simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    m: usize,
    delta: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
            delta: 0,
        }
    }

    /// Build from an edge list. Duplicates are merged; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InfeasibleSpec(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::InfeasibleSpec(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_adjacency(adj))
    }

    fn from_adjacency(mut adj: Vec<Vec<NodeId>>) -> Self {
        let mut m2 = 0;
        let mut delta = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            m2 += list.len();
            delta = delta.max(list.len());
        }
        Graph { adj, m: m2 / 2, delta }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as (u, v) with u < v, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Subgraph on the same node set keeping the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(NodeId, NodeId) -> bool) -> Graph {
        let mut adj = vec![Vec::new(); self.n()];
        for (u, v) in self.edges() {
            if keep(u, v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        Self::from_adjacency(adj)
    }

    /// Full scan of the structural invariants.
    pub fn check_invariants(&self) -> bool {
        let mut m2 = 0;
        let mut delta = 0;
        for (u, list) in self.adj.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &v in list {
                if v == u || v >= self.n() || self.adj[v].binary_search(&u).is_err() {
                    return false;
                }
            }
            m2 += list.len();
            delta = delta.max(list.len());
        }
        m2 == 2 * self.m && delta == self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Clique,
    Gnp,
    PlantedCliques,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clique" => Ok(Family::Clique),
            "gnp" => Ok(Family::Gnp),
            "planted" | "planted-cliques" => Ok(Family::PlantedCliques),
            other => Err(Error::Config(format!("unknown generator family '{other}'"))),
        }
    }
}

/// Generator parameters for every instance family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    /// Edge probability for `gnp`.
    pub p: f64,
    pub clique_count: usize,
    pub clique_size: usize,
    /// Each intra-clique edge is removed with probability `epsilon_holes / 2`.
    pub epsilon_holes: f64,
    /// Per-node cap on edges leaving its clique, as a fraction of `clique_size`.
    pub cross_fraction: f64,
    /// Edge probability among background (non-clique) nodes.
    pub background_p: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            family: Family::PlantedCliques,
            n: 1028,
            p: 0.1,
            clique_count: 3,
            clique_size: 257,
            epsilon_holes: 0.02,
            cross_fraction: 0.02,
            background_p: 0.3,
            seed: 1,
        }
    }
}

/// Standard stress instance: three cliques of size Δ+1 plus Δ background
/// nodes, so n ≈ 4Δ. Cross edges per member are capped at ⌊log₂ n⌋/2,
/// about half the desk e_max, so every clique stays introvert as Δ grows.
pub fn planted_for_delta(delta: usize, seed: u64) -> GenSpec {
    let n = 4 * delta + 3;
    let cap = ((n as f64).log2().floor() / 2.0).floor();
    GenSpec {
        family: Family::PlantedCliques,
        n,
        clique_count: 3,
        clique_size: delta + 1,
        epsilon_holes: 0.02,
        cross_fraction: ((cap + 0.5) / (delta + 1) as f64).min(1.0),
        background_p: 0.3,
        seed,
        ..GenSpec::default()
    }
}

/// Ground truth of a planted instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlantedPartition {
    pub cliques: Vec<Vec<NodeId>>,
    pub background: Vec<NodeId>,
}

pub fn gen_clique(n: usize, _seed: u64) -> Graph {
    let adj = (0..n).map(|u| (0..n).filter(|&v| v != u).collect()).collect();
    Graph::from_adjacency(adj)
}

pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::stream(seed, 0, rng::tag::GEN, 0);
    let p = p.clamp(0.0, 1.0);
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    Graph::from_adjacency(adj)
}

pub fn gen_planted(spec: &GenSpec) -> Result<(Graph, PlantedPartition)> {
    let cs = spec.clique_size;
    let planted = spec.clique_count * cs;
    if planted > spec.n {
        return Err(Error::InfeasibleSpec(format!(
            "{} cliques of size {} do not fit in n={}",
            spec.clique_count, cs, spec.n
        )));
    }
    if !(0.0..1.0 / 3.0).contains(&spec.epsilon_holes) {
        return Err(Error::InfeasibleSpec(format!(
            "epsilon_holes={} outside [0, 1/3)",
            spec.epsilon_holes
        )));
    }
    if !(0.0..=1.0).contains(&spec.cross_fraction) || !(0.0..=1.0).contains(&spec.background_p) {
        return Err(Error::InfeasibleSpec("fractions must lie in [0, 1]".into()));
    }
    let mut r = rng::stream(spec.seed, 1, rng::tag::GEN, 0);
    let n = spec.n;
    let mut adj = vec![Vec::new(); n];
    let mut cliques = Vec::with_capacity(spec.clique_count);
    let mut owner = vec![usize::MAX; n];
    let drop = spec.epsilon_holes / 2.0;
    for c in 0..spec.clique_count {
        let members: Vec<NodeId> = (c * cs..(c + 1) * cs).collect();
        for (i, &u) in members.iter().enumerate() {
            owner[u] = c;
            for &v in &members[i + 1..] {
                if drop == 0.0 || !r.gen_bool(drop) {
                    adj[u].push(v);
                    adj[v].push(u);
                }
            }
        }
        cliques.push(members);
    }
    let background: Vec<NodeId> = (planted..n).collect();
    for (i, &u) in background.iter().enumerate() {
        for &v in &background[i + 1..] {
            if r.gen_bool(spec.background_p) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }

    // External edges of clique members, each member capped at `cap`.
    let cap = (spec.cross_fraction * cs as f64).floor() as usize;
    let mut ext = vec![0usize; n];
    if cap > 0 && n > cs {
        let mut order: Vec<NodeId> = (0..planted).collect();
        order.shuffle(&mut r);
        for &u in &order {
            let mut attempts = 0;
            while ext[u] < cap && attempts < 4 * cap {
                attempts += 1;
                let v = r.gen_range(0..n);
                if v == u || owner[v] == owner[u] && owner[u] != usize::MAX {
                    continue;
                }
                if owner[v] != usize::MAX && ext[v] >= cap {
                    continue;
                }
                if adj[u].contains(&v) {
                    continue;
                }
                adj[u].push(v);
                adj[v].push(u);
                ext[u] += 1;
                if owner[v] != usize::MAX {
                    ext[v] += 1;
                }
            }
        }
    }
    Ok((Graph::from_adjacency(adj), PlantedPartition { cliques, background }))
}

/// Dispatch on the family; planted instances also return their partition.
pub fn generate(spec: &GenSpec) -> Result<(Graph, Option<PlantedPartition>)> {
    match spec.family {
        Family::Clique => Ok((gen_clique(spec.n, spec.seed), None)),
        Family::Gnp => {
            if !(0.0..=1.0).contains(&spec.p) {
                return Err(Error::InfeasibleSpec(format!("p={} outside [0, 1]", spec.p)));
            }
            Ok((gen_gnp(spec.n, spec.p, spec.seed), None))
        }
        Family::PlantedCliques => gen_planted(spec).map(|(g, p)| (g, Some(p))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub delta: usize,
    /// `histogram[d]` is the number of nodes of degree d.
    pub histogram: Vec<usize>,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let mut histogram = vec![0; g.delta() + 1];
    for v in 0..g.n() {
        histogram[g.degree(v)] += 1;
    }
    GraphStats {
        n: g.n(),
        m: g.m(),
        delta: g.delta(),
        histogram,
    }
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "# n={}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Parse the "u v" edge-list format. `n` comes from a `# n=<n>` header when
/// present, otherwise from the largest ID.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("n=") {
                n = Some(v.trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad node count '{v}'"),
                })?);
            }
            continue;
        }
        let mut it = t.split_whitespace();
        let mut next = || -> Result<NodeId> {
            let tok = it.next().ok_or(Error::Parse {
                line: i + 1,
                msg: "expected two node ids".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad node id '{tok}'"),
            })
        };
        let (u, v) = (next()?, next()?);
        if u == v {
            return Err(Error::Parse {
                line: i + 1,
                msg: "self-loop".into(),
            });
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v));
    }
    let n = n.unwrap_or(max_id.map_or(0, |m| m + 1));
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_sizes() {
        let g = gen_clique(1, 0);
        assert_eq!((g.m(), g.delta()), (0, 0));
        let g = gen_clique(4, 0);
        assert_eq!((g.m(), g.delta()), (6, 3));
        let g = gen_clique(257, 0);
        assert_eq!(g.delta(), 256);
        assert!((0..257).all(|v| g.degree(v) == 256));
        assert!(g.check_invariants());
    }

    #[test]
    fn gnp_extremes() {
        assert_eq!(gen_gnp(10, 0.0, 3).m(), 0);
        let g = gen_gnp(5, 1.0, 3);
        assert_eq!(g, gen_clique(5, 0));
    }

    #[test]
    fn planted_rejects_oversized() {
        let spec = GenSpec {
            n: 10,
            clique_count: 2,
            clique_size: 6,
            ..GenSpec::default()
        };
        assert!(matches!(gen_planted(&spec), Err(Error::InfeasibleSpec(_))));
        let spec = GenSpec {
            n: 10,
            clique_count: 1,
            clique_size: 5,
            epsilon_holes: 0.4,
            ..GenSpec::default()
        };
        assert!(gen_planted(&spec).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_gnp(30, 0.2, 9);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let h = read_edge_list(&buf[..]).unwrap();
        assert_eq!(g, h);
        let h = read_edge_list("# comment\n0 3\n1 2\n".as_bytes()).unwrap();
        assert_eq!((h.n(), h.m()), (4, 2));
        assert!(read_edge_list("0 x\n".as_bytes()).is_err());
    }
}
