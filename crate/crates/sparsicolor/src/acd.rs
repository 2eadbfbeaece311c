//! Almost-clique decomposition: exact construction and the sketch-based
//! distributed version.

use std::io::Write;

use rand::Rng;

use crate::engine::{Field, PhaseStatus};
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::rng;
use crate::sim::Sim;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Identifier: the minimum ID among the clique's marker nodes.
    pub id: NodeId,
    /// Sorted members.
    pub members: Vec<NodeId>,
}

/// Partition of the nodes into sparse nodes and almost-cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub cliques: Vec<Clique>,
    /// Index into `cliques`, or `None` for sparse nodes.
    pub clique_of: Vec<Option<usize>>,
    /// Neighbors outside the node's own clique (all neighbors for sparse nodes).
    pub ext_degree: Vec<usize>,
    /// Non-neighbors inside the node's own clique (0 for sparse nodes).
    pub anti_degree: Vec<usize>,
}

/// Measured almost-clique bounds of one clique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueBounds {
    /// |C| / Δ.
    pub size_ratio: f64,
    /// min over members of |N(v) ∩ C| / Δ.
    pub inside_ratio: f64,
}

impl Decomposition {
    /// Build from explicit clique member lists; IDs are the minimum members.
    pub fn from_cliques(g: &Graph, cliques: Vec<Vec<NodeId>>) -> Self {
        Self::from_labelled(g, cliques.into_iter().filter(|c| !c.is_empty()).map(|c| (*c.iter().min().unwrap(), c)).collect())
    }

    pub fn from_labelled(g: &Graph, mut cliques: Vec<(NodeId, Vec<NodeId>)>) -> Self {
        cliques.sort_by_key(|(id, _)| *id);
        let n = g.n();
        let mut clique_of = vec![None; n];
        let cliques: Vec<Clique> = cliques
            .into_iter()
            .enumerate()
            .map(|(i, (id, mut members))| {
                members.sort_unstable();
                members.dedup();
                for &v in &members {
                    clique_of[v] = Some(i);
                }
                Clique { id, members }
            })
            .collect();
        let mut ext_degree = vec![0; n];
        let mut anti_degree = vec![0; n];
        for v in 0..n {
            match clique_of[v] {
                None => ext_degree[v] = g.degree(v),
                Some(i) => {
                    let inside = g.neighbors(v).iter().filter(|&&u| clique_of[u] == Some(i)).count();
                    ext_degree[v] = g.degree(v) - inside;
                    anti_degree[v] = cliques[i].members.len() - 1 - inside;
                }
            }
        }
        Decomposition {
            cliques,
            clique_of,
            ext_degree,
            anti_degree,
        }
    }

    pub fn is_sparse(&self, v: NodeId) -> bool {
        self.clique_of[v].is_none()
    }

    pub fn v_sparse(&self) -> Vec<NodeId> {
        (0..self.clique_of.len()).filter(|&v| self.clique_of[v].is_none()).collect()
    }

    /// d̄_C = Σ_{v∈C} a_v / |C|.
    pub fn avg_anti_degree(&self, i: usize) -> f64 {
        let m = &self.cliques[i].members;
        if m.is_empty() {
            return 0.0;
        }
        m.iter().map(|&v| self.anti_degree[v]).sum::<usize>() as f64 / m.len() as f64
    }

    pub fn clique_id(&self, v: NodeId) -> Option<NodeId> {
        self.clique_of[v].map(|i| self.cliques[i].id)
    }

    pub fn bounds(&self, g: &Graph, i: usize) -> CliqueBounds {
        let d = g.delta().max(1) as f64;
        let m = &self.cliques[i].members;
        let inside = m
            .iter()
            .map(|&v| g.neighbors(v).iter().filter(|&&u| self.clique_of[u] == Some(i)).count())
            .min()
            .unwrap_or(0);
        CliqueBounds {
            size_ratio: m.len() as f64 / d,
            inside_ratio: inside as f64 / d,
        }
    }

    /// Whether every clique satisfies the ε-almost-clique bounds.
    pub fn satisfies(&self, g: &Graph, eps: f64) -> bool {
        (0..self.cliques.len()).all(|i| {
            let b = self.bounds(g, i);
            b.size_ratio <= 1.0 + eps + 1e-12 && b.inside_ratio >= 1.0 - eps - 1e-12
        })
    }

    /// Partition as sorted member lists, for comparisons.
    pub fn partition(&self) -> Vec<Vec<NodeId>> {
        let mut p: Vec<Vec<NodeId>> = self.cliques.iter().map(|c| c.members.clone()).collect();
        p.sort();
        p
    }

    /// One line per node: `node clique_id|S e_v a_v`.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        for v in 0..self.clique_of.len() {
            match self.clique_id(v) {
                Some(id) => writeln!(w, "{v} {id} {} {}", self.ext_degree[v], self.anti_degree[v])?,
                None => writeln!(w, "{v} S {} {}", self.ext_degree[v], self.anti_degree[v])?,
            }
        }
        Ok(())
    }
}

/// |N(u) ∩ N(v)| for every edge, aligned with the adjacency lists.
fn common_neighbors(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; if n <= 16_384 { n * words } else { 0 }];
    if !bits.is_empty() {
        for v in 0..n {
            for &u in g.neighbors(v) {
                bits[v * words + u / 64] |= 1 << (u % 64);
            }
        }
    }
    (0..n)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&v| {
                    if bits.is_empty() {
                        sorted_intersection(g.neighbors(u), g.neighbors(v))
                    } else {
                        let a = &bits[u * words..(u + 1) * words];
                        let b = &bits[v * words..(v + 1) * words];
                        a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn sorted_intersection<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Exact friendship and popularity at level `x`: an edge is x-friendly when
/// its endpoints share (1−x)Δ neighbors, a node is x-popular with (1−x)Δ
/// x-friendly edges.
pub fn exact_popular(g: &Graph, common: &[Vec<usize>], x: f64) -> Vec<bool> {
    let d = g.delta() as f64;
    (0..g.n())
        .map(|v| {
            let friendly = common[v].iter().filter(|&&c| c as f64 >= (1.0 - x) * d).count();
            friendly as f64 >= (1.0 - x) * d && g.degree(v) > 0
        })
        .collect()
}

/// Components of the subgraph induced by `member` (over `adj`) that contain
/// a `marker` node, labelled by their minimum marker.
fn marked_components(n: usize, adj: impl Fn(NodeId) -> Vec<NodeId>, member: &[bool], marker: &[bool]) -> Vec<(NodeId, Vec<NodeId>)> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !member[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for w in adj(v) {
                if member[w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        if let Some(id) = comp.iter().copied().filter(|&v| marker[v]).min() {
            comp.sort_unstable();
            out.push((id, comp));
        }
    }
    out
}

/// Centralized decomposition with exact friendship and popularity: cliques
/// are the components of 2δ-popular nodes, joined by 2δ-friendly edges,
/// holding a δ/2-popular node.
pub fn acd_exact(g: &Graph, delta: f64) -> Decomposition {
    let common = common_neighbors(g);
    let member = exact_popular(g, &common, 2.0 * delta);
    let marker = exact_popular(g, &common, delta / 2.0);
    let need = (1.0 - 2.0 * delta) * g.delta() as f64;
    let friends = |v: NodeId| -> Vec<NodeId> {
        g.neighbors(v).iter().zip(&common[v]).filter(|&(_, &c)| c as f64 >= need).map(|(&u, _)| u).collect()
    };
    let comps = marked_components(g.n(), friends, &member, &marker);
    Decomposition::from_labelled(g, comps)
}

/// Sketch values r(v) ∈ [1, λ] and sets F(v) = {r(u) : u ∈ N(v), r(u) ≤ σ}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchState {
    pub r: Vec<u64>,
    pub f: Vec<Vec<u64>>,
    pub lambda: u64,
    pub sigma: u64,
}

pub fn build_sketches(g: &Graph, lambda: u64, sigma: u64, seed: u64) -> SketchState {
    let r: Vec<u64> = (0..g.n())
        .map(|v| rng::stream(seed, v as u64, rng::tag::SKETCH, 0).gen_range(1..=lambda.max(1)))
        .collect();
    let f = (0..g.n())
        .map(|v| {
            let mut s: Vec<u64> = g.neighbors(v).iter().map(|&u| r[u]).filter(|&x| x <= sigma).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    SketchState { r, f, lambda, sigma }
}

/// Friendship test on sketches at level `x`: |F(u) ∩ F(v)| ≥ (1−1.5x)Δσ/λ.
pub fn detect_friend(u: NodeId, v: NodeId, s: &SketchState, delta: usize, x: f64) -> bool {
    let shared = sorted_intersection(&s.f[u], &s.f[v]) as f64;
    shared >= (1.0 - 1.5 * x) * delta as f64 * s.sigma as f64 / s.lambda as f64
}

/// Popularity test at level `x` from the number of friendly edges among the
/// node's own samples, taken at rate `p`.
pub fn detect_popular(friendly_sampled: usize, delta: usize, p: f64, x: f64) -> bool {
    friendly_sampled as f64 >= (1.0 - 1.5 * x) * delta as f64 * p
}

/// Distributed decomposition. Sketches and aux edges are free setup; the
/// sketch exchange, popularity flags, label propagation and the clique
/// statistics are charged on the network.
pub fn acd_distributed(sim: &mut Sim) -> Result<Decomposition> {
    sim.net.begin_phase("acd");
    let g = &sim.g;
    let n = g.n();
    let delta = g.delta();
    let dl = sim.r.acd_delta;
    let s = build_sketches(g, sim.r.lambda, sim.r.sigma, rng::derive(sim.seed, rng::tag::SKETCH));
    let value_bits = crate::params::ceil_log2(s.lambda as usize + 1) as u64;

    // Exchange sketches over every sampled edge (both directions).
    let mut sends = Vec::new();
    for v in 0..n {
        for &w in &sim.acd_edges.adj[v] {
            sends.push((v, w, vec![Field::Bits(value_bits * s.f[v].len() as u64)]));
        }
    }
    sim.net.exchange(sends)?;

    let p = sim.r.aux_rate;
    let mut member = vec![false; n];
    let mut marker = vec![false; n];
    for v in 0..n {
        let owned = &sim.acd_edges.owned[v];
        if owned.is_empty() {
            continue;
        }
        let f1 = owned.iter().filter(|&&w| detect_friend(v, w, &s, delta, dl)).count();
        let f2 = owned.iter().filter(|&&w| detect_friend(v, w, &s, delta, dl / 2.0)).count();
        member[v] = detect_popular(f1, delta, p, dl);
        marker[v] = member[v] && detect_popular(f2, delta, p, dl / 2.0);
    }
    // Popularity flags to legal neighbors.
    let flags: Vec<(NodeId, u64)> = (0..n).filter(|&v| member[v]).map(|v| (v, 2)).collect();
    sim.net.broadcast(&flags);

    // Min-marker label propagation inside the popular subgraph over sampled
    // edges whose endpoints detected each other as friends. Plain G edges
    // would chain neighbouring cliques together through cross edges.
    let friendly: Vec<Vec<NodeId>> = (0..n)
        .map(|v| sim.acd_edges.adj[v].iter().copied().filter(|&w| detect_friend(v, w, &s, delta, dl)).collect())
        .collect();
    let mut label: Vec<NodeId> = (0..n).map(|v| if marker[v] { v } else { usize::MAX }).collect();
    let id_bits = sim.widths().id;
    loop {
        let mut next = label.clone();
        for v in 0..n {
            if !member[v] {
                continue;
            }
            for &w in &friendly[v] {
                if member[w] && label[w] < next[v] {
                    next[v] = label[w];
                }
            }
        }
        let senders: Vec<(NodeId, u64)> = (0..n).filter(|&v| member[v] && label[v] != usize::MAX).map(|v| (v, id_bits)).collect();
        let max_deg = senders.iter().map(|&(v, _)| sim.net.legal_neighbors(v).len() as u64).max().unwrap_or(0);
        sim.net.charge(1, id_bits, max_deg, id_bits * senders.len() as u64);
        if next == label {
            break;
        }
        label = next;
    }
    let mut groups: std::collections::BTreeMap<NodeId, Vec<NodeId>> = Default::default();
    for v in 0..n {
        if member[v] && label[v] != usize::MAX {
            groups.entry(label[v]).or_default().push(v);
        }
    }
    let dec = Decomposition::from_labelled(g, groups.into_iter().collect());

    // Neighbors learn clique IDs, then e_v, a_v and d̄_C by convergecast.
    let ids: Vec<(NodeId, u64)> = (0..n).map(|v| (v, id_bits + 1)).collect();
    sim.net.broadcast(&ids);
    let depth = dec.cliques.iter().map(|c| sim.local_depth(&c.members)).max().unwrap_or(0);
    sim.net.charge_tree(2 * depth, 2 * id_bits, 1);
    let uncolored = sim.coloring.uncolored_count();
    sim.net.end_phase(uncolored, PhaseStatus::Ok);
    Ok(dec)
}
