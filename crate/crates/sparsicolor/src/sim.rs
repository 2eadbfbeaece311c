//! State shared by all phases of one run.

use crate::coloring::{resolve_trials, PartialColoring};
use crate::engine::{Network, Widths};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::palette::{build_sparsified, sample_aux_edges, sample_aux_edges_tagged, AuxEdges, Color, ColorLists};
use crate::params::{Params, Resolved};
use crate::rng;

#[derive(Debug, Clone)]
pub struct Sim {
    pub g: Graph,
    pub lists: ColorLists,
    pub coloring: PartialColoring,
    pub net: Network,
    pub r: Resolved,
    pub seed: u64,
    /// Edges sampled for the decomposition.
    pub acd_edges: AuxEdges,
    /// Edges sampled for the introvert/extrovert test.
    pub classify_edges: AuxEdges,
    pub eta: f64,
}

impl Sim {
    /// Sample lists and aux edges, build the sparsified graph and network.
    pub fn new(g: Graph, params: &Params, seed: u64) -> Result<Sim> {
        let r = params.resolve(g.n(), g.delta())?;
        let lists = crate::palette::sample_palettes(g.n(), &r, rng::derive(seed, rng::tag::PALETTE));
        Ok(Self::with_lists(g, lists, r, seed))
    }

    pub fn with_lists(g: Graph, lists: ColorLists, r: Resolved, seed: u64) -> Sim {
        let sparse = build_sparsified(&g, &lists);
        let acd_edges = sample_aux_edges(&g, r.aux_rate, rng::derive(seed, rng::tag::AUX));
        let l_max = (0..g.n()).map(|v| lists.l2_len(v)).max().unwrap_or(0);
        let eta = r.eta(l_max);
        let rate = (eta * r.beta as f64 / g.delta().max(1) as f64).min(1.0);
        let classify_edges = sample_aux_edges_tagged(&g, rate, rng::derive(seed, rng::tag::CLASSIFY), rng::tag::CLASSIFY);
        let mut legal = acd_edges.clone();
        legal.merge(&classify_edges);
        let widths = Widths::new(g.n(), g.delta());
        let net = Network::new(sparse, &legal, widths, r.bandwidth, r.neighbor_budget, r.round_cap);
        Sim {
            coloring: PartialColoring::new(g.n()),
            g,
            lists,
            net,
            r,
            seed,
            acd_edges,
            classify_edges,
            eta,
        }
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn widths(&self) -> Widths {
        self.net.widths()
    }

    pub fn sparse(&self) -> &Graph {
        self.net.sparse()
    }

    pub fn e_max(&self) -> f64 {
        self.r.e_max(self.eta)
    }

    /// Apply simultaneous color changes, check properness on the original
    /// graph around them and charge one announcement round.
    pub fn commit(&mut self, changes: &[(NodeId, Color)]) -> Result<()> {
        if changes.is_empty() {
            return Ok(());
        }
        for &(v, c) in changes {
            debug_assert!(self.lists.contains(v, c), "color {c} not in the list of {v}");
            self.coloring.set(v, c);
        }
        let nodes: Vec<NodeId> = changes.iter().map(|&(v, _)| v).collect();
        if let Some((u, v)) = self.coloring.find_conflict_around(&self.g, &nodes) {
            self.net.note_conflict();
            return Err(Error::Conflict(u, v));
        }
        let bits = self.widths().color;
        let senders: Vec<(NodeId, u64)> = nodes.iter().map(|&v| (v, bits)).collect();
        self.net.broadcast(&senders);
        Ok(())
    }

    /// One trial round: broadcast tried colors, resolve, commit winners.
    pub fn trial_round(&mut self, tries: Vec<(NodeId, Vec<Color>)>) -> Result<Vec<(NodeId, Color)>> {
        if tries.is_empty() {
            return Ok(Vec::new());
        }
        let cb = self.widths().color;
        let senders: Vec<(NodeId, u64)> = tries.iter().map(|(v, cs)| (*v, cb * cs.len() as u64)).collect();
        self.net.broadcast(&senders);
        let kept = resolve_trials(self.sparse(), &self.coloring, &tries);
        self.commit(&kept)?;
        Ok(kept)
    }

    /// Ψ_v restricted to the sparsified neighborhood (equivalent to the full
    /// palette for every color of L(v)).
    pub fn free_for(&self, v: NodeId, c: Color) -> bool {
        !self.coloring.used_around(self.sparse(), v, c)
    }

    /// Depth of a BFS tree over the legal edges inside `members`, rooted at
    /// the first member. Unreachable members count as depth `members.len()`.
    pub fn local_depth(&self, members: &[NodeId]) -> u64 {
        if members.len() <= 1 {
            return 0;
        }
        let mut pos = std::collections::HashMap::with_capacity(members.len());
        for (i, &v) in members.iter().enumerate() {
            pos.insert(v, i);
        }
        let mut dist = vec![u64::MAX; members.len()];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for &w in self.net.legal_neighbors(members[i]) {
                if let Some(&j) = pos.get(&w) {
                    if dist[j] == u64::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        dist.iter()
            .map(|&d| if d == u64::MAX { members.len() as u64 } else { d })
            .max()
            .unwrap_or(0)
    }
}
