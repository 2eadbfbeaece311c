//! Push gossip inside a sparsified almost-clique.

use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::rng;

/// Who knows which message after a run of [`random_push`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushOutcome {
    pub members: Vec<NodeId>,
    pub messages: usize,
    /// known[i] is a bitset over messages for members[i].
    pub known: Vec<Vec<u64>>,
    /// First round after which every member knew every message.
    pub complete_at: Option<usize>,
}

impl PushOutcome {
    pub fn knows(&self, member: usize, m: usize) -> bool {
        self.known[member][m / 64] >> (m % 64) & 1 == 1
    }

    pub fn complete(&self) -> bool {
        self.complete_at.is_some()
    }

    pub fn known_by_all(&self, m: usize) -> bool {
        (0..self.members.len()).all(|i| self.knows(i, m))
    }

    pub fn known_count(&self, member: usize) -> usize {
        self.known[member].iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Run `rounds` rounds of push gossip over the edges of `sparse` inside
/// `members` (sorted). Message m starts at `origins[m]`, which must be a
/// member. In each round every node that knows a message sends one
/// uniformly chosen known message over each incident clique edge.
pub fn random_push(sparse: &Graph, members: &[NodeId], origins: &[NodeId], rounds: usize, seed: u64) -> PushOutcome {
    let k = members.len();
    let words = origins.len().div_ceil(64).max(1);
    let pos = |v: NodeId| members.binary_search(&v).ok();
    let adj: Vec<Vec<usize>> = members
        .iter()
        .map(|&v| sparse.neighbors(v).iter().filter_map(|&u| pos(u)).collect())
        .collect();
    let mut known = vec![vec![0u64; words]; k];
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (m, &o) in origins.iter().enumerate() {
        let i = pos(o).expect("message origin outside the clique");
        known[i][m / 64] |= 1 << (m % 64);
        lists[i].push(m);
    }
    let full = |lists: &Vec<Vec<usize>>| lists.iter().all(|l| l.len() == origins.len());
    let mut complete_at = if full(&lists) { Some(0) } else { None };
    for round in 0..rounds {
        if complete_at.is_some() {
            break;
        }
        let mut arrivals: Vec<(usize, usize)> = Vec::new();
        for i in 0..k {
            if lists[i].is_empty() {
                continue;
            }
            let mut r = rng::stream(seed, members[i] as u64, rng::tag::PUSH, round as u64);
            for &j in &adj[i] {
                let m = lists[i][r.gen_range(0..lists[i].len())];
                arrivals.push((j, m));
            }
        }
        for (j, m) in arrivals {
            if known[j][m / 64] >> (m % 64) & 1 == 0 {
                known[j][m / 64] |= 1 << (m % 64);
                lists[j].push(m);
            }
        }
        if full(&lists) {
            complete_at = Some(round + 1);
        }
    }
    PushOutcome {
        members: members.to_vec(),
        messages: origins.len(),
        known,
        complete_at,
    }
}
