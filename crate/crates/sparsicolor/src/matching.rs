//! Colorful matchings inside almost-cliques: anti-edges whose endpoints
//! share a color, each pair with its own color.

use std::collections::{BTreeMap, HashSet};

use crate::coloring::PartialColoring;
use crate::engine::PhaseStatus;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::palette::{Color, ColorLists, Sublist};
use crate::precondition::StrongDecomposition;
use crate::push::random_push;
use crate::rng;
use crate::sim::Sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchedPair {
    pub u: NodeId,
    pub v: NodeId,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ColorfulMatching {
    pub pairs: Vec<MatchedPair>,
}

impl ColorfulMatching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn colors(&self) -> Vec<Color> {
        self.pairs.iter().map(|p| p.color).collect()
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.pairs.iter().flat_map(|p| [p.u, p.v]).collect()
    }

    /// Check the matching invariants against `g`, the clique members and
    /// the current coloring. Returns a description of the first violation.
    pub fn check(&self, g: &Graph, members: &[NodeId], coloring: &PartialColoring) -> std::result::Result<(), String> {
        let mut seen_nodes = HashSet::new();
        let mut seen_colors = HashSet::new();
        for p in &self.pairs {
            if members.binary_search(&p.u).is_err() || members.binary_search(&p.v).is_err() {
                return Err(format!("pair ({}, {}) leaves the clique", p.u, p.v));
            }
            if p.u == p.v || g.has_edge(p.u, p.v) {
                return Err(format!("pair ({}, {}) is not an anti-edge", p.u, p.v));
            }
            if coloring.get(p.u) != Some(p.color) || coloring.get(p.v) != Some(p.color) {
                return Err(format!("pair ({}, {}) does not hold color {}", p.u, p.v, p.color));
            }
            if !seen_nodes.insert(p.u) || !seen_nodes.insert(p.v) {
                return Err(format!("node of pair ({}, {}) matched twice", p.u, p.v));
            }
            if !seen_colors.insert(p.color) {
                return Err(format!("color {} used by two pairs", p.color));
            }
            for x in [p.u, p.v] {
                if coloring.used_around(g, x, p.color) {
                    return Err(format!("color {} of node {x} conflicts with a neighbor", p.color));
                }
            }
        }
        Ok(())
    }
}

/// Anti-edges (u < v) among `members` (sorted).
pub fn anti_edges(g: &Graph, members: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            if !g.has_edge(u, v) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Colors of [1, palette] unused by the colored members of C.
pub fn clique_palette(members: &[NodeId], coloring: &PartialColoring, palette: u32) -> Vec<Color> {
    let mut used = vec![false; palette as usize + 1];
    for &v in members {
        used[coloring.raw(v) as usize] = true;
    }
    (1..=palette).filter(|&c| !used[c as usize]).collect()
}

/// A node is promising when its anti-degree is at most |M|.
pub fn promising(anti_degree: usize, matching_size: usize) -> bool {
    anti_degree <= matching_size
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvailReport {
    /// avail_D(F).
    pub total: u64,
    /// avail_c(F) indexed by color (index 0 unused).
    pub per_color: Vec<u64>,
    pub heavy: Vec<Color>,
    pub anti_edges: usize,
    pub avg_anti_degree: f64,
}

/// Colors an anti-edge endpoint cannot adopt because of the outside: colors
/// of colored neighbors outside C and every L2 color (all sublists) of
/// uncolored neighbors outside C.
pub fn blocked_colors(
    g: &Graph,
    in_clique: &dyn Fn(NodeId) -> bool,
    coloring: &PartialColoring,
    lists: &ColorLists,
    v: NodeId,
) -> Vec<bool> {
    let palette = lists.palette();
    let layout = lists.layout();
    let mut blocked = vec![false; palette as usize + 1];
    for &u in g.neighbors(v) {
        if in_clique(u) {
            continue;
        }
        match coloring.get(u) {
            Some(c) => blocked[c as usize] = true,
            None => {
                for s in (0..layout.l2_count).map(Sublist::L2).chain([Sublist::L2Star]) {
                    for &c in lists.get(u, s) {
                        blocked[c as usize] = true;
                    }
                }
            }
        }
    }
    blocked
}

/// avail_D(F) for F the anti-edges of `members`, plus per-color tallies and
/// heavy colors (avail_c(F) ≥ d̄Δ/20).
pub fn avail(
    g: &Graph,
    members: &[NodeId],
    coloring: &PartialColoring,
    lists: &ColorLists,
    d: &[Color],
) -> AvailReport {
    let palette = lists.palette();
    let in_c = |u: NodeId| members.binary_search(&u).is_ok();
    let f = anti_edges(g, members);
    let mut per_color = vec![0u64; palette as usize + 1];
    let mut cache: BTreeMap<NodeId, Vec<bool>> = BTreeMap::new();
    for &(u, v) in &f {
        for x in [u, v] {
            cache.entry(x).or_insert_with(|| blocked_colors(g, &in_c, coloring, lists, x));
        }
        let (bu, bv) = (&cache[&u], &cache[&v]);
        for &c in d {
            if !bu[c as usize] && !bv[c as usize] {
                per_color[c as usize] += 1;
            }
        }
    }
    let avg_anti_degree = if members.is_empty() { 0.0 } else { 2.0 * f.len() as f64 / members.len() as f64 };
    let threshold = avg_anti_degree * g.delta() as f64 / 20.0;
    let heavy = (1..=palette).filter(|&c| per_color[c as usize] > 0 && per_color[c as usize] as f64 >= threshold).collect();
    AvailReport {
        total: per_color.iter().sum(),
        per_color,
        heavy,
        anti_edges: f.len(),
        avg_anti_degree,
    }
}

/// Pick the lexicographically smallest anti-edge among `nodes` (sorted).
fn smallest_anti_edge(g: &Graph, nodes: &[NodeId]) -> Option<(NodeId, NodeId)> {
    for (i, &u) in nodes.iter().enumerate() {
        if let Some(&v) = nodes[i + 1..].iter().find(|&&v| !g.has_edge(u, v)) {
            return Some((u, v));
        }
    }
    None
}

/// Sampling-based matching for all cliques in parallel. Iteration i uses
/// sublist L2,(i mod count). Returns one matching per clique of `sd`.
pub fn matching_rounds(sim: &mut Sim, sd: &StrongDecomposition) -> Result<Vec<ColorfulMatching>> {
    let dec = &sd.dec;
    let mut out = vec![ColorfulMatching::default(); dec.cliques.len()];
    let mut used: Vec<HashSet<Color>> = vec![HashSet::new(); dec.cliques.len()];
    let iters = sim.r.matching_iters;
    let count = sim.lists.layout().l2_count.max(1);
    let w = sim.widths();
    for it in 0..iters {
        if sim.net.over_cap() {
            break;
        }
        let sub = Sublist::L2(it % count);
        let uncolored: Vec<NodeId> = dec
            .cliques
            .iter()
            .flat_map(|c| c.members.iter().copied())
            .filter(|&v| !sim.coloring.is_colored(v))
            .collect();
        // Everyone announces its sample so external neighbors can react.
        let senders: Vec<(NodeId, u64)> = uncolored
            .iter()
            .map(|&v| (v, w.color * sim.lists.get(v, sub).len() as u64))
            .collect();
        sim.net.broadcast(&senders);

        let mut by_color: BTreeMap<(usize, Color), Vec<NodeId>> = BTreeMap::new();
        for &v in &uncolored {
            let l = sim.lists.get(v, sub);
            if l.len() != 1 {
                continue;
            }
            let c = l[0];
            let ci = dec.clique_of[v].expect("clique member");
            if used[ci].contains(&c) || !sim.free_for(v, c) {
                continue;
            }
            let ext_sampled = sim.g.neighbors(v).iter().any(|&u| {
                dec.clique_of[u] != Some(ci) && !sim.coloring.is_colored(u) && sim.lists.get(u, sub).contains(&c)
            });
            if ext_sampled {
                continue;
            }
            by_color.entry((ci, c)).or_default().push(v);
        }
        // Leader election inside the two-hop color group.
        sim.net.charge(2, w.id + w.color, 0, 0);
        let mut changes = Vec::new();
        for ((ci, c), nodes) in by_color {
            if let Some((u, v)) = smallest_anti_edge(&sim.g, &nodes) {
                changes.push((u, c));
                changes.push((v, c));
                used[ci].insert(c);
                out[ci].pairs.push(MatchedPair { u, v, color: c });
            }
        }
        sim.commit(&changes)?;
    }
    Ok(out)
}

/// Candidate triples (u, v, c) with u < v an anti-edge and c ∈ S_u ∩ S_v.
pub fn compact_candidates(g: &Graph, members: &[NodeId], s: &BTreeMap<NodeId, Vec<Color>>) -> Vec<(NodeId, NodeId, Color)> {
    let mut out = Vec::new();
    for (u, v) in anti_edges(g, members) {
        let (su, sv) = (&s[&u], &s[&v]);
        let (mut i, mut j) = (0, 0);
        while i < su.len() && j < sv.len() {
            match su[i].cmp(&sv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push((u, v, su[i]));
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    out
}

/// Select colors in (leader, color) order until at least `u` candidates
/// are covered, never exceeding `cap` candidates unless the first color
/// alone does.
pub fn select_colors(cands: &[(NodeId, NodeId, Color)], u: f64, cap: f64) -> HashSet<Color> {
    let mut per_color: BTreeMap<Color, (NodeId, usize)> = BTreeMap::new();
    for &(a, _, c) in cands {
        let e = per_color.entry(c).or_insert((a, 0));
        e.0 = e.0.min(a);
        e.1 += 1;
    }
    let mut order: Vec<(NodeId, Color, usize)> = per_color.into_iter().map(|(c, (l, n))| (l, c, n)).collect();
    order.sort_unstable();
    let mut picked = HashSet::new();
    let mut total = 0usize;
    for (_, c, n) in order {
        if total as f64 >= u {
            break;
        }
        if !picked.is_empty() && (total + n) as f64 > cap {
            break;
        }
        picked.insert(c);
        total += n;
    }
    picked
}

/// Greedy matching over candidates sorted by (color, pair).
pub fn greedy_colorful(cands: &[(NodeId, NodeId, Color)]) -> Vec<MatchedPair> {
    let mut sorted: Vec<(Color, NodeId, NodeId)> = cands.iter().map(|&(u, v, c)| (c, u, v)).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut nodes = HashSet::new();
    let mut colors = HashSet::new();
    let mut out = Vec::new();
    for (c, u, v) in sorted {
        if colors.contains(&c) || nodes.contains(&u) || nodes.contains(&v) {
            continue;
        }
        colors.insert(c);
        nodes.insert(u);
        nodes.insert(v);
        out.push(MatchedPair { u, v, color: c });
    }
    out
}

/// Dissemination-based matching for the cliques in `targets` (indices
/// into `sd.dec.cliques`), whose members must all be uncolored.
pub fn matching_compact(sim: &mut Sim, sd: &StrongDecomposition, targets: &[usize], k: f64) -> Result<Vec<(usize, ColorfulMatching)>> {
    let dec = &sd.dec;
    let w = sim.widths();
    let beta = sim.r.beta as f64;
    let mut results = Vec::new();
    if targets.is_empty() {
        return Ok(results);
    }

    // Share L2* with sparsified neighbors.
    let senders: Vec<(NodeId, u64)> = targets
        .iter()
        .flat_map(|&i| dec.cliques[i].members.iter().copied())
        .map(|v| (v, w.color * sim.lists.get(v, Sublist::L2Star).len() as u64))
        .collect();
    sim.net.broadcast(&senders);
    // Per-color two-hop groups count samplers; leaders aggregate candidates.
    sim.net.charge(2, w.color + w.id, 0, 0);
    let depth = targets.iter().map(|&i| sim.local_depth(&dec.cliques[i].members)).max().unwrap_or(0);
    sim.net.charge_tree(2 * depth, 2 * w.id, 1);

    let rounds = 4 * crate::params::ceil_log2(sim.g.delta().max(2)) as u64;
    let mut max_push_rounds = 0u64;
    let mut pending = Vec::new();
    for &ci in targets {
        let members = &dec.cliques[ci].members;
        let mut s: BTreeMap<NodeId, Vec<Color>> = BTreeMap::new();
        for &v in members {
            let mut sv: Vec<Color> = sim
                .lists
                .get(v, Sublist::L2Star)
                .iter()
                .copied()
                .filter(|&c| sim.free_for(v, c))
                .filter(|&c| {
                    !sim.g.neighbors(v).iter().any(|&u| {
                        dec.clique_of[u] != Some(ci) && !sim.coloring.is_colored(u) && sim.lists.get(u, Sublist::L2Star).contains(&c)
                    })
                })
                .collect();
            sv.sort_unstable();
            sv.dedup();
            s.insert(v, sv);
        }
        let cands = compact_candidates(&sim.g, members, &s);
        let dbar = dec.avg_anti_degree(ci);
        let u = 4.0 * sim.r.gamma * sim.r.gamma * k * dbar * beta * beta;
        let cap = sim.r.compact_cap * beta.powi(3);
        let selected: Vec<(NodeId, NodeId, Color)> = if cands.len() as f64 > u {
            let d = select_colors(&cands, u, cap);
            cands.into_iter().filter(|c| d.contains(&c.2)).collect()
        } else {
            cands
        };
        pending.push((ci, selected));
    }
    if !pending.is_empty() {
        // Selection walks the BFS tree down once.
        sim.net.charge_tree(depth, w.id + 16, 1);
    }
    let mut changes = Vec::new();
    let mut retried = false;
    for (ci, selected) in pending {
        let members = &dec.cliques[ci].members;
        let origins: Vec<NodeId> = selected.iter().map(|&(u, _, _)| u).collect();
        let mut outcome = random_push(sim.sparse(), members, &origins, rounds as usize, rng::derive(sim.seed, rng::tag::COMPACT ^ ci as u64));
        let mut used_rounds = rounds;
        if !outcome.complete() && !selected.is_empty() {
            retried = true;
            outcome = random_push(sim.sparse(), members, &origins, rounds as usize, rng::derive(sim.seed ^ 0x5eed, rng::tag::COMPACT ^ ci as u64));
            used_rounds += rounds;
        }
        if !selected.is_empty() {
            max_push_rounds = max_push_rounds.max(used_rounds);
        }
        let known: Vec<(NodeId, NodeId, Color)> = selected
            .iter()
            .enumerate()
            .filter(|&(m, _)| outcome.known_by_all(m))
            .map(|(_, &t)| t)
            .collect();
        let pairs = greedy_colorful(&known);
        for p in &pairs {
            changes.push((p.u, p.color));
            changes.push((p.v, p.color));
        }
        results.push((ci, ColorfulMatching { pairs }));
    }
    if retried {
        sim.net.note_retry();
    }
    let max_deg = targets
        .iter()
        .flat_map(|&i| dec.cliques[i].members.iter())
        .map(|&v| sim.sparse().degree(v) as u64)
        .max()
        .unwrap_or(0);
    sim.net.charge(max_push_rounds, 2 * w.id + w.color, max_deg, 0);
    sim.commit(&changes)?;
    Ok(results)
}

/// Both matching algorithms: the sampler everywhere, then the
/// dissemination variant for cliques whose matching stayed below Kβ.
pub fn matching_phase(sim: &mut Sim, sd: &StrongDecomposition) -> Result<Vec<ColorfulMatching>> {
    let k = sim.r.matching_k;
    sim.net.begin_phase("matching.rounds");
    let mut ms = matching_rounds(sim, sd)?;
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, PhaseStatus::Ok);

    sim.net.begin_phase("matching.compact");
    let depth = sd.dec.cliques.iter().map(|c| sim.local_depth(&c.members)).max().unwrap_or(0);
    sim.net.charge_tree(depth, sim.widths().id, 1);
    let small: Vec<usize> = (0..ms.len()).filter(|&i| (ms[i].len() as f64) < k * sim.r.beta as f64).collect();
    for &i in &small {
        for v in ms[i].nodes() {
            sim.coloring.unset(v);
        }
        ms[i] = ColorfulMatching::default();
    }
    let compact = matching_compact(sim, sd, &small, k)?;
    for (i, m) in compact {
        ms[i] = m;
    }
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, if small.is_empty() { PhaseStatus::Skipped } else { PhaseStatus::Ok });
    Ok(ms)
}
