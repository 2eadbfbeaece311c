//! Finishing the dense part: the reduce step, augmenting forests grown
//! level by level inside each almost-clique, and the two harvest rules.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rand::Rng;

use crate::coloring::PartialColoring;
use crate::engine::PhaseStatus;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::matching::{clique_palette, ColorfulMatching};
use crate::palette::{Color, Sublist};
use crate::params::ceil_log2;
use crate::precondition::StrongDecomposition;
use crate::push::random_push;
use crate::rng;
use crate::sim::Sim;

/// Round cost of one step run by all cliques in parallel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Cost {
    rounds: u64,
    bits: u64,
    distinct: u64,
    total: u64,
}

impl Cost {
    fn par(&mut self, other: Cost) {
        self.rounds = self.rounds.max(other.rounds);
        self.bits = self.bits.max(other.bits);
        self.distinct = self.distinct.max(other.distinct);
        self.total += other.total;
    }

    fn charge(self, sim: &mut Sim) {
        sim.net.charge(self.rounds, self.bits, self.distinct, self.total);
    }
}

/// Depth of the augmenting forest: ⌊log_β(Δ/(αk))⌋, 0 when the ratio is below β.
pub fn forest_depth(delta: usize, alpha: usize, beta: usize, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let ratio = delta as f64 / (alpha * k) as f64;
    let mut d = 0;
    let mut pow = beta as f64;
    while pow <= ratio * (1.0 + 1e-12) {
        d += 1;
        pow *= beta as f64;
    }
    d
}

/// Uncolored members of clique `ci`.
pub fn uncolored_in(sd: &StrongDecomposition, coloring: &PartialColoring, ci: usize) -> Vec<NodeId> {
    sd.dec.cliques[ci]
        .members
        .iter()
        .copied()
        .filter(|&v| !coloring.is_colored(v))
        .collect()
}

fn in_table(palette: u32, colors: &[Color]) -> Vec<bool> {
    let mut t = vec![false; palette as usize + 1];
    for &c in colors {
        t[c as usize] = true;
    }
    t
}

/// Per-clique outcome of the reduce step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReduceReport {
    pub rounds: usize,
    /// Uncolored count per clique before and after.
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

/// Randomized trials restricted to the clique palette until every clique
/// has fewer than Δ/(αβ) uncolored nodes or the round budget is spent.
pub fn reduce_uncolored(sim: &mut Sim, sd: &StrongDecomposition) -> Result<ReduceReport> {
    let dec = &sd.dec;
    let target = sim.r.reduce_target();
    let t = sim.r.alpha * sim.r.beta;
    let palette = sim.lists.palette();
    let w = sim.widths();
    let depth = dec.cliques.iter().map(|c| sim.local_depth(&c.members)).max().unwrap_or(0);
    let before: Vec<usize> = (0..dec.cliques.len()).map(|i| uncolored_in(sd, &sim.coloring, i).len()).collect();
    let mut rounds = 0;
    for round in 0..sim.r.reduce_rounds {
        if sim.net.over_cap() {
            break;
        }
        sim.net.charge_tree(2 * depth, w.id, 1);
        let active: Vec<usize> = (0..dec.cliques.len())
            .filter(|&i| {
                let k = uncolored_in(sd, &sim.coloring, i).len();
                k > 0 && k as f64 >= target
            })
            .collect();
        if active.is_empty() {
            break;
        }
        rounds += 1;
        let mut tries = Vec::new();
        let mut exhausted = 0;
        for &ci in &active {
            let psi_c = in_table(palette, &clique_palette(&dec.cliques[ci].members, &sim.coloring, palette));
            for v in uncolored_in(sd, &sim.coloring, ci) {
                let mut r = rng::stream(sim.seed, v as u64, rng::tag::REDUCE, round as u64);
                if !r.gen_bool(sim.r.trial_activation) {
                    continue;
                }
                let mut drawn = 0;
                while drawn < t {
                    match sim.lists.next_fresh(v, Sublist::L1) {
                        Some(c) => {
                            drawn += 1;
                            if psi_c[c as usize] && sim.free_for(v, c) {
                                tries.push((v, vec![c]));
                                break;
                            }
                        }
                        None => {
                            exhausted += 1;
                            break;
                        }
                    }
                }
            }
        }
        sim.net.note_exhausted(exhausted);
        // Ψ_C membership is checked inside the two-hop color groups.
        sim.net.charge(2, w.color, 0, 0);
        sim.trial_round(tries)?;
    }
    let after = (0..dec.cliques.len()).map(|i| uncolored_in(sd, &sim.coloring, i).len()).collect();
    Ok(ReduceReport { rounds, before, after })
}

/// Spoiled: at most k/2 colors of Ψ_C ∩ Ψ_v survive, after also removing
/// the current L3 sublist of neighbors in other cliques when the external
/// filter is on.
pub fn is_spoiled(sim: &Sim, sd: &StrongDecomposition, ci: usize, v: NodeId, k: usize, ell: usize) -> bool {
    let palette = sim.lists.palette();
    let psi_c = clique_palette(&sd.dec.cliques[ci].members, &sim.coloring, palette);
    let psi_v = sim.coloring.palette_of(&sim.g, v, palette);
    let ext = if sim.r.external_l3_filter { external_l3(sim, sd, ci, v, ell) } else { vec![false; palette as usize + 1] };
    let avail = psi_c.iter().filter(|&&c| psi_v[c as usize] && !ext[c as usize]).count();
    avail as f64 <= k as f64 / 2.0
}

/// Colors of L3,ℓ (both halves) of v's neighbors in other surviving cliques.
fn external_l3(sim: &Sim, sd: &StrongDecomposition, ci: usize, v: NodeId, ell: usize) -> Vec<bool> {
    let mut t = vec![false; sim.lists.palette() as usize + 1];
    for &u in sim.g.neighbors(v) {
        if sd.dec.clique_of[u].is_some_and(|j| j != ci) {
            for s in [Sublist::L3G(ell), Sublist::L3H(ell)] {
                for &c in sim.lists.get(u, s) {
                    t[c as usize] = true;
                }
            }
        }
    }
    t
}

/// One augmenting forest inside a clique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AugForest {
    pub clique: usize,
    pub k: usize,
    pub d: usize,
    /// levels[i] = U_i in discovery order.
    pub levels: Vec<Vec<NodeId>>,
    /// Child -> (parent, link color held by the child).
    pub parent: BTreeMap<NodeId, (NodeId, Color)>,
    pub root_of: BTreeMap<NodeId, NodeId>,
    pub children: BTreeMap<NodeId, usize>,
    /// Nodes below level d that found fewer than β children.
    pub starved: usize,
    /// Colors sampled below level d and how many failed a filter.
    pub draws_below_d: usize,
    pub fails_below_d: usize,
}

impl AugForest {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.levels.iter().flatten().copied()
    }

    /// Tree nodes without children, including childless roots.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut l: Vec<NodeId> = self.nodes().filter(|v| self.children.get(v).copied().unwrap_or(0) == 0).collect();
        l.sort_unstable();
        l
    }

    /// Path from `v` up to its root, starting at `v`.
    pub fn path_to_root(&self, mut v: NodeId) -> Vec<NodeId> {
        let mut p = vec![v];
        while let Some(&(u, _)) = self.parent.get(&v) {
            p.push(u);
            v = u;
        }
        p
    }

    /// Color changes that augment along the path from `leaf` with the
    /// leaf taking `color`: each node takes the link color of its child.
    pub fn recoloring(&self, leaf: NodeId, color: Color) -> Vec<(NodeId, Color)> {
        let path = self.path_to_root(leaf);
        let mut out = vec![(leaf, color)];
        for w in path.windows(2) {
            let (child, parent) = (w[0], w[1]);
            out.push((parent, self.parent[&child].1));
        }
        out
    }

    /// Structural invariants: disjoint levels, parent one level up,
    /// parent adjacent to child, child holds the link color and no other
    /// neighbor of the parent does.
    pub fn check(&self, g: &Graph, coloring: &PartialColoring) -> std::result::Result<(), String> {
        let mut level_of = HashMap::new();
        for (i, lvl) in self.levels.iter().enumerate() {
            for &v in lvl {
                if level_of.insert(v, i).is_some() {
                    return Err(format!("node {v} appears twice in the forest"));
                }
            }
        }
        if let Some(&r) = self.levels.first().and_then(|l| l.iter().find(|&&r| coloring.is_colored(r))) {
            return Err(format!("root {r} is colored"));
        }
        for (&child, &(p, c)) in &self.parent {
            let (lc, lp) = (level_of.get(&child), level_of.get(&p));
            match (lc, lp) {
                (Some(&a), Some(&b)) if a == b + 1 => {}
                _ => return Err(format!("parent {p} of {child} is not one level up")),
            }
            if !g.has_edge(p, child) {
                return Err(format!("parent {p} not adjacent to child {child}"));
            }
            if coloring.get(child) != Some(c) {
                return Err(format!("child {child} does not hold link color {c}"));
            }
            if let Some(&x) = g.neighbors(p).iter().find(|&&x| x != child && coloring.raw(x) == c) {
                return Err(format!("link color {c} of {p} also held by {x}"));
            }
        }
        Ok(())
    }

    /// One line per tree node: `node level parent|- link|-`.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, lvl) in self.levels.iter().enumerate() {
            for &v in lvl {
                match self.parent.get(&v) {
                    Some(&(p, c)) => writeln!(w, "{v} {i} {p} {c}")?,
                    None => writeln!(w, "{v} {i} - -")?,
                }
            }
        }
        Ok(())
    }
}

/// Context shared by the per-clique steps of one iteration.
struct CliqueView {
    ci: usize,
    members: Vec<NodeId>,
    member_set: HashSet<NodeId>,
    m_colors: HashSet<Color>,
    m_nodes: HashSet<NodeId>,
}

fn view(sd: &StrongDecomposition, ms: &[ColorfulMatching], ci: usize) -> CliqueView {
    let members = sd.dec.cliques[ci].members.clone();
    let member_set = members.iter().copied().collect();
    let m = ms.get(ci).cloned().unwrap_or_default();
    CliqueView {
        ci,
        members,
        member_set,
        m_colors: m.colors().into_iter().collect(),
        m_nodes: m.nodes().into_iter().collect(),
    }
}

/// Grow the augmenting forest of one clique. Returns the forest and the
/// cost of the growth for this clique.
fn grow_one(sim: &mut Sim, sd: &StrongDecomposition, cv: &CliqueView, k: usize, ell: usize) -> (AugForest, Cost) {
    let w = sim.widths();
    let beta = sim.r.beta;
    let delta = sim.g.delta();
    let alpha = sim.r.alpha;
    let d = forest_depth(delta, alpha, beta, k);
    let roots = uncolored_in(sd, &sim.coloring, cv.ci);
    let mut f = AugForest {
        clique: cv.ci,
        k,
        d,
        levels: vec![roots.clone()],
        ..Default::default()
    };
    for &r in &roots {
        f.root_of.insert(r, r);
    }
    let mut cost = Cost::default();
    let depth = sim.local_depth(&cv.members);
    // Colors held by B_i = U_{≤i} ∪ M.
    let mut b_colors: HashSet<Color> = cv.m_colors.clone();
    let mut in_b: HashSet<NodeId> = cv.m_nodes.iter().copied().chain(roots.iter().copied()).collect();
    for i in 0..=d {
        let level = f.levels[i].clone();
        if level.is_empty() {
            break;
        }
        let x = if i < d {
            5 * beta
        } else {
            // |U_d| is counted exactly over the clique's BFS tree.
            cost.rounds += 2 * (d as u64 + 1).min(depth.max(1));
            ((6 * delta) as f64 / (alpha * level.len()) as f64).floor() as usize
        };
        let mut samples: Vec<(NodeId, Vec<Color>)> = Vec::with_capacity(level.len());
        let mut exhausted = 0;
        for &u in &level {
            let s = sim.lists.fresh_up_to(u, Sublist::L3G(ell), x);
            if s.len() < x {
                exhausted += 1;
            }
            samples.push((u, s));
        }
        sim.net.note_exhausted(exhausted);
        let mut multiplicity: HashMap<Color, usize> = HashMap::new();
        for (_, s) in &samples {
            for &c in s {
                *multiplicity.entry(c).or_default() += 1;
            }
        }
        let max_x = samples.iter().map(|(_, s)| s.len()).max().unwrap_or(0) as u64;
        let bits = w.color * max_x;
        let rounds = sim.net.rounds_for(bits).max(1);
        // Announce samples, check uniqueness in color groups, pick children.
        cost.rounds += rounds + 2 + 1;
        cost.bits = cost.bits.max(bits.max(w.id + w.color));
        cost.distinct = cost.distinct.max(level.iter().map(|&u| sim.sparse().degree(u) as u64).max().unwrap_or(0));
        cost.total += bits * level.len() as u64;

        let mut next = Vec::new();
        let mut new_b = Vec::new();
        for (u, s) in samples {
            let ext = if sim.r.external_l3_filter { Some(external_l3(sim, sd, cv.ci, u, ell)) } else { None };
            let mut kids = Vec::new();
            let mut fails = 0;
            for &c in &s {
                let held_outside = sim
                    .g
                    .neighbors(u)
                    .iter()
                    .any(|&v| !cv.member_set.contains(&v) && sim.coloring.raw(v) == c);
                let ok_i = !held_outside && ext.as_ref().is_none_or(|e| !e[c as usize]);
                let ok_ii = !b_colors.contains(&c);
                let ok_iii = multiplicity[&c] == 1;
                let holder = sim
                    .sparse()
                    .neighbors(u)
                    .iter()
                    .copied()
                    .filter(|v| cv.member_set.contains(v) && !in_b.contains(v) && sim.coloring.raw(*v) == c)
                    .min();
                if ok_i && ok_ii && ok_iii && holder.is_some() {
                    kids.push((holder.unwrap(), c));
                } else {
                    fails += 1;
                }
            }
            if i < d {
                f.draws_below_d += s.len();
                f.fails_below_d += fails;
                if kids.len() < beta {
                    f.starved += 1;
                }
                kids.truncate(beta);
            }
            f.children.insert(u, kids.len());
            let root = f.root_of[&u];
            for (v, c) in kids {
                f.parent.insert(v, (u, c));
                f.root_of.insert(v, root);
                next.push(v);
                new_b.push((v, c));
            }
        }
        for (v, c) in new_b {
            in_b.insert(v);
            b_colors.insert(c);
        }
        f.levels.push(next);
    }
    while f.levels.last().is_some_and(|l| l.is_empty()) && f.levels.len() > 1 {
        f.levels.pop();
    }
    (f, cost)
}

/// Growth for every clique in `targets`; all cliques grow in parallel.
pub fn grow_trees(sim: &mut Sim, sd: &StrongDecomposition, ms: &[ColorfulMatching], targets: &[(usize, usize)], ell: usize) -> Vec<AugForest> {
    let mut total = Cost::default();
    let mut out = Vec::new();
    for &(ci, k) in targets {
        let cv = view(sd, ms, ci);
        let (f, c) = grow_one(sim, sd, &cv, k, ell);
        total.par(c);
        out.push(f);
    }
    total.charge(sim);
    out
}

/// Leaf colors that are adoptable: inside Ψ_C and unused around the leaf
/// (and outside the external L3 sublists when that filter is on).
fn adoptable(sim: &Sim, sd: &StrongDecomposition, ci: usize, psi_c: &[bool], v: NodeId, c: Color, ell: usize) -> bool {
    psi_c[c as usize] && sim.free_for(v, c) && (!sim.r.external_l3_filter || !external_l3(sim, sd, ci, v, ell)[c as usize])
}

/// A path recoloring proposed by a harvest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathChange {
    pub clique: usize,
    pub root: NodeId,
    pub changes: Vec<(NodeId, Color)>,
}

/// Single-trial harvest: each leaf tries one fresh L3H color; the min-ID
/// successful, non-conflicting leaf of each tree recolors its path.
pub fn harvest_high(sim: &mut Sim, sd: &StrongDecomposition, forests: &[&AugForest], ell: usize) -> Vec<PathChange> {
    let palette = sim.lists.palette();
    let mut out = Vec::new();
    let mut tried_total = 0u64;
    let mut max_d = 0;
    for f in forests {
        max_d = max_d.max(f.d as u64 + 1);
        let psi_c = in_table(palette, &clique_palette(&sd.dec.cliques[f.clique].members, &sim.coloring, palette));
        let mut tries: Vec<(NodeId, Color)> = Vec::new();
        for leaf in f.leaves() {
            if let Some(c) = sim.lists.next_fresh(leaf, Sublist::L3H(ell)) {
                tries.push((leaf, c));
            }
        }
        tried_total += tries.len() as u64;
        let mut trees_of_color: HashMap<Color, HashSet<NodeId>> = HashMap::new();
        for &(v, c) in &tries {
            trees_of_color.entry(c).or_default().insert(f.root_of[&v]);
        }
        let mut best: BTreeMap<NodeId, (NodeId, Color)> = BTreeMap::new();
        for &(v, c) in &tries {
            if trees_of_color[&c].len() > 1 || !adoptable(sim, sd, f.clique, &psi_c, v, c, ell) {
                continue;
            }
            let root = f.root_of[&v];
            let e = best.entry(root).or_insert((v, c));
            if v < e.0 {
                *e = (v, c);
            }
        }
        for (root, (leaf, c)) in best {
            out.push(PathChange {
                clique: f.clique,
                root,
                changes: f.recoloring(leaf, c),
            });
        }
    }
    let w = sim.widths();
    if tried_total > 0 {
        // Announce tries, detect cross-tree collisions in color groups,
        // learn success up the tree.
        sim.net.charge(1 + 2 + max_d, w.color + w.id, 0, tried_total * w.color);
    }
    out
}

/// Multi-color harvest for small k: leaves try β colors, roots collect up
/// to k candidates, the clique learns all (root, color) pairs by gossip and
/// matches roots to colors greedily by (root, color).
pub fn harvest_low(
    sim: &mut Sim,
    sd: &StrongDecomposition,
    forests: &[&AugForest],
    ell: usize,
    ext_tries: &HashMap<NodeId, Vec<Color>>,
) -> Vec<PathChange> {
    let palette = sim.lists.palette();
    let beta = sim.r.beta;
    let w = sim.widths();
    let push_rounds = 4 * ceil_log2(sim.g.delta().max(2));
    let mut out = Vec::new();
    let mut cost = Cost::default();
    let mut retried = false;
    for f in forests {
        let ci = f.clique;
        let psi_c = in_table(palette, &clique_palette(&sd.dec.cliques[ci].members, &sim.coloring, palette));
        let members = sd.dec.cliques[ci].members.clone();
        // Candidate colors per root, each with its min-ID leaf.
        let mut cand: BTreeMap<NodeId, BTreeMap<Color, NodeId>> = BTreeMap::new();
        for leaf in f.leaves() {
            let tried = ext_tries.get(&leaf).cloned().unwrap_or_default();
            for c in tried {
                let ext_hit = sim
                    .g
                    .neighbors(leaf)
                    .iter()
                    .any(|&u| sd.dec.clique_of[u] != Some(ci) && ext_tries.get(&u).is_some_and(|t| t.contains(&c)));
                if ext_hit || !adoptable(sim, sd, ci, &psi_c, leaf, c, ell) {
                    continue;
                }
                let root = f.root_of[&leaf];
                let e = cand.entry(root).or_default().entry(c).or_insert(leaf);
                *e = (*e).min(leaf);
            }
        }
        let mut messages: Vec<(NodeId, Color, NodeId)> = Vec::new();
        for (root, colors) in &cand {
            for (&c, &leaf) in colors.iter().take(f.k) {
                messages.push((*root, c, leaf));
            }
        }
        let per_root = cand.values().map(|m| m.len().min(f.k)).max().unwrap_or(0) as u64;
        let agg_bits = (w.color * per_root).max(w.color);
        let mut c_cost = Cost {
            rounds: (f.d as u64 + 1) * sim.net.rounds_for(agg_bits).max(1) + 1 + sim.net.rounds_for(w.color * beta as u64).max(1),
            bits: agg_bits,
            distinct: 1,
            total: agg_bits * f.nodes().count() as u64,
        };
        if !messages.is_empty() {
            let origins: Vec<NodeId> = messages.iter().map(|m| m.0).collect();
            let mut outcome = random_push(sim.sparse(), &members, &origins, push_rounds, rng::derive(sim.seed, rng::tag::HARVEST ^ ((ell as u64) << 20) ^ ci as u64));
            let mut rounds = push_rounds as u64;
            if !outcome.complete() {
                retried = true;
                outcome = random_push(sim.sparse(), &members, &origins, push_rounds, rng::derive(sim.seed ^ 0x5eed, rng::tag::HARVEST ^ ((ell as u64) << 20) ^ ci as u64));
                rounds += push_rounds as u64;
            }
            c_cost.rounds += rounds + f.d as u64 + 1;
            c_cost.bits = c_cost.bits.max(w.id + w.color);
            c_cost.distinct = members.iter().map(|&v| sim.sparse().degree(v) as u64).max().unwrap_or(0);
            let mut known: Vec<(NodeId, Color, NodeId)> = messages
                .iter()
                .enumerate()
                .filter(|&(m, _)| outcome.known_by_all(m))
                .map(|(_, &t)| t)
                .collect();
            known.sort_unstable();
            let mut used_roots = HashSet::new();
            let mut used_colors = HashSet::new();
            for (root, c, leaf) in known {
                if used_roots.contains(&root) || used_colors.contains(&c) {
                    continue;
                }
                used_roots.insert(root);
                used_colors.insert(c);
                out.push(PathChange {
                    clique: ci,
                    root,
                    changes: f.recoloring(leaf, c),
                });
            }
        }
        cost.par(c_cost);
    }
    if retried {
        sim.net.note_retry();
    }
    cost.charge(sim);
    out
}

/// Abort paths until no changing node ends next to a neighbor with the same
/// final color. Returns the surviving paths.
pub fn settle(g: &Graph, coloring: &PartialColoring, paths: Vec<PathChange>) -> Vec<PathChange> {
    let mut alive = vec![true; paths.len()];
    loop {
        let mut finals: HashMap<NodeId, Color> = HashMap::new();
        for (i, p) in paths.iter().enumerate() {
            if alive[i] {
                for &(v, c) in &p.changes {
                    finals.insert(v, c);
                }
            }
        }
        let final_of = |u: NodeId| finals.get(&u).copied().unwrap_or(coloring.raw(u));
        let mut changed = false;
        for (i, p) in paths.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let bad = p.changes.iter().any(|&(v, c)| g.neighbors(v).iter().any(|&u| final_of(u) == c));
            if bad {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    paths.into_iter().zip(alive).filter(|(_, a)| *a).map(|(p, _)| p).collect()
}

/// Outcome of one augmenting iteration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IterationReport {
    /// (clique, k before, k after) for cliques that had uncolored nodes.
    pub cliques: Vec<(usize, usize, usize)>,
    pub forests: Vec<AugForest>,
    pub aborted: usize,
}

impl IterationReport {
    pub fn uncolored_before(&self) -> usize {
        self.cliques.iter().map(|c| c.1).sum()
    }

    pub fn uncolored_after(&self) -> usize {
        self.cliques.iter().map(|c| c.2).sum()
    }
}

/// Count k, grow forests, harvest by regime and commit, for all cliques.
pub fn aug_iteration(sim: &mut Sim, sd: &StrongDecomposition, ms: &[ColorfulMatching], ell: usize) -> Result<IterationReport> {
    let w = sim.widths();
    let depth = sd.dec.cliques.iter().map(|c| sim.local_depth(&c.members)).max().unwrap_or(0);
    sim.net.charge_tree(2 * depth, w.id, 1);
    let targets: Vec<(usize, usize)> = (0..sd.dec.cliques.len())
        .map(|ci| (ci, uncolored_in(sd, &sim.coloring, ci).len()))
        .filter(|&(_, k)| k > 0)
        .collect();
    let mut report = IterationReport::default();
    if targets.is_empty() {
        return Ok(report);
    }
    let forests = grow_trees(sim, sd, ms, &targets, ell);
    let beta = sim.r.beta;
    let high: Vec<&AugForest> = forests.iter().filter(|f| f.k >= beta).collect();
    let low: Vec<&AugForest> = forests.iter().filter(|f| f.k < beta).collect();
    let mut paths = harvest_high(sim, sd, &high, ell);
    // Low-regime leaves draw their β colors up front so that external
    // neighbors see each other's tries.
    let mut ext_tries: HashMap<NodeId, Vec<Color>> = HashMap::new();
    for f in &low {
        for leaf in f.leaves() {
            let cs = sim.lists.fresh_up_to(leaf, Sublist::L3H(ell), beta);
            ext_tries.insert(leaf, cs);
        }
    }
    if !ext_tries.is_empty() {
        let senders: Vec<(NodeId, u64)> = ext_tries.iter().map(|(&v, cs)| (v, w.color * cs.len() as u64)).collect();
        sim.net.broadcast(&senders);
    }
    paths.extend(harvest_low(sim, sd, &low, ell, &ext_tries));
    let proposed = paths.len();
    let paths = settle(&sim.g, &sim.coloring, paths);
    report.aborted = proposed - paths.len();
    let changes: Vec<(NodeId, Color)> = paths.iter().flat_map(|p| p.changes.iter().copied()).collect();
    let max_d = forests.iter().map(|f| f.d as u64 + 1).max().unwrap_or(1);
    // Recolor each path bottom-up, one hop per round.
    sim.net.charge(max_d, w.color, 1, w.color * changes.len() as u64);
    sim.commit(&changes)?;
    for &(ci, k) in &targets {
        report.cliques.push((ci, k, uncolored_in(sd, &sim.coloring, ci).len()));
    }
    report.forests = forests;
    Ok(report)
}

/// The augmenting-path driver: iterations ℓ = 0, 1, ... on sublist ℓ mod β
/// until every clique is colored, the iteration budget runs out or the
/// round cap is hit.
pub fn augpath_phase(sim: &mut Sim, sd: &StrongDecomposition, ms: &[ColorfulMatching]) -> Result<Vec<IterationReport>> {
    sim.net.begin_phase("augpath");
    let count = sim.lists.layout().l3_count.max(1);
    let mut reports = Vec::new();
    for ell in 0..sim.r.aug_iterations {
        if sim.net.over_cap() {
            break;
        }
        let rep = aug_iteration(sim, sd, ms, ell % count)?;
        let done = rep.cliques.is_empty();
        reports.push(rep);
        if done {
            break;
        }
    }
    let left: usize = (0..sd.dec.cliques.len()).map(|ci| uncolored_in(sd, &sim.coloring, ci).len()).sum();
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, if left == 0 { PhaseStatus::Ok } else { PhaseStatus::Partial });
    Ok(reports)
}

/// Reduce step wrapped as a phase.
pub fn reduce_phase(sim: &mut Sim, sd: &StrongDecomposition) -> Result<ReduceReport> {
    sim.net.begin_phase("reduce");
    let rep = reduce_uncolored(sim, sd)?;
    let unc = sim.coloring.uncolored_count();
    let target = sim.r.reduce_target();
    let ok = rep.after.iter().all(|&k| (k as f64) < target || k == 0);
    sim.net.end_phase(unc, if ok { PhaseStatus::Ok } else { PhaseStatus::Partial });
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_formula() {
        assert_eq!(forest_depth(128, 2, 4, 4), 2);
        assert_eq!(forest_depth(256, 4, 10, 7), 0);
        assert_eq!(forest_depth(256, 4, 4, 1), 3);
        assert_eq!(forest_depth(100, 2, 5, 2), 2);
    }
}
