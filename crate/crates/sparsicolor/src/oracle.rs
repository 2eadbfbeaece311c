//! Centralized ground truth: coloring verification, exact bipartite
//! matching, the level-set matching invariant and brute-force checks of the
//! clique-palette and heavy-color counting arguments on small instances.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::coloring::PartialColoring;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::palette::{Color, ColorLists};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Valid,
    Conflict { u: NodeId, v: NodeId },
    ListViolation { node: NodeId },
    Incomplete { nodes: Vec<NodeId> },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    /// Conflicts and list violations break the coloring; an incomplete
    /// coloring is only unfinished.
    pub fn is_hard_failure(&self) -> bool {
        matches!(self, Verdict::Conflict { .. } | Verdict::ListViolation { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => write!(f, "valid"),
            Verdict::Conflict { u, v } => write!(f, "conflict {u} {v}"),
            Verdict::ListViolation { node } => write!(f, "list-violation {node}"),
            Verdict::Incomplete { nodes } => {
                write!(f, "incomplete {}", nodes.len())?;
                for v in nodes.iter().take(16) {
                    write!(f, " {v}")?;
                }
                if nodes.len() > 16 {
                    write!(f, " ...")?;
                }
                Ok(())
            }
        }
    }
}

/// Check a coloring against the graph and the lists. Conflicts are reported
/// first (smallest u, then v), then list violations, then uncolored nodes.
pub fn verify_coloring(g: &Graph, allowed: impl Fn(NodeId, Color) -> bool, coloring: &PartialColoring) -> Verdict {
    for v in 0..g.n() {
        let Some(c) = coloring.get(v) else { continue };
        for &u in g.neighbors(v) {
            if u > v && coloring.get(u) == Some(c) {
                return Verdict::Conflict { u: v, v: u };
            }
        }
    }
    for v in 0..g.n() {
        if let Some(c) = coloring.get(v) {
            if !allowed(v, c) {
                return Verdict::ListViolation { node: v };
            }
        }
    }
    let missing = coloring.uncolored();
    if missing.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Incomplete { nodes: missing }
    }
}

pub fn verify_with_lists(g: &Graph, lists: &ColorLists, coloring: &PartialColoring) -> Verdict {
    verify_coloring(g, |v, c| lists.contains(v, c), coloring)
}

/// Bipartite graph between left nodes (graph vertices) and right nodes
/// (colors), with an optional matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteInstance {
    pub left: usize,
    pub right: usize,
    /// Sorted right neighbors of each left node.
    pub adj: Vec<Vec<usize>>,
    pub matching: Option<Vec<(usize, usize)>>,
}

impl BipartiteInstance {
    pub fn new(left: usize, right: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); left];
        for (v, c) in edges {
            if v >= left || c >= right {
                return Err(Error::InvalidParams(format!("bipartite edge ({v}, {c}) out of range")));
            }
            adj[v].push(c);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        Ok(BipartiteInstance {
            left,
            right,
            adj,
            matching: None,
        })
    }

    /// Node v is joined to color c ∈ lists[v]; color c becomes right node c−1.
    pub fn from_lists(lists: &[Vec<Color>], palette: u32) -> Result<Self> {
        let mut edges = Vec::new();
        for (v, l) in lists.iter().enumerate() {
            for &c in l {
                if c == 0 || c > palette {
                    return Err(Error::InvalidParams(format!("color {c} outside [1, {palette}]")));
                }
                edges.push((v, c as usize - 1));
            }
        }
        Self::new(lists.len(), palette as usize, edges)
    }

    pub fn has_edge(&self, v: usize, c: usize) -> bool {
        v < self.left && self.adj[v].binary_search(&c).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Right-to-left adjacency.
    pub fn right_adj(&self) -> Vec<Vec<usize>> {
        let mut r = vec![Vec::new(); self.right];
        for (v, a) in self.adj.iter().enumerate() {
            for &c in a {
                r[c].push(v);
            }
        }
        r
    }

    /// Pairs must be edges with distinct endpoints on both sides.
    pub fn check_matching(&self, pairs: &[(usize, usize)]) -> std::result::Result<(), String> {
        let mut used_l = vec![false; self.left];
        let mut used_r = vec![false; self.right];
        for &(v, c) in pairs {
            if !self.has_edge(v, c) {
                return Err(format!("({v}, {c}) is not an edge"));
            }
            if std::mem::replace(&mut used_l[v], true) {
                return Err(format!("left node {v} matched twice"));
            }
            if std::mem::replace(&mut used_r[c], true) {
                return Err(format!("right node {c} matched twice"));
            }
        }
        Ok(())
    }
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pair_left: Vec<Option<usize>>,
    pub pair_right: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.pair_left.iter().flatten().count()
    }

    /// (left, right) pairs by left node.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pair_left.iter().enumerate().filter_map(|(v, c)| c.map(|c| (v, c))).collect()
    }

    pub fn saturates_left(&self) -> bool {
        self.pair_left.iter().all(Option::is_some)
    }
}

/// Maximum matching by Hopcroft–Karp phases.
pub fn hopcroft_karp(inst: &BipartiteInstance) -> Matching {
    let order: Vec<usize> = (0..inst.left).collect();
    phases(&inst.adj, &order, inst.right)
}

/// Hopcroft–Karp with shuffled adjacency and start order, so different seeds
/// can reach different maximum matchings.
pub fn hopcroft_karp_shuffled(inst: &BipartiteInstance, seed: u64) -> Matching {
    let mut r = rng::stream(seed, 0, rng::tag::TEST, 0);
    let mut adj = inst.adj.clone();
    for a in &mut adj {
        a.shuffle(&mut r);
    }
    let mut order: Vec<usize> = (0..inst.left).collect();
    order.shuffle(&mut r);
    phases(&adj, &order, inst.right)
}

fn phases(adj: &[Vec<usize>], order: &[usize], right: usize) -> Matching {
    let l = adj.len();
    let mut pl = vec![NONE; l];
    let mut pr = vec![NONE; right];
    let mut dist = vec![u32::MAX; l];
    loop {
        let mut q = VecDeque::new();
        for &u in order {
            if pl[u] == NONE {
                dist[u] = 0;
                q.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = q.pop_front() {
            for &c in &adj[u] {
                let w = pr[c];
                if w == NONE {
                    found = true;
                } else if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; l];
        for &s in order {
            if pl[s] != NONE {
                continue;
            }
            let mut stack = vec![s];
            while let Some(&u) = stack.last() {
                if it[u] == adj[u].len() {
                    dist[u] = u32::MAX;
                    stack.pop();
                    continue;
                }
                let c = adj[u][it[u]];
                it[u] += 1;
                let w = pr[c];
                if w == NONE {
                    // Flip the path held on the stack.
                    for (i, &x) in stack.iter().enumerate().rev() {
                        let cx = if i + 1 == stack.len() { c } else { adj[x][it[x] - 1] };
                        pl[x] = cx;
                        pr[cx] = x;
                    }
                    break;
                } else if dist[w] == dist[u].saturating_add(1) {
                    stack.push(w);
                }
            }
        }
    }
    Matching {
        pair_left: pl.iter().map(|&c| (c != NONE).then_some(c)).collect(),
        pair_right: pr.iter().map(|&v| (v != NONE).then_some(v)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// A matching saturating every left node.
    Feasible { matching: Vec<(usize, usize)> },
    /// Left nodes whose joint neighborhood is smaller than themselves.
    Infeasible { hall_set: Vec<usize>, neighborhood: Vec<usize> },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Whether every left node can get a distinct right node. A failure carries
/// the alternating-reachable set from an unmatched node as Hall witness.
pub fn list_coloring_feasible(inst: &BipartiteInstance) -> Feasibility {
    let m = hopcroft_karp(inst);
    let Some(start) = m.pair_left.iter().position(Option::is_none) else {
        return Feasibility::Feasible { matching: m.pairs() };
    };
    let mut seen_l = vec![false; inst.left];
    let mut seen_r = vec![false; inst.right];
    let mut q = VecDeque::from([start]);
    seen_l[start] = true;
    while let Some(u) = q.pop_front() {
        for &c in &inst.adj[u] {
            if seen_r[c] {
                continue;
            }
            seen_r[c] = true;
            let w = m.pair_right[c].expect("maximum matching leaves no augmenting path");
            if !seen_l[w] {
                seen_l[w] = true;
                q.push_back(w);
            }
        }
    }
    Feasibility::Infeasible {
        hall_set: (0..inst.left).filter(|&v| seen_l[v]).collect(),
        neighborhood: (0..inst.right).filter(|&c| seen_r[c]).collect(),
    }
}

/// Maximum matching size by exhaustive search; for tiny instances only.
pub fn max_matching_brute(inst: &BipartiteInstance) -> usize {
    fn go(inst: &BipartiteInstance, v: usize, used: &mut Vec<bool>) -> usize {
        if v == inst.left {
            return 0;
        }
        let mut best = go(inst, v + 1, used);
        for &c in &inst.adj[v] {
            if !used[c] {
                used[c] = true;
                best = best.max(1 + go(inst, v + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(inst, 0, &mut vec![false; inst.right])
}

/// Every perfect matching (left and right both saturated) as sorted pairs.
pub fn all_perfect_matchings(inst: &BipartiteInstance) -> Vec<Vec<(usize, usize)>> {
    fn go(inst: &BipartiteInstance, v: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if v == inst.left {
            out.push(cur.clone());
            return;
        }
        for &c in &inst.adj[v] {
            if !used[c] {
                used[c] = true;
                cur.push((v, c));
                go(inst, v + 1, used, cur, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    if inst.left == inst.right {
        go(inst, 0, &mut vec![false; inst.right], &mut Vec::new(), &mut out);
    }
    out
}

/// BFS level sets from a root and the matching edges between consecutive
/// levels, next to the alternating sums S_d = Σ_{i≤d} (−1)^i |V_{d−i}|.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub sizes: Vec<usize>,
    pub matched_between: Vec<usize>,
    pub alternating: Vec<i64>,
}

impl LevelReport {
    /// First level gap where the count differs from S_d.
    pub fn first_mismatch(&self) -> Option<usize> {
        (0..self.matched_between.len()).find(|&d| self.matched_between[d] as i64 != self.alternating[d])
    }

    pub fn holds(&self) -> bool {
        self.first_mismatch().is_none()
    }
}

/// Level-set check from left node `root`. The matching must be perfect on
/// the root's component.
pub fn level_matching_check(inst: &BipartiteInstance, matching: &[(usize, usize)], root: usize) -> Result<LevelReport> {
    inst.check_matching(matching).map_err(Error::NotPerfectMatching)?;
    if root >= inst.left {
        return Err(Error::InvalidParams(format!("root {root} is not a left node")));
    }
    // Combined ids: left v -> v, right c -> left + c.
    let l = inst.left;
    let total = l + inst.right;
    let radj = inst.right_adj();
    let mut mate = vec![NONE; total];
    for &(v, c) in matching {
        mate[v] = l + c;
        mate[l + c] = v;
    }
    let mut level = vec![usize::MAX; total];
    level[root] = 0;
    let mut q = VecDeque::from([root]);
    let mut sizes: Vec<usize> = Vec::new();
    while let Some(x) = q.pop_front() {
        let d = level[x];
        if sizes.len() <= d {
            sizes.push(0);
        }
        sizes[d] += 1;
        if mate[x] == NONE {
            return Err(Error::NotPerfectMatching(format!("node {x} of the root's component is unmatched")));
        }
        let next: &[usize] = if x < l { &inst.adj[x] } else { &radj[x - l] };
        for &y in next {
            let y = if x < l { l + y } else { y };
            if level[y] == usize::MAX {
                level[y] = d + 1;
                q.push_back(y);
            }
        }
    }
    let gaps = sizes.len();
    let mut matched_between = vec![0usize; gaps];
    for &(v, c) in matching {
        let (a, b) = (level[v], level[l + c]);
        if a != usize::MAX && b != usize::MAX {
            let lo = a.min(b);
            if lo < gaps {
                matched_between[lo] += 1;
            }
        }
    }
    let mut alternating = Vec::with_capacity(gaps);
    let mut prev = 0i64;
    for d in 0..gaps {
        let s = sizes[d] as i64 - prev;
        alternating.push(s);
        prev = s;
    }
    Ok(LevelReport {
        sizes,
        matched_between,
        alternating,
    })
}

/// Random n+n instance that contains a hidden perfect matching plus extra
/// edges at rate `p`.
pub fn random_perfect_instance(n: usize, p: f64, seed: u64) -> BipartiteInstance {
    let mut r = rng::stream(seed, 1, rng::tag::TEST, 0);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut r);
    let mut edges: Vec<(usize, usize)> = perm.iter().enumerate().map(|(v, &c)| (v, c)).collect();
    for v in 0..n {
        for c in 0..n {
            if r.gen_bool(p) {
                edges.push((v, c));
            }
        }
    }
    BipartiteInstance::new(n, n, edges).expect("edges in range")
}

/// Lists of n nodes over `palette` colors, each color kept with probability p.
pub fn sample_lists(n: usize, palette: u32, p: f64, seed: u64) -> Vec<Vec<Color>> {
    (0..n)
        .map(|v| {
            let mut r = rng::stream(seed, v as u64, rng::tag::TEST, 1);
            (1..=palette).filter(|_| r.gen_bool(p)).collect()
        })
        .collect()
}

/// A small clique with external neighbors, a proper partial coloring that
/// contains a colorful matching, and L2 samples of uncolored outside nodes.
#[derive(Debug, Clone)]
pub struct LemmaConfig {
    pub g: Graph,
    /// Clique members are 0..clique.
    pub clique: usize,
    pub delta: usize,
    pub coloring: PartialColoring,
    pub matching: Vec<(NodeId, NodeId, Color)>,
    /// Sampled colors of uncolored external nodes (empty for others).
    pub ext_samples: Vec<Vec<Color>>,
}

impl LemmaConfig {
    pub fn anti_degree(&self, v: NodeId) -> usize {
        self.clique - 1 - self.g.neighbors(v).iter().filter(|&&u| u < self.clique).count()
    }

    pub fn anti_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for u in 0..self.clique {
            for v in u + 1..self.clique {
                if !self.g.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn avg_anti_degree(&self) -> f64 {
        (0..self.clique).map(|v| self.anti_degree(v)).sum::<usize>() as f64 / self.clique as f64
    }
}

pub fn random_lemma_config(max_clique: usize, seed: u64) -> LemmaConfig {
    let mut r = rng::stream(seed, 2, rng::tag::TEST, 0);
    let s = r.gen_range(3..=max_clique.max(3));
    let q: f64 = r.gen_range(0.0..0.35);
    let delta = s - 1 + r.gen_range(0..=3);
    let mut edges = Vec::new();
    for u in 0..s {
        for v in u + 1..s {
            if !r.gen_bool(q) {
                edges.push((u, v));
            }
        }
    }
    let mut deg = vec![0usize; s];
    for &(u, v) in &edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut n = s;
    for v in 0..s {
        let room = delta - deg[v];
        // Node 0 is filled up so the maximum degree is exactly delta.
        let e = if v == 0 { room } else { r.gen_range(0..=room) };
        for _ in 0..e {
            edges.push((v, n));
            n += 1;
        }
    }
    let g = Graph::from_edges(n, edges).expect("valid config edges");
    let palette = delta as u32 + 1;
    let mut coloring = PartialColoring::new(n);

    let mut anti: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..s {
        for v in u + 1..s {
            if !g.has_edge(u, v) {
                anti.push((u, v));
            }
        }
    }
    anti.shuffle(&mut r);
    let mut colors: Vec<Color> = (1..=palette).collect();
    colors.shuffle(&mut r);
    let want = r.gen_range(0..=anti.len().min(s / 2));
    let mut matching = Vec::new();
    let mut in_m = vec![false; s];
    for &(u, v) in &anti {
        if matching.len() == want {
            break;
        }
        if !in_m[u] && !in_m[v] {
            let c = colors[matching.len()];
            in_m[u] = true;
            in_m[v] = true;
            coloring.set(u, c);
            coloring.set(v, c);
            matching.push((u, v, c));
        }
    }
    let free = |coloring: &PartialColoring, v: NodeId| -> Vec<Color> { (1..=palette).filter(|&c| !coloring.used_around(&g, v, c)).collect() };
    for v in s..n {
        if r.gen_bool(0.5) {
            let f = free(&coloring, v);
            if let Some(&c) = f.choose(&mut r) {
                coloring.set(v, c);
            }
        }
    }
    let rho: f64 = r.gen_range(0.0..1.0);
    for v in 0..s {
        if !in_m[v] && r.gen_bool(rho) {
            let f = free(&coloring, v);
            if let Some(&c) = f.choose(&mut r) {
                coloring.set(v, c);
            }
        }
    }
    let ext_samples = (0..n)
        .map(|v| {
            if v < s || coloring.is_colored(v) {
                return Vec::new();
            }
            let k = r.gen_range(0..=3);
            let mut l: Vec<Color> = (0..k).map(|_| r.gen_range(1..=palette)).collect();
            l.sort_unstable();
            l.dedup();
            l
        })
        .collect();
    LemmaConfig {
        g,
        clique: s,
        delta,
        coloring,
        matching,
        ext_samples,
    }
}

/// Outcome of one configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaChecks {
    pub promising_checked: usize,
    pub palette_failure: Option<NodeId>,
    pub markov_failure: bool,
    pub heavy_applicable: bool,
    pub heavy_failure: bool,
}

/// Promising nodes (a_v ≤ |M|) keep |Ψ_C ∩ Ψ_v| ≥ number of uncolored clique
/// members.
fn check_palette(cfg: &LemmaConfig) -> (usize, Option<NodeId>) {
    let palette = cfg.delta as u32 + 1;
    let used_in_c: Vec<bool> = {
        let mut u = vec![false; palette as usize + 1];
        for v in 0..cfg.clique {
            if let Some(c) = cfg.coloring.get(v) {
                u[c as usize] = true;
            }
        }
        u
    };
    let uncolored = (0..cfg.clique).filter(|&v| !cfg.coloring.is_colored(v)).count();
    let mut checked = 0;
    for v in 0..cfg.clique {
        if cfg.anti_degree(v) > cfg.matching.len() {
            continue;
        }
        checked += 1;
        let both = (1..=palette).filter(|&c| !used_in_c[c as usize] && !cfg.coloring.used_around(&cfg.g, v, c)).count();
        if both < uncolored {
            return (checked, Some(v));
        }
    }
    (checked, None)
}

/// Markov count: with threshold m ≥ 2α·d̄ at most |C|/(2α) nodes have
/// anti-degree above m (above 0 when d̄ ≤ 1/(2α)), hence at most Δ/α.
fn check_markov(cfg: &LemmaConfig, alpha: f64) -> bool {
    let s = cfg.clique as f64;
    let dbar = cfg.avg_anti_degree();
    let unpromising = if dbar <= 1.0 / (2.0 * alpha) {
        (0..cfg.clique).filter(|&v| cfg.anti_degree(v) >= 1).count()
    } else {
        let m = (2.0 * alpha * dbar).ceil() as usize;
        (0..cfg.clique).filter(|&v| cfg.anti_degree(v) > m).count()
    } as f64;
    unpromising <= s / (2.0 * alpha) + 1e-9 && (s > 2.0 * cfg.delta as f64 || unpromising <= cfg.delta as f64 / alpha + 1e-9)
}

/// Colors blocked for clique member v by the outside.
fn blocked(cfg: &LemmaConfig, v: NodeId) -> Vec<bool> {
    let mut b = vec![false; cfg.delta + 2];
    for &u in cfg.g.neighbors(v) {
        if u < cfg.clique {
            continue;
        }
        match cfg.coloring.get(u) {
            Some(c) => b[c as usize] = true,
            None => {
                for &c in &cfg.ext_samples[u] {
                    b[c as usize] = true;
                }
            }
        }
    }
    b
}

/// With the clique uncolored and D = [Δ+1]: avail_D(F) ≥ d̄Δ²/6 implies at
/// least Δ/10 colors with avail_c(F) ≥ d̄Δ/20. Returns (applicable, holds).
fn check_heavy(cfg: &LemmaConfig) -> (bool, bool) {
    let dbar = cfg.avg_anti_degree();
    if dbar == 0.0 {
        return (false, true);
    }
    let d = cfg.delta as f64;
    let blocks: Vec<Vec<bool>> = (0..cfg.clique).map(|v| blocked(cfg, v)).collect();
    let mut per_color = vec![0usize; cfg.delta + 2];
    for (u, v) in cfg.anti_edges() {
        for c in 1..=cfg.delta + 1 {
            if !blocks[u][c] && !blocks[v][c] {
                per_color[c] += 1;
            }
        }
    }
    let total: usize = per_color.iter().sum();
    if (total as f64) < dbar * d * d / 6.0 {
        return (false, true);
    }
    let heavy = per_color.iter().filter(|&&a| a as f64 >= dbar * d / 20.0).count();
    (true, heavy as f64 >= d / 10.0)
}

pub fn check_config(cfg: &LemmaConfig, alpha: f64) -> LemmaChecks {
    let (promising_checked, palette_failure) = check_palette(cfg);
    let (heavy_applicable, heavy_ok) = check_heavy(cfg);
    LemmaChecks {
        promising_checked,
        palette_failure,
        markov_failure: !check_markov(cfg, alpha),
        heavy_applicable,
        heavy_failure: !heavy_ok,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub configs: usize,
    pub promising_checked: usize,
    pub palette_failures: usize,
    pub markov_failures: usize,
    pub heavy_applicable: usize,
    pub heavy_failures: usize,
    /// Full state of the first failing configuration.
    pub counterexample: Option<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.palette_failures == 0 && self.markov_failures == 0 && self.heavy_failures == 0
    }
}

/// Run the three checks on `configs` random configurations with cliques of
/// at most `max_clique` nodes.
pub fn brute_force_lemma_suite(configs: usize, max_clique: usize, seed: u64) -> LemmaReport {
    let mut rep = LemmaReport {
        configs,
        ..Default::default()
    };
    for i in 0..configs {
        let s = rng::derive(seed, i as u64);
        let cfg = random_lemma_config(max_clique, s);
        let alpha = [1.0, 2.0, 3.0, 5.0][i % 4];
        let c = check_config(&cfg, alpha);
        rep.promising_checked += c.promising_checked;
        rep.palette_failures += c.palette_failure.is_some() as usize;
        rep.markov_failures += c.markov_failure as usize;
        rep.heavy_applicable += c.heavy_applicable as usize;
        rep.heavy_failures += c.heavy_failure as usize;
        if rep.counterexample.is_none() && (c.palette_failure.is_some() || c.markov_failure || c.heavy_failure) {
            rep.counterexample = Some(format!("config {i} (alpha {alpha}): {c:?}\n{cfg:?}"));
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_clique;

    #[test]
    fn triangle_verdicts() {
        let g = gen_clique(3, 0);
        let full = |_: NodeId, _: Color| true;
        let ok = PartialColoring::from_colors(vec![Some(1), Some(2), Some(3)]);
        assert_eq!(verify_coloring(&g, full, &ok), Verdict::Valid);
        let part = PartialColoring::from_colors(vec![Some(1), None, Some(3)]);
        assert_eq!(verify_coloring(&g, full, &part), Verdict::Incomplete { nodes: vec![1] });
    }

    #[test]
    fn same_color_edge_is_a_conflict() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let c = PartialColoring::from_colors(vec![Some(5), Some(5)]);
        assert_eq!(verify_coloring(&g, |_, _| true, &c), Verdict::Conflict { u: 0, v: 1 });
        assert_eq!(verify_coloring(&g, |_, _| true, &c).to_string(), "conflict 0 1");
    }

    #[test]
    fn color_outside_list_is_a_violation() {
        let g = Graph::empty(2);
        let c = PartialColoring::from_colors(vec![Some(1), Some(7)]);
        let v = verify_coloring(&g, |v, c| v == 0 || c != 7, &c);
        assert_eq!(v, Verdict::ListViolation { node: 1 });
        assert!(v.is_hard_failure());
    }

    #[test]
    fn distinct_singletons_are_feasible() {
        let inst = BipartiteInstance::from_lists(&[vec![1], vec![2], vec![3]], 3).unwrap();
        assert!(list_coloring_feasible(&inst).is_feasible());
    }

    #[test]
    fn pigeonhole_gives_hall_witness() {
        let inst = BipartiteInstance::from_lists(&[vec![1], vec![1], vec![2]], 3).unwrap();
        assert_eq!(
            list_coloring_feasible(&inst),
            Feasibility::Infeasible {
                hall_set: vec![0, 1],
                neighborhood: vec![0]
            }
        );
    }

    #[test]
    fn path_levels() {
        // v0 - c1 - v1 - c2 with M = {v0c1, v1c2}; c1 -> 0, c2 -> 1.
        let inst = BipartiteInstance::new(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        let rep = level_matching_check(&inst, &[(0, 0), (1, 1)], 0).unwrap();
        assert_eq!(rep.sizes, vec![1, 1, 1, 1]);
        assert_eq!(rep.alternating, vec![1, 0, 1, 0]);
        assert_eq!(rep.matched_between, vec![1, 0, 1, 0]);
    }

    #[test]
    fn four_cycle_levels_hold_for_both_matchings() {
        let inst = BipartiteInstance::new(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let all = all_perfect_matchings(&inst);
        assert_eq!(all.len(), 2);
        for m in all {
            let rep = level_matching_check(&inst, &m, 0).unwrap();
            assert_eq!(rep.sizes, vec![1, 2, 1]);
            assert_eq!(rep.alternating, vec![1, 1, 0]);
            assert!(rep.holds());
        }
    }

    #[test]
    fn unmatched_component_node_is_rejected() {
        let inst = BipartiteInstance::new(2, 2, [(0, 0), (1, 0)]).unwrap();
        assert!(matches!(level_matching_check(&inst, &[(0, 0)], 0), Err(Error::NotPerfectMatching(_))));
    }

    #[test]
    fn five_clique_with_one_matched_pair() {
        // C = {0..5} with anti-edge (0, 1) colored 1; node 2 colored 2.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for u in 0..5 {
            for v in u + 1..5 {
                if (u, v) != (0, 1) {
                    edges.push((u, v));
                }
            }
        }
        edges.push((0, 5));
        edges.push((1, 6));
        let g = Graph::from_edges(7, edges).unwrap();
        let coloring = PartialColoring::from_colors(vec![Some(1), Some(1), Some(2), None, None, Some(3), None]);
        let cfg = LemmaConfig {
            delta: g.delta(),
            g,
            clique: 5,
            coloring,
            matching: vec![(0, 1, 1)],
            ext_samples: vec![vec![]; 7],
        };
        let c = check_config(&cfg, 2.0);
        assert_eq!(c.promising_checked, 5);
        assert_eq!(c.palette_failure, None);
    }

    #[test]
    fn small_suite_passes() {
        let rep = brute_force_lemma_suite(200, 12, 5);
        assert!(rep.passed(), "{:?}", rep.counterexample);
        assert!(rep.heavy_applicable > 0);
    }
}
