//! Per-node color lists, fresh-color cursors and the sparsified graph.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::Resolved;
use crate::rng;

/// Colors are 1-based: the palette is `1..=Δ+1`.
pub type Color = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublist {
    L1,
    L2(usize),
    L2Star,
    /// Growing half of the i-th L3 sublist.
    L3G(usize),
    /// Harvesting half of the i-th L3 sublist.
    L3H(usize),
}

impl fmt::Display for Sublist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sublist::L1 => write!(f, "L1"),
            Sublist::L2(i) => write!(f, "L2.{i}"),
            Sublist::L2Star => write!(f, "L2*"),
            Sublist::L3G(i) => write!(f, "L3G.{i}"),
            Sublist::L3H(i) => write!(f, "L3H.{i}"),
        }
    }
}

impl std::str::FromStr for Sublist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad sublist '{s}'"));
        let idx = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match s {
            "L1" => Ok(Sublist::L1),
            "L2*" => Ok(Sublist::L2Star),
            _ => {
                if let Some(t) = s.strip_prefix("L2.") {
                    Ok(Sublist::L2(idx(t)?))
                } else if let Some(t) = s.strip_prefix("L3G.") {
                    Ok(Sublist::L3G(idx(t)?))
                } else if let Some(t) = s.strip_prefix("L3H.") {
                    Ok(Sublist::L3H(idx(t)?))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// Sublist shape shared by every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub l2_count: usize,
    pub l3_count: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        2 + self.l2_count + 2 * self.l3_count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, s: Sublist) -> usize {
        match s {
            Sublist::L1 => 0,
            Sublist::L2(i) => {
                assert!(i < self.l2_count, "L2 sublist {i} out of range");
                1 + i
            }
            Sublist::L2Star => 1 + self.l2_count,
            Sublist::L3G(i) => {
                assert!(i < self.l3_count, "L3 sublist {i} out of range");
                2 + self.l2_count + 2 * i
            }
            Sublist::L3H(i) => {
                assert!(i < self.l3_count, "L3 sublist {i} out of range");
                3 + self.l2_count + 2 * i
            }
        }
    }

    pub fn sublist(&self, idx: usize) -> Sublist {
        if idx == 0 {
            Sublist::L1
        } else if idx <= self.l2_count {
            Sublist::L2(idx - 1)
        } else if idx == self.l2_count + 1 {
            Sublist::L2Star
        } else {
            let j = idx - self.l2_count - 2;
            if j % 2 == 0 {
                Sublist::L3G(j / 2)
            } else {
                Sublist::L3H(j / 2)
            }
        }
    }

    pub fn all(&self) -> impl Iterator<Item = Sublist> + '_ {
        (0..self.len()).map(|i| self.sublist(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeLists {
    colors: Vec<Color>,
    offsets: Vec<u32>,
    cursors: Vec<u32>,
}

/// Color lists of every node plus a per-node bitset of their union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorLists {
    layout: Layout,
    palette: u32,
    nodes: Vec<NodeLists>,
    words: usize,
    union: Vec<u64>,
}

/// Uniform random subset of `1..=palette`, each color independently with
/// probability `p`, returned in random order.
fn bernoulli_subset<R: Rng>(r: &mut R, palette: u32, p: f64) -> Vec<Color> {
    let mut out = Vec::new();
    if p <= 0.0 {
        return out;
    }
    if p >= 1.0 {
        out.extend(1..=palette);
    } else {
        // Geometric skips between successes.
        let ln_q = (1.0 - p).ln();
        let mut pos: f64 = -1.0;
        loop {
            let u: f64 = r.gen::<f64>();
            let skip = ((1.0 - u).ln() / ln_q).floor();
            pos += 1.0 + skip;
            if pos >= palette as f64 {
                break;
            }
            out.push(pos as Color + 1);
        }
    }
    out.shuffle(r);
    out
}

impl ColorLists {
    /// Build from explicit lists; `lists[v][layout.index(s)]` is sublist `s` of `v`.
    pub fn from_lists(layout: Layout, palette: u32, lists: Vec<Vec<Vec<Color>>>) -> Result<Self> {
        let mut nodes = Vec::with_capacity(lists.len());
        for (v, subs) in lists.into_iter().enumerate() {
            if subs.len() != layout.len() {
                return Err(Error::Config(format!("node {v}: {} sublists, expected {}", subs.len(), layout.len())));
            }
            let mut colors = Vec::new();
            let mut offsets = vec![0u32];
            for s in subs {
                if let Some(&c) = s.iter().find(|&&c| c == 0 || c > palette) {
                    return Err(Error::Config(format!("node {v}: color {c} outside 1..={palette}")));
                }
                colors.extend(s);
                offsets.push(colors.len() as u32);
            }
            nodes.push(NodeLists {
                colors,
                offsets,
                cursors: vec![0; layout.len()],
            });
        }
        let words = (palette as usize + 1).div_ceil(64);
        let mut out = ColorLists {
            layout,
            palette,
            nodes,
            words,
            union: Vec::new(),
        };
        out.rebuild_union();
        Ok(out)
    }

    fn rebuild_union(&mut self) {
        self.union = vec![0u64; self.nodes.len() * self.words];
        for (v, nl) in self.nodes.iter().enumerate() {
            let row = &mut self.union[v * self.words..(v + 1) * self.words];
            for &c in &nl.colors {
                row[c as usize / 64] |= 1 << (c % 64);
            }
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn palette(&self) -> u32 {
        self.palette
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, v: NodeId, s: Sublist) -> &[Color] {
        let i = self.layout.index(s);
        let nl = &self.nodes[v];
        &nl.colors[nl.offsets[i] as usize..nl.offsets[i + 1] as usize]
    }

    pub fn cursor(&self, v: NodeId, s: Sublist) -> usize {
        self.nodes[v].cursors[self.layout.index(s)] as usize
    }

    pub fn remaining(&self, v: NodeId, s: Sublist) -> usize {
        self.get(v, s).len() - self.cursor(v, s)
    }

    /// Next `count` unread colors of a sublist. Fails without moving the
    /// cursor when fewer than `count` remain.
    pub fn fresh(&mut self, v: NodeId, s: Sublist, count: usize) -> Result<Vec<Color>> {
        let left = self.remaining(v, s);
        if left < count {
            return Err(Error::ListExhausted {
                node: v,
                sublist: s.to_string(),
                wanted: count,
                left,
            });
        }
        Ok(self.fresh_up_to(v, s, count))
    }

    /// Like [`fresh`](Self::fresh) but returns fewer colors instead of failing.
    pub fn fresh_up_to(&mut self, v: NodeId, s: Sublist, count: usize) -> Vec<Color> {
        let i = self.layout.index(s);
        let nl = &mut self.nodes[v];
        let start = nl.offsets[i] + nl.cursors[i];
        let end = (start + count as u32).min(nl.offsets[i + 1]);
        nl.cursors[i] += end - start;
        nl.colors[start as usize..end as usize].to_vec()
    }

    pub fn next_fresh(&mut self, v: NodeId, s: Sublist) -> Option<Color> {
        self.fresh_up_to(v, s, 1).pop()
    }

    /// Whether `c` lies anywhere in L(v).
    pub fn contains(&self, v: NodeId, c: Color) -> bool {
        c >= 1 && c <= self.palette && self.union[v * self.words + c as usize / 64] >> (c % 64) & 1 == 1
    }

    pub fn shares_color(&self, u: NodeId, v: NodeId) -> bool {
        let a = &self.union[u * self.words..(u + 1) * self.words];
        let b = &self.union[v * self.words..(v + 1) * self.words];
        a.iter().zip(b).any(|(x, y)| x & y != 0)
    }

    /// Colors of L(u) ∩ L(v) in increasing order.
    pub fn shared_colors(&self, u: NodeId, v: NodeId) -> Vec<Color> {
        let a = &self.union[u * self.words..(u + 1) * self.words];
        let b = &self.union[v * self.words..(v + 1) * self.words];
        let mut out = Vec::new();
        for (w, (x, y)) in a.iter().zip(b).enumerate() {
            let mut bits = x & y;
            while bits != 0 {
                let t = bits.trailing_zeros();
                out.push((w * 64) as Color + t);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn union_size(&self, v: NodeId) -> usize {
        self.union[v * self.words..(v + 1) * self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Total length of all L2 sublists of v, the quantity bounded by L_max.
    pub fn l2_len(&self, v: NodeId) -> usize {
        (0..self.layout.l2_count).map(|i| self.get(v, Sublist::L2(i)).len()).sum::<usize>()
            + self.get(v, Sublist::L2Star).len()
    }

    /// Whether c is in either half of L3,ℓ(v).
    pub fn in_l3(&self, v: NodeId, l: usize, c: Color) -> bool {
        self.get(v, Sublist::L3G(l)).contains(&c) || self.get(v, Sublist::L3H(l)).contains(&c)
    }

    /// Number of distinct colors in a sublist.
    pub fn distinct(&self, v: NodeId, s: Sublist) -> usize {
        let mut l = self.get(v, s).to_vec();
        l.sort_unstable();
        l.dedup();
        l.len()
    }

    /// Test hook: append a color to a sublist after its unread part.
    pub fn push_color(&mut self, v: NodeId, s: Sublist, c: Color) {
        assert!(c >= 1 && c <= self.palette);
        let i = self.layout.index(s);
        let nl = &mut self.nodes[v];
        let at = nl.offsets[i + 1] as usize;
        nl.colors.insert(at, c);
        for o in nl.offsets[i + 1..].iter_mut() {
            *o += 1;
        }
        self.union[v * self.words + c as usize / 64] |= 1 << (c % 64);
    }

    /// One line per (node, sublist): `node sublist c1 c2 ...`.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# palette={} l2={} l3={}",
            self.palette, self.layout.l2_count, self.layout.l3_count
        )?;
        for v in 0..self.n() {
            for s in self.layout.all() {
                write!(w, "{v} {s}")?;
                for c in self.get(v, s) {
                    write!(w, " {c}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(u32, Layout)> = None;
        let mut lists: Vec<Vec<Vec<Color>>> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let perr = |msg: String| Error::Parse { line: i + 1, msg };
            if let Some(h) = line.strip_prefix('#') {
                let mut pal = None;
                let mut l2 = None;
                let mut l3 = None;
                for kv in h.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(format!("bad header '{kv}'")))?;
                    let v: usize = v.parse().map_err(|_| perr(format!("bad header '{kv}'")))?;
                    match k {
                        "palette" => pal = Some(v as u32),
                        "l2" => l2 = Some(v),
                        "l3" => l3 = Some(v),
                        _ => {}
                    }
                }
                match (pal, l2, l3) {
                    (Some(p), Some(l2_count), Some(l3_count)) => header = Some((p, Layout { l2_count, l3_count })),
                    _ => return Err(perr("incomplete header".into())),
                }
                continue;
            }
            let (_, layout) = header.ok_or_else(|| perr("missing header".into()))?;
            let mut it = line.split_whitespace();
            let v: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr("bad node".into()))?;
            let s: Sublist = it.next().ok_or_else(|| perr("missing sublist".into()))?.parse()?;
            let colors = it
                .map(|t| t.parse::<Color>().map_err(|_| perr(format!("bad color '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            while lists.len() <= v {
                lists.push(vec![Vec::new(); layout.len()]);
            }
            lists[v][layout.index(s)] = colors;
        }
        let (palette, layout) = header.ok_or(Error::Parse {
            line: 0,
            msg: "empty dump".into(),
        })?;
        Self::from_lists(layout, palette, lists)
    }
}

/// Sample every node's lists. Each (node, sublist) pair owns its own stream.
pub fn sample_palettes(n: usize, r: &Resolved, seed: u64) -> ColorLists {
    let layout = Layout {
        l2_count: r.l2_count,
        l3_count: r.beta,
    };
    let palette = r.palette;
    let lists = (0..n)
        .map(|v| {
            layout
                .all()
                .enumerate()
                .map(|(i, s)| {
                    let mut g = rng::stream(seed, v as u64, rng::tag::PALETTE, i as u64);
                    match s {
                        Sublist::L1 => {
                            // Uniform draws with replacement; repeats are
                            // dropped so a cursor never yields a color twice.
                            let mut seen = vec![false; palette as usize + 1];
                            let mut out = Vec::with_capacity(r.l1_len);
                            for _ in 0..r.l1_len {
                                let c = g.gen_range(1..=palette);
                                if !seen[c as usize] {
                                    seen[c as usize] = true;
                                    out.push(c);
                                }
                            }
                            out
                        }
                        Sublist::L2(_) => bernoulli_subset(&mut g, palette, r.l2_rate),
                        Sublist::L2Star => bernoulli_subset(&mut g, palette, r.l2_star_rate),
                        Sublist::L3G(_) | Sublist::L3H(_) => bernoulli_subset(&mut g, palette, r.l3_rate),
                    }
                })
                .collect()
        })
        .collect();
    let out = ColorLists::from_lists(layout, palette, lists).expect("sampled colors are in range");
    let short = (0..n)
        .flat_map(|v| (0..layout.l3_count).flat_map(move |i| [(v, Sublist::L3G(i)), (v, Sublist::L3H(i))]))
        .filter(|&(v, s)| out.distinct(v, s) < 6 * r.beta)
        .count();
    if short > 0 {
        log::debug!("{short} L3 halves hold fewer than 6*beta={} colors", 6 * r.beta);
    }
    out
}

/// Keep exactly the edges whose endpoints' lists intersect.
pub fn build_sparsified(g: &Graph, lists: &ColorLists) -> Graph {
    g.filter_edges(|u, v| lists.shares_color(u, v))
}

/// Edges sampled by high-degree nodes for the decomposition and the
/// introvert test.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuxEdges {
    /// `owned[v]`: neighbors w such that v sampled the edge vw itself.
    pub owned: Vec<Vec<NodeId>>,
    /// Symmetric closure: both endpoints learn every sampled edge.
    pub adj: Vec<Vec<NodeId>>,
}

impl AuxEdges {
    pub fn none(n: usize) -> Self {
        AuxEdges {
            owned: vec![Vec::new(); n],
            adj: vec![Vec::new(); n],
        }
    }

    pub fn merge(&mut self, other: &AuxEdges) {
        for (a, b) in self.adj.iter_mut().zip(&other.adj) {
            a.extend_from_slice(b);
            a.sort_unstable();
            a.dedup();
        }
    }
}

/// Each incident edge of each node of degree ≥ Δ/2 is sampled independently
/// with probability `rate`.
pub fn sample_aux_edges(g: &Graph, rate: f64, seed: u64) -> AuxEdges {
    sample_aux_edges_tagged(g, rate, seed, rng::tag::AUX)
}

pub fn sample_aux_edges_tagged(g: &Graph, rate: f64, seed: u64, tag: u64) -> AuxEdges {
    let n = g.n();
    let mut aux = AuxEdges::none(n);
    let rate = rate.clamp(0.0, 1.0);
    for v in 0..n {
        if 2 * g.degree(v) < g.delta() || rate == 0.0 {
            continue;
        }
        let mut r = rng::stream(seed, v as u64, tag, 0);
        for &w in g.neighbors(v) {
            if rate >= 1.0 || r.gen_bool(rate) {
                aux.owned[v].push(w);
                aux.adj[v].push(w);
                aux.adj[w].push(v);
            }
        }
    }
    for a in aux.adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    aux
}

/// Exact probability that two nodes' lists intersect under the resolved
/// sampling rates.
pub fn keep_probability(r: &Resolved) -> f64 {
    let n = r.palette as usize;
    // Per-color probability of landing in the Bernoulli part of a list.
    let miss = (1.0 - r.l2_rate).powi(r.l2_count as i32)
        * (1.0 - r.l2_star_rate)
        * (1.0 - r.l3_rate).powi(2 * r.beta as i32);
    let b = 1.0 - miss;
    // Distribution of the number of distinct L1 colors.
    let mut occ = vec![0.0f64; n + 1];
    occ[0] = 1.0;
    for _ in 0..r.l1_len {
        let mut next = vec![0.0f64; n + 1];
        for a in 0..=n.min(r.l1_len) {
            if occ[a] == 0.0 {
                continue;
            }
            next[a] += occ[a] * a as f64 / n as f64;
            if a < n {
                next[a + 1] += occ[a] * (n - a) as f64 / n as f64;
            }
        }
        occ = next;
    }
    let ln_choose = |m: usize, k: usize| -> f64 {
        if k > m {
            f64::NEG_INFINITY
        } else {
            ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0)
        }
    };
    let (ln_1b, ln_1b2) = ((1.0 - b).ln(), (1.0 - b * b).ln());
    let support: Vec<usize> = (0..=n).filter(|&a| occ[a] > 1e-18).collect();
    let mut empty = 0.0;
    for &a in &support {
        for &a2 in &support {
            if a + a2 > n {
                continue;
            }
            let disjoint = ln_choose(n - a, a2) - ln_choose(n, a2);
            let rest = (n - a - a2) as f64;
            let mut ln_p = disjoint;
            if a + a2 > 0 {
                ln_p += (a + a2) as f64 * ln_1b;
            }
            if rest > 0.0 {
                ln_p += rest * ln_1b2;
            }
            if ln_p.is_finite() {
                empty += occ[a] * occ[a2] * ln_p.exp();
            }
        }
    }
    (1.0 - empty).clamp(0.0, 1.0)
}

/// Analytic expected-degree bound in the sparsified graph: max over u of
/// the sum of keep probabilities of its edges.
pub fn expected_max_sparsified_degree(g: &Graph, r: &Resolved) -> f64 {
    g.delta() as f64 * keep_probability(r)
}

/// Lanczos approximation of ln Γ(x) for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}
