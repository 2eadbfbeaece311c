//! Partial colorings and the synchronous color-trial primitive.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::palette::Color;

/// Per-node color (0 means uncolored) and frozen flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialColoring {
    colors: Vec<Color>,
    frozen: Vec<bool>,
}

impl PartialColoring {
    pub fn new(n: usize) -> Self {
        PartialColoring {
            colors: vec![0; n],
            frozen: vec![false; n],
        }
    }

    pub fn from_colors(colors: Vec<Option<Color>>) -> Self {
        let n = colors.len();
        PartialColoring {
            colors: colors.into_iter().map(|c| c.unwrap_or(0)).collect(),
            frozen: vec![false; n],
        }
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn get(&self, v: NodeId) -> Option<Color> {
        match self.colors[v] {
            0 => None,
            c => Some(c),
        }
    }

    /// Raw color, 0 when uncolored.
    pub fn raw(&self, v: NodeId) -> Color {
        self.colors[v]
    }

    pub fn is_colored(&self, v: NodeId) -> bool {
        self.colors[v] != 0
    }

    pub fn set(&mut self, v: NodeId, c: Color) {
        assert!(c != 0, "color 0 is reserved for uncolored");
        assert!(!self.frozen[v], "node {v} is frozen");
        self.colors[v] = c;
    }

    pub fn unset(&mut self, v: NodeId) {
        assert!(!self.frozen[v], "node {v} is frozen");
        self.colors[v] = 0;
    }

    pub fn freeze(&mut self, v: NodeId) {
        self.frozen[v] = true;
    }

    pub fn is_frozen(&self, v: NodeId) -> bool {
        self.frozen[v]
    }

    pub fn uncolored_count(&self) -> usize {
        self.colors.iter().filter(|&&c| c == 0).count()
    }

    pub fn uncolored(&self) -> Vec<NodeId> {
        (0..self.n()).filter(|&v| self.colors[v] == 0).collect()
    }

    pub fn as_options(&self) -> Vec<Option<Color>> {
        (0..self.n()).map(|v| self.get(v)).collect()
    }

    /// Whether some neighbor of v in `g` holds c.
    pub fn used_around(&self, g: &Graph, v: NodeId, c: Color) -> bool {
        g.neighbors(v).iter().any(|&u| self.colors[u] == c)
    }

    /// Ψ_v as a boolean table indexed by color (index 0 unused).
    pub fn palette_of(&self, g: &Graph, v: NodeId, palette: u32) -> Vec<bool> {
        let mut free = vec![true; palette as usize + 1];
        free[0] = false;
        for &u in g.neighbors(v) {
            free[self.colors[u] as usize] = false;
        }
        free[0] = false;
        free
    }

    /// Number of uncolored neighbors of v in `g`.
    pub fn uncolored_degree(&self, g: &Graph, v: NodeId) -> usize {
        g.neighbors(v).iter().filter(|&&u| self.colors[u] == 0).count()
    }

    /// First monochromatic edge in scan order.
    pub fn find_conflict(&self, g: &Graph) -> Option<(NodeId, NodeId)> {
        g.edges().find(|&(u, v)| self.colors[u] != 0 && self.colors[u] == self.colors[v])
    }

    /// Conflict check restricted to edges touching `nodes`.
    pub fn find_conflict_around(&self, g: &Graph, nodes: &[NodeId]) -> Option<(NodeId, NodeId)> {
        for &v in nodes {
            let c = self.colors[v];
            if c == 0 {
                continue;
            }
            if let Some(&u) = g.neighbors(v).iter().find(|&&u| self.colors[u] == c) {
                return Some((u.min(v), u.max(v)));
            }
        }
        None
    }
}

/// One line per node: `node color`, or `node -` when uncolored.
pub fn write_coloring<W: Write>(c: &PartialColoring, mut w: W) -> Result<()> {
    for v in 0..c.n() {
        match c.get(v) {
            Some(x) => writeln!(w, "{v} {x}")?,
            None => writeln!(w, "{v} -")?,
        }
    }
    Ok(())
}

/// Parse the format of [`write_coloring`]; nodes not mentioned are uncolored.
pub fn read_coloring<R: BufRead>(r: R, n: usize) -> Result<PartialColoring> {
    let mut colors = vec![None; n];
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: i + 1, msg };
        let (v, c) = t.split_once(char::is_whitespace).ok_or_else(|| perr(format!("expected 'node color', got '{t}'")))?;
        let v: NodeId = v.parse().map_err(|_| perr(format!("bad node '{v}'")))?;
        if v >= n {
            return Err(perr(format!("node {v} out of range (n={n})")));
        }
        colors[v] = match c.trim() {
            "-" => None,
            c => match c.parse::<Color>() {
                Ok(0) | Err(_) => return Err(perr(format!("bad color '{c}'"))),
                Ok(x) => Some(x),
            },
        };
    }
    Ok(PartialColoring::from_colors(colors))
}

/// Resolve one round of simultaneous color trials.
///
/// `tries[i] = (v, colors)`; v keeps the first of its colors that no
/// neighbor in `g` holds and no lower-ID neighbor tried this round. Nodes
/// appear at most once in `tries`. Returns the (node, color) pairs kept.
pub fn resolve_trials(g: &Graph, coloring: &PartialColoring, tries: &[(NodeId, Vec<Color>)]) -> Vec<(NodeId, Color)> {
    let mut slot = vec![usize::MAX; coloring.n()];
    for (i, (v, _)) in tries.iter().enumerate() {
        slot[*v] = i;
    }
    let mut kept = Vec::new();
    for (v, colors) in tries {
        let v = *v;
        let chosen = colors.iter().copied().find(|&c| {
            g.neighbors(v).iter().all(|&u| {
                coloring.raw(u) != c && (u > v || slot[u] == usize::MAX || !tries[slot[u]].1.contains(&c))
            })
        });
        if let Some(c) = chosen {
            kept.push((v, c));
        }
    }
    kept
}
