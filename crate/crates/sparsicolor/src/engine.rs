//! Synchronous round engine: legal-edge enforcement, bandwidth accounting
//! and per-phase metrics.
//!
//! Phases either exchange explicit envelopes ([`Network::exchange`]), announce
//! a value to every sparsified neighbor ([`Network::broadcast`]), or charge
//! the cost of a tree aggregation whose communication pattern is fixed
//! ([`Network::charge`]). Messages longer than the per-edge bandwidth are
//! fragmented over consecutive rounds.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::palette::AuxEdges;
use crate::params::ceil_log2;

/// Fixed field widths of the canonical message encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Widths {
    pub id: u64,
    pub color: u64,
    pub tag: u64,
}

impl Widths {
    pub fn new(n: usize, delta: usize) -> Self {
        Widths {
            id: ceil_log2(n) as u64,
            color: ceil_log2(delta + 1) as u64,
            tag: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Id,
    Color,
    Tag,
    Bits(u64),
}

/// Exact serialized size of a message made of the given fields.
pub fn account(fields: &[Field], w: &Widths) -> u64 {
    fields
        .iter()
        .map(|f| match f {
            Field::Id => w.id,
            Field::Color => w.color,
            Field::Tag => w.tag,
            Field::Bits(b) => *b,
        })
        .sum()
}

pub trait Message {
    fn bits(&self, w: &Widths) -> u64;
}

impl Message for Vec<Field> {
    fn bits(&self, w: &Widths) -> u64 {
        account(self, w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseStatus {
    Ok,
    /// Finished with some nodes not reaching the phase goal.
    Partial,
    /// Stopped by the round cap.
    Capped,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMetrics {
    pub phase: String,
    pub rounds: u64,
    pub max_bits_edge: u64,
    pub max_distinct_neighbors: u64,
    pub total_bits: u64,
    pub uncolored_after: usize,
    pub status: PhaseStatus,
    pub exhausted: u64,
    pub retries: u64,
}

impl PhaseMetrics {
    fn new(phase: &str) -> Self {
        PhaseMetrics {
            phase: phase.to_string(),
            rounds: 0,
            max_bits_edge: 0,
            max_distinct_neighbors: 0,
            total_bits: 0,
            uncolored_after: 0,
            status: PhaseStatus::Ok,
            exhausted: 0,
            retries: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub phases: Vec<PhaseMetrics>,
    pub total_rounds: u64,
    pub total_bits: u64,
    pub max_bits_edge: u64,
    pub max_distinct_neighbors: u64,
    pub illegal_sends: u64,
    pub conflicts: u64,
    pub cap_exceeded: bool,
    /// Uncolored count after every phase.
    pub uncolored_trajectory: Vec<usize>,
}

impl RunMetrics {
    pub fn new(run_id: &str) -> Self {
        RunMetrics {
            run_id: run_id.to_string(),
            phases: Vec::new(),
            total_rounds: 0,
            total_bits: 0,
            max_bits_edge: 0,
            max_distinct_neighbors: 0,
            illegal_sends: 0,
            conflicts: 0,
            cap_exceeded: false,
            uncolored_trajectory: Vec::new(),
        }
    }

    pub fn exhausted(&self) -> u64 {
        self.phases.iter().map(|p| p.exhausted).sum()
    }

    /// Rounds spent in phases whose name starts with `prefix`.
    pub fn rounds_of(&self, prefix: &str) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.phase.starts_with(prefix))
            .map(|p| p.rounds)
            .sum()
    }

    /// One JSON object per phase.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.phases {
            let rec = serde_json::json!({
                "run_id": self.run_id,
                "phase": p.phase,
                "rounds": p.rounds,
                "max_bits_edge": p.max_bits_edge,
                "max_distinct_neighbors": p.max_distinct_neighbors,
                "uncolored_after": p.uncolored_after,
                "status": p.status,
            });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str =
        "run_id,total_rounds,total_bits,max_bits_edge,max_distinct_neighbors,illegal_sends,conflicts,exhausted,cap_exceeded,uncolored_final";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.total_rounds,
            self.total_bits,
            self.max_bits_edge,
            self.max_distinct_neighbors,
            self.illegal_sends,
            self.conflicts,
            self.exhausted(),
            self.cap_exceeded,
            self.uncolored_trajectory.last().copied().unwrap_or(0),
        )
    }
}

/// Messages received by each node in one round, sorted by sender.
pub type Inbox<M> = Vec<Vec<(NodeId, M)>>;

/// The simulated network over the sparsified graph plus sampled aux edges.
#[derive(Debug, Clone)]
pub struct Network {
    sparse: Graph,
    legal: Vec<Vec<NodeId>>,
    widths: Widths,
    bandwidth: u64,
    budget: u64,
    round_cap: u64,
    metrics: RunMetrics,
    current: Option<PhaseMetrics>,
}

impl Network {
    pub fn new(sparse: Graph, aux: &AuxEdges, widths: Widths, bandwidth: u64, budget: u64, round_cap: u64) -> Self {
        let legal = (0..sparse.n())
            .map(|v| {
                let mut l = sparse.neighbors(v).to_vec();
                if let Some(a) = aux.adj.get(v) {
                    l.extend_from_slice(a);
                }
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        Network {
            sparse,
            legal,
            widths,
            bandwidth: bandwidth.max(1),
            budget,
            round_cap,
            metrics: RunMetrics::new(""),
            current: None,
        }
    }

    pub fn set_run_id(&mut self, id: &str) {
        self.metrics.run_id = id.to_string();
    }

    pub fn sparse(&self) -> &Graph {
        &self.sparse
    }

    pub fn legal_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.legal[v]
    }

    pub fn is_legal(&self, u: NodeId, v: NodeId) -> bool {
        self.legal[u].binary_search(&v).is_ok()
    }

    pub fn widths(&self) -> Widths {
        self.widths
    }

    pub fn bandwidth(&self) -> u64 {
        self.bandwidth
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn round_cap(&self) -> u64 {
        self.round_cap
    }

    pub fn rounds(&self) -> u64 {
        self.metrics.total_rounds
    }

    pub fn over_cap(&self) -> bool {
        self.metrics.total_rounds > self.round_cap
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn into_metrics(mut self) -> RunMetrics {
        if self.current.is_some() {
            self.end_phase(0, PhaseStatus::Partial);
        }
        self.metrics
    }

    pub fn begin_phase(&mut self, name: &str) {
        if self.current.is_some() {
            self.end_phase(0, PhaseStatus::Partial);
        }
        self.current = Some(PhaseMetrics::new(name));
    }

    pub fn end_phase(&mut self, uncolored_after: usize, status: PhaseStatus) {
        if let Some(mut p) = self.current.take() {
            p.uncolored_after = uncolored_after;
            p.status = if self.over_cap() { PhaseStatus::Capped } else { status };
            self.metrics.uncolored_trajectory.push(uncolored_after);
            self.metrics.phases.push(p);
        }
    }

    fn phase(&mut self) -> &mut PhaseMetrics {
        self.current.get_or_insert_with(|| PhaseMetrics::new("unnamed"))
    }

    pub fn note_exhausted(&mut self, count: u64) {
        self.phase().exhausted += count;
    }

    pub fn note_retry(&mut self) {
        self.phase().retries += 1;
    }

    pub fn note_conflict(&mut self) {
        self.metrics.conflicts += 1;
    }

    /// Charge `rounds` rounds in which each active edge carries at most
    /// `bits_per_edge` bits and each node talks to at most `distinct` nodes.
    pub fn charge(&mut self, rounds: u64, bits_per_edge: u64, distinct: u64, total_bits: u64) {
        if rounds == 0 {
            return;
        }
        let per_round = bits_per_edge.min(self.bandwidth);
        self.metrics.total_rounds += rounds;
        self.metrics.total_bits += total_bits;
        self.metrics.max_bits_edge = self.metrics.max_bits_edge.max(per_round);
        self.metrics.max_distinct_neighbors = self.metrics.max_distinct_neighbors.max(distinct);
        if self.metrics.total_rounds > self.round_cap {
            self.metrics.cap_exceeded = true;
        }
        let p = self.phase();
        p.rounds += rounds;
        p.total_bits += total_bits;
        p.max_bits_edge = p.max_bits_edge.max(per_round);
        p.max_distinct_neighbors = p.max_distinct_neighbors.max(distinct);
    }

    /// Rounds needed to push `bits` through one edge.
    pub fn rounds_for(&self, bits: u64) -> u64 {
        bits.div_ceil(self.bandwidth)
    }

    /// Charge an aggregation (or broadcast) over a tree of the given depth,
    /// each hop carrying `bits` bits.
    pub fn charge_tree(&mut self, depth: u64, bits: u64, fan: u64) {
        let per_hop = self.rounds_for(bits).max(1);
        self.charge(depth * per_hop, bits, fan.max(1), bits * depth);
    }

    /// Every sender announces `bits` bits to all its sparsified neighbors.
    pub fn broadcast(&mut self, senders: &[(NodeId, u64)]) {
        let mut rounds = 0;
        let mut bits_edge = 0;
        let mut distinct = 0;
        let mut total = 0;
        for &(v, bits) in senders {
            let d = self.sparse.degree(v) as u64;
            if d == 0 || bits == 0 {
                continue;
            }
            rounds = rounds.max(self.rounds_for(bits));
            bits_edge = bits_edge.max(bits);
            distinct = distinct.max(d);
            total += bits * d;
        }
        self.charge(rounds, bits_edge, distinct, total);
    }

    /// Deliver point-to-point envelopes. Every send must use a legal edge.
    pub fn exchange<M: Message>(&mut self, mut sends: Vec<(NodeId, NodeId, M)>) -> Result<Inbox<M>> {
        let n = self.legal.len();
        for &(u, v, _) in &sends {
            if u >= n || v >= n || !self.is_legal(u, v) {
                self.metrics.illegal_sends += 1;
                return Err(Error::IllegalEdge { from: u, to: v });
            }
        }
        sends.sort_by_key(|&(u, v, _)| (u, v));
        let mut rounds = 0;
        let mut bits_edge = 0;
        let mut total = 0;
        let mut distinct = 0u64;
        let mut i = 0;
        while i < sends.len() {
            let u = sends[i].0;
            let mut peers = 0u64;
            while i < sends.len() && sends[i].0 == u {
                let v = sends[i].1;
                let mut bits = 0;
                while i < sends.len() && sends[i].0 == u && sends[i].1 == v {
                    bits += sends[i].2.bits(&self.widths);
                    i += 1;
                }
                peers += 1;
                total += bits;
                bits_edge = bits_edge.max(bits);
                rounds = rounds.max(self.rounds_for(bits).max(1));
            }
            distinct = distinct.max(peers);
        }
        self.charge(rounds, bits_edge, distinct, total);
        let mut inbox: Inbox<M> = (0..n).map(|_| Vec::new()).collect();
        for (u, v, m) in sends {
            inbox[v].push((u, m));
        }
        Ok(inbox)
    }
}

/// A per-node state machine driven by [`run_protocol`].
pub trait Protocol {
    type Msg: Message;
    type State;

    fn init(&self, v: NodeId) -> Self::State;

    /// One round at node `v`: read the messages sent to it in the previous
    /// round and return the messages to send now.
    fn step(
        &self,
        v: NodeId,
        round: u64,
        state: &mut Self::State,
        inbox: &[(NodeId, Self::Msg)],
        legal: &[NodeId],
    ) -> Vec<(NodeId, Self::Msg)>;

    fn done(&self, states: &[Self::State]) -> bool;
}

/// Run a protocol until it reports completion or `max_rounds` rounds pass.
/// Returns the final states and the number of rounds used.
pub fn run_protocol<P: Protocol>(net: &mut Network, p: &P, max_rounds: u64) -> Result<(Vec<P::State>, u64)> {
    let n = net.sparse().n();
    let mut states: Vec<P::State> = (0..n).map(|v| p.init(v)).collect();
    let mut inbox: Inbox<P::Msg> = (0..n).map(|_| Vec::new()).collect();
    let mut round = 0;
    while !p.done(&states) {
        if round >= max_rounds {
            return Err(Error::RoundCapExceeded { cap: max_rounds });
        }
        let mut sends = Vec::new();
        for v in 0..n {
            let out = p.step(v, round, &mut states[v], &inbox[v], net.legal_neighbors(v));
            sends.extend(out.into_iter().map(|(to, m)| (v, to, m)));
        }
        let before = net.rounds();
        inbox = net.exchange(sends)?;
        round += (net.rounds() - before).max(1);
    }
    Ok((states, round))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_clique;

    fn net_on(g: Graph) -> Network {
        let n = g.n();
        let d = g.delta();
        Network::new(g, &AuxEdges::none(n), Widths::new(n, d), 40, 1000, 10_000)
    }

    #[test]
    fn account_widths() {
        let w = Widths::new(1024, 512);
        assert_eq!(account(&[Field::Color], &w), 10);
        assert_eq!(account(&[Field::Id, Field::Color], &w), 20);
        assert_eq!(account(&[], &w), 0);
        let w = Widths::new(8, 3);
        assert_eq!(account(&[Field::Color, Field::Tag], &w), 2 + 8);
    }

    #[test]
    fn illegal_send_is_rejected() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let mut net = net_on(g);
        let r = net.exchange(vec![(0, 2, vec![Field::Tag])]);
        assert_eq!(r.unwrap_err(), Error::IllegalEdge { from: 0, to: 2 });
        assert_eq!(net.metrics().illegal_sends, 1);
    }

    #[test]
    fn long_messages_are_fragmented() {
        let mut net = net_on(gen_clique(2, 0));
        net.begin_phase("p");
        net.exchange(vec![(0, 1, vec![Field::Bits(100)])]).unwrap();
        net.end_phase(0, PhaseStatus::Ok);
        let m = net.metrics();
        assert_eq!(m.total_rounds, 3);
        assert_eq!(m.max_bits_edge, 40);
        assert_eq!(m.phases[0].total_bits, 100);
    }

    struct Silent;
    impl Protocol for Silent {
        type Msg = Vec<Field>;
        type State = ();
        fn init(&self, _: NodeId) {}
        fn step(&self, _: NodeId, _: u64, _: &mut (), _: &[(NodeId, Vec<Field>)], _: &[NodeId]) -> Vec<(NodeId, Vec<Field>)> {
            Vec::new()
        }
        fn done(&self, _: &[()]) -> bool {
            true
        }
    }

    /// Everyone sends one bit to all legal neighbors once.
    struct Ping;
    impl Protocol for Ping {
        type Msg = Vec<Field>;
        type State = (bool, usize);
        fn init(&self, _: NodeId) -> (bool, usize) {
            (false, 0)
        }
        fn step(&self, _: NodeId, _: u64, s: &mut (bool, usize), inbox: &[(NodeId, Vec<Field>)], legal: &[NodeId]) -> Vec<(NodeId, Vec<Field>)> {
            s.1 += inbox.len();
            if s.0 {
                return Vec::new();
            }
            s.0 = true;
            legal.iter().map(|&w| (w, vec![Field::Bits(1)])).collect()
        }
        fn done(&self, states: &[(bool, usize)]) -> bool {
            states.iter().all(|s| s.0 && s.1 > 0)
        }
    }

    #[test]
    fn empty_protocol_costs_nothing() {
        let mut net = net_on(gen_clique(3, 0));
        let (_, rounds) = run_protocol(&mut net, &Silent, 10).unwrap();
        assert_eq!(rounds, 0);
        assert_eq!(net.rounds(), 0);
    }

    #[test]
    fn ping_on_triangle() {
        let mut net = net_on(gen_clique(3, 0));
        let (states, _) = run_protocol(&mut net, &Ping, 10).unwrap();
        assert!(states.iter().all(|s| s.1 == 2));
        assert_eq!(net.metrics().max_distinct_neighbors, 2);
        assert!(net.metrics().max_bits_edge >= 1);
    }

    /// A node that reads its inbox in the round a message is sent would see
    /// it in round 0; the engine only delivers it in round 1.
    struct Probe;
    impl Protocol for Probe {
        type Msg = Vec<Field>;
        type State = Vec<(u64, usize)>;
        fn init(&self, _: NodeId) -> Self::State {
            Vec::new()
        }
        fn step(&self, v: NodeId, round: u64, s: &mut Self::State, inbox: &[(NodeId, Vec<Field>)], _: &[NodeId]) -> Vec<(NodeId, Vec<Field>)> {
            s.push((round, inbox.len()));
            if v == 0 && round == 0 {
                vec![(1, vec![Field::Tag])]
            } else {
                Vec::new()
            }
        }
        fn done(&self, states: &[Self::State]) -> bool {
            states[1].len() >= 2
        }
    }

    #[test]
    fn messages_arrive_next_round() {
        let mut net = net_on(gen_clique(2, 0));
        let (states, _) = run_protocol(&mut net, &Probe, 10).unwrap();
        assert_eq!(states[1][0], (0, 0));
        assert_eq!(states[1][1], (1, 1));
    }
}
