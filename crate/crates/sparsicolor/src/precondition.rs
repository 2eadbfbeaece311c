//! Preconditioning: color sparse nodes and extroverted parts so that the
//! remaining uncolored nodes sit in almost-cliques with few uncolored
//! external neighbors.

use rand::Rng;

use crate::acd::Decomposition;
use crate::engine::{Field, PhaseStatus};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::palette::{Color, Sublist};
use crate::rng;
use crate::sim::Sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Introvert,
    Extrovert,
}

/// Introvert iff fewer than `factor * β` sampled edges leave the clique.
pub fn classify_external(sampled_external: usize, beta: usize, factor: f64) -> Orientation {
    if (sampled_external as f64) < factor * beta as f64 {
        Orientation::Introvert
    } else {
        Orientation::Extrovert
    }
}

/// Decomposition of the nodes still uncolored after preconditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongDecomposition {
    /// Surviving cliques restricted to their uncolored members.
    pub dec: Decomposition,
    /// Per node: uncolored neighbors in other surviving cliques.
    pub ext_uncolored: Vec<usize>,
    pub e_max: f64,
    pub extrovert_cliques: usize,
}

impl StrongDecomposition {
    pub fn max_ext_uncolored(&self) -> usize {
        self.dec
            .cliques
            .iter()
            .flat_map(|c| c.members.iter().map(|&v| self.ext_uncolored[v]))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiTrialReport {
    pub colored: Vec<NodeId>,
    pub remaining: Vec<NodeId>,
    /// Uncolored nodes of the treated set before each iteration and at the end.
    pub trajectory: Vec<usize>,
    pub exhausted: usize,
}

/// Whether v can still draw a color of its palette from unread L1.
pub fn has_list_slack(sim: &Sim, v: NodeId) -> bool {
    let l1 = sim.lists.get(v, Sublist::L1);
    l1[sim.lists.cursor(v, Sublist::L1)..].iter().any(|&c| sim.free_for(v, c))
}

/// One round of slack generation: each node of `active_set` is active with
/// probability `p` and tries one fresh L1 color.
pub fn generate_slack(sim: &mut Sim, active_set: &[NodeId], p: f64, round: u64) -> Result<Vec<(NodeId, Color)>> {
    let mut tries = Vec::new();
    let mut exhausted = 0;
    for &v in active_set {
        if sim.coloring.is_colored(v) {
            continue;
        }
        let mut r = rng::stream(sim.seed, v as u64, rng::tag::SLACK, round);
        if !r.gen_bool(p.clamp(0.0, 1.0)) {
            continue;
        }
        match sim.lists.next_fresh(v, Sublist::L1) {
            Some(c) => tries.push((v, vec![c])),
            None => exhausted += 1,
        }
    }
    sim.net.note_exhausted(exhausted);
    sim.trial_round(tries)
}

/// Doubling color trials: in iteration j each uncolored node of `nodes`
/// draws up to min(2^j, cap) fresh L1 colors of its palette and keeps the
/// first one no neighbor holds and no lower-ID neighbor tried.
pub fn multi_trial(sim: &mut Sim, nodes: &[NodeId], iters: usize, cap: usize) -> Result<MultiTrialReport> {
    if cfg!(debug_assertions) {
        if let Some(&v) = nodes.iter().find(|&&v| !sim.coloring.is_colored(v) && !has_list_slack(sim, v)) {
            return Err(Error::InvalidParams(format!("multi-trial contract: node {v} has no slack")));
        }
    }
    let mut report = MultiTrialReport::default();
    let mut pending: Vec<NodeId> = nodes.iter().copied().filter(|&v| !sim.coloring.is_colored(v)).collect();
    for j in 0..iters {
        report.trajectory.push(pending.len());
        if pending.is_empty() || sim.net.over_cap() {
            break;
        }
        let want = (1usize << j.min(30)).min(cap.max(1));
        let mut tries = Vec::new();
        for &v in &pending {
            let mut got = Vec::with_capacity(want);
            while got.len() < want {
                match sim.lists.next_fresh(v, Sublist::L1) {
                    Some(c) if sim.free_for(v, c) => got.push(c),
                    Some(_) => {}
                    None => break,
                }
            }
            if got.is_empty() {
                report.exhausted += 1;
            } else {
                tries.push((v, got));
            }
        }
        let kept = sim.trial_round(tries)?;
        report.colored.extend(kept.iter().map(|&(v, _)| v));
        pending.retain(|&v| !sim.coloring.is_colored(v) && has_list_slack(sim, v));
    }
    report.trajectory.push(pending.len());
    sim.net.note_exhausted(report.exhausted as u64);
    report.remaining = nodes.iter().copied().filter(|&v| !sim.coloring.is_colored(v)).collect();
    Ok(report)
}

/// Run the preconditioning steps and freeze every node it colors.
pub fn precondition(sim: &mut Sim, acd: &Decomposition) -> Result<StrongDecomposition> {
    let n = sim.n();
    let beta = sim.r.beta;
    let eps_p = sim.r.epsilon / 3.0;
    let delta = sim.g.delta() as f64;

    // (1) Introvert/extrovert classification over the sampled edges.
    sim.net.begin_phase("precondition.classify");
    let id_bits = sim.widths().id;
    let mut sends = Vec::new();
    for v in 0..n {
        if acd.is_sparse(v) {
            continue;
        }
        for &w in &sim.classify_edges.owned[v] {
            sends.push((w, v, vec![Field::Id]));
        }
    }
    sim.net.exchange(sends)?;
    let mut orient = vec![Orientation::Introvert; n];
    for v in 0..n {
        if let Some(ci) = acd.clique_of[v] {
            let ext = sim.classify_edges.owned[v].iter().filter(|&&w| acd.clique_of[w] != Some(ci)).count();
            orient[v] = classify_external(ext, beta, sim.r.introvert_factor);
        }
    }
    let extrovert_clique: Vec<bool> = acd
        .cliques
        .iter()
        .map(|c| c.members.iter().filter(|&&v| orient[v] == Orientation::Extrovert).count() as f64 > 2.0 * eps_p * delta)
        .collect();
    let depth = acd.cliques.iter().map(|c| sim.local_depth(&c.members)).max().unwrap_or(0);
    sim.net.charge_tree(2 * depth, id_bits, 1);
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, PhaseStatus::Ok);

    let in_ext_clique = |v: NodeId| acd.clique_of[v].is_some_and(|i| extrovert_clique[i]);

    // (2) Slack generation on sparse nodes and extrovert cliques.
    sim.net.begin_phase("precondition.slack");
    let slack_set: Vec<NodeId> = (0..n).filter(|&v| acd.is_sparse(v) || in_ext_clique(v)).collect();
    generate_slack(sim, &slack_set, sim.r.slack_activation, 0)?;
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, PhaseStatus::Ok);

    // (3) V' = sparse ∪ extroverts of introvert cliques ∪ introverts of
    // extrovert cliques.
    sim.net.begin_phase("precondition.multitrial");
    let v_prime: Vec<NodeId> = (0..n)
        .filter(|&v| {
            acd.is_sparse(v) || (in_ext_clique(v) != (orient[v] == Orientation::Extrovert))
        })
        .filter(|&v| !sim.coloring.is_colored(v))
        .collect();
    let (ready, starved): (Vec<NodeId>, Vec<NodeId>) = v_prime.iter().partition(|&&v| has_list_slack(sim, v));
    sim.net.note_exhausted(starved.len() as u64);
    let rep = multi_trial(sim, &ready, sim.r.multi_trial_iters, sim.r.multi_trial_cap)?;
    let unc = sim.coloring.uncolored_count();
    let status = if rep.remaining.is_empty() && starved.is_empty() { PhaseStatus::Ok } else { PhaseStatus::Partial };
    sim.net.end_phase(unc, status);

    // (4) Extroverts of extrovert cliques: plain trials until their
    // uncolored degree is small, then multi-trial.
    sim.net.begin_phase("precondition.extroverts");
    let extroverts: Vec<NodeId> = (0..n)
        .filter(|&v| in_ext_clique(v) && orient[v] == Orientation::Extrovert && !sim.coloring.is_colored(v))
        .collect();
    let target = sim.e_max();
    let cap_rounds = (sim.eta.max(2.0).log2().ceil() as u64) + 2;
    let mut left_over = Vec::new();
    if !extroverts.is_empty() {
        let mut member = vec![false; n];
        for &v in &extroverts {
            member[v] = true;
        }
        for round in 0..cap_rounds {
            let pending: Vec<NodeId> = extroverts.iter().copied().filter(|&v| !sim.coloring.is_colored(v)).collect();
            let worst = pending
                .iter()
                .map(|&v| sim.g.neighbors(v).iter().filter(|&&u| member[u] && !sim.coloring.is_colored(u)).count())
                .max()
                .unwrap_or(0);
            if worst as f64 <= target {
                break;
            }
            let mut tries = Vec::new();
            let mut exhausted = 0;
            for &v in &pending {
                let mut r = rng::stream(sim.seed, v as u64, rng::tag::EXTROVERT_TRIAL, round);
                if !r.gen_bool(sim.r.trial_activation) {
                    continue;
                }
                match sim.lists.next_fresh(v, Sublist::L1) {
                    Some(c) => tries.push((v, vec![c])),
                    None => exhausted += 1,
                }
            }
            sim.net.note_exhausted(exhausted);
            sim.trial_round(tries)?;
        }
        let (ready, starved): (Vec<NodeId>, Vec<NodeId>) = extroverts
            .iter()
            .filter(|&&v| !sim.coloring.is_colored(v))
            .partition(|&&v| has_list_slack(sim, v));
        sim.net.note_exhausted(starved.len() as u64);
        let rep = multi_trial(sim, &ready, sim.r.multi_trial_iters, sim.r.multi_trial_cap)?;
        left_over = rep.remaining;
        left_over.extend(starved);
    }
    for v in 0..n {
        if sim.coloring.is_colored(v) {
            sim.coloring.freeze(v);
        }
    }
    let unc = sim.coloring.uncolored_count();
    sim.net.end_phase(unc, if left_over.is_empty() { PhaseStatus::Ok } else { PhaseStatus::Partial });

    // Surviving cliques: introvert cliques restricted to uncolored members.
    let survivors: Vec<(NodeId, Vec<NodeId>)> = acd
        .cliques
        .iter()
        .enumerate()
        .filter(|&(i, _)| !extrovert_clique[i])
        .map(|(_, c)| (c.id, c.members.iter().copied().filter(|&v| !sim.coloring.is_colored(v)).collect::<Vec<_>>()))
        .filter(|(_, m)| !m.is_empty())
        .collect();
    let dec = Decomposition::from_labelled(&sim.g, survivors);
    let ext_uncolored = (0..n)
        .map(|v| match dec.clique_of[v] {
            None => 0,
            Some(i) => sim
                .g
                .neighbors(v)
                .iter()
                .filter(|&&u| dec.clique_of[u].is_some_and(|j| j != i))
                .count(),
        })
        .collect();
    Ok(StrongDecomposition {
        dec,
        ext_uncolored,
        e_max: target,
        extrovert_cliques: extrovert_clique.iter().filter(|&&b| b).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_threshold() {
        assert_eq!(classify_external(0, 10, 0.75), Orientation::Introvert);
        assert_eq!(classify_external(7, 10, 0.75), Orientation::Introvert);
        assert_eq!(classify_external(8, 10, 0.75), Orientation::Extrovert);
    }
}
