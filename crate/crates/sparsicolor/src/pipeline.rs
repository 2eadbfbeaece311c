//! Phase orchestration for one run.

use std::str::FromStr;

use crate::acd::{acd_distributed, Decomposition};
use crate::augpath::{augpath_phase, reduce_phase, IterationReport, ReduceReport};
use crate::coloring::PartialColoring;
use crate::engine::RunMetrics;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matching::{matching_phase, ColorfulMatching};
use crate::palette::ColorLists;
use crate::params::Params;
use crate::precondition::{precondition, StrongDecomposition};
use crate::sim::Sim;

/// How far a run goes. Each stage includes the ones before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// Sample lists and build the network only.
    Setup,
    Acd,
    Precondition,
    Matching,
    Reduce,
    Full,
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "setup" => Ok(Stage::Setup),
            "acd" => Ok(Stage::Acd),
            "precondition" => Ok(Stage::Precondition),
            "matching" => Ok(Stage::Matching),
            "reduce" => Ok(Stage::Reduce),
            "full" | "augpath" => Ok(Stage::Full),
            other => Err(Error::Config(format!("unknown phase '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Use this decomposition instead of computing one.
    pub decomposition: Option<Decomposition>,
    pub run_id: String,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub coloring: PartialColoring,
    pub lists: ColorLists,
    pub metrics: RunMetrics,
    pub acd: Option<Decomposition>,
    pub strong: Option<StrongDecomposition>,
    pub matchings: Vec<ColorfulMatching>,
    pub reduce: Option<ReduceReport>,
    pub iterations: Vec<IterationReport>,
    pub eta: f64,
    pub beta: usize,
}

pub fn run_pipeline(g: &Graph, params: &Params, seed: u64, stage: Stage, opts: RunOptions) -> Result<RunOutcome> {
    let sim = Sim::new(g.clone(), params, seed)?;
    run_sim(sim, stage, opts)
}

pub fn run_sim(mut sim: Sim, stage: Stage, opts: RunOptions) -> Result<RunOutcome> {
    sim.net.set_run_id(&opts.run_id);
    let mut out = RunOutcome {
        coloring: PartialColoring::new(sim.n()),
        lists: sim.lists.clone(),
        metrics: RunMetrics::new(&opts.run_id),
        acd: None,
        strong: None,
        matchings: Vec::new(),
        reduce: None,
        iterations: Vec::new(),
        eta: sim.eta,
        beta: sim.r.beta,
    };
    if stage >= Stage::Acd {
        let acd = match opts.decomposition {
            Some(d) => d,
            None => acd_distributed(&mut sim)?,
        };
        out.acd = Some(acd);
    }
    if stage >= Stage::Precondition {
        let sd = precondition(&mut sim, out.acd.as_ref().expect("acd ran"))?;
        out.strong = Some(sd);
    }
    if stage >= Stage::Matching {
        out.matchings = matching_phase(&mut sim, out.strong.as_ref().expect("precondition ran"))?;
    }
    if stage >= Stage::Reduce {
        out.reduce = Some(reduce_phase(&mut sim, out.strong.as_ref().expect("precondition ran"))?);
    }
    if stage >= Stage::Full {
        out.iterations = augpath_phase(&mut sim, out.strong.as_ref().expect("precondition ran"), &out.matchings)?;
    }
    out.coloring = sim.coloring.clone();
    out.lists = sim.lists.clone();
    out.metrics = sim.net.into_metrics();
    Ok(out)
}
