use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node {node}: sublist {sublist} exhausted ({wanted} wanted, {left} left)")]
    ListExhausted {
        node: NodeId,
        sublist: String,
        wanted: usize,
        left: usize,
    },
    #[error("illegal send {from} -> {to}: not a sparsified or sampled edge")]
    IllegalEdge { from: NodeId, to: NodeId },
    #[error("round cap {cap} exceeded")]
    RoundCapExceeded { cap: u64 },
    #[error("coloring conflict on edge ({0}, {1})")]
    Conflict(NodeId, NodeId),
    #[error("not a perfect matching: {0}")]
    NotPerfectMatching(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
