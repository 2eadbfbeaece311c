//! Algorithm constants and their resolution against a concrete instance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Literal asymptotic constants; only usable for structural checks.
    Paper,
    /// Scaled-down constants that make the pipeline run at small Δ.
    Desk,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Mode::Paper),
            "desk" => Ok(Mode::Desk),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// User-facing constants. `None` fields are derived from the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub mode: Mode,
    pub alpha: usize,
    pub beta: Option<usize>,
    pub c_beta: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub gamma: f64,
    /// L1 holds `c1 * log2(n)^2` draws.
    pub c1: f64,
    /// Multiplier on the per-color L2,i rate 1/(4Δ).
    pub l2_scale: f64,
    pub l2_sublists: Option<usize>,
    /// Multiplier on the per-color L3 half rate 20β²/Δ.
    pub l3_scale: f64,
    /// Friendship parameter of the decomposition; derived from ε when unset.
    pub acd_delta: Option<f64>,
    /// Expected size of a full-degree sketch, i.e. Δσ/λ.
    pub sketch_size: f64,
    /// Aux edges are sampled with rate `aux_c * log2(n) / (δ² Δ)`.
    pub aux_c: f64,
    pub matching_k: f64,
    /// Matching iterations per unit of K.
    pub matching_iters_per_k: usize,
    /// Per-edge bandwidth is `bandwidth_factor * ceil(log2 n)` bits per round.
    pub bandwidth_factor: usize,
    /// Distinct-neighbor budget per node per round is `budget_factor * β⁴`.
    pub budget_factor: f64,
    pub round_cap: Option<u64>,
    pub slack_activation: f64,
    pub trial_activation: f64,
    pub multi_trial_cap: usize,
    pub multi_trial_iters: usize,
    pub reduce_rounds: usize,
    pub aug_iterations: Option<usize>,
    /// Sampled-external threshold of the introvert test, in units of β.
    pub introvert_factor: f64,
    /// Largest number of messages a compact matching may disseminate, in units of β³.
    pub compact_cap: f64,
    /// Tree growth also rejects colors in the current L3 sublist of
    /// neighbors in other cliques (the w.h.p. exclusion of the analysis).
    pub external_l3_filter: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self::desk()
    }
}

impl Params {
    pub fn desk() -> Self {
        Params {
            mode: Mode::Desk,
            alpha: 4,
            beta: None,
            c_beta: 1.0,
            epsilon: 0.05,
            eta: None,
            gamma: 1.0,
            c1: 2.0,
            l2_scale: 4.0,
            l2_sublists: None,
            l3_scale: 0.07,
            acd_delta: Some(0.2),
            sketch_size: 320.0,
            aux_c: 0.4,
            matching_k: 2.0,
            matching_iters_per_k: 50,
            bandwidth_factor: 4,
            budget_factor: 1.0,
            round_cap: None,
            slack_activation: 1.0 / 20.0,
            trial_activation: 0.25,
            multi_trial_cap: 16,
            multi_trial_iters: 12,
            reduce_rounds: 40,
            aug_iterations: None,
            introvert_factor: 0.75,
            compact_cap: 8.0,
            external_l3_filter: false,
        }
    }

    /// Literal constants of the analysis.
    pub fn paper() -> Self {
        Params {
            mode: Mode::Paper,
            alpha: 500,
            epsilon: 1e-8,
            c1: 1.0,
            l2_scale: 1.0,
            l3_scale: 1.0,
            acd_delta: None,
            matching_iters_per_k: 5000,
            external_l3_filter: true,
            ..Self::desk()
        }
    }

    /// Constraint checks on (ε, α): ε ≤ 1/α² and 2α < 1/(18ε).
    /// Hard error in paper mode, debug log in desk mode.
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 2 {
            return Err(Error::InvalidParams(format!("alpha={} < 2", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 3.0) {
            return Err(Error::InvalidParams(format!("epsilon={} outside (0, 1/3)", self.epsilon)));
        }
        if let Some(b) = self.beta {
            if b < 2 {
                return Err(Error::InvalidParams(format!("beta={b} < 2")));
            }
        }
        let a = self.alpha as f64;
        let mut problems = Vec::new();
        if self.epsilon > 1.0 / (a * a) {
            problems.push(format!("epsilon={} > 1/alpha^2={}", self.epsilon, 1.0 / (a * a)));
        }
        if 2.0 * a >= 1.0 / (18.0 * self.epsilon) {
            problems.push(format!("2*alpha={} >= 1/(18 epsilon)={:.3}", 2.0 * a, 1.0 / (18.0 * self.epsilon)));
        }
        if !problems.is_empty() {
            let msg = problems.join("; ");
            match self.mode {
                Mode::Paper => return Err(Error::InvalidParams(msg)),
                Mode::Desk => log::debug!("desk constants outside the analysed range: {msg}"),
            }
        }
        Ok(())
    }

    pub fn resolve(&self, n: usize, delta: usize) -> Result<Resolved> {
        self.validate()?;
        let log_n = log2(n.max(2) as f64);
        let beta = self
            .beta
            .unwrap_or_else(|| ((self.c_beta * log_n).floor() as usize).max(2));
        let delta_f = delta.max(1) as f64;
        let acd_delta = self.acd_delta.unwrap_or(self.epsilon / 12.0);
        let lambda = (16.0 * delta_f / acd_delta).ceil();
        let sigma = match self.mode {
            Mode::Paper => 384.0 * beta as f64 / acd_delta.powi(4),
            Mode::Desk => self.sketch_size * lambda / delta_f,
        }
        .min(lambda);
        let aux_rate = (self.aux_c * log_n / (acd_delta * acd_delta * delta_f)).min(1.0);
        let k_iters = (self.matching_k.max(1.0) * self.matching_iters_per_k as f64).ceil() as usize;
        let l2_count = match self.l2_sublists {
            Some(c) => c.max(1),
            None => match self.mode {
                Mode::Paper => (1.0 / self.epsilon).ceil() as usize,
                Mode::Desk => ((1.0 / self.epsilon).ceil() as usize).max(k_iters),
            },
        };
        let log_delta = log2(delta_f.max(2.0));
        let round_cap = self
            .round_cap
            .unwrap_or((50.0 * log_delta * log_delta + 200.0).ceil() as u64);
        let id_bits = ceil_log2(n);
        Ok(Resolved {
            mode: self.mode,
            n,
            delta,
            palette: delta as u32 + 1,
            alpha: self.alpha,
            beta,
            epsilon: self.epsilon,
            gamma: self.gamma,
            l1_len: (self.c1 * log_n * log_n).ceil() as usize,
            l2_count,
            l2_rate: (self.l2_scale / (4.0 * delta_f)).min(1.0),
            l2_star_rate: (self.gamma * beta as f64 / delta_f).min(1.0),
            l3_rate: (self.l3_scale * 20.0 * (beta * beta) as f64 / delta_f).min(1.0),
            acd_delta,
            lambda: lambda as u64,
            sigma: sigma as u64,
            aux_rate,
            matching_iters: k_iters,
            matching_k: self.matching_k,
            bandwidth: (self.bandwidth_factor * id_bits) as u64,
            neighbor_budget: (self.budget_factor * (beta as f64).powi(4)).ceil() as u64,
            round_cap,
            slack_activation: self.slack_activation,
            trial_activation: self.trial_activation,
            multi_trial_cap: self.multi_trial_cap,
            multi_trial_iters: self.multi_trial_iters,
            reduce_rounds: self.reduce_rounds,
            aug_iterations: self
                .aug_iterations
                .unwrap_or((4.0 * log_delta).ceil() as usize),
            introvert_factor: self.introvert_factor,
            compact_cap: self.compact_cap,
            external_l3_filter: self.external_l3_filter,
            eta_override: self.eta,
        })
    }
}

/// Constants resolved for one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub mode: Mode,
    pub n: usize,
    pub delta: usize,
    /// Number of colors, Δ+1.
    pub palette: u32,
    pub alpha: usize,
    pub beta: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub l1_len: usize,
    pub l2_count: usize,
    pub l2_rate: f64,
    pub l2_star_rate: f64,
    pub l3_rate: f64,
    pub acd_delta: f64,
    pub lambda: u64,
    pub sigma: u64,
    pub aux_rate: f64,
    pub matching_iters: usize,
    pub matching_k: f64,
    pub bandwidth: u64,
    pub neighbor_budget: u64,
    pub round_cap: u64,
    pub slack_activation: f64,
    pub trial_activation: f64,
    pub multi_trial_cap: usize,
    pub multi_trial_iters: usize,
    pub reduce_rounds: usize,
    pub aug_iterations: usize,
    pub introvert_factor: f64,
    pub compact_cap: f64,
    pub external_l3_filter: bool,
    pub eta_override: Option<f64>,
}

impl Resolved {
    /// η = max(160αβ, L_max/ε). Desk mode caps it at Δ/β so that the
    /// classification rate ηβ/Δ stays a probability and e_max ≥ β.
    pub fn eta(&self, l_max: usize) -> f64 {
        if let Some(e) = self.eta_override {
            return e;
        }
        let raw = (160.0 * (self.alpha * self.beta) as f64).max(l_max as f64 / self.epsilon);
        match self.mode {
            Mode::Paper => raw,
            Mode::Desk => raw.min(self.delta.max(1) as f64 / self.beta as f64).max(1.0),
        }
    }

    pub fn e_max(&self, eta: f64) -> f64 {
        self.delta as f64 / eta
    }

    /// Target size Δ/(αβ) of the reduce step.
    pub fn reduce_target(&self) -> f64 {
        self.delta as f64 / (self.alpha * self.beta) as f64
    }
}

pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// ⌈log₂ x⌉, at least 1.
pub fn ceil_log2(x: usize) -> usize {
    let mut b = 0;
    while (1usize << b) < x {
        b += 1;
    }
    b.max(1)
}
