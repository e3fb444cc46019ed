//! Memory- and energy-constrained choice of the excitatory layer size.
//!
//! Sizes `n_add, 2 n_add, ...` are explored while their estimated memory
//! fits the budget. Each size is probed with one training sample; sizes
//! whose projected training energy fits are probed again with one
//! inference sample. The largest size meeting every budget wins.

use serde::{Deserialize, Serialize};

use crate::encoding::ImageSample;
use crate::error::{Error, Result};
use crate::network::{Network, NetworkConfig};
use crate::ops::{OpCounts, Phase, PARAMS_PER_NEURON};
use crate::par;
use crate::seed::{self, Domain};

/// Energy charged per counted operation, in arbitrary units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Per conductance addition or lateral inhibition kick.
    pub synaptic_op: f64,
    /// Per neuron state update.
    pub neuron_update: f64,
    pub trace_update: f64,
    /// Per weight element written by an STDP update.
    pub weight_update: f64,
    /// Per weight element decayed.
    pub decay_op: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            synaptic_op: 1.0,
            neuron_update: 10.0,
            trace_update: 2.0,
            weight_update: 2.0,
            decay_op: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.synaptic_op,
            self.neuron_update,
            self.trace_update,
            self.weight_update,
            self.decay_op,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::config("cost weights must be finite and non-negative"))
        }
    }

    pub fn energy(&self, ops: &OpCounts) -> f64 {
        self.synaptic_op * (ops.synaptic_adds + ops.inhibition_kicks) as f64
            + self.neuron_update * ops.neuron_updates as f64
            + self.trace_update * ops.trace_updates as f64
            + self.weight_update * ops.weight_updates as f64
            + self.decay_op * ops.decay_ops as f64
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            synaptic_op: self.synaptic_op * k,
            neuron_update: self.neuron_update * k,
            trace_update: self.trace_update * k,
            weight_update: self.weight_update * k,
            decay_op: self.decay_op * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Memory budget (bytes).
    pub mem_c: u64,
    /// Training energy budget.
    pub e_ct: f64,
    /// Inference energy budget.
    pub e_ci: f64,
    /// Neuron-count increment between candidates.
    pub n_add: usize,
    /// Samples the deployed model will train on.
    pub n_train: u64,
    /// Samples the deployed model will classify.
    pub n_inf: u64,
    /// Bits per stored parameter.
    pub bp: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mem_c: 2_000_000,
            e_ct: f64::INFINITY,
            e_ci: f64::INFINITY,
            n_add: 100,
            n_train: 60_000,
            n_inf: 10_000,
            bp: 32,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mem_c == 0 {
            return Err(Error::config("mem_c must be positive"));
        }
        if self.n_add == 0 {
            return Err(Error::config("n_add must be at least 1"));
        }
        if ![8, 16, 32, 64].contains(&self.bp) {
            return Err(Error::config("bp must be one of 8, 16, 32, 64"));
        }
        if self.e_ct.is_nan() || self.e_ci.is_nan() {
            return Err(Error::config("energy budgets must not be NaN"));
        }
        Ok(())
    }
}

/// `(P_w + P_n) * bp / 8` bytes, with `P_w = n_exc * n_syn` and
/// `P_n = 4 * n_exc + n_syn` (four scalars per neuron plus the shared
/// presynaptic trace array).
pub fn memory_estimate(n_exc: usize, n_syn: usize, bp: u32) -> u64 {
    let p_w = (n_exc * n_syn) as u64;
    let p_n = (n_exc * PARAMS_PER_NEURON + n_syn) as u64;
    (p_w + p_n) * bp as u64 / 8
}

/// `e_1 * n`.
pub fn energy_estimate(e_1: f64, n: u64) -> f64 {
    e_1 * n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCandidate {
    pub n_exc: usize,
    pub mem: u64,
    pub e_1t: f64,
    pub e_t: f64,
    pub e_1i: Option<f64>,
    pub e_i: Option<f64>,
    pub feasible: bool,
}

/// Energy of one probe sample. A fresh network is built from `config`;
/// for inference it first trains on the probe, as in the search loop.
pub fn calibrate_e1(
    config: &NetworkConfig,
    phase: Phase,
    cost: &CostModel,
    probe: &ImageSample,
) -> Result<f64> {
    let mut net = Network::new(*config)?;
    let s = seed::derive(config.seed, Domain::Probe, 0);
    let stats = net.train_sample(probe, s)?;
    match phase {
        Phase::Training => Ok(cost.energy(&stats.ops)),
        Phase::Inference => {
            let (_, ops) = net.respond(probe, s)?;
            Ok(cost.energy(&ops))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: ModelCandidate,
    pub log: Vec<ModelCandidate>,
    /// Single-sample probe runs performed.
    pub probes: usize,
}

/// Candidate sizes whose memory estimate fits `mem_c`, in increasing order.
pub fn memory_feasible_sizes(cfg: &SearchConfig, n_syn: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut n = cfg.n_add;
    while memory_estimate(n, n_syn, cfg.bp) <= cfg.mem_c {
        sizes.push(n);
        n += cfg.n_add;
    }
    sizes
}

fn probe_candidate(
    cfg: &SearchConfig,
    base: &NetworkConfig,
    cost: &CostModel,
    probe: &ImageSample,
    n_exc: usize,
) -> Result<(ModelCandidate, usize)> {
    let config = NetworkConfig { n_exc, ..*base };
    let mut net = Network::new(config)?;
    let s = seed::derive(config.seed, Domain::Probe, 0);
    let train = net.train_sample(probe, s)?;
    let e_1t = cost.energy(&train.ops);
    let e_t = energy_estimate(e_1t, cfg.n_train);
    let mut c = ModelCandidate {
        n_exc,
        mem: memory_estimate(n_exc, base.n_syn, cfg.bp),
        e_1t,
        e_t,
        e_1i: None,
        e_i: None,
        feasible: false,
    };
    let mut probes = 1;
    if e_t <= cfg.e_ct {
        let (_, ops) = net.respond(probe, s)?;
        probes += 1;
        let e_1i = cost.energy(&ops);
        let e_i = energy_estimate(e_1i, cfg.n_inf);
        c.e_1i = Some(e_1i);
        c.e_i = Some(e_i);
        c.feasible = e_i <= cfg.e_ci;
    }
    Ok((c, probes))
}

/// Runs the constrained search. Probes of different sizes are independent
/// and run in parallel when the `parallel` feature is enabled.
pub fn search(
    cfg: &SearchConfig,
    base: &NetworkConfig,
    cost: &CostModel,
    probe: &ImageSample,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    cost.validate()?;
    let sizes = memory_feasible_sizes(cfg, base.n_syn);
    let results = par::map(&sizes, |_, &n| probe_candidate(cfg, base, cost, probe, n));
    let mut log = Vec::with_capacity(sizes.len());
    let mut probes = 0;
    for r in results {
        let (c, p) = r?;
        probes += p;
        log.push(c);
    }
    match log.iter().rev().find(|c| c.feasible) {
        Some(best) => Ok(SearchOutcome {
            best: best.clone(),
            probes,
            log,
        }),
        None => Err(Error::Infeasible { log }),
    }
}
