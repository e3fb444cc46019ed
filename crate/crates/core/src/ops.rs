//! Operation counts, the basis of the energy proxy.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Inference,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Training => "training",
            Phase::Inference => "inference",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub samples: u64,
    /// Conductance additions, one per (input spike, target neuron).
    pub synaptic_adds: u64,
    /// Potential kicks delivered by lateral inhibition.
    pub inhibition_kicks: u64,
    /// Neuron state updates, one per neuron per step.
    pub neuron_updates: u64,
    pub trace_updates: u64,
    /// Weight elements written by STDP updates.
    pub weight_updates: u64,
    /// Weight elements multiplied by the decay factor.
    pub decay_ops: u64,
    /// STDP update events (effective windows, or spikes for the per-spike rule).
    pub update_events: u64,
    pub input_spikes: u64,
    pub output_spikes: u64,
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.samples += o.samples;
        self.synaptic_adds += o.synaptic_adds;
        self.inhibition_kicks += o.inhibition_kicks;
        self.neuron_updates += o.neuron_updates;
        self.trace_updates += o.trace_updates;
        self.weight_updates += o.weight_updates;
        self.decay_ops += o.decay_ops;
        self.update_events += o.update_events;
        self.input_spikes += o.input_spikes;
        self.output_spikes += o.output_spikes;
    }
}

impl std::ops::Add for OpCounts {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl std::iter::Sum for OpCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

impl OpCounts {
    /// `(name, value)` pairs in a fixed order, for CSV output.
    pub fn entries(&self) -> [(&'static str, u64); 10] {
        [
            ("samples", self.samples),
            ("synaptic_adds", self.synaptic_adds),
            ("inhibition_kicks", self.inhibition_kicks),
            ("neuron_updates", self.neuron_updates),
            ("trace_updates", self.trace_updates),
            ("weight_updates", self.weight_updates),
            ("decay_ops", self.decay_ops),
            ("update_events", self.update_events),
            ("input_spikes", self.input_spikes),
            ("output_spikes", self.output_spikes),
        ]
    }
}

/// Persistent scalars stored per excitatory neuron: potential, adaptation,
/// conductance and label.
pub const PARAMS_PER_NEURON: usize = 4;

/// Stored parameter counts of an architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub weights: usize,
    pub neuron_params: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.weights + self.neuron_params
    }
}

/// Parameters of the layer with direct lateral inhibition.
pub fn lateral_params(n_exc: usize, n_syn: usize) -> ParamCount {
    ParamCount {
        weights: n_exc * n_syn,
        neuron_params: n_exc * PARAMS_PER_NEURON + n_syn,
    }
}

/// Parameters of the same layer paired with an inhibitory population of
/// equal size: one-to-one excitatory-to-inhibitory weights, all-but-self
/// inhibitory-to-excitatory weights, and the inhibitory neurons' potential,
/// conductance and inhibitory conductance on the excitatory side.
pub fn inhibitory_layer_params(n_exc: usize, n_syn: usize) -> ParamCount {
    let n_inh = n_exc;
    ParamCount {
        weights: n_exc * n_syn + n_exc + n_inh * n_exc.saturating_sub(1),
        // inhibitory neurons: v, ge; excitatory side gains gi
        neuron_params: n_exc * PARAMS_PER_NEURON + n_syn + n_inh * 2 + n_exc,
    }
}

/// Maps counts measured on the lateral-inhibition layer to what the
/// inhibitory-population architecture performs on the same spikes.
///
/// Each excitatory spike drives its inhibitory partner (one synaptic add);
/// the partner's spike then reaches the other `n_exc - 1` excitatory
/// neurons as conductance additions, which replaces the direct kick. Every
/// step also updates `n_exc` inhibitory neurons and decays the excitatory
/// side's inhibitory conductance.
pub fn inhibitory_layer_counts(measured: &OpCounts, n_exc: usize, steps_per_sample: u64) -> OpCounts {
    let n = n_exc as u64;
    let mut c = *measured;
    c.synaptic_adds += measured.output_spikes + measured.inhibition_kicks;
    c.inhibition_kicks = 0;
    c.neuron_updates += 2 * n * steps_per_sample * measured.samples;
    c
}
