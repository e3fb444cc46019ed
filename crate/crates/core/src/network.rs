//! The assembled network: encoding, excitatory dynamics and plasticity,
//! with label assignment and evaluation on top.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{adaptive_theta_target, InhibitionParams, Integrator, LifParams, NeuronState};
use crate::encoding::{encode, EncodingParams, ImageSample, SpikeTrain};
use crate::error::{Error, Result};
use crate::ops::{OpCounts, Phase};
use crate::par;
use crate::plasticity::{LearningParams, LearningRule, Plasticity, UpdateTally};
use crate::seed::{self, Domain};
use crate::weights::Weights;

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_exc: usize,
    pub n_syn: usize,
    /// Derive `theta_inc` from `c_theta * theta_decay * t_sim` instead of
    /// using the configured value.
    pub adaptive_theta: bool,
    pub seed: u64,
    pub encoding: EncodingParams,
    pub lif: LifParams,
    pub inhibition: InhibitionParams,
    pub learning: LearningParams,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_exc: 100,
            n_syn: 784,
            adaptive_theta: true,
            seed: 0,
            encoding: EncodingParams::default(),
            lif: LifParams::default(),
            inhibition: InhibitionParams::default(),
            learning: LearningParams::default(),
        }
    }
}

impl NetworkConfig {
    /// The degraded comparison configuration: per-spike updates, no weight
    /// decay, fixed rates and a fixed adaptation increment.
    pub fn baseline(&self) -> Self {
        let mut c = *self;
        c.learning.rule = LearningRule::PerSpike;
        c.learning.weight_decay = false;
        c.learning.adaptive_rates = false;
        c.adaptive_theta = false;
        c
    }

    /// LIF parameters with the adaptation increment resolved.
    pub fn effective_lif(&self) -> LifParams {
        let mut lif = self.lif;
        if self.adaptive_theta {
            lif.theta_inc = adaptive_theta_target(&lif, self.encoding.t_sim) as f32;
        }
        lif
    }

    /// Copies derived values into the stored fields so the config can be
    /// echoed and re-read unchanged.
    pub fn materialized(&self) -> Self {
        let mut c = *self;
        c.lif = self.effective_lif();
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exc == 0 {
            return Err(Error::config("n_exc must be at least 1"));
        }
        if self.n_syn == 0 {
            return Err(Error::config("n_syn must be at least 1"));
        }
        self.encoding.validate()?;
        self.effective_lif().validate()?;
        self.inhibition.validate()?;
        self.learning.validate(self.encoding.t_sim, self.encoding.dt)
    }

    pub fn n_steps(&self) -> usize {
        self.encoding.n_steps().expect("validated config")
    }
}

/// Class assigned to each excitatory neuron, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronLabels(pub Vec<Option<u8>>);

impl NeuronLabels {
    pub fn unassigned(n_exc: usize) -> Self {
        Self(vec![None; n_exc])
    }

    pub fn assigned(&self) -> usize {
        self.0.iter().filter(|l| l.is_some()).count()
    }
}

/// Outcome of one training presentation.
#[derive(Debug, Clone, Default)]
pub struct SampleStats {
    pub ops: OpCounts,
    pub tally: UpdateTally,
    pub spikes_per_neuron: Vec<u32>,
    /// Spiking neurons per step, when recording was requested.
    pub post_raster: Option<Vec<Vec<usize>>>,
    /// Input channels per step, when recording was requested.
    pub pre_raster: Option<SpikeTrain>,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    integrator: Integrator,
    pub weights: Weights,
    pub state: NeuronState,
    pub plasticity: Plasticity,
    training_ops: OpCounts,
    inference_ops: OpCounts,
}

impl Network {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let w_init = config.learning.w_init_frac * config.learning.w_max;
        let weights = Weights::uniform(
            config.n_exc,
            config.n_syn,
            w_init,
            seed::derive(config.seed, Domain::WeightInit, 0),
        );
        Self::with_weights(config, weights)
    }

    pub fn with_weights(config: NetworkConfig, weights: Weights) -> Result<Self> {
        config.validate()?;
        if weights.n_exc() != config.n_exc || weights.n_syn() != config.n_syn {
            return Err(Error::config("weight matrix does not match n_exc x n_syn"));
        }
        let lif = config.effective_lif();
        let integrator = Integrator::new(lif, config.inhibition, config.encoding.dt)?;
        let plasticity = Plasticity::new(
            config.learning,
            config.n_exc,
            config.n_syn,
            config.encoding.t_sim,
            config.encoding.dt,
        )?;
        Ok(Self {
            integrator,
            weights,
            state: NeuronState::new(config.n_exc, &lif),
            plasticity,
            training_ops: OpCounts::default(),
            inference_ops: OpCounts::default(),
            config,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn n_exc(&self) -> usize {
        self.config.n_exc
    }

    /// Accumulated operation counts of one phase.
    pub fn count_ops(&self, phase: Phase) -> OpCounts {
        match phase {
            Phase::Training => self.training_ops,
            Phase::Inference => self.inference_ops,
        }
    }

    pub fn reset_counts(&mut self) {
        self.training_ops = OpCounts::default();
        self.inference_ops = OpCounts::default();
        self.plasticity.tally = UpdateTally::default();
    }

    fn encode(&self, sample: &ImageSample, encoding_seed: u64) -> Result<SpikeTrain> {
        encode(sample, self.config.n_syn, &self.config.encoding, encoding_seed)
    }

    /// Presents one sample with learning on.
    pub fn train_sample(&mut self, sample: &ImageSample, encoding_seed: u64) -> Result<SampleStats> {
        self.train_sample_with(sample, encoding_seed, false)
    }

    pub fn train_sample_with(
        &mut self,
        sample: &ImageSample,
        encoding_seed: u64,
        record: bool,
    ) -> Result<SampleStats> {
        let train = self.encode(sample, encoding_seed)?;
        let n = self.config.n_exc;
        let tally_before = self.plasticity.tally;
        let mut stats = SampleStats {
            spikes_per_neuron: vec![0; n],
            ..SampleStats::default()
        };
        let mut raster = record.then(|| Vec::with_capacity(train.n_steps()));
        let mut ops = OpCounts {
            samples: 1,
            ..OpCounts::default()
        };
        let mut post = Vec::with_capacity(n);

        self.plasticity.begin_sample();
        for t in 0..train.n_steps() {
            let input = train.at(t);
            self.integrator
                .step(&mut self.state, &self.weights, input, true, &mut post)?;
            self.plasticity.after_step(t, input, &post, &mut self.weights)?;
            count_step(&mut ops, n, input.len(), post.len());
            for &i in &post {
                stats.spikes_per_neuron[i] += 1;
            }
            if let Some(r) = raster.as_mut() {
                r.push(post.clone());
            }
        }
        self.plasticity.end_sample(&mut self.weights);
        self.state.reset_for_sample(&self.integrator.lif);

        let mut tally = self.plasticity.tally;
        tally.windows -= tally_before.windows;
        tally.depression_windows -= tally_before.depression_windows;
        tally.potentiation_windows -= tally_before.potentiation_windows;
        tally.update_events -= tally_before.update_events;
        tally.elements_touched -= tally_before.elements_touched;
        tally.decay_steps -= tally_before.decay_steps;
        tally.decay_elements -= tally_before.decay_elements;
        tally.trace_updates -= tally_before.trace_updates;
        ops.trace_updates = tally.trace_updates;
        ops.weight_updates = tally.elements_touched;
        ops.decay_ops = tally.decay_elements;
        ops.update_events = tally.update_events;

        self.training_ops += ops;
        stats.ops = ops;
        stats.tally = tally;
        stats.post_raster = raster;
        if record {
            stats.pre_raster = Some(train);
        }
        Ok(stats)
    }

    /// Presents one sample with plasticity off and the adaptation frozen.
    /// Returns spike counts per neuron and the operations performed.
    pub fn respond(&self, sample: &ImageSample, encoding_seed: u64) -> Result<(Vec<u32>, OpCounts)> {
        let train = self.encode(sample, encoding_seed)?;
        let n = self.config.n_exc;
        let mut state = self.state.clone();
        state.reset_for_sample(&self.integrator.lif);
        let mut counts = vec![0u32; n];
        let mut ops = OpCounts {
            samples: 1,
            ..OpCounts::default()
        };
        let mut post = Vec::with_capacity(n);
        for t in 0..train.n_steps() {
            let input = train.at(t);
            self.integrator
                .step(&mut state, &self.weights, input, false, &mut post)?;
            count_step(&mut ops, n, input.len(), post.len());
            for &i in &post {
                counts[i] += 1;
            }
        }
        Ok((counts, ops))
    }

    /// Runs `respond` over many samples, fanning out when the `parallel`
    /// feature is on. Sample `k` is encoded with `derive(seed, domain, k)`.
    pub fn respond_all(
        &mut self,
        samples: &[ImageSample],
        domain: Domain,
    ) -> Result<Vec<Vec<u32>>> {
        let base = self.config.seed;
        let results = {
            let net: &Network = self;
            par::map(samples, |k, s| {
                net.respond(s, seed::derive(base, domain, k as u64))
            })
        };
        let mut out = Vec::with_capacity(samples.len());
        for r in results {
            let (counts, ops) = r?;
            self.inference_ops += ops;
            out.push(counts);
        }
        Ok(out)
    }

    /// Labels each neuron with the class of highest mean response over
    /// `subset`. Silent neurons stay unassigned; ties go to the lower class.
    pub fn assign_labels(&mut self, subset: &[ImageSample]) -> Result<NeuronLabels> {
        if subset.is_empty() {
            return Err(Error::usage("label assignment needs at least one sample"));
        }
        let responses = self.respond_all(subset, Domain::LabelEncoding)?;
        Ok(labels_from_responses(
            self.config.n_exc,
            subset.iter().map(|s| s.label),
            &responses,
        ))
    }

    /// Evaluates `test_set` restricted to the classes in `scope`.
    ///
    /// `recent` names the most recently learned class; the previously
    /// learned accuracy averages the other classes in scope.
    pub fn evaluate(
        &mut self,
        labels: &NeuronLabels,
        test_set: &[ImageSample],
        scope: &[u8],
        recent: Option<u8>,
    ) -> Result<EvalReport> {
        let selected: Vec<ImageSample> = test_set
            .iter()
            .filter(|s| scope.contains(&s.label))
            .cloned()
            .collect();
        if selected.is_empty() {
            return Err(Error::usage("no test samples in the evaluation scope"));
        }
        let before = self.inference_ops;
        let responses = self.respond_all(&selected, Domain::TestEncoding)?;
        let mut report = EvalReport::new(scope);
        for (s, r) in selected.iter().zip(&responses) {
            report.record(s.label, classify(labels, r));
        }
        report.finish(recent);
        report.inference_ops = diff(self.inference_ops, before);
        report.update_tally = self.plasticity.tally;
        Ok(report)
    }

    /// Bytes of the serialized persistent state.
    pub fn snapshot(&self, labels: &NeuronLabels) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_snapshot(labels, &mut out).expect("in-memory write");
        out
    }

    /// Writes weights, per-neuron potential, adaptation, conductance and
    /// label, and the presynaptic trace array, all as little-endian 32-bit
    /// values after a 20-byte header.
    pub fn write_snapshot(&self, labels: &NeuronLabels, w: &mut impl Write) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.config.n_exc as u64).to_le_bytes())?;
        w.write_all(&(self.config.n_syn as u32).to_le_bytes())?;
        let put = |w: &mut dyn Write, xs: &[f32]| -> std::io::Result<()> {
            for x in xs {
                w.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        };
        put(w, self.weights.as_slice())?;
        put(w, &self.state.v)?;
        put(w, &self.state.theta)?;
        put(w, &self.state.ge)?;
        for l in &labels.0 {
            w.write_all(&l.map_or(-1i32, i32::from).to_le_bytes())?;
        }
        put(w, &self.plasticity.traces.x_pre)?;
        Ok(())
    }

    /// Restores a network written by [`Network::write_snapshot`].
    pub fn read_snapshot(config: NetworkConfig, r: &mut impl Read) -> Result<(Self, NeuronLabels)> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != SNAPSHOT_MAGIC {
            return Err(Error::format(0, "not a network snapshot"));
        }
        let version = cur.u32()?;
        if version != 1 {
            return Err(Error::format(4, format!("unsupported snapshot version {version}")));
        }
        let n_exc = cur.u64()? as usize;
        let n_syn = cur.u32()? as usize;
        if n_exc != config.n_exc || n_syn != config.n_syn {
            return Err(Error::Consistency(format!(
                "snapshot is {n_exc}x{n_syn}, config expects {}x{}",
                config.n_exc, config.n_syn
            )));
        }
        let weights = Weights::from_vec(n_exc, n_syn, cur.f32s(n_exc * n_syn)?);
        let mut net = Network::with_weights(config, weights)?;
        net.state.v = cur.f32s(n_exc)?;
        net.state.theta = cur.f32s(n_exc)?;
        net.state.ge = cur.f32s(n_exc)?;
        let mut labels = Vec::with_capacity(n_exc);
        for _ in 0..n_exc {
            let at = cur.pos;
            let l = cur.u32()? as i32;
            labels.push(match l {
                -1 => None,
                0..=9 => Some(l as u8),
                _ => return Err(Error::format(at as u64, format!("invalid label {l}"))),
            });
        }
        net.plasticity.traces.x_pre = cur.f32s(n_syn)?;
        if cur.pos != bytes.len() {
            return Err(Error::format(cur.pos as u64, "trailing bytes after snapshot"));
        }
        Ok((net, NeuronLabels(labels)))
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"SNNS";

/// Size of the snapshot header in bytes.
pub const SNAPSHOT_HEADER: usize = 20;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::format(self.pos as u64, "snapshot truncated"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn count_step(ops: &mut OpCounts, n_exc: usize, inputs: usize, outputs: usize) {
    ops.synaptic_adds += (inputs * n_exc) as u64;
    ops.neuron_updates += n_exc as u64;
    ops.inhibition_kicks += (outputs * n_exc.saturating_sub(1)) as u64;
    ops.input_spikes += inputs as u64;
    ops.output_spikes += outputs as u64;
}

fn diff(after: OpCounts, before: OpCounts) -> OpCounts {
    OpCounts {
        samples: after.samples - before.samples,
        synaptic_adds: after.synaptic_adds - before.synaptic_adds,
        inhibition_kicks: after.inhibition_kicks - before.inhibition_kicks,
        neuron_updates: after.neuron_updates - before.neuron_updates,
        trace_updates: after.trace_updates - before.trace_updates,
        weight_updates: after.weight_updates - before.weight_updates,
        decay_ops: after.decay_ops - before.decay_ops,
        update_events: after.update_events - before.update_events,
        input_spikes: after.input_spikes - before.input_spikes,
        output_spikes: after.output_spikes - before.output_spikes,
    }
}

/// Label rule shared by [`Network::assign_labels`] and tests.
pub fn labels_from_responses(
    n_exc: usize,
    classes: impl IntoIterator<Item = u8>,
    responses: &[Vec<u32>],
) -> NeuronLabels {
    let mut sums = vec![[0u64; N_CLASSES]; n_exc];
    let mut seen = [0u64; N_CLASSES];
    for (c, r) in classes.into_iter().zip(responses) {
        seen[c as usize] += 1;
        for (i, &k) in r.iter().enumerate() {
            sums[i][c as usize] += k as u64;
        }
    }
    NeuronLabels(
        sums.iter()
            .map(|row| {
                let mut best: Option<(u8, f64)> = None;
                for c in 0..N_CLASSES {
                    if seen[c] == 0 {
                        continue;
                    }
                    let mean = row[c] as f64 / seen[c] as f64;
                    if mean > 0.0 && best.map_or(true, |(_, b)| mean > b) {
                        best = Some((c as u8, mean));
                    }
                }
                best.map(|(c, _)| c)
            })
            .collect(),
    )
}

/// Predicts the class whose labelled neurons have the highest mean spike
/// count. `None` when no labelled neuron fired.
pub fn classify(labels: &NeuronLabels, spikes: &[u32]) -> Option<u8> {
    let mut sum = [0u64; N_CLASSES];
    let mut members = [0u64; N_CLASSES];
    for (l, &k) in labels.0.iter().zip(spikes) {
        if let Some(c) = l {
            sum[*c as usize] += k as u64;
            members[*c as usize] += 1;
        }
    }
    let mut best: Option<(u8, f64)> = None;
    for c in 0..N_CLASSES {
        if members[c] == 0 {
            continue;
        }
        let score = sum[c] as f64 / members[c] as f64;
        if score > 0.0 && best.map_or(true, |(_, b)| score > b) {
            best = Some((c as u8, score));
        }
    }
    best.map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: u8,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

/// Evaluation results. `confusion[t][p]` counts true class `t` predicted as
/// `p`; column `N_CLASSES` holds presentations with no prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scope: Vec<u8>,
    pub per_class: Vec<ClassScore>,
    pub overall: f64,
    pub confusion: Vec<[u64; N_CLASSES + 1]>,
    pub most_recent_task: Option<f64>,
    pub previous_tasks: Option<f64>,
    pub update_tally: UpdateTally,
    pub inference_ops: OpCounts,
}

impl EvalReport {
    pub fn new(scope: &[u8]) -> Self {
        let mut scope = scope.to_vec();
        scope.sort_unstable();
        scope.dedup();
        Self {
            scope,
            per_class: Vec::new(),
            overall: 0.0,
            confusion: vec![[0; N_CLASSES + 1]; N_CLASSES],
            most_recent_task: None,
            previous_tasks: None,
            update_tally: UpdateTally::default(),
            inference_ops: OpCounts::default(),
        }
    }

    pub fn record(&mut self, truth: u8, predicted: Option<u8>) {
        let col = predicted.map_or(N_CLASSES, usize::from);
        self.confusion[truth as usize][col] += 1;
    }

    /// Recomputes all accuracies from the confusion matrix.
    pub fn finish(&mut self, recent: Option<u8>) {
        self.per_class = self
            .scope
            .iter()
            .map(|&c| {
                let row = &self.confusion[c as usize];
                let total: u64 = row.iter().sum();
                let correct = row[c as usize];
                ClassScore {
                    class: c,
                    correct,
                    total,
                    accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
                }
            })
            .collect();
        let (correct, total) = self
            .per_class
            .iter()
            .fold((0, 0), |(a, b), s| (a + s.correct, b + s.total));
        self.overall = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        self.most_recent_task = recent.and_then(|r| {
            self.per_class
                .iter()
                .find(|s| s.class == r && s.total > 0)
                .map(|s| s.accuracy)
        });
        let previous: Vec<f64> = self
            .per_class
            .iter()
            .filter(|s| Some(s.class) != recent && s.total > 0)
            .map(|s| s.accuracy)
            .collect();
        self.previous_tasks = if previous.is_empty() {
            None
        } else {
            Some(previous.iter().sum::<f64>() / previous.len() as f64)
        };
    }
}
