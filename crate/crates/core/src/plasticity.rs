//! Windowed STDP with adaptive potentiation/depression factors and
//! synaptic weight decay, plus the per-spike pair rule used as a baseline.
//!
//! In windowed mode the weights change only at window boundaries (every
//! `t_step` ms, starting at step 0). A window without any postsynaptic
//! spike depresses all rows by `k_d * eta_pre * x_post[i]`; otherwise the
//! row of the most active neuron is potentiated by `k_p * eta_post *
//! x_pre[j]`. Between boundaries every weight decays exponentially.

use serde::{Deserialize, Serialize};

use crate::encoding::whole_steps;
use crate::error::{Error, Result};
use crate::weights::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRule {
    /// Updates gated to `t_step` windows.
    Windowed,
    /// Classic pair-based STDP: one update per pre- or postsynaptic spike.
    PerSpike,
}

/// Lifetime of the spike accumulators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccumulatorScope {
    /// Cleared at every window boundary.
    Window,
    /// Cleared only when a new sample starts.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    pub rule: LearningRule,
    pub accumulators: AccumulatorScope,
    /// Scale updates by k_p / k_d; when false both factors are 1.
    pub adaptive_rates: bool,
    pub weight_decay: bool,
    /// Depression rate (presynaptic-triggered).
    pub eta_pre: f32,
    /// Potentiation rate (postsynaptic-triggered).
    pub eta_post: f32,
    /// Spike count normalizing the potentiation factor.
    pub sp_th: u32,
    /// Presynaptic trace time constant (ms).
    pub tau_x_pre: f32,
    /// Postsynaptic trace time constant (ms).
    pub tau_x_post: f32,
    /// Weight-decay time constant (ms).
    pub tau_decay: f32,
    /// Decay rate numerator; the rate used is `w_decay_base / n_exc`.
    pub w_decay_base: f32,
    /// Update window length (ms).
    pub t_step: f64,
    pub w_min: f32,
    pub w_max: f32,
    /// Initial weights are uniform in `[0, w_init_frac * w_max)`.
    pub w_init_frac: f32,
    /// Cap on each row's sum, enforced after every training sample; 0
    /// disables.
    pub row_norm: f32,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            rule: LearningRule::Windowed,
            accumulators: AccumulatorScope::Window,
            adaptive_rates: true,
            weight_decay: true,
            eta_pre: 1e-4,
            eta_post: 1e-2,
            sp_th: 5,
            tau_x_pre: 20.0,
            tau_x_post: 20.0,
            tau_decay: 1e5,
            w_decay_base: 40.0,
            t_step: 10.0,
            w_min: 0.0,
            w_max: 1.0,
            w_init_frac: 0.3,
            row_norm: 78.4,
        }
    }
}

impl LearningParams {
    pub fn validate(&self, t_sim: f64, dt: f64) -> Result<()> {
        if !(self.eta_pre > 0.0 && self.eta_post > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        if self.sp_th < 1 {
            return Err(Error::config("sp_th must be at least 1"));
        }
        if !(self.tau_x_pre > 0.0 && self.tau_x_post > 0.0 && self.tau_decay > 0.0) {
            return Err(Error::config("trace and decay time constants must be positive"));
        }
        if !(self.w_decay_base >= 0.0) {
            return Err(Error::config("w_decay_base must be non-negative"));
        }
        if !(0.0 <= self.w_min && self.w_min < self.w_max) {
            return Err(Error::config("weight bounds must satisfy 0 <= w_min < w_max"));
        }
        if !(self.row_norm >= 0.0) {
            return Err(Error::config("row_norm must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.w_init_frac) {
            return Err(Error::config("w_init_frac must lie in [0, 1]"));
        }
        let windows = whole_steps(t_sim, self.t_step)
            .map_err(|_| Error::config(format!("t_step ({}) must divide t_sim ({t_sim})", self.t_step)))?;
        let steps = whole_steps(self.t_step, dt)
            .map_err(|_| Error::config(format!("t_step ({}) must be a multiple of dt ({dt})", self.t_step)))?;
        debug_assert!(windows * steps > 0);
        Ok(())
    }
}

/// `ceil(max_sp_post / sp_th)`.
pub fn potentiation_factor(max_sp_post: u32, sp_th: u32) -> Result<u32> {
    if sp_th == 0 {
        return Err(Error::config("sp_th must be at least 1"));
    }
    Ok(max_sp_post.div_ceil(sp_th))
}

/// `max_sp_post / max_sp_pre`, or 0 when there was no presynaptic activity.
pub fn depression_factor(max_sp_post: u32, max_sp_pre: u32) -> f32 {
    if max_sp_pre == 0 {
        0.0
    } else {
        max_sp_post as f32 / max_sp_pre as f32
    }
}

/// Decay rate shrinking with network size: `w_decay_base / n_exc`.
pub fn weight_decay_rate(n_exc: usize, w_decay_base: f32) -> Result<f32> {
    if n_exc == 0 {
        return Err(Error::config("weight decay needs at least one neuron"));
    }
    Ok(w_decay_base / n_exc as f32)
}

/// Per-step multiplicative factor of `tau_decay * dw/dt = -rate * w`.
pub fn decay_factor(rate: f32, tau_decay: f32, dt: f64) -> f32 {
    (-(rate as f64) * dt / tau_decay as f64).exp() as f32
}

/// Multiplies every weight by the decay factor and clamps to the bounds.
pub fn apply_weight_decay(
    weights: &mut Weights,
    rate: f32,
    tau_decay: f32,
    dt: f64,
    w_min: f32,
    w_max: f32,
) {
    scale_and_clamp(weights.as_mut_slice(), decay_factor(rate, tau_decay, dt), w_min, w_max);
}

/// Scales down every row whose sum exceeds `target` so it sums to exactly
/// `target`. Lighter rows are left alone. Returns the elements written.
pub fn normalize_rows(weights: &mut Weights, target: f32, w_min: f32, w_max: f32) -> usize {
    let mut touched = 0;
    for i in 0..weights.n_exc() {
        let row = weights.row_mut(i);
        let sum: f32 = row.iter().sum();
        if sum > target {
            scale_and_clamp(row, target / sum, w_min, w_max);
            touched += row.len();
        }
    }
    touched
}

/// Weights smaller than this are treated as zero after scaling.
pub const FLUSH: f32 = 1e-20;

#[inline]
fn scale_one(w: f32, factor: f32, w_min: f32, w_max: f32) -> f32 {
    let x = w * factor;
    let x = if x < FLUSH { 0.0 } else { x };
    let x = if x < w_min { w_min } else { x };
    if x > w_max {
        w_max
    } else {
        x
    }
}

/// Scales and clamps in place. Weights decayed below [`FLUSH`] become
/// exactly zero so they never go subnormal.
pub(crate) fn scale_and_clamp(data: &mut [f32], factor: f32, w_min: f32, w_max: f32) {
    for w in data.iter_mut() {
        *w = scale_one(*w, factor, w_min, w_max);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    pub x_pre: Vec<f32>,
    pub x_post: Vec<f32>,
}

impl TraceState {
    pub fn new(n_exc: usize, n_syn: usize) -> Self {
        Self {
            x_pre: vec![0.0; n_syn],
            x_post: vec![0.0; n_exc],
        }
    }

    pub fn clear(&mut self) {
        self.x_pre.fill(0.0);
        self.x_post.fill(0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeAccumulators {
    pub n_sp_pre: Vec<u32>,
    pub n_sp_post: Vec<u32>,
}

impl SpikeAccumulators {
    pub fn new(n_exc: usize, n_syn: usize) -> Self {
        Self {
            n_sp_pre: vec![0; n_syn],
            n_sp_post: vec![0; n_exc],
        }
    }

    pub fn clear(&mut self) {
        self.n_sp_pre.fill(0);
        self.n_sp_post.fill(0);
    }

    pub fn max_pre(&self) -> u32 {
        self.n_sp_pre.iter().copied().max().unwrap_or(0)
    }

    pub fn max_post(&self) -> u32 {
        self.n_sp_post.iter().copied().max().unwrap_or(0)
    }

    /// Most active neuron; ties resolve to the lowest index.
    pub fn argmax_post(&self) -> Option<usize> {
        let max = self.max_post();
        if max == 0 {
            return None;
        }
        self.n_sp_post.iter().position(|&c| c == max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Depression,
    Potentiation,
}

/// Weight change computed by one windowed update, before clamping.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightDelta {
    /// One delta per row, applied uniformly to every synapse of that row.
    Depression { per_row: Vec<f32> },
    /// Per-synapse deltas for a single row.
    Potentiation { row: usize, per_syn: Vec<f32> },
}

impl WeightDelta {
    /// Adds the delta and clamps; returns the number of elements written.
    pub fn apply(&self, weights: &mut Weights, w_min: f32, w_max: f32) -> usize {
        match self {
            WeightDelta::Depression { per_row } => {
                for (i, &d) in per_row.iter().enumerate() {
                    for w in weights.row_mut(i) {
                        *w = (*w + d).clamp(w_min, w_max);
                    }
                }
                weights.len()
            }
            WeightDelta::Potentiation { row, per_syn } => {
                for (w, &d) in weights.row_mut(*row).iter_mut().zip(per_syn) {
                    *w = (*w + d).clamp(w_min, w_max);
                }
                per_syn.len()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            WeightDelta::Depression { per_row } => per_row.iter().all(|&d| d == 0.0),
            WeightDelta::Potentiation { per_syn, .. } => per_syn.iter().all(|&d| d == 0.0),
        }
    }
}

/// Eq.-2-style update for one window. `row` is required for potentiation.
pub fn stdp_update(
    kind: UpdateKind,
    k: f32,
    params: &LearningParams,
    traces: &TraceState,
    row: Option<usize>,
) -> Result<WeightDelta> {
    match kind {
        UpdateKind::Depression => {
            let a = k * params.eta_pre;
            Ok(WeightDelta::Depression {
                per_row: traces.x_post.iter().map(|&x| -(a * x)).collect(),
            })
        }
        UpdateKind::Potentiation => {
            let m = row.ok_or_else(|| Error::Internal("potentiation needs a row".into()))?;
            if m >= traces.x_post.len() {
                return Err(Error::Internal(format!(
                    "row {m} out of range for {} neurons",
                    traces.x_post.len()
                )));
            }
            let a = k * params.eta_post;
            Ok(WeightDelta::Potentiation {
                row: m,
                per_syn: traces.x_pre.iter().map(|&x| a * x).collect(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub kind: UpdateKind,
    /// Potentiated row.
    pub row: Option<usize>,
    pub k_p: u32,
    pub k_d: f32,
    pub max_sp_pre: u32,
    pub max_sp_post: u32,
    /// Weight elements written by the update.
    pub touched: usize,
    /// Whether the update changed any weight delta from zero.
    pub effective: bool,
}

/// Dispatches one window boundary: depression when `window_post_spikes`
/// is zero, potentiation of the most active row otherwise.
pub fn window_update(
    acc: &SpikeAccumulators,
    window_post_spikes: u32,
    traces: &TraceState,
    weights: &mut Weights,
    params: &LearningParams,
) -> Result<UpdateReport> {
    let max_sp_pre = acc.max_pre();
    let max_sp_post = acc.max_post();
    let mut report = UpdateReport {
        kind: UpdateKind::Depression,
        row: None,
        k_p: 0,
        k_d: 0.0,
        max_sp_pre,
        max_sp_post,
        touched: 0,
        effective: false,
    };
    let delta = if window_post_spikes == 0 {
        let k_d = if params.adaptive_rates {
            depression_factor(max_sp_post, max_sp_pre)
        } else {
            1.0
        };
        report.k_d = k_d;
        stdp_update(UpdateKind::Depression, k_d, params, traces, None)?
    } else {
        let m = acc.argmax_post().ok_or_else(|| {
            Error::Internal("postsynaptic spikes seen but accumulators are empty".into())
        })?;
        let k_p = if params.adaptive_rates {
            potentiation_factor(max_sp_post, params.sp_th)?
        } else {
            1
        };
        report.kind = UpdateKind::Potentiation;
        report.row = Some(m);
        report.k_p = k_p;
        stdp_update(UpdateKind::Potentiation, k_p as f32, params, traces, Some(m))?
    };
    report.effective = !delta.is_zero();
    report.touched = delta.apply(weights, params.w_min, params.w_max);
    Ok(report)
}

/// Decays both traces, adds one per spike and counts spikes.
pub fn on_spike_trace_update(
    traces: &mut TraceState,
    acc: &mut SpikeAccumulators,
    pre: &[u16],
    post: &[usize],
    keep_pre: f32,
    keep_post: f32,
) {
    for x in &mut traces.x_pre {
        *x *= keep_pre;
    }
    for x in &mut traces.x_post {
        *x *= keep_post;
    }
    for &j in pre {
        traces.x_pre[j as usize] += 1.0;
        acc.n_sp_pre[j as usize] += 1;
    }
    for &i in post {
        traces.x_post[i] += 1.0;
        acc.n_sp_post[i] += 1;
    }
}

/// Counters kept by [`Plasticity`] across samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateTally {
    /// Boundaries reached (windowed rule).
    pub windows: u64,
    pub depression_windows: u64,
    pub potentiation_windows: u64,
    /// Updates that changed at least one weight delta from zero.
    pub update_events: u64,
    pub elements_touched: u64,
    pub decay_steps: u64,
    pub decay_elements: u64,
    pub trace_updates: u64,
}

impl std::ops::AddAssign for UpdateTally {
    fn add_assign(&mut self, o: Self) {
        self.windows += o.windows;
        self.depression_windows += o.depression_windows;
        self.potentiation_windows += o.potentiation_windows;
        self.update_events += o.update_events;
        self.elements_touched += o.elements_touched;
        self.decay_steps += o.decay_steps;
        self.decay_elements += o.decay_elements;
        self.trace_updates += o.trace_updates;
    }
}

/// Learning engine bound to one network size.
#[derive(Debug, Clone)]
pub struct Plasticity {
    pub params: LearningParams,
    pub traces: TraceState,
    pub acc: SpikeAccumulators,
    window_post: u32,
    keep_pre: f32,
    keep_post: f32,
    decay: f32,
    steps_per_window: usize,
    pub tally: UpdateTally,
    pub reports: Vec<UpdateReport>,
    /// Keep a copy of every window report (off by default).
    pub record_reports: bool,
}

impl Plasticity {
    pub fn new(params: LearningParams, n_exc: usize, n_syn: usize, t_sim: f64, dt: f64) -> Result<Self> {
        params.validate(t_sim, dt)?;
        let rate = weight_decay_rate(n_exc, params.w_decay_base)?;
        Ok(Self {
            params,
            traces: TraceState::new(n_exc, n_syn),
            acc: SpikeAccumulators::new(n_exc, n_syn),
            window_post: 0,
            keep_pre: (-dt / params.tau_x_pre as f64).exp() as f32,
            keep_post: (-dt / params.tau_x_post as f64).exp() as f32,
            decay: decay_factor(rate, params.tau_decay, dt),
            steps_per_window: whole_steps(params.t_step, dt)?,
            tally: UpdateTally::default(),
            reports: Vec::new(),
            record_reports: false,
        })
    }

    pub fn steps_per_window(&self) -> usize {
        self.steps_per_window
    }

    pub fn decay_per_step(&self) -> f32 {
        self.decay
    }

    pub fn begin_sample(&mut self) {
        self.traces.clear();
        self.acc.clear();
        self.window_post = 0;
    }

    /// Processes step `t` after the neurons have been advanced.
    pub fn after_step(&mut self, t: usize, pre: &[u16], post: &[usize], weights: &mut Weights) -> Result<()> {
        on_spike_trace_update(
            &mut self.traces,
            &mut self.acc,
            pre,
            post,
            self.keep_pre,
            self.keep_post,
        );
        self.window_post += post.len() as u32;
        self.tally.trace_updates += (self.traces.x_pre.len() + self.traces.x_post.len()) as u64;

        match self.params.rule {
            LearningRule::Windowed => {
                if t % self.steps_per_window == 0 {
                    let report = window_update(&self.acc, self.window_post, &self.traces, weights, &self.params)?;
                    self.tally.windows += 1;
                    match report.kind {
                        UpdateKind::Depression => self.tally.depression_windows += 1,
                        UpdateKind::Potentiation => self.tally.potentiation_windows += 1,
                    }
                    if report.effective {
                        self.tally.update_events += 1;
                    }
                    self.tally.elements_touched += report.touched as u64;
                    if self.record_reports {
                        self.reports.push(report);
                    }
                    self.window_post = 0;
                    if self.params.accumulators == AccumulatorScope::Window {
                        self.acc.clear();
                    }
                } else {
                    self.decay_step(weights);
                }
            }
            LearningRule::PerSpike => {
                self.per_spike(pre, post, weights);
                self.decay_step(weights);
            }
        }
        Ok(())
    }

    /// Closes a training sample: applies the row normalization if enabled.
    pub fn end_sample(&mut self, weights: &mut Weights) {
        let p = &self.params;
        if p.row_norm > 0.0 {
            self.tally.elements_touched += normalize_rows(weights, p.row_norm, p.w_min, p.w_max) as u64;
        }
    }

    fn decay_step(&mut self, weights: &mut Weights) {
        if !self.params.weight_decay {
            return;
        }
        let (lo, hi) = (self.params.w_min, self.params.w_max);
        scale_and_clamp(weights.as_mut_slice(), self.decay, lo, hi);
        self.tally.decay_steps += 1;
        self.tally.decay_elements += weights.len() as u64;
    }

    fn per_spike(&mut self, pre: &[u16], post: &[usize], weights: &mut Weights) {
        let p = &self.params;
        let n_exc = weights.n_exc();
        for &j in pre {
            let j = j as usize;
            for i in 0..n_exc {
                let w = weights.get(i, j) - p.eta_pre * self.traces.x_post[i];
                weights.set(i, j, w.clamp(p.w_min, p.w_max));
            }
        }
        for &i in post {
            for (w, &x) in weights.row_mut(i).iter_mut().zip(&self.traces.x_pre) {
                *w = (*w + p.eta_post * x).clamp(p.w_min, p.w_max);
            }
        }
        let events = (pre.len() + post.len()) as u64;
        self.tally.update_events += events;
        self.tally.elements_touched += (pre.len() * n_exc + post.len() * weights.n_syn()) as u64;
    }
}

/// Update events produced by the two scheduling schemes on one recorded
/// pair of rasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventCounts {
    pub windowed: u64,
    pub per_spike: u64,
}

/// Replays recorded pre/post rasters through the trace and accumulator
/// bookkeeping and counts update events under both schemes.
///
/// `pre[t]` and `post[t]` list the spiking channels and neurons at step `t`.
pub fn count_update_events(
    pre: &[Vec<u16>],
    post: &[Vec<usize>],
    n_exc: usize,
    n_syn: usize,
    params: &LearningParams,
    t_sim: f64,
    dt: f64,
) -> Result<EventCounts> {
    assert_eq!(pre.len(), post.len(), "rasters must have equal length");
    let windowed_params = LearningParams {
        rule: LearningRule::Windowed,
        weight_decay: false,
        ..*params
    };
    let mut engine = Plasticity::new(windowed_params, n_exc, n_syn, t_sim, dt)?;
    let mut scratch = Weights::filled(n_exc, n_syn, 0.5 * (params.w_min + params.w_max));
    engine.begin_sample();
    for t in 0..pre.len() {
        engine.after_step(t, &pre[t], &post[t], &mut scratch)?;
    }
    let per_spike = pre.iter().zip(post).map(|(a, b)| (a.len() + b.len()) as u64).sum();
    Ok(EventCounts {
        windowed: engine.tally.update_events,
        per_spike,
    })
}
