//! Poisson rate coding of grayscale images.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// A grayscale image with its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSample {
    pub pixels: Vec<u8>,
    pub label: u8,
}

impl ImageSample {
    pub fn new(pixels: Vec<u8>, label: u8) -> Self {
        Self { pixels, label }
    }

    pub fn blank(n_syn: usize, label: u8) -> Self {
        Self::new(vec![0; n_syn], label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingParams {
    /// Presentation time of one sample (ms).
    pub t_sim: f64,
    /// Simulation step (ms).
    pub dt: f64,
    /// Firing rate of a full-intensity pixel (Hz).
    pub max_rate: f64,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            t_sim: 350.0,
            dt: 0.5,
            max_rate: 63.75,
        }
    }
}

/// Returns `t_sim / dt` when it is a positive whole number.
pub fn whole_steps(t_sim: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_sim > 0.0) || !t_sim.is_finite() {
        return Err(Error::config(format!(
            "t_sim ({t_sim}) and dt ({dt}) must be positive"
        )));
    }
    let ratio = t_sim / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
        return Err(Error::config(format!(
            "t_sim ({t_sim} ms) is not a whole multiple of dt ({dt} ms)"
        )));
    }
    Ok(n as usize)
}

impl EncodingParams {
    pub fn n_steps(&self) -> Result<usize> {
        whole_steps(self.t_sim, self.dt)
    }

    /// Per-step spike probability of a full-intensity channel.
    pub fn max_step_probability(&self) -> f64 {
        self.max_rate * self.dt / 1000.0
    }

    pub fn validate(&self) -> Result<()> {
        self.n_steps()?;
        if !(self.max_rate >= 0.0) || !self.max_rate.is_finite() {
            return Err(Error::config("max_rate must be a finite non-negative rate"));
        }
        if self.max_step_probability() > 1.0 {
            return Err(Error::config(format!(
                "max_rate * dt = {} exceeds one spike per step",
                self.max_step_probability()
            )));
        }
        Ok(())
    }
}

/// Spike raster of one presentation, stored sparsely by step.
///
/// `channels[offsets[t]..offsets[t + 1]]` lists the channels that fire at
/// step `t`, in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    n_channels: usize,
    offsets: Vec<u32>,
    channels: Vec<u16>,
    dt: f64,
}

impl SpikeTrain {
    /// Builds a train from a dense `[n_steps][n_channels]` boolean raster.
    pub fn from_dense(raster: &[Vec<bool>], dt: f64) -> Self {
        let n_channels = raster.first().map_or(0, Vec::len);
        let mut offsets = Vec::with_capacity(raster.len() + 1);
        let mut channels = Vec::new();
        offsets.push(0);
        for row in raster {
            assert_eq!(row.len(), n_channels, "ragged raster");
            channels.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, &s)| s)
                    .map(|(j, _)| j as u16),
            );
            offsets.push(channels.len() as u32);
        }
        Self {
            n_channels,
            offsets,
            channels,
            dt,
        }
    }

    /// A train with no spikes at all.
    pub fn silent(n_steps: usize, n_channels: usize, dt: f64) -> Self {
        Self {
            n_channels,
            offsets: vec![0; n_steps + 1],
            channels: Vec::new(),
            dt,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Channels firing at `step`.
    pub fn at(&self, step: usize) -> &[u16] {
        &self.channels[self.offsets[step] as usize..self.offsets[step + 1] as usize]
    }

    pub fn is_spike(&self, step: usize, channel: usize) -> bool {
        self.at(step).binary_search(&(channel as u16)).is_ok()
    }

    pub fn total_spikes(&self) -> usize {
        self.channels.len()
    }

    pub fn counts_per_channel(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_channels];
        for &c in &self.channels {
            counts[c as usize] += 1;
        }
        counts
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.n_steps())
            .map(|t| {
                let mut row = vec![false; self.n_channels];
                for &c in self.at(t) {
                    row[c as usize] = true;
                }
                row
            })
            .collect()
    }
}

/// Encodes `sample` as independent per-step Bernoulli spikes with
/// probability `(pixel / 255) * max_rate * dt`.
///
/// Spike times of each channel are drawn as geometric inter-spike gaps,
/// which is the same distribution as one Bernoulli draw per step but costs
/// one draw per spike.
pub fn encode(
    sample: &ImageSample,
    n_syn: usize,
    params: &EncodingParams,
    rng_seed: u64,
) -> Result<SpikeTrain> {
    if sample.pixels.len() != n_syn {
        return Err(Error::config(format!(
            "sample has {} pixels but the network expects {n_syn} synapses per neuron",
            sample.pixels.len()
        )));
    }
    if n_syn > u16::MAX as usize + 1 {
        return Err(Error::config("more than 65536 input channels"));
    }
    params.validate()?;
    let n_steps = params.n_steps()?;
    let p_max = params.max_step_probability();
    let mut rng = seed::rng(rng_seed);

    let mut events: Vec<(u32, u16)> = Vec::new();
    for (j, &px) in sample.pixels.iter().enumerate() {
        let p = (px as f64 / 255.0) * p_max;
        if p <= 0.0 {
            continue;
        }
        if p >= 1.0 {
            events.extend((0..n_steps as u32).map(|t| (t, j as u16)));
            continue;
        }
        let log_q = (-p).ln_1p();
        let mut t: usize = 0;
        loop {
            // U in (0, 1]
            let u: f64 = 1.0 - rng.gen::<f64>();
            let gap = (u.ln() / log_q).floor();
            if !(gap < (n_steps - t) as f64) {
                break;
            }
            t += gap as usize;
            events.push((t as u32, j as u16));
            t += 1;
            if t >= n_steps {
                break;
            }
        }
    }

    // counting sort by step; channel order within a step stays ascending
    let mut offsets = vec![0u32; n_steps + 1];
    for &(t, _) in &events {
        offsets[t as usize + 1] += 1;
    }
    for t in 0..n_steps {
        offsets[t + 1] += offsets[t];
    }
    let mut cursor = offsets.clone();
    let mut channels = vec![0u16; events.len()];
    for &(t, c) in &events {
        let slot = &mut cursor[t as usize];
        channels[*slot as usize] = c;
        *slot += 1;
    }

    Ok(SpikeTrain {
        n_channels: n_syn,
        offsets,
        channels,
        dt: params.dt,
    })
}
