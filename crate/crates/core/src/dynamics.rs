//! Excitatory layer dynamics: conductance-driven LIF neurons with an
//! adaptive threshold and direct lateral inhibition.
//!
//! There is no inhibitory population. A spike in neuron `i` subtracts
//! `w_inh` from the membrane potential of every other excitatory neuron in
//! the same step; simultaneous spikes accumulate linearly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifParams {
    /// Resting potential (mV).
    pub v_rest: f32,
    /// Potential after a spike (mV).
    pub v_reset: f32,
    /// Base firing threshold (mV); the effective threshold is `v_th_base + theta`.
    pub v_th_base: f32,
    /// Excitatory reversal potential (mV).
    pub e_exc: f32,
    /// Membrane time constant (ms).
    pub tau_mem: f32,
    /// Refractory period (ms).
    pub refrac: f32,
    /// Excitatory conductance time constant (ms).
    pub tau_ge: f32,
    /// Threshold adaptation added per output spike (mV).
    pub theta_inc: f32,
    /// Adaptation decay rate (1/ms).
    pub theta_decay: f32,
    /// Adaptation constant scaling the per-presentation adaptation target.
    pub c_theta: f32,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            v_rest: -65.0,
            v_reset: -60.0,
            v_th_base: -52.0,
            e_exc: 0.0,
            tau_mem: 100.0,
            refrac: 5.0,
            tau_ge: 1.0,
            theta_inc: 0.05,
            theta_decay: 1e-5,
            c_theta: 200.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_reset < self.v_th_base) {
            return Err(Error::config("v_reset must lie below v_th_base"));
        }
        if !(self.tau_mem > 0.0 && self.tau_ge > 0.0 && self.refrac >= 0.0) {
            return Err(Error::config("time constants must be positive"));
        }
        if !(self.theta_inc >= 0.0 && self.theta_decay >= 0.0 && self.c_theta >= 0.0) {
            return Err(Error::config(
                "theta_inc, theta_decay and c_theta must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Adaptation level that balances threshold growth against its decay over
/// one presentation: `c_theta * theta_decay * t_sim`.
pub fn adaptive_theta_target(params: &LifParams, t_sim: f64) -> f64 {
    params.c_theta as f64 * params.theta_decay as f64 * t_sim
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InhibitionParams {
    /// Potential removed from every other neuron per spike (mV).
    pub w_inh: f32,
    /// Inhibition never pushes a potential below `v_rest - floor_depth`.
    pub floor_depth: f32,
}

impl Default for InhibitionParams {
    fn default() -> Self {
        Self {
            w_inh: 17.5,
            floor_depth: 40.0,
        }
    }
}

impl InhibitionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_inh >= 0.0 && self.floor_depth >= 0.0) {
            return Err(Error::config("w_inh and floor_depth must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub v: Vec<f32>,
    pub theta: Vec<f32>,
    pub ge: Vec<f32>,
    pub refrac_left: Vec<u32>,
}

impl NeuronState {
    pub fn new(n_exc: usize, params: &LifParams) -> Self {
        Self {
            v: vec![params.v_rest; n_exc],
            theta: vec![0.0; n_exc],
            ge: vec![0.0; n_exc],
            refrac_left: vec![0; n_exc],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Clears per-presentation state. The adaptation `theta` is kept.
    pub fn reset_for_sample(&mut self, params: &LifParams) {
        self.v.fill(params.v_rest);
        self.ge.fill(0.0);
        self.refrac_left.fill(0);
    }
}

/// Step constants derived once from the parameters and `dt`.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub lif: LifParams,
    pub inh: InhibitionParams,
    pub dt: f32,
    leak: f32,
    ge_decay: f32,
    /// Mean of the decaying conductance over one step, per unit of its
    /// value at the start of the step.
    ge_mean: f32,
    theta_keep: f32,
    refrac_steps: u32,
    v_floor: f32,
}

impl Integrator {
    pub fn new(lif: LifParams, inh: InhibitionParams, dt: f64) -> Result<Self> {
        lif.validate()?;
        inh.validate()?;
        if !(dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        let dt32 = dt as f32;
        Ok(Self {
            lif,
            inh,
            dt: dt32,
            leak: dt32 / lif.tau_mem,
            ge_decay: (-dt / lif.tau_ge as f64).exp() as f32,
            ge_mean: (lif.tau_ge as f64 / dt * (1.0 - (-dt / lif.tau_ge as f64).exp())) as f32,
            theta_keep: (-(lif.theta_decay as f64) * dt).exp() as f32,
            refrac_steps: (lif.refrac as f64 / dt).round() as u32,
            v_floor: lif.v_rest - inh.floor_depth,
        })
    }

    pub fn refrac_steps(&self) -> u32 {
        self.refrac_steps
    }

    /// Advances every neuron by one step.
    ///
    /// `input` lists the presynaptic channels spiking this step; indices of
    /// spiking neurons are written to `out` in ascending order. With
    /// `adapt` false the adaptation `theta` is neither raised nor decayed.
    pub fn step(
        &self,
        state: &mut NeuronState,
        weights: &Weights,
        input: &[u16],
        adapt: bool,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        let n = state.len();
        debug_assert_eq!(weights.n_exc(), n);
        out.clear();
        let p = &self.lif;

        for i in 0..n {
            // conductance: add arriving weights, then decay
            if !input.is_empty() {
                let row = weights.row(i);
                let mut drive = 0.0f32;
                for &j in input {
                    drive += row[j as usize];
                }
                state.ge[i] += drive;
            }
            // drive with the conductance averaged over the step, then decay
            let g = state.ge[i] * self.ge_mean;
            state.ge[i] *= self.ge_decay;

            let v = state.v[i];
            if state.refrac_left[i] > 0 {
                state.v[i] = v + (p.v_rest - v) * self.leak;
                state.refrac_left[i] -= 1;
                continue;
            }
            let v = v + ((p.v_rest - v) + g * (p.e_exc - v)) * self.leak;
            state.v[i] = v;
            if v >= p.v_th_base + state.theta[i] {
                out.push(i);
            }
        }

        let mut next = out.iter().peekable();
        for i in 0..n {
            if next.peek() == Some(&&i) {
                next.next();
                state.v[i] = p.v_reset;
                state.refrac_left[i] = self.refrac_steps;
                if adapt {
                    state.theta[i] += p.theta_inc;
                }
            } else if adapt {
                state.theta[i] *= self.theta_keep;
            }
        }

        let spikes = out.len();
        if spikes > 0 && self.inh.w_inh > 0.0 {
            let mut next = out.iter().peekable();
            for i in 0..n {
                let own = if next.peek() == Some(&&i) {
                    next.next();
                    1
                } else {
                    0
                };
                let kicks = spikes - own;
                if kicks > 0 {
                    let v = state.v[i] - self.inh.w_inh * kicks as f32;
                    state.v[i] = v.max(self.v_floor);
                }
            }
        }

        for i in 0..n {
            if !state.v[i].is_finite() {
                return Err(Error::NumericalFault {
                    neuron: i,
                    quantity: "membrane potential",
                });
            }
            if !state.ge[i].is_finite() {
                return Err(Error::NumericalFault {
                    neuron: i,
                    quantity: "conductance",
                });
            }
        }
        Ok(())
    }
}

/// One step of the excitatory layer; see [`Integrator::step`].
pub fn step(
    state: &mut NeuronState,
    weights: &Weights,
    input: &[u16],
    lif: &LifParams,
    inh: &InhibitionParams,
    dt: f64,
) -> Result<Vec<usize>> {
    let integrator = Integrator::new(*lif, *inh, dt)?;
    let mut out = Vec::new();
    integrator.step(state, weights, input, true, &mut out)?;
    Ok(out)
}
