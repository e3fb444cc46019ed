use spikelab::dynamics::Integrator;
use spikelab::{InhibitionParams, LifParams, NeuronState, Weights};

/// Single neuron driven by channel 0 firing at every multiple of `period`
/// ms. Returns spike times in ms.
fn simulate(lif: LifParams, w: f32, period: f64, dt: f64, t_sim: f64) -> Vec<f64> {
    let integ = Integrator::new(lif, InhibitionParams::default(), dt).unwrap();
    let weights = Weights::filled(1, 1, w);
    let mut state = NeuronState::new(1, &lif);
    let every = (period / dt).round() as usize;
    let steps = (t_sim / dt).round() as usize;
    let mut out = Vec::new();
    let mut times = Vec::new();
    for t in 0..steps {
        let input: &[u16] = if t % every == 0 { &[0] } else { &[] };
        integ.step(&mut state, &weights, input, true, &mut out).unwrap();
        if !out.is_empty() {
            times.push(t as f64 * dt);
        }
    }
    times
}

/// Scalar oracle: the same neuron integrated with sub-steps of `dt / 10`,
/// conductance decaying continuously between input arrivals.
fn oracle(lif: LifParams, w: f32, period: f64, dt: f64, t_sim: f64) -> Vec<f64> {
    let h = dt / 10.0;
    let (mut v, mut ge, mut theta) = (lif.v_rest as f64, 0.0f64, 0.0f64);
    let mut refrac_until = -1.0;
    let mut times = Vec::new();
    let steps = (t_sim / h).round() as usize;
    let every = (period / h).round() as usize;
    for k in 0..steps {
        let t = k as f64 * h;
        if k % every == 0 {
            ge += w as f64;
        }
        ge *= (-h / lif.tau_ge as f64).exp();
        if t < refrac_until {
            v += (lif.v_rest as f64 - v) * h / lif.tau_mem as f64;
        } else {
            v += ((lif.v_rest as f64 - v) + ge * (lif.e_exc as f64 - v)) * h / lif.tau_mem as f64;
            if v >= lif.v_th_base as f64 + theta {
                times.push(t);
                v = lif.v_reset as f64;
                theta += lif.theta_inc as f64;
                refrac_until = t + lif.refrac as f64;
                continue;
            }
        }
        theta *= (-(lif.theta_decay as f64) * h).exp();
    }
    times
}

fn isis(times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|w| w[1] - w[0]).collect()
}

fn adapting() -> LifParams {
    LifParams {
        theta_inc: 0.5,
        theta_decay: 0.0,
        ..LifParams::default()
    }
}

#[test]
fn adaptation_lengthens_interspike_intervals() {
    let times = simulate(adapting(), 0.6, 1.0, 0.5, 1000.0);
    assert!(times.len() >= 5, "{times:?}");
    let d = isis(&times);
    for w in d.windows(2) {
        assert!(w[1] >= w[0] - 0.5 + 1e-9, "ISIs shrink: {d:?}");
    }
    assert!(d.last().unwrap() > d.first().unwrap());
}

#[test]
fn spike_train_tracks_fine_step_oracle() {
    let lif = adapting();
    let got = simulate(lif, 0.6, 1.0, 0.5, 1000.0);
    let want = oracle(lif, 0.6, 1.0, 0.5, 1000.0);
    assert!(!want.is_empty());
    // same adaptation trend, counts within 15%, first spike within a few ms
    let (a, b) = (got.len() as f64, want.len() as f64);
    assert!((a - b).abs() <= 0.15 * b + 1.0, "{a} vs {b}");
    assert!((got[0] - want[0]).abs() <= 5.0, "{} vs {}", got[0], want[0]);
    let d = isis(&want);
    for w in d.windows(2) {
        assert!(w[1] >= w[0] - 0.05 - 1e-9, "oracle ISIs shrink: {d:?}");
    }
}

#[test]
fn halving_dt_changes_spike_count_by_at_most_one() {
    let lif = LifParams::default();
    let lif = LifParams {
        theta_inc: spikelab::dynamics::adaptive_theta_target(&lif, 350.0) as f32,
        ..lif
    };
    for &(w, period) in &[(0.3, 2.0), (0.5, 4.0), (0.8, 5.0), (0.2, 1.0)] {
        let coarse = simulate(lif, w, period, 0.5, 350.0).len() as i64;
        let fine = simulate(lif, w, period, 0.25, 350.0).len() as i64;
        assert!((coarse - fine).abs() <= 1, "w {w} period {period}: {coarse} vs {fine}");
    }
}
