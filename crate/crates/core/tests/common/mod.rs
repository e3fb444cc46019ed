#![allow(dead_code)]

use spikelab::encoding::ImageSample;
use spikelab::plasticity::{AccumulatorScope, FLUSH};
use spikelab::{LearningParams, NetworkConfig};

/// Naive per-element replay of the windowed learning rule over recorded
/// rasters. Keeps a full `[n_exc][n_syn]` presynaptic counter and loops
/// over every (i, j) pair, as the pseudo-code does.
pub fn reference_windowed(
    w0: &[f32],
    n_exc: usize,
    n_syn: usize,
    pre: &[Vec<u16>],
    post: &[Vec<usize>],
    p: &LearningParams,
    dt: f64,
) -> Vec<f32> {
    let mut w: Vec<Vec<f32>> = (0..n_exc).map(|i| w0[i * n_syn..(i + 1) * n_syn].to_vec()).collect();
    let mut n_sp_pre = vec![vec![0u32; n_syn]; n_exc];
    let mut n_sp_post = vec![0u32; n_exc];
    let mut x_pre = vec![0f32; n_syn];
    let mut x_post = vec![0f32; n_exc];
    let keep_pre = (-dt / p.tau_x_pre as f64).exp() as f32;
    let keep_post = (-dt / p.tau_x_post as f64).exp() as f32;
    let rate = p.w_decay_base / n_exc as f32;
    let decay = (-(rate as f64) * dt / p.tau_decay as f64).exp() as f32;
    let t_step = (p.t_step / dt).round() as usize;
    let mut post_in_window = false;

    for t in 0..pre.len() {
        let pre_now: Vec<bool> = (0..n_syn).map(|j| pre[t].contains(&(j as u16))).collect();
        let post_now: Vec<bool> = (0..n_exc).map(|i| post[t].contains(&i)).collect();
        for x in x_pre.iter_mut() {
            *x *= keep_pre;
        }
        for x in x_post.iter_mut() {
            *x *= keep_post;
        }
        for j in 0..n_syn {
            if pre_now[j] {
                x_pre[j] += 1.0;
            }
        }
        for i in 0..n_exc {
            if post_now[i] {
                x_post[i] += 1.0;
                post_in_window = true;
            }
        }
        for i in 0..n_exc {
            for j in 0..n_syn {
                if pre_now[j] {
                    n_sp_pre[i][j] += 1;
                }
            }
            if post_now[i] {
                n_sp_post[i] += 1;
            }
        }

        if t % t_step == 0 {
            let mut max_pre = 0;
            for row in &n_sp_pre {
                for &c in row {
                    max_pre = max_pre.max(c);
                }
            }
            let mut max_post = 0;
            for &c in &n_sp_post {
                max_post = max_post.max(c);
            }
            if !post_in_window {
                let k_d = if !p.adaptive_rates {
                    1.0
                } else if max_pre == 0 {
                    0.0
                } else {
                    max_post as f32 / max_pre as f32
                };
                for i in 0..n_exc {
                    for j in 0..n_syn {
                        let dw = -((k_d * p.eta_pre) * x_post[i]);
                        w[i][j] = (w[i][j] + dw).clamp(p.w_min, p.w_max);
                    }
                }
            } else {
                let mut m = 0;
                for i in 0..n_exc {
                    if n_sp_post[i] > n_sp_post[m] {
                        m = i;
                    }
                }
                let k_p = if p.adaptive_rates {
                    ((max_post + p.sp_th - 1) / p.sp_th) as f32
                } else {
                    1.0
                };
                for j in 0..n_syn {
                    let dw = (k_p * p.eta_post) * x_pre[j];
                    w[m][j] = (w[m][j] + dw).clamp(p.w_min, p.w_max);
                }
            }
            post_in_window = false;
            if p.accumulators == AccumulatorScope::Window {
                n_sp_pre = vec![vec![0; n_syn]; n_exc];
                n_sp_post = vec![0; n_exc];
            }
        } else if p.weight_decay {
            for row in w.iter_mut() {
                for x in row.iter_mut() {
                    let y = *x * decay;
                    *x = if y < FLUSH { 0.0 } else { y }.clamp(p.w_min, p.w_max);
                }
            }
        }
    }

    if p.row_norm > 0.0 {
        for row in w.iter_mut() {
            let sum: f32 = row.iter().sum();
            if sum > p.row_norm {
                let f = p.row_norm / sum;
                for x in row.iter_mut() {
                    let y = *x * f;
                    *x = if y < FLUSH { 0.0 } else { y }.clamp(p.w_min, p.w_max);
                }
            }
        }
    }
    w.concat()
}

/// Small config: 5 neurons on a 4x4 input.
pub fn tiny_config(seed: u64) -> NetworkConfig {
    let mut cfg = NetworkConfig {
        n_exc: 5,
        n_syn: 16,
        seed,
        ..NetworkConfig::default()
    };
    cfg.learning.w_init_frac = 0.9;
    cfg.learning.row_norm = 6.0;
    cfg.learning.eta_pre = 0.05;
    cfg.learning.sp_th = 2;
    cfg.encoding.max_rate = 400.0;
    cfg
}

/// 4x4 image with a bright vertical bar at column `col`.
pub fn bar(col: usize, label: u8) -> ImageSample {
    let mut px = vec![10u8; 16];
    for r in 0..4 {
        px[r * 4 + col] = 255;
    }
    ImageSample::new(px, label)
}

pub fn ulps(a: f32, b: f32) -> u32 {
    if a == b {
        return 0;
    }
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs() as u32
}

/// Synthetic 28x28 digits: class `c` lights a distinct block of rows, with
/// per-sample jitter so the network has something to separate.
pub fn synthetic_digit(c: u8, k: usize) -> ImageSample {
    let mut px = vec![0u8; 784];
    let top = 2 + (c as usize) * 2;
    for r in top..top + 3 {
        for col in 4..24 {
            if (col + k) % 7 != 0 {
                px[r * 28 + col] = 220;
            }
        }
    }
    ImageSample::new(px, c)
}

pub fn mnist_dir() -> std::path::PathBuf {
    std::env::var_os("SPIKELAB_DATA_DIR")
        .map(Into::into)
        .unwrap_or_else(|| "/root/data/mnist".into())
}
