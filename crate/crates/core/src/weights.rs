use rand::Rng;

use crate::seed;

/// Dense excitatory weight matrix, row-major `[n_exc][n_syn]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    n_exc: usize,
    n_syn: usize,
    data: Vec<f32>,
}

impl Weights {
    pub fn zeros(n_exc: usize, n_syn: usize) -> Self {
        Self::filled(n_exc, n_syn, 0.0)
    }

    pub fn filled(n_exc: usize, n_syn: usize, value: f32) -> Self {
        Self {
            n_exc,
            n_syn,
            data: vec![value; n_exc * n_syn],
        }
    }

    /// Uniform random initialization in `[0, max)`.
    pub fn uniform(n_exc: usize, n_syn: usize, max: f32, rng_seed: u64) -> Self {
        let mut rng = seed::rng(rng_seed);
        let data = (0..n_exc * n_syn)
            .map(|_| rng.gen::<f32>() * max)
            .collect();
        Self { n_exc, n_syn, data }
    }

    pub fn from_vec(n_exc: usize, n_syn: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), n_exc * n_syn, "weight buffer length");
        Self { n_exc, n_syn, data }
    }

    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    pub fn n_syn(&self) -> usize {
        self.n_syn
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.n_syn + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, w: f32) {
        self.data[i * self.n_syn + j] = w;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.n_syn..(i + 1) * self.n_syn]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.n_syn..(i + 1) * self.n_syn]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
