//! Clock-driven spiking neural network simulator for continual,
//! unsupervised learning.
//!
//! The network is a single excitatory layer of conductance-driven LIF
//! neurons with adaptive thresholds. Competition comes from direct lateral
//! inhibition between excitatory neurons rather than a separate inhibitory
//! population. Learning uses STDP gated to fixed update windows, with
//! adaptive rates and synaptic weight decay. A constrained search picks the
//! layer size from memory and energy budgets using operation-count energy.

pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod harness;
pub mod network;
pub mod ops;
pub mod par;
pub mod plasticity;
pub mod search;
pub mod seed;
pub mod weights;

pub use dynamics::{InhibitionParams, LifParams, NeuronState};
pub use encoding::{encode, EncodingParams, ImageSample, SpikeTrain};
pub use error::{Error, Result};
pub use network::{EvalReport, Network, NetworkConfig, NeuronLabels};
pub use ops::{OpCounts, Phase};
pub use plasticity::{LearningParams, LearningRule, Plasticity};
pub use search::{CostModel, ModelCandidate, SearchConfig};
pub use weights::Weights;
