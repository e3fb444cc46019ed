//! Training streams for dynamic (class-by-class) and shuffled scenarios.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoding::ImageSample;
use crate::error::{Error, Result};
use crate::seed::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Consecutive single-class blocks; earlier classes are never re-fed.
    Dynamic,
    /// The same samples in uniformly shuffled order.
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPoints {
    AfterEachTask,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub mode: ScenarioMode,
    pub tasks: Vec<u8>,
    pub samples_per_task: usize,
    pub eval_points: EvalPoints,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            mode: ScenarioMode::Dynamic,
            tasks: vec![0, 1, 2, 3, 4],
            samples_per_task: 1000,
            eval_points: EvalPoints::AfterEachTask,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::usage("scenario needs at least one task"));
        }
        if let Some(t) = self.tasks.iter().find(|&&t| t > 9) {
            return Err(Error::usage(format!("task class {t} outside 0..=9")));
        }
        let mut seen = [false; 10];
        for &t in &self.tasks {
            if std::mem::replace(&mut seen[t as usize], true) {
                return Err(Error::usage(format!("task class {t} listed twice")));
            }
        }
        if self.samples_per_task == 0 {
            return Err(Error::usage("samples_per_task must be positive"));
        }
        Ok(())
    }
}

/// Ordered indices into the training pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingStream {
    pub indices: Vec<usize>,
    pub labels: Vec<u8>,
}

impl TrainingStream {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Picks `samples_per_task` samples of each task class (a seeded random
/// subset) and orders them per the scenario mode.
pub fn build_scenario(spec: &ScenarioSpec, pool: &[ImageSample]) -> Result<TrainingStream> {
    spec.validate()?;
    let mut indices = Vec::with_capacity(spec.tasks.len() * spec.samples_per_task);
    for &class in &spec.tasks {
        let mut members: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < spec.samples_per_task {
            return Err(Error::usage(format!(
                "class {class} has {} samples, {} requested",
                members.len(),
                spec.samples_per_task
            )));
        }
        let mut rng = seed::rng(seed::derive(spec.seed, Domain::Scenario, class as u64));
        members.shuffle(&mut rng);
        members.truncate(spec.samples_per_task);
        members.sort_unstable();
        indices.extend(members);
    }
    if spec.mode == ScenarioMode::Shuffled {
        let mut rng = seed::rng(seed::derive(spec.seed, Domain::Scenario, u64::MAX));
        indices.shuffle(&mut rng);
    }
    let labels = indices.iter().map(|&i| pool[i].label).collect();
    Ok(TrainingStream { indices, labels })
}
