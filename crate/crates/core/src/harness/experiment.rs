//! Experiment orchestration: search, training over a scenario, and
//! evaluation at the configured points.

use std::fs;
use std::path::Path;

use log::info;

use super::config::{DataConfig, ExperimentConfig};
use super::idx;
use super::report::{self, EvalPoint};
use super::scenario::{build_scenario, EvalPoints, ScenarioMode, TrainingStream};
use crate::encoding::ImageSample;
use crate::error::{Error, Result};
use crate::network::{Network, NeuronLabels};
use crate::ops::{OpCounts, Phase};
use crate::plasticity::UpdateTally;
use crate::search::{search, SearchOutcome};
use crate::seed::{self, Domain};

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const SNAPSHOT: &str = "network.snap";

/// Training pool, labelling holdout and test set.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub pool: Vec<ImageSample>,
    pub holdout: Vec<ImageSample>,
    pub test: Vec<ImageSample>,
}

impl Dataset {
    /// Splits the last `holdout` training samples off for labelling.
    pub fn split(mut train: Vec<ImageSample>, test: Vec<ImageSample>, holdout: usize) -> Result<Self> {
        if holdout >= train.len() {
            return Err(Error::usage(format!(
                "holdout of {holdout} leaves no training samples out of {}",
                train.len()
            )));
        }
        let held = train.split_off(train.len() - holdout);
        Ok(Self {
            pool: train,
            holdout: held,
            test,
        })
    }

    pub fn load(data: &DataConfig) -> Result<Self> {
        let open = |name: &str| {
            let path = data.path(name);
            if !path.exists() {
                return Err(Error::config(format!("data file {} does not exist", path.display())));
            }
            Ok(path)
        };
        let train = idx::pair(
            idx::load_idx_images(&open(&data.train_images)?)?,
            idx::load_idx_labels(&open(&data.train_labels)?)?,
        )?;
        let test = idx::pair(
            idx::load_idx_images(&open(&data.test_images)?)?,
            idx::load_idx_labels(&open(&data.test_labels)?)?,
        )?;
        Self::split(train, test, data.holdout)
    }
}

fn first_of_classes(samples: &[ImageSample], classes: &[u8], limit: usize) -> Vec<ImageSample> {
    samples
        .iter()
        .filter(|s| classes.contains(&s.label))
        .take(limit)
        .cloned()
        .collect()
}

/// Assigns labels from the holdout and evaluates on the test slice.
pub fn evaluate_point(
    net: &mut Network,
    cfg: &ExperimentConfig,
    data: &Dataset,
    learned: &[u8],
    recent: Option<u8>,
) -> Result<(NeuronLabels, crate::network::EvalReport)> {
    let calibration = first_of_classes(&data.holdout, learned, cfg.eval.calibration_samples);
    if calibration.is_empty() {
        return Err(Error::usage("no holdout samples for the learned classes"));
    }
    let labels = net.assign_labels(&calibration)?;
    let test = first_of_classes(&data.test, learned, cfg.eval.test_samples);
    let report = net.evaluate(&labels, &test, learned, recent)?;
    Ok((labels, report))
}

/// Everything a run produced, besides the files.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub n_exc: usize,
    pub points: Vec<EvalPoint>,
    pub training_ops: OpCounts,
    pub inference_ops: OpCounts,
    pub updates: Vec<(usize, UpdateTally)>,
    pub search: Option<SearchOutcome>,
}

fn prepare_output(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(RESOLVED_CONFIG), cfg.resolved().to_toml()?)?;
    Ok(())
}

/// Runs the constrained search (when configured), writing the candidate
/// log, and returns the network size to use.
pub fn run_search(cfg: &ExperimentConfig, data: &Dataset, out: &Path) -> Result<(usize, Option<SearchOutcome>)> {
    let Some(search_cfg) = &cfg.search else {
        return Ok((cfg.network.n_exc, None));
    };
    let stream = build_scenario(&cfg.scenario, &data.pool)?;
    let probe = &data.pool[stream.indices[0]];
    info!("searching sizes in steps of {} under {} bytes", search_cfg.n_add, search_cfg.mem_c);
    match search(search_cfg, &cfg.network, &cfg.cost, probe) {
        Ok(outcome) => {
            report::write_candidates(&out.join("candidates.csv"), &outcome.log)?;
            info!("selected n_exc = {}", outcome.best.n_exc);
            Ok((outcome.best.n_exc, Some(outcome)))
        }
        Err(Error::Infeasible { log }) => {
            report::write_candidates(&out.join("candidates.csv"), &log)?;
            Err(Error::Infeasible { log })
        }
        Err(e) => Err(e),
    }
}

/// Trains over the scenario stream, calling `at_boundary(task_index,
/// trained, net)` after each task block.
fn train_stream(
    net: &mut Network,
    data: &Dataset,
    stream: &TrainingStream,
    samples_per_task: usize,
    mut at_boundary: impl FnMut(usize, usize, &mut Network) -> Result<()>,
) -> Result<()> {
    let seed = net.config().seed;
    for (k, &i) in stream.indices.iter().enumerate() {
        net.train_sample(&data.pool[i], seed::derive(seed, Domain::TrainEncoding, k as u64))?;
        let trained = k + 1;
        if trained % 500 == 0 {
            info!("trained {trained}/{} samples", stream.len());
        }
        if trained % samples_per_task == 0 {
            at_boundary(trained / samples_per_task - 1, trained, net)?;
        }
    }
    Ok(())
}

/// End-to-end run: optional search, training, evaluation and reports.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    prepare_output(cfg, &out)?;
    let (n_exc, search_outcome) = run_search(cfg, data, &out)?;

    let mut net_cfg = cfg.network;
    net_cfg.n_exc = n_exc;
    let mut net = Network::new(net_cfg)?;
    let stream = build_scenario(&cfg.scenario, &data.pool)?;
    let tasks = cfg.scenario.tasks.clone();
    let n_tasks = tasks.len();
    let dynamic = cfg.scenario.mode == ScenarioMode::Dynamic;
    let each = cfg.scenario.eval_points == EvalPoints::AfterEachTask;

    let mut points = Vec::new();
    let mut updates = Vec::new();
    train_stream(&mut net, data, &stream, cfg.scenario.samples_per_task, |task, trained, net| {
        if !each && task + 1 < n_tasks {
            return Ok(());
        }
        let (learned, recent) = if dynamic {
            (tasks[..=task].to_vec(), Some(tasks[task]))
        } else {
            (tasks.clone(), None)
        };
        let (_, report) = evaluate_point(net, cfg, data, &learned, recent)?;
        info!(
            "eval {} after {trained} samples: overall {:.3}, recent {:?}, previous {:?}",
            points.len(),
            report.overall,
            report.most_recent_task,
            report.previous_tasks
        );
        updates.push((points.len(), net.plasticity.tally));
        points.push(EvalPoint {
            index: points.len(),
            trained_samples: trained,
            recent,
            report,
        });
        Ok(())
    })?;

    report::write_eval(&out.join("eval.csv"), &points)?;
    report::write_tasks(&out.join("tasks.csv"), &points)?;
    report::write_confusion(&out.join("confusion.csv"), &points)?;
    report::write_updates(&out.join("updates.csv"), &updates)?;
    let training_ops = net.count_ops(Phase::Training);
    let inference_ops = net.count_ops(Phase::Inference);
    report::write_ops(
        &out.join("ops.csv"),
        &[("training", training_ops), ("inference", inference_ops)],
    )?;
    Ok(RunResult {
        n_exc,
        points,
        training_ops,
        inference_ops,
        updates,
        search: search_outcome,
    })
}

/// Trains without evaluating and stores the network snapshot.
pub fn run_train(cfg: &ExperimentConfig, data: &Dataset) -> Result<Network> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    prepare_output(cfg, &out)?;
    let (n_exc, _) = run_search(cfg, data, &out)?;
    let mut net_cfg = cfg.network;
    net_cfg.n_exc = n_exc;
    let mut net = Network::new(net_cfg)?;
    let stream = build_scenario(&cfg.scenario, &data.pool)?;
    train_stream(&mut net, data, &stream, cfg.scenario.samples_per_task, |_, _, _| Ok(()))?;
    let mut file = fs::File::create(out.join(SNAPSHOT))?;
    net.write_snapshot(&NeuronLabels::unassigned(n_exc), &mut file)?;
    report::write_updates(&out.join("updates.csv"), &[(0, net.plasticity.tally)])?;
    report::write_ops(&out.join("ops.csv"), &[("training", net.count_ops(Phase::Training))])?;
    Ok(net)
}

/// Loads the snapshot from the output directory and evaluates it over all
/// scenario classes.
pub fn run_eval(cfg: &ExperimentConfig, data: &Dataset) -> Result<EvalPoint> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    let path = out.join(SNAPSHOT);
    let mut file = fs::File::open(&path)
        .map_err(|e| Error::usage(format!("cannot open {}: {e} (run `train` first)", path.display())))?;
    // the snapshot records its own size, which may come from a search
    let n_exc = snapshot_n_exc(&path)?;
    let net_cfg = crate::network::NetworkConfig { n_exc, ..cfg.network };
    let (mut net, _) = Network::read_snapshot(net_cfg, &mut file)?;
    let tasks = cfg.scenario.tasks.clone();
    let (_, report) = evaluate_point(&mut net, cfg, data, &tasks, None)?;
    let point = EvalPoint {
        index: 0,
        trained_samples: 0,
        recent: None,
        report,
    };
    let pts = std::slice::from_ref(&point);
    report::write_eval(&out.join("eval.csv"), pts)?;
    report::write_tasks(&out.join("tasks.csv"), pts)?;
    report::write_confusion(&out.join("confusion.csv"), pts)?;
    report::write_ops(&out.join("ops_eval.csv"), &[("inference", net.count_ops(Phase::Inference))])?;
    Ok(point)
}

fn snapshot_n_exc(path: &Path) -> Result<usize> {
    let bytes = fs::read(path)?;
    bytes
        .get(8..16)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()) as usize)
        .ok_or_else(|| Error::format(8, "snapshot truncated"))
}

/// Search only, writing the candidate log and resolved config.
pub fn run_search_only(cfg: &ExperimentConfig, data: &Dataset) -> Result<SearchOutcome> {
    cfg.validate()?;
    if cfg.search.is_none() {
        return Err(Error::usage("config has no [search] section"));
    }
    let out = cfg.output_dir.clone();
    prepare_output(cfg, &out)?;
    let (_, outcome) = run_search(cfg, data, &out)?;
    Ok(outcome.expect("search configured"))
}
