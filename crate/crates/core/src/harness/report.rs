//! CSV outputs.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::network::{EvalReport, N_CLASSES};
use crate::ops::OpCounts;
use crate::plasticity::UpdateTally;
use crate::search::ModelCandidate;

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn scope_string(scope: &[u8]) -> String {
    scope
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// One evaluation with its position in the run.
#[derive(Debug, Clone)]
pub struct EvalPoint {
    pub index: usize,
    pub trained_samples: usize,
    pub recent: Option<u8>,
    pub report: EvalReport,
}

pub fn write_eval(path: &Path, points: &[EvalPoint]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        eval_point: usize,
        scope: &'a str,
        class: String,
        correct: u64,
        total: u64,
        accuracy: String,
    }
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        let scope = scope_string(&p.report.scope);
        for s in &p.report.per_class {
            w.serialize(Row {
                eval_point: p.index,
                scope: &scope,
                class: s.class.to_string(),
                correct: s.correct,
                total: s.total,
                accuracy: format!("{:.6}", s.accuracy),
            })?;
        }
        let (c, t) = p
            .report
            .per_class
            .iter()
            .fold((0, 0), |(a, b), s| (a + s.correct, b + s.total));
        w.serialize(Row {
            eval_point: p.index,
            scope: &scope,
            class: "all".into(),
            correct: c,
            total: t,
            accuracy: format!("{:.6}", p.report.overall),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tasks(path: &Path, points: &[EvalPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "eval_point",
        "trained_samples",
        "recent_class",
        "recent_accuracy",
        "previous_accuracy",
        "overall_accuracy",
    ])?;
    for p in points {
        w.write_record([
            p.index.to_string(),
            p.trained_samples.to_string(),
            p.recent.map(|c| c.to_string()).unwrap_or_default(),
            fmt_opt(p.report.most_recent_task),
            fmt_opt(p.report.previous_tasks),
            format!("{:.6}", p.report.overall),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_confusion(path: &Path, points: &[EvalPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["eval_point", "true", "predicted", "count"])?;
    for p in points {
        for &t in &p.report.scope {
            let row = &p.report.confusion[t as usize];
            for (col, &count) in row.iter().enumerate() {
                let predicted = if col == N_CLASSES {
                    "none".to_string()
                } else {
                    col.to_string()
                };
                w.write_record([p.index.to_string(), t.to_string(), predicted, count.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_updates(path: &Path, rows: &[(usize, UpdateTally)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "eval_point",
        "windows",
        "depression_windows",
        "potentiation_windows",
        "update_events",
        "elements_touched",
        "decay_steps",
    ])?;
    for (i, t) in rows {
        w.write_record([
            i.to_string(),
            t.windows.to_string(),
            t.depression_windows.to_string(),
            t.potentiation_windows.to_string(),
            t.update_events.to_string(),
            t.elements_touched.to_string(),
            t.decay_steps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ops(path: &Path, phases: &[(&str, OpCounts)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["phase", "op", "count"])?;
    for (phase, ops) in phases {
        for (name, count) in ops.entries() {
            w.write_record([*phase, name, &count.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_candidates(path: &Path, log: &[ModelCandidate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n_exc", "mem", "e_1t", "e_t", "e_1i", "e_i", "feasible"])?;
    for c in log {
        w.write_record([
            c.n_exc.to_string(),
            c.mem.to_string(),
            format!("{:.6e}", c.e_1t),
            format!("{:.6e}", c.e_t),
            c.e_1i.map(|v| format!("{v:.6e}")).unwrap_or_default(),
            c.e_i.map(|v| format!("{v:.6e}")).unwrap_or_default(),
            c.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
