use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use medmark_core::{mcnemar, paired_outcomes, Error, McNemarMethod, McNemarResult, PairedOutcomes};
use serde::{Deserialize, Serialize};

use super::{Ctx, Outcome};
use crate::args::{MethodArg, UtilityArgs};
use crate::output::{emit, render};

#[derive(Debug, Deserialize)]
struct Row {
    id: String,
    label: u8,
    pred: u8,
}

/// `id -> (label, pred)`, rejecting duplicate ids.
fn read_predictions(path: &Path) -> Result<BTreeMap<String, (u8, u8)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = BTreeMap::new();
    for (line, record) in reader.deserialize::<Row>().enumerate() {
        let row = record.with_context(|| format!("{}: row {}", path.display(), line + 1))?;
        if rows.insert(row.id.clone(), (row.label, row.pred)).is_some() {
            bail!("{}: duplicate id {:?}", path.display(), row.id);
        }
    }
    if rows.is_empty() {
        bail!("{}: no predictions", path.display());
    }
    Ok(rows)
}

#[derive(Serialize)]
struct UtilityRun {
    baseline: String,
    augmented: String,
    method: McNemarMethod,
    alpha: f64,
}

#[derive(Serialize)]
struct UtilitySummary {
    n: usize,
    accuracy_baseline: f64,
    accuracy_augmented: f64,
    /// Augmented accuracy minus baseline accuracy.
    delta: f64,
    counts: PairedOutcomes,
    mcnemar: Option<McNemarResult>,
    significant: bool,
    notice: Option<String>,
}

pub fn utility_cmd(args: &UtilityArgs, ctx: &Ctx) -> Result<Outcome> {
    let method = ctx
        .file
        .pick(args.method, "method", MethodArg(McNemarMethod::default()))?
        .0;
    let alpha = ctx.file.pick(args.alpha, "alpha", 0.05)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha must lie in (0, 1), got {alpha}");
    }

    let base = read_predictions(&args.baseline)?;
    let aug = read_predictions(&args.augmented)?;
    if let Some(id) = base.keys().find(|k| !aug.contains_key(*k)) {
        bail!("id {id:?} is missing from {}", args.augmented.display());
    }
    if let Some(id) = aug.keys().find(|k| !base.contains_key(*k)) {
        bail!("id {id:?} is missing from {}", args.baseline.display());
    }
    let mut labels = Vec::with_capacity(base.len());
    let (mut preds_a, mut preds_b) = (Vec::new(), Vec::new());
    for (id, &(label, pred)) in &base {
        let (other_label, other_pred) = aug[id];
        if other_label != label {
            bail!(
                "id {id:?} has label {label} in the baseline file and {other_label} in the other"
            );
        }
        labels.push(label);
        preds_a.push(pred);
        preds_b.push(other_pred);
    }

    let counts = paired_outcomes(&labels, &preds_a, &preds_b)?;
    let (mcnemar, notice) = match mcnemar(&counts, method) {
        Ok(r) => (Some(r), None),
        Err(Error::Degenerate(msg)) => (None, Some(format!("{msg}; McNemar's test is undefined"))),
        Err(e) => return Err(e.into()),
    };
    let (acc_a, acc_b) = (counts.accuracy_a(), counts.accuracy_b());
    let summary = UtilitySummary {
        n: labels.len(),
        accuracy_baseline: acc_a,
        accuracy_augmented: acc_b,
        delta: medmark_core::zero_normalized_deltas(acc_a, &[acc_b])?[0],
        counts,
        significant: mcnemar.is_some_and(|r| r.p_value < alpha),
        mcnemar,
        notice,
    };
    let run = UtilityRun {
        baseline: args.baseline.display().to_string(),
        augmented: args.augmented.display().to_string(),
        method,
        alpha,
    };
    emit(&render("utility-stats", &run, &summary)?, ctx.report)?;
    Ok(Outcome::Ok)
}
