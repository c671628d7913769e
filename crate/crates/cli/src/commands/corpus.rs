use std::collections::BTreeMap;

use anyhow::{Context, Result};
use medmark_core::corpus::{gen_corpus, CORPUS_SIZE};
use medmark_core::scan_dataset;
use serde::Serialize;

use super::{Ctx, Outcome};
use crate::args::CorpusArgs;
use crate::output::{emit, render};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Serialize)]
struct CorpusRun {
    output: String,
    n: usize,
    seed: u64,
    size: usize,
}

#[derive(Serialize)]
struct CorpusSummary {
    n_written: usize,
    class_counts: BTreeMap<String, usize>,
    manifest: String,
}

pub fn corpus_cmd(args: &CorpusArgs, ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.file.pick(args.n, "n", 200)?;
    let seed = ctx.file.pick(args.seed, "seed", 42)?;
    let written = gen_corpus(&args.output, n, seed)?;

    let manifest = scan_dataset(&args.output, true)?;
    let manifest_path = args.output.join(MANIFEST_NAME);
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;

    let mut class_counts = BTreeMap::new();
    for e in &manifest.entries {
        *class_counts
            .entry(e.label.clone().unwrap_or_default())
            .or_insert(0) += 1;
    }
    let run = CorpusRun {
        output: args.output.display().to_string(),
        n,
        seed,
        size: CORPUS_SIZE,
    };
    let summary = CorpusSummary {
        n_written: written.len(),
        class_counts,
        manifest: manifest_path.display().to_string(),
    };
    emit(&render("gen-corpus", &run, &summary)?, ctx.report)?;
    Ok(Outcome::Ok)
}
