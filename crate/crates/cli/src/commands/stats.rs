use std::path::Path;

use lexswap_core::corpus::Record;
use lexswap_core::stats::CurveBuilder;
use rayon::prelude::*;
use serde_json::json;

use super::{corpus_files, open_lexicon, set, set_path, stream, BATCH_DOCS};
use crate::config::{existing, require, PipelineConfig};
use crate::error::CliResult;
use crate::output::{digest_inputs, ensure_dir, write_bytes, write_json, Manifest};
use crate::{thread_pool, StatsArgs};

pub fn default_targets() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn run(args: StatsArgs, mut config: PipelineConfig) -> CliResult<()> {
    set_path(&mut config.paths.hr_corpus, args.hr_corpus);
    set_path(&mut config.paths.lexicon, args.lexicon);
    set_path(&mut config.paths.out, args.out);
    set(&mut config.policy.global_seed, args.seed);
    let targets = args.targets.unwrap_or_else(default_targets);

    let corpus = existing(&config.paths.hr_corpus, "--hr-corpus")?.to_owned();
    let lex_path = existing(&config.paths.lexicon, "--lexicon")?.to_owned();
    let out = require(&config.paths.out, "--out")?.to_owned();
    let files = corpus_files(&corpus)?;
    let lexicon = open_lexicon(&lex_path, &config)?;
    let mut builder = CurveBuilder::new(&lexicon, &targets, config.policy.global_seed)?;

    let pool = thread_pool(config.workers)?;
    let mut records = stream(files.clone());
    let mut batch: Vec<Record> = Vec::with_capacity(BATCH_DOCS);
    loop {
        batch.clear();
        for rec in records.by_ref().take(BATCH_DOCS) {
            batch.push(rec?);
        }
        if batch.is_empty() {
            break;
        }
        let counts: Vec<_> = pool.install(|| batch.par_iter().map(|r| builder.evaluate(&r.doc)).collect());
        for c in &counts {
            builder.add_evaluated(c)?;
        }
    }
    let (curve, reports) = builder.finish_with_reports()?;

    ensure_dir(&out)?;
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    let mut outputs = vec![write_bytes(&out, "curve.csv", &csv)?];
    let summary = json!({
        "coverage": curve.coverage,
        "mean_doc_coverage": curve.mean_doc_coverage,
        "n_docs": curve.n_docs,
        "n_words": curve.n_words,
        "lexicon_entries": lexicon.len(),
        "curve": curve.points,
        "reports": reports,
    });
    outputs.push(write_json(&out, "stats.json", &summary)?);
    eprintln!(
        "stats: {} documents, {} words, coverage {:.4}",
        curve.n_docs, curve.n_words, curve.coverage
    );
    for p in &curve.points {
        eprintln!("  target {:.2} -> actual {:.4}", p.target, p.mean_actual);
    }

    let inputs: Vec<&Path> = files.iter().map(|p| p.as_path()).chain([lex_path.as_path()]).collect();
    let mut manifest = Manifest::new("stats", &config);
    manifest.inputs = digest_inputs(&inputs)?;
    manifest.outputs = outputs;
    manifest.summary = summary;
    manifest.write(&out, "manifest.json")?;
    Ok(())
}
