use std::collections::HashMap;
use std::path::Path;

use lexswap_core::compose::{unresolved_error, Route, Selector};
use lexswap_core::corpus::Record;
use lexswap_core::stats::ReplacementStats;
use lexswap_core::{derive_doc_seed, DomainSource, DomainTag, Ratio, Replacement, ReplacementOutcome, Replacer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{corpus_files, open_lexicon, set, set_path, stream, BATCH_DOCS};
use crate::config::{existing, require, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{digest_inputs, ensure_dir, write_json, Manifest, ShardWriter, TrackedFile};
use crate::{thread_pool, InterveneArgs};

#[derive(Deserialize)]
struct TagRow {
    id: u64,
    domain: Option<DomainTag>,
}

fn read_domain_tags(path: &Path) -> CliResult<DomainSource> {
    let mut map = HashMap::new();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: TagRow = serde_json::from_str(line)
            .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let tag = row.domain.ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: no domain tag (run `lexswap cluster` with --benchmark-embeddings)",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(row.id, tag);
    }
    Ok(DomainSource::Lookup(map))
}

#[derive(Serialize)]
struct SidecarRow<'a> {
    id: u64,
    n_words: usize,
    n_covered: usize,
    k_target: usize,
    k_actual: usize,
    replacements: &'a [Replacement],
}

enum Processed {
    Passthrough(Route),
    Intervened(String, ReplacementOutcome),
    Unresolved(u64),
}

#[derive(Default, Serialize)]
struct RouteCounts {
    intervened: u64,
    untouched_hr: u64,
    lr: u64,
}

pub fn run(args: InterveneArgs, mut config: PipelineConfig) -> CliResult<()> {
    set_path(&mut config.paths.hr_corpus, args.hr_corpus);
    set_path(&mut config.paths.lexicon, args.lexicon);
    set_path(&mut config.paths.domain_tags, args.domain_tags);
    set_path(&mut config.paths.out, args.out);
    let policy = &mut config.policy;
    set(&mut policy.strategy, args.strategy);
    set(&mut policy.replacement_ratio, args.replacement_ratio.map(Ratio::new).transpose()?);
    set(&mut policy.mix_ratio, args.mix_ratio.map(Ratio::new).transpose()?);
    set(&mut policy.global_seed, args.seed);
    set(&mut config.shard_docs, args.shard_docs);
    config.validate()?;

    let corpus = existing(&config.paths.hr_corpus, "--hr-corpus")?.to_owned();
    let lex_path = existing(&config.paths.lexicon, "--lexicon")?.to_owned();
    let out = require(&config.paths.out, "--out")?.to_owned();
    let policy = config.policy;

    let domain = if policy.strategy.needs_domain() {
        match &config.paths.domain_tags {
            Some(_) => Some(read_domain_tags(existing(&config.paths.domain_tags, "--domain-tags")?)?),
            None => Some(DomainSource::Tags),
        }
    } else {
        None
    };
    let selector = Selector::for_policy(&policy, domain)?;
    let files = corpus_files(&corpus)?;
    let lexicon = open_lexicon(&lex_path, &config)?;
    let replacer = Replacer::new(&lexicon);
    let ratio = policy.replacement_ratio;

    let process = |rec: &Record| -> Processed {
        match selector.route(&rec.doc) {
            Err(id) => Processed::Unresolved(id),
            Ok(Route::Intervened) => {
                let outcome = replacer.replace(&rec.doc, ratio, derive_doc_seed(policy.global_seed, rec.doc.id));
                Processed::Intervened(rec.line_with_text(&outcome.document.text), outcome)
            }
            Ok(route) => Processed::Passthrough(route),
        }
    };

    ensure_dir(&out)?;
    let pool = thread_pool(config.workers)?;
    let mut shards = ShardWriter::new(&out, config.shard_docs);
    let mut sidecar = if args.no_sidecar {
        None
    } else {
        Some(TrackedFile::create(&out, "replacements.jsonl")?)
    };
    let mut stats = ReplacementStats::new();
    let mut counts = RouteCounts::default();
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
        let results: Vec<Processed> = pool.install(|| batch.par_iter().map(process).collect());
        let unresolved: Vec<u64> = results
            .iter()
            .filter_map(|p| match p {
                Processed::Unresolved(id) => Some(*id),
                _ => None,
            })
            .collect();
        if !unresolved.is_empty() {
            return Err(CliError::Usage(format!(
                "{}; strategy {} needs a domain tag for every HR document: pass --domain-tags \
                 with the assignments.jsonl written by `lexswap cluster --benchmark-embeddings ...`, \
                 or add a \"domain\" field (\"task\" / \"non-task\") to each record",
                unresolved_error(&unresolved),
                policy.strategy
            )));
        }
        for (rec, result) in batch.iter().zip(&results) {
            match result {
                Processed::Intervened(line, outcome) => {
                    counts.intervened += 1;
                    stats.add(outcome)?;
                    shards.write_line(line)?;
                    if let Some(side) = sidecar.as_mut() {
                        let row = SidecarRow {
                            id: rec.doc.id,
                            n_words: outcome.n_words,
                            n_covered: outcome.n_covered,
                            k_target: outcome.k_target,
                            k_actual: outcome.k_actual,
                            replacements: &outcome.replacements,
                        };
                        side.write_line(&serde_json::to_string(&row).expect("serializable"))?;
                    }
                }
                Processed::Passthrough(route) => {
                    match route {
                        Route::Lr => counts.lr += 1,
                        _ => counts.untouched_hr += 1,
                    }
                    shards.write_line(&rec.raw)?;
                }
                Processed::Unresolved(_) => unreachable!("rejected above"),
            }
        }
    }

    let mut outputs = shards.finish()?;
    if let Some(side) = sidecar {
        outputs.push(side.finish()?);
    }
    let report = stats.report();
    let summary = json!({ "partition": counts, "replacement": report });
    outputs.push(write_json(&out, "report.json", &summary)?);
    eprintln!(
        "intervene: {} intervened, {} untouched HR, {} LR; actual ratio {:.4} (target {}, coverage {:.4})",
        counts.intervened,
        counts.untouched_hr,
        counts.lr,
        report.mean_actual_ratio,
        ratio.get(),
        report.coverage
    );

    let mut inputs: Vec<&Path> = files.iter().map(|p| p.as_path()).collect();
    inputs.push(&lex_path);
    if let Some(tags) = config.paths.domain_tags.as_deref().filter(|_| policy.strategy.needs_domain()) {
        inputs.push(tags);
    }
    let mut manifest = Manifest::new("intervene", &config);
    manifest.inputs = digest_inputs(&inputs)?;
    manifest.outputs = outputs;
    manifest.summary = summary;
    manifest.write(&out, "manifest.json")?;
    Ok(())
}
