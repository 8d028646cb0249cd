use std::path::Path;

use lexswap_core::compose::BudgetMix;
use lexswap_core::{HrShare, Role};
use serde_json::json;

use super::{corpus_files, set, set_path, stream};
use crate::config::{existing, require, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{digest_inputs, ensure_dir, Manifest, ShardWriter};
use crate::ComposeArgs;

pub fn run(args: ComposeArgs, mut config: PipelineConfig) -> CliResult<()> {
    set_path(&mut config.paths.hr_corpus, args.hr_corpus);
    set_path(&mut config.paths.lr_corpus, args.lr_corpus);
    set_path(&mut config.paths.out, args.out);
    set(&mut config.policy.hr_share, args.hr_share.map(HrShare::new).transpose()?);
    set(&mut config.token_budget, args.token_budget);
    set(&mut config.policy.global_seed, args.seed);
    set(&mut config.shard_docs, args.shard_docs);
    config.validate()?;
    if config.token_budget == 0 {
        return Err(CliError::Usage("--token-budget must be positive".into()));
    }

    let hr_files = corpus_files(existing(&config.paths.hr_corpus, "--hr-corpus")?)?;
    let lr_files = corpus_files(existing(&config.paths.lr_corpus, "--lr-corpus")?)?;
    let out = require(&config.paths.out, "--out")?.to_owned();

    let reopen_files = lr_files.clone();
    let mut mix = BudgetMix::new(
        stream(hr_files.clone()),
        move || Ok(Box::new(stream(reopen_files.clone())) as Box<dyn Iterator<Item = _>>),
        config.policy.hr_share,
        config.token_budget,
        config.policy.global_seed,
    )?;

    ensure_dir(&out)?;
    let mut shards = ShardWriter::new(&out, config.shard_docs).with_token_counts();
    for item in mix.by_ref() {
        let item = item?;
        let (hr, lr) = match item.source {
            Role::Hr => (item.tokens, 0),
            Role::Lr => (0, item.tokens),
        };
        shards.write_counted(&item.record.raw, hr, lr)?;
    }
    let progress = mix.progress();
    let outputs = shards.finish()?;
    eprintln!(
        "compose: {} tokens ({} HR docs, {} LR docs, {} LR passes), HR share {:.4}",
        progress.total_tokens(),
        progress.hr_docs,
        progress.lr_docs,
        progress.lr_cycles + 1,
        progress.hr_token_share()
    );

    let inputs: Vec<&Path> = hr_files.iter().chain(&lr_files).map(|p| p.as_path()).collect();
    let mut manifest = Manifest::new("compose", &config);
    manifest.inputs = digest_inputs(&inputs)?;
    manifest.outputs = outputs;
    manifest.summary = json!({
        "token_budget": config.token_budget,
        "total_tokens": progress.total_tokens(),
        "hr_tokens": progress.hr_tokens,
        "lr_tokens": progress.lr_tokens,
        "hr_docs": progress.hr_docs,
        "lr_docs": progress.lr_docs,
        "lr_cycles": progress.lr_cycles,
        "hr_share": progress.hr_token_share(),
        "target_hr_share": config.policy.hr_share.get(),
    });
    manifest.write(&out, "manifest.json")?;
    Ok(())
}
