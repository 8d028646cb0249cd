use std::fs;

use lexswap_core::lexicon::{BilingualLexicon, LoadSummary};
use serde_json::json;

use super::{set, set_path};
use crate::config::{existing, require, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{digest_inputs, ensure_dir, write_bytes, Manifest};
use crate::LexiconArgs;

pub fn run(args: LexiconArgs, mut config: PipelineConfig) -> CliResult<()> {
    set_path(&mut config.paths.lexicon, args.input);
    set_path(&mut config.paths.out, args.out);
    set(&mut config.lexicon.source_lang, args.source_lang);
    set(&mut config.lexicon.target_lang, args.target_lang);
    set(&mut config.lexicon.fraction, args.fraction);
    set(&mut config.lexicon.seed, args.seed);

    let input = existing(&config.paths.lexicon, "--in")?;
    let out = require(&config.paths.out, "--out")?;
    let settings = &config.lexicon;

    let text = fs::read_to_string(input).map_err(|e| CliError::Usage(format!("{}: {e}", input.display())))?;
    let (full, summary) = if text.starts_with("#lexicon\t") {
        let lex = BilingualLexicon::from_canonical(&text)?;
        let summary = LoadSummary {
            entries: lex.len(),
            pairs: lex.sorted_entries().iter().map(|e| e.translations().len()).sum(),
            ..LoadSummary::default()
        };
        (lex, summary)
    } else {
        lexswap_core::load_lexicon(input, &settings.source_lang, &settings.target_lang)?
    };
    let lex = full.subsample(settings.fraction, settings.seed)?;

    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => ".".into(),
    };
    ensure_dir(&dir)?;
    let name = out
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("--out is not a file path: {}", out.display())))?
        .to_string_lossy()
        .into_owned();
    let written = write_bytes(&dir, &name, lex.to_canonical().as_bytes())?;

    eprintln!(
        "lexicon: {} entries from {} ({} pairs, {} merged duplicates, {} skipped lines); kept {} at fraction {}",
        summary.entries,
        input.display(),
        summary.pairs,
        summary.merged_duplicates,
        summary.skipped_lines,
        lex.len(),
        settings.fraction,
    );

    let mut manifest = Manifest::new("lexicon", &config);
    manifest.inputs = digest_inputs(&[input])?;
    manifest.outputs = vec![written];
    manifest.summary = json!({
        "loaded": summary,
        "entries": lex.len(),
        "source_lang": lex.source_language(),
        "target_lang": lex.target_language(),
        "provenance": lex.provenance(),
    });
    manifest.write(&dir, &format!("{name}.manifest.json"))?;
    Ok(())
}
