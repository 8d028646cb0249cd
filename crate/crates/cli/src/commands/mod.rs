pub mod cluster;
pub mod compose;
pub mod intervene;
pub mod lexicon;
pub mod stats;

use std::fs;
use std::path::{Path, PathBuf};

use lexswap_core::corpus::{expand_inputs, JsonlReader, Record};
use lexswap_core::lexicon::{read_lexicon_file, BilingualLexicon};
use lexswap_core::Result as CoreResult;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::output::SHARD_PREFIX;

/// Records per parallel batch. Output order never depends on it.
pub(crate) const BATCH_DOCS: usize = 1024;

/// JSONL inputs behind a corpus path. A directory written by this tool
/// contributes only its shards, not its sidecars.
pub(crate) fn corpus_files(path: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = expand_inputs(path)?;
    if path.is_dir() {
        let is_shard = |p: &PathBuf| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().starts_with(SHARD_PREFIX))
        };
        if files.iter().any(is_shard) {
            files.retain(is_shard);
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage(format!("no .jsonl files in {}", path.display())));
    }
    Ok(files)
}

/// Owning stream over the records of `files`, in order.
pub(crate) fn stream(files: Vec<PathBuf>) -> impl Iterator<Item = CoreResult<Record>> + 'static {
    files.into_iter().flat_map(|p| -> Box<dyn Iterator<Item = CoreResult<Record>>> {
        match JsonlReader::open(&p) {
            Ok(r) => Box::new(r),
            Err(e) => Box::new(std::iter::once(Err(e))),
        }
    })
}

/// Reads a canonical or TSV lexicon. A file without any entry lines is an
/// empty lexicon.
pub(crate) fn open_lexicon(path: &Path, config: &PipelineConfig) -> CliResult<BilingualLexicon> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let has_entries = text
        .lines()
        .any(|l| !l.trim().is_empty() && !l.starts_with('#'));
    if !has_entries {
        log::warn!("{}: lexicon has no entries", path.display());
        let provenance = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(BilingualLexicon::new(
            &config.lexicon.source_lang,
            &config.lexicon.target_lang,
            &provenance,
        ));
    }
    Ok(read_lexicon_file(path, &config.lexicon.source_lang, &config.lexicon.target_lang)?)
}

/// Fills a config slot from a flag when given.
pub(crate) fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

pub(crate) fn set_path(slot: &mut Option<PathBuf>, flag: Option<PathBuf>) {
    if flag.is_some() {
        *slot = flag;
    }
}
