//! Sharded JSONL output and run manifests.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lexswap_core::corpus::{file_digest, DigestWriter};
use serde::Serialize;
use serde_json::Value;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

/// Summary of one written file.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct FileEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hr_tokens: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_tokens: Option<u64>,
}

struct OpenShard {
    name: String,
    writer: DigestWriter<BufWriter<File>>,
    docs: u64,
    hr_tokens: u64,
    lr_tokens: u64,
}

/// Writes lines into `part-NNNNN.jsonl` files of at most `shard_docs` lines.
pub struct ShardWriter {
    dir: PathBuf,
    shard_docs: usize,
    current: Option<OpenShard>,
    finished: Vec<FileEntry>,
    track_tokens: bool,
}

pub const SHARD_PREFIX: &str = "part-";

impl ShardWriter {
    pub fn new(dir: &Path, shard_docs: usize) -> Self {
        Self {
            dir: dir.to_owned(),
            shard_docs,
            current: None,
            finished: Vec::new(),
            track_tokens: false,
        }
    }

    /// Record HR/LR token counts per shard.
    pub fn with_token_counts(mut self) -> Self {
        self.track_tokens = true;
        self
    }

    fn open(&mut self) -> CliResult<&mut OpenShard> {
        if self.current.as_ref().is_some_and(|s| s.docs as usize >= self.shard_docs) {
            self.close_current()?;
        }
        if self.current.is_none() {
            let name = format!("{SHARD_PREFIX}{:05}.jsonl", self.finished.len());
            let path = self.dir.join(&name);
            let file = File::create(&path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            self.current = Some(OpenShard {
                name,
                writer: DigestWriter::new(BufWriter::with_capacity(1 << 20, file)),
                docs: 0,
                hr_tokens: 0,
                lr_tokens: 0,
            });
        }
        Ok(self.current.as_mut().expect("opened"))
    }

    pub fn write_line(&mut self, line: &str) -> CliResult<()> {
        self.write_counted(line, 0, 0)
    }

    pub fn write_counted(&mut self, line: &str, hr_tokens: u64, lr_tokens: u64) -> CliResult<()> {
        let shard = self.open()?;
        shard.writer.write_all(line.as_bytes())?;
        shard.writer.write_all(b"\n")?;
        shard.docs += 1;
        shard.hr_tokens += hr_tokens;
        shard.lr_tokens += lr_tokens;
        Ok(())
    }

    fn close_current(&mut self) -> CliResult<()> {
        if let Some(shard) = self.current.take() {
            let bytes = shard.writer.bytes_written();
            let (sha256, _) = shard.writer.finish()?;
            self.finished.push(FileEntry {
                file: shard.name,
                sha256,
                bytes,
                docs: Some(shard.docs),
                hr_tokens: self.track_tokens.then_some(shard.hr_tokens),
                lr_tokens: self.track_tokens.then_some(shard.lr_tokens),
            });
        }
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<Vec<FileEntry>> {
        self.close_current()?;
        Ok(self.finished)
    }
}

/// Line-oriented file that tracks its digest.
pub struct TrackedFile {
    name: String,
    writer: DigestWriter<BufWriter<File>>,
    lines: u64,
}

impl TrackedFile {
    pub fn create(dir: &Path, name: &str) -> CliResult<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(Self {
            name: name.to_owned(),
            writer: DigestWriter::new(BufWriter::with_capacity(1 << 20, file)),
            lines: 0,
        })
    }

    pub fn write_line(&mut self, line: &str) -> CliResult<()> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.lines += 1;
        Ok(())
    }

    pub fn finish(self) -> CliResult<FileEntry> {
        let bytes = self.writer.bytes_written();
        let (sha256, _) = self.writer.finish()?;
        Ok(FileEntry {
            file: self.name,
            sha256,
            bytes,
            docs: Some(self.lines),
            ..FileEntry::default()
        })
    }
}

/// Writes pretty JSON and returns its entry.
pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> CliResult<FileEntry> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_bytes(dir, name, text.as_bytes())
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    describe(dir, name)
}

/// Entry for a file already on disk.
pub fn describe(dir: &Path, name: &str) -> CliResult<FileEntry> {
    let path = dir.join(name);
    Ok(FileEntry {
        file: name.to_owned(),
        sha256: file_digest(&path)?,
        bytes: fs::metadata(&path)?.len(),
        ..FileEntry::default()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InputEntry {
    pub path: String,
    pub sha256: String,
}

pub fn digest_inputs(paths: &[&Path]) -> CliResult<Vec<InputEntry>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputEntry {
                path: p.display().to_string(),
                sha256: file_digest(p)?,
            })
        })
        .collect()
}

/// The replayability record written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a PipelineConfig,
    pub inputs: Vec<InputEntry>,
    pub outputs: Vec<FileEntry>,
    pub summary: Value,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'static str, config: &'a PipelineConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn write(&self, dir: &Path, name: &str) -> CliResult<FileEntry> {
        write_json(dir, name, self)
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}
