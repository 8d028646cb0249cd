//! Corpus records and JSONL streaming.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::{segment_words, WordSpan};

/// Which side of the bilingual mix a document belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "HR")]
    Hr,
    #[serde(rename = "LR")]
    Lr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainTag {
    #[serde(rename = "task")]
    Task,
    #[serde(rename = "non-task")]
    NonTask,
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: u64,
    pub lang: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainTag>,
    pub text: String,
}

impl Document {
    pub fn new(id: u64, lang: &str, role: Role, text: impl Into<String>) -> Self {
        Self {
            id,
            lang: lang.to_owned(),
            role,
            domain: None,
            text: text.into(),
        }
    }

    pub fn with_domain(mut self, domain: DomainTag) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn words(&self) -> Vec<WordSpan> {
        segment_words(&self.text)
    }

    /// Whitespace-word count, the token proxy used for budgets.
    pub fn token_count(&self) -> u64 {
        token_count(&self.text)
    }
}

pub fn token_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// A parsed document together with the exact line it came from.
///
/// Unmodified documents are written back byte-for-byte; modified ones keep
/// every other key of the original object in its original order.
#[derive(Debug, Clone)]
pub struct Record {
    pub doc: Document,
    pub raw: String,
}

impl Record {
    pub fn parse(line: &str) -> serde_json::Result<Self> {
        Ok(Self {
            doc: serde_json::from_str(line)?,
            raw: line.to_owned(),
        })
    }

    pub fn from_document(doc: Document) -> Self {
        let raw = serde_json::to_string(&doc).expect("document serializes");
        Self { doc, raw }
    }

    /// Serialized line with `text` replaced. Returns the raw line when the
    /// text is unchanged.
    pub fn line_with_text(&self, text: &str) -> String {
        if text == self.doc.text {
            return self.raw.clone();
        }
        match serde_json::from_str::<Value>(&self.raw) {
            Ok(Value::Object(mut map)) => {
                map.insert("text".into(), Value::String(text.to_owned()));
                serde_json::to_string(&map).expect("object serializes")
            }
            _ => {
                let mut doc = self.doc.clone();
                doc.text = text.to_owned();
                serde_json::to_string(&doc).expect("document serializes")
            }
        }
    }
}

/// Line-by-line JSONL reader. Blank lines are skipped.
pub struct JsonlReader<R> {
    reader: R,
    source: String,
    line_no: usize,
    buf: String,
}

impl JsonlReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            BufReader::with_capacity(1 << 20, file),
            path.display().to_string(),
        ))
    }
}

impl<R: BufRead> JsonlReader<R> {
    pub fn new(reader: R, source: impl Into<String>) -> Self {
        Self {
            reader,
            source: source.into(),
            line_no: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for JsonlReader<R> {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.source, e))),
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            return Some(Record::parse(line).map_err(|e| {
                Error::Data(format!("{}:{}: {e}", self.source, self.line_no))
            }));
        }
    }
}

/// Reads every record of a set of JSONL files in order.
pub fn read_corpus(paths: &[PathBuf]) -> impl Iterator<Item = Result<Record>> + '_ {
    paths.iter().flat_map(|p| -> Box<dyn Iterator<Item = Result<Record>>> {
        match JsonlReader::open(p) {
            Ok(r) => Box::new(r),
            Err(e) => Box::new(std::iter::once(Err(e))),
        }
    })
}

/// Expands a path into JSONL inputs: a file is itself, a directory yields its
/// `*.jsonl` files sorted by name.
pub fn expand_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        return Err(Error::Validation(format!("input path does not exist: {}", path.display())));
    }
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_owned()])
    }
}

/// Streaming SHA-256 of a file, hex encoded.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(to_hex(&hasher.finalize()))
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writer that hashes everything passing through it.
pub struct DigestWriter<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> DigestWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    /// Flushes and returns the hex digest with the inner writer.
    pub fn finish(mut self) -> io::Result<(String, W)> {
        self.inner.flush()?;
        Ok((to_hex(&self.hasher.finalize()), self.inner))
    }
}

impl<W: Write> Write for DigestWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
