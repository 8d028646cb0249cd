//! Fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexswap_core::corpus::file_digest;
use lexswap_core::{Document, DomainTag, Role, SplitMix64};

pub fn lexswap() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lexswap"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    lexswap().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn digest(path: impl AsRef<Path>) -> String {
    file_digest(path).expect("readable")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Files of a directory whose names start with `prefix`, sorted.
pub fn files_with_prefix(dir: &Path, prefix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .collect();
    v.sort();
    v
}

pub fn shard_digests(dir: &Path) -> Vec<String> {
    files_with_prefix(dir, "part-").iter().map(digest).collect()
}

/// Vocabulary split: `w<i>` words are in the fixture lexicon, `q<i>` are not.
pub const LEX_WORDS: usize = 2000;

pub fn covered_word(i: usize) -> String {
    format!("w{}", i % LEX_WORDS)
}

pub fn uncovered_word(i: usize) -> String {
    format!("q{i}")
}

/// `w<i> -> v<i>` for every covered word.
pub fn write_lexicon(path: &Path, entries: usize) {
    let mut w = BufWriter::new(File::create(path).unwrap());
    for i in 0..entries {
        writeln!(w, "w{i}\tv{i}").unwrap();
    }
    w.flush().unwrap();
}

/// A document of `len` words of which exactly `covered` are lexicon words, in
/// random positions. Some covered words carry punctuation or capitals.
pub fn doc_text(rng: &mut SplitMix64, len: usize, covered: usize) -> String {
    let mut is_covered: Vec<bool> = (0..len).map(|i| i < covered).collect();
    for i in (1..len).rev() {
        let j = rng.index(i + 1);
        is_covered.swap(i, j);
    }
    let mut words = Vec::with_capacity(len);
    for (i, &c) in is_covered.iter().enumerate() {
        let mut w = if c {
            covered_word(rng.index(LEX_WORDS))
        } else {
            uncovered_word(rng.index(5000))
        };
        if i == 0 {
            w = w.to_uppercase();
        }
        if i + 1 == len {
            w.push('.');
        } else if rng.chance(0.05) {
            w.push(',');
        }
        words.push(w);
    }
    words.join(" ")
}

/// Documents with lengths uniform in `lengths` and `round(share * len)`
/// covered words each. Returns the documents and their `(len, covered)`.
pub fn synthetic_docs(
    n: usize,
    share: f64,
    lengths: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> (Vec<Document>, Vec<(usize, usize)>) {
    let mut rng = SplitMix64::new(seed);
    let span = lengths.end() - lengths.start() + 1;
    let mut docs = Vec::with_capacity(n);
    let mut shape = Vec::with_capacity(n);
    for id in 0..n {
        let len = lengths.start() + rng.index(span);
        let covered = (share * len as f64).round() as usize;
        docs.push(Document::new(id as u64, "en", Role::Hr, doc_text(&mut rng, len, covered)));
        shape.push((len, covered));
    }
    (docs, shape)
}

pub fn write_docs(path: &Path, docs: &[Document]) {
    let mut w = BufWriter::new(File::create(path).unwrap());
    for d in docs {
        serde_json::to_writer(&mut w, d).unwrap();
        w.write_all(b"\n").unwrap();
    }
    w.flush().unwrap();
}

/// HR documents tagged `task` for every `task_every`-th id, followed by LR
/// documents.
pub fn tagged_docs(n_hr: usize, n_lr: usize, task_every: usize, seed: u64) -> Vec<Document> {
    let mut rng = SplitMix64::new(seed);
    let mut docs = Vec::new();
    for id in 0..n_hr {
        let tag = if id % task_every == 0 { DomainTag::Task } else { DomainTag::NonTask };
        let len = 10 + rng.index(30);
        docs.push(Document::new(id as u64, "en", Role::Hr, doc_text(&mut rng, len, len / 2)).with_domain(tag));
    }
    for j in 0..n_lr {
        let len = 5 + rng.index(20);
        let text = (0..len).map(|i| format!("de{}", (i * 7 + j) % 300)).collect::<Vec<_>>().join(" ");
        docs.push(Document::new((n_hr + j) as u64, "de", Role::Lr, text));
    }
    docs
}

/// Independent k-means oracle: minimum within-cluster sum of squares over
/// every labeling with at most `k` labels (restricted growth strings).
pub fn brute_force_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    fn cost(points: &[Vec<f64>], labels: &[usize], used: usize) -> f64 {
        let dim = points[0].len();
        let mut total = 0.0;
        for c in 0..used {
            let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            let m = members.len() as f64;
            for d in 0..dim {
                let mean = members.iter().map(|p| p[d]).sum::<f64>() / m;
                total += members.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>();
            }
        }
        total
    }
    fn rec(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, points: &[Vec<f64>], best: &mut f64) {
        if i == labels.len() {
            *best = best.min(cost(points, labels, used));
            return;
        }
        for c in 0..(used + 1).min(k) {
            labels[i] = c;
            rec(i + 1, used.max(c + 1), k, labels, points, best);
        }
    }
    let mut labels = vec![0; points.len()];
    let mut best = f64::INFINITY;
    rec(0, 0, k, &mut labels, points, &mut best);
    best
}

/// Two Gaussian-ish blobs in `dim` dimensions: ids `0..n` near the origin,
/// ids `n..2n` near `(10, ..., 10)`.
pub fn two_blobs(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let mut noise = move || (rng.next_f64() + rng.next_f64() + rng.next_f64() - 1.5) * 1.5;
    let mut rows = Vec::with_capacity(2 * n);
    for centre in [0.0, 10.0] {
        for _ in 0..n {
            rows.push((0..dim).map(|_| centre + noise()).collect());
        }
    }
    rows
}

/// Points near the first blob.
pub fn benchmark_near_first_blob(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| (rng.next_f64() - 0.5) * 2.0).collect())
        .collect()
}
