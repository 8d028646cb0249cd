//! Bilingual vocabularies: loading from TSV dumps, merging, canonical
//! serialization and seeded nested subsampling.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::text::normalize;

/// Header tag of the canonical serialization.
const CANONICAL_TAG: &str = "#lexicon";
/// Separator between translations in the canonical serialization.
pub const TRANSLATION_SEP: char = '|';

/// One source word and its target-language translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    source: String,
    translations: Vec<String>,
}

impl LexiconEntry {
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Non-empty, deduplicated, in first-seen order.
    pub fn translations(&self) -> &[String] {
        &self.translations
    }

    /// Appends a translation unless already present. Returns whether it was added.
    fn add(&mut self, translation: &str) -> bool {
        if self.translations.iter().any(|t| t == translation) {
            false
        } else {
            self.translations.push(translation.to_owned());
            true
        }
    }
}

/// Counters reported after loading a TSV lexicon.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadSummary {
    /// Distinct normalized sources.
    pub entries: usize,
    /// Accepted `source<TAB>translation` pairs.
    pub pairs: usize,
    /// Accepted pairs whose normalized source was already present.
    pub merged_duplicates: usize,
    /// Lines rejected as malformed.
    pub skipped_lines: usize,
}

/// Map from normalized source word to its entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualLexicon {
    entries: HashMap<String, LexiconEntry>,
    source_language: String,
    target_language: String,
    provenance: String,
}

fn single_line(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

impl BilingualLexicon {
    pub fn new(source_language: &str, target_language: &str, provenance: &str) -> Self {
        Self {
            entries: HashMap::new(),
            source_language: single_line(source_language),
            target_language: single_line(target_language),
            provenance: single_line(provenance),
        }
    }

    /// Builds a lexicon from `(source, translation)` pairs, applying the same
    /// rules as TSV loading. Invalid pairs are silently dropped.
    pub fn from_pairs<'a>(
        source_language: &str,
        target_language: &str,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        let mut lex = Self::new(source_language, target_language, "inline");
        for (s, t) in pairs {
            let _ = lex.insert(s, t);
        }
        lex
    }

    pub fn source_language(&self) -> &str {
        &self.source_language
    }

    pub fn target_language(&self) -> &str {
        &self.target_language
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks up an already-normalized source.
    pub fn get(&self, normalized: &str) -> Option<&LexiconEntry> {
        self.entries.get(normalized)
    }

    /// Looks up a surface word, normalizing it first.
    pub fn lookup(&self, word: &str) -> Option<&LexiconEntry> {
        if word.bytes().all(|b| b.is_ascii() && !b.is_ascii_uppercase() && !b.is_ascii_punctuation()) {
            self.entries.get(word)
        } else {
            self.entries.get(normalize(word).as_str())
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup(word).is_some()
    }

    /// Entries in ascending order of source.
    pub fn sorted_entries(&self) -> Vec<&LexiconEntry> {
        let mut v: Vec<_> = self.entries.values().collect();
        v.sort_unstable_by(|a, b| a.source.cmp(&b.source));
        v
    }

    /// Inserts one pair. Returns `Ok(true)` if the source already existed.
    fn insert(&mut self, source: &str, translation: &str) -> std::result::Result<bool, &'static str> {
        let key = normalize(source.trim());
        if key.is_empty() {
            return Err("empty source");
        }
        if key.chars().any(char::is_whitespace) {
            return Err("multiword source");
        }
        let translation = translation.trim();
        if translation.is_empty() {
            return Err("empty translation");
        }
        if translation.contains(TRANSLATION_SEP) || translation.contains(['\n', '\r']) {
            return Err("reserved character in translation");
        }
        match self.entries.entry(key) {
            Entry::Occupied(mut e) => {
                e.get_mut().add(translation);
                Ok(true)
            }
            Entry::Vacant(e) => {
                let source = e.key().clone();
                e.insert(LexiconEntry {
                    source,
                    translations: vec![translation.to_owned()],
                });
                Ok(false)
            }
        }
    }

    /// Parses `source<TAB>translation` lines. `#` lines and blank lines are
    /// ignored; malformed lines are counted and skipped.
    pub fn parse_tsv(
        input: &str,
        source_language: &str,
        target_language: &str,
        provenance: &str,
    ) -> Result<(Self, LoadSummary)> {
        let mut lex = Self::new(source_language, target_language, provenance);
        let mut summary = LoadSummary::default();
        for (line_no, raw) in input.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let outcome = match fields.as_slice() {
                [s, t] => lex.insert(s, t),
                _ => Err("wrong field count"),
            };
            match outcome {
                Ok(merged) => {
                    summary.pairs += 1;
                    summary.merged_duplicates += merged as usize;
                }
                Err(reason) => {
                    log::debug!("{provenance}:{}: skipped ({reason})", line_no + 1);
                    summary.skipped_lines += 1;
                }
            }
        }
        summary.entries = lex.len();
        if lex.is_empty() {
            return Err(Error::Validation(format!(
                "{provenance}: no valid lexicon entries ({} lines skipped)",
                summary.skipped_lines
            )));
        }
        Ok((lex, summary))
    }

    /// Merges `other` into `self`; translations of shared sources are
    /// appended in `other`'s order, skipping duplicates.
    pub fn merge(&mut self, other: &BilingualLexicon) {
        // Sorted so that the result does not depend on hash iteration order.
        for entry in other.sorted_entries() {
            match self.entries.entry(entry.source.clone()) {
                Entry::Occupied(mut e) => {
                    for t in &entry.translations {
                        e.get_mut().add(t);
                    }
                }
                Entry::Vacant(e) => {
                    e.insert(entry.clone());
                }
            }
        }
    }

    /// Uniform sample of `round(fraction * len)` entries without replacement.
    ///
    /// Sources are sorted, then a partial Fisher–Yates shuffle driven by
    /// `SplitMix64::new(seed)` picks the first `count` positions: step `i`
    /// swaps position `i` with `i + below(len - i)`. Entries are copied as-is.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "subsample fraction must be in (0, 1], got {fraction}"
            )));
        }
        if self.is_empty() {
            return Err(Error::Argument("cannot subsample an empty lexicon".into()));
        }
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort_unstable();
        let count = ((fraction * keys.len() as f64).round() as usize).min(keys.len());
        let mut rng = SplitMix64::new(seed);
        for i in 0..count {
            let j = i + rng.index(keys.len() - i);
            keys.swap(i, j);
        }
        let entries = keys[..count]
            .iter()
            .map(|k| ((*k).clone(), self.entries[*k].clone()))
            .collect();
        Ok(Self {
            entries,
            source_language: self.source_language.clone(),
            target_language: self.target_language.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// Canonical text form: a header line, then `source<TAB>t1|t2|...` sorted
    /// by source.
    pub fn to_canonical(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 24);
        let _ = writeln!(
            out,
            "{CANONICAL_TAG}\t{}\t{}\t{}",
            self.source_language, self.target_language, self.provenance
        );
        let sep = TRANSLATION_SEP.to_string();
        for e in self.sorted_entries() {
            let _ = writeln!(out, "{}\t{}", e.source, e.translations.join(&sep));
        }
        out
    }

    pub fn from_canonical(input: &str) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().unwrap_or_default();
        let fields: Vec<&str> = header.split('\t').collect();
        let [tag, src, tgt, prov] = fields.as_slice() else {
            return Err(Error::Validation("missing canonical lexicon header".into()));
        };
        if *tag != CANONICAL_TAG {
            return Err(Error::Validation("missing canonical lexicon header".into()));
        }
        let mut lex = Self::new(src, tgt, prov);
        for (i, line) in lines.enumerate() {
            let Some((source, translations)) = line.split_once('\t') else {
                return Err(Error::Validation(format!(
                    "canonical lexicon line {}: expected source<TAB>translations",
                    i + 2
                )));
            };
            for t in translations.split(TRANSLATION_SEP) {
                lex.insert(source, t).map_err(|reason| {
                    Error::Validation(format!("canonical lexicon line {}: {reason}", i + 2))
                })?;
            }
        }
        Ok(lex)
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex_digest(self.to_canonical().as_bytes())
    }

    /// First 8 bytes of the canonical digest.
    pub fn fingerprint(&self) -> u64 {
        let d = Sha256::digest(self.to_canonical().as_bytes());
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    crate::corpus::to_hex(&Sha256::digest(bytes))
}

/// Reads a TSV lexicon file. The provenance label is the file name.
pub fn load_lexicon(
    path: impl AsRef<Path>,
    source_language: &str,
    target_language: &str,
) -> Result<(BilingualLexicon, LoadSummary)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::Validation(format!("{}: not valid UTF-8 ({e})", path.display())))?;
    let provenance = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    BilingualLexicon::parse_tsv(&text, source_language, target_language, &provenance)
}

/// Reads either the canonical form or a raw TSV dump (detected by header).
pub fn read_lexicon_file(
    path: impl AsRef<Path>,
    source_language: &str,
    target_language: &str,
) -> Result<BilingualLexicon> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.starts_with(CANONICAL_TAG) {
        BilingualLexicon::from_canonical(&text)
    } else {
        load_lexicon(path, source_language, target_language).map(|(lex, _)| lex)
    }
}
